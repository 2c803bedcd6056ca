"""
I/O utility functions for JSON and CSV operations.
Output files carry no timestamps, so identical runs write identical bytes.
"""
import json
import math
from typing import Any, Dict

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def load_json(json_path: str) -> Dict[str, Any]:
    """Load JSON file."""
    with open(json_path, 'r') as f:
        return json.load(f)


def save_json(data: Dict[str, Any], json_path: str, indent: int = 2) -> None:
    """Save JSON file with sorted keys; non-finite floats become strings."""
    with open(json_path, 'w') as f:
        json.dump(_jsonable(data), f, indent=indent, sort_keys=True)
        f.write("\n")


def load_csv(csv_path: str) -> pd.DataFrame:
    """Load CSV file as DataFrame."""
    return pd.read_csv(csv_path)


def save_csv(df: pd.DataFrame, csv_path: str, index: bool = False) -> None:
    """Save DataFrame as CSV with 17 significant digits."""
    df.to_csv(csv_path, index=index, float_format=FLOAT_FORMAT)
