"""
Utility modules for the phi4flow pipeline.
"""
from .fitting import (
    LogLogFit,
    decades,
    loglog_fit,
)

from .io_utils import (
    FLOAT_FORMAT,
    load_json,
    save_json,
    load_csv,
    save_csv,
)

from .parallel import PointRunner

__all__ = [
    # Fitting
    'LogLogFit',
    'decades',
    'loglog_fit',
    # I/O
    'FLOAT_FORMAT',
    'load_json',
    'save_json',
    'load_csv',
    'save_csv',
    # Parallel
    'PointRunner',
]
