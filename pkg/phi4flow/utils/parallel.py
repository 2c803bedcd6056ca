"""
Row-wise evaluation of independent sweep points.
"""
import logging
from typing import Any, Callable, List

import pandas as pd
from pandarallel import pandarallel

logger = logging.getLogger(__name__)


class PointRunner:
    """
    Maps a function over DataFrame rows, with pandarallel workers when threads > 1.
    Results come back in row order either way.
    """
    _initialized_workers = 0

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads

    def _ensure_workers(self) -> None:
        if PointRunner._initialized_workers != self.threads:
            pandarallel.initialize(nb_workers=self.threads, progress_bar=False, verbose=0)
            PointRunner._initialized_workers = self.threads

    def apply(self, df: pd.DataFrame, func: Callable[[pd.Series], Any]) -> List[Any]:
        if df.empty:
            return []
        if self.threads > 1 and len(df) > 1:
            self._ensure_workers()
            logger.debug(f"[PointRunner] {len(df)} points on {self.threads} workers")
            result = df.parallel_apply(func, axis=1)
        else:
            result = df.apply(func, axis=1)
        return list(result)
