"""
Context management for phi4flow runs.
Centralizes output paths of every command.
"""
import os

from phi4flow.config import RunConfig


class RunContext:
    """
    Manages the directory structure and file paths for one invocation.
    """
    def __init__(self, config: RunConfig):
        self.config = config
        self.root_dir = config.output.directory
        self.prefix = config.output.prefix

        self.dirs = {
            "eval": os.path.join(self.root_dir, "eval"),
            "counterterms": os.path.join(self.root_dir, "counterterms"),
            "verify": os.path.join(self.root_dir, "verify"),
            "oracle": os.path.join(self.root_dir, "oracle"),
        }

    def get_dir(self, key: str) -> str:
        """Get path to a command subdirectory, creating it on first use."""
        path = self.dirs.get(key, self.root_dir)
        os.makedirs(path, exist_ok=True)
        return path

    def _file(self, key: str, name: str) -> str:
        return os.path.join(self.get_dir(key), f"{self.prefix}{name}")

    @property
    def eval_csv(self) -> str:
        return self._file("eval", "eval.csv")

    @property
    def counterterms_csv(self) -> str:
        return self._file("counterterms", "counterterms.csv")

    @property
    def oracle_csv(self) -> str:
        return self._file("oracle", "oracle.csv")

    @property
    def verify_json(self) -> str:
        return self._file("verify", "report.json")

    def sweep_csv(self, suite: str, case: str) -> str:
        return self._file("verify", f"{suite}__{_safe(case)}.csv")

    def sweep_gnuplot(self, suite: str, case: str) -> str:
        return self._file("verify", f"{suite}__{_safe(case)}.gp")


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)
