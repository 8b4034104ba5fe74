"""Base runner class."""

import copy
import os
import sys
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from .schemas import RunReport


def _threads_from_env() -> int:
    raw = os.environ.get("MAJLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class RunConfig(BaseModel):
    """Run configuration."""
    seed: int = 0
    backend: Literal["auto", "exact", "float"] = "auto"
    tol: float = 1e-9
    out: Optional[Path] = None
    threads: int = Field(default_factory=_threads_from_env)
    timing: bool = False


class BaseRunner(ABC):
    """Base class for case runners. Implement run_case()."""

    def __init__(self, config: RunConfig):
        self.config = config
        # every random draw in a run goes through this generator
        self.rng = np.random.default_rng(config.seed)

    @abstractmethod
    def run_case(self, case_id: str) -> RunReport:
        """Run a single case. Implement this in your runner."""
        pass

    def _timed(self, case_id: str) -> RunReport:
        start = time.perf_counter()
        report = self.run_case(case_id)
        if self.config.timing:
            report.wall_time = round(time.perf_counter() - start, 6)
        return report

    def _fork(self, seed: np.random.SeedSequence) -> "BaseRunner":
        clone = copy.copy(self)
        clone.rng = np.random.default_rng(seed)
        return clone

    def run_suite(self, case_ids: List[str]) -> List[RunReport]:
        """Run every case; reports come back in case order.

        Each case draws from its own child of the run seed, so the reports
        do not depend on the worker count.
        """
        seeds = np.random.SeedSequence(self.config.seed).spawn(len(case_ids))
        jobs = [(self._fork(seed), case_id) for seed, case_id in zip(seeds, case_ids)]
        workers = min(self.config.threads, max(1, len(case_ids)))
        if workers == 1:
            reports = []
            for runner, case_id in jobs:
                reports.append(runner._timed(case_id))
                print(f"  Reproduced: {case_id}", file=sys.stderr)
            return reports
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda job: job[0]._timed(job[1]), jobs))
        for case_id in case_ids:
            print(f"  Reproduced: {case_id}", file=sys.stderr)
        return reports
