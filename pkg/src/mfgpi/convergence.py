from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LogRecord:
    iteration: int
    metric: float
    wall_time: float


@dataclass
class ConvergenceLog:
    """Per-iteration convergence metric with cumulative wall-clock time.

    ``metric`` is the residual 2-norm for stationary solvers and the maximal
    squared policy distance for the evolutive one.
    """

    metric_name: str = "residual"
    records: list[LogRecord] = field(default_factory=list)
    _start: float = field(default_factory=time.perf_counter, repr=False)

    def restart_clock(self):
        self._start = time.perf_counter()

    def record(self, iteration: int, metric: float) -> LogRecord:
        if self.records and iteration <= self.records[-1].iteration:
            raise ValueError("iterations must be strictly increasing")
        rec = LogRecord(iteration, float(metric), time.perf_counter() - self._start)
        self.records.append(rec)
        return rec

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_metric(self) -> float:
        return self.records[-1].metric if self.records else float("nan")

    @property
    def total_time(self) -> float:
        return self.records[-1].wall_time if self.records else 0.0

    @property
    def time_per_iteration(self) -> float:
        return self.total_time / self.iterations if self.records else 0.0

    def metrics(self) -> list[float]:
        return [r.metric for r in self.records]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", self.metric_name, "wall_time"])
            for r in self.records:
                writer.writerow([r.iteration, f"{r.metric:.17g}", f"{r.wall_time:.17g}"])
