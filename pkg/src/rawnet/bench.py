"""Inference timing: wall time, process CPU time, utilization.

Wall time comes from a monotonic clock around the full test pass, CPU
time from process accounting (getrusage, microsecond resolution so short
passes do not quantize to scheduler ticks), utilization is their ratio.
The run is repeated and the median wall time reported with min/max, since
a single pass is at the mercy of the scheduler.  A lock file keeps two
harnesses from timing each other.
"""

from __future__ import annotations

import os
import resource
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .nn.model import Network, predict_batch

DEFAULT_LOCK_PATH = os.path.join(tempfile.gettempdir(), "rawnet-bench.lock")


class BenchLockHeldError(RuntimeError):
    """Another benchmark harness holds the lock file."""


@dataclass
class BenchReport:
    wall_test_seconds: float        # median over repetitions
    wall_min_seconds: float
    wall_max_seconds: float
    cpu_user_seconds: float         # from the median-wall repetition
    cpu_system_seconds: float
    utilization: float              # (user + system) / wall
    sample_count: int
    samples_per_second: float
    repetitions: int

    def lines(self) -> list[str]:
        return [f"wall_test_seconds={self.wall_test_seconds!r}",
                f"wall_min_seconds={self.wall_min_seconds!r}",
                f"wall_max_seconds={self.wall_max_seconds!r}",
                f"cpu_user_seconds={self.cpu_user_seconds!r}",
                f"cpu_system_seconds={self.cpu_system_seconds!r}",
                f"utilization={self.utilization!r}",
                f"sample_count={self.sample_count}",
                f"samples_per_second={self.samples_per_second!r}",
                f"repetitions={self.repetitions}"]


@contextmanager
def bench_lock(path: str = DEFAULT_LOCK_PATH):
    """Exclusive lock so concurrent harnesses cannot skew timings."""
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise BenchLockHeldError(
            f"benchmark lock {path} is held by another run; remove it if "
            f"that run is dead") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        os.unlink(path)


def bench_inference(net: Network, x_test: np.ndarray, repetitions: int = 5,
                    batch_size: int = 32,
                    lock_path: str | None = DEFAULT_LOCK_PATH) -> BenchReport:
    """Time full inference passes over x_test (shape (n, 1, L)).

    Returns the median repetition's numbers; min/max wall times ride
    along.  Pass lock_path=None to skip locking (already-locked callers).
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if x_test.shape[0] == 0:
        raise ValueError("test set is empty")

    def run_all():
        # Untimed passes first, for at least ~0.3 s of sustained load:
        # BLAS thread spin-up, allocator growth and CPU clock ramp-up
        # otherwise land on the timed repetitions and can dwarf a small
        # test set's real cost.
        warm_until = time.perf_counter() + 0.3
        while True:
            predict_batch(net, x_test, batch_size)
            if time.perf_counter() >= warm_until:
                break
        runs = []
        for _ in range(repetitions):
            cpu0 = resource.getrusage(resource.RUSAGE_SELF)
            wall0 = time.perf_counter()
            predict_batch(net, x_test, batch_size)
            wall = time.perf_counter() - wall0
            cpu1 = resource.getrusage(resource.RUSAGE_SELF)
            runs.append((wall, cpu1.ru_utime - cpu0.ru_utime,
                         cpu1.ru_stime - cpu0.ru_stime))
        return runs

    if lock_path is None:
        runs = run_all()
    else:
        with bench_lock(lock_path):
            runs = run_all()

    runs.sort(key=lambda r: r[0])
    wall, user, system = runs[len(runs) // 2]
    n = x_test.shape[0]
    return BenchReport(
        wall_test_seconds=wall,
        wall_min_seconds=runs[0][0],
        wall_max_seconds=runs[-1][0],
        cpu_user_seconds=user,
        cpu_system_seconds=system,
        utilization=(user + system) / wall if wall > 0 else 0.0,
        sample_count=n,
        samples_per_second=n / wall if wall > 0 else 0.0,
        repetitions=repetitions,
    )


def write_bench_report(report: BenchReport, path: str, header_lines=()) -> None:
    with open(path, "w") as fp:
        for line in header_lines:
            fp.write(f"# {line}\n")
        for line in report.lines():
            fp.write(line + "\n")
