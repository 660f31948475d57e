"""Timing harness: monotone work, lock discipline, report sanity."""

import os

import numpy as np
import pytest

from rawnet.bench import (BenchLockHeldError, bench_inference, bench_lock,
                          write_bench_report)
from rawnet.nn import Network, NetworkConfig


@pytest.fixture
def small_net():
    cfg = NetworkConfig(input_len=128, conv1_filters=4, conv2_filters=4,
                        kernel=16, stride=2, pool=2, n_classes=2)
    return Network(cfg, seed=0)


def inputs(n, length=128, seed=0):
    return np.random.default_rng(seed).random((n, 1, length))


def test_larger_test_set_takes_longer(small_net):
    small = bench_inference(small_net, inputs(40), repetitions=5,
                            lock_path=None)
    large = bench_inference(small_net, inputs(400), repetitions=5,
                            lock_path=None)
    assert large.wall_test_seconds > small.wall_test_seconds


def test_zero_repetitions_rejected(small_net):
    with pytest.raises(ValueError, match="repetitions"):
        bench_inference(small_net, inputs(4), repetitions=0, lock_path=None)


def test_empty_test_set_rejected(small_net):
    with pytest.raises(ValueError, match="empty"):
        bench_inference(small_net, inputs(0), repetitions=1, lock_path=None)


def test_report_fields(small_net, tmp_path):
    report = bench_inference(small_net, inputs(64), repetitions=5,
                             lock_path=None)
    assert report.wall_min_seconds <= report.wall_test_seconds \
        <= report.wall_max_seconds
    assert report.cpu_user_seconds >= 0 and report.cpu_system_seconds >= 0
    assert 0 <= report.utilization <= (os.cpu_count() or 1) + 0.5
    assert report.sample_count == 64
    assert report.samples_per_second > 0
    path = tmp_path / "bench.txt"
    write_bench_report(report, str(path), ["config_hash=f00d"])
    text = path.read_text()
    assert text.startswith("# config_hash=f00d\n")
    assert "wall_test_seconds=" in text and "utilization=" in text


def test_lock_refuses_concurrent_runs(small_net, tmp_path):
    lock = str(tmp_path / "bench.lock")
    with bench_lock(lock):
        with pytest.raises(BenchLockHeldError, match="held"):
            bench_inference(small_net, inputs(4), repetitions=1,
                            lock_path=lock)
    # released: a fresh run succeeds and cleans up after itself
    bench_inference(small_net, inputs(4), repetitions=1, lock_path=lock)
    assert not os.path.exists(lock)
