"""Benchmark harness: timing bookkeeping and scan-strategy accounting."""

from __future__ import annotations

import pytest

from zstacker.bench import (
    MIN_REPEATS,
    bench_fusion,
    bench_operators,
    bench_scan_strategy,
    bench_scan_suite,
    default_scan_scene,
    time_callable,
)
from zstacker.errors import ConfigError
from zstacker.focus import FMOperator


class TestTimeCallable:
    def test_runs_warmup_plus_repeats(self):
        calls = []
        med, mean, lo, hi = time_callable(lambda: calls.append(1), repeats=30)
        assert len(calls) == 33
        assert lo <= mean <= hi
        assert med >= 0.0

    def test_custom_warmup(self):
        calls = []
        time_callable(lambda: calls.append(1), repeats=30, warmup=0)
        assert len(calls) == 30


class TestOperators:
    def test_validation(self):
        with pytest.raises(ConfigError):
            bench_operators([(64, 48)], repeats=MIN_REPEATS - 1)
        with pytest.raises(ConfigError):
            bench_operators([], repeats=MIN_REPEATS)

    def test_row_structure(self):
        out = bench_operators([(64, 48)], repeats=MIN_REPEATS)
        assert out["suite"] == "operators"
        rows = out["rows"]
        assert [r["label"] for r in rows] == [op.value for op in FMOperator]
        for r in rows:
            assert (r["width"], r["height"]) == (64, 48)
            assert r["median_ms"] > 0.0
            assert r["ci_low_ms"] <= r["mean_ms"] <= r["ci_high_ms"]
            assert r["repeats"] == MIN_REPEATS


class TestFusion:
    def test_validation(self):
        with pytest.raises(ConfigError):
            bench_fusion(64, 48, frames=2, repeats=10)
        with pytest.raises(ConfigError):
            bench_fusion(64, 48, frames=1, repeats=MIN_REPEATS)

    def test_all_methods_timed(self):
        out = bench_fusion(64, 48, frames=2, repeats=MIN_REPEATS)
        assert sorted(r["label"] for r in out["rows"]) == ["neighbor", "pixel", "wavelet"]
        assert all(r["median_ms"] > 0.0 for r in out["rows"])
        assert out["frames"] == 2


class TestScanStrategy:
    def test_stride_validation(self):
        spec = default_scan_scene(0, n_frames=120)
        with pytest.raises(ConfigError):
            bench_scan_strategy(spec, 0)

    def test_coarse_stride_pays_off(self):
        spec = default_scan_scene(0, n_frames=120)
        out = bench_scan_strategy(spec, 8)
        assert out["frames_full_slow"] == 120
        assert out["frames_two_pass"] < 60
        assert out["reduction"] > 2.0
        seg = out["segment"]
        assert 0 <= seg["start_frame"] <= seg["end_frame"] <= 119

    def test_stride_one_costs_more_than_naive(self):
        spec = default_scan_scene(0, n_frames=120)
        out = bench_scan_strategy(spec, 1)
        assert out["reduction"] < 1.0

    def test_scene_z_stays_in_range(self):
        for seed in range(25):
            spec = default_scan_scene(seed, n_frames=120)
            z = spec.planes[0].z_index
            assert 20 <= z < 120


class TestScanSuite:
    def test_validation(self):
        with pytest.raises(ConfigError):
            bench_scan_suite(0)

    def test_small_suite_reduces_frame_count(self):
        out = bench_scan_suite(3)
        assert out["suite"] == "scan"
        assert len(out["scenes"]) == 3
        assert out["mean_reduction"] > 3.0
