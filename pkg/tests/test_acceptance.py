"""Acceptance criteria for the toolkit, one test per criterion.

Each test measures its target on freshly generated scenes and records a
single PASS/FAIL line (printed in the terminal summary) before asserting.
Thresholds are part of the product contract and must not be loosened; a
failing criterion here means the implementation does not meet it yet.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from conftest import single_plane, strip_planes
from test_peaks import oracle_peaks
from zstacker.bench import bench_fusion, bench_operators, bench_scan_suite
from zstacker.coverage import CoverageConfig, full_focus_coverage
from zstacker.focus import FMOperator, HOMOGENEITY_DEGREE, FocalCurve, SectorGrid, fm_value
from zstacker.imgcore import Frame, ZStack
from zstacker.peaks import (
    bin_search_prominent_peak,
    fast_search,
    find_peaks,
    map_back,
    mirror_extend,
    smoothen,
)
from zstacker.simsynth import DirtSpec, SceneSpec, simulate
from zstacker.stacker import fuse, haar_forward, haar_inverse


# --- criteria 1 + 2 share one batch of searched-and-covered scenes ------------


@pytest.fixture(scope="module")
def searched_scenes():
    """50 single-plane scenes with mild noise, vignette and faint dirt placed
    outside the focused neighborhood; each is searched and covered twice."""
    rows = []
    for i in range(50):
        rng = np.random.default_rng(1000 + i)
        n = int(rng.integers(120, 241))
        z = int(rng.integers(10, n - 10))
        lo, hi = z - n // 4, z + n // 4
        far = [d for d in range(5, n - 5) if d <= lo or d >= hi]
        dz = int(rng.choice(far))
        spec = single_plane(
            64, 48, z=z, n=n,
            blur_slope=0.5, noise_sigma=0.01, vignette_strength=0.25,
            dirt=DirtSpec(dz, 2, 2.0), seed=1000 + i,
        )
        truth, stack = simulate(spec)

        t0 = time.perf_counter()
        seg = fast_search(stack, FMOperator.TENG)
        search_s = time.perf_counter() - t0

        full_sel = full_focus_coverage(stack).selected
        sub = ZStack(stack.frames[seg.start_frame : seg.end_frame + 1])
        sub_sel = [s + seg.start_frame for s in full_focus_coverage(sub).selected]

        rows.append({
            "truth_segment": truth.focused_segment,
            "segment": seg,
            "search_s": search_s,
            "full_sel": full_sel,
            "sub_sel": sub_sel,
        })
    return rows


def test_criterion_1_segment_search(criterion, searched_scenes):
    hits = sum(
        1
        for r in searched_scenes
        if r["segment"].start_frame <= r["truth_segment"][1]
        and r["segment"].end_frame >= r["truth_segment"][0]
    )
    total_s = sum(r["search_s"] for r in searched_scenes)
    ok = hits >= 48 and total_s < 60.0
    criterion(1, "segment search hit rate", ok,
              f"{hits}/50 segments overlap truth, search total {total_s:.2f}s (budget 60s)")
    assert ok


def test_criterion_2_two_stage_agreement(criterion, searched_scenes):
    matched_sub = total_sub = matched_full = total_full = 0
    for r in searched_scenes:
        full_sel, sub_sel = r["full_sel"], r["sub_sel"]
        total_sub += len(sub_sel)
        total_full += len(full_sel)
        matched_sub += sum(1 for s in sub_sel if any(abs(s - f) <= 1 for f in full_sel))
        matched_full += sum(1 for f in full_sel if any(abs(f - s) <= 1 for s in sub_sel))
    precision = matched_sub / total_sub
    recall = matched_full / total_full
    ok = precision == 1.0 and recall >= 0.96
    criterion(2, "two-stage vs full coverage", ok,
              f"precision {precision:.3f} (need 1.0), recall {recall:.3f} (need >= 0.96), "
              f"{total_sub}/{total_full} selected frames")
    assert ok


def test_criterion_3_scan_reduction(criterion):
    out = bench_scan_suite(30, 8, 0, FMOperator.TENG)
    ok = out["mean_reduction"] >= 5.0
    criterion(3, "scan frame reduction", ok,
              f"mean reduction {out['mean_reduction']:.2f}x over 30 scenes (need >= 5x)")
    assert ok


def test_criterion_4_operator_runtimes(criterion):
    out = bench_operators([(1920, 1080), (160, 120)], repeats=30)
    rows = {(r["label"], r["width"]): r for r in out["rows"]}
    order = ["voll4", "lapm", "lapv", "teng"]
    big = [rows[(op, 1920)] for op in order]
    ordered = all(a["median_ms"] < b["median_ms"] for a, b in zip(big, big[1:]))
    disjoint = all(a["ci_high_ms"] < b["ci_low_ms"] for a, b in zip(big, big[1:]))
    area = (1920 * 1080) / (160 * 120)
    ratios = {op: rows[(op, 1920)]["median_ms"] / rows[(op, 160)]["median_ms"] for op in order}
    scaling = all(area * 0.3 <= v <= area * 3.0 for v in ratios.values())
    ok = ordered and disjoint and scaling
    meds = ", ".join(f"{op} {rows[(op, 1920)]['median_ms']:.1f}ms" for op in order)
    criterion(4, "operator runtime ordering", ok,
              f"1920x1080 medians {meds}; CIs disjoint: {disjoint}; "
              f"area scaling within 0.3-3x: {scaling}")
    assert ok


def test_criterion_5_selection_size(criterion):
    good = 0
    details = []
    for i in range(30):
        rng = np.random.default_rng(5000 + i)
        p = 2 + i % 4
        zs = sorted(int(round(v)) + int(rng.integers(-2, 3)) for v in np.linspace(5, 34, p))
        spec = SceneSpec(
            width=64, height=48, n_frames=40,
            planes=strip_planes(64, 48, zs),
            blur_slope=0.5, noise_sigma=0.01, duplicates_per_frame=4,
            seed=5000 + i,
        )
        _, stack = simulate(spec)
        cfg = CoverageConfig(grid=SectorGrid(4, p), operator=FMOperator.TENG)
        res = full_focus_coverage(stack, cfg)
        sel = res.selected

        size_ok = p <= len(sel) <= p + 1
        mads = [
            float(np.abs(stack[a].pixels - stack[b].pixels).mean())
            for j, a in enumerate(sel)
            for b in sel[j + 1 :]
        ]
        distinct_ok = all(m > cfg.dup_mad_threshold for m in mads)
        curve = np.array([fm_value(f, FMOperator.TENG) for f in stack.frames])
        sharp_ok = all(curve[k] >= cfg.blur_ratio * curve.max() for k in sel)
        if size_ok and distinct_ok and sharp_ok:
            good += 1
        else:
            details.append(f"scene {i}: size {len(sel)} for {p} planes")
    ok = good == 30
    criterion(5, "multi-plane selection size", ok,
              f"{good}/30 scenes select p..p+1 distinct sharp frames"
              + ("" if ok else "; " + "; ".join(details[:3])))
    assert ok


def test_criterion_6_dirt_exclusion(criterion):
    clean = 0
    for i in range(20):
        rng = np.random.default_rng(3000 + i)
        n = int(rng.integers(120, 241))
        z = int(rng.integers(15, n // 3))
        dz = int(rng.integers(z + 60, n - 5))
        spec = single_plane(
            64, 48, z=z, n=n,
            blur_slope=0.5, noise_sigma=0.0, vignette_strength=0.15,
            dirt=DirtSpec(dz, 3, 3.5), seed=3000 + i,
        )
        truth, stack = simulate(spec)
        res = full_focus_coverage(stack)
        if not set(truth.dirt_frames) & set(res.selected):
            clean += 1
    ok = clean == 20
    criterion(6, "dirt frame exclusion", ok,
              f"{clean}/20 scenes keep every dirt frame out of the selection")
    assert ok


def test_criterion_7_fusion_quality(criterion):
    """Fusion fidelity on covered scenes: every method must preserve sharpness
    (fused gradient energy at least 95% of its best input) and the mean
    reconstruction error must order wavelet <= neighbor <= pixel."""
    methods = ("wavelet", "neighbor", "pixel")
    rmse = {m: [] for m in methods}
    floor_hits = floor_total = 0
    for i in range(30):
        spec = SceneSpec(
            width=96, height=72, n_frames=24,
            planes=strip_planes(96, 72, [5, 9, 13, 17]),
            blur_slope=0.5, noise_sigma=0.003, seed=8500 + i,
        )
        truth, stack = simulate(spec)
        cfg = CoverageConfig(grid=SectorGrid(4, 4), operator=FMOperator.TENG, method="best3")
        sel = full_focus_coverage(stack, cfg).selected
        inputs = [stack[k] for k in sel]
        gt = truth.all_in_focus.pixels
        best_input_teng = max(fm_value(f, FMOperator.TENG) for f in inputs)
        for m in methods:
            fused = fuse(inputs, m).image
            rmse[m].append(float(np.sqrt(((fused.pixels - gt) ** 2).mean())))
            floor_total += 1
            if fm_value(fused, FMOperator.TENG) >= 0.95 * best_input_teng:
                floor_hits += 1
    means = {m: float(np.mean(rmse[m])) for m in methods}
    floor_ok = floor_hits == floor_total
    order_ok = means["wavelet"] <= means["neighbor"] <= means["pixel"]
    ok = floor_ok and order_ok
    criterion(7, "fusion quality ordering", ok,
              f"sharpness floor {floor_hits}/{floor_total}; mean RMSE wavelet "
              f"{means['wavelet']:.5f}, neighbor {means['neighbor']:.5f}, pixel "
              f"{means['pixel']:.5f} (need wavelet <= neighbor <= pixel)")
    assert ok


def test_criterion_8_fusion_runtimes(criterion):
    out = bench_fusion(1024, 768, frames=3, repeats=30)
    rows = {r["label"]: r for r in out["rows"]}
    order = ["pixel", "neighbor", "wavelet"]
    seq = [rows[m] for m in order]
    ordered = all(a["median_ms"] < b["median_ms"] for a, b in zip(seq, seq[1:]))
    disjoint = all(a["ci_high_ms"] < b["ci_low_ms"] for a, b in zip(seq, seq[1:]))
    ok = ordered and disjoint
    meds = ", ".join(f"{m} {rows[m]['median_ms']:.0f}ms" for m in order)
    criterion(8, "fusion runtime ordering", ok,
              f"1024x768x3 medians {meds}; CIs disjoint: {disjoint}")
    assert ok


def test_criterion_9_property_battery(criterion, monkeypatch):
    failures = []

    # peak geometry agrees with an exhaustive oracle
    rng = np.random.default_rng(4242)
    for _ in range(300):
        v = rng.integers(0, 10, size=int(rng.integers(3, 35))).astype(np.float64)
        if find_peaks(v) != oracle_peaks(v):
            failures.append("peak oracle mismatch")
            break

    # Haar analysis/synthesis is lossless
    for shape, levels in (((16, 16), 2), ((24, 40), 3)):
        a = 0.05 + 0.9 * rng.random(shape)
        approx, details = haar_forward(a, levels)
        if np.abs(haar_inverse(approx, details) - a).max() > 1e-9:
            failures.append(f"haar round-trip {shape}")

    # operator homogeneity degrees
    a = 0.05 + 0.9 * rng.random((24, 32))
    s = 0.37
    for op in FMOperator:
        d = HOMOGENEITY_DEGREE[op]
        lhs = fm_value(Frame(s * a), op)
        rhs = (s**d) * fm_value(Frame(a), op)
        if abs(lhs - rhs) > 1e-9 * max(1.0, abs(rhs)):
            failures.append(f"homogeneity {op.value}")

    # interior operators vanish on constants; smoothing leaves constants alone
    const = Frame(np.full((16, 16), 0.42))
    for op in (FMOperator.TENG, FMOperator.LAPM, FMOperator.LAPV):
        if fm_value(const, op) != 0.0:
            failures.append(f"constant response {op.value}")
    flat = FocalCurve(np.full(11, 1.3))
    if not np.array_equal(smoothen(flat, 5).values, flat.values):
        failures.append("smoothen constant")

    # mirrored search maps back into the original index range
    ext = mirror_extend(FocalCurve(np.array([2.0, 0.0, 1.0])))
    seg = map_back(bin_search_prominent_peak(ext), ext)
    if not (0 <= seg.start_frame <= seg.end_frame <= 2):
        failures.append("mirror map_back")

    # coverage is idempotent and thread-count independent
    spec = single_plane(32, 24, z=9, n=20, blur_slope=1.0, noise_sigma=0.0, seed=2)
    _, stack = simulate(spec)
    cfg = CoverageConfig(grid=SectorGrid(2, 2), operator=FMOperator.TENG)
    sel = full_focus_coverage(stack, cfg).selected
    sub = ZStack([stack[k] for k in sel])
    if full_focus_coverage(sub, cfg).selected != tuple(range(len(sel))):
        failures.append("coverage idempotence")
    monkeypatch.setenv("ZSTACK_THREADS", "4")
    if full_focus_coverage(stack, cfg).selected != sel:
        failures.append("coverage thread determinism")

    ok = not failures
    criterion(9, "property battery", ok,
              "peak oracle, haar round-trip, homogeneity, constants, mirror "
              "map-back, coverage idempotence all hold"
              if ok else "failed: " + ", ".join(failures))
    assert ok, failures
