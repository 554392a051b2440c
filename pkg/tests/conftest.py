"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from zstacker.simsynth import PlaneSpec, Rect, SceneSpec

_acceptance_lines: list[tuple[int, str]] = []


def rng_array(seed: int, height: int, width: int) -> np.ndarray:
    """Reproducible float64 array in [0.05, 0.95]."""
    rng = np.random.default_rng(seed)
    return 0.05 + 0.9 * rng.random((height, width))


def single_plane(width: int, height: int, z: int, n: int, **kw) -> SceneSpec:
    return SceneSpec(
        width=width,
        height=height,
        planes=(PlaneSpec(Rect(0, 0, width, height), z),),
        n_frames=n,
        **kw,
    )


def strip_planes(width: int, height: int, zs: list[int]) -> tuple[PlaneSpec, ...]:
    """Vertical strips of (nearly) equal width, one plane per z."""
    p = len(zs)
    edges = [round(width * j / p) for j in range(p + 1)]
    return tuple(
        PlaneSpec(Rect(edges[j], 0, edges[j + 1], height), zs[j]) for j in range(p)
    )


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance-criterion outcome; printed after the run."""

    def record(num: int, name: str, ok: bool, detail: str) -> None:
        verdict = "PASS" if ok else "FAIL"
        _acceptance_lines.append((num, f"criterion {num} [{name}]: {verdict} -- {detail}"))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_lines):
        terminalreporter.write_line(line)
