"""Full-focus frame selection over a z-stack.

Splits every frame into a sector grid, scores each sector with a focus
operator (sectors whose pixels are mostly dark are invalid), and selects a
small frame subset that covers every region in focus:

- parts: one owner per sector (the frame where that sector scores highest);
  the selection is the set of owners.
- best3: each sector votes for its owner; the three most-voted frames win.

The raw selection then passes three filters, in order: drop completely
blurred frames (whole-frame score below a fraction of the curve maximum),
drop dirt frames (frames lying under small focal-curve peaks far away from
the prominent peak), and resolve near-duplicate frames last so a dropped dirt
frame can never suppress its clean neighbor. An audit trail records every
candidate's fate, and frames with zero valid sectors are tagged dark.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, EmptyCoverageError
from .focus import FMOperator, SectorGrid, focal_curve, sector_fm
from .imgcore import ZStack, dark_mask, frame_diff_mad
from .parallel import map_ordered
from .peaks import find_peaks

METHOD_PARTS = "parts"
METHOD_BEST3 = "best3"


@dataclass(frozen=True)
class CoverageConfig:
    # TENG is the default scorer: it is exactly zero on structureless content,
    # so sector comparisons and the blur_ratio rule are not skewed by the
    # DC-level floor that autocorrelation measures carry.
    grid: SectorGrid = SectorGrid(4, 4)
    operator: FMOperator = FMOperator.TENG
    method: str = METHOD_PARTS
    dark_threshold: float = 0.04
    dup_mad_threshold: float = 0.02
    blur_ratio: float = 0.2
    dirt_prom_ratio: float = 0.3
    dirt_dist_ratio: float = 1.5

    def __post_init__(self) -> None:
        if self.method not in (METHOD_PARTS, METHOD_BEST3):
            raise ConfigError(f"unknown coverage method {self.method!r}")
        if self.dark_threshold < 0:
            raise ConfigError("dark_threshold must be non-negative")
        for name in ("dup_mad_threshold", "blur_ratio", "dirt_prom_ratio"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1]")
        if self.dirt_dist_ratio <= 0:
            raise ConfigError("dirt_dist_ratio must be positive")


@dataclass(frozen=True)
class AuditEntry:
    index: int
    reason: str  # kept | dup_of:<k> | blurred | dirt | dark


@dataclass(frozen=True)
class CoverageResult:
    selected: tuple[int, ...]
    audit: tuple[AuditEntry, ...]
    sector_owner: np.ndarray  # (rows, cols) frame index, -1 for never-valid sectors

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "audit": [{"index": e.index, "reason": e.reason} for e in self.audit],
            "sector_owner": self.sector_owner.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageResult":
        return cls(
            selected=tuple(d["selected"]),
            audit=tuple(AuditEntry(e["index"], e["reason"]) for e in d["audit"]),
            sector_owner=np.asarray(d["sector_owner"], dtype=int),
        )


def _sector_tensors(stack: ZStack, cfg: CoverageConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame sector scores and validity, shapes (frames, rows, cols)."""

    def one(frame):
        m = dark_mask(frame, cfg.dark_threshold)
        fm = sector_fm(frame, cfg.grid, cfg.operator, mask=m)
        return fm.values, fm.valid

    pairs = map_ordered(one, stack.frames)
    values = np.stack([p[0] for p in pairs])
    valid = np.stack([p[1] for p in pairs])
    return values, valid


def _owners(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Per-sector argmax frame over frames where the sector is valid; -1 when
    the sector is valid nowhere. Ties go to the lower frame index."""
    masked = np.where(valid, values, -np.inf)
    owners = np.argmax(masked, axis=0)
    owners[~valid.any(axis=0)] = -1
    return owners


def _owners_among(values: np.ndarray, valid: np.ndarray, chosen: Sequence[int]) -> np.ndarray:
    """Owner map restricted to the chosen frames. Sectors valid in none of
    the chosen frames fall back to the raw score argmax among them; sectors
    valid in no frame at all stay -1."""
    sel = np.asarray(sorted(chosen), dtype=int)
    vals = values[sel]
    masked = np.where(valid[sel], vals, -np.inf)
    pos = np.where(valid[sel].any(axis=0), np.argmax(masked, axis=0), np.argmax(vals, axis=0))
    owners = sel[pos]
    owners[~valid.any(axis=0)] = -1
    return owners


def _votes(owners: np.ndarray) -> dict[int, int]:
    votes: dict[int, int] = {}
    for o in owners.ravel():
        if o >= 0:
            votes[int(o)] = votes.get(int(o), 0) + 1
    return votes


def select_parts(stack: ZStack, cfg: CoverageConfig | None = None) -> tuple[list[int], np.ndarray]:
    """All sector-owning frames (ascending) plus the sector owner map."""
    cfg = cfg or CoverageConfig()
    values, valid = _sector_tensors(stack, cfg)
    owners = _owners(values, valid)
    cand = sorted({int(o) for o in owners.ravel() if o >= 0})
    if not cand:
        raise EmptyCoverageError("every sector is dark in every frame")
    return cand, owners


def select_best3(stack: ZStack, cfg: CoverageConfig | None = None) -> tuple[list[int], np.ndarray]:
    """The (up to) three most-voted frames plus the owner map restricted to
    them."""
    cfg = cfg or CoverageConfig()
    values, valid = _sector_tensors(stack, cfg)
    votes = _votes(_owners(values, valid))
    if not votes:
        raise EmptyCoverageError("every sector is dark in every frame")
    ranked = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = sorted(k for k, _ in ranked[:3])
    return chosen, _owners_among(values, valid, chosen)


def drop_blurred(curve_values: np.ndarray, indices: Sequence[int], blur_ratio: float) -> tuple[list[int], list[int]]:
    """Split indices into (kept, dropped); dropped have whole-frame score
    below blur_ratio times the curve maximum."""
    cmax = float(np.max(curve_values))
    kept, dropped = [], []
    for k in indices:
        (kept if curve_values[k] >= blur_ratio * cmax else dropped).append(k)
    return kept, dropped


def drop_dirt(
    curve_values: np.ndarray,
    indices: Sequence[int],
    prom_ratio: float,
    dist_ratio: float,
) -> tuple[list[int], list[int]]:
    """Drop indices lying under small peaks far from the prominent peak.

    A peak Q is dirt when prominence(Q) < prom_ratio * prominence(P*) and
    |index(Q) - index(P*)| > dist_ratio * width(P*), with P* the most
    prominent peak. An index is dropped when it falls inside the base
    interval of any dirt peak. A curve without peaks carries no dirt
    evidence, so everything is kept.
    """
    peaks = find_peaks(np.asarray(curve_values, dtype=np.float64), 0.0)
    if not peaks:
        return list(indices), []
    main = max(peaks, key=lambda p: (p.prominence, -p.index))
    dirt_peaks = [
        q
        for q in peaks
        if q.prominence < prom_ratio * main.prominence
        and abs(q.index - main.index) > dist_ratio * main.width
    ]
    kept, dropped = [], []
    for k in indices:
        if any(q.left_base <= k <= q.right_base for q in dirt_peaks):
            dropped.append(k)
        else:
            kept.append(k)
    return kept, dropped


def drop_duplicates(
    stack: ZStack,
    indices: Sequence[int],
    threshold: float,
    fm_values: np.ndarray,
) -> tuple[list[int], dict[int, int]]:
    """Resolve near-duplicate frames (mean absolute difference <= threshold).

    Frames are scanned in ascending order; each incoming frame is grouped with
    every already-kept frame it duplicates and the group keeps only its best
    whole-frame score (ties to the lower index), so no two kept frames stay
    within the threshold. Returns (kept, dropped->winner map).
    """
    kept: list[int] = []
    dup_of: dict[int, int] = {}
    for j in sorted(indices):
        sims = [k for k in kept if frame_diff_mad(stack[j], stack[k]) <= threshold]
        if not sims:
            kept.append(j)
            continue
        group = sims + [j]
        winner = max(group, key=lambda i: (fm_values[i], -i))
        for m in group:
            if m != winner:
                dup_of[m] = winner
        kept = [k for k in kept if k not in group or k == winner]
        if winner == j:
            kept.append(j)
    return sorted(kept), dup_of


def full_focus_coverage(stack: ZStack, cfg: CoverageConfig | None = None) -> CoverageResult:
    """Select the minimal frame set covering every sector in focus."""
    cfg = cfg or CoverageConfig()
    values, valid = _sector_tensors(stack, cfg)
    owners = _owners(values, valid)
    dark_frames = [int(i) for i in np.flatnonzero(~valid.any(axis=(1, 2)))]

    cand = sorted({int(o) for o in owners.ravel() if o >= 0})
    if not cand:
        raise EmptyCoverageError("every sector is dark in every frame")
    if cfg.method == METHOD_BEST3:
        ranked = sorted(_votes(owners).items(), key=lambda kv: (-kv[1], kv[0]))
        cand = sorted(k for k, _ in ranked[:3])

    curve = focal_curve(stack, cfg.operator).values
    kept, blurred = drop_blurred(curve, cand, cfg.blur_ratio)
    kept, dirt = drop_dirt(curve, kept, cfg.dirt_prom_ratio, cfg.dirt_dist_ratio)
    kept, dup_of = drop_duplicates(stack, kept, cfg.dup_mad_threshold, curve)
    if not kept:
        raise EmptyCoverageError("all selected frames were filtered out")

    reasons: dict[int, str] = {i: "dark" for i in dark_frames}
    for i in blurred:
        reasons[i] = "blurred"
    for i in dirt:
        reasons[i] = "dirt"
    for i, w in dup_of.items():
        reasons[i] = f"dup_of:{w}"
    for i in kept:
        reasons[i] = "kept"
    audit = tuple(AuditEntry(i, reasons[i]) for i in sorted(reasons))

    return CoverageResult(
        selected=tuple(int(i) for i in kept),
        audit=audit,
        sector_owner=_owners_among(values, valid, kept),
    )
