"""Pipes-and-filters composition of the processing stages.

A pipeline takes a frame directory, pushes the stack through up to three
stages in fixed order -- fast_search (narrow to the in-focus segment),
coverage (select the full-focus subset), stack (fuse into one image) -- and
emits a JSON run report. Stages can be disabled individually; a disabled
stage passes its input through unchanged. Stage errors abort the run and are
recorded in the report with the stage name and cause.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .coverage import CoverageConfig, full_focus_coverage
from .errors import ConfigError, ZStackError
from .focus import FMOperator, SectorGrid
from .imgcore import ZStack, load_stack, save_frame, subsample
from .peaks import fast_search
from .stacker import StackMethod, fuse, save_label_map

STAGE_FAST_SEARCH = "fast_search"
STAGE_COVERAGE = "coverage"
STAGE_STACK = "stack"
_STAGE_ORDER = (STAGE_FAST_SEARCH, STAGE_COVERAGE, STAGE_STACK)

_ALLOWED_PARAMS = {
    STAGE_FAST_SEARCH: {"operator", "smooth_window", "coarse_stride"},
    STAGE_COVERAGE: {
        "method",
        "grid",
        "operator",
        "dark_threshold",
        "dup_mad_threshold",
        "blur_ratio",
        "dirt_prom_ratio",
        "dirt_dist_ratio",
    },
    STAGE_STACK: {"method", "window", "block", "median_window", "levels", "output_name"},
}


@dataclass(frozen=True)
class StageSpec:
    name: str
    enabled: bool = True
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in _STAGE_ORDER:
            raise ConfigError(f"unknown stage {self.name!r}; expected one of {_STAGE_ORDER}")
        unknown = set(self.parameters) - _ALLOWED_PARAMS[self.name]
        if unknown:
            raise ConfigError(f"stage {self.name!r} got unknown parameters {sorted(unknown)}")


@dataclass(frozen=True)
class PipelineIO:
    input_dir: str
    output_dir: str
    report_path: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    stages: tuple[StageSpec, ...]
    io: PipelineIO

    def __post_init__(self) -> None:
        positions = [_STAGE_ORDER.index(s.name) for s in self.stages]
        if positions != sorted(set(positions)):
            raise ConfigError(
                "stages must appear at most once, in the order "
                f"{' -> '.join(_STAGE_ORDER)}; got {[s.name for s in self.stages]}"
            )
        object.__setattr__(self, "stages", tuple(self.stages))

    def to_dict(self) -> dict:
        return {
            "stages": [
                {"name": s.name, "enabled": s.enabled, "parameters": dict(s.parameters)}
                for s in self.stages
            ],
            "io": asdict(self.io),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        try:
            stages = []
            for s in d.get("stages", []):
                extra = set(s) - {"name", "enabled", "parameters"}
                if extra:
                    raise ConfigError(f"stage descriptor has unknown keys {sorted(extra)}")
                stages.append(
                    StageSpec(
                        name=s["name"],
                        enabled=bool(s.get("enabled", True)),
                        parameters=dict(s.get("parameters", {})),
                    )
                )
            extra = set(d["io"]) - {"input_dir", "output_dir", "report_path"}
            if extra:
                raise ConfigError(f"io block has unknown keys {sorted(extra)}")
            io = PipelineIO(
                input_dir=d["io"]["input_dir"],
                output_dir=d["io"]["output_dir"],
                report_path=d["io"].get("report_path"),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"bad pipeline config: {e}") from e
        return cls(stages=tuple(stages), io=io)


def load_config(path: str | Path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return PipelineConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class StageReport:
    name: str
    enabled: bool
    input_frames: int
    output_frames: int
    wall_ms: float
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunReport:
    config: dict
    stages: tuple[StageReport, ...]
    error: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stages": [asdict(s) for s in self.stages],
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            config=d["config"],
            stages=tuple(StageReport(**s) for s in d["stages"]),
            error=d.get("error"),
        )


def _parse_grid(value) -> SectorGrid:
    if isinstance(value, str):
        parts = value.lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"grid must look like 'RxC', got {value!r}")
        try:
            return SectorGrid(int(parts[0]), int(parts[1]))
        except ValueError as e:
            raise ConfigError(f"grid must look like 'RxC', got {value!r}") from e
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return SectorGrid(int(value[0]), int(value[1]))
    raise ConfigError(f"grid must be 'RxC' or [rows, cols], got {value!r}")


def coverage_config_from_params(params: dict) -> CoverageConfig:
    kwargs: dict = {}
    if "grid" in params:
        kwargs["grid"] = _parse_grid(params["grid"])
    if "method" in params:
        kwargs["method"] = params["method"]
    if "operator" in params:
        kwargs["operator"] = FMOperator(params["operator"])
    for key in ("dark_threshold", "dup_mad_threshold", "blur_ratio", "dirt_prom_ratio", "dirt_dist_ratio"):
        if key in params:
            kwargs[key] = float(params[key])
    return CoverageConfig(**kwargs)


def _run_fast_search(stack: ZStack, params: dict) -> tuple[ZStack, dict]:
    op = FMOperator(params.get("operator", FMOperator.VOLL4))
    window = params.get("smooth_window")
    stride = int(params.get("coarse_stride", 1))
    work = subsample(stack, stride) if stride > 1 else stack
    segment = fast_search(work, op, smooth_window=window)
    kept = [
        f
        for i, f in enumerate(stack.frames)
        if segment.start_frame <= i * stack.stride <= segment.end_frame
    ]
    out = ZStack(tuple(kept), stride=stack.stride)
    return out, {"segment": asdict(segment)}


def _run_coverage(stack: ZStack, params: dict) -> tuple[ZStack, dict]:
    cfg = coverage_config_from_params(params)
    result = full_focus_coverage(stack, cfg)
    kept = tuple(stack.frames[i] for i in result.selected)
    return ZStack(kept, stride=stack.stride), {"coverage": result.to_dict()}


def _run_stack(stack: ZStack, params: dict, output_dir: Path) -> tuple[ZStack, dict]:
    method = StackMethod(params.get("method", StackMethod.WAVELET))
    kwargs: dict = {}
    for key in ("window", "block", "median_window", "levels"):
        if key in params:
            kwargs[key] = int(params[key])
    result = fuse(stack.frames, method, **kwargs)
    output_dir.mkdir(parents=True, exist_ok=True)
    name = params.get("output_name", "fused.png")
    out_path = save_frame(result.image, output_dir / name)
    label_path = None
    if result.label_map is not None:
        label_path = str(save_label_map(output_dir / "fused_labels.pgm", result.label_map, len(stack)))
    details = {"method": method.value, "output_path": str(out_path), "label_path": label_path}
    return ZStack((result.image,), stride=stack.stride), details


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Execute the configured stages and return (and optionally write) the report."""
    stages: list[StageReport] = []
    error: dict | None = None
    try:
        current = load_stack(cfg.io.input_dir)
    except ZStackError as e:
        report = RunReport(config=cfg.to_dict(), stages=(), error={"stage": "input", "message": str(e)})
        _write_report(report, cfg)
        return report

    for spec in cfg.stages:
        n_in = len(current)
        if not spec.enabled:
            stages.append(StageReport(spec.name, False, n_in, n_in, 0.0, {"passthrough": True}))
            continue
        t0 = time.perf_counter()
        try:
            if spec.name == STAGE_FAST_SEARCH:
                current, details = _run_fast_search(current, spec.parameters)
            elif spec.name == STAGE_COVERAGE:
                current, details = _run_coverage(current, spec.parameters)
            else:
                current, details = _run_stack(current, spec.parameters, Path(cfg.io.output_dir))
        except ZStackError as e:
            error = {"stage": spec.name, "message": str(e)}
            break
        wall_ms = (time.perf_counter() - t0) * 1e3
        stages.append(StageReport(spec.name, True, n_in, len(current), wall_ms, details))

    report = RunReport(config=cfg.to_dict(), stages=tuple(stages), error=error)
    _write_report(report, cfg)
    return report


def _write_report(report: RunReport, cfg: PipelineConfig) -> None:
    if cfg.io.report_path is None:
        return
    path = Path(cfg.io.report_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
