"""Request/response models for the HTTP service.

The service is a thin wrapper over the core package: requests carry file
paths (stack directories, output locations) plus the same parameters the
library functions take, responses carry the JSON forms of the core results.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class SimulateRequest(BaseModel):
    spec: dict
    out_dir: str
    image_format: str = "png"  # png or pgm


class SimulateResponse(BaseModel):
    out_dir: str
    frames_written: int
    truth: dict


class SegmentModel(BaseModel):
    start_frame: int
    end_frame: int
    start_z: int
    end_z: int


class FastSearchRequest(BaseModel):
    stack_dir: str
    operator: str = "voll4"
    smooth_window: int | None = None
    coarse_stride: int = Field(default=1, ge=1)


class FastSearchResponse(BaseModel):
    segment: SegmentModel
    frames: int


class CoverageRequest(BaseModel):
    stack_dir: str
    method: str = "parts"
    grid: str = "4x4"
    operator: str = "teng"
    dark_threshold: float = 0.04
    dup_mad_threshold: float = 0.02
    blur_ratio: float = 0.2
    dirt_prom_ratio: float = 0.3
    dirt_dist_ratio: float = 1.5


class AuditEntryModel(BaseModel):
    index: int
    reason: str


class CoverageResponse(BaseModel):
    selected: list[int]
    audit: list[AuditEntryModel]
    sector_owner: list[list[int]]


class StackRequest(BaseModel):
    frames: list[str] | None = None
    stack_dir: str | None = None
    method: str = "wavelet"
    window: int = 9
    block: int = 16
    median_window: int = 3
    levels: int = 4
    output_path: str = "fused.png"
    label_path: str | None = None


class StackResponse(BaseModel):
    method: str
    output_path: str
    label_path: str | None


class PipelineRequest(BaseModel):
    config: dict


class BenchOperatorsRequest(BaseModel):
    resolutions: list[tuple[int, int]]
    repeats: int = 30
    seed: int = 0


class BenchFusionRequest(BaseModel):
    width: int = 1024
    height: int = 768
    frames: int = 3
    repeats: int = 30
    seed: int = 0


class BenchScanRequest(BaseModel):
    scenes: int = 30
    coarse_stride: int = 8
    seed: int = 0
    operator: str = "teng"
    spec: dict | None = None  # single-scene mode when given


class HealthResponse(BaseModel):
    status: str
    version: str
