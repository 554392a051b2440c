"""FastAPI application wrapping the core package.

Every endpoint is a thin adapter: parse the request model, call the library,
return the JSON form of the result. Domain failures (bad configs, unreadable
stacks, empty selections) map to HTTP 422 with a structured error body.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import bench_fusion, bench_operators, bench_scan_strategy, bench_scan_suite
from ..coverage import full_focus_coverage
from ..errors import ConfigError, ZStackError
from ..focus import FMOperator
from ..imgcore import load_frame, load_stack, save_frame, subsample
from ..peaks import fast_search
from ..pipeline import PipelineConfig, coverage_config_from_params, run_pipeline
from ..simsynth import SceneSpec, simulate
from ..stacker import fuse, save_label_map
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="zstacker", version=__version__)

    @app.exception_handler(ZStackError)
    async def domain_error(request: Request, exc: ZStackError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={"error": {"type": type(exc).__name__, "message": str(exc)}},
        )

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate_endpoint(req: schemas.SimulateRequest):
        if req.image_format not in ("png", "pgm"):
            raise ConfigError(f"image_format must be png or pgm, got {req.image_format!r}")
        spec = SceneSpec.from_dict(req.spec)
        truth, stack = simulate(spec)
        out = Path(req.out_dir)
        # truth artifacts go to a subdirectory so stack loaders scanning
        # out_dir for images see only the rendered frames
        truth_dir = out / "truth"
        truth_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(stack.frames):
            save_frame(frame, out / f"frame_{i:04d}.{req.image_format}")
        save_frame(truth.all_in_focus, truth_dir / f"all_in_focus.{req.image_format}")
        truth_dict = truth.to_dict()
        truth_dict["frames_per_z"] = spec.frames_per_z
        with open(truth_dir / "truth.json", "w", encoding="utf-8") as fh:
            json.dump(truth_dict, fh, indent=2)
            fh.write("\n")
        return {"out_dir": str(out), "frames_written": len(stack), "truth": truth_dict}

    @app.post("/fast-search", response_model=schemas.FastSearchResponse)
    def fast_search_endpoint(req: schemas.FastSearchRequest):
        stack = load_stack(req.stack_dir)
        work = subsample(stack, req.coarse_stride) if req.coarse_stride > 1 else stack
        segment = fast_search(work, FMOperator(req.operator), smooth_window=req.smooth_window)
        return {"segment": asdict(segment), "frames": len(stack)}

    @app.post("/coverage", response_model=schemas.CoverageResponse)
    def coverage_endpoint(req: schemas.CoverageRequest):
        cfg = coverage_config_from_params(req.model_dump(exclude={"stack_dir"}))
        stack = load_stack(req.stack_dir)
        return full_focus_coverage(stack, cfg).to_dict()

    @app.post("/stack", response_model=schemas.StackResponse)
    def stack_endpoint(req: schemas.StackRequest):
        if (req.frames is None) == (req.stack_dir is None):
            raise ConfigError("give either frames or stack_dir, not both")
        if req.stack_dir is not None:
            frames = load_stack(req.stack_dir).frames
        else:
            frames = tuple(load_frame(p) for p in req.frames)
        result = fuse(
            frames,
            req.method,
            window=req.window,
            block=req.block,
            median_window=req.median_window,
            levels=req.levels,
        )
        out = Path(req.output_path)
        if out.parent != Path("."):
            out.parent.mkdir(parents=True, exist_ok=True)
        save_frame(result.image, out)
        label_path = None
        if req.label_path is not None and result.label_map is not None:
            label_path = str(save_label_map(req.label_path, result.label_map, len(frames)))
        return {"method": result.method.value, "output_path": str(out), "label_path": label_path}

    @app.post("/pipeline")
    def pipeline_endpoint(req: schemas.PipelineRequest):
        cfg = PipelineConfig.from_dict(req.config)
        return run_pipeline(cfg).to_dict()

    @app.post("/bench/operators")
    def bench_operators_endpoint(req: schemas.BenchOperatorsRequest):
        return bench_operators([tuple(r) for r in req.resolutions], req.repeats, req.seed)

    @app.post("/bench/fusion")
    def bench_fusion_endpoint(req: schemas.BenchFusionRequest):
        return bench_fusion(req.width, req.height, req.frames, req.repeats, req.seed)

    @app.post("/bench/scan")
    def bench_scan_endpoint(req: schemas.BenchScanRequest):
        op = FMOperator(req.operator)
        if req.spec is not None:
            spec = SceneSpec.from_dict(req.spec)
            return bench_scan_strategy(spec, req.coarse_stride, op)
        return bench_scan_suite(req.scenes, req.coarse_stride, req.seed, op)

    return app
