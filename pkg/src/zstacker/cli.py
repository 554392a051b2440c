"""Command-line client for the Z-stack service.

Every subcommand maps onto one service endpoint. By default the requests run
against an in-process application instance, so no server is needed; pass
--server URL to talk to a remote one instead. Results print as JSON on
stdout (or are written with --report PATH).

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

import httpx

from .parallel import ENV_THREADS


def _parse_resolutions(text: str) -> list[list[int]]:
    out = []
    for token in text.split(","):
        parts = token.lower().split("x")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"bad resolution {token!r}, expected WxH")
        try:
            out.append([int(parts[0]), int(parts[1])])
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad resolution {token!r}, expected WxH") from e
    return out


def _parse_size(text: str) -> tuple[int, int]:
    return tuple(_parse_resolutions(text)[0])  # single WxH


def _request(server: str | None, path: str, payload: dict | None) -> tuple[int, dict]:
    """POST payload (or GET when payload is None); in-process unless a server
    URL is given."""
    if server is not None:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            r = client.post(path, json=payload) if payload is not None else client.get(path)
            return r.status_code, r.json()

    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())

    async def go() -> tuple[int, dict]:
        async with httpx.AsyncClient(transport=transport, base_url="http://zstacker.internal") as client:
            r = await client.post(path, json=payload) if payload is not None else await client.get(path)
            return r.status_code, r.json()

    return asyncio.run(go())


def _emit(data: dict, report_path: str | None) -> None:
    text = json.dumps(data, indent=2)
    if report_path is None:
        print(text)
    else:
        p = Path(report_path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    # shared flags accepted both before and after the subcommand; SUPPRESS
    # keeps an absent post-subcommand flag from clobbering a pre-subcommand one
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--server", default=argparse.SUPPRESS, help="remote service URL (default: run in-process)"
    )
    common.add_argument(
        "--report", default=argparse.SUPPRESS, help="write the JSON result here instead of stdout"
    )
    common.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help="worker threads for frame-parallel steps",
    )
    parser = argparse.ArgumentParser(
        prog="zstacker",
        description="Z-stack processing: focused-segment search, frame selection, focus stacking.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name: str, **kwargs) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("simulate", help="render a synthetic stack from a scene spec")
    p.add_argument("spec", help="scene spec JSON file")
    p.add_argument("out_dir", help="directory for the rendered frames")
    p.add_argument("--format", choices=("png", "pgm"), default="png")

    p = add_parser("fast-search", help="locate the in-focus segment of a stack")
    p.add_argument("stack_dir")
    p.add_argument("--op", choices=("voll4", "teng", "lapm", "lapv"), default="voll4")
    p.add_argument("--smooth", type=int, help="odd smoothing window (default: curve length / 20)")
    p.add_argument("--stride", type=int, default=1, help="coarse scan stride")

    p = add_parser("coverage", help="select the full-focus frame subset")
    p.add_argument("stack_dir")
    p.add_argument("--method", choices=("parts", "best3"), default="parts")
    p.add_argument("--grid", default="4x4", help="sector grid RxC")
    p.add_argument("--op", choices=("voll4", "teng", "lapm", "lapv"), default="teng")
    p.add_argument("--dark-threshold", type=float, default=0.04)
    p.add_argument("--dup-threshold", type=float, default=0.02)
    p.add_argument("--blur-ratio", type=float, default=0.2)
    p.add_argument("--dirt-prom-ratio", type=float, default=0.3)
    p.add_argument("--dirt-dist-ratio", type=float, default=1.5)

    p = add_parser("stack", help="fuse frames into one all-in-focus image")
    p.add_argument("frames", nargs="+", help="frame files, or a single stack directory")
    p.add_argument("--method", choices=("pixel", "neighbor", "wavelet"), required=True)
    p.add_argument("--out", default="fused.png")
    p.add_argument("--labels", help="also write the label map here (pixel/neighbor)")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--block", type=int, default=16)
    p.add_argument("--median", type=int, default=3)
    p.add_argument("--levels", type=int, default=4)

    p = add_parser("pipeline", help="run a staged pipeline from a config file")
    p.add_argument("config", help="pipeline config JSON file")

    p = add_parser("bench", help="timing and scan-strategy benchmarks")
    p.add_argument("suite", choices=("operators", "fusion", "scan"))
    p.add_argument("--resolutions", type=_parse_resolutions, default=[[1920, 1080], [160, 120]])
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=_parse_size, default=(1024, 768), help="fusion frame size WxH")
    p.add_argument("--frames", type=int, default=3, help="fusion stack size")
    p.add_argument("--scenes", type=int, default=30, help="scan suite size")
    p.add_argument("--stride", type=int, default=8, help="scan coarse stride")
    p.add_argument("--spec", help="scan a single scene from this spec file")

    p = add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _build_request(args: argparse.Namespace) -> tuple[str, dict]:
    if args.cmd == "simulate":
        return "/simulate", {
            "spec": _load_json(args.spec),
            "out_dir": args.out_dir,
            "image_format": args.format,
        }
    if args.cmd == "fast-search":
        return "/fast-search", {
            "stack_dir": args.stack_dir,
            "operator": args.op,
            "smooth_window": args.smooth,
            "coarse_stride": args.stride,
        }
    if args.cmd == "coverage":
        return "/coverage", {
            "stack_dir": args.stack_dir,
            "method": args.method,
            "grid": args.grid,
            "operator": args.op,
            "dark_threshold": args.dark_threshold,
            "dup_mad_threshold": args.dup_threshold,
            "blur_ratio": args.blur_ratio,
            "dirt_prom_ratio": args.dirt_prom_ratio,
            "dirt_dist_ratio": args.dirt_dist_ratio,
        }
    if args.cmd == "stack":
        payload = {
            "method": args.method,
            "window": args.window,
            "block": args.block,
            "median_window": args.median,
            "levels": args.levels,
            "output_path": args.out,
            "label_path": args.labels,
        }
        if len(args.frames) == 1 and Path(args.frames[0]).is_dir():
            payload["stack_dir"] = args.frames[0]
        else:
            payload["frames"] = args.frames
        return "/stack", payload
    if args.cmd == "pipeline":
        return "/pipeline", {"config": _load_json(args.config)}
    # bench
    if args.suite == "operators":
        return "/bench/operators", {
            "resolutions": args.resolutions,
            "repeats": args.repeats,
            "seed": args.seed,
        }
    if args.suite == "fusion":
        w, h = args.size
        return "/bench/fusion", {
            "width": w,
            "height": h,
            "frames": args.frames,
            "repeats": args.repeats,
            "seed": args.seed,
        }
    payload = {"scenes": args.scenes, "coarse_stride": args.stride, "seed": args.seed}
    if args.spec is not None:
        payload["spec"] = _load_json(args.spec)
    return "/bench/scan", payload


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    server = getattr(args, "server", None)
    report = getattr(args, "report", None)
    threads = getattr(args, "threads", None)

    if threads is not None:
        os.environ[ENV_THREADS] = str(threads)
    elif args.cmd == "bench":
        os.environ.setdefault(ENV_THREADS, "1")  # timing stability

    if args.cmd == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        path, payload = _build_request(args)
    except (OSError, json.JSONDecodeError) as e:
        print(json.dumps({"error": {"type": type(e).__name__, "message": str(e)}}), file=sys.stderr)
        return 1

    try:
        status, data = _request(server, path, payload)
    except httpx.HTTPError as e:
        print(json.dumps({"error": {"type": type(e).__name__, "message": str(e)}}), file=sys.stderr)
        return 1

    if status != 200:
        print(json.dumps(data, indent=2), file=sys.stderr)
        return 1
    _emit(data, report)
    if args.cmd == "pipeline" and data.get("error") is not None:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
