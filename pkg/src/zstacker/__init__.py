"""Z-stack processing toolkit.

Locates the in-focus segment of a microscope Z-stack from focal curves,
selects the minimal frame subset covering every specimen region in focus,
and fuses that subset into one all-in-focus image. Ships with a synthetic
stack generator for ground-truth evaluation, a benchmark harness, a staged
pipeline runner, an HTTP service and a CLI.
"""

__version__ = "0.1.0"

from .bench import bench_fusion, bench_operators, bench_scan_strategy, bench_scan_suite
from .coverage import (
    AuditEntry,
    CoverageConfig,
    CoverageResult,
    drop_blurred,
    drop_dirt,
    drop_duplicates,
    full_focus_coverage,
    select_best3,
    select_parts,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptyCoverageError,
    FrameRangeError,
    InvalidPeakError,
    NoPeakError,
    StackLoadError,
    ZStackError,
)
from .focus import (
    FMOperator,
    FocalCurve,
    HOMOGENEITY_DEGREE,
    SectorFMMap,
    SectorGrid,
    fm_lapm,
    fm_lapv,
    fm_teng,
    fm_value,
    fm_voll4,
    focal_curve,
    sector_fm,
)
from .imgcore import (
    BinaryMask,
    Frame,
    ZStack,
    dark_mask,
    downscale,
    frame_diff_mad,
    from_arrays,
    load_frame,
    load_stack,
    save_frame,
    subsample,
)
from .peaks import (
    Peak,
    Segment,
    bin_search_prominent_peak,
    default_smooth_window,
    fast_search,
    find_peaks,
    map_back,
    mirror_extend,
    smoothen,
)
from .pipeline import PipelineConfig, PipelineIO, RunReport, StageSpec, load_config, run_pipeline
from .simsynth import (
    DirtSpec,
    PlaneSpec,
    Rect,
    SceneSpec,
    SceneTruth,
    generate_scene,
    load_spec,
    render_zstack,
    scene_texture,
    simulate,
)
from .stacker import (
    FocusMap,
    FusionResult,
    StackMethod,
    focus_map_teng,
    fuse,
    haar_forward,
    haar_inverse,
    median_relabel,
    save_label_map,
    stack_neighbor,
    stack_pixel,
    stack_wavelet,
)

__all__ = [
    "__version__",
    "AuditEntry",
    "BinaryMask",
    "ConfigError",
    "CoverageConfig",
    "CoverageResult",
    "DimensionMismatchError",
    "DirtSpec",
    "EmptyCoverageError",
    "FMOperator",
    "FocalCurve",
    "FocusMap",
    "Frame",
    "FrameRangeError",
    "FusionResult",
    "HOMOGENEITY_DEGREE",
    "InvalidPeakError",
    "NoPeakError",
    "Peak",
    "PipelineConfig",
    "PipelineIO",
    "PlaneSpec",
    "Rect",
    "RunReport",
    "SceneSpec",
    "SceneTruth",
    "SectorFMMap",
    "SectorGrid",
    "Segment",
    "StackLoadError",
    "StackMethod",
    "StageSpec",
    "ZStack",
    "ZStackError",
    "bench_fusion",
    "bench_operators",
    "bench_scan_strategy",
    "bench_scan_suite",
    "bin_search_prominent_peak",
    "dark_mask",
    "default_smooth_window",
    "downscale",
    "drop_blurred",
    "drop_dirt",
    "drop_duplicates",
    "fast_search",
    "find_peaks",
    "fm_lapm",
    "fm_lapv",
    "fm_teng",
    "fm_value",
    "fm_voll4",
    "focal_curve",
    "focus_map_teng",
    "frame_diff_mad",
    "from_arrays",
    "full_focus_coverage",
    "fuse",
    "generate_scene",
    "haar_forward",
    "haar_inverse",
    "load_config",
    "load_frame",
    "load_spec",
    "load_stack",
    "map_back",
    "median_relabel",
    "mirror_extend",
    "render_zstack",
    "run_pipeline",
    "save_frame",
    "save_label_map",
    "scene_texture",
    "sector_fm",
    "select_best3",
    "select_parts",
    "simulate",
    "smoothen",
    "stack_neighbor",
    "stack_pixel",
    "stack_wavelet",
    "subsample",
]
