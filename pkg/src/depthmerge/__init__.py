"""Depth-guided progressive visual token merging for streaming inference."""

from .core import (
    AUXILIARY,
    PRIMARY,
    CameraPayload,
    CameraSpec,
    EngineConfig,
    FrameRecord,
    PatchDepths,
    RobotState,
    patchify_depth,
    validate_frame,
)
from .pipeline import Engine, predicted_speedup
from .report import RunReport, run_trace
from .scenarios import ScenarioSpec, generate_scene
from .scheduler import CompressedTokens
from .traceio import TraceHeader, read_trace, write_trace

__all__ = [
    "AUXILIARY",
    "PRIMARY",
    "CameraPayload",
    "CameraSpec",
    "CompressedTokens",
    "Engine",
    "EngineConfig",
    "FrameRecord",
    "PatchDepths",
    "RobotState",
    "RunReport",
    "ScenarioSpec",
    "TraceHeader",
    "generate_scene",
    "patchify_depth",
    "predicted_speedup",
    "read_trace",
    "run_trace",
    "validate_frame",
    "write_trace",
]

__version__ = "0.1.0"
