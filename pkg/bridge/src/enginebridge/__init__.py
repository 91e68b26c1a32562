"""Flat-buffer bindings for the depthmerge compression engine."""

from .bridge import (
    BridgeDims,
    CameraDims,
    CameraResult,
    InvalidHandle,
    StepError,
    StepResult,
    close,
    create,
    open_handles,
    step,
)

__all__ = [
    "BridgeDims",
    "CameraDims",
    "CameraResult",
    "InvalidHandle",
    "StepError",
    "StepResult",
    "close",
    "create",
    "open_handles",
    "step",
]

__version__ = "0.1.0"
