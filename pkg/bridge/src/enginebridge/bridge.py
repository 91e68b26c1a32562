"""Flat-buffer bindings around the depthmerge engine.

The boundary mirrors ``include/engine_bridge.h``: configuration crosses as
a string key/value map, frames cross as contiguous little-endian float32
buffers, and results come back as flat arrays plus a stats record. No
structured engine objects leak through, so a native shim with the same
signatures can replace this module without touching callers.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from depthmerge import (
    AUXILIARY,
    PRIMARY,
    CameraPayload,
    CameraSpec,
    Engine,
    EngineConfig,
    FrameRecord,
    RobotState,
)
from depthmerge.errors import BadConfig, LengthMismatch


class InvalidHandle(RuntimeError):
    """Raised when a handle was never created or is already closed."""


class StepError(RuntimeError):
    """Engine failure surfaced across the boundary, tagged with the frame."""

    def __init__(self, frame_index, cause):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index
        self.cause = cause


@dataclass(frozen=True)
class CameraDims:
    """Declared dimensions of one camera stream (all positive)."""

    height: int
    width: int
    grid_h: int
    grid_w: int
    embed_dim: int
    has_attention: bool = False

    @property
    def patch_count(self):
        return self.grid_h * self.grid_w

    def check(self, name):
        for field in ("height", "width", "grid_h", "grid_w", "embed_dim"):
            if getattr(self, field) <= 0:
                raise BadConfig(f"{name}.{field}", "need > 0")


@dataclass(frozen=True)
class BridgeDims:
    primary: CameraDims
    auxiliary: Optional[CameraDims]
    chunk_len: int


@dataclass(frozen=True)
class CameraResult:
    """One camera's flat output buffers for a single step."""

    embeddings: np.ndarray   # (retained * embed_dim,) float64
    sizes: np.ndarray        # (retained,) int32
    unmerge: np.ndarray      # (patch_count,) int32
    retained: int
    rho: float
    merges: int
    phase: str               # primary only; "-" on the auxiliary stream
    aux_mode: str            # auxiliary only; "-" on the primary stream


@dataclass(frozen=True)
class StepResult:
    frame_index: int
    primary: CameraResult
    auxiliary: Optional[CameraResult]
    events: tuple            # this frame's events, "kind" or "kind[detail]"


class _BoundEngine:
    def __init__(self, engine, dims):
        self.engine = engine
        self.dims = dims


_registry = {}
_next_handle = itertools.count(1)
_lock = threading.Lock()


def _specs_from_dims(dims):
    dims.primary.check("primary")
    cameras = {PRIMARY: CameraSpec(
        role=PRIMARY, height=dims.primary.height, width=dims.primary.width,
        grid_h=dims.primary.grid_h, grid_w=dims.primary.grid_w,
        embed_dim=dims.primary.embed_dim,
        has_attention=dims.primary.has_attention)}
    if dims.auxiliary is not None:
        dims.auxiliary.check("auxiliary")
        cameras[AUXILIARY] = CameraSpec(
            role=AUXILIARY, height=dims.auxiliary.height,
            width=dims.auxiliary.width, grid_h=dims.auxiliary.grid_h,
            grid_w=dims.auxiliary.grid_w,
            embed_dim=dims.auxiliary.embed_dim,
            has_attention=dims.auxiliary.has_attention)
    if dims.chunk_len <= 0:
        raise BadConfig("chunk_len", "need > 0")
    return cameras


def create(config: Mapping[str, str], dims: BridgeDims) -> int:
    """Build an engine in warmup phase; returns an opaque integer handle."""
    engine_config = EngineConfig.from_mapping(dict(config))
    cameras = _specs_from_dims(dims)
    engine = Engine(engine_config, cameras, dims.chunk_len)
    with _lock:
        handle = next(_next_handle)
        _registry[handle] = _BoundEngine(engine, dims)
    return handle


def close(handle: int) -> None:
    with _lock:
        if _registry.pop(handle, None) is None:
            raise InvalidHandle(f"handle {handle}")


def open_handles() -> int:
    """Number of live handles (leak diagnostics)."""
    return len(_registry)


def _as_f32(buffer, count, name):
    arr = np.asarray(buffer, dtype="<f4").reshape(-1)
    if arr.size != count:
        raise LengthMismatch(f"{name}: expected {count} floats, got {arr.size}")
    return arr


def _payload(cam, depth, emb, attn, name):
    p = cam.patch_count
    depth = _as_f32(depth, cam.height * cam.width,
                    f"depth_{name}").reshape(cam.height, cam.width)
    emb = _as_f32(emb, p * cam.embed_dim,
                  f"emb_{name}").reshape(p, cam.embed_dim)
    attention = (_as_f32(attn, p, f"attn_{name}")
                 if attn is not None else None)
    return CameraPayload(depth_map=depth, embeddings=emb,
                         grid_dims=(cam.grid_h, cam.grid_w),
                         attention=attention)


def _camera_result(out, patch_count):
    stats = out.stats
    return CameraResult(
        embeddings=np.ascontiguousarray(out.embeddings,
                                        dtype=np.float64).reshape(-1),
        sizes=out.sizes.astype(np.int32),
        unmerge=out.unmerge_map.astype(np.int32),
        retained=stats["retained"],
        rho=stats["rho"],
        merges=stats.get("merges", 0),
        phase=stats.get("phase", "-"),
        aux_mode=stats.get("aux_mode", "-"))


def step(handle: int, frame_index: int,
         depth_primary, emb_primary, attn_primary,
         depth_aux, emb_aux, robot) -> StepResult:
    """Advance the engine one frame from flat float32 buffers.

    ``robot`` carries 4 + 4*chunk_len floats: gripper aperture, the
    end-effector position, then the action chunk rows. Buffers for an
    absent auxiliary stream must be None.
    """
    with _lock:
        bound = _registry.get(handle)
    if bound is None:
        raise InvalidHandle(f"handle {handle}")
    dims = bound.dims

    cameras = {PRIMARY: _payload(dims.primary, depth_primary, emb_primary,
                                 attn_primary, "primary")}
    if dims.auxiliary is not None:
        if depth_aux is None or emb_aux is None:
            raise LengthMismatch("auxiliary buffers required by dims")
        cameras[AUXILIARY] = _payload(dims.auxiliary, depth_aux, emb_aux,
                                      None, "auxiliary")
    elif depth_aux is not None or emb_aux is not None:
        raise LengthMismatch("auxiliary buffers passed without auxiliary dims")

    row = _as_f32(robot, 4 + 4 * dims.chunk_len, "robot")
    state = RobotState(gripper_aperture=float(row[0]),
                       ee_position=row[1:4].copy(),
                       action_chunk=row[4:].reshape(dims.chunk_len, 4).copy())
    frame = FrameRecord(frame_index=frame_index, cameras=cameras, robot=state)

    engine = bound.engine
    events_seen = len(engine.events)
    try:
        outputs = engine.step(frame)
    except Exception as exc:
        raise StepError(frame_index, exc) from exc
    events = tuple(f"{e.kind}[{e.detail}]" if e.detail else e.kind
                   for e in engine.events[events_seen:])

    aux_result = None
    if dims.auxiliary is not None:
        aux_result = _camera_result(outputs[AUXILIARY],
                                    dims.auxiliary.patch_count)
    return StepResult(
        frame_index=frame_index,
        primary=_camera_result(outputs[PRIMARY], dims.primary.patch_count),
        auxiliary=aux_result,
        events=events)
