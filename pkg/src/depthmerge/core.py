"""Domain types, frame validation, and depth-to-patch pooling.

All arrays are numpy. Patch order is row-major: patch i sits at
(row = i // G_w, col = i % G_w) on the (G_h, G_w) grid.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional

import numpy as np

from .errors import (
    BadConfig,
    DimensionMismatch,
    IndivisibleGrid,
    MissingCamera,
    NonFiniteValue,
)

PRIMARY = "primary"
AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class CameraSpec:
    """Declared dimensions for one camera stream of a trace."""

    role: str
    height: int
    width: int
    grid_h: int
    grid_w: int
    embed_dim: int
    has_attention: bool = False

    @property
    def patch_count(self):
        return self.grid_h * self.grid_w


@dataclass(frozen=True)
class RobotState:
    gripper_aperture: float          # normalized, 1 = fully open
    ee_position: np.ndarray          # (3,) meters
    action_chunk: np.ndarray         # (A, 4): dx, dy, dz, d_aperture


@dataclass(frozen=True)
class CameraPayload:
    depth_map: np.ndarray            # (H, W) meters
    embeddings: np.ndarray           # (P, D)
    grid_dims: tuple                 # (G_h, G_w)
    attention: Optional[np.ndarray] = None  # (P,) head-averaged scores


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    cameras: Mapping[str, CameraPayload]
    robot: RobotState


@dataclass(frozen=True)
class PatchDepths:
    values: np.ndarray               # (P,) meters
    grid_dims: tuple


@dataclass(frozen=True)
class EngineConfig:
    n_warmup: int = 5                # warmup frame count
    n_clusters: int = 3              # depth clusters K
    window: int = 5                  # progressive merge window W
    r_min: float = 0.1
    r_max: float = 0.7
    tau_edge: float = 0.05           # meters per patch step
    epsilon: float = 0.01            # static-depth threshold, meters
    gamma: float = 0.3               # restore fraction
    delta_reinit: float = 0.05       # meters
    dyn_window: int = 5              # depth-history window L
    seed: int = 0
    uniform_ratio: bool = False
    one_shot: bool = False
    no_protection: bool = False
    no_reinit: bool = False
    no_auxview: bool = False
    motion_sig: float = 0.01         # meters per chunk step
    aperture_stable: float = 0.05
    r_aux: float = 0.6
    carry_aperture: float = 0.2

    def validate(self):
        if not (0.0 <= self.r_min <= self.r_max <= 1.0):
            raise BadConfig("r_min", "need 0 <= r_min <= r_max <= 1")
        if self.n_warmup < 1:
            raise BadConfig("n_warmup", "need >= 1")
        if self.n_clusters < 1:
            raise BadConfig("n_clusters", "need >= 1")
        if self.window < 1:
            raise BadConfig("window", "need >= 1")
        if not (0.0 < self.gamma < 1.0):
            raise BadConfig("gamma", "need gamma in (0, 1)")
        if self.dyn_window < 1:
            raise BadConfig("dyn_window", "need >= 1")
        for key in ("tau_edge", "epsilon", "delta_reinit", "motion_sig",
                    "aperture_stable", "carry_aperture"):
            if getattr(self, key) <= 0:
                raise BadConfig(key, "need > 0")
        if not (0.0 <= self.r_aux <= 1.0):
            raise BadConfig("r_aux", "need in [0, 1]")
        return self

    @classmethod
    def from_mapping(cls, mapping):
        """Build a config from string key/value pairs; unknown keys fail."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise BadConfig(key, "unknown key")
            current = getattr(cls(), key)
            if isinstance(current, bool):
                val = str(raw).strip().lower()
                if val in ("1", "true", "yes", "on"):
                    kwargs[key] = True
                elif val in ("0", "false", "no", "off"):
                    kwargs[key] = False
                else:
                    raise BadConfig(key, f"not a boolean: {raw!r}")
            elif isinstance(current, int):
                try:
                    kwargs[key] = int(raw)
                except ValueError:
                    raise BadConfig(key, f"not an integer: {raw!r}") from None
            else:
                try:
                    kwargs[key] = float(raw)
                except ValueError:
                    raise BadConfig(key, f"not a number: {raw!r}") from None
        return cls(**kwargs).validate()

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs).validate()


def validate_frame(frame, cameras, chunk_len):
    """Check one frame against the declared per-camera dimensions.

    `cameras` maps role -> CameraSpec; `chunk_len` is the declared action
    chunk length A. Returns the frame unchanged on success.
    """
    for role, spec in cameras.items():
        if role not in frame.cameras:
            raise MissingCamera(role)
        payload = frame.cameras[role]
        if payload.depth_map.shape != (spec.height, spec.width):
            raise DimensionMismatch(
                f"{role}.depth_map", (spec.height, spec.width),
                payload.depth_map.shape)
        if payload.grid_dims != (spec.grid_h, spec.grid_w):
            raise DimensionMismatch(
                f"{role}.grid_dims", (spec.grid_h, spec.grid_w),
                payload.grid_dims)
        p = spec.patch_count
        if payload.embeddings.shape != (p, spec.embed_dim):
            raise DimensionMismatch(
                f"{role}.embeddings", (p, spec.embed_dim),
                payload.embeddings.shape)
        if not np.isfinite(payload.depth_map).all():
            bad = np.argwhere(~np.isfinite(payload.depth_map))[0]
            raise NonFiniteValue(f"{role}.depth_map", tuple(int(v) for v in bad))
        if (payload.depth_map <= 0).any():
            bad = np.argwhere(payload.depth_map <= 0)[0]
            raise NonFiniteValue(f"{role}.depth_map", tuple(int(v) for v in bad))
        if not np.isfinite(payload.embeddings).all():
            bad = np.argwhere(~np.isfinite(payload.embeddings))[0]
            raise NonFiniteValue(f"{role}.embeddings", tuple(int(v) for v in bad))
        if payload.attention is not None:
            if payload.attention.shape != (p,):
                raise DimensionMismatch(
                    f"{role}.attention", (p,), payload.attention.shape)
            if not np.isfinite(payload.attention).all():
                bad = int(np.argwhere(~np.isfinite(payload.attention))[0][0])
                raise NonFiniteValue(f"{role}.attention", bad)
    robot = frame.robot
    if robot.ee_position.shape != (3,):
        raise DimensionMismatch("robot.ee_position", (3,), robot.ee_position.shape)
    if robot.action_chunk.shape != (chunk_len, 4):
        raise DimensionMismatch(
            "robot.action_chunk", (chunk_len, 4), robot.action_chunk.shape)
    if not np.isfinite(robot.action_chunk).all():
        bad = np.argwhere(~np.isfinite(robot.action_chunk))[0]
        raise NonFiniteValue("robot.action_chunk", tuple(int(v) for v in bad))
    if not np.isfinite(robot.ee_position).all():
        bad = int(np.argwhere(~np.isfinite(robot.ee_position))[0][0])
        raise NonFiniteValue("robot.ee_position", bad)
    if not (0.0 <= robot.gripper_aperture <= 1.0):
        raise NonFiniteValue("robot.gripper_aperture", 0)
    return frame


def patchify_depth(depth_map, grid_dims):
    """Reduce a pixel depth map to per-patch mean depths (row-major)."""
    g_h, g_w = grid_dims
    h, w = depth_map.shape
    if h % g_h != 0 or w % g_w != 0:
        raise IndivisibleGrid((h, w), grid_dims)
    b_h, b_w = h // g_h, w // g_w
    blocks = depth_map.astype(np.float64).reshape(g_h, b_h, g_w, b_w)
    values = blocks.mean(axis=(1, 3)).reshape(-1)
    return PatchDepths(values=values, grid_dims=(g_h, g_w))
