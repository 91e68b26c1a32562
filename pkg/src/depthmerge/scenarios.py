"""Deterministic synthetic traces for the engine.

Scenes are built from a banded depth layout (far background, mid shelf,
near table) with an object block in the near field. Embeddings are drawn
from per-band prototypes plus fixed per-patch offsets, so patches at the
same depth level are highly similar and merge plans are non-trivial.
Attention peaks on the object. Same (spec, seed) always yields the same
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AUXILIARY, PRIMARY, CameraPayload, CameraSpec, FrameRecord, RobotState
from .errors import InvalidSpec
from .traceio import FORMAT_VERSION, TraceHeader

STATIC_SCENE = "static_scene"
APPROACH_AND_GRASP = "approach_and_grasp"
PERTURBED_OBJECT = "perturbed_object"
MULTI_PHASE = "multi_phase"

SCENARIOS = (STATIC_SCENE, APPROACH_AND_GRASP, PERTURBED_OBJECT, MULTI_PHASE)


@dataclass
class ScenarioSpec:
    scenario: str = STATIC_SCENE
    frame_count: int = 50
    grid_h: int = 16
    grid_w: int = 16
    block: int = 4                   # pixels per patch side
    embed_dim: int = 32
    chunk_len: int = 8
    # banded background (patch rows)
    far_rows: int = 8
    mid_rows: int = 5
    far_depth: float = 3.0
    mid_depth: float = 2.2
    near_depth: float = 0.6
    # object block in the near band
    object_rows: tuple = (13, 16)
    object_cols: tuple = (6, 10)
    object_depth: float = 0.45
    spatial_noise: float = 0.005     # fixed over time, meters
    temporal_noise: float = 0.0      # per-frame depth jitter, meters
    embed_noise: float = 0.05
    # perturbation (perturbed_object / multi_phase)
    perturb_frame: int = 20
    perturb_displacement: float = 0.1
    carrying: bool = False           # hold aperture below the carry threshold
    # motion schedule magnitudes
    transit_step: float = 0.05       # meters per step while moving
    grasp_frame: int = 15
    release_frame: int = 35
    settle_frames: int = 5           # low-motion frames around transitions

    @property
    def height(self):
        return self.grid_h * self.block

    @property
    def width(self):
        return self.grid_w * self.block

    @property
    def patch_count(self):
        return self.grid_h * self.grid_w

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise InvalidSpec(f"unknown scenario '{self.scenario}'")
        if self.frame_count < 1:
            raise InvalidSpec("frame_count must be >= 1")
        if self.spatial_noise < 0 or self.temporal_noise < 0:
            raise InvalidSpec("noise must be >= 0")
        if not (0 <= self.object_rows[0] < self.object_rows[1] <= self.grid_h):
            raise InvalidSpec("object_rows outside grid")
        if not (0 <= self.object_cols[0] < self.object_cols[1] <= self.grid_w):
            raise InvalidSpec("object_cols outside grid")
        if self.far_rows + self.mid_rows >= self.grid_h:
            raise InvalidSpec("bands leave no near rows")
        if self.scenario in (PERTURBED_OBJECT, MULTI_PHASE):
            if not (0 <= self.perturb_frame < self.frame_count):
                raise InvalidSpec("perturb_frame outside trace")
        if self.scenario in (APPROACH_AND_GRASP, MULTI_PHASE):
            if not (1 <= self.grasp_frame < self.release_frame
                    <= self.frame_count):
                raise InvalidSpec("grasp/release frames outside trace")
        return self


def _object_patches(spec):
    rows = np.arange(spec.object_rows[0], spec.object_rows[1])
    cols = np.arange(spec.object_cols[0], spec.object_cols[1])
    return (rows[:, None] * spec.grid_w + cols[None, :]).reshape(-1)


def _band_of_patches(spec):
    """0 = far, 1 = mid, 2 = near, 3 = object, per patch."""
    band = np.full(spec.patch_count, 2, dtype=np.int64)
    rows = np.arange(spec.patch_count) // spec.grid_w
    band[rows < spec.far_rows] = 0
    band[(rows >= spec.far_rows) & (rows < spec.far_rows + spec.mid_rows)] = 1
    band[_object_patches(spec)] = 3
    return band


def _base_patch_depths(spec, rng):
    band = _band_of_patches(spec)
    depth = np.choose(band, [spec.far_depth, spec.mid_depth,
                             spec.near_depth, spec.object_depth])
    depth = depth + rng.normal(0.0, spec.spatial_noise, size=depth.shape)
    return depth.astype(np.float64), band


def _depth_map_from_patches(spec, patch_depths, rng_frame=None):
    grid = patch_depths.reshape(spec.grid_h, spec.grid_w)
    img = np.repeat(np.repeat(grid, spec.block, axis=0), spec.block, axis=1)
    if rng_frame is not None and spec.temporal_noise > 0:
        img = img + rng_frame.normal(0.0, spec.temporal_noise, size=img.shape)
    return np.maximum(img, 1e-3).astype(np.float32)


def _embeddings(spec, band, rng):
    prototypes = rng.normal(0.0, 1.0, size=(4, spec.embed_dim))
    offsets = rng.normal(0.0, spec.embed_noise,
                         size=(spec.patch_count, spec.embed_dim))
    return (prototypes[band] + offsets).astype(np.float32)


def _attention(spec, rng):
    att = np.full(spec.patch_count, 0.01, dtype=np.float64)
    att[_object_patches(spec)] += 1.0
    att = att + rng.uniform(0.0, 0.002, size=att.shape)
    return att.astype(np.float32)


def _motion_profile(spec):
    """Per-frame (position step magnitude, aperture) schedule."""
    n = spec.frame_count
    steps = np.full(n, spec.transit_step, dtype=np.float64)
    aperture = np.ones(n, dtype=np.float64)
    if spec.scenario in (APPROACH_AND_GRASP, MULTI_PHASE):
        s = spec.settle_frames
        g, r = spec.grasp_frame, spec.release_frame
        for t in range(n):
            if g - s <= t < g + s or r - s <= t < r + s:
                steps[t] = 0.0
        aperture[:] = 1.0
        aperture[g:r] = 0.1
        # smooth one-frame transitions so the delta shows up in the chunk
        aperture[g - 1] = 0.55 if g >= 1 else aperture[0]
        aperture[r - 1] = 0.55 if r >= 1 else aperture[-1]
    if spec.carrying:
        aperture[:] = 0.1
    return steps, aperture


def _robot_states(spec, steps, aperture):
    n, a = spec.frame_count, spec.chunk_len
    directions = np.tile(np.array([1.0, 0.0, 0.0]), (n, 1))
    deltas = directions * steps[:, None]
    positions = np.vstack(([0.0, 0.0, 0.3], np.cumsum(deltas, axis=0)[:-1]
                           + np.array([0.0, 0.0, 0.3])))
    states = []
    for t in range(n):
        chunk = np.zeros((a, 4), dtype=np.float64)
        for j in range(a):
            future = t + 1 + j
            if future < n:
                chunk[j, :3] = deltas[future]
                chunk[j, 3] = aperture[future] - aperture[future - 1]
        states.append(RobotState(gripper_aperture=float(aperture[t]),
                                 ee_position=positions[t].astype(np.float32),
                                 action_chunk=chunk.astype(np.float32)))
    return states


def generate_scene(spec, seed):
    """Build (header, frames) for a scenario; deterministic in (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)

    base_depth, band = _base_patch_depths(spec, rng)
    embeddings = _embeddings(spec, band, rng)
    attention = _attention(spec, rng)

    # auxiliary wrist view: close smooth plane, own prototypes
    aux_depth = (0.3 + rng.normal(0.0, spec.spatial_noise,
                                  size=spec.patch_count))
    aux_band = np.zeros(spec.patch_count, dtype=np.int64)
    aux_embeddings = _embeddings(spec, aux_band, rng)

    steps, aperture = _motion_profile(spec)
    robots = _robot_states(spec, steps, aperture)

    object_idx = _object_patches(spec)
    frames = []
    for t in range(spec.frame_count):
        depth = base_depth.copy()
        if (spec.scenario in (PERTURBED_OBJECT, MULTI_PHASE)
                and t >= spec.perturb_frame):
            depth[object_idx] += spec.perturb_displacement
        frame_rng = (np.random.default_rng((seed, t))
                     if spec.temporal_noise > 0 else None)
        primary = CameraPayload(
            depth_map=_depth_map_from_patches(spec, depth, frame_rng),
            embeddings=embeddings,
            grid_dims=(spec.grid_h, spec.grid_w),
            attention=attention)
        aux = CameraPayload(
            depth_map=_depth_map_from_patches(spec, aux_depth, None),
            embeddings=aux_embeddings,
            grid_dims=(spec.grid_h, spec.grid_w),
            attention=None)
        frames.append(FrameRecord(frame_index=t,
                                  cameras={PRIMARY: primary, AUXILIARY: aux},
                                  robot=robots[t]))

    cameras = {
        PRIMARY: CameraSpec(role=PRIMARY, height=spec.height,
                            width=spec.width, grid_h=spec.grid_h,
                            grid_w=spec.grid_w, embed_dim=spec.embed_dim,
                            has_attention=True),
        AUXILIARY: CameraSpec(role=AUXILIARY, height=spec.height,
                              width=spec.width, grid_h=spec.grid_h,
                              grid_w=spec.grid_w, embed_dim=spec.embed_dim,
                              has_attention=False),
    }
    header = TraceHeader(version=FORMAT_VERSION, cameras=cameras,
                         chunk_len=spec.chunk_len,
                         frame_count=spec.frame_count,
                         generator={"seed": seed, "scenario": spec.scenario})
    return header, frames
