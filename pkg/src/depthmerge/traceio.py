"""Trace directory format: a JSON manifest plus raw little-endian f32 blobs.

Layout per trace directory:
    manifest                 UTF-8 JSON with the header fields
    depth_<role>.bin         frames x H x W, row-major f32
    emb_<role>.bin           frames x P x D
    attn_<role>.bin          frames x P (only when the camera has attention)
    robot.bin                frames x (4 + 4*A): aperture, ee xyz, chunk rows

Everything is written and read byte-for-byte, so a round trip is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import numpy as np

from .core import CameraPayload, CameraSpec, FrameRecord, RobotState
from .errors import TraceIOError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TraceHeader:
    version: int
    cameras: Dict[str, CameraSpec]   # keyed by role
    chunk_len: int                   # A
    frame_count: int
    generator: dict                  # seed, scenario name, free-form


def _blob_path(trace_dir, kind, role=None):
    name = f"{kind}_{role}.bin" if role else f"{kind}.bin"
    return Path(trace_dir) / name


def write_trace(trace_dir, header, frames):
    trace_dir = Path(trace_dir)
    trace_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": header.version,
        "chunk_len": header.chunk_len,
        "frame_count": header.frame_count,
        "generator": header.generator,
        "cameras": [
            {"role": spec.role, "height": spec.height, "width": spec.width,
             "grid_h": spec.grid_h, "grid_w": spec.grid_w,
             "embed_dim": spec.embed_dim,
             "has_attention": spec.has_attention}
            for spec in header.cameras.values()
        ],
    }
    (trace_dir / "manifest").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    buffers = {}
    for role, spec in header.cameras.items():
        buffers[("depth", role)] = []
        buffers[("emb", role)] = []
        if spec.has_attention:
            buffers[("attn", role)] = []
    robot_rows = []
    for frame in frames:
        for role, spec in header.cameras.items():
            payload = frame.cameras[role]
            buffers[("depth", role)].append(
                payload.depth_map.astype("<f4").ravel())
            buffers[("emb", role)].append(
                payload.embeddings.astype("<f4").ravel())
            if spec.has_attention:
                buffers[("attn", role)].append(
                    payload.attention.astype("<f4").ravel())
        robot = frame.robot
        robot_rows.append(np.concatenate((
            [np.float32(robot.gripper_aperture)],
            robot.ee_position.astype("<f4"),
            robot.action_chunk.astype("<f4").ravel())))
    for (kind, role), chunks in buffers.items():
        _blob_path(trace_dir, kind, role).write_bytes(
            np.concatenate(chunks).astype("<f4").tobytes())
    _blob_path(trace_dir, "robot").write_bytes(
        np.concatenate(robot_rows).astype("<f4").tobytes())


def read_header(trace_dir):
    trace_dir = Path(trace_dir)
    manifest_path = trace_dir / "manifest"
    if not manifest_path.is_file():
        raise TraceIOError(f"no manifest in {trace_dir}")
    try:
        data = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TraceIOError(f"manifest unparseable: {exc}") from exc
    cameras = {}
    for cam in data["cameras"]:
        spec = CameraSpec(role=cam["role"], height=cam["height"],
                          width=cam["width"], grid_h=cam["grid_h"],
                          grid_w=cam["grid_w"], embed_dim=cam["embed_dim"],
                          has_attention=cam["has_attention"])
        if spec.role in cameras:
            raise TraceIOError(f"duplicate camera role '{spec.role}'")
        cameras[spec.role] = spec
    for key in ("version", "chunk_len", "frame_count"):
        if key not in data:
            raise TraceIOError(f"manifest missing '{key}'")
    return TraceHeader(version=data["version"], cameras=cameras,
                       chunk_len=data["chunk_len"],
                       frame_count=data["frame_count"],
                       generator=data.get("generator", {}))


def _load_blob(path, expected_count):
    if not path.is_file():
        raise TraceIOError(f"missing blob {path.name}")
    arr = np.frombuffer(path.read_bytes(), dtype="<f4")
    if arr.size != expected_count:
        raise TraceIOError(
            f"{path.name}: expected {expected_count} floats, got {arr.size}")
    return arr


def read_trace(trace_dir):
    """Load a trace directory; returns (header, list of FrameRecord)."""
    trace_dir = Path(trace_dir)
    header = read_header(trace_dir)
    n = header.frame_count
    a = header.chunk_len

    streams = {}
    for role, spec in header.cameras.items():
        p = spec.patch_count
        streams[("depth", role)] = _load_blob(
            _blob_path(trace_dir, "depth", role),
            n * spec.height * spec.width).reshape(n, spec.height, spec.width)
        streams[("emb", role)] = _load_blob(
            _blob_path(trace_dir, "emb", role),
            n * p * spec.embed_dim).reshape(n, p, spec.embed_dim)
        if spec.has_attention:
            streams[("attn", role)] = _load_blob(
                _blob_path(trace_dir, "attn", role), n * p).reshape(n, p)
    robot = _load_blob(_blob_path(trace_dir, "robot"),
                       n * (4 + 4 * a)).reshape(n, 4 + 4 * a)

    frames: List[FrameRecord] = []
    for t in range(n):
        cameras = {}
        for role, spec in header.cameras.items():
            attention = (streams[("attn", role)][t]
                         if spec.has_attention else None)
            cameras[role] = CameraPayload(
                depth_map=streams[("depth", role)][t],
                embeddings=streams[("emb", role)][t],
                grid_dims=(spec.grid_h, spec.grid_w),
                attention=attention)
        row = robot[t]
        state = RobotState(gripper_aperture=float(row[0]),
                           ee_position=row[1:4].copy(),
                           action_chunk=row[4:].reshape(a, 4).copy())
        frames.append(FrameRecord(frame_index=t, cameras=cameras, robot=state))
    return header, frames
