"""Dual protection: attention-selected patches union depth-edge patches.

Both sets are built once per (re)initialization from the warmup frames and
held fixed until the next initialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IndexOutOfRange,
    LengthMismatch,
    NegativeAttention,
    WarmupComplete,
    WarmupIncomplete,
)


@dataclass
class AttentionAccumulator:
    sums: np.ndarray                 # (P,) accumulated head-averaged scores
    frames_seen: int
    n_warmup: int

    @classmethod
    def empty(cls, patch_count, n_warmup):
        return cls(sums=np.zeros(patch_count, dtype=np.float64),
                   frames_seen=0, n_warmup=n_warmup)


def accumulate_attention(acc, attention):
    """Add one frame's head-averaged attention vector into the accumulator."""
    attention = np.asarray(attention, dtype=np.float64)
    if attention.shape != acc.sums.shape:
        raise LengthMismatch(
            f"attention length {attention.shape} != {acc.sums.shape}")
    if (attention < 0).any():
        idx = int(np.argmax(attention < 0))
        raise NegativeAttention(f"attention[{idx}] = {attention[idx]}")
    if acc.frames_seen >= acc.n_warmup:
        raise WarmupComplete(f"already saw {acc.frames_seen} warmup frames")
    acc.sums = acc.sums + attention
    acc.frames_seen += 1
    return acc


def semantic_protection(acc):
    """Patches whose warmup-averaged attention strictly exceeds mean + std.

    Std is the population standard deviation, so constant attention yields
    an empty set.
    """
    if acc.frames_seen != acc.n_warmup:
        raise WarmupIncomplete(
            f"saw {acc.frames_seen} of {acc.n_warmup} warmup frames")
    avg = acc.sums / acc.frames_seen
    mu = float(avg.mean())
    sigma = float(avg.std())
    return np.flatnonzero(avg > mu + sigma)


def _grad_axis(grid, axis):
    if grid.shape[axis] < 2:
        return np.zeros_like(grid)
    return np.gradient(grid, axis=axis)


def geometric_protection(depths, tau_edge):
    """Patches whose depth-gradient magnitude strictly exceeds tau_edge.

    Central differences on the patch grid, one-sided at borders, L2
    magnitude, in meters per patch step.
    """
    g_h, g_w = depths.grid_dims
    grid = depths.values.reshape(g_h, g_w)
    gy = _grad_axis(grid, 0)
    gx = _grad_axis(grid, 1)
    mag = np.hypot(gx, gy).reshape(-1)
    return np.flatnonzero(mag > tau_edge)


@dataclass(frozen=True)
class ProtectionSet:
    att_indices: np.ndarray          # sorted, duplicate-free
    edge_indices: np.ndarray
    union: np.ndarray
    created_at: int                  # initialization frame index


def combine(p_att, p_edge, t_init, patch_count, no_protection=False):
    """Union the semantic and geometric sets into one ProtectionSet.

    With the no-protection ablation flag the union is forced empty while the
    component sets are kept for inspection.
    """
    p_att = np.unique(np.asarray(p_att, dtype=np.int64))
    p_edge = np.unique(np.asarray(p_edge, dtype=np.int64))
    for name, arr in (("att", p_att), ("edge", p_edge)):
        if arr.size and (arr.min() < 0 or arr.max() >= patch_count):
            raise IndexOutOfRange(f"{name} index outside [0, {patch_count})")
    if no_protection:
        union = np.empty(0, dtype=np.int64)
    else:
        union = np.union1d(p_att, p_edge)
    return ProtectionSet(att_indices=p_att, edge_indices=p_edge,
                         union=union, created_at=t_init)
