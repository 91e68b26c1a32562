"""Per-patch depth stability tracking, region restore, and reinit triggers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .partition import MERGING


class DepthHistory:
    """Sliding window of patch depths plus the initialization snapshot."""

    def __init__(self, window):
        self.window = window
        self.buffer = deque(maxlen=window)
        self.init_values = None
        self.t_init = None

    def push(self, patch_depths):
        self.buffer.append(np.asarray(patch_depths.values, dtype=np.float64))

    def snapshot_init(self, patch_depths, t_init):
        self.init_values = np.asarray(patch_depths.values,
                                      dtype=np.float64).copy()
        self.t_init = t_init

    def reset(self):
        self.buffer.clear()
        self.init_values = None
        self.t_init = None

    @property
    def latest(self):
        return self.buffer[-1] if self.buffer else None


@dataclass(frozen=True)
class StaticFlags:
    static: np.ndarray               # (P,) bool


def update_static_flags(history, epsilon):
    """A patch is static iff its depth range over the window is < epsilon.

    With fewer than two frames in the buffer everything counts as static.
    """
    if len(history.buffer) < 2:
        n = history.buffer[0].size if history.buffer else 0
        return StaticFlags(static=np.ones(n, dtype=bool))
    stacked = np.stack(list(history.buffer))
    spread = stacked.max(axis=0) - stacked.min(axis=0)
    return StaticFlags(static=spread < epsilon)


def nonstatic_fraction(flags, member_indices):
    member_indices = np.asarray(member_indices, dtype=np.int64)
    if member_indices.size == 0:
        return 0.0
    moving = np.count_nonzero(~flags.static[member_indices])
    return moving / member_indices.size


def check_restore(region, flags, gamma):
    """Restore a merging region iff its non-static fraction strictly exceeds gamma."""
    if region.status != MERGING:
        return False
    return nonstatic_fraction(flags, region.member_indices) > gamma


def check_reinit(history, protection, robot, delta_reinit, carry_aperture,
                 no_reinit=False):
    """Reinitialize iff mean |depth - init depth| over attention-protected
    patches strictly exceeds delta_reinit, and only while the gripper is
    not carrying (aperture >= carry_aperture)."""
    if no_reinit:
        return False
    if robot.gripper_aperture < carry_aperture:
        return False
    att = protection.att_indices
    if att.size == 0:
        return False
    current = history.latest
    if current is None or history.init_values is None:
        return False
    mean_change = float(np.abs(current[att] - history.init_values[att]).mean())
    return mean_change > delta_reinit
