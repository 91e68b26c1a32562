"""Wrist-camera gating: merge during transit, full resolution near grasps.

The two-state machine inspects the predicted action chunk, so transitions
happen before the motion they anticipate. While merging, a one-shot
uniform merge at ratio r_aux runs over patches outside the wrist view's
depth-edge protection; the pair topology is frozen for the episode and
embeddings are refreshed every frame.
"""

from __future__ import annotations

import numpy as np

from .core import patchify_depth
from .errors import EmptyChunk, MissingCamera
from .matching import build_merge_pairs
from .protection import geometric_protection
from .scheduler import TokenSet, to_compressed

MERGE = "merge"
FULL_VIEW = "full_view"


def classify_phase(robot, motion_sig, aperture_stable, current_mode):
    """Decide the wrist-camera mode from the predicted action chunk.

    Merge needs stable aperture plus significant motion; Full-View needs an
    aperture transition plus low motion; anything else holds the mode.
    """
    chunk = robot.action_chunk
    if chunk.shape[0] < 1:
        raise EmptyChunk("action chunk has no rows")
    aperture_transition = float(np.abs(chunk[:, 3]).max()) > aperture_stable
    motion = float(np.linalg.norm(chunk[:, :3], axis=1).max()) > motion_sig
    if motion and not aperture_transition:
        return MERGE
    if aperture_transition and not motion:
        return FULL_VIEW
    return current_mode


class AuxPipeline:
    """State machine plus frozen-topology merge for the auxiliary stream."""

    def __init__(self, config):
        self.config = config
        self.mode = FULL_VIEW
        self.last_transition_frame = None
        self.pairs = None            # frozen on Merge entry
        self.merge_target = 0
        self.protected = None

    def _enter_merge(self, frame_index, payload):
        depths = patchify_depth(payload.depth_map, payload.grid_dims)
        self.protected = geometric_protection(depths, self.config.tau_edge)
        p = payload.embeddings.shape[0]
        mask = np.ones(p, dtype=bool)
        mask[self.protected] = False
        free = np.flatnonzero(mask)
        self.pairs, self.merge_target = build_merge_pairs(
            free, payload.embeddings, self.config.r_aux, payload.grid_dims)
        self.last_transition_frame = frame_index

    def _exit_merge(self, frame_index):
        self.pairs = None
        self.merge_target = 0
        self.protected = None
        self.last_transition_frame = frame_index

    def step(self, frame_index, payload, robot):
        """Advance the state machine one frame and compress the wrist view."""
        if payload is None:
            raise MissingCamera("auxiliary")
        if self.config.no_auxview:
            mode = FULL_VIEW
        else:
            mode = classify_phase(robot, self.config.motion_sig,
                                  self.config.aperture_stable, self.mode)
        if mode != self.mode:
            if mode == MERGE:
                self._enter_merge(frame_index, payload)
            else:
                self._exit_merge(frame_index)
            self.mode = mode

        tokens = TokenSet(payload.embeddings)
        merges = 0
        if self.mode == MERGE and self.pairs:
            for pair in self.pairs[:self.merge_target]:
                tokens.merge(pair.src, pair.dst)
                merges += 1
        return to_compressed(tokens, frame_index,
                             extra_stats={"aux_mode": self.mode,
                                          "merges": merges})
