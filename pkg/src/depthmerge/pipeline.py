"""Cyclic primary-view engine plus the auxiliary pipeline, stepped per frame.

Cycle: warmup (full resolution, attention accumulation) -> partition and
plan freeze -> progressive merging -> depth-change detection (region
restore, full reinitialization) -> back to warmup on reinit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import dynamics, matching, partition, protection, scheduler
from .auxview import AuxPipeline
from .core import AUXILIARY, PRIMARY, patchify_depth, validate_frame
from .errors import MissingCamera, NonMonotonicFrame
from .partition import MERGING, RESTORED

WARMUP = "warmup"
STEADY = "steady"

EVENT_INIT = "init"
EVENT_RESTORE = "restore"
EVENT_REFREEZE = "refreeze"
EVENT_REINIT = "reinit"
EVENT_AUX_TRANSITION = "aux_transition"


@dataclass(frozen=True)
class Event:
    frame_index: int
    kind: str
    detail: str = ""


class Engine:
    """Single-episode engine; one instance per trace, stepped in order."""

    def __init__(self, config, cameras, chunk_len):
        config.validate()
        if PRIMARY not in cameras:
            raise MissingCamera(PRIMARY)
        self.config = config
        self.cameras = dict(cameras)
        self.chunk_len = chunk_len
        self.phase = WARMUP
        self.warmup_done = 0
        self.last_frame_index = None

        p = self.cameras[PRIMARY].patch_count
        self.accumulator = protection.AttentionAccumulator.empty(
            p, config.n_warmup)
        self.protection = None
        self.partition = None
        self.plan = None
        self.tokens = None
        self.progress = None
        self.history = dynamics.DepthHistory(config.dyn_window)
        self.latest_init_frame = None
        # restored region id -> consecutive calm-frame count (hysteresis)
        self.calm_frames = {}
        self.aux = (AuxPipeline(config)
                    if AUXILIARY in self.cameras else None)
        self.events = []

    # -- internal helpers -------------------------------------------------

    def _log(self, frame_index, kind, detail=""):
        self.events.append(Event(frame_index, kind, detail))

    def _full_resolution(self, frame_index, payload, extra):
        tokens = scheduler.TokenSet(payload.embeddings)
        return scheduler.to_compressed(tokens, frame_index, extra_stats=extra)

    def _reset_to_warmup(self):
        p = self.cameras[PRIMARY].patch_count
        self.phase = WARMUP
        self.warmup_done = 0
        self.accumulator = protection.AttentionAccumulator.empty(
            p, self.config.n_warmup)
        self.protection = None
        self.partition = None
        self.plan = None
        self.tokens = None
        self.progress = None
        self.history.reset()
        self.calm_frames = {}

    def _initialize(self, frame_index, payload, depths):
        """Close warmup: build protection, partition, ratios, frozen plans."""
        cfg = self.config
        p_att = protection.semantic_protection(self.accumulator)
        p_edge = protection.geometric_protection(depths, cfg.tau_edge)
        self.protection = protection.combine(
            p_att, p_edge, frame_index, depths.values.size,
            no_protection=cfg.no_protection)
        part = partition.build_partition(
            depths, self.protection.union, cfg.n_clusters, cfg.seed)
        self.partition = partition.assign_merge_ratios(
            part, cfg.r_min, cfg.r_max, uniform_ratio=cfg.uniform_ratio)
        self.plan = matching.build_plan(
            self.partition, payload.embeddings, payload.grid_dims,
            frozen_at=frame_index)
        self.tokens = scheduler.TokenSet(payload.embeddings)
        # t_0 is the first post-initialization frame; it gets zero merges
        self.progress = scheduler.MergeProgress.fresh(
            [r.region_id for r in self.partition.regions],
            t_0=frame_index + 1, window=cfg.window)
        self.history.snapshot_init(depths, frame_index)
        self.latest_init_frame = frame_index
        self.phase = STEADY
        self._log(frame_index, EVENT_INIT,
                  f"protected={self.protection.union.size} "
                  f"regions={self.partition.effective_k}")

    def _warmup_step(self, frame_index, payload, depths):
        if payload.attention is None:
            raise MissingCamera(
                f"{PRIMARY} attention required during warmup")
        protection.accumulate_attention(self.accumulator, payload.attention)
        self.warmup_done += 1
        self.history.push(depths)
        out = self._full_resolution(frame_index, payload,
                                    {"phase": WARMUP, "merges": 0})
        if self.warmup_done == self.config.n_warmup:
            self._initialize(frame_index, payload, depths)
        return out

    def _restore_region(self, frame_index, region, payload):
        self.tokens.split(region.member_indices, payload.embeddings)
        self.partition = replace(
            self.partition,
            regions=[replace(r, status=RESTORED)
                     if r.region_id == region.region_id else r
                     for r in self.partition.regions])
        self.progress.applied[region.region_id] = 0
        self.plan.pairs_by_region[region.region_id] = []
        self.plan.m_by_region[region.region_id] = 0
        self.calm_frames[region.region_id] = 0
        self._log(frame_index, EVENT_RESTORE,
                  f"region={region.region_id} size={region.member_indices.size}")

    def _refreeze_region(self, frame_index, region, payload):
        """Restored region re-converged: freeze a new plan, restart schedule."""
        pairs, m = matching.build_merge_pairs(
            region.member_indices, payload.embeddings, region.merge_ratio,
            payload.grid_dims, region_id=region.region_id)
        self.plan.pairs_by_region[region.region_id] = pairs
        self.plan.m_by_region[region.region_id] = m
        self.progress.applied[region.region_id] = 0
        self.progress.t_0[region.region_id] = frame_index
        self.partition = replace(
            self.partition,
            regions=[replace(r, status=MERGING)
                     if r.region_id == region.region_id else r
                     for r in self.partition.regions])
        del self.calm_frames[region.region_id]
        self._log(frame_index, EVENT_REFREEZE, f"region={region.region_id}")

    def _steady_step(self, frame_index, payload, depths):
        cfg = self.config
        self.history.push(depths)

        if dynamics.check_reinit(self.history, self.protection, self._robot,
                                 cfg.delta_reinit, cfg.carry_aperture,
                                 no_reinit=cfg.no_reinit):
            self._log(frame_index, EVENT_REINIT)
            self._reset_to_warmup()
            return self._warmup_step(frame_index, payload, depths)

        flags = dynamics.update_static_flags(self.history, cfg.epsilon)
        for region in list(self.partition.regions):
            if region.status == MERGING:
                if dynamics.check_restore(region, flags, cfg.gamma):
                    self._restore_region(frame_index, region, payload)
            else:
                frac = dynamics.nonstatic_fraction(flags,
                                                   region.member_indices)
                if frac <= cfg.gamma / 2:
                    self.calm_frames[region.region_id] += 1
                else:
                    self.calm_frames[region.region_id] = 0
                if self.calm_frames[region.region_id] >= cfg.dyn_window:
                    self._refreeze_region(frame_index, region, payload)

        self.tokens.refresh(payload.embeddings)
        merges = scheduler.apply_merges(
            self.tokens, self.plan, self.progress, frame_index,
            one_shot=cfg.one_shot, latest_init_frame=self.latest_init_frame)
        status = {r.region_id: r.status for r in self.partition.regions}
        return scheduler.to_compressed(
            self.tokens, frame_index,
            extra_stats={"phase": STEADY, "merges": merges,
                         "region_status": status})

    # -- public API -------------------------------------------------------

    def step(self, frame):
        """Process one frame; returns {camera role: CompressedTokens}."""
        if (self.last_frame_index is not None
                and frame.frame_index <= self.last_frame_index):
            raise NonMonotonicFrame(
                f"frame {frame.frame_index} after {self.last_frame_index}")
        validate_frame(frame, self.cameras, self.chunk_len)
        self.last_frame_index = frame.frame_index
        self._robot = frame.robot

        payload = frame.cameras[PRIMARY]
        depths = patchify_depth(payload.depth_map, payload.grid_dims)
        if self.phase == WARMUP:
            primary_out = self._warmup_step(frame.frame_index, payload, depths)
        else:
            primary_out = self._steady_step(frame.frame_index, payload, depths)

        outputs = {PRIMARY: primary_out}
        if self.aux is not None:
            before = self.aux.mode
            aux_out = self.aux.step(frame.frame_index,
                                    frame.cameras.get(AUXILIARY), frame.robot)
            if self.aux.mode != before:
                self._log(frame.frame_index, EVENT_AUX_TRANSITION,
                          f"{before}->{self.aux.mode}")
            outputs[AUXILIARY] = aux_out
        return outputs


def predicted_speedup(retained_per_frame, full_per_frame,
                      c_quad=1.0, c_lin=100.0, c_fixed=0.0):
    """Cost-model speedup proxy over a trace (arbitrary units).

    Per-frame cost is c_quad*R^2 + c_lin*R + c_fixed; the ratio compares a
    run at full resolution against the observed retained counts.
    """
    def cost(r):
        return c_quad * r * r + c_lin * r + c_fixed

    full = sum(cost(r) for r in full_per_frame)
    reduced = sum(cost(r) for r in retained_per_frame)
    if reduced == 0:
        return float("inf")
    return full / reduced
