"""Progressive merge execution with size-weighted averaging.

A TokenSet tracks, for every original patch, which retained entry it has
been folded into. Entries keep integer size weights (member counts) so the
weighted mean stays an unbiased summary of the members, and embeddings are
refreshed from the current frame each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import PlanStale


def merges_due(t, t_0, window, m_k, one_shot=False):
    """Cumulative merges scheduled for a region by frame t.

    Linear ramp over `window` frames starting the frame after t_0; the
    one-shot ablation executes everything at t_0.
    """
    if t < t_0:
        return 0
    if one_shot:
        return m_k
    elapsed = min(t - t_0, window)
    return int(math.floor(elapsed / window * m_k))


@dataclass
class MergeProgress:
    applied: Dict[int, int]          # region id -> merges executed
    t_0: Dict[int, int]              # region id -> schedule start frame
    window: int

    @classmethod
    def fresh(cls, region_ids, t_0, window):
        return cls(applied={rid: 0 for rid in region_ids},
                   t_0={rid: t_0 for rid in region_ids}, window=window)


class TokenSet:
    """Mutable per-camera merge state: original patches -> retained entries."""

    def __init__(self, embeddings):
        embeddings = np.asarray(embeddings, dtype=np.float64)
        self.patch_count, self.embed_dim = embeddings.shape
        # root patch index of the entry each patch belongs to
        self.root_of = np.arange(self.patch_count, dtype=np.int64)
        # root -> sorted member list
        self.members = {i: [i] for i in range(self.patch_count)}
        # root -> current embedding
        self.embedding = {i: embeddings[i].copy()
                          for i in range(self.patch_count)}

    @property
    def retained(self):
        return len(self.members)

    def size_of(self, root):
        return len(self.members[root])

    def merge(self, src, dst):
        """Fold the entry containing src into the entry containing dst."""
        src_root = int(self.root_of[src])
        dst_root = int(self.root_of[dst])
        if src_root == dst_root:
            return
        s_src = self.size_of(src_root)
        s_dst = self.size_of(dst_root)
        merged = (s_src * self.embedding[src_root]
                  + s_dst * self.embedding[dst_root]) / (s_src + s_dst)
        self.embedding[dst_root] = merged
        moved = self.members.pop(src_root)
        self.members[dst_root] = sorted(self.members[dst_root] + moved)
        del self.embedding[src_root]
        for idx in moved:
            self.root_of[idx] = dst_root

    def split(self, patch_indices, embeddings):
        """Restore the given patches' entries to singletons (current frame)."""
        embeddings = np.asarray(embeddings, dtype=np.float64)
        touched = sorted({int(self.root_of[i]) for i in patch_indices})
        for root in touched:
            freed = self.members.pop(root)
            del self.embedding[root]
            for idx in freed:
                self.root_of[idx] = idx
                self.members[idx] = [idx]
                self.embedding[idx] = embeddings[idx].copy()

    def refresh(self, embeddings):
        """Recompute every entry as the mean of its members' fresh rows."""
        embeddings = np.asarray(embeddings, dtype=np.float64)
        for root, member_list in self.members.items():
            if len(member_list) == 1:
                self.embedding[root] = embeddings[root].copy()
            else:
                self.embedding[root] = embeddings[member_list].mean(axis=0)

    def weighted_sum(self):
        """Sum of size * embedding over entries (conservation check)."""
        total = np.zeros(self.embed_dim, dtype=np.float64)
        for root in sorted(self.members):
            total += self.size_of(root) * self.embedding[root]
        return total


@dataclass(frozen=True)
class CompressedTokens:
    embeddings: np.ndarray           # (R, D), rows ordered by root index
    sizes: np.ndarray                # (R,)
    unmerge_map: np.ndarray          # (P,) original index -> retained row
    frame_index: int
    stats: dict = field(default_factory=dict)


def apply_merges(tokens, plan, progress, t, one_shot=False,
                 latest_init_frame=None):
    """Execute the pairs newly due at frame t, in frozen plan order."""
    if latest_init_frame is not None and plan.frozen_at < latest_init_frame:
        raise PlanStale(
            f"plan frozen at {plan.frozen_at} predates init {latest_init_frame}")
    executed = 0
    for rid, pairs in sorted(plan.pairs_by_region.items()):
        due = merges_due(t, progress.t_0[rid], progress.window,
                         plan.m_by_region[rid], one_shot)
        done = progress.applied[rid]
        for pair in pairs[done:due]:
            tokens.merge(pair.src, pair.dst)
            executed += 1
        progress.applied[rid] = max(done, due)
    return executed


def to_compressed(tokens, frame_index, extra_stats=None):
    """Snapshot a TokenSet as an ordered CompressedTokens record."""
    roots = sorted(tokens.members)
    row_of = {root: row for row, root in enumerate(roots)}
    emb = np.stack([tokens.embedding[r] for r in roots])
    sizes = np.array([tokens.size_of(r) for r in roots], dtype=np.int64)
    unmerge = np.array([row_of[int(tokens.root_of[i])]
                        for i in range(tokens.patch_count)], dtype=np.int64)
    stats = {"retained": len(roots),
             "rho": len(roots) / tokens.patch_count}
    if extra_stats:
        stats.update(extra_stats)
    return CompressedTokens(embeddings=emb, sizes=sizes, unmerge_map=unmerge,
                            frame_index=frame_index, stats=stats)
