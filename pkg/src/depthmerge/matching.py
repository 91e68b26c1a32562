"""Bipartite soft matching of patch embeddings within a depth region.

Region members are split by checkerboard parity of (row + col); each
source links to its most similar target by cosine similarity. Every choice
point breaks ties toward the lowest index so plans are byte-identical
across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .errors import TooLarge

ORACLE_LIMIT = 16


@dataclass(frozen=True)
class MergePair:
    src: int
    dst: int
    similarity: float
    region_id: int


@dataclass(frozen=True)
class MergePlan:
    pairs_by_region: Dict[int, List[MergePair]]
    m_by_region: Dict[int, int]      # target merge count per region
    frozen_at: int                   # frame whose embeddings built the plan

    def total_target(self):
        return sum(self.m_by_region.values())


def split_sources_targets(member_indices, grid_dims):
    """Checkerboard split; the larger side is the target set B.

    On a tie B takes even parity. Returns (sources, targets), both sorted.
    """
    member_indices = np.asarray(member_indices, dtype=np.int64)
    _, g_w = grid_dims
    parity = (member_indices // g_w + member_indices % g_w) % 2
    even = member_indices[parity == 0]
    odd = member_indices[parity == 1]
    if odd.size > even.size:
        return even, odd
    return odd, even


def merge_count(ratio, region_size, n_sources):
    """floor(ratio * |R|) clamped to the number of available sources."""
    return min(int(math.floor(ratio * region_size)), n_sources)


def build_merge_pairs(member_indices, embeddings, ratio, grid_dims,
                      region_id=0):
    """Pair every source with its best target; return (pairs, m).

    Pairs are ordered by similarity descending, ties by lowest source
    index. Regions with fewer than two members (or an empty side) yield an
    empty plan with m = 0.
    """
    member_indices = np.asarray(member_indices, dtype=np.int64)
    if member_indices.size < 2:
        return [], 0
    sources, targets = split_sources_targets(member_indices, grid_dims)
    if sources.size == 0 or targets.size == 0:
        return [], 0

    src_emb = embeddings[sources].astype(np.float64)
    dst_emb = embeddings[targets].astype(np.float64)
    src_norm = np.linalg.norm(src_emb, axis=1)
    dst_norm = np.linalg.norm(dst_emb, axis=1)
    sims = src_emb @ dst_emb.T
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = sims / np.outer(src_norm, dst_norm)
    sims[~np.isfinite(sims)] = 0.0   # zero-vector rows/cols

    best = sims.argmax(axis=1)       # first max = lowest target index
    pairs = [
        MergePair(src=int(sources[i]), dst=int(targets[best[i]]),
                  similarity=float(sims[i, best[i]]), region_id=region_id)
        for i in range(sources.size)
    ]
    pairs.sort(key=lambda p: (-p.similarity, p.src))
    m = merge_count(ratio, member_indices.size, len(pairs))
    return pairs, m


def matching_oracle(member_indices, embeddings, grid_dims, region_id=0):
    """Plain-Python full-scan reference for build_merge_pairs (tests only)."""
    member_indices = np.asarray(member_indices, dtype=np.int64)
    if member_indices.size > ORACLE_LIMIT:
        raise TooLarge(f"oracle limited to {ORACLE_LIMIT} members")
    if member_indices.size < 2:
        return []
    sources, targets = split_sources_targets(member_indices, grid_dims)
    if sources.size == 0 or targets.size == 0:
        return []

    def cosine(a, b):
        dot = sum(float(x) * float(y) for x, y in zip(a, b))
        na = math.sqrt(sum(float(x) * float(x) for x in a))
        nb = math.sqrt(sum(float(y) * float(y) for y in b))
        if na == 0.0 or nb == 0.0:
            return 0.0
        return dot / (na * nb)

    pairs = []
    for src in sources:
        best_dst, best_sim = None, -math.inf
        for dst in targets:
            sim = cosine(embeddings[src], embeddings[dst])
            if sim > best_sim:
                best_dst, best_sim = int(dst), sim
        pairs.append(MergePair(src=int(src), dst=best_dst,
                               similarity=best_sim, region_id=region_id))
    pairs.sort(key=lambda p: (-p.similarity, p.src))
    return pairs


def build_plan(partition, embeddings, grid_dims, frozen_at):
    """Freeze merge pairs and target counts for every region of a partition."""
    pairs_by_region = {}
    m_by_region = {}
    for region in partition.regions:
        pairs, m = build_merge_pairs(region.member_indices, embeddings,
                                     region.merge_ratio, grid_dims,
                                     region_id=region.region_id)
        pairs_by_region[region.region_id] = pairs
        m_by_region[region.region_id] = m
    return MergePlan(pairs_by_region=pairs_by_region,
                     m_by_region=m_by_region, frozen_at=frozen_at)
