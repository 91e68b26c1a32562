"""Depth clustering of unprotected patches and merge-ratio assignment.

Clustering is 1-D k-means solved exactly: the optimum in one dimension is
contiguous in sorted order, so dynamic programming over split points finds
the global SSE minimum deterministically (no random initialization, no
local optima). Region ids ascend with centroid depth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List

import numpy as np

PROTECTED = -1

MERGING = "merging"
RESTORED = "restored"


@dataclass(frozen=True)
class Region:
    region_id: int
    member_indices: np.ndarray       # sorted patch indices
    mean_depth: float
    merge_ratio: float = 0.0
    status: str = MERGING


@dataclass(frozen=True)
class RegionPartition:
    labels: np.ndarray               # (P,), PROTECTED or region id
    regions: List[Region]
    d_min: float                     # min over region mean depths
    d_max: float
    requested_k: int
    effective_k: int


def kmeans_depth(values, k, seed=0):
    """Cluster scalar depths into at most k groups, minimum total SSE.

    Returns (labels, centroids) with centroids ascending and labels
    referring to centroid rank. If fewer than k distinct values exist, k is
    reduced to the distinct count. `seed` is accepted for interface
    stability; the solver is deterministic and does not use it.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    distinct = np.unique(values).size
    k = min(k, distinct)

    order = np.argsort(values, kind="stable")
    v = values[order]
    # prefix sums for O(1) segment SSE
    ps = np.concatenate(([0.0], np.cumsum(v)))
    ps2 = np.concatenate(([0.0], np.cumsum(v * v)))

    def seg_cost(i, j):
        # SSE of v[i:j]
        m = j - i
        s = ps[j] - ps[i]
        return (ps2[j] - ps2[i]) - s * s / m

    # dp[c][j] = best cost of splitting v[:j] into c clusters
    inf = np.inf
    dp = np.full((k + 1, n + 1), inf)
    cut = np.zeros((k + 1, n + 1), dtype=np.int64)
    dp[0][0] = 0.0
    for c in range(1, k + 1):
        for j in range(c, n + 1):
            best, best_i = inf, c - 1
            for i in range(c - 1, j):
                if dp[c - 1][i] == inf:
                    continue
                cost = dp[c - 1][i] + seg_cost(i, j)
                if cost < best:
                    best, best_i = cost, i
            dp[c][j] = best
            cut[c][j] = best_i

    bounds = [n]
    j = n
    for c in range(k, 0, -1):
        j = int(cut[c][j])
        bounds.append(j)
    bounds.reverse()

    sorted_labels = np.empty(n, dtype=np.int64)
    centroids = np.empty(k, dtype=np.float64)
    for c in range(k):
        lo, hi = bounds[c], bounds[c + 1]
        sorted_labels[lo:hi] = c
        centroids[c] = v[lo:hi].mean()

    labels = np.empty(n, dtype=np.int64)
    labels[order] = sorted_labels
    return labels, centroids


def build_partition(patch_depths, protected_union, k, seed=0):
    """Partition unprotected patches into depth regions."""
    values = patch_depths.values
    p = values.size
    labels = np.full(p, PROTECTED, dtype=np.int64)
    protected_union = np.asarray(protected_union, dtype=np.int64)
    mask = np.ones(p, dtype=bool)
    mask[protected_union] = False
    free = np.flatnonzero(mask)

    if free.size == 0:
        return RegionPartition(labels=labels, regions=[], d_min=0.0,
                               d_max=0.0, requested_k=k, effective_k=0)

    sub_labels, centroids = kmeans_depth(values[free], k, seed)
    labels[free] = sub_labels
    regions = []
    for rid in range(centroids.size):
        members = free[sub_labels == rid]
        regions.append(Region(region_id=rid, member_indices=members,
                              mean_depth=float(centroids[rid])))
    means = [r.mean_depth for r in regions]
    return RegionPartition(labels=labels, regions=regions,
                           d_min=float(min(means)), d_max=float(max(means)),
                           requested_k=k, effective_k=centroids.size)


def assign_merge_ratios(partition, r_min, r_max, uniform_ratio=False):
    """Linear depth-to-ratio mapping over the span of region mean depths.

    The shallowest region gets r_min, the deepest r_max; a single region
    (or equal means) gets r_min. The uniform-ratio ablation assigns r_max
    everywhere.
    """
    span = partition.d_max - partition.d_min
    regions = []
    for region in partition.regions:
        if uniform_ratio:
            ratio = r_max
        elif span == 0.0:
            ratio = r_min
        else:
            frac = (region.mean_depth - partition.d_min) / span
            ratio = r_min + (r_max - r_min) * frac
        regions.append(replace(region, merge_ratio=ratio))
    return replace(partition, regions=regions)
