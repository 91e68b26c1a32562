"""Acceptance gate: one test per release criterion, one pass line each."""

import itertools
import math
import time

import numpy as np
import pytest

from depthmerge.cli import main
from depthmerge.core import AUXILIARY, PRIMARY, CameraPayload, EngineConfig, FrameRecord
from depthmerge.matching import build_merge_pairs, matching_oracle
from depthmerge.partition import kmeans_depth
from depthmerge.pipeline import EVENT_REINIT, EVENT_RESTORE, Engine
from depthmerge.protection import AttentionAccumulator, semantic_protection
from depthmerge.report import run_trace
from depthmerge.scenarios import (
    APPROACH_AND_GRASP,
    MULTI_PHASE,
    PERTURBED_OBJECT,
    STATIC_SCENE,
    ScenarioSpec,
    generate_scene,
)
from depthmerge.scheduler import merges_due
from depthmerge.traceio import read_trace, write_trace


def ok(name):
    print(f"ACCEPTANCE PASS: {name}")


def shift_patch_depths(frame, patch_indices, delta, grid=(16, 16), block=4):
    payload = frame.cameras[PRIMARY]
    depth = payload.depth_map.copy()
    g_w = grid[1]
    for idx in patch_indices:
        r, c = idx // g_w, idx % g_w
        depth[r * block:(r + 1) * block, c * block:(c + 1) * block] += delta
    cameras = dict(frame.cameras)
    cameras[PRIMARY] = CameraPayload(depth_map=depth,
                                     embeddings=payload.embeddings,
                                     grid_dims=payload.grid_dims,
                                     attention=payload.attention)
    return FrameRecord(frame.frame_index, cameras, frame.robot)


def random_config(rng):
    r_min = float(rng.uniform(0.0, 0.3))
    r_max = float(rng.uniform(r_min, 0.9))
    return EngineConfig(
        n_warmup=int(rng.integers(2, 7)),
        n_clusters=int(rng.integers(1, 5)),
        window=int(rng.integers(1, 8)),
        r_min=r_min, r_max=r_max,
        gamma=float(rng.uniform(0.1, 0.6)),
        epsilon=float(rng.uniform(0.005, 0.05)),
        one_shot=bool(rng.random() < 0.2),
        uniform_ratio=bool(rng.random() < 0.2),
    ).validate()


def test_token_budget():
    """Dual-camera static scene lands near 300 retained tokens in < 5 s."""
    start = time.monotonic()
    header, frames = generate_scene(
        ScenarioSpec(scenario=STATIC_SCENE, frame_count=50), seed=0)
    assert header.cameras[PRIMARY].patch_count == 256
    assert header.cameras[AUXILIARY].patch_count == 256
    report = run_trace(EngineConfig(), header, frames)
    steady = report.rows[-1]
    assert steady["aux_mode"] == "merge"
    assert 270 <= steady["total_retained"] <= 330, steady["total_retained"]
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    ok(f"token budget (steady total = {steady['total_retained']}, "
       f"{elapsed:.2f}s)")


def test_temporal_spread_exactness():
    """Schedule equals the closed form on the whole (W, m, elapsed) grid."""
    start = time.monotonic()
    for w, m in itertools.product(range(1, 11), range(0, 51)):
        cumulative = []
        for elapsed in range(0, 16):
            due = merges_due(100 + elapsed, 100, w, m)
            direct = math.floor(min(elapsed, w) / w * m)
            assert due == direct, (w, m, elapsed)
            cumulative.append(due)
        increments = [b - a for a, b in zip([0] + cumulative, cumulative)]
        assert all(i >= 0 for i in increments)
        assert sum(increments) == m          # saturated: elapsed 15 >= W
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    ok(f"temporal spread exactness ({elapsed:.2f}s)")


def test_conservation():
    """Size-weighted sums equal patch sums on 1000+ frames, restores included."""
    rng = np.random.default_rng(2024)
    frames_checked = 0
    for run in range(25):
        config = random_config(rng)
        scenario = [STATIC_SCENE, PERTURBED_OBJECT, MULTI_PHASE][run % 3]
        header, frames = generate_scene(
            ScenarioSpec(scenario=scenario, frame_count=40),
            seed=int(rng.integers(0, 1000)))
        engine = Engine(config, header.cameras, header.chunk_len)
        # displace part of one region mid-run to force restores
        moved = np.arange(16, 48)
        for frame in frames:
            if frame.frame_index >= 20:
                frame = shift_patch_depths(frame, moved, 0.15)
            outputs = engine.step(frame)
            for role in (PRIMARY, AUXILIARY):
                out = outputs[role]
                patches = frame.cameras[role].embeddings.astype(np.float64)
                total = (out.sizes[:, None] * out.embeddings).sum(axis=0)
                assert np.allclose(total, patches.sum(axis=0), rtol=1e-4), \
                    (run, frame.frame_index, role)
            frames_checked += 1
    assert frames_checked == 1000
    ok(f"conservation ({frames_checked} frames)")


def test_matching_oracle_equivalence():
    """Greedy matcher equals the full-scan oracle on 1000 random regions."""
    rng = np.random.default_rng(31)
    for trial in range(1000):
        n = int(rng.integers(2, 17))
        d = int(rng.integers(2, 10))
        g_h, g_w = 8, int(rng.integers(2, 9))
        members = np.sort(rng.choice(g_h * g_w, size=n, replace=False))
        emb = rng.normal(size=(g_h * g_w, d))
        if trial % 2 == 0:                   # tie-heavy quantized values
            emb = np.round(emb * 2) / 2
        fast = build_merge_pairs(members, emb, 0.5, (g_h, g_w))[0]
        slow = matching_oracle(members, emb, (g_h, g_w))
        assert [(p.src, p.dst) for p in fast] == \
            [(p.src, p.dst) for p in slow], f"trial {trial}"
    ok("matching oracle equivalence (1000 regions)")


def test_kmeans_optimality():
    """1-D clustering SSE equals the brute-force contiguous optimum."""
    rng = np.random.default_rng(77)
    for trial in range(500):
        n = int(rng.integers(2, 13))
        k = int(rng.integers(1, 4))
        values = rng.uniform(0.1, 5.0, size=n)
        if trial % 4 == 0:
            values = np.round(values, 1)
        labels, centroids = kmeans_depth(values, k)
        got = sum(float(((values[labels == c]
                          - values[labels == c].mean()) ** 2).sum())
                  for c in range(centroids.size))
        k_eff = min(k, np.unique(values).size)
        v = np.sort(values)
        best = math.inf
        for cuts in itertools.combinations(range(1, n), k_eff - 1):
            bounds = (0,) + cuts + (n,)
            total = sum(float(((v[bounds[i]:bounds[i + 1]]
                                - v[bounds[i]:bounds[i + 1]].mean()) ** 2).sum())
                        for i in range(k_eff))
            best = min(best, total)
        assert np.isclose(got, best, rtol=1e-9, atol=1e-9), f"trial {trial}"
    ok("1-D k-means optimality (500 inputs)")


def test_dynamics_event_exactness():
    """Reinit fires once (gripper open), never while carrying; region motion
    restores once with same-frame singleton recovery."""
    header, frames = generate_scene(
        ScenarioSpec(scenario=PERTURBED_OBJECT, frame_count=40), 0)
    engine = Engine(EngineConfig(), header.cameras, header.chunk_len)
    for frame in frames:
        engine.step(frame)
    reinits = [e for e in engine.events if e.kind == EVENT_REINIT]
    assert len(reinits) == 1

    header, frames = generate_scene(
        ScenarioSpec(scenario=PERTURBED_OBJECT, frame_count=40,
                     carrying=True), 0)
    engine = Engine(EngineConfig(), header.cameras, header.chunk_len)
    for frame in frames:
        engine.step(frame)
    assert not any(e.kind == EVENT_REINIT for e in engine.events)

    header, frames = generate_scene(
        ScenarioSpec(scenario=STATIC_SCENE, frame_count=40), 0)
    engine = Engine(EngineConfig(), header.cameras, header.chunk_len)
    for frame in frames[:15]:
        engine.step(frame)
    region = engine.partition.regions[-1]
    moved = region.member_indices[:int(0.4 * region.member_indices.size) + 1]
    restore_frame_out = None
    for frame in frames[15:]:
        out = engine.step(shift_patch_depths(frame, moved, 0.2))[PRIMARY]
        restores = [e for e in engine.events if e.kind == EVENT_RESTORE]
        if restores and restore_frame_out is None:
            restore_frame_out = out
    restores = [e for e in engine.events if e.kind == EVENT_RESTORE]
    assert len(restores) == 1
    for idx in region.member_indices:
        assert restore_frame_out.sizes[restore_frame_out.unmerge_map[idx]] == 1
    ok("restore / reinit event exactness")


def test_protection_safety():
    """No protected patch ever enters a merge pair; semantic set is
    invariant under positive attention scaling."""
    rng = np.random.default_rng(404)
    scenarios = [STATIC_SCENE, APPROACH_AND_GRASP, PERTURBED_OBJECT,
                 MULTI_PHASE]
    for run in range(100):
        config = random_config(rng)
        scenario = scenarios[run % 4]
        count = 20 if scenario == STATIC_SCENE else 40
        header, frames = generate_scene(
            ScenarioSpec(scenario=scenario, frame_count=count),
            seed=int(rng.integers(0, 1000)))
        engine = Engine(config, header.cameras, header.chunk_len)
        for frame in frames:
            engine.step(frame)
            if engine.plan is None:
                continue
            protected = set(engine.protection.union.tolist())
            for pairs in engine.plan.pairs_by_region.values():
                for pair in pairs:
                    assert pair.src not in protected, run
                    assert pair.dst not in protected, run

    for _ in range(200):
        p = int(rng.integers(4, 64))
        avg = rng.uniform(0.0, 5.0, size=p)
        threshold = avg.mean() + avg.std()
        if (np.abs(avg - threshold) < 1e-9).any():
            continue
        scale = float(rng.uniform(0.01, 100.0))
        acc_a = AttentionAccumulator(sums=avg, frames_seen=1, n_warmup=1)
        acc_b = AttentionAccumulator(sums=avg * scale, frames_seen=1,
                                     n_warmup=1)
        assert (semantic_protection(acc_a).tolist()
                == semantic_protection(acc_b).tolist())
    ok("protection safety (100 configs)")


def test_ablation_directionality():
    """Dropping protection compresses strictly harder; one-shot converges
    at t_0 while the default needs the full window."""
    header, frames = generate_scene(
        ScenarioSpec(scenario=STATIC_SCENE, frame_count=30), 0)
    default = run_trace(EngineConfig(), header, frames)
    no_prot = run_trace(EngineConfig(no_protection=True), header, frames)
    assert (no_prot.aggregates["mean_rho"]
            < default.aggregates["mean_rho"])
    assert (no_prot.rows[-1]["primary_rho"]
            < default.rows[-1]["primary_rho"])

    one_shot = run_trace(EngineConfig(one_shot=True), header, frames)
    t_0 = 5                                  # N = 5 warmup frames, t_0 = N
    w = EngineConfig().window
    steady_one = one_shot.rows[-1]["primary_retained"]
    steady_def = default.rows[-1]["primary_retained"]
    assert one_shot.rows[t_0]["primary_retained"] == steady_one
    assert one_shot.rows[t_0 - 1]["primary_retained"] == 256
    assert default.rows[t_0 + w]["primary_retained"] == steady_def
    assert default.rows[t_0 + w - 1]["primary_retained"] > steady_def
    ok("ablation directionality")


def test_determinism(tmp_path):
    """Byte-identical reports across runs; byte-identical trace round trip."""
    trace = tmp_path / "trace"
    assert main(["gen", "--scenario", "multi_phase", "--frames", "40",
                 "--seed", "7", "--out", str(trace)]) == 0
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["run", "--trace", str(trace), "--report", str(a),
                 "--no-figures"]) == 0
    assert main(["run", "--trace", str(trace), "--report", str(b),
                 "--no-figures"]) == 0
    assert a.read_bytes() == b.read_bytes()

    header, loaded = read_trace(trace)
    copy = tmp_path / "copy"
    write_trace(copy, header, loaded)
    for blob in sorted(trace.iterdir()):
        assert (copy / blob.name).read_bytes() == blob.read_bytes()
    ok("determinism")
