import numpy as np
import pytest

from depthmerge.core import AUXILIARY, PRIMARY, EngineConfig
from depthmerge.errors import InvalidSpec, TraceIOError
from depthmerge.report import recompute_aggregates, render_report, run_trace
from depthmerge.scenarios import (
    APPROACH_AND_GRASP,
    PERTURBED_OBJECT,
    STATIC_SCENE,
    ScenarioSpec,
    generate_scene,
)
from depthmerge.traceio import read_trace, write_trace


def trace_bytes(trace_dir):
    return {p.name: p.read_bytes()
            for p in sorted(trace_dir.iterdir()) if p.is_file()}


class TestTraceRoundTrip:
    def test_bytes_identical(self, tmp_path):
        header, frames = generate_scene(ScenarioSpec(frame_count=8), 3)
        first = tmp_path / "a"
        second = tmp_path / "b"
        write_trace(first, header, frames)
        header2, frames2 = read_trace(first)
        write_trace(second, header2, frames2)
        assert trace_bytes(first) == trace_bytes(second)

    def test_tensors_identical(self, tmp_path):
        header, frames = generate_scene(ScenarioSpec(frame_count=5), 1)
        write_trace(tmp_path / "t", header, frames)
        _, loaded = read_trace(tmp_path / "t")
        for orig, back in zip(frames, loaded):
            for role in (PRIMARY, AUXILIARY):
                a, b = orig.cameras[role], back.cameras[role]
                assert (a.depth_map.astype("<f4") == b.depth_map).all()
                assert (a.embeddings.astype("<f4") == b.embeddings).all()
            assert np.allclose(orig.robot.action_chunk,
                               back.robot.action_chunk, atol=1e-7)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(TraceIOError):
            read_trace(tmp_path)

    def test_truncated_blob(self, tmp_path):
        header, frames = generate_scene(ScenarioSpec(frame_count=4), 0)
        write_trace(tmp_path / "t", header, frames)
        blob = tmp_path / "t" / "depth_primary.bin"
        blob.write_bytes(blob.read_bytes()[:100])
        with pytest.raises(TraceIOError):
            read_trace(tmp_path / "t")


class TestGenerator:
    def test_deterministic(self):
        spec = ScenarioSpec(frame_count=6)
        a_header, a_frames = generate_scene(spec, 9)
        b_header, b_frames = generate_scene(ScenarioSpec(frame_count=6), 9)
        for fa, fb in zip(a_frames, b_frames):
            for role in (PRIMARY, AUXILIARY):
                assert (fa.cameras[role].depth_map
                        == fb.cameras[role].depth_map).all()
                assert (fa.cameras[role].embeddings
                        == fb.cameras[role].embeddings).all()

    def test_invalid_scenario_rejected(self):
        with pytest.raises(InvalidSpec):
            generate_scene(ScenarioSpec(scenario="juggling"), 0)

    def test_static_scene_has_no_dynamics_events(self):
        header, frames = generate_scene(
            ScenarioSpec(scenario=STATIC_SCENE, frame_count=50), 0)
        report = run_trace(EngineConfig(), header, frames)
        assert report.aggregates["restore_events"] == 0
        assert report.aggregates["reinit_events"] == 0

    def test_perturbed_object_single_reinit(self):
        header, frames = generate_scene(
            ScenarioSpec(scenario=PERTURBED_OBJECT, frame_count=40), 0)
        report = run_trace(EngineConfig(), header, frames)
        assert report.aggregates["reinit_events"] == 1

    def test_grasp_cycle_two_full_view_episodes(self):
        header, frames = generate_scene(
            ScenarioSpec(scenario=APPROACH_AND_GRASP, frame_count=50), 0)
        report = run_trace(EngineConfig(), header, frames)
        modes = [r["aux_mode"] for r in report.rows]
        episodes = sum(1 for i, m in enumerate(modes)
                       if m == "full_view"
                       and (i == 0 or modes[i - 1] == "merge"))
        assert episodes == 2


class TestReport:
    def test_aggregates_recomputable_from_rows(self):
        header, frames = generate_scene(ScenarioSpec(frame_count=30), 0)
        report = run_trace(EngineConfig(), header, frames)
        full_total = sum(c.patch_count for c in header.cameras.values())
        assert recompute_aggregates(report, full_total) == report.aggregates

    def test_no_merging_when_ratios_zero(self):
        header, frames = generate_scene(ScenarioSpec(frame_count=15), 0)
        config = EngineConfig(r_min=0.0, r_max=0.0, no_auxview=True)
        report = run_trace(config, header, frames)
        assert all(r["primary_rho"] == 1.0 for r in report.rows)
        assert all(r["aux_rho"] == 1.0 for r in report.rows)

    def test_render_contains_rows_and_blocks(self):
        header, frames = generate_scene(ScenarioSpec(frame_count=10), 0)
        report = run_trace(EngineConfig(), header, frames)
        text = render_report(report)
        lines = text.splitlines()
        assert lines[0].startswith("frame\t")
        assert len([l for l in lines if l and l[0].isdigit()]) == 10
        assert "# aggregates" in lines
        assert "# config" in lines
