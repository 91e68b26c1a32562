import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from depthmerge.core import PatchDepths, RobotState
from depthmerge.dynamics import (
    DepthHistory,
    check_reinit,
    check_restore,
    nonstatic_fraction,
    update_static_flags,
)
from depthmerge.partition import MERGING, RESTORED, Region
from depthmerge.protection import ProtectionSet


def depths(values):
    values = np.asarray(values, dtype=np.float64)
    return PatchDepths(values=values, grid_dims=(1, values.size))


def history_of(rows, window=5, init=None):
    h = DepthHistory(window)
    if init is not None:
        h.snapshot_init(depths(init), t_init=0)
    for row in rows:
        h.push(depths(row))
    return h


def robot(aperture=1.0):
    return RobotState(gripper_aperture=aperture, ee_position=np.zeros(3),
                      action_chunk=np.zeros((4, 4)))


def protection_with_att(att):
    att = np.asarray(att, dtype=np.int64)
    return ProtectionSet(att_indices=att, edge_indices=np.empty(0, np.int64),
                         union=att, created_at=0)


class TestStaticFlags:
    def test_constant_window_all_static(self):
        flags = update_static_flags(history_of([[1.0, 2.0]] * 4), 0.01)
        assert flags.static.all()

    def test_oscillation_nonstatic(self):
        eps = 0.01
        rows = [[1.0 - eps], [1.0 + eps], [1.0 - eps]]
        flags = update_static_flags(history_of(rows), eps)
        assert not flags.static[0]

    def test_range_just_below_epsilon(self):
        rows = [[1.00], [1.004], [1.009]]
        flags = update_static_flags(history_of(rows, window=3), 0.01)
        assert flags.static[0]

    def test_single_frame_all_static(self):
        flags = update_static_flags(history_of([[5.0, 5.0]]), 0.01)
        assert flags.static.all()


class FakeFlags:
    def __init__(self, static):
        self.static = np.asarray(static, dtype=bool)


def region(members, status=MERGING):
    members = np.asarray(members, dtype=np.int64)
    return Region(region_id=0, member_indices=members, mean_depth=1.0,
                  merge_ratio=0.5, status=status)


class TestRestore:
    def test_fraction_above_gamma_restores(self):
        static = np.ones(10, dtype=bool)
        static[:4] = False
        assert check_restore(region(range(10)), FakeFlags(static), 0.3)

    def test_strict_boundary_holds(self):
        static = np.ones(10, dtype=bool)
        static[:3] = False
        assert not check_restore(region(range(10)), FakeFlags(static), 0.3)

    def test_all_static_no_restore(self):
        assert not check_restore(region(range(10)),
                                 FakeFlags(np.ones(10, bool)), 0.3)

    def test_restored_region_is_noop(self):
        static = np.zeros(10, dtype=bool)
        assert not check_restore(region(range(10), status=RESTORED),
                                 FakeFlags(static), 0.3)

    def test_fraction_exact(self):
        static = np.array([True, False, True, False])
        assert nonstatic_fraction(FakeFlags(static), [0, 1, 2, 3]) == 0.5


class TestReinit:
    def test_carrying_gates_everything(self):
        h = history_of([[9.0]], init=[1.0])
        assert not check_reinit(h, protection_with_att([0]), robot(0.1),
                                delta_reinit=0.05, carry_aperture=0.2)

    def test_depth_change_triggers(self):
        h = history_of([[1.08]], init=[1.0])
        assert check_reinit(h, protection_with_att([0]), robot(1.0),
                            delta_reinit=0.05, carry_aperture=0.2)

    def test_no_change_no_trigger(self):
        h = history_of([[1.0]], init=[1.0])
        assert not check_reinit(h, protection_with_att([0]), robot(1.0),
                                delta_reinit=0.05, carry_aperture=0.2)

    def test_empty_attention_set_no_trigger(self):
        h = history_of([[9.0]], init=[1.0])
        assert not check_reinit(h, protection_with_att([]), robot(1.0),
                                delta_reinit=0.05, carry_aperture=0.2)

    def test_no_reinit_flag(self):
        h = history_of([[9.0]], init=[1.0])
        assert not check_reinit(h, protection_with_att([0]), robot(1.0),
                                delta_reinit=0.05, carry_aperture=0.2,
                                no_reinit=True)

    def test_mean_over_att_patches(self):
        # |deltas| = [0.04, 0.08]; mean 0.06 > 0.05
        h = history_of([[1.04, 0.92]], init=[1.0, 1.0])
        assert check_reinit(h, protection_with_att([0, 1]), robot(1.0),
                            delta_reinit=0.05, carry_aperture=0.2)

    @given(st.lists(st.floats(0.0, 0.19), min_size=1, max_size=30),
           st.lists(st.floats(0.1, 10.0), min_size=4, max_size=4))
    @settings(max_examples=200, deadline=None)
    def test_gating_soundness_over_traces(self, apertures, depth_row):
        # while aperture stays below the carry threshold, never reinit
        h = history_of([depth_row], init=[0.1, 0.1, 0.1, 0.1])
        prot = protection_with_att([0, 1, 2, 3])
        for aperture in apertures:
            assert not check_reinit(h, prot, robot(aperture),
                                    delta_reinit=0.01, carry_aperture=0.2)
