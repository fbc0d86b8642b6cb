"""Condition-number envelopes against brute-force search."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fgvi.bounds import (
    BoundsReport,
    EigenProfile,
    bound_kl_joint,
    bound_log_det_C,
    bound_log_det_S,
    bound_trace_S,
    bounds_report,
    envelope_sweep,
)
from fgvi.gaussian import constant_offdiag_closed_forms

from oracles import (
    oracle_bound_log_det_c,
    oracle_bound_log_det_s,
    oracle_joint_kl,
    oracle_max_inverse_sum,
    oracle_min_inverse_sum,
)


def _assert_profile_feasible(profile: EigenProfile, n: int, ratio: float):
    values = profile.values
    assert values.size == n
    assert np.all(values > 0)
    assert np.all(np.diff(values) <= 1e-12)
    assert np.sum(values) == pytest.approx(n, rel=1e-9)
    assert values[0] == pytest.approx(ratio * values[-1], rel=1e-9)


def _assert_edge_structure(profile: EigenProfile, atol=1e-9):
    """At most one entry away from both spectrum edges."""
    values = profile.values
    top, bottom = values[0], values[-1]
    off_edge = (np.abs(values - top) > atol) & (np.abs(values - bottom) > atol)
    assert int(np.sum(off_edge)) <= 1


# ----------------------------------------------------------- EigenProfile


def test_profile_validation():
    EigenProfile(values=np.array([2.0, 0.5, 0.5]), condition_ratio=4.0)
    with pytest.raises(ValueError):
        EigenProfile(values=np.array([0.5, 2.0, 0.5]), condition_ratio=4.0)
    with pytest.raises(ValueError):
        EigenProfile(values=np.array([2.0, 0.5, 0.5]), condition_ratio=3.0)
    with pytest.raises(ValueError):
        EigenProfile(values=np.array([2.0, 1.0, 0.5]), condition_ratio=4.0)
    with pytest.raises(ValueError):
        EigenProfile(values=np.array([3.0, -0.5, 0.5]), condition_ratio=-6.0)


# ---------------------------------------------------------- trivial ratio


def test_unit_ratio_collapses_everything():
    for n in (2, 3, 10):
        s_val, s_prof = bound_log_det_S(n, 1.0)
        c_val, c_prof = bound_log_det_C(n, 1.0)
        trace = bound_trace_S(n, 1.0)
        j_val, _ = bound_kl_joint(n, 1.0)
        assert s_val == 0.0
        assert c_val == 0.0
        assert j_val == 0.0
        assert trace.lower == pytest.approx(n)
        assert trace.upper == pytest.approx(n)
        assert np.allclose(s_prof.values, 1.0)
        assert np.allclose(c_prof.values, 1.0)


def test_domain_errors():
    with pytest.raises(ValueError):
        bound_log_det_S(3, 0.5)
    with pytest.raises(ValueError):
        bound_log_det_S(1, 2.0)
    with pytest.raises(ValueError):
        bound_log_det_C(3, 0.99)
    with pytest.raises(ValueError):
        bound_trace_S(3, -1.0)
    with pytest.raises(ValueError):
        bound_kl_joint(1, 2.0)


# ------------------------------------------------------ frozen hand values


def test_shrinkage_bound_hand_value():
    value, profile = bound_log_det_S(3, 4.0)
    assert value == pytest.approx(3 * math.log(1.5), rel=1e-12)
    # two candidate splits tie at 4.5; smaller split index wins
    assert np.allclose(profile.values, [2.0, 0.5, 0.5], atol=1e-12)


def test_delinkage_bound_hand_value():
    value, profile = bound_log_det_C(10, 11.0)
    assert value == pytest.approx(math.log(11.0 / 36.0), rel=1e-12)
    assert profile.values[-1] == pytest.approx(2.0 / 12.0, rel=1e-12)
    assert np.allclose(profile.values[1:-1], 1.0, atol=1e-12)


def test_trace_bounds_hand_values():
    trace = bound_trace_S(3, 4.0)
    assert trace.lower == pytest.approx(49.0 / 12.0, rel=1e-12)
    assert trace.upper == pytest.approx(4.5, rel=1e-12)
    assert np.allclose(trace.lower_profile.values, [12.0 / 7.0, 6.0 / 7.0, 3.0 / 7.0])


def test_joint_bound_hand_value():
    value, _ = bound_kl_joint(2, 4.0)
    assert value == pytest.approx(0.5 * math.log(25.0 / 16.0), rel=1e-12)


def test_two_dimensional_delinkage_special_case():
    for ratio in (1.5, 3.0, 42.0):
        value, profile = bound_log_det_C(2, ratio)
        assert value == pytest.approx(math.log(4 * ratio / (1 + ratio) ** 2), rel=1e-12)
        assert np.allclose(profile.values, [2 * ratio / (1 + ratio), 2 / (1 + ratio)])


def test_one_dimensional_delinkage_is_zero():
    value, profile = bound_log_det_C(1, 7.0)
    assert value == 0.0
    assert np.array_equal(profile.values, np.ones(1))


# ------------------------------------------------------- oracle spot checks


def test_shrinkage_bound_matches_grid_oracle():
    value, _ = bound_log_det_S(3, 4.0)
    assert value == pytest.approx(oracle_bound_log_det_s(3, 4.0), abs=1e-4)


def test_delinkage_bound_matches_grid_oracle():
    value, _ = bound_log_det_C(3, 4.0)
    assert value == pytest.approx(oracle_bound_log_det_c(3, 4.0), abs=1e-6)


def test_trace_bounds_match_grid_oracle():
    trace = bound_trace_S(3, 4.0)
    assert trace.lower == pytest.approx(oracle_min_inverse_sum(3, 4.0), abs=1e-4)
    assert trace.upper == pytest.approx(oracle_max_inverse_sum(3, 4.0), abs=1e-4)


def test_joint_bound_matches_grid_oracle():
    value, _ = bound_kl_joint(4, 10.0)
    assert value == pytest.approx(oracle_joint_kl(4, 10.0), abs=1e-4)


# ----------------------------------------------------- cross-module checks


def test_delinkage_bound_dominates_constant_offdiag():
    # eps = 0.5 at n = 10 has extreme-eigenvalue ratio 11
    analytic = 9 * math.log(0.5) + math.log(5.5)
    value, _ = bound_log_det_C(10, 11.0)
    assert value >= analytic


def test_trace_bounds_contain_constant_offdiag():
    forms = constant_offdiag_closed_forms(10, 0.5)
    actual = 10 * forms.trace_S_over_n
    trace = bound_trace_S(10, 11.0)
    assert trace.lower <= actual <= trace.upper


# ------------------------------------------------------- report & ordering


def test_report_assembles_all_maximizers():
    report = bounds_report(5, 7.0)
    assert set(report.maximizers) == {
        "log_det_S",
        "log_det_C",
        "trace_S_lower",
        "trace_S_upper",
        "kl_joint",
    }
    for profile in report.maximizers.values():
        _assert_profile_feasible(profile, 5, 7.0)


def test_joint_tighter_than_separate():
    for n in (3, 5, 12):
        for ratio in (1.5, 4.0, 50.0):
            report = bounds_report(n, ratio)
            assert report.joint_kl_upper < report.separate_kl_upper - 1e-9


def test_joint_equals_separate_in_two_dimensions():
    for ratio in (2.0, 9.0, 120.0):
        report = bounds_report(2, ratio)
        assert report.joint_kl_upper == pytest.approx(
            report.separate_kl_upper, abs=1e-12
        )


def test_maximizer_edge_structure():
    for n in (3, 4, 5, 8):
        for ratio in (1.5, 2.0, 5.0, 10.0, 100.0):
            report = bounds_report(n, ratio)
            for name in ("log_det_S", "trace_S_upper", "kl_joint"):
                _assert_edge_structure(report.maximizers[name])
            for name in ("log_det_C", "trace_S_lower"):
                interior = report.maximizers[name].values[1:-1]
                if interior.size:
                    assert np.max(interior) - np.min(interior) <= 1e-12


def test_envelope_sweep_monotone_and_ordered():
    grid = [1.0, 1.5, 2.0, 5.0, 10.0, 100.0]
    reports = envelope_sweep(10, grid)
    assert len(reports) == len(grid)
    assert [r.condition_ratio for r in reports] == grid
    upper_s = [r.upper_log_det_S for r in reports]
    assert all(b >= a for a, b in zip(upper_s, upper_s[1:]))
    assert reports[0].upper_log_det_S == 0.0
    assert reports[0].joint_kl_upper == 0.0


def test_envelope_sweep_rejects_bad_grids():
    with pytest.raises(ValueError):
        envelope_sweep(4, [])
    with pytest.raises(ValueError):
        envelope_sweep(4, [2.0, 1.5])
    with pytest.raises(ValueError):
        envelope_sweep(4, [0.5, 2.0])


@settings(max_examples=60, deadline=None, derandomize=True)
@given(
    n=st.integers(min_value=2, max_value=25),
    ratio=st.floats(min_value=1.0, max_value=1e4),
)
def test_report_invariants_property(n, ratio):
    report = bounds_report(n, ratio)
    assert isinstance(report, BoundsReport)
    assert report.upper_log_det_S >= -1e-12
    assert report.upper_log_det_C <= 1e-12
    assert report.lower_trace_S <= report.upper_trace_S + 1e-9
    assert report.joint_kl_upper <= report.separate_kl_upper + 1e-9
    for profile in report.maximizers.values():
        _assert_profile_feasible(profile, n, ratio)
