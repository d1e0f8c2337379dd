"""Composition-operator samples: membership, the two-time semigroup law,
homogeneity, subadditivity, 1-Lipschitz continuity, and scheduled curves."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from koopsets import (
    Bump,
    Constant,
    ControlSampleSet,
    Scaled,
    SpatialGrid,
    build_observable_curve,
    check_homogeneity,
    check_lipschitz_in_observable,
    check_semigroup,
    check_subadditivity,
    compose_with_flow,
    koopman_set,
    splice_closure,
)
from koopsets.oracles import scalar_affine_flow

STEP = 1e-3


def _constants(sample, horizon, segments=2):
    return [
        sample.constant_signal(p.id, horizon, segments=segments, name=f"c{p.id}")
        for p in sample.points
    ]


# ---------------------------------------------------------------------------
# operator samples


def test_zero_field_sample_collapses(zero_field2):
    grid = SpatialGrid([-1.0, -1.0], [1.0, 1.0], 4)
    b2 = Bump([0.0, 0.0], 2.0)
    sample = ControlSampleSet([[0.0], [1.0], [-2.0]])
    K = koopman_set(b2, zero_field2, _constants(sample, 1.0), 0.0, 1.0, grid, 1e-2)
    base = b2.values(grid.nodes)
    assert len(K) == 3
    for m in K.members:
        assert np.array_equal(m.node_values, base)


def test_equal_times_give_back_the_observable(scalar_field, sample3, bump, grid5):
    K = koopman_set(bump, scalar_field, _constants(sample3, 1.0), 0.7, 0.7, grid5, STEP)
    base = bump.values(grid5.nodes)
    for m in K.members:
        assert np.array_equal(m.node_values, base)


def test_sample_value_from_closed_form(scalar_field, sample3, bump, grid5):
    sig = sample3.constant_signal(1, 1.0, name="u0")  # u = 0
    K = koopman_set(bump, scalar_field, [sig], 0.0, math.log(2.0), grid5, STEP)
    assert K.labels == ["u0"]
    assert abs(K.members[0].eval([2.0]) - 0.5625) < 1e-9


def test_members_match_composition_bitwise(scalar_field, sample3, bump, grid5):
    signals = _constants(sample3, 1.0)
    K = koopman_set(bump, scalar_field, signals, 0.0, 1.0, grid5, STEP)
    for sig, member in zip(signals, K.members):
        psi = compose_with_flow(bump, scalar_field, sig, 0.0, 1.0, grid5, STEP)
        assert np.array_equal(member.node_values, psi.node_values)


def test_empty_family_rejected(scalar_field, bump, grid5):
    with pytest.raises(ValueError):
        koopman_set(bump, scalar_field, [], 0.0, 1.0, grid5, STEP)


# ---------------------------------------------------------------------------
# semigroup law


def test_semigroup_zero_field(zero_field2):
    grid = SpatialGrid([-1.0, -1.0], [1.0, 1.0], 4)
    b2 = Bump([0.0, 0.0], 2.0)
    sample = ControlSampleSet([[0.0], [1.0]])
    rep = check_semigroup(b2, zero_field2, _constants(sample, 1.0), 0.0, 0.5, 1.0,
                          grid, 1e-2)
    assert rep.hausdorff == 0.0


def test_semigroup_at_endpoint_times(scalar_field, sample3, bump, grid5):
    signals = _constants(sample3, 1.0)
    for s in (0.0, 1.0):
        rep = check_semigroup(bump, scalar_field, signals, 0.0, s, 1.0, grid5, 1e-2)
        assert rep.hausdorff <= 1e-12


def test_semigroup_splice_closed_family(scalar_field, sample3, bump, grid401):
    """Splice-closed three-control family at the midpoint: one-stage and
    two-stage samples agree far below the step-size tolerance."""
    signals = _constants(sample3, 1.0)
    rep = check_semigroup(bump, scalar_field, signals, 0.0, 0.5, 1.0, grid401, STEP)
    assert rep.hausdorff <= 1e-6


def test_semigroup_two_stage_against_closed_form(scalar_field, sample3, grid5, bump):
    """The two-stage composition of constants equals the closed-form flow
    of the matching spliced signal."""
    family = splice_closure(_constants(sample3, 1.0), 0.5)
    K = koopman_set(bump, scalar_field, family, 0.0, 1.0, grid5, STEP)
    for sig, member in zip(family, K.members):
        for node in (-2.0, 1.0):
            want = bump.eval([scalar_affine_flow(-1.0, sig, 0.0, 1.0, node)])
            assert abs(member.eval([node]) - want) < 1e-9


def test_semigroup_validates_time_order(scalar_field, sample3, bump, grid5):
    with pytest.raises(ValueError):
        check_semigroup(bump, scalar_field, _constants(sample3, 1.0),
                        0.0, 1.5, 1.0, grid5, STEP)


# ---------------------------------------------------------------------------
# homogeneity / subadditivity / Lipschitz


@pytest.mark.parametrize("alpha", [0.0, 1.0, -2.5, 0.7 - 1.3j])
def test_homogeneity(scalar_field, sample3, bump, grid5, alpha):
    d = check_homogeneity(bump, alpha, scalar_field, _constants(sample3, 1.0),
                          0.0, 1.0, grid5, 1e-2)
    assert d <= 1e-12


def test_subadditivity_special_cases(scalar_field, sample3, bump, grid5):
    signals = _constants(sample3, 1.0)
    zero = Constant(0.0, 1)
    assert check_subadditivity(bump, zero, scalar_field, signals,
                               0.0, 1.0, grid5, 1e-2) <= 1e-12
    assert check_subadditivity(bump, bump, scalar_field, signals,
                               0.0, 1.0, grid5, 1e-2) <= 1e-12


def test_subadditivity_disjoint_bumps(scalar_field, sample3, grid401):
    left = Bump([-1.2], 0.5)
    right = Bump([1.2], 0.5)
    d = check_subadditivity(left, right, scalar_field, _constants(sample3, 1.0),
                            0.0, 1.0, grid401, 1e-2)
    assert d <= 1e-12


def test_lipschitz_identical_and_shifted(scalar_field, sample3, bump, grid5):
    signals = _constants(sample3, 1.0)
    rep = check_lipschitz_in_observable(bump, bump, scalar_field, signals,
                                        0.0, 1.0, grid5, 1e-2)
    assert rep.set_defect == 0.0 and rep.observable_distance == 0.0 and rep.ok
    c = 0.35
    rep = check_lipschitz_in_observable(
        bump, Scaled(1.0, bump) + Scaled(c, bump), scalar_field, signals,
        0.0, 1.0, grid5, 1e-2)
    assert rep.set_defect <= c + 1e-12
    assert rep.ok


@given(
    c1=st.floats(-1.8, 1.8), r1=st.floats(0.2, 2.0),
    c2=st.floats(-1.8, 1.8), r2=st.floats(0.2, 2.0),
)
def test_lipschitz_on_random_bump_pairs(scalar_field, sample3, grid5, c1, r1, c2, r2):
    rep = check_lipschitz_in_observable(
        Bump([c1], r1), Bump([c2], r2), scalar_field,
        _constants(sample3, 1.0), 0.0, 1.0, grid5, 1e-2)
    assert rep.ok


# ---------------------------------------------------------------------------
# scheduled observable curves


def test_single_signal_schedule_is_classical(scalar_field, sample3, bump, grid5):
    sig = sample3.constant_signal(2, 1.0, name="c2")
    times = [0.25, 0.5, 0.9]
    curve = build_observable_curve(bump, scalar_field, [((0.0, 1.0), sig)],
                                   0.0, times, grid5, STEP)
    for (t, member, label), t_in in zip(curve, times):
        assert t == t_in and label == "c2"
        psi = compose_with_flow(bump, scalar_field, sig, 0.0, t, grid5, STEP)
        assert np.array_equal(member.node_values, psi.node_values)


def test_two_signal_schedule_on_zero_field(zero_field2):
    grid = SpatialGrid([-1.0, -1.0], [1.0, 1.0], 4)
    b2 = Bump([0.0, 0.0], 2.0)
    sample = ControlSampleSet([[0.0], [1.0]])
    schedule = [((0.0, 0.5), sample.constant_signal(0, 1.0)),
                ((0.5, 1.0), sample.constant_signal(1, 1.0))]
    curve = build_observable_curve(b2, zero_field2, schedule, 0.0,
                                   [0.1, 0.5, 0.9], grid, 1e-2)
    base = b2.values(grid.nodes)
    for _, member, _ in curve:
        assert np.array_equal(member.node_values, base)


def test_schedule_switch_value(scalar_field, sample3, bump, grid5):
    """After the switch the curve follows the second signal's flow from the
    start time; at t = 0.75 the value at the origin is the bump at the
    closed-form point of u = +1."""
    u0 = sample3.constant_signal(1, 1.0, name="u0")
    u1 = sample3.constant_signal(2, 1.0, name="u1")
    schedule = [((0.0, 0.5), u0), ((0.5, 1.0), u1)]
    curve = build_observable_curve(bump, scalar_field, schedule, 0.0,
                                   [0.25, 0.75], grid5, STEP)
    t, member, label = curve[1]
    assert label == "u1"
    flow_pt = 1.0 - math.exp(-0.75)  # u + (x - u)e^{-dt} at x = 0, u = 1
    assert abs(member.eval([0.0]) - bump.eval([flow_pt])) < 1e-9


def test_schedule_gap_rejected(scalar_field, sample3, bump, grid5):
    u0 = sample3.constant_signal(1, 1.0)
    schedule = [((0.0, 0.4), u0), ((0.5, 1.0), u0)]
    with pytest.raises(ValueError):
        build_observable_curve(bump, scalar_field, schedule, 0.0, [0.45],
                               grid5, STEP)
