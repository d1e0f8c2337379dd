"""Controlled flows: integrator accuracy, group structure, stability bounds,
signal metric and splicing, and continuity of the flow in the control."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from koopsets import (
    ControlSampleSet,
    FlowDivergenceError,
    SpatialGrid,
    SpliceError,
    VectorFieldSpec,
    check_continuity_in_control,
    check_flow_estimates,
    control_distance,
    flow_on_grid,
    flow_points,
    integrate_flow,
    splice,
    splice_closure,
    trajectory_csv,
)
from koopsets.flows import growth_constant
from koopsets.oracles import linear_feedback_flow, scalar_affine_flow

STEP = 1e-3


# ---------------------------------------------------------------------------
# integrate_flow point values


def test_scalar_decay_to_closed_form(scalar_field, sample3):
    sig = sample3.constant_signal(1, 1.0)  # u = 0
    res = integrate_flow(scalar_field, sig, 0.0, 1.0, [1.0], STEP)
    assert abs(res.final_state[0] - math.exp(-1.0)) < 1e-9


def test_scalar_forced_to_closed_form(scalar_field, sample3):
    sig = sample3.constant_signal(2, 1.0)  # u = +1
    res = integrate_flow(scalar_field, sig, 0.0, 1.0, [0.0], STEP)
    assert abs(res.final_state[0] - (1.0 - math.exp(-1.0))) < 1e-9


def test_zero_field_flow_is_exact_identity(zero_field2):
    sample = ControlSampleSet([[3.5]])
    sig = sample.constant_signal(0, 2.0, segments=3)
    res = integrate_flow(zero_field2, sig, 0.25, 1.75, [3.0, -2.0], STEP)
    assert np.array_equal(res.final_state, np.array([3.0, -2.0]))


def test_flow_identity_at_equal_times(scalar_field, sample3):
    sig = sample3.constant_signal(0, 1.0)
    for x0 in (-2.0, 0.3, 1.7):
        res = integrate_flow(scalar_field, sig, 0.4, 0.4, [x0], STEP)
        assert res.final_state[0] == x0


def test_flow_on_grid_halves_nodes(scalar_field, sample3, grid5):
    sig = sample3.constant_signal(1, 1.0)  # u = 0
    F = flow_on_grid(scalar_field, sig, 0.0, math.log(2.0), grid5, STEP)
    assert np.max(np.abs(F[:, 0] - grid5.nodes[:, 0] / 2.0)) < 1e-9


def test_flow_points_forced_origin(scalar_field, sample3):
    sig = sample3.constant_signal(2, 1.0)  # u = +1
    F = flow_points(scalar_field, sig, 0.0, math.log(2.0), [[0.0]], STEP)
    assert abs(F[0, 0] - 0.5) < 1e-9


def test_trajectory_recording_and_csv(scalar_field, sample3):
    sig = sample3.constant_signal(1, 1.0)
    res = integrate_flow(scalar_field, sig, 0.0, 0.5, [1.0], 0.1, record=True)
    assert res.times[0] == 0.0 and abs(res.times[-1] - 0.5) < 1e-12
    assert res.states.shape == (len(res.times), 1)
    text = trajectory_csv(res)
    assert text.splitlines()[0] == "time,state_0"
    assert len(text.splitlines()) == len(res.times) + 1


def test_divergence_raises(sample3):
    stiff = VectorFieldSpec.scalar_affine(5000.0)
    sig = sample3.constant_signal(1, 1.0)
    with pytest.raises(FlowDivergenceError):
        integrate_flow(stiff, sig, 0.0, 1.0, [1.0], 1e-3)


# ---------------------------------------------------------------------------
# group structure of the flow family


@given(
    x0=st.floats(-2.0, 2.0),
    s_frac=st.floats(0.0, 1.0),
    values=st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2),
                     st.integers(0, 2)),
)
def test_group_and_inverse_properties(scalar_field, sample3, x0, s_frac, values):
    sig = sample3.signal(values, 1.0)
    tau, t = 0.0, 1.0
    s = tau + s_frac * (t - tau)
    full = integrate_flow(scalar_field, sig, tau, t, [x0], STEP).final_state
    mid = integrate_flow(scalar_field, sig, tau, s, [x0], STEP).final_state
    two = integrate_flow(scalar_field, sig, s, t, mid, STEP).final_state
    assert abs(two[0] - full[0]) < 1e-9
    back = integrate_flow(scalar_field, sig, t, tau, full, STEP).final_state
    assert abs(back[0] - x0) < 1e-9


def test_backward_flow_inverts_forward(planar_field):
    sample = planar_field.feedback_sample()
    sig = sample.signal((1, 0), 1.0)
    x0 = np.array([0.7, -0.4])
    fwd = integrate_flow(planar_field, sig, 0.0, 1.0, x0, STEP).final_state
    back = integrate_flow(planar_field, sig, 1.0, 0.0, fwd, STEP).final_state
    assert np.max(np.abs(back - x0)) < 1e-9


# ---------------------------------------------------------------------------
# oracle agreement


def test_scalar_oracle_multisegment(scalar_field, sample3):
    sig = sample3.signal((2, 0, 1, 2), 1.0)
    for x0 in (-1.5, 0.0, 2.0):
        for tau, t in ((0.0, 1.0), (0.25, 0.8), (1.0, 0.1)):
            got = integrate_flow(scalar_field, sig, tau, t, [x0], STEP).final_state[0]
            want = scalar_affine_flow(-1.0, sig, tau, t, x0)
            assert abs(got - want) < 1e-8


def test_linear_feedback_matches_matrix_exponential(planar_field, planar_grid):
    sample = planar_field.feedback_sample()
    for vals in ((0,), (1,), (0, 1), (1, 0, 1)):
        sig = sample.signal(vals, 1.0)
        got = flow_on_grid(planar_field, sig, 0.0, 1.0, planar_grid, STEP)
        want = linear_feedback_flow(planar_field, sig, 0.0, 1.0, planar_grid.nodes)
        assert np.max(np.abs(got - want)) < 1e-8


def test_backward_oracle_agreement(planar_field):
    sample = planar_field.feedback_sample()
    sig = sample.signal((0, 1), 1.0)
    X = np.array([[0.5, -0.5], [1.0, 1.0]])
    got = flow_points(planar_field, sig, 1.0, 0.0, X, STEP)
    want = linear_feedback_flow(planar_field, sig, 1.0, 0.0, X)
    assert np.max(np.abs(got - want)) < 1e-8


# ---------------------------------------------------------------------------
# control signals and their metric


def test_signal_segment_semantics(sample3):
    sig = sample3.signal((0, 2), 1.0)
    assert sig.point_at(0.0).id == 0
    assert sig.point_at(0.49).id == 0
    assert sig.point_at(0.5).id == 2  # right-continuous at the breakpoint
    assert sig.point_at(1.0).id == 2  # last value holds at the horizon
    assert np.allclose(sig.breakpoints(), [0.0, 0.5, 1.0])


def test_signal_validation(sample3):
    with pytest.raises(ValueError):
        sample3.signal((), 1.0)
    with pytest.raises(ValueError):
        sample3.signal((7,), 1.0)
    with pytest.raises(ValueError):
        sample3.signal((0,), 0.0)
    with pytest.raises(ValueError):
        sample3.constant_signal(5, 1.0)


def test_control_distance_examples(sample3):
    u = sample3.constant_signal(1, 1.0)  # u = 0
    v = sample3.constant_signal(2, 1.0)  # v = 1
    assert control_distance(u, u) == 0.0
    assert abs(control_distance(u, v) - 1.0) < 1e-15
    quarter = sample3.signal((2, 1, 1, 1), 1.0)  # 1 on [0, 0.25), 0 after
    assert abs(control_distance(u, quarter) - 0.25) < 1e-15


def test_control_distance_common_refinement(sample3):
    u = sample3.signal((1, 2), 1.0)       # 0 then 1, switch at 1/2
    v = sample3.signal((1, 1, 2), 1.0)    # 0 then 1, switch at 2/3
    # they differ only on [1/2, 2/3), where |1 - 0| = 1
    assert abs(control_distance(u, v) - 1.0 / 6.0) < 1e-12


def test_control_distance_horizon_mismatch(sample3):
    u = sample3.constant_signal(0, 1.0)
    v = sample3.constant_signal(0, 2.0)
    with pytest.raises(ValueError):
        control_distance(u, v)


def test_distance_zero_for_ae_equal_signals(sample3):
    u = sample3.constant_signal(1, 1.0, segments=1)
    v = sample3.constant_signal(1, 1.0, segments=3)
    assert control_distance(u, v) == 0.0


# ---------------------------------------------------------------------------
# splicing


def test_splice_values(sample3):
    u = sample3.constant_signal(0, 1.0, segments=2)
    v = sample3.constant_signal(2, 1.0, segments=2)
    w = splice(u, v, 0.5)
    assert w.point_at(0.25).id == 0
    assert w.point_at(0.75).id == 2


def test_splice_requires_breakpoint(sample3):
    u = sample3.constant_signal(0, 1.0)
    v = sample3.constant_signal(2, 1.0)
    with pytest.raises(SpliceError):
        splice(u, v, 0.3)


def test_splice_rejects_horizon_mismatch(sample3):
    u = sample3.constant_signal(0, 1.0)
    v = sample3.constant_signal(2, 2.0)
    with pytest.raises(SpliceError):
        splice(u, v, 0.5)


def test_splice_closure_counts_and_membership(sample3):
    family = [sample3.constant_signal(i, 1.0, segments=2) for i in range(3)]
    closed = splice_closure(family, 0.5)
    # 3 constants plus the 6 ordered heterogeneous splices
    assert len(closed) == 9
    seqs = {sig.values for sig in closed}
    assert len(seqs) == 9
    for u in family:
        for v in family:
            w = splice(u, v, 0.5)
            assert w.values in seqs


# ---------------------------------------------------------------------------
# stability estimates


def test_flow_estimates_zero_field(zero_field2):
    grid = SpatialGrid([-1.0, -1.0], [1.0, 1.0], 4)
    sample = ControlSampleSet([[0.0], [1.0]])
    sigs = [sample.constant_signal(i, 1.0) for i in range(2)]
    rep = check_flow_estimates(zero_field2, sigs, grid, math.sqrt(2.0), 1e-2)
    assert abs(rep.M_R_observed - math.sqrt(2.0)) < 1e-12
    assert rep.L_R_observed <= 1.0 + 1e-9
    assert rep.growth_constant == 0.0
    assert rep.growth_bound == math.sqrt(2.0)
    assert rep.growth_ok


def test_forward_contraction_stays_in_window(scalar_field, sample3, grid5):
    """Forward flows of xdot = -x + u with |u| <= 1 contract toward [-1, 1]
    and never leave [-2, 2]."""
    for pid in range(3):
        sig = sample3.constant_signal(pid, 1.0)
        for tau, t in ((0.0, 0.3), (0.0, 1.0), (0.25, 0.75)):
            F = flow_on_grid(scalar_field, sig, tau, t, grid5, 1e-2)
            assert np.max(np.abs(F)) <= 2.0 + 1e-9


def test_flow_estimates_contraction(scalar_field, sample3, grid5):
    """The window bound samples both time orders, as in the two-parameter
    flow estimate; reversed flows of the contraction expand up to e^T, yet
    stay under the Gronwall bound (R + mT)e^{mT} with m = max(|a|, |u|)."""
    sigs = [sample3.constant_signal(i, 1.0) for i in range(3)]
    rep = check_flow_estimates(scalar_field, sigs, grid5, 2.0, 1e-2)
    assert rep.growth_constant == 1.0
    assert abs(rep.growth_bound - 3.0 * math.e) < 1e-12
    assert 2.0 <= rep.M_R_observed <= rep.growth_bound
    assert rep.growth_ok


def test_flow_estimates_expansion_reaches_e():
    field = VectorFieldSpec.scalar_affine(1.0)
    sample = ControlSampleSet([[0.0]])
    sigs = [sample.constant_signal(0, 1.0)]
    grid = SpatialGrid([-1.0], [1.0], 5)
    rep = check_flow_estimates(field, sigs, grid, 1.0, 1e-3)
    assert abs(rep.M_R_observed - math.e) < 1e-6
    assert rep.growth_ok


def test_flow_estimates_cover_backward_expansion(planar_field, planar_grid):
    """Backward flows of the contraction grow like e^{2T}; the global
    linear-growth constant must still dominate them."""
    sample = planar_field.feedback_sample()
    sigs = [sample.constant_signal(0, math.pi)]
    rep = check_flow_estimates(planar_field, sigs, planar_grid, math.sqrt(2.0), 1e-2)
    assert rep.M_R_observed > 100.0  # the window really is left
    assert rep.growth_ok


@given(a=st.floats(-2.0, 2.0), u_hi=st.floats(0.0, 3.0))
def test_sampled_growth_below_exact_constant(a, u_hi):
    field = VectorFieldSpec.scalar_affine(a)
    sample = ControlSampleSet([[-u_hi], [u_hi]])
    sampled = growth_constant(field, sample, radius=2.0, n_samples=50)
    exact = field.linear_growth_constant(sample)
    assert sampled <= exact + 1e-12


def test_exact_growth_constant_linear_feedback(planar_field):
    sample = planar_field.feedback_sample()
    m = planar_field.linear_growth_constant(sample)
    # spectral norms of diag(-1,-2) and the rotation are 2 and 1
    assert abs(m - 2.0) < 1e-12


# ---------------------------------------------------------------------------
# continuity in the control


def _early_burst_signals(sample3, k_max):
    """v_k = +1 on [0, 2^{-k}), 0 afterwards, on a 2^k uniform grid."""
    out = []
    for k in range(k_max + 1):
        n = 2**k
        out.append(sample3.signal((2,) + (1,) * (n - 1), 1.0, name=f"v{k}"))
    return out


def test_continuity_matches_two_phase_closed_form(scalar_field, sample3, grid5):
    u = sample3.constant_signal(1, 1.0)  # u = 0
    perturbations = _early_burst_signals(sample3, 6)
    pairs = check_continuity_in_control(
        scalar_field, u, perturbations, grid5, 0.0, 1.0, STEP
    )
    for k, (dist, disc) in enumerate(pairs):
        eps = 2.0**-k
        assert abs(dist - eps) < 1e-12
        oracle = (1.0 - math.exp(-eps)) * math.exp(-(1.0 - eps))
        assert abs(disc - oracle) < 1e-8
    discs = [d for _, d in pairs]
    assert all(b <= a * 1.1 for a, b in zip(discs, discs[1:]))


def test_continuity_identical_perturbations(scalar_field, sample3, grid5):
    u = sample3.constant_signal(1, 1.0)
    pairs = check_continuity_in_control(
        scalar_field, u, [u, u, u], grid5, 0.0, 1.0, 1e-2
    )
    assert all(d == 0.0 and disc == 0.0 for d, disc in pairs)


def test_continuity_rejects_increasing_distances(scalar_field, sample3, grid5):
    u = sample3.constant_signal(1, 1.0)
    near = sample3.signal((2,) + (1,) * 7, 1.0)   # distance 1/8
    far = sample3.constant_signal(2, 1.0)         # distance 1
    with pytest.raises(ValueError):
        check_continuity_in_control(
            scalar_field, u, [near, far], grid5, 0.0, 1.0, 1e-2
        )
