"""Gradient-field operator samples and generator convergence studies.

The operator sample of an observable phi over a control sample is the set
of products grad(phi) . f_u, one member per control value.  The generator
study compares difference quotients of flow compositions over shrinking
horizons against that set: quotients of constant signals approach plain
members at first order, while quotients of signals that mix two controls
within the horizon approach convex combinations of members, which is what
separates the plain sample from its convexified enrichment when the
control sample is not convex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flows import ControlSignal
from .koopman import koopman_set
from .observables import GridSampled, ObservableSet, compose_with_flow
from .setops import (
    combine,
    convex_combinations,
    fit_rate,
    hausdorff,
    scaled_difference_set,
)

__all__ = [
    "GeneratorStudy",
    "TransportResidualRow",
    "liouville_set",
    "generator_study",
    "two_phase_signal",
    "transport_solve",
    "inclusion_residual",
    "study_csv",
    "halving_ratios",
]


def liouville_set(phi, field, sample, grid):
    """Sample {grad(phi) . f_u : u in sample} on the grid.

    phi must carry an exact gradient rule (closed forms); grid-sampled
    observables are rejected since their gradients are only numerical.
    """
    if not phi.smooth:
        raise ValueError("observable lacks an exact gradient; liouville_set needs C^1 forms")
    grads = phi.gradients(grid.nodes)
    members, labels = [], []
    for point in sample.points:
        F = field.eval(grid.nodes, point.as_array())
        members.append(GridSampled(grid, np.sum(grads * F, axis=1)))
        labels.append(f"u{point.id}")
    return ObservableSet(members, labels)


def two_phase_signal(sample, id_a, id_b, tau, h):
    """Signal holding value a on [tau, tau + h/2) and value b afterwards.

    Horizon is tau + h with uniform segments of length h/2, so tau must be
    a multiple of h/2.  Used to realize convex mixtures of two fields over
    one difference-quotient horizon.
    """
    half = 0.5 * h
    n = (tau + h) / half
    if abs(n - round(n)) > 1e-9 or abs(tau / half - round(tau / half)) > 1e-9:
        raise ValueError("tau must be a multiple of h/2 for a two-phase signal")
    n = int(round(n))
    switch = tau + half
    values = []
    for k in range(n):
        mid = (k + 0.5) * half
        values.append(id_a if mid < switch else id_b)
    return ControlSignal(
        sample, tau + h, tuple(values), name=f"mix_{id_a}_{id_b}"
    )


@dataclass
class GeneratorStudy:
    """Defect columns of a difference-quotient study over shrinking horizons.

    backward_defects measure how well each operator member is approached by
    some quotient (coverage evidence); forward_defects measure how far the
    quotients stray from the plain member sample, and
    forward_defects_convexified the same against the convexified sample.
    """

    h_values: list
    backward_defects: list
    forward_defects: list
    forward_defects_convexified: list

    @property
    def backward_rate(self):
        return fit_rate(self.h_values, self.backward_defects)

    @property
    def forward_rate(self):
        return fit_rate(self.h_values, self.forward_defects)

    @property
    def forward_rate_convexified(self):
        return fit_rate(self.h_values, self.forward_defects_convexified)


def halving_ratios(defects, floor=1e-14):
    """Consecutive defect ratios; nan where the smaller entry is at noise level."""
    out = []
    for a, b in zip(defects[:-1], defects[1:]):
        out.append(b / a if min(a, b) > floor else float("nan"))
    return out


def generator_study(phi, field, sample, tau, h_values, grid, step,
                    mixtures=False, combo_count=8, seed=0):
    """Difference quotients of flow compositions against the operator sample.

    For each horizon h the quotient set collects (phi o flow - phi)/h over
    the constant signals of the control sample and, when ``mixtures`` is on
    and the sample has at least two points, over two-phase signals that
    split the horizon between each pair of controls.  The convexified
    target enriches the plain sample with the matching equal-weight pair
    combinations and with seeded random convex combinations.

    Constant signals alone already witness both one-sided limits at first
    order; the mixture enrichment exists to expose the convexification
    phenomenon, where quotients of rapidly switching signals accumulate on
    convex combinations that no single control realizes.
    """
    hs = [float(h) for h in h_values]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("horizons must be positive")
    for a, b in zip(hs[:-1], hs[1:]):
        if not (b < a):
            raise ValueError("horizon sequence must be strictly decreasing")

    plain = liouville_set(phi, field, sample, grid)
    pairs = []
    if mixtures and len(sample) > 1:
        pairs = [
            (i, j) for i in range(len(sample)) for j in range(len(sample)) if i < j
        ]
    target = ObservableSet(list(plain.members), list(plain.labels))
    for i, j in pairs:
        w = np.zeros(len(plain))
        w[i] = w[j] = 0.5
        target.members.append(combine(plain, w))
        target.labels.append(f"mid_{i}_{j}")
    target = convex_combinations(target, combo_count, seed)

    h_max = hs[0]
    constants = [
        sample.constant_signal(p.id, tau + h_max, name=f"const_{p.id}")
        for p in sample.points
    ]
    back, fwd, fwd_conv = [], [], []
    for h in hs:
        signals = list(constants)
        for i, j in pairs:
            signals.append(two_phase_signal(sample, i, j, tau, h))
        K = koopman_set(phi, field, signals, tau, tau + h, grid, step)
        Q = scaled_difference_set(K, phi, h, grid)
        rep_plain = hausdorff(Q, plain, grid)
        back.append(rep_plain.backward_defect)
        fwd.append(rep_plain.forward_defect)
        fwd_conv.append(hausdorff(Q, target, grid).forward_defect)
    return GeneratorStudy(hs, back, fwd, fwd_conv)


def study_csv(study):
    """CSV dump: h, backward_defect, forward_defect, forward_defect_convexified,
    fitted_rate.  The fitted rate is the backward-column log-log slope,
    repeated on every row."""
    rate = study.backward_rate
    lines = ["h,backward_defect,forward_defect,forward_defect_convexified,fitted_rate"]
    for h, b, f, fc in zip(
        study.h_values,
        study.backward_defects,
        study.forward_defects,
        study.forward_defects_convexified,
    ):
        lines.append(f"{h:.17g},{b:.17g},{f:.17g},{fc:.17g},{rate:.17g}")
    return "\n".join(lines) + "\n"


def transport_solve(phi, field, signal, t_final, tau_values, grid, step):
    """Solve the transport problem along characteristics.

    Returns [(tau, psi_tau)] where psi_tau samples phi composed with the
    signal's flow over (tau, t_final); the terminal condition at
    tau = t_final is phi itself on the grid.  Requires exact gradients on
    phi and a C^1 field.
    """
    if not phi.smooth:
        raise ValueError("transport needs a C^1 observable")
    if not field.smooth:
        raise ValueError("transport needs a C^1 field")
    out = []
    for tau in tau_values:
        out.append((float(tau), compose_with_flow(phi, field, signal, tau, t_final, grid, step)))
    return out


@dataclass
class TransportResidualRow:
    """Best transport residual at one interior curve time."""

    tau: float
    residual: float
    control_id: int
    residuals: dict


def inclusion_residual(curve, field, sample, grid):
    """Residuals of the transport identity along a sampled curve.

    For each interior time the time derivative is a central difference of
    the curve values and the residual per control u is the sup over grid
    nodes of |d/dtau psi + grad(psi) . f_u|; the reported control is the
    minimizer.  Numerical gradients of grid-sampled members are allowed
    here.  The curve must be sampled on a uniform time grid with at least
    three points.
    """
    if len(curve) < 3:
        raise ValueError("need at least three curve samples for interior residuals")
    taus = np.array([c[0] for c in curve], dtype=float)
    dts = np.diff(taus)
    if np.any(np.abs(dts - dts[0]) > 1e-9 * max(1.0, abs(dts[0]))):
        raise ValueError("curve must be sampled on a uniform time grid")
    dt = dts[0]
    vals = []
    for _, member in curve:
        if isinstance(member, GridSampled) and member.grid == grid:
            vals.append(member.node_values)
        else:
            vals.append(member.values(grid.nodes))
    fields = {p.id: field.eval(grid.nodes, p.as_array()) for p in sample.points}
    rows = []
    for i in range(1, len(curve) - 1):
        dpsi = (vals[i + 1] - vals[i - 1]) / (2.0 * dt)
        grads = curve[i][1].gradients(grid.nodes)
        residuals = {}
        for pid, F in fields.items():
            residuals[pid] = float(np.max(np.abs(dpsi + np.sum(grads * F, axis=1))))
        best = min(residuals, key=residuals.get)
        rows.append(TransportResidualRow(float(taus[i]), residuals[best], best, residuals))
    return rows
