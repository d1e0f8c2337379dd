"""Set-valued composition operators sampled over finite signal families.

For an observable phi and a family of control signals, the operator sample
at a time pair (tau, t) is the set of compositions of phi with the flows of
the signals.  The family is indexed by the pair itself, never by t - tau:
all checks below take both times explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flows import _flow_batch, flow_on_grid, splice_closure
from .observables import GridSampled, ObservableSet, Scaled, Sum, sup_norm_diff
from .setops import InclusionReport, hausdorff

__all__ = [
    "koopman_set",
    "check_semigroup",
    "check_homogeneity",
    "check_subadditivity",
    "check_lipschitz_in_observable",
    "LipschitzReport",
    "build_observable_curve",
]


def _label(signal, index):
    return signal.name or f"signal_{index}"


def koopman_set(phi, field, signals, tau, t, grid, step):
    """Sample {phi o flow(u, tau, t) : u in signals} on the grid.

    Members are grid-sampled observables labeled by their generating signal.
    """
    if not signals:
        raise ValueError("empty signal family")
    members, labels = [], []
    for i, sig in enumerate(signals):
        flowed = flow_on_grid(field, sig, tau, t, grid, step)
        members.append(GridSampled(grid, phi.values(flowed)))
        labels.append(_label(sig, i))
    return ObservableSet(members, labels)


def check_semigroup(phi, field, signals, tau, s, t, grid, step):
    """Defects between one-stage and two-stage operator samples.

    The one-stage side samples the operator for the splice closure of the
    family at the intermediate time s over (tau, t).  The two-stage side
    applies the (s, t) operator memberwise to the (tau, s) sample; each
    composed member is evaluated exactly by flowing grid nodes with the
    outer signal on (s, t) and then with the inner signal on (tau, s), so
    no intermediate interpolation enters the comparison.
    """
    if not (tau <= s <= t):
        raise ValueError("intermediate time must satisfy tau <= s <= t")
    family = splice_closure(signals, s)
    one_stage = koopman_set(phi, field, family, tau, t, grid, step)

    # outer stage on (s, t) once per signal, then all endpoints stacked and
    # flowed together through each inner signal on (tau, s)
    n = grid.n_nodes
    outer = np.vstack([flow_on_grid(field, u, s, t, grid, step) for u in family])
    members, labels = [], []
    for i, v in enumerate(family):
        Z = _flow_batch(field, v, tau, s, outer, step)
        vals = phi.values(Z)
        for j, u in enumerate(family):
            members.append(GridSampled(grid, vals[j * n : (j + 1) * n]))
            labels.append(f"{_label(v, i)}*{_label(u, j)}")
    two_stage = ObservableSet(members, labels)
    return hausdorff(one_stage, two_stage, grid)


def check_homogeneity(phi, alpha, field, signals, tau, t, grid, step):
    """Hausdorff defect between the sample of alpha*phi and alpha times the
    sample of phi; zero up to floating error since flows are shared."""
    left = koopman_set(Scaled(alpha, phi), field, signals, tau, t, grid, step)
    right = koopman_set(phi, field, signals, tau, t, grid, step).scaled(alpha)
    return hausdorff(left, right, grid).hausdorff


def check_subadditivity(phi1, phi2, field, signals, tau, t, grid, step):
    """Forward defect of the sample of phi1 + phi2 into the pairwise
    Minkowski sum of the separate samples; diagonal pairs realize members
    exactly."""
    both = koopman_set(Sum(phi1, phi2), field, signals, tau, t, grid, step)
    k1 = koopman_set(phi1, field, signals, tau, t, grid, step)
    k2 = koopman_set(phi2, field, signals, tau, t, grid, step)
    members, labels = [], []
    for m1, l1 in zip(k1.members, k1.labels):
        for m2, l2 in zip(k2.members, k2.labels):
            members.append(GridSampled(m1.grid, m1.node_values + m2.node_values))
            labels.append(f"{l1}+{l2}")
    minkowski = ObservableSet(members, labels)
    return hausdorff(both, minkowski, grid).forward_defect


@dataclass
class LipschitzReport:
    """Operator-sample distance against the observable distance."""

    set_defect: float
    observable_distance: float

    @property
    def ok(self):
        return self.set_defect <= self.observable_distance + 1e-12


def check_lipschitz_in_observable(phi1, phi2, field, signals, tau, t, grid, step):
    """1-Lipschitz evidence: the forward defect of the phi1 sample into the
    phi2 sample is bounded by sup |phi1 - phi2| over the flowed window.

    The observable distance is taken over all flowed node positions, which
    is the window actually visited by the samples.
    """
    k1 = koopman_set(phi1, field, signals, tau, t, grid, step)
    flowed = [flow_on_grid(field, sig, tau, t, grid, step) for sig in signals]
    k2_members = [GridSampled(grid, phi2.values(Y)) for Y in flowed]
    k2 = ObservableSet(k2_members, list(k1.labels))
    defect = hausdorff(k1, k2, grid).forward_defect
    dist = max(
        float(np.max(np.abs(phi1.values(Y) - phi2.values(Y)))) for Y in flowed
    )
    return LipschitzReport(defect, dist)


def build_observable_curve(phi, field, schedule, tau, t_values, grid, step):
    """Sample the transported observable along a schedule of signals.

    ``schedule`` is a list of ((t_start, t_end), signal); each output time
    must fall in exactly one interval (half-open except the last, which is
    closed).  The curve value at time t is phi composed with the scheduled
    signal's flow over (tau, t), labeled by the generating signal.
    """
    if not schedule:
        raise ValueError("empty schedule")
    starts = [iv[0] for iv, _ in schedule]
    ends = [iv[1] for iv, _ in schedule]
    for (a0, b0), (a1, b1) in zip(zip(starts, ends), zip(starts[1:], ends[1:])):
        if abs(b0 - a1) > 1e-12:
            raise ValueError("schedule intervals must tile the time range without gaps")
    out = []
    for t in t_values:
        chosen = None
        for k, ((a, b), sig) in enumerate(schedule):
            last = k == len(schedule) - 1
            if (a - 1e-12 <= t < b - 1e-12) or (last and a - 1e-12 <= t <= b + 1e-12):
                chosen = (sig, k)
                break
        if chosen is None:
            raise ValueError(f"time {t} not covered by the schedule")
        sig, k = chosen
        flowed = flow_on_grid(field, sig, tau, t, grid, step)
        member = GridSampled(grid, phi.values(flowed))
        out.append((float(t), member, _label(sig, k)))
    return out
