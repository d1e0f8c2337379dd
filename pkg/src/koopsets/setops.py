"""Finite-sample set operations in the sup norm of a fixed grid.

Sets of observables are represented by finite labeled samples.  Distances
between members are sup-norm distances over grid nodes; one-sided defects
quantify inclusion evidence: the forward defect bounds how far the first
set sticks out of the second, the backward defect how much of the second
set is missed.  Convex hulls are sampled with random weights, never
enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import GridSampled, ObservableSet, Scaled, Sum

__all__ = [
    "InclusionReport",
    "DiagnosticTable",
    "hausdorff",
    "scaled_difference_set",
    "kuratowski_diagnostic",
    "convex_combinations",
    "combine",
    "fit_rate",
    "diagnostic_csv",
]


@dataclass
class InclusionReport:
    """One-sided sup-inf defects between two sampled sets.

    forward_defect: sup over members of A of the distance to B (escape
    evidence); backward_defect: sup over B of the distance to A (coverage
    evidence); hausdorff is their max.
    """

    forward_defect: float
    backward_defect: float

    @property
    def hausdorff(self):
        return max(self.forward_defect, self.backward_defect)


def _pairwise_sup(A, B, grid):
    VA = A.values_matrix(grid)
    VB = B.values_matrix(grid)
    # D[i, j] = sup over nodes of |A_i - B_j|
    return np.max(np.abs(VA[:, None, :] - VB[None, :, :]), axis=2)


def hausdorff(A, B, grid):
    """Hausdorff report between two nonempty sampled sets over a grid."""
    if len(A) == 0 or len(B) == 0:
        raise ValueError("hausdorff needs nonempty sets on both sides")
    D = _pairwise_sup(A, B, grid)
    forward = float(np.max(np.min(D, axis=1)))
    backward = float(np.max(np.min(D, axis=0)))
    return InclusionReport(forward, backward)


def scaled_difference_set(S, base, h, grid):
    """Members (psi - base)/h sampled on the grid, labels preserved."""
    if h == 0:
        raise ValueError("difference quotient scale h must be nonzero")
    base_vals = base.values(grid.nodes)
    members = [
        GridSampled(grid, (m.values(grid.nodes) - base_vals) / h) for m in S.members
    ]
    return ObservableSet(members, list(S.labels))


def fit_rate(h_values, defects, floor=1e-14):
    """Least-squares slope of log defect against log h.

    Entries at or below the floor are dropped (they are converged to
    floating noise); with fewer than two usable points the rate is nan.
    """
    h = np.asarray(h_values, dtype=float)
    d = np.asarray(defects, dtype=float)
    mask = d > floor
    if np.count_nonzero(mask) < 2:
        return float("nan")
    slope = np.polyfit(np.log(h[mask]), np.log(d[mask]), 1)[0]
    return float(slope)


@dataclass
class DiagnosticTable:
    """Per-scale inclusion defects against a target set.

    forward_defect -> 0 is evidence that no members escape the target in
    the limit (outer/upper limit evidence); backward_defect -> 0 is
    evidence that every target member is approached (inner/lower limit
    evidence).  Both reference the best member at each scale, so they
    certify subsequence behavior.
    """

    h_values: list
    forward_defects: list
    backward_defects: list

    @property
    def forward_rate(self):
        return fit_rate(self.h_values, self.forward_defects)

    @property
    def backward_rate(self):
        return fit_rate(self.h_values, self.backward_defects)


def kuratowski_diagnostic(sequence, target, grid):
    """Defect table for a scale-indexed family of sets against a target.

    ``sequence`` is a list of (h, ObservableSet) with strictly decreasing
    positive h.
    """
    hs = [h for h, _ in sequence]
    if not hs:
        raise ValueError("empty set sequence")
    for a, b in zip(hs[:-1], hs[1:]):
        if not (b < a):
            raise ValueError("scale sequence must be strictly decreasing")
    if hs[-1] <= 0:
        raise ValueError("scales must be positive")
    fwd, bwd = [], []
    for _, S in sequence:
        rep = hausdorff(S, target, grid)
        fwd.append(rep.forward_defect)
        bwd.append(rep.backward_defect)
    return DiagnosticTable(list(hs), fwd, bwd)


def combine(S, weights):
    """Single convex combination of the members with explicit weights."""
    w = np.asarray(weights, dtype=float)
    if w.size != len(S):
        raise ValueError("one weight per member required")
    if np.any(w < -1e-15) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to one")
    out = Scaled(w[0], S.members[0])
    for wi, m in zip(w[1:], S.members[1:]):
        out = Sum(out, Scaled(wi, m))
    return out


def convex_combinations(S, count, seed):
    """Append ``count`` random convex combinations to a sampled set.

    Weights are drawn from a flat Dirichlet via a seeded generator, so the
    result is deterministic in (members, count, seed).
    """
    if len(S) == 0:
        raise ValueError("cannot combine members of an empty set")
    rng = np.random.default_rng(seed)
    members = list(S.members)
    labels = list(S.labels)
    for k in range(count):
        w = rng.dirichlet(np.ones(len(S.members)))
        members.append(combine(S, w))
        labels.append(f"combo_{k}")
    return ObservableSet(members, labels)


def diagnostic_csv(table):
    """CSV dump: h, forward_defect, backward_defect, fitted_rate.

    The fitted rate is the log-log slope of the forward column, repeated on
    every row.
    """
    rate = table.forward_rate
    lines = ["h,forward_defect,backward_defect,fitted_rate"]
    for h, f, b in zip(table.h_values, table.forward_defects, table.backward_defects):
        lines.append(f"{h:.17g},{f:.17g},{b:.17g},{rate:.17g}")
    return "\n".join(lines) + "\n"
