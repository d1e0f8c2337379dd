"""Eigenstructure of linear feedback systems and spectral mapping evidence.

For a closed-loop matrix M = A + B K the observables x -> <e, x> built from
eigenvectors e of the adjoint M* are eigenfunctions of the gradient-field
operator: grad . (M x) picks up the factor lambda, and compositions with
the flow pick up exp(lambda (t - tau)).  The converse probe goes the other
way, recovering lambda from proportionality constants of composed
observables over shrinking horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .flows import flow_on_grid
from .liouville import liouville_set
from .observables import LinearWindow, Power, Product

__all__ = [
    "EigenPair",
    "ProbeRow",
    "ProbeTable",
    "liouville_eigenpairs_linear",
    "verify_liouville_eigen",
    "verify_spectral_mapping",
    "converse_spectral_probe",
    "eigen_product_check",
    "eigen_table_csv",
]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with adjoint eigenvector and the feedback that produced it.

    The vector satisfies M* e = conj(lam) e for M the closed-loop matrix;
    it is normalized to unit length with its first nonvanishing component
    rotated to the positive real axis.  The associated observable is
    x -> <e, x> (conjugate-linear in e, linear in x).
    """

    lam: complex
    evec: tuple
    feedback_id: int

    @property
    def vector(self):
        return np.asarray(self.evec, dtype=np.complex128)

    @property
    def observable(self):
        return LinearWindow(np.conj(self.vector))


def _normalize(vec):
    vec = vec / np.linalg.norm(vec)
    idx = np.nonzero(np.abs(vec) > 1e-12)[0]
    if idx.size:
        lead = vec[idx[0]]
        vec = vec * (np.conj(lead) / abs(lead))
    return vec


def liouville_eigenpairs_linear(field):
    """All eigenpairs of every closed-loop matrix of a linear feedback field.

    Pairs are ordered by (feedback id, real part, imaginary part) and each
    satisfies |M* e - conj(lam) e| <= 1e-10 after normalization.
    """
    if field.family != "linear_feedback":
        raise ValueError("eigenpairs require a linear_feedback field")
    pairs = []
    for fid in range(len(field.feedbacks)):
        M = field.closed_loop_matrix(fid)
        try:
            w, vl = scipy.linalg.eig(M, left=True, right=False)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - tiny dense eig
            raise RuntimeError(f"eigensolver failed for feedback {fid}: {exc}") from exc
        for lam, vec in zip(w, vl.T):
            e = _normalize(vec.astype(np.complex128))
            resid = np.linalg.norm(M.conj().T @ e - np.conj(lam) * e)
            if resid > 1e-10:
                raise RuntimeError(
                    f"eigenpair residual {resid:.3e} for feedback {fid} exceeds 1e-10"
                )
            pairs.append(EigenPair(complex(lam), tuple(e), fid))
    pairs.sort(key=lambda p: (p.feedback_id, p.lam.real, p.lam.imag))
    return pairs


def _pair_field_check(pair, field):
    if field.family != "linear_feedback":
        raise ValueError("pair verification requires a linear_feedback field")
    if not 0 <= pair.feedback_id < len(field.feedbacks):
        raise ValueError(
            f"pair feedback id {pair.feedback_id} not defined by this field"
        )


def verify_liouville_eigen(pair, field, grid):
    """Sup over grid of |grad(phi) . f_K - lam * phi| for the pair's feedback."""
    _pair_field_check(pair, field)
    phi = pair.observable
    coords = field.feedbacks[pair.feedback_id].reshape(-1)
    F = field.eval(grid.nodes, coords)
    lhs = np.sum(phi.gradients(grid.nodes) * F, axis=1)
    rhs = pair.lam * phi.values(grid.nodes)
    return float(np.max(np.abs(lhs - rhs)))


def verify_spectral_mapping(pair, field, tau, t, grid, step):
    """Sup over grid of |phi o flow - exp(lam (t - tau)) phi| under the
    pair's constant feedback."""
    _pair_field_check(pair, field)
    sample = field.feedback_sample()
    horizon = max(t, tau)
    if horizon <= 0:
        horizon = 1.0
    sig = sample.constant_signal(pair.feedback_id, horizon)
    phi = pair.observable
    flowed = flow_on_grid(field, sig, tau, t, grid, step)
    lhs = phi.values(flowed)
    rhs = np.exp(pair.lam * (t - tau)) * phi.values(grid.nodes)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class ProbeRow:
    """One horizon of the converse probe."""

    h: float
    proportional: bool
    signal: str
    rho: complex
    lambda_est: complex
    residual: float
    generator_gap: float


@dataclass
class ProbeTable:
    rows: list

    def lambda_estimates(self):
        return [r.lambda_est for r in self.rows if r.proportional]

    def cauchy_gap(self):
        """Gap between the estimates at the two smallest conclusive horizons."""
        est = [r.lambda_est for r in self.rows if r.proportional]
        if len(est) < 2:
            return float("nan")
        return abs(est[-1] - est[-2])


def converse_spectral_probe(phi, field, signals, tau, h_values, grid, step,
                            proportionality_tol=1e-6):
    """Recover an eigenvalue from proportionality of composed observables.

    For each horizon h every signal's composition is fitted against phi in
    least squares over the grid; a signal is conclusive when the fit
    residual stays below the proportionality tolerance.  The best
    conclusive signal gives rho(h) and lambda_est = (rho - 1)/h, and the
    generator gap measures the distance of lambda_est * phi to the sampled
    gradient-field set.  Horizons with no conclusive signal are flagged,
    not failed.
    """
    hs = [float(h) for h in h_values]
    if not hs or any(h <= 0 for h in hs):
        raise ValueError("horizons must be positive")
    for a, b in zip(hs[:-1], hs[1:]):
        if not (b < a):
            raise ValueError("horizon sequence must be strictly decreasing")
    if not signals:
        raise ValueError("empty signal family")
    base = phi.values(grid.nodes)
    norm2 = np.vdot(base, base)
    if abs(norm2) < 1e-300:
        raise ValueError("probe observable vanishes on the grid")
    sample = signals[0].sample
    liou = liouville_set(phi, field, sample, grid)
    rows = []
    for h in hs:
        best = None
        for i, sig in enumerate(signals):
            flowed = flow_on_grid(field, sig, tau, tau + h, grid, step)
            psi = phi.values(flowed)
            rho = complex(np.vdot(base, psi) / norm2)
            resid = float(np.max(np.abs(psi - rho * base)))
            if resid <= proportionality_tol and (best is None or resid < best[1]):
                best = (rho, resid, sig.name or f"signal_{i}")
        if best is None:
            rows.append(ProbeRow(h, False, "", 0j, 0j, float("inf"), float("inf")))
            continue
        rho, resid, name = best
        lam_est = (rho - 1.0) / h
        gap = min(
            float(np.max(np.abs(lam_est * base - member.node_values)))
            for member in liou.members
        )
        rows.append(ProbeRow(h, True, name, rho, lam_est, resid, gap))
    return ProbeTable(rows)


def eigen_product_check(pair1, pair2, alphas, field, grid):
    """Residual of the product eigenfunction relation on the grid.

    The observable phi1^a1 * phi2^a2 must satisfy the gradient-field
    relation with eigenvalue a1 lam1 + a2 lam2 under the shared feedback.
    Nodes where a base with exponent below one vanishes (|phi| < 1e-12)
    are excluded; a non-integer exponent over a base that is not positive
    real on the remaining nodes is an error.
    """
    _pair_field_check(pair1, field)
    _pair_field_check(pair2, field)
    if pair1.feedback_id != pair2.feedback_id:
        raise ValueError("eigen products need eigenpairs of the same feedback")
    a1, a2 = (float(a) for a in alphas)
    phi1, phi2 = pair1.observable, pair2.observable
    v1 = phi1.values(grid.nodes)
    v2 = phi2.values(grid.nodes)
    mask = np.ones(grid.n_nodes, dtype=bool)
    for a, v in ((a1, v1), (a2, v2)):
        if a < 1.0:
            mask &= np.abs(v) >= 1e-12
        if not float(a).is_integer():
            usable = v[mask]
            if np.any(np.abs(usable.imag) > 1e-12) or np.any(usable.real <= 0):
                raise ValueError(
                    "non-integer exponent needs a positive real base on the grid"
                )
    if not np.any(mask):
        raise ValueError("no grid nodes left after excluding vanishing bases")
    prod = Product(Power(phi1, a1), Power(phi2, a2))
    lam = a1 * pair1.lam + a2 * pair2.lam
    coords = field.feedbacks[pair1.feedback_id].reshape(-1)
    F = field.eval(grid.nodes, coords)
    lhs = np.sum(prod.gradients(grid.nodes) * F, axis=1)
    rhs = lam * prod.values(grid.nodes)
    return float(np.max(np.abs(lhs[mask] - rhs[mask])))


def eigen_table_csv(entries):
    """CSV dump of verified pairs: feedback_id, lambda_re, lambda_im,
    residual_liouville, residual_mapping.  ``entries`` holds
    (pair, residual_liouville, residual_mapping) triples."""
    lines = ["feedback_id,lambda_re,lambda_im,residual_liouville,residual_mapping"]
    for pair, r_liou, r_map in entries:
        lines.append(
            f"{pair.feedback_id},{pair.lam.real:.17g},{pair.lam.imag:.17g},"
            f"{r_liou:.17g},{r_map:.17g}"
        )
    return "\n".join(lines) + "\n"
