"""Named verification checks run by the scenario CLI.

Each check binds a property of the operator toolkit to one scenario
configuration, produces a CSV diagnostic table, and reports a single
``worst_defect`` that the runner compares strictly against the check's
tolerance (``worst_defect < tolerance`` passes).  Checks whose natural
verdict is a convergence-rate window report a normalized defect: the
largest relative excursion of the fitted quantities from their targets,
with tolerance 1.

Degenerate exact limits (every defect in a sequence at machine zero, as on
an identically zero field) short-circuit rate fitting: a sequence that is
already exactly converged has nothing left to fit and counts as defect 0.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .flows import (
    ControlSampleSet,
    check_continuity_in_control,
    check_flow_estimates,
    control_distance,
    flow_on_grid,
    flow_points,
    splice_closure,
)
from .observables import Bump, LinearWindow, SpatialGrid
from .koopman import (
    check_homogeneity,
    check_lipschitz_in_observable,
    check_semigroup,
    check_subadditivity,
)
from .liouville import (
    generator_study,
    halving_ratios,
    inclusion_residual,
    study_csv,
    transport_solve,
)
from .perron import (
    ParticleMeasure,
    TestBank,
    check_adjoint_inequality,
    check_duality,
    perron_generator_study,
)
from .spectral import (
    converse_spectral_probe,
    eigen_table_csv,
    liouville_eigenpairs_linear,
    verify_liouville_eigen,
    verify_spectral_mapping,
)
from . import oracles

EXACT_FLOOR = 1e-14


def _fmt(x):
    return f"{float(x):.17g}"


@dataclass
class CheckOutcome:
    """Result of one check: headline defect plus a CSV diagnostic table."""

    worst_defect: float
    csv_header: str
    csv_rows: list


@dataclass(frozen=True)
class CheckSpec:
    """Registry entry: where a check lives and what property it verifies."""

    name: str
    module: str
    description: str
    prop: str
    default_tolerance: float
    runner: object


class CheckContext:
    """Shared, lazily built inputs for the checks of one scenario run."""

    def __init__(self, *, field, sample, grid, tau, t, step, dtau, h_values,
                 segments, spliced_segments, seed):
        self.field = field
        self.sample = sample
        self.grid = grid
        self.tau = float(tau)
        self.t = float(t)
        self.step = float(step)
        self.dtau = float(dtau)
        self.h_values = list(h_values)
        self.segments = int(segments)
        self.spliced_segments = int(spliced_segments)
        self.seed = int(seed)
        self._eigenpairs = None

    # -- deterministic per-check randomness ---------------------------------

    def int_seed(self, name):
        """Stable per-check integer seed derived from the scenario seed."""
        return (self.seed * 0x100000000 + zlib.crc32(name.encode())) % (2**63)

    def rng(self, name):
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(zlib.crc32(name.encode()),))
        return np.random.default_rng(ss)

    # -- shared constructions ------------------------------------------------

    def constant_signals(self, horizon=None, segments=None):
        horizon = self.t if horizon is None else horizon
        segments = self.segments if segments is None else segments
        return [
            self.sample.constant_signal(p.id, horizon, segments=segments,
                                        name=f"const_{p.id}")
            for p in self.sample.points
        ]

    @property
    def box_center(self):
        return 0.5 * (self.grid.lo + self.grid.hi)

    @property
    def box_halfwidth(self):
        return 0.5 * float(np.min(self.grid.hi - self.grid.lo))

    def base_observable(self):
        """Window bump covering the whole grid box."""
        return Bump(self.box_center, self.box_halfwidth)

    def offset_observable(self):
        """Smaller bump pushed toward the upper corner of the box."""
        center = self.box_center + 0.25 * (self.grid.hi - self.box_center)
        return Bump(center, 0.5 * self.box_halfwidth)

    def seeded_bump(self, rng):
        center = rng.uniform(self.grid.lo, self.grid.hi)
        radius = self.box_halfwidth * rng.uniform(0.3, 1.0)
        return Bump(center, radius)

    def seeded_measure(self, rng, n_particles):
        lo = self.box_center - 0.75 * (self.box_center - self.grid.lo)
        hi = self.box_center + 0.75 * (self.grid.hi - self.box_center)
        positions = rng.uniform(lo, hi, size=(n_particles, self.field.dims))
        weights = rng.normal(size=n_particles) + 1j * rng.normal(size=n_particles)
        return ParticleMeasure(positions, weights)

    def eigenpairs(self):
        if self._eigenpairs is None:
            self._eigenpairs = liouville_eigenpairs_linear(self.field)
        return self._eigenpairs

    def min_norm_control(self):
        norms = np.linalg.norm(self.sample.coords_array(), axis=1)
        return int(np.argmin(norms))


def _all_exact(*columns):
    return all(max(col, default=0.0) < EXACT_FLOOR for col in columns)


def _rate_excursion(rate, center=1.0, halfwidth=0.2):
    if not np.isfinite(rate):
        return float("inf")
    return abs(rate - center) / halfwidth


def _ratio_excursion(ratios, center=0.5, halfwidth=0.15, last=3):
    tail = [r for r in ratios[-last:] if not np.isnan(r)]
    if not tail:
        return 0.0
    return max(abs(r - center) / halfwidth for r in tail)


# ---------------------------------------------------------------------------
# Flow-level checks


def run_flow_identity(ctx):
    """Equal start and end times return the input exactly; a forward flow
    followed by the reversed flow returns to the start."""
    rows = []
    worst = 0.0
    for sig in ctx.constant_signals():
        same = flow_on_grid(ctx.field, sig, ctx.tau, ctx.tau, ctx.grid, ctx.step)
        ident = float(np.max(np.abs(same - ctx.grid.nodes))) if same.size else 0.0
        fwd = flow_on_grid(ctx.field, sig, ctx.tau, ctx.t, ctx.grid, ctx.step)
        back = flow_points(ctx.field, sig, ctx.t, ctx.tau, fwd, ctx.step)
        inv = float(np.max(np.linalg.norm(back - ctx.grid.nodes, axis=1)))
        worst = max(worst, ident, inv)
        rows.append(f"{sig.name},{_fmt(ident)},{_fmt(inv)}")
    return CheckOutcome(worst, "signal,identity_defect,inverse_defect", rows)


def run_flow_oracle(ctx):
    """Fixed-step integration matches the closed-form flow of the system
    family (piecewise exponential or per-segment matrix exponential)."""
    rows = []
    worst = 0.0
    for sig in ctx.constant_signals():
        computed = flow_on_grid(ctx.field, sig, ctx.tau, ctx.t, ctx.grid, ctx.step)
        if ctx.field.family == "scalar_affine":
            exact = np.array([
                [oracles.scalar_affine_flow(ctx.field.a, sig, ctx.tau, ctx.t, x)]
                for x in ctx.grid.nodes[:, 0]
            ])
        else:
            exact = oracles.linear_feedback_flow(
                ctx.field, sig, ctx.tau, ctx.t, ctx.grid.nodes)
        defect = float(np.max(np.abs(computed - exact)))
        worst = max(worst, defect)
        rows.append(f"{sig.name},{_fmt(defect)}")
    return CheckOutcome(worst, "signal,defect", rows)


def run_flow_estimates(ctx):
    """Sampled flows stay inside the linear-growth a-priori bound
    (R + mT)e^{mT} and have a finite window Lipschitz constant.

    The estimate samples a decimated node lattice (at most ~60 nodes, box
    corners always included) because the pairwise Lipschitz ratios grow
    quadratically in the node count while the observed constants are
    insensitive to lattice density.
    """
    dims = ctx.field.dims
    ppa = min(ctx.grid.points_per_axis, max(2, int(60 ** (1.0 / dims))))
    sample_grid = SpatialGrid(ctx.grid.lo, ctx.grid.hi, ppa)
    radius = float(np.max(np.linalg.norm(sample_grid.nodes, axis=1)))
    report = check_flow_estimates(ctx.field, ctx.constant_signals(),
                                  sample_grid, radius, ctx.step)
    defect = max(0.0, report.M_R_observed - report.growth_bound)
    if not np.isfinite(report.L_R_observed):
        defect = float("inf")
    rows = [
        f"M_R_observed,{_fmt(report.M_R_observed)}",
        f"L_R_observed,{_fmt(report.L_R_observed)}",
        f"growth_constant,{_fmt(report.growth_constant)}",
        f"growth_bound,{_fmt(report.growth_bound)}",
    ]
    return CheckOutcome(defect, "quantity,value", rows)


def run_continuity_in_control(ctx):
    """Flow discrepancy decreases (10% slack) along perturbations whose
    control distance to the base signal shrinks to zero."""
    base_id = ctx.min_norm_control()
    dists = [ctx.sample.distance(base_id, p.id) for p in ctx.sample.points]
    other_id = int(np.argmax(dists))
    base = ctx.sample.constant_signal(base_id, ctx.t, name=f"const_{base_id}")
    perturbations = []
    for k in range(1, 7):
        n_seg = 2 ** k
        values = [other_id] + [base_id] * (n_seg - 1)
        perturbations.append(ctx.sample.signal(values, ctx.t, name=f"head_{k}"))
    pairs = check_continuity_in_control(ctx.field, base, perturbations,
                                        ctx.grid, ctx.tau, ctx.t, ctx.step)
    rows = [f"{k + 1},{_fmt(d)},{_fmt(disc)}" for k, (d, disc) in enumerate(pairs)]
    worst = 0.0
    for (_, a), (_, b) in zip(pairs[:-1], pairs[1:]):
        worst = max(worst, b - 1.1 * a)
    return CheckOutcome(max(0.0, worst), "k,control_distance,discrepancy", rows)


# ---------------------------------------------------------------------------
# Koopman checks


def run_semigroup(ctx):
    """Composing the operator over [tau, s] after [s, t] reproduces the
    operator over [tau, t] on a splice-closed signal family."""
    s = 0.5 * (ctx.tau + ctx.t)
    signals = ctx.constant_signals(segments=ctx.spliced_segments)
    report = check_semigroup(ctx.base_observable(), ctx.field, signals,
                             ctx.tau, s, ctx.t, ctx.grid, ctx.step)
    rows = [f"forward,{_fmt(report.forward_defect)}",
            f"backward,{_fmt(report.backward_defect)}",
            f"hausdorff,{_fmt(report.hausdorff)}"]
    return CheckOutcome(report.hausdorff, "quantity,value", rows)


def run_koopman_algebra(ctx):
    """The operator set scales exactly with the observable, lands inside
    pairwise sums, and contracts observable distances (1-Lipschitz).

    These are identities of the discrete flow family itself, valid at any
    step, so the runner uses the structural step."""
    rng = ctx.rng("koopman_algebra")
    step = _structural_step(ctx)
    signals = ctx.constant_signals()
    phi = ctx.base_observable()
    alpha = complex(rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0))
    homog = check_homogeneity(phi, alpha, ctx.field, signals, ctx.tau, ctx.t,
                              ctx.grid, step)
    subadd = check_subadditivity(phi, ctx.offset_observable(), ctx.field,
                                 signals, ctx.tau, ctx.t, ctx.grid, step)
    rows = [f"homogeneity,{_fmt(homog)}", f"subadditivity,{_fmt(subadd)}"]
    worst = max(homog, subadd)
    for k in range(10):
        rep = check_lipschitz_in_observable(ctx.seeded_bump(rng),
                                            ctx.seeded_bump(rng), ctx.field,
                                            signals, ctx.tau, ctx.t, ctx.grid,
                                            step)
        violation = max(0.0, rep.set_defect - rep.observable_distance)
        worst = max(worst, violation)
        rows.append(f"lipschitz_pair_{k},{_fmt(violation)}")
    return CheckOutcome(worst, "quantity,value", rows)


# ---------------------------------------------------------------------------
# Generator checks


def run_generator_koopman(ctx):
    """Difference quotients of short-horizon compositions converge to the
    sampled gradient-field set at first order, both ways."""
    study = generator_study(ctx.base_observable(), ctx.field, ctx.sample,
                            ctx.tau, ctx.h_values, ctx.grid, ctx.step)
    table = study_csv(study).strip().split("\n")
    if _all_exact(study.backward_defects, study.forward_defects,
                  study.forward_defects_convexified):
        return CheckOutcome(0.0, table[0], table[1:])
    worst = max(
        _rate_excursion(study.backward_rate),
        _rate_excursion(study.forward_rate),
        _ratio_excursion(halving_ratios(study.backward_defects)),
        _ratio_excursion(halving_ratios(study.forward_defects)),
    )
    return CheckOutcome(worst, table[0], table[1:])


def run_generator_convexification(ctx):
    """With rapidly switching signals included, quotients accumulate on
    convex combinations: the plain-set defect stalls while the defect
    against the convexified set keeps first-order decay, with a gap of at
    least 10x the convexified defect at the smallest horizon."""
    study = generator_study(ctx.base_observable(), ctx.field, ctx.sample,
                            ctx.tau, ctx.h_values, ctx.grid, ctx.step,
                            mixtures=True, combo_count=8,
                            seed=ctx.int_seed("generator_convexification"))
    table = study_csv(study).strip().split("\n")
    if _all_exact(study.backward_defects, study.forward_defects,
                  study.forward_defects_convexified):
        return CheckOutcome(0.0, table[0], table[1:])
    plain_min = study.forward_defects[-1]
    conv_min = study.forward_defects_convexified[-1]
    gap = plain_min - conv_min
    gap_term = float("inf") if gap <= 0 else 10.0 * conv_min / gap
    worst = max(_rate_excursion(study.forward_rate_convexified), gap_term)
    return CheckOutcome(worst, table[0], table[1:])


def run_transport_inclusion(ctx):
    """A curve of composed observables solves the transport equation of its
    generating control: time-difference residuals stay small and the
    minimizing control matches the generating one at every interior time."""
    base_id = ctx.min_norm_control()
    sig = ctx.sample.constant_signal(base_id, ctx.t, segments=ctx.segments,
                                     name=f"const_{base_id}")
    n = int(np.floor((ctx.t - ctx.tau) / ctx.dtau + 1e-9)) + 1
    taus = [ctx.tau + k * ctx.dtau for k in range(n)]
    curve = transport_solve(ctx.base_observable(), ctx.field, sig, ctx.t,
                            taus, ctx.grid, ctx.step)
    rows_out = []
    worst = 0.0
    matched = True
    for row in inclusion_residual(curve, ctx.field, ctx.sample, ctx.grid):
        ok = (row.control_id == base_id
              or row.residuals[base_id] <= row.residual + 1e-14)
        matched = matched and ok
        worst = max(worst, row.residual)
        rows_out.append(f"{_fmt(row.tau)},{_fmt(row.residual)},"
                        f"{row.control_id},{int(ok)}")
    if not matched:
        worst = float("inf")
    return CheckOutcome(worst, "tau,residual,argmin_control,matched", rows_out)


# ---------------------------------------------------------------------------
# Measure-side checks


def _structural_step(ctx):
    """Step for checks of exact discrete-flow identities.

    Adjointness and matched-signal equality hold for the discrete flow
    family at any resolution, because both sides of the identity are built
    from the same flow maps; a coarse step tests the same structure at a
    fraction of the cost.  The configured step still wins when it is
    coarser.
    """
    return max(ctx.step, (ctx.t - ctx.tau) / 128.0)


def run_duality(ctx):
    """Pairing a pushed-forward measure with an observable equals pairing
    the measure with the composed observable, for every seeded triple."""
    rng = ctx.rng("duality")
    step = _structural_step(ctx)
    rows = []
    worst = 0.0
    n_controls = len(ctx.sample)
    for trial in range(100):
        mu = ctx.seeded_measure(rng, 12)
        phi = ctx.seeded_bump(rng)
        values = [int(v) for v in rng.integers(0, n_controls, size=ctx.segments)]
        sig = ctx.sample.signal(values, ctx.t, name=f"trial_{trial}")
        gap = check_duality(mu, phi, ctx.field, sig, ctx.tau, ctx.t, step)
        worst = max(worst, gap)
        rows.append(f"{trial},{_fmt(gap)}")
    return CheckOutcome(worst, "trial,gap", rows)


def run_generator_perron(ctx):
    """Short-horizon pushforward quotients of a point mass converge to the
    divergence pairing at first order: residuals halve with the horizon."""
    point = ctx.box_center + 0.5 * (ctx.grid.hi - ctx.box_center)
    mu = ParticleMeasure.dirac(point)
    bank = TestBank([ctx.base_observable(), ctx.offset_observable()])
    study = perron_generator_study(mu, ctx.field, ctx.sample, ctx.tau,
                                   ctx.h_values, bank, ctx.step)
    ids = sorted(study.residuals)
    header = "h," + ",".join(f"residual_u{cid}" for cid in ids)
    rows = []
    for i, h in enumerate(study.h_values):
        rows.append(f"{_fmt(h)}," + ",".join(
            _fmt(study.residuals[cid][i]) for cid in ids))
    worst = 0.0
    for cid in ids:
        res = study.residuals[cid]
        if max(res) < EXACT_FLOOR:
            continue
        worst = max(worst, _ratio_excursion(study.ratios(cid)))
    return CheckOutcome(worst, header, rows)


def run_adjoint_inequality(ctx):
    """The pushforward pairing never exceeds the worst-case composition
    pairing over the signal family, with equality at matched signals."""
    rng = ctx.rng("adjoint_inequality")
    step = _structural_step(ctx)
    s = 0.5 * (ctx.tau + ctx.t)
    signals = splice_closure(ctx.constant_signals(segments=ctx.spliced_segments), s)
    coeffs = np.full(ctx.field.dims, 1.0 / np.sqrt(ctx.field.dims))
    bank = TestBank([ctx.base_observable(), ctx.offset_observable(),
                     LinearWindow(coeffs)])
    rows = []
    worst = 0.0
    for trial in range(50):
        mu = ctx.seeded_measure(rng, 10)
        report = check_adjoint_inequality(
            mu, ctx.field, signals, ctx.tau, ctx.t, bank, step,
            combo_count=4, seed=int(rng.integers(2**31)))
        defect = max(max(0.0, -report.min_margin), report.matched_equality_gap)
        worst = max(worst, defect)
        rows.append(f"{trial},{_fmt(report.min_margin)},"
                    f"{_fmt(report.matched_equality_gap)}")
    return CheckOutcome(worst, "trial,min_margin,matched_equality_gap", rows)


# ---------------------------------------------------------------------------
# Spectral checks


def _eigen_rows(ctx):
    entries = []
    for pair in ctx.eigenpairs():
        r_liou = verify_liouville_eigen(pair, ctx.field, ctx.grid)
        r_map = verify_spectral_mapping(pair, ctx.field, ctx.tau, ctx.t,
                                        ctx.grid, ctx.step)
        entries.append((pair, r_liou, r_map))
    return entries


def run_spectral_eigen(ctx):
    """Every computed eigenpair satisfies the gradient-field eigenvalue
    relation on the grid."""
    entries = _eigen_rows(ctx)
    table = eigen_table_csv(entries).strip().split("\n")
    worst = max((r_liou for _, r_liou, _ in entries), default=0.0)
    return CheckOutcome(worst, table[0], table[1:])


def run_spectral_mapping(ctx):
    """Composition with the closed-loop flow multiplies an eigenfunction by
    the exponential of its eigenvalue times the elapsed time."""
    entries = _eigen_rows(ctx)
    table = eigen_table_csv(entries).strip().split("\n")
    worst = max((r_map for _, _, r_map in entries), default=0.0)
    return CheckOutcome(worst, table[0], table[1:])


def run_converse_probe(ctx):
    """The eigenvalue is recovered from proportionality of short-horizon
    compositions: the estimate at the smallest horizon lands within
    10x that horizon of the true eigenvalue."""
    h_min = ctx.h_values[-1]
    horizon = ctx.tau + ctx.h_values[0]
    signals = [ctx.sample.constant_signal(p.id, horizon, name=f"const_{p.id}")
               for p in ctx.sample.points]
    rows = []
    worst = 0.0
    for idx, pair in enumerate(ctx.eigenpairs()):
        table = converse_spectral_probe(pair.observable, ctx.field, signals,
                                        ctx.tau, ctx.h_values, ctx.grid,
                                        ctx.step)
        last = table.rows[-1]
        if not last.proportional:
            worst = float("inf")
            rows.append(f"{idx},{pair.feedback_id},{_fmt(pair.lam.real)},"
                        f"{_fmt(pair.lam.imag)},nan,nan,inf")
            continue
        err = abs(last.lambda_est - pair.lam)
        worst = max(worst, err / (10.0 * h_min))
        rows.append(f"{idx},{pair.feedback_id},{_fmt(pair.lam.real)},"
                    f"{_fmt(pair.lam.imag)},{_fmt(last.lambda_est.real)},"
                    f"{_fmt(last.lambda_est.imag)},{_fmt(err)}")
    header = ("pair,feedback_id,lambda_re,lambda_im,"
              "estimate_re,estimate_im,error")
    return CheckOutcome(worst, header, rows)


def run_eigen_products(ctx):
    """Products and powers of eigenfunctions are eigenfunctions with the
    weighted sums of the eigenvalues."""
    from .spectral import eigen_product_check

    by_feedback = {}
    for pair in ctx.eigenpairs():
        by_feedback.setdefault(pair.feedback_id, []).append(pair)
    rows = []
    worst = 0.0
    for fid in sorted(by_feedback):
        pairs = by_feedback[fid]
        if len(pairs) < 2:
            continue
        p1, p2 = pairs[0], pairs[1]
        r11 = eigen_product_check(p1, p2, (1.0, 1.0), ctx.field, ctx.grid)
        r20 = eigen_product_check(p1, p1, (2.0, 0.0), ctx.field, ctx.grid)
        worst = max(worst, r11, r20)
        rows.append(f"{fid},1,1,{_fmt(r11)}")
        rows.append(f"{fid},2,0,{_fmt(r20)}")
    return CheckOutcome(worst, "feedback_id,alpha_1,alpha_2,residual", rows)


# ---------------------------------------------------------------------------
# Registry

SPECTRAL_CHECKS = frozenset({
    "spectral_eigen", "spectral_mapping", "converse_probe", "eigen_products",
})

ORACLE_FAMILIES = frozenset({"scalar_affine", "linear_feedback"})

REGISTRY = {}


def _register(name, module, description, prop, tol, runner):
    REGISTRY[name] = CheckSpec(name, module, description, prop, tol, runner)


_register(
    "flow_identity", "flows",
    "Flow with equal start and end times is the identity; forward then "
    "reversed flow returns to the start.",
    "flows are invertible homeomorphisms along one signal",
    1e-9, run_flow_identity)
_register(
    "flow_oracle", "flows",
    "Fixed-step integration matches the family's closed-form flow "
    "(piecewise exponential / matrix exponential).",
    "integrator correctness against exact solutions",
    1e-8, run_flow_oracle)
_register(
    "flow_estimates", "flows",
    "Sampled flows respect the linear-growth a-priori bound (R+mT)e^{mT} "
    "with a finite window Lipschitz constant.",
    "uniform bounds and Lipschitz continuity of the flow on a window",
    1e-9, run_flow_estimates)
_register(
    "continuity_in_control", "flows",
    "Flow discrepancy shrinks (10% slack) along signal perturbations whose "
    "control distance decreases to zero.",
    "continuity of the flow in the control signal",
    1e-12, run_continuity_in_control)
_register(
    "semigroup", "koopman",
    "Two-stage composition of the operator set over a splice-closed family "
    "equals the one-stage set (Hausdorff defect).",
    "two-parameter semigroup law of the composition operator set",
    1e-6, run_semigroup)
_register(
    "koopman_algebra", "koopman",
    "Exact homogeneity, subadditivity into pairwise sums, and the "
    "1-Lipschitz bound in the observable.",
    "fan structure of the composition operator set",
    1e-12, run_koopman_algebra)
_register(
    "generator_koopman", "liouville",
    "Short-horizon difference quotients converge to the sampled "
    "gradient-field set at first order (rates and halving ratios).",
    "the gradient-field set generates the composition semigroup",
    1.0, run_generator_koopman)
_register(
    "generator_convexification", "liouville",
    "Quotients of switching signals stall against the plain gradient-field "
    "set but converge to its convexification (10x gap at smallest h).",
    "upper set limits of quotients fill the convexified generator",
    1.0, run_generator_convexification)
_register(
    "transport_inclusion", "liouville",
    "Composed-observable curves solve the transport equation: small "
    "residuals with the minimizing control matching the generating one.",
    "observable curves satisfy the transport differential inclusion",
    1e-3, run_transport_inclusion)
_register(
    "duality", "perron",
    "Pushforward pairing equals composition pairing on seeded "
    "(measure, observable, signal) triples.",
    "pushforward and composition operators are adjoint under the pairing",
    1e-12, run_duality)
_register(
    "generator_perron", "perron",
    "Pushforward quotients of a point mass converge to the divergence "
    "pairing: residuals halve with the horizon.",
    "the divergence functional generates the pushforward semigroup",
    1.0, run_generator_perron)
_register(
    "adjoint_inequality", "perron",
    "Pushforward pairing never exceeds the worst-case composition pairing "
    "over the family; equality at matched signals.",
    "set-valued adjoint support inequality with matched-signal equality",
    1e-9, run_adjoint_inequality)
_register(
    "spectral_eigen", "spectral",
    "Computed eigenpairs satisfy the gradient-field eigenvalue relation "
    "on the grid.",
    "point spectrum of the gradient-field operator on linear forms",
    1e-8, run_spectral_eigen)
_register(
    "spectral_mapping", "spectral",
    "Composition with the closed-loop flow multiplies eigenfunctions by "
    "exp(eigenvalue x elapsed time).",
    "generator eigenvalues exponentiate into the semigroup spectrum",
    1e-6, run_spectral_mapping)
_register(
    "converse_probe", "spectral",
    "Eigenvalues are recovered from proportionality of short-horizon "
    "compositions within 10x the smallest horizon.",
    "semigroup eigenvalues descend to generator eigenvalues",
    1.0, run_converse_probe)
_register(
    "eigen_products", "spectral",
    "Products and powers of eigenfunctions are eigenfunctions with the "
    "weighted eigenvalue sums.",
    "multiplicative structure of the point spectrum",
    1e-10, run_eigen_products)


def list_checks_text():
    """One line per registered check: name, module, description, property."""
    lines = []
    width = max(len(name) for name in REGISTRY)
    for name, spec in REGISTRY.items():
        lines.append(f"{name.ljust(width)}  [{spec.module}]  "
                     f"{spec.description}  (property: {spec.prop})")
    return "\n".join(lines) + "\n"
