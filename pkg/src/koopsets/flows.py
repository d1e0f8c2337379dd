"""Controlled flows of time-invariant systems under finite control samples.

A control signal is piecewise constant on a uniform segment grid and takes
values in a finite sample of the control set U, a subset of R^n with the
Euclidean metric.  Flows are integrated with classical fixed-step RK4; the
step is snapped so that it divides every stretch between signal breakpoints,
and integration runs backward (negated step) when the target time precedes
the start time.  The two time arguments are always kept separate: the flow
family is indexed by (tau, t) pairs, never by their difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

__all__ = [
    "ControlPoint",
    "ControlSampleSet",
    "ControlSignal",
    "PrimitiveField",
    "VectorFieldSpec",
    "FlowResult",
    "FlowEstimateReport",
    "FlowDivergenceError",
    "SpliceError",
    "integrate_flow",
    "flow_on_grid",
    "control_distance",
    "check_flow_estimates",
    "check_continuity_in_control",
    "splice",
    "splice_closure",
    "growth_constant",
    "trajectory_csv",
]


class FlowDivergenceError(RuntimeError):
    """Raised when an integrated state stops being finite.

    Carries the time at which the non-finite value was first observed and,
    for batched integrations, the index of the offending start point.
    """

    def __init__(self, time, node_index=None):
        self.time = float(time)
        self.node_index = node_index
        at = f" (node {node_index})" if node_index is not None else ""
        super().__init__(f"flow diverged near time {self.time:.6g}{at}")


class SpliceError(ValueError):
    """Raised when signals cannot be spliced on a common uniform grid."""


# ---------------------------------------------------------------------------
# Control sample sets and signals


@dataclass(frozen=True)
class ControlPoint:
    """One sampled control value, coords in R^n."""

    coords: tuple[float, ...]
    id: int

    def as_array(self):
        return np.asarray(self.coords, dtype=float)


class ControlSampleSet:
    """Finite sample of the control set, Euclidean metric on coords.

    Point ids are their positions in the sample; all coords must share one
    dimension.
    """

    def __init__(self, coords):
        arr = np.atleast_2d(np.asarray(coords, dtype=float))
        if arr.size == 0:
            raise ValueError("control sample must contain at least one point")
        if not np.all(np.isfinite(arr)):
            raise ValueError("control coords must be finite")
        self._coords = arr
        self.points = tuple(
            ControlPoint(tuple(row), i) for i, row in enumerate(arr)
        )

    @property
    def dim(self):
        return self._coords.shape[1]

    def __len__(self):
        return len(self.points)

    def coords_array(self):
        return self._coords.copy()

    def distance(self, i, j):
        return float(np.linalg.norm(self._coords[i] - self._coords[j]))

    def constant_signal(self, point_id, horizon, segments=1, name=""):
        """Signal holding one sample value on the whole horizon."""
        if not 0 <= point_id < len(self.points):
            raise ValueError(f"unknown control point id {point_id}")
        return ControlSignal(
            self, horizon, (point_id,) * segments, name=name or f"const_{point_id}"
        )

    def signal(self, values, horizon, name=""):
        return ControlSignal(self, horizon, tuple(values), name=name)

    def __eq__(self, other):
        return isinstance(other, ControlSampleSet) and np.array_equal(
            self._coords, other._coords
        )

    def __hash__(self):
        return hash(self._coords.tobytes())


class ControlSignal:
    """Piecewise-constant signal on N equal segments of [0, horizon].

    The value on segment k applies on [k*T/N, (k+1)*T/N); the signal is
    right-continuous and the last value also holds at t = horizon.
    """

    def __init__(self, sample, horizon, values, name=""):
        if horizon <= 0:
            raise ValueError("signal horizon must be positive")
        values = tuple(int(v) for v in values)
        if len(values) < 1:
            raise ValueError("signal needs at least one segment")
        for v in values:
            if not 0 <= v < len(sample.points):
                raise ValueError(f"segment value {v} not in control sample")
        self.sample = sample
        self.horizon = float(horizon)
        self.values = values
        self.name = name

    @property
    def n_segments(self):
        return len(self.values)

    @property
    def segment_length(self):
        return self.horizon / len(self.values)

    def segment_index(self, s):
        if s < -1e-12 or s > self.horizon * (1 + 1e-12):
            raise ValueError(f"time {s} outside signal horizon [0, {self.horizon}]")
        k = int(math.floor(s / self.segment_length + 1e-12))
        return min(max(k, 0), len(self.values) - 1)

    def point_at(self, s):
        return self.sample.points[self.values[self.segment_index(s)]]

    def coords_at(self, s):
        return np.asarray(self.point_at(s).coords, dtype=float)

    def breakpoints(self):
        n = len(self.values)
        return np.linspace(0.0, self.horizon, n + 1)

    def __repr__(self):
        tag = self.name or "signal"
        return f"ControlSignal({tag}, T={self.horizon}, values={self.values})"


def control_distance(u, v):
    """Integral over [0, T] of the Euclidean distance between signal values.

    Exact for piecewise-constant signals: the integral is summed over the
    merged breakpoint grid of both signals.  Horizons must match.
    """
    if abs(u.horizon - v.horizon) > 1e-12 * max(u.horizon, v.horizon):
        raise ValueError(
            f"signal horizons differ: {u.horizon} vs {v.horizon}"
        )
    if u.sample.dim != v.sample.dim:
        raise ValueError("signals take values in control sets of different dimension")
    breaks = np.union1d(u.breakpoints(), v.breakpoints())
    total = 0.0
    for s0, s1 in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (s0 + s1)
        gap = np.linalg.norm(u.coords_at(mid) - v.coords_at(mid))
        total += gap * (s1 - s0)
    return float(total)


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def splice(u, v, s):
    """Signal equal to u before time s and to v from s on.

    Both signals must share the sample set and horizon, and s must fall on
    the common refinement of their segment grids.
    """
    if abs(u.horizon - v.horizon) > 1e-12 * max(u.horizon, v.horizon):
        raise SpliceError("cannot splice signals with different horizons")
    if u.sample != v.sample:
        raise SpliceError("cannot splice signals over different control samples")
    n = _lcm(u.n_segments, v.n_segments)
    delta = u.horizon / n
    j = s / delta
    if abs(j - round(j)) > 1e-9:
        raise SpliceError(
            f"splice time {s} is not a breakpoint of the refined grid (N={n})"
        )
    values = []
    for k in range(n):
        mid = (k + 0.5) * delta
        src = u if mid < s else v
        values.append(src.values[src.segment_index(mid)])
    name = f"splice({u.name or 'u'},{v.name or 'v'}@{s:g})"
    return ControlSignal(u.sample, u.horizon, tuple(values), name=name)


def splice_closure(signals, s):
    """Close a signal family under splicing at time s.

    Returns the input signals followed by every splice(u, v, s) whose value
    sequence is not already present.  Order is deterministic.
    """
    if not signals:
        raise ValueError("empty signal family")
    out = list(signals)
    seen = {(sig.n_segments, sig.values) for sig in signals}
    for u in signals:
        for v in signals:
            w = splice(u, v, s)
            key = (w.n_segments, w.values)
            if key not in seen:
                seen.add(key)
                out.append(w)
    return out


# ---------------------------------------------------------------------------
# Vector fields


class PrimitiveField:
    """Built-in C^1 field on R^d: zero, constant vector, linear map, or sine.

    sine is the componentwise map x -> scale * sin(x); it is bounded and
    globally Lipschitz, useful as a nonlinear drift.
    """

    def __init__(self, kind, dims, payload=None):
        if kind not in ("zero", "constant", "linear", "sine"):
            raise ValueError(f"unknown primitive field kind {kind!r}")
        self.kind = kind
        self.dims = int(dims)
        if kind == "constant":
            payload = np.asarray(payload, dtype=float).reshape(self.dims)
        elif kind == "linear":
            payload = np.asarray(payload, dtype=float).reshape(self.dims, self.dims)
        elif kind == "sine":
            payload = float(payload if payload is not None else 1.0)
        self.payload = payload

    @classmethod
    def zero(cls, dims):
        return cls("zero", dims)

    @classmethod
    def constant(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls("constant", vec.size, vec)

    @classmethod
    def linear(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls("linear", matrix.shape[0], matrix)

    @classmethod
    def sine(cls, dims, scale=1.0):
        return cls("sine", dims, scale)

    def eval(self, X):
        X = np.atleast_2d(X)
        if self.kind == "zero":
            return np.zeros_like(X)
        if self.kind == "constant":
            return np.broadcast_to(self.payload, X.shape).copy()
        if self.kind == "linear":
            return X @ self.payload.T
        return self.payload * np.sin(X)

    def linear_growth_constant(self):
        """Exact global m with |f(x)| <= m (1 + |x|)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return float(np.linalg.norm(self.payload))
        if self.kind == "linear":
            return float(np.linalg.norm(self.payload, 2))
        return abs(self.payload) * math.sqrt(self.dims)


class VectorFieldSpec:
    """Right-hand side f(x, u) of a time-invariant control system.

    Families
    --------
    scalar_affine     xdot = a*x + u, state and control scalar.
    linear_feedback   xdot = (A + B K) x where the control value is the
                      flattened feedback matrix K (row-major), so the control
                      sample enumerates admissible feedbacks.
    control_affine    xdot = f0(x) + sum_k u_k * f_k(x) over primitive fields.

    All families are C^1 in x for each fixed u (``smooth`` is True) and
    satisfy linear growth and local Lipschitz bounds on bounded windows;
    ``sampled_bounds`` estimates those constants by dense sampling.
    """

    def __init__(self, family, dims, *, a=None, A=None, B=None, feedbacks=None,
                 drift=None, controlled=None):
        self.family = family
        self.dims = int(dims)
        self.smooth = True
        if family == "scalar_affine":
            if dims != 1:
                raise ValueError("scalar_affine requires dims == 1")
            self.a = float(a)
        elif family == "linear_feedback":
            self.A = np.asarray(A, dtype=float).reshape(dims, dims)
            self.B = np.atleast_2d(np.asarray(B, dtype=float))
            if self.B.shape[0] != dims:
                raise ValueError("B must have one row per state dimension")
            self.feedbacks = [
                np.asarray(K, dtype=float).reshape(self.B.shape[1], dims)
                for K in feedbacks
            ]
            if not self.feedbacks:
                raise ValueError("linear_feedback needs at least one feedback")
        elif family == "control_affine":
            self.drift = drift if drift is not None else PrimitiveField.zero(dims)
            self.controlled = list(controlled or [])
            for f in [self.drift, *self.controlled]:
                if f.dims != dims:
                    raise ValueError("primitive field dimension mismatch")
        else:
            raise ValueError(f"unknown vector field family {family!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def scalar_affine(cls, a):
        return cls("scalar_affine", 1, a=a)

    @classmethod
    def linear_feedback(cls, A, B, feedbacks):
        A = np.asarray(A, dtype=float)
        return cls("linear_feedback", A.shape[0], A=A, B=B, feedbacks=feedbacks)

    @classmethod
    def control_affine(cls, dims, drift=None, controlled=None):
        return cls("control_affine", dims, drift=drift, controlled=controlled)

    @classmethod
    def zero(cls, dims, control_dim=1):
        """Identically zero right-hand side that still accepts control
        coords of the given dimension (every control scales a zero field)."""
        controlled = [PrimitiveField.zero(dims) for _ in range(control_dim)]
        return cls.control_affine(dims, controlled=controlled)

    # -- evaluation ---------------------------------------------------------

    @property
    def control_dim(self):
        if self.family == "scalar_affine":
            return 1
        if self.family == "linear_feedback":
            return self.B.shape[1] * self.dims
        return len(self.controlled)

    def eval(self, X, u):
        """f at a batch of states X (n, d) for one control value u (coords)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        u = np.asarray(u, dtype=float).reshape(-1)
        if self.family == "scalar_affine":
            return self.a * X + u[0]
        if self.family == "linear_feedback":
            K = u.reshape(self.B.shape[1], self.dims)
            return X @ self.A.T + (X @ K.T) @ self.B.T
        out = self.drift.eval(X)
        if len(u) != len(self.controlled):
            raise ValueError("control coords length does not match controlled fields")
        for uk, f in zip(u, self.controlled):
            if uk != 0.0:
                out = out + uk * f.eval(X)
        return out

    # -- control sample helpers --------------------------------------------

    def feedback_sample(self):
        """Control sample whose points are the flattened feedback matrices."""
        if self.family != "linear_feedback":
            raise ValueError("feedback_sample applies to linear_feedback fields only")
        return ControlSampleSet([K.reshape(-1) for K in self.feedbacks])

    def closed_loop_matrix(self, feedback_id):
        if self.family != "linear_feedback":
            raise ValueError("closed_loop_matrix applies to linear_feedback fields only")
        if not 0 <= feedback_id < len(self.feedbacks):
            raise ValueError(f"feedback id {feedback_id} out of range")
        return self.A + self.B @ self.feedbacks[feedback_id]

    # -- bound estimation ----------------------------------------------------

    def sampled_bounds(self, sample, radius, n_samples=400, seed=0):
        """Estimate growth and Lipschitz constants on the ball of given radius.

        Growth: max |f(x,u)| / (1 + |x|).  Lipschitz: max pairwise ratio
        |f(x,u) - f(y,u)| / |x - y|.  Dense uniform sampling, deterministic.
        """
        rng = np.random.default_rng(seed)
        X = rng.uniform(-radius, radius, size=(n_samples, self.dims))
        growth = 0.0
        lipschitz = 0.0
        for point in sample.points:
            F = self.eval(X, point.as_array())
            growth = max(
                growth,
                float(np.max(np.linalg.norm(F, axis=1) / (1.0 + np.linalg.norm(X, axis=1)))),
            )
            dx = X[:, None, :] - X[None, :, :]
            df = F[:, None, :] - F[None, :, :]
            num = np.linalg.norm(df, axis=2)
            den = np.linalg.norm(dx, axis=2)
            mask = den > 1e-12
            if np.any(mask):
                lipschitz = max(lipschitz, float(np.max(num[mask] / den[mask])))
        return growth, lipschitz

    def linear_growth_constant(self, sample):
        """Exact global m with |f(x,u)| <= m (1 + |x|) for all sampled u.

        Unlike the window-sampled estimate, this constant is valid on all
        of state space, so the Gronwall bound built from it covers flows
        that leave the working window (in particular reversed trajectories
        of contracting fields, which grow).
        """
        coords = sample.coords_array()
        if self.family == "scalar_affine":
            u_max = float(np.max(np.abs(coords))) if coords.size else 0.0
            return max(abs(self.a), u_max)
        if self.family == "linear_feedback":
            m = 0.0
            for row in coords:
                M = self.A + self.B @ row.reshape(self.B.shape[1], self.dims)
                m = max(m, float(np.linalg.norm(M, 2)))
            return m
        u_max = np.max(np.abs(coords), axis=0) if coords.size else ()
        m = self.drift.linear_growth_constant()
        for uk, f in zip(u_max, self.controlled):
            m += float(uk) * f.linear_growth_constant()
        return m


def growth_constant(field, sample, radius, n_samples=400, seed=0):
    """Sampled linear-growth constant m with |f(x,u)| <= m (1 + |x|)."""
    m, _ = field.sampled_bounds(sample, radius, n_samples=n_samples, seed=seed)
    return m


# ---------------------------------------------------------------------------
# Integration


@dataclass
class FlowResult:
    """Endpoint of one integrated trajectory, with optional time series."""

    tau: float
    t: float
    x0: np.ndarray
    final_state: np.ndarray
    step: float
    times: np.ndarray | None = None
    states: np.ndarray | None = None


def _span_breakpoints(signal, tau, t):
    """Times where the control can switch between tau and t, endpoints included.

    Returned in integration order (ascending if t >= tau, else descending).
    """
    lo, hi = (tau, t) if t >= tau else (t, tau)
    breaks = signal.breakpoints()
    inner = breaks[(breaks > lo + 1e-12) & (breaks < hi - 1e-12)]
    pts = np.concatenate(([lo], inner, [hi]))
    if t < tau:
        pts = pts[::-1]
    return pts


def _check_times(signal, tau, t):
    T = signal.horizon
    for name, val in (("tau", tau), ("t", t)):
        if val < -1e-12 or val > T * (1 + 1e-12):
            raise ValueError(f"{name}={val} outside signal horizon [0, {T}]")


def _rk4_span(field, ucoords, X, s0, s1, step, collect=None):
    """Advance all rows of X from time s0 to s1 under one constant control.

    Overflow warnings are silenced: a trajectory leaving the finite range
    is detected on every step and reported as a divergence error instead.
    """
    length = s1 - s0
    n = max(1, int(math.ceil(abs(length) / step - 1e-9)))
    h = length / n
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            k1 = field.eval(X, ucoords)
            k2 = field.eval(X + (0.5 * h) * k1, ucoords)
            k3 = field.eval(X + (0.5 * h) * k2, ucoords)
            k4 = field.eval(X + h * k3, ucoords)
            X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(X)):
                bad = np.nonzero(~np.isfinite(X).all(axis=1))[0]
                raise FlowDivergenceError(
                    s0 + (k + 1) * h, int(bad[0]) if len(bad) else None)
            if collect is not None:
                collect.append((s0 + (k + 1) * h, X[0].copy()))
    return X


def _flow_batch(field, signal, tau, t, X, step, collect=None):
    """Flow a batch (n, d) from time tau to time t; exact identity at tau == t."""
    _check_times(signal, tau, t)
    if step <= 0:
        raise ValueError("integration step must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float)).copy()
    if X.shape[1] != field.dims:
        raise ValueError(f"state dimension {X.shape[1]} != field dimension {field.dims}")
    if tau == t:
        return X
    pts = _span_breakpoints(signal, tau, t)
    for s0, s1 in zip(pts[:-1], pts[1:]):
        ucoords = signal.coords_at(0.5 * (s0 + s1))
        X = _rk4_span(field, ucoords, X, s0, s1, step, collect=collect)
    return X


def integrate_flow(field, signal, tau, t, x0, step, record=False):
    """Integrate one trajectory of xdot = f(x, u(s)) from time tau to time t.

    Fixed-step classical RK4; within each stretch between breakpoints the
    step is len/ceil(len/step) so that breakpoints are hit exactly.  Raises
    FlowDivergenceError when the state stops being finite.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    collect = [(float(tau), x0.copy())] if record else None
    X = _flow_batch(field, signal, tau, t, x0[None, :], step, collect=collect)
    result = FlowResult(float(tau), float(t), x0, X[0], float(step))
    if record:
        result.times = np.array([c[0] for c in collect])
        result.states = np.vstack([c[1] for c in collect])
    return result


def flow_on_grid(field, signal, tau, t, grid, step):
    """Flow every grid node from tau to t; returns an (n_nodes, d) array.

    Node order follows the grid.  A divergence error is re-raised with the
    index of the offending node attached.
    """
    return _flow_batch(field, signal, tau, t, grid.nodes, step)


def flow_points(field, signal, tau, t, points, step):
    """Flow a batch of points (n, d) from tau to t; preserves row order."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return _flow_batch(field, signal, tau, t, points, step)


def trajectory_csv(result):
    """CSV dump of a recorded trajectory: time, state_0..state_{d-1}."""
    if result.times is None:
        raise ValueError("trajectory was not recorded; pass record=True")
    d = result.states.shape[1]
    lines = ["time," + ",".join(f"state_{i}" for i in range(d))]
    for tval, row in zip(result.times, result.states):
        lines.append(f"{tval:.17g}," + ",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Flow-level checks


@dataclass
class FlowEstimateReport:
    """Observed window bound, Lipschitz constant and growth-bound verdict."""

    M_R_observed: float
    L_R_observed: float
    growth_constant: float
    growth_bound: float
    growth_ok: bool


def check_flow_estimates(field, signals, grid, window_radius, step,
                         n_time_samples=5):
    """Sample flows over (signal, tau, t, node) and report stability constants.

    All grid nodes must lie in the closed ball of the window radius.  The
    growth verdict compares max |flow| against (R + m T) e^{m T} with m the
    sampled growth constant, the standard a-priori bound for linear growth.
    """
    nodes = grid.nodes
    if np.any(np.linalg.norm(nodes, axis=1) > window_radius * (1 + 1e-12)):
        raise ValueError("grid nodes must lie within the window radius")
    if not signals:
        raise ValueError("need at least one signal")
    T = signals[0].horizon
    for sig in signals:
        if abs(sig.horizon - T) > 1e-12:
            raise ValueError("signals must share one horizon")
    times = np.linspace(0.0, T, n_time_samples)

    n = nodes.shape[0]
    sup_flow = 0.0
    lipschitz = 0.0
    for sig in signals:
        flows = []
        coords = []
        for tau in times:
            for t in times:
                F = _flow_batch(field, sig, tau, t, nodes, step)
                flows.append(F)
                c = np.empty((n, 2 + nodes.shape[1]))
                c[:, 0] = tau
                c[:, 1] = t
                c[:, 2:] = nodes
                coords.append(c)
        P = np.vstack(flows)
        C = np.vstack(coords)
        sup_flow = max(sup_flow, float(np.max(np.linalg.norm(P, axis=1))))
        dP = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        dC = (
            np.abs(C[:, None, 0] - C[None, :, 0])
            + np.abs(C[:, None, 1] - C[None, :, 1])
            + np.linalg.norm(C[:, None, 2:] - C[None, :, 2:], axis=2)
        )
        mask = dC > 1e-12
        if np.any(mask):
            lipschitz = max(lipschitz, float(np.max(dP[mask] / dC[mask])))

    sample = signals[0].sample
    m = field.linear_growth_constant(sample)
    bound = (window_radius + m * T) * math.exp(m * T)
    ok = bool(np.isfinite(sup_flow)) and sup_flow <= bound * (1 + 1e-9)
    return FlowEstimateReport(sup_flow, lipschitz, m, bound, ok)


def check_continuity_in_control(field, u, perturbations, grid, tau, t, step):
    """Pair control distances with sup-norm flow discrepancies over the grid.

    The perturbation sequence must approach u: its control distances may not
    increase (ties are allowed).  Returns a list of (distance, discrepancy)
    in input order; continuity of the flow in the control forces the
    discrepancy column toward zero together with the distances.
    """
    dists = [control_distance(u, v) for v in perturbations]
    for k in range(len(dists) - 1):
        if dists[k + 1] > dists[k] + 1e-12:
            raise ValueError(
                "perturbation sequence must have non-increasing control distance"
            )
    base = _flow_batch(field, u, tau, t, grid.nodes, step)
    pairs = []
    for v, d in zip(perturbations, dists):
        F = _flow_batch(field, v, tau, t, grid.nodes, step)
        disc = float(np.max(np.linalg.norm(F - base, axis=1)))
        pairs.append((d, disc))
    return pairs
