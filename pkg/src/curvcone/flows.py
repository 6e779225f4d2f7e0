"""ODE fields on operators, an adaptive RK4 integrator and invariance checks.

Fields act on operator matrices:

* ``ricci``: R' = R^2 + R^# + eps I (so(n) or u(n)),
* ``harnack``: H' = 2 (H pr H + H^#) with the coadjoint # (iso(n) or u(n) x| C^n),
* ``harnack_half``: the same field without the factor 2,
* ``sharp``: R' = R^# (coadjoint), the reaction term for general metric Lie algebras,
* ``pulled_back``: R' = l_s^{-1}((l_s R)^2 + (l_s R)^#) on Kähler operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cones import ConeFamily, certificate, min_form, ordered_map
from .curvop import SymOperator, sharp, sharp_coadjoint, sharp_metric
from .liealg import MetricLieAlgebra, ad_matrix, build_algebra

FIELDS = ("ricci", "harnack", "harnack_half", "sharp", "pulled_back")


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "ricci"
    eps: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in FIELDS:
            raise ValueError(f"unknown field {self.kind!r}; expected one of {FIELDS}")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")


def ricci_field(R: SymOperator, eps: float = 0.0) -> SymOperator:
    L = R.algebra
    if not L.ad_invariant:
        raise ValueError(f"the curvature ODE needs an ad-invariant metric, got {L.label}")
    return SymOperator(L, R.mat @ R.mat + sharp(R).mat + eps * np.eye(R.dim))


def harnack_field(H: SymOperator, factor: float = 2.0) -> SymOperator:
    """factor * (H pr H + H^#) with pr the projection onto the rotational part."""
    L = H.algebra
    if L.ad_invariant:
        raise ValueError(f"the Harnack ODE lives on iso-type algebras, got {L.label}")
    P = L.rot_projection
    return SymOperator(L, factor * (H.mat @ P @ H.mat + sharp_coadjoint(H).mat))


def pulled_back_field(R: SymOperator, s: float) -> SymOperator:
    from .kahler import kahler_square_sharp, l_s_kahler, l_s_kahler_inverse

    if s == 0:
        return kahler_square_sharp(R)
    return l_s_kahler_inverse(kahler_square_sharp(l_s_kahler(R, s)), s)


def field_function(spec: FieldSpec, L: MetricLieAlgebra) -> Callable[[np.ndarray], np.ndarray]:
    """The field as a map on symmetric matrices of the given algebra."""
    if spec.kind == "ricci":
        return lambda M: ricci_field(SymOperator(L, M), spec.eps).mat
    if spec.kind == "harnack":
        return lambda M: harnack_field(SymOperator(L, M)).mat
    if spec.kind == "harnack_half":
        return lambda M: harnack_field(SymOperator(L, M), factor=1.0).mat
    if spec.kind == "sharp":
        return lambda M: sharp_coadjoint(SymOperator(L, M)).mat
    return lambda M: pulled_back_field(SymOperator(L, M), spec.s).mat


def metric_sharp_field(L: MetricLieAlgebra, G) -> Callable[[np.ndarray], np.ndarray]:
    """R' = (R G^{-1})^# G for g-self-adjoint R (a general matrix in the fixed basis)."""
    return lambda M: sharp_metric(M, G, algebra=L)


# ---------------------------------------------------------------- integrator


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    terminated: str
    margins: list | None = None
    n_steps: int = 0

    @property
    def final(self):
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(_as_mat(S)) for S in self.states])


def _as_mat(S):
    return S.mat if isinstance(S, SymOperator) else np.asarray(S)


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_array(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float,
    sample_times=None,
    rtol: float = 1e-8,
    guard: float | None = None,
    h0: float | None = None,
    min_step: float = 1e-14,
    max_steps: int = 200000,
) -> tuple[np.ndarray, list, str, int]:
    """Adaptive RK4 with step doubling; returns (times, states, terminated, steps).

    States are recorded at ``sample_times`` (default: 0 and t_end).  When the
    norm exceeds ``guard`` the crossing state is appended and integration stops.
    """
    y = np.array(y0, dtype=float)
    n0 = float(np.linalg.norm(y))
    if guard is None:
        guard = 1e6 * n0 if n0 > 0 else 1e6
    if sample_times is None:
        sample_times = [0.0, t_end]
    ts = np.unique(np.asarray(sample_times, dtype=float))
    if ts[0] < 0 or ts[-1] > t_end + 1e-15:
        raise ValueError("sample times must lie in [0, t_end]")
    t = 0.0
    times, states = [], []
    if ts[0] == 0.0:
        times.append(0.0)
        states.append(y.copy())
        ts = ts[1:]
    h = h0 if h0 is not None else min(1e-2, t_end) if t_end > 0 else 0.0
    steps = 0
    status = "completed"
    idx = 0
    while idx < len(ts):
        target = ts[idx]
        hh = min(h, target - t)
        if hh <= 0:
            times.append(t)
            states.append(y.copy())
            idx += 1
            continue
        full = _rk4(f, y, hh)
        half = _rk4(f, _rk4(f, y, hh / 2), hh / 2)
        scale = max(np.linalg.norm(half), np.linalg.norm(y), 1e-300)
        err = np.linalg.norm(half - full) / 15 / scale
        if not np.all(np.isfinite(half)):
            err = np.inf
        if err <= rtol:
            t = target if hh == target - t else t + hh
            y = half + (half - full) / 15
            steps += 1
            if np.linalg.norm(y) >= guard:
                times.append(t)
                states.append(y.copy())
                status = "blowup_guard"
                break
            if t >= target:
                times.append(t)
                states.append(y.copy())
                idx += 1
        fac = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (rtol / err) ** 0.2))
        if hh < h and err <= rtol:
            fac = max(fac, 1.0)
            h = max(h, hh * fac)
        else:
            h = hh * fac
        if h < min_step:
            status = "step_underflow"
            break
        if steps >= max_steps:
            status = "step_underflow"
            break
    return np.array(times), states, status, steps


def integrate(
    R0: SymOperator,
    spec: FieldSpec | str = "ricci",
    t_end: float = 1.0,
    samples: int | None = None,
    sample_times=None,
    rtol: float = 1e-8,
    guard: float | None = None,
) -> Trajectory:
    if isinstance(spec, str):
        spec = FieldSpec(spec)
    L = R0.algebra
    f = field_function(spec, L)
    if sample_times is None and samples is not None:
        sample_times = np.linspace(0.0, t_end, samples)
    times, states, status, steps = integrate_array(f, R0.mat, t_end, sample_times, rtol, guard)
    ops = [SymOperator(L, 0.5 * (S + S.T)) for S in states]
    return Trajectory(times, ops, status, n_steps=steps)


def blowup_time(R0: SymOperator, spec: FieldSpec | str = "ricci", t_max: float = 100.0, guard=None) -> float:
    """Time at which the norm first exceeds the guard (t_max if it never does)."""
    traj = integrate(R0, spec, t_end=t_max, guard=guard, rtol=1e-7)
    return float(traj.times[-1]) if traj.terminated == "blowup_guard" else t_max


# ---------------------------------------------------------------- experiments


def boundary_certificate(R: SymOperator, family: ConeFamily, **opts):
    """Certificate data (R^2, R^# and the orbit Hessian) at the numerical minimizer."""
    return certificate(R, family, **opts)


@dataclass
class InvarianceReport:
    times: np.ndarray
    margins: np.ndarray
    norms: np.ndarray
    scal: np.ndarray
    h: float
    eps: float
    terminated: str
    tolerances: np.ndarray
    converged: np.ndarray = field(default_factory=lambda: np.array([]))

    @property
    def slack(self) -> np.ndarray:
        return self.margins - (self.h - self.eps * self.times) + self.tolerances

    @property
    def passed(self) -> bool:
        return bool(np.all(self.slack >= 0))

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "margins": self.margins.tolist(),
            "norms": self.norms.tolist(),
            "h": self.h,
            "eps": self.eps,
            "terminated": self.terminated,
            "passed": self.passed,
            "worst_slack": float(np.min(self.slack)),
        }


def track_margins(states, family: ConeFamily, starts: int = 2, seed: int = 0, M_fn=None):
    """Warm-started minima along a sequence of operators."""
    out = []
    prev = None
    for i, S in enumerate(states):
        init = [prev] if prev is not None else None
        n_fresh = starts if prev is None else max(starts - 1, 1)
        rep = min_form(S, family, starts=n_fresh, seed=seed + 1000 * i, init=init)
        prev = rep.params
        out.append(rep)
    return out


def _scal(S: SymOperator) -> float:
    from .curvop import scalar

    L = S.algebra
    if L.name in ("so", "u"):
        return scalar(S)
    return float("nan")


def invariance_experiment(
    R0: SymOperator,
    family: ConeFamily,
    h: float = 0.0,
    spec: FieldSpec | str = "ricci",
    t_end: float | None = None,
    samples: int = 50,
    starts: int = 2,
    seed: int = 0,
    fraction: float = 0.8,
    rel_tol: float = 1e-5,
) -> InvarianceReport:
    """Integrate from R0 and record the membership margin at the sample times.

    Without ``t_end`` the horizon is ``fraction`` of the blow-up-guard time.
    """
    if isinstance(spec, str):
        spec = FieldSpec(spec)
    if t_end is None:
        scale = max(np.abs(R0.eigvalsh()).max(), 1e-3)
        t_end = fraction * blowup_time(R0, spec, t_max=50.0 / scale)
    traj = integrate(R0, spec, t_end=t_end, samples=samples)
    reps = track_margins(traj.states, family, starts=starts, seed=seed)
    margins = np.array([r.min_value for r in reps])
    norms = traj.norms()
    return InvarianceReport(
        times=traj.times,
        margins=margins,
        norms=norms,
        scal=np.array([_scal(S) for S in traj.states]),
        h=h,
        eps=spec.eps,
        terminated=traj.terminated,
        tolerances=rel_tol * (1 + norms),
        converged=np.array([r.converged_fraction for r in reps]),
    )


# ---------------------------------------------------------------- trace Harnack


@dataclass
class TraceHarnackResult:
    margin: float
    v: np.ndarray | None
    unique: bool
    degenerate: bool
    quad: np.ndarray
    lin: np.ndarray
    const: float


def translation_ad(L: MetricLieAlgebra) -> np.ndarray:
    """Stack N_k = ad of the k-th translation basis vector (each squares to zero)."""
    r = L.rot_dim
    out = []
    for k in range(L.dim - r):
        x = np.zeros(L.dim)
        x[r + k] = 1.0
        out.append(ad_matrix(L, x))
    return np.array(out)


def trace_harnack_quadratic(H: SymOperator):
    """(Q, g, c) with tr(Ad_v H Ad_v^T) - tr(R) = v^T Q v + g^T v + c, Ad_v = I + N_v."""
    L = H.algebra
    if L.ad_invariant:
        raise ValueError("trace Harnack functional is defined on iso-type algebras")
    N = translation_ad(L)
    Hm = H.mat
    g = 2 * np.einsum("kij,ji->k", N, Hm)
    Q = np.einsum("kij,jl,mil->km", N, Hm, N)
    Q = 0.5 * (Q + Q.T)
    r = L.rot_dim
    c = float(np.trace(Hm) - np.trace(Hm[:r, :r]))
    return Q, g, c


def trace_harnack_margin(H: SymOperator, tol: float = 1e-10) -> TraceHarnackResult:
    """inf over translations v of tr(Ad_v H Ad_v^T) - tr(R), R the rotational block."""
    Q, g, c = trace_harnack_quadratic(H)
    w = np.linalg.eigvalsh(Q)
    scale = max(np.abs(w).max(), np.abs(g).max(), 1.0)
    if w[0] > tol * scale:
        v = np.linalg.solve(2 * Q, -g)
        return TraceHarnackResult(float(v @ Q @ v + g @ v + c), v, True, False, Q, g, c)
    if w[0] < -tol * scale:
        return TraceHarnackResult(-np.inf, None, False, True, Q, g, c)
    v, *_ = np.linalg.lstsq(2 * Q, -g, rcond=None)
    if np.linalg.norm(2 * Q @ v + g) > 1e-8 * scale:
        return TraceHarnackResult(-np.inf, None, False, True, Q, g, c)
    return TraceHarnackResult(float(v @ Q @ v + g @ v + c), v, False, True, Q, g, c)


def trace_harnack_value(H: SymOperator, v) -> float:
    """Direct evaluation of tr(Ad_v H Ad_v^T) - tr(R) using the matrix exponential."""
    from scipy.linalg import expm

    L = H.algebra
    x = np.zeros(L.dim)
    x[L.rot_dim :] = v
    A = expm(ad_matrix(L, x))
    r = L.rot_dim
    return float(np.trace(A @ H.mat @ A.T) - np.trace(H.mat[:r, :r]))


# ---------------------------------------------------------------- V and W


def in_V(H: SymOperator, tol: float = 1e-10) -> float:
    """Size of the rotational block (zero for members of V)."""
    r = H.algebra.rot_dim
    return float(np.linalg.norm(H.mat[:r, :r]))


def in_W(H: SymOperator) -> float:
    """Size of the part of H not supported on translations (zero for members of W)."""
    r = H.algebra.rot_dim
    M = H.mat.copy()
    M[r:, r:] = 0
    return float(np.linalg.norm(M))


def random_V(L: MetricLieAlgebra, rng: np.random.Generator) -> SymOperator:
    A = rng.standard_normal((L.dim, L.dim))
    A = A + A.T
    r = L.rot_dim
    A[:r, :r] = 0
    return SymOperator(L, A)


def random_W(L: MetricLieAlgebra, rng: np.random.Generator) -> SymOperator:
    A = np.zeros((L.dim, L.dim))
    r = L.rot_dim
    B = rng.standard_normal((L.dim - r, L.dim - r))
    A[r:, r:] = B + B.T
    return SymOperator(L, A)


def iso_algebra(n: int) -> MetricLieAlgebra:
    return build_algebra("iso", n)


__all__ = [
    "FIELDS",
    "FieldSpec",
    "InvarianceReport",
    "TraceHarnackResult",
    "Trajectory",
    "blowup_time",
    "boundary_certificate",
    "field_function",
    "harnack_field",
    "integrate",
    "integrate_array",
    "invariance_experiment",
    "metric_sharp_field",
    "ordered_map",
    "pulled_back_field",
    "ricci_field",
    "trace_harnack_margin",
    "trace_harnack_quadratic",
    "trace_harnack_value",
    "track_margins",
]
