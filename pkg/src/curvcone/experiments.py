"""Packaged numerical experiments.

Every experiment takes a validated configuration and returns an
:class:`ExperimentResult` holding a JSON-ready report, a list of failed
checks and optionally trajectory rows for CSV output.  Randomness comes only
from ``numpy.random.default_rng(seed + trial)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kahler
from .cones import (
    ConeFamily,
    boundary_at_infinity,
    certificate,
    closed_form_min,
    min_form,
    ordered_map,
    parse_family,
    shift_into_cone,
)
from .curvop import SymOperator, random_operator, scalar
from .flows import (
    FieldSpec,
    blowup_time,
    integrate,
    invariance_experiment,
    trace_harnack_margin,
    trace_harnack_value,
    track_margins,
)
from .liealg import build_algebra

CSV_COLUMNS = ("t", "norm", "scal", "margin_F", "margin_dinfF")

THEOREM1_FAMILIES = (
    "fullso",
    "tracesq0",
    "nilrank2",
    "rank2cube0",
    "rank2",
    "krank1",
    "krank1nil",
)
THEOREM2_FAMILIES = ("harnack", "harnack_kahler")

PINCHING_PAIRS = {
    "a": ("krank1tr1", 2),
    "b": ("krank1tr1shift:2", 2),
    "c": ("unit_eigen", 4),
    "d": ("bounded_eigen", 4),
}


@dataclass
class ExperimentResult:
    name: str
    report: dict
    failures: list = field(default_factory=list)
    rows: list | None = None

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"experiment": self.name, "passed": self.passed, "failures": self.failures, **self.report}


def _scal_or_nan(R: SymOperator) -> float:
    return scalar(R) if R.algebra.name in ("so", "u") else float("nan")


# ---------------------------------------------------------------- certificates


def certificate_battery(families, n: int, trials: int, seed: int, starts: int = 8, rel_tol: float = 1e-6):
    """Boundary certificates at the numerical minimizer for random operators."""
    results = []
    failures = []
    for tag in families:
        fam = parse_family(tag, n)

        def one(i, fam=fam):
            R = random_operator(fam.algebra, np.random.default_rng(seed + i))
            return certificate(R, fam, starts=starts, seed=seed + i)

        certs = ordered_map(one, range(trials))
        for i, c in enumerate(certs):
            d = c.to_dict()
            d["trial"] = i
            results.append(d)
            if not c.passed(rel_tol):
                failures.append({"family": fam.tag, "n": n, "trial": i, "sharp": c.sharp_value, "hessian_min": c.hessian_min})
    return results, failures


def theorem1(n: int, trials: int, seed: int, families=THEOREM1_FAMILIES, starts: int = 8) -> ExperimentResult:
    certs, failures = certificate_battery(families, n, trials, seed, starts)
    return ExperimentResult("theorem1", {"n": n, "trials": trials, "certificates": certs}, failures)


def theorem2(n: int, trials: int, seed: int, families=THEOREM2_FAMILIES, starts: int = 8) -> ExperimentResult:
    certs, failures = certificate_battery(families, n, trials, seed, starts)
    return ExperimentResult("theorem2", {"n": n, "trials": trials, "certificates": certs}, failures)


# ---------------------------------------------------------------- membership and flows


def membership(R: SymOperator, family: ConeFamily, h: float, starts: int, seed: int) -> ExperimentResult:
    rep = min_form(R, family, starts=starts, seed=seed, h=h)
    out = rep.to_dict()
    if family.kind in ("FullSO", "TraceSquareZero"):
        out["closed_form"] = closed_form_min(R, family)
    return ExperimentResult("membership", out, [])


def flow(
    R0: SymOperator,
    spec: FieldSpec,
    t_end: float,
    samples: int,
    family: ConeFamily | None,
    h: float,
    seed: int,
    starts: int = 2,
) -> ExperimentResult:
    """Integrate and, if a family is given, track its margin and that of its boundary at infinity."""
    traj = integrate(R0, spec, t_end=t_end, samples=samples)
    margins_F = [None] * len(traj.states)
    margins_inf = [None] * len(traj.states)
    failures = []
    if family is not None:
        reps = track_margins(traj.states, family, starts=starts, seed=seed)
        margins_F = [r.min_value for r in reps]
        try:
            dinf = boundary_at_infinity(family)
        except ValueError:
            dinf = None
        if dinf is not None:
            margins_inf = [r.min_value for r in track_margins(traj.states, dinf, starts=starts, seed=seed)]
        for t, m, S in zip(traj.times, margins_F, traj.states):
            tol = 1e-5 * (1 + S.norm())
            if m < h - spec.eps * t - tol:
                failures.append({"t": float(t), "margin_F": m, "bound": h - spec.eps * t})
    rows = [
        (float(t), S.norm(), _scal_or_nan(S), mf, mi)
        for t, S, mf, mi in zip(traj.times, traj.states, margins_F, margins_inf)
    ]
    report = {"terminated": traj.terminated, "samples": len(rows), "t_end": float(traj.times[-1])}
    return ExperimentResult("flow", report, failures, rows)


def invariance_battery(
    families, n: int, trials: int, seed: int, eps: float = 0.0, samples: int = 50, starts: int = 2
) -> ExperimentResult:
    """Trajectories from boundary starts; margin must stay above -eps t - tol."""
    out = []
    failures = []
    for tag in families:
        fam = parse_family(tag, n)

        def one(i, fam=fam):
            rng = np.random.default_rng(seed + i)
            R0 = shift_into_cone(random_operator(fam.algebra, rng), fam, 0.0, starts=8, seed=seed + i)
            return invariance_experiment(
                R0, fam, 0.0, FieldSpec("ricci", eps=eps), samples=samples, starts=starts, seed=seed + i
            )

        reps = ordered_map(one, range(trials))
        for i, rep in enumerate(reps):
            d = rep.to_dict()
            d.update(family=fam.tag, trial=i)
            out.append(d)
            if not rep.passed:
                failures.append({"family": fam.tag, "trial": i, "worst_slack": d["worst_slack"]})
    return ExperimentResult("invariance", {"n": n, "eps": eps, "trajectories": out}, failures)


# ---------------------------------------------------------------- Kähler


def kahler_lemma(n: int, trials: int, seed: int, s_values=(1e-3, 5e-4)) -> ExperimentResult:
    out, failures = [], []
    for i in range(trials):
        R = kahler.random_kahler(n, np.random.default_rng(seed + i))
        rep = kahler.lemma_kaehler_check(R, s_values)
        d = rep.to_dict()
        d["trial"] = i
        out.append(d)
        if max(rep.rel_errors) >= 1e-4 or any(not 3 <= r <= 5 for r in rep.ratios):
            failures.append({"trial": i, "rel_errors": rep.rel_errors, "ratios": rep.ratios})
    return ExperimentResult("kahler_lemma", {"n": n, "trials": out}, failures)


def bochner(n: int, trials: int, seed: int, claim_starts: int = 8) -> ExperimentResult:
    """Bochner formula residuals, plus the pair-Ricci minimum on operators with nonnegative orthogonal bisectional curvature."""
    fam = ConeFamily("KahlerRank1Nilpotent", n)
    residuals, claims, failures = [], [], []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        R = kahler.random_kahler(n, rng)
        U = kahler.random_unitary(n, rng)
        lam = rng.standard_normal(n)
        lhs, rhs = kahler.bochner_formula_sides(R, U, lam)
        res = abs(lhs - rhs)
        residuals.append(res)
        if res >= 1e-9:
            failures.append({"check": "bochner", "trial": i, "residual": res})
        # nilpotent v is traceless, where E acts as the identity, so the
        # orthogonal-bisectional margin of R + cE is margin(R) + c
        m = min_form(R, fam, starts=claim_starts, seed=seed + i).min_value
        Rb = SymOperator(R.algebra, R.mat - m * kahler.E_operator(n).mat)
        c1 = kahler.claim1_check(Rb).minimum
        claims.append(c1)
        if c1 < -1e-6:
            failures.append({"check": "claim1", "trial": i, "minimum": c1})
    report = {"n": n, "bochner_residuals": residuals, "claim1_minima": claims}
    return ExperimentResult("bochner", report, failures)


def constrained(n: int, family: str, p: float, s: float, trials: int, seed: int) -> ExperimentResult:
    fam = parse_family(family, n)
    res = kahler.constrained_invariance_experiment(fam, p, s, trials, seed=seed)
    failures = [
        {"trial": i, "forward_difference": r.forward_difference, "danskin": r.danskin}
        for i, r in enumerate(res)
        if r.accepted and min(r.forward_difference, r.danskin) < -1e-5
    ]
    report = {"n": n, "family": fam.tag, "p": p, "s": s, "trials": [r.to_dict() for r in res]}
    report["accepted"] = sum(r.accepted for r in res)
    return ExperimentResult("constrained", report, failures)


# ---------------------------------------------------------------- pinching


@dataclass
class PinchingCheck:
    interior_values: list
    interior_diverged: list
    exterior_diverged: list
    containment_margins: list

    @property
    def containment_ok(self) -> bool:
        return all(m >= -1e-6 for m in self.containment_margins)

    @property
    def interior_ok(self) -> bool:
        return all(math.isfinite(v) for v in self.interior_values) and not any(self.interior_diverged)

    @property
    def exterior_ok(self) -> bool:
        return all(self.exterior_diverged)

    def to_dict(self):
        return {
            "interior_values": self.interior_values,
            "interior_diverged": self.interior_diverged,
            "exterior_diverged": self.exterior_diverged,
            "containment_margins": self.containment_margins,
            "containment_ok": self.containment_ok,
            "interior_ok": self.interior_ok,
            "exterior_ok": self.exterior_ok,
        }


def pinching_lemma_check(
    family: ConeFamily, trials: int, seed: int, delta: float = 0.2, starts: int = 8
) -> PinchingCheck:
    """Both parts of the pinching lemma on random operators.

    For R shifted to boundary-at-infinity margin +delta the minimum over the
    family must be finite (interior points lie in some C(S, h)).  For the
    shift -delta it must run off to the parameter cap, i.e. R lies in no
    C(S, h).  Every operator with a bounded minimum must have nonnegative
    boundary-at-infinity margin (containment).
    """
    dinf = boundary_at_infinity(family)
    vals, idiv, ediv, cont = [], [], [], []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        R = random_operator(family.algebra, rng)
        m = min_form(R, dinf, starts=starts, seed=seed + i).min_value
        for sign in (1, -1):
            Rs = SymOperator(R.algebra, R.mat + (sign * delta - m) * np.eye(R.dim))
            rep = min_form(Rs, family, starts=starts, seed=seed + i)
            if sign > 0:
                vals.append(rep.min_value)
                idiv.append(rep.diverged)
            else:
                ediv.append(rep.diverged)
            # containment: a bounded minimum over F forces a nonnegative boundary margin
            if not rep.diverged:
                cont.append(min_form(Rs, dinf, starts=starts, seed=seed + i).min_value)
    return PinchingCheck(vals, idiv, ediv, cont)


def pinching(letter: str, seed: int, n: int | None = None, samples: int = 20, starts: int = 8,
             delta: float = 0.2) -> ExperimentResult:
    """Track F and boundary-at-infinity margins along a Ricci-flow trajectory."""
    if letter not in PINCHING_PAIRS:
        raise ValueError(f"unknown pinching application {letter!r}")
    tag, n_default = PINCHING_PAIRS[letter]
    n = n or n_default
    fam = parse_family(tag, n)
    dinf = boundary_at_infinity(fam)
    rng = np.random.default_rng(seed)
    R0 = shift_into_cone(random_operator(fam.algebra, rng), dinf, delta, starts=starts, seed=seed)
    T = 0.8 * blowup_time(R0, "ricci", t_max=50.0)
    traj = integrate(R0, "ricci", t_end=T, samples=samples)
    reps_F = track_margins(traj.states, fam, starts=starts, seed=seed)
    reps_inf = track_margins(traj.states, dinf, starts=starts, seed=seed)
    failures = []
    h0 = reps_F[0].min_value
    for t, S, rf, ri in zip(traj.times, traj.states, reps_F, reps_inf):
        tol = 1e-5 * (1 + S.norm())
        if ri.min_value < -tol:
            failures.append({"t": float(t), "check": "dinf_margin", "value": ri.min_value})
        if ri.min_value > tol and (rf.diverged or not math.isfinite(rf.min_value)):
            failures.append({"t": float(t), "check": "interior_bounded", "value": rf.min_value})
        if rf.min_value < h0 - tol:
            failures.append({"t": float(t), "check": "F_invariance", "value": rf.min_value, "h": h0})
    rows = [
        (float(t), S.norm(), _scal_or_nan(S), rf.min_value, ri.min_value)
        for t, S, rf, ri in zip(traj.times, traj.states, reps_F, reps_inf)
    ]
    report = {"application": letter, "family": fam.tag, "boundary_family": dinf.tag, "n": n, "h0": h0,
              "t_end": float(traj.times[-1])}
    return ExperimentResult(f"pinching_{letter}", report, failures, rows)


# ---------------------------------------------------------------- trace Harnack


def trace_harnack(n: int, trials: int, seed: int, grid: int = 41) -> ExperimentResult:
    """Stationary-point minimizer against a grid search refined by Nelder-Mead."""
    from scipy.optimize import minimize

    L = build_algebra("iso", n)
    out, failures = [], []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        H = random_operator(L, rng)
        # a positive rotational block gives positive Ricci and a unique minimizer
        r = L.rot_dim
        M = H.mat.copy()
        M[:r, :r] += (abs(np.linalg.eigvalsh(M[:r, :r])[0]) + 0.5) * np.eye(r)
        H = SymOperator(L, M)
        res = trace_harnack_margin(H)
        oracle = _grid_oracle(H, res, grid, minimize)
        err = abs(oracle - res.margin)
        out.append({"trial": i, "margin": res.margin, "oracle": oracle, "unique": res.unique, "error": err})
        if err > 1e-6 or not res.unique:
            failures.append(out[-1])
    return ExperimentResult("trace_harnack", {"n": n, "trials": out}, failures)


def _grid_oracle(H, res, grid, minimize):
    n = H.algebra.dim - H.algebra.rot_dim
    radius = 2 * (np.linalg.norm(res.v) + 1) if res.v is not None else 10.0
    best, best_v = np.inf, None
    axes = np.linspace(-radius, radius, grid if n <= 2 else max(5, int(round(20000 ** (1 / n)))))
    for v in np.array(np.meshgrid(*[axes] * n)).reshape(n, -1).T:
        val = trace_harnack_value(H, v)
        if val < best:
            best, best_v = val, v
    r = minimize(lambda v: trace_harnack_value(H, v), best_v, method="Nelder-Mead",
                 options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000, "maxfev": 40000})
    return float(min(best, r.fun))
