"""Minimizing R(v, v-bar) over a cone family and certifying the minimizer."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np
from scipy.optimize import minimize

from ..curvop import SymOperator, hermitian_form, sharp, square
from ..liealg import ComplexVector, ParameterError, ad_matrix, adtr_matrix, build_algebra
from .families import NEAR_CAP, ConeFamily, _spec

DEFAULT_STARTS = 32
MAXITER = 500
GRAD_TOL = 1e-8


def max_workers() -> int:
    """Worker cap from CURVCONE_THREADS (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get("CURVCONE_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """map() that may run concurrently but always returns results in input order."""
    items = list(items)
    w = min(max_workers(), len(items)) if items else 1
    if w <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


@dataclass
class MembershipReport:
    min_value: float
    argmin: ComplexVector
    family: ConeFamily
    h: float
    in_cone: bool
    n_starts: int
    converged_fraction: float
    tol: float
    params: np.ndarray = field(repr=False)
    cap_fraction: float = 0.0
    diverged: bool = False
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "family": self.family.tag,
            "algebra": self.family.algebra.label,
            "min_value": self.min_value,
            "h": self.h,
            "in_cone": self.in_cone,
            "n_starts": self.n_starts,
            "converged_fraction": self.converged_fraction,
            "tol": self.tol,
            "cap_fraction": self.cap_fraction,
            "diverged": self.diverged,
            "warning": self.warning,
            "argmin": self.argmin.to_dict(),
        }


@lru_cache(maxsize=None)
def _value_and_grad(fam: ConeFamily):
    fn = _spec(fam).fn
    scale_inv = fam.scale_invariant

    def f(p, Mre, Mim):
        z = fn(p)[0]
        Mz = Mre @ z + 1j * (Mim @ z)
        val = jnp.real(jnp.vdot(z, Mz))
        if scale_inv:
            val = val / jnp.real(jnp.vdot(z, z))
        return val

    return jax.jit(jax.value_and_grad(f))


def _default_tol(R: SymOperator) -> float:
    return 1e-7 * (1 + R.norm())


def _form_matrix(R, M):
    if M is None:
        return R.mat, np.zeros_like(R.mat)
    M = np.asarray(M, dtype=complex)
    return M.real.copy(), M.imag.copy()


def _run_start(fam, vg, Mre, Mim, p0):
    Mre_j, Mim_j = jnp.asarray(Mre), jnp.asarray(Mim)

    def fun(p):
        v, g = vg(jnp.asarray(p), Mre_j, Mim_j)
        return float(v), np.asarray(g, dtype=float)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            fun,
            p0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": MAXITER, "gtol": 1e-13, "ftol": 1e-16, "maxcor": 20},
        )
    val, g = fun(res.x)
    gn = float(np.linalg.norm(g))
    return val, res.x, gn


def min_form(
    R: SymOperator,
    family: ConeFamily,
    starts: int = DEFAULT_STARTS,
    seed: int = 0,
    h: float = 0.0,
    tol: float | None = None,
    init: list | None = None,
    M=None,
) -> MembershipReport:
    """Multistart minimum of R(v, v-bar) over the family.

    Scale-invariant families are minimized on unit vectors.  Start ``i`` draws
    its initial point from ``default_rng(seed + i)``; ``init`` prepends
    warm-start parameter vectors.  ``M`` replaces R by a Hermitian matrix in
    the objective (used for generalized margins).
    """
    L = family.algebra
    if R.algebra is not L:
        raise ParameterError(f"operator lives on {R.algebra.label}, family on {L.label}")
    if tol is None:
        tol = _default_tol(R)
    vg = _value_and_grad(family)
    Mre, Mim = _form_matrix(R, M)
    p0s = [np.asarray(p, dtype=float) for p in (init or [])]
    p0s += [family.init_params(np.random.default_rng(seed + i)) for i in range(starts)]
    if not p0s:
        raise ValueError("need at least one start")
    results = ordered_map(lambda p0: _run_start(family, vg, Mre, Mim, p0), p0s)
    vals = np.array([r[0] for r in results])
    finite = np.isfinite(vals)
    conv = [r[2] < GRAD_TOL for r in results]
    warning = None
    if not finite.any():
        best = 0
        warning = "no start produced a finite value"
    else:
        best = int(np.argmin(np.where(finite, vals, np.inf)))
    p = results[best][1]
    z = family.embed(p)
    if family.scale_invariant:
        z = z / np.linalg.norm(z)
    v = ComplexVector.from_complex(z)
    if M is None:
        value = hermitian_form(R, v)
    else:
        value = float(np.real(np.vdot(z, np.asarray(M) @ z)))
    frac = family.cap_fraction(p)
    diverged = (not family.scale_invariant) and frac > NEAR_CAP and family.escaped(z)
    cf = float(np.mean(conv))
    if cf == 0 and warning is None:
        warning = "no start met the gradient tolerance"
    return MembershipReport(
        min_value=value,
        argmin=v,
        family=family,
        h=h,
        in_cone=bool(value >= h - tol),
        n_starts=len(p0s),
        converged_fraction=cf,
        tol=tol,
        params=p,
        cap_fraction=frac,
        diverged=diverged,
        warning=warning,
    )


def closed_form_min(R: SymOperator, family: ConeFamily) -> float:
    """Eigenvalue formula for FullSO (lambda_1) and TraceSquareZero ((lambda_1 + lambda_2) / 2)."""
    if family.kind == "FullSO":
        return float(R.eigvalsh()[0])
    if family.kind == "TraceSquareZero":
        w = R.eigvalsh()
        return float(0.5 * (w[0] + w[1]))
    raise ParameterError(f"no closed form for {family.kind}")


def in_cone(R: SymOperator, family: ConeFamily, h: float = 0.0, tol: float | None = None, **opts):
    rep = min_form(R, family, h=h, tol=tol, **opts)
    return rep.in_cone, rep


def trace_vector(n: int) -> np.ndarray:
    """t with t^T z = trace of the gl(n, C) matrix of z."""
    L = build_algebra("u", n)
    return np.array([np.trace(b) for b in L.basis])


def generalized_margin(R: SymOperator, family: ConeFamily, h1: float, h2: float, **opts) -> float:
    """min over S of R(v, v-bar) + h2 |trace v|^2 - h1; nonnegative iff R lies in C(S, h1, h2)."""
    if family.algebra_name != "u":
        raise ParameterError("generalized margins are defined for the Kähler families")
    t = trace_vector(family.n)
    M = R.mat + h2 * np.outer(t.conj(), t)
    return min_form(R, family, M=M, **opts).min_value - h1


def shift_into_cone(R: SymOperator, family: ConeFamily, margin: float = 0.0, **opts) -> SymOperator:
    """R + cI with c chosen so that the minimum over the family equals ``margin``."""
    if not family.scale_invariant:
        raise ParameterError("shift_into_cone needs a scale-invariant family")
    rep = min_form(R, family, **opts)
    return SymOperator(R.algebra, R.mat + (margin - rep.min_value) * np.eye(R.dim))


# ---------------------------------------------------------------- certificates


@dataclass
class Certificate:
    """Second-order data at a minimizer v of R over S.

    ``shift`` is subtracted from R (times the identity) so that the shifted
    operator vanishes at v; it is zero for families that are not cones.
    """

    family: ConeFamily
    min_value: float
    shift: float
    square_value: float
    sharp_value: float
    hessian_min: float
    op_norm: float
    converged_fraction: float
    argmin: ComplexVector = field(repr=False)

    @property
    def claim_value(self) -> float:
        return self.square_value + self.sharp_value

    def passed(self, rel_tol: float = 1e-6) -> bool:
        n2 = max(self.op_norm, 1e-300)
        sharp_ok = self.sharp_value >= -rel_tol * n2**2
        claim_ok = self.claim_value >= -rel_tol * n2**2
        hess_ok = self.hessian_min >= -rel_tol * n2
        first = sharp_ok if self.family.scale_invariant else claim_ok
        return bool(first and hess_ok)

    def to_dict(self) -> dict:
        return {
            "family": self.family.tag,
            "algebra": self.family.algebra.label,
            "min_value": self.min_value,
            "shift": self.shift,
            "square_value": self.square_value,
            "sharp_value": self.sharp_value,
            "claim_value": self.claim_value,
            "hessian_min": self.hessian_min,
            "op_norm": self.op_norm,
            "converged_fraction": self.converged_fraction,
            "passed": self.passed(),
        }


def orbit_tangent_matrix(family: ConeFamily, v: ComplexVector) -> np.ndarray:
    """Columns x_a -> ad_{x_a} v (or ad_{x_a}^tr v on iso-type algebras) for the basis x_a."""
    L = family.algebra
    if L.ad_invariant:
        return -ad_matrix(L, v.z)
    return adtr_matrix(L, v.z)


def certificate_at(R: SymOperator, family: ConeFamily, v: ComplexVector, value: float, cf: float = 1.0) -> Certificate:
    shift = value if family.scale_invariant else 0.0
    Rt = SymOperator(R.algebra, R.mat - shift * np.eye(R.dim))
    A = orbit_tangent_matrix(family, v)
    H = A.conj().T @ Rt.mat @ A
    H = 0.5 * (H + H.conj().T)
    return Certificate(
        family=family,
        min_value=value,
        shift=shift,
        square_value=hermitian_form(square(Rt), v),
        sharp_value=hermitian_form(sharp(Rt), v),
        hessian_min=float(np.linalg.eigvalsh(H)[0]),
        op_norm=Rt.norm(),
        converged_fraction=cf,
        argmin=v,
    )


def certificate(R: SymOperator, family: ConeFamily, **opts) -> Certificate:
    rep = min_form(R, family, **opts)
    return certificate_at(R, family, rep.argmin, rep.min_value, rep.converged_fraction)
