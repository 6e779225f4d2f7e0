"""Self-adjoint operators on metric Lie algebras and the quadratic # map.

Operators are symmetric matrices in the orthonormal basis of their algebra.
The reaction term of the curvature ODE is ``R^2 + R^#`` where

    <R^# x, y> = -1/2 tr(ad_x R ad_y R)

for ad-invariant metrics, and ``ad_x`` is replaced by ``x -> ad_x^tr v`` in the
coadjoint form used for iso(n).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .liealg import (
    ComplexVector,
    MetricLieAlgebra,
    build_algebra,
    so_index,
    wedge_tensor,
)

SYM_TOL = 1e-12


class ContractViolation(ValueError):
    """Operation called on an algebra it is not defined for."""


@dataclass(frozen=True, eq=False)
class SymOperator:
    """Symmetric endomorphism of a metric Lie algebra."""

    algebra: MetricLieAlgebra
    mat: np.ndarray

    def __post_init__(self):
        M = np.array(self.mat, dtype=float)
        d = self.algebra.dim
        if M.shape != (d, d):
            raise ValueError(f"operator on {self.algebra.label} must be {d}x{d}, got {M.shape}")
        scale = np.linalg.norm(M)
        if np.linalg.norm(M - M.T) > SYM_TOL * max(scale, 1.0):
            raise ValueError("operator matrix is not symmetric")
        M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "mat", M)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def __add__(self, other):
        return SymOperator(self.algebra, self.mat + _mat(other))

    def __sub__(self, other):
        return SymOperator(self.algebra, self.mat - _mat(other))

    def __neg__(self):
        return SymOperator(self.algebra, -self.mat)

    def __mul__(self, c):
        return SymOperator(self.algebra, float(c) * self.mat)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SymOperator(self.algebra, self.mat / float(c))

    def to_dict(self) -> dict:
        return {"algebra": {"name": self.algebra.name, "n": self.algebra.n}, "mat": self.mat.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SymOperator":
        alg = data["algebra"]
        return cls(build_algebra(alg["name"], int(alg["n"])), np.asarray(data["mat"], dtype=float))


def _mat(R) -> np.ndarray:
    return R.mat if isinstance(R, SymOperator) else np.asarray(R, dtype=float)


def load_operator(path) -> SymOperator:
    with open(path, encoding="utf-8") as fh:
        return SymOperator.from_dict(json.load(fh))


def save_operator(R: SymOperator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(R.to_dict(), fh)


def identity(L: MetricLieAlgebra) -> SymOperator:
    return SymOperator(L, np.eye(L.dim))


def zero(L: MetricLieAlgebra) -> SymOperator:
    return SymOperator(L, np.zeros((L.dim, L.dim)))


def random_operator(L: MetricLieAlgebra, rng: np.random.Generator) -> SymOperator:
    """Gaussian symmetric operator with unit Frobenius norm."""
    A = rng.standard_normal((L.dim, L.dim))
    A = A + A.T
    return SymOperator(L, A / np.linalg.norm(A))


def conjugate(R: SymOperator, g: np.ndarray) -> SymOperator:
    """g * R = g R g^T for a coordinate matrix g of a group element."""
    return SymOperator(R.algebra, g @ R.mat @ g.T)


# ---------------------------------------------------------------- products


def square(R: SymOperator) -> SymOperator:
    return SymOperator(R.algebra, R.mat @ R.mat)


def _sharp(tensor: np.ndarray, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    # -1/2 tr(T_a X T_b Y), symmetrized when X != Y
    TX = np.einsum("aij,jk->aik", tensor, X)
    if Y is None:
        return -0.5 * np.einsum("aik,bki->ab", TX, TX)
    TY = np.einsum("aij,jk->aik", tensor, Y)
    out = -0.25 * (np.einsum("aik,bki->ab", TX, TY) + np.einsum("aik,bki->ab", TY, TX))
    return out


def sharp_adjoint(R: SymOperator) -> SymOperator:
    """R^# for an ad-invariant metric (so(n), u(n))."""
    L = R.algebra
    if not L.ad_invariant:
        raise ContractViolation(f"{L.label} has no ad-invariant metric; use sharp_coadjoint")
    M = _sharp(L.ad_tensor, R.mat)
    return SymOperator(L, 0.5 * (M + M.T))


def sharp_coadjoint(R: SymOperator) -> SymOperator:
    """R^# with ad_x replaced by x -> ad_x^tr v; valid on any metric Lie algebra."""
    L = R.algebra
    M = _sharp(L.adtr_tensor, R.mat)
    return SymOperator(L, 0.5 * (M + M.T))


def sharp(R: SymOperator) -> SymOperator:
    """The natural # for the algebra: adjoint when available, else coadjoint."""
    return sharp_adjoint(R) if R.algebra.ad_invariant else sharp_coadjoint(R)


def sharp_bilinear(R1: SymOperator, R2: SymOperator) -> SymOperator:
    """Polarization #(R1, R2), so that #(R, R) = R^#."""
    L = R1.algebra
    tensor = L.ad_tensor if L.ad_invariant else L.adtr_tensor
    M = _sharp(tensor, R1.mat, R2.mat)
    return SymOperator(L, 0.5 * (M + M.T))


def sharp_metric(R, G, algebra: MetricLieAlgebra | None = None) -> np.ndarray:
    """# for the scalar product g = <., G .>, computed as (R G^{-1})^# G.

    ``R`` is self-adjoint with respect to g, so in the fixed orthonormal basis
    it is a general matrix; the result is returned as a plain array.
    """
    if algebra is None:
        if not isinstance(R, SymOperator):
            raise ValueError("algebra is required when R is a plain array")
        algebra = R.algebra
    Rm = _mat(R)
    Gm = _mat(G)
    evals = np.linalg.eigvalsh(0.5 * (Gm + Gm.T))
    if evals[0] <= 0:
        raise ValueError("G must be positive definite")
    X = np.linalg.solve(Gm.T, Rm.T).T  # R G^{-1}
    tensor = algebra.adtr_tensor
    TX = np.einsum("aij,jk->aik", tensor, X)
    S = -0.5 * np.einsum("aik,bki->ab", TX, TX)
    return S @ Gm


# ---------------------------------------------------------------- forms


def hermitian_form(R: SymOperator, v) -> float:
    """R(v, v-bar) for v in the complexified algebra."""
    if not isinstance(v, ComplexVector):
        v = ComplexVector.from_complex(v)
    if len(v) != R.dim:
        raise ValueError(f"vector length {len(v)} does not match operator dimension {R.dim}")
    return float(v.re @ R.mat @ v.re + v.im @ R.mat @ v.im)


def _require_so(R: SymOperator):
    if R.algebra.name != "so":
        raise ContractViolation(f"expected an operator on so(n), got {R.algebra.label}")


def ricci(R: SymOperator) -> np.ndarray:
    """Ric(x, y) = sum_i <R(x ^ e_i), y ^ e_i>; ricci(identity on so(n)) = (n - 1) id.

    Operators on u(n) are first extended by zero to so(2n).
    """
    if R.algebra.name == "u":
        R = extend_to_so(R)
    _require_so(R)
    n = R.algebra.n
    W = wedge_tensor(n)
    Ric = np.einsum("pia,ab,qib->pq", W, R.mat, W)
    return 0.5 * (Ric + Ric.T)


def scalar(R: SymOperator) -> float:
    return float(np.trace(ricci(R)))


def extend_to_so(R: SymOperator) -> SymOperator:
    """Extension by zero of an operator on u(n) to so(2n)."""
    L = R.algebra
    if L.name != "u":
        raise ContractViolation("extension is defined for operators on u(n)")
    emb = L.embedding
    return SymOperator(build_algebra("so", 2 * L.n), emb @ R.mat @ emb.T)


def restrict_to_u(R: SymOperator, n: int) -> SymOperator:
    """Compress an operator on so(2n) to u(n)."""
    L = build_algebra("u", n)
    emb = L.embedding
    return SymOperator(L, emb.T @ R.mat @ emb)


def ric_wedge_id(Ric) -> SymOperator:
    """The operator X -> (Ric X + X Ric)/2 on so(n)."""
    Ric = np.asarray(Ric, dtype=float)
    n = Ric.shape[0]
    if Ric.shape != (n, n) or np.linalg.norm(Ric - Ric.T) > SYM_TOL * max(np.linalg.norm(Ric), 1.0):
        raise ValueError("Ric must be a symmetric square matrix")
    L = build_algebra("so", n)
    imgs = 0.5 * (np.einsum("ij,ajk->aik", Ric, L.basis) + np.einsum("aij,jk->aik", L.basis, Ric))
    M = np.array([L.coords(X) for X in imgs]).T
    return SymOperator(L, M)


def identity_part(R: SymOperator) -> SymOperator:
    """Orthogonal projection onto multiples of the identity."""
    return SymOperator(R.algebra, np.trace(R.mat) / R.dim * np.eye(R.dim))


# ---------------------------------------------------------------- Bianchi


def sym_basis(d: int) -> np.ndarray:
    """Frobenius-orthonormal basis of symmetric d x d matrices."""
    out = []
    for i in range(d):
        for j in range(i, d):
            M = np.zeros((d, d))
            if i == j:
                M[i, i] = 1.0
            else:
                M[i, j] = M[j, i] = 1 / np.sqrt(2.0)
            out.append(M)
    return np.array(out)


def sym_coords(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    iu = np.triu_indices(d)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return M[iu] * scale


def sym_from_coords(c: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d)
    scale = np.where(iu[0] == iu[1], 1.0, 1 / np.sqrt(2.0))
    M = np.zeros((d, d))
    M[iu] = c * scale
    return M + np.triu(M, 1).T


def bianchi_constraint(n: int, mats) -> np.ndarray:
    """Columns: cyclic sums R(x,y,z,w) + R(y,z,x,w) + R(z,x,y,w) for each so(n) matrix R."""
    W2 = wedge_tensor(n).reshape(n * n, -1)
    cols = []
    for S in mats:
        # R(x,y,z,w) = <R(x^y), z^w>
        T = (W2 @ S @ W2.T).reshape(n, n, n, n)
        cyc = T + T.transpose(1, 2, 0, 3) + T.transpose(2, 0, 1, 3)
        cols.append(cyc.reshape(-1))
    return np.array(cols).T


def bianchi_residual_map(n: int) -> np.ndarray:
    """Matrix sending sym_coords(R) on so(n) to its first-Bianchi cyclic sums."""
    return bianchi_constraint(n, sym_basis(n * (n - 1) // 2))


def _kernel(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    _, s, vt = np.linalg.svd(A, full_matrices=A.shape[0] < A.shape[1])
    rank = int(np.sum(s > tol * max(s[0], 1.0))) if s.size else 0
    return vt[rank:].T


@lru_cache(maxsize=None)
def bianchi_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns, in sym_coords) of algebraic curvature operators on so(n)."""
    K = _kernel(bianchi_residual_map(n))
    K.setflags(write=False)
    return K


def bianchi_dim(n: int) -> int:
    return bianchi_basis(n).shape[1]


def bianchi_project(R: SymOperator) -> SymOperator:
    _require_so(R)
    n, d = R.algebra.n, R.dim
    K = bianchi_basis(n)
    c = K @ (K.T @ sym_coords(R.mat))
    return SymOperator(R.algebra, sym_from_coords(c, d))


def bianchi_residual(R: SymOperator) -> float:
    """Norm of the first-Bianchi defect (0 for algebraic curvature operators)."""
    if R.algebra.name == "u":
        R = extend_to_so(R)
    _require_so(R)
    return float(np.linalg.norm(bianchi_residual_map(R.algebra.n) @ sym_coords(R.mat)))


def random_curvature_operator(n: int, rng: np.random.Generator) -> SymOperator:
    """Random algebraic curvature operator on so(n) with unit norm."""
    K = bianchi_basis(n)
    c = K @ rng.standard_normal(K.shape[1])
    L = build_algebra("so", n)
    M = sym_from_coords(c, L.dim)
    return SymOperator(L, M / np.linalg.norm(M))


# ---------------------------------------------------------------- models


@dataclass(frozen=True)
class ModelOperatorTag:
    kind: str
    n: int
    k: int | None = None

    KINDS = ("Identity", "SphereCrossLine", "FubiniStudyE", "CPkCrossFlat")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown model operator {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "CPkCrossFlat" and (self.k is None or not 1 <= self.k <= self.n):
            raise ValueError("CPkCrossFlat needs 1 <= k <= n")
        if self.kind in ("Identity", "SphereCrossLine") and self.n < 2:
            raise ValueError(f"{self.kind} needs n >= 2")


def model_operator(tag: ModelOperatorTag) -> SymOperator:
    n = tag.n
    if tag.kind == "Identity":
        return identity(build_algebra("so", n))
    if tag.kind == "SphereCrossLine":
        L = build_algebra("so", n)
        M = np.zeros((L.dim, L.dim))
        for (i, j), a in so_index(n).items():
            if j < n - 1:
                M[a, a] = 1.0
        return SymOperator(L, M)
    from . import kahler

    if tag.kind == "FubiniStudyE":
        return kahler.E_operator(n)
    return kahler.R_k(tag.k, n)


# ---------------------------------------------------------------- l_s


def s_bound(n: int) -> float:
    """Largest s for which the real pinching map l_s is covered by the admissible range."""
    return (np.sqrt(2 * n * (n - 2) + 4) - 2) / (n * (n - 2))


def l_s_real(R: SymOperator, s: float) -> SymOperator:
    """R + 2s Ric ^ id + (n-1)(n-2) s^2 R_I on so(n)."""
    _require_so(R)
    n = R.algebra.n
    if n > 2 and s > s_bound(n):
        warnings.warn(f"s={s} exceeds the admissible bound {s_bound(n):.6g} for n={n}", stacklevel=2)
    out = R.mat + 2 * s * ric_wedge_id(ricci(R)).mat
    out = out + (n - 1) * (n - 2) * s**2 * identity_part(R).mat
    return SymOperator(R.algebra, out)


def _linear_map_matrix(fn, d: int) -> np.ndarray:
    basis = sym_basis(d)
    return np.array([sym_coords(fn(B)) for B in basis]).T


def l_s_real_inverse(R: SymOperator, s: float) -> SymOperator:
    _require_so(R)
    L = R.algebra
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        A = _linear_map_matrix(lambda B: l_s_real(SymOperator(L, B), s).mat, L.dim)
    if np.linalg.cond(A) > 1e12:
        raise np.linalg.LinAlgError(f"l_s is numerically singular at s={s}")
    return SymOperator(L, sym_from_coords(np.linalg.solve(A, sym_coords(R.mat)), L.dim))
