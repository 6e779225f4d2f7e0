"""Kähler curvature operators on u(n).

A symmetric operator R on u(n) is a Kähler curvature operator when its
extension by zero to so(2n) satisfies the first Bianchi identity.  The
space S2_K(u(n)) is computed numerically as a constraint kernel.

Hermitian matrices A, B give the Kähler operator A*B through

    2 <A*B u, v> = -tr(A u B v) - tr(A v B u) - tr(A u) tr(B v) - tr(A v) tr(B u),

and E = id*id is the Fubini-Study model.  Scalar curvature is the real trace
of the real Ricci tensor, i.e. twice the complex trace of the Hermitian Ricci.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .curvop import (
    SymOperator,
    _kernel,
    bianchi_constraint,
    extend_to_so,
    ric_wedge_id,
    ricci,
    sharp_adjoint,
    sharp_bilinear,
    sym_basis,
    sym_coords,
    sym_from_coords,
)
from .liealg import build_algebra, complexify, complex_structure, real_vector, wedge_tensor


class KahlerOperator(SymOperator):
    """SymOperator on u(n) expected to lie in S2_K(u(n))."""

    @property
    def in_subspace_residual(self) -> float:
        return kahler_residual(self)

    @classmethod
    def of(cls, R: SymOperator) -> "KahlerOperator":
        if R.algebra.name != "u":
            raise ValueError(f"Kähler operators live on u(n), got {R.algebra.label}")
        return cls(R.algebra, R.mat)


def _u(n: int):
    return build_algebra("u", n)


def _check_hermitian(A, n: int | None = None) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if n is not None and A.shape[0] != n:
        raise ValueError(f"expected a {n}x{n} matrix")
    if np.linalg.norm(A - A.conj().T) > 1e-12 * max(1.0, np.linalg.norm(A)):
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (A + A.conj().T)


# ---------------------------------------------------------------- subspace


@lru_cache(maxsize=None)
def _kahler_data(n: int):
    L = _u(n)
    emb = L.embedding
    sb = sym_basis(L.dim)
    C = bianchi_constraint(2 * n, [emb @ S @ emb.T for S in sb])
    K = _kernel(C)
    K.setflags(write=False)
    return K


def kahler_basis(n: int) -> np.ndarray:
    """Orthonormal basis of S2_K(u(n)) as columns in sym_coords of u(n) operators."""
    return _kahler_data(n)


def kahler_dim(n: int) -> int:
    return kahler_basis(n).shape[1]


def project_K(R: SymOperator) -> KahlerOperator:
    """Orthogonal (Frobenius) projection onto S2_K(u(n))."""
    n, d = R.algebra.n, R.dim
    K = kahler_basis(n)
    return KahlerOperator(R.algebra, sym_from_coords(K @ (K.T @ sym_coords(R.mat)), d))


def kahler_residual(R: SymOperator) -> float:
    K = kahler_basis(R.algebra.n)
    c = sym_coords(R.mat)
    return float(np.linalg.norm(c - K @ (K.T @ c)))


def random_kahler(n: int, rng: np.random.Generator) -> KahlerOperator:
    """Random unit-norm element of S2_K(u(n))."""
    K = kahler_basis(n)
    M = sym_from_coords(K @ rng.standard_normal(K.shape[1]), _u(n).dim)
    return KahlerOperator(_u(n), M / np.linalg.norm(M))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


# ---------------------------------------------------------------- star


def star(A, B) -> KahlerOperator:
    A = _check_hermitian(A)
    B = _check_hermitian(B, A.shape[0])
    L = _u(A.shape[0])
    U = L.basis
    AU = np.einsum("ij,ajk->aik", A, U)
    BU = np.einsum("ij,ajk->aik", B, U)
    t1 = np.einsum("aij,bji->ab", AU, BU)
    trA = np.einsum("aii->a", AU)
    trB = np.einsum("aii->a", BU)
    M = -(t1 + t1.T) - np.outer(trA, trB) - np.outer(trB, trA)
    M = 0.5 * M.real
    return KahlerOperator(L, 0.5 * (M + M.T))


def E_operator(n: int) -> KahlerOperator:
    """E = id * id; eigenvalue 1 on su(n) and n + 1 on the center."""
    return star(np.eye(n), np.eye(n))


def block_embedding(k: int, n: int) -> np.ndarray:
    """Coordinate matrix of u(k) -> u(n), X -> diag(X, 0)."""
    Lk, Ln = _u(k), _u(n)
    P = np.zeros((Ln.dim, Lk.dim))
    for a, b in enumerate(Lk.basis):
        M = np.zeros((n, n), dtype=complex)
        M[:k, :k] = b
        P[:, a] = Ln.real_coords(M)
    return P


def R_k(k: int, n: int) -> KahlerOperator:
    """Curvature operator of CP^k x C^(n-k): E(k) on the u(k) block, zero elsewhere."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    P = block_embedding(k, n)
    return KahlerOperator(_u(n), P @ E_operator(k).mat @ P.T)


# ---------------------------------------------------------------- Ricci


def ricci_real(R: SymOperator) -> np.ndarray:
    """Real 2n x 2n Ricci tensor of the zero extension to so(2n)."""
    return ricci(R)


def ricci_k(R: SymOperator) -> np.ndarray:
    """Hermitian n x n Ricci matrix, so that v^H Ric v is the real Ricci on real_vector(v)."""
    return complexify(ricci_real(R))


def scal_k(R: SymOperator) -> float:
    """Real scalar curvature (trace of the real Ricci tensor)."""
    return float(np.trace(ricci_real(R)))


def weyl_basis(n: int) -> np.ndarray:
    """Columns spanning the Ricci-flat part of S2_K(u(n)), in sym_coords."""
    return _weyl_basis(n)


@lru_cache(maxsize=None)
def _weyl_basis(n: int) -> np.ndarray:
    L = _u(n)
    K = kahler_basis(n)
    imgs = []
    for c in K.T:
        Ric = ricci(SymOperator(L, sym_from_coords(c, L.dim)))
        imgs.append(Ric.reshape(-1))
    kern = _kernel(np.array(imgs).T)
    W = K @ kern
    W.setflags(write=False)
    return W


def random_weyl(n: int, rng: np.random.Generator) -> KahlerOperator:
    W = weyl_basis(n)
    L = _u(n)
    M = sym_from_coords(W @ rng.standard_normal(W.shape[1]), L.dim)
    return KahlerOperator(L, M / np.linalg.norm(M))


# ---------------------------------------------------------------- l_s and D


def kahler_square_sharp(R: SymOperator) -> SymOperator:
    """The Ricci-flow reaction term R^2 + R^# on u(n)."""
    return SymOperator(R.algebra, R.mat @ R.mat + sharp_adjoint(R).mat)


def l_s_kahler(R: SymOperator, s: float) -> KahlerOperator:
    """R + 2s Ric(R)*id + s^2 scal(R) E."""
    n = R.algebra.n
    Ric = ricci_k(R)
    out = R.mat + 2 * s * star(Ric, np.eye(n)).mat + s**2 * scal_k(R) * E_operator(n).mat
    return KahlerOperator(R.algebra, out)


@lru_cache(maxsize=64)
def _l_s_matrix(n: int, s: float) -> np.ndarray:
    K = kahler_basis(n)
    L = _u(n)
    cols = []
    for c in K.T:
        img = l_s_kahler(SymOperator(L, sym_from_coords(c, L.dim)), s)
        cols.append(K.T @ sym_coords(img.mat))
    A = np.array(cols).T
    A.setflags(write=False)
    return A


def l_s_kahler_inverse(R: SymOperator, s: float) -> KahlerOperator:
    """Inverse of l_s on S2_K(u(n)); R is projected to S2_K first."""
    n = R.algebra.n
    K = kahler_basis(n)
    A = _l_s_matrix(n, float(s))
    if np.linalg.cond(A) > 1e12:
        raise np.linalg.LinAlgError(f"l_s is numerically singular at s={s}")
    c = np.linalg.solve(A, K.T @ sym_coords(R.mat))
    return KahlerOperator(R.algebra, sym_from_coords(K @ c, R.dim))


def D_of_s(R: SymOperator, s: float) -> KahlerOperator:
    """l_s^{-1}(Q(l_s R)) - Q(R) with Q(R) = R^2 + R^#."""
    if s == 0:
        return KahlerOperator(R.algebra, np.zeros_like(R.mat))
    lsR = l_s_kahler(R, s)
    back = l_s_kahler_inverse(kahler_square_sharp(lsR), s)
    return KahlerOperator(R.algebra, back.mat - kahler_square_sharp(R).mat)


def D_prime_zero(R: SymOperator) -> KahlerOperator:
    """Exact derivative of D at s = 0: 2#(R, L1 R) + 2 sym(R L1 R) - L1 Q(R), L1 R = 2 Ric*id."""
    n = R.algebra.n

    def L1(X):
        return 2 * star(ricci_k(X), np.eye(n)).mat

    l1R = SymOperator(R.algebra, L1(R))
    B = R.mat @ l1R.mat + l1R.mat @ R.mat + 2 * sharp_bilinear(R, l1R).mat
    out = B - L1(kahler_square_sharp(R))
    return KahlerOperator(R.algebra, 0.5 * (out + out.T))


@dataclass
class LemmaReport:
    s_values: list
    errors: list
    rel_errors: list
    ratios: list
    target_norm: float

    def to_dict(self):
        return {
            "s_values": self.s_values,
            "errors": self.errors,
            "rel_errors": self.rel_errors,
            "ratios": self.ratios,
            "target_norm": self.target_norm,
        }


def lemma_kaehler_check(R: SymOperator, s_values) -> LemmaReport:
    """Compare (D(s) - D(-s)) / 2s with 2 Ric * Ric for each s."""
    Ric = ricci_k(R)
    target = 2 * star(Ric, Ric).mat
    tn = float(np.linalg.norm(target))
    errs, rels = [], []
    for s in s_values:
        fd = (D_of_s(R, s).mat - D_of_s(R, -s).mat) / (2 * s)
        e = float(np.linalg.norm(fd - target))
        errs.append(e)
        rels.append(e / tn if tn > 0 else e)
    ratios = [errs[i] / errs[i + 1] if errs[i + 1] > 0 else float("inf") for i in range(len(errs) - 1)]
    return LemmaReport(list(map(float, s_values)), errs, rels, ratios, tn)


# ---------------------------------------------------------------- Bochner


def bochner(R: SymOperator) -> SymOperator:
    """Ric ^ id - R on so(2n), for R extended by zero."""
    Rext = extend_to_so(R)
    return SymOperator(Rext.algebra, ric_wedge_id(ricci(Rext)).mat - Rext.mat)


def kahler_form(n: int) -> np.ndarray:
    """so(2n) coordinates of the complex structure J (the Kähler form direction)."""
    return build_algebra("so", 2 * n).coords(complex_structure(n))


def sectional(Rext: SymOperator, x, y) -> float:
    """K(x, y) = <R(x ^ y), x ^ y> for real vectors x, y (unnormalized)."""
    n = Rext.algebra.n
    w = np.einsum("p,q,pqa->a", x, y, wedge_tensor(n))
    return float(w @ Rext.mat @ w)


def bochner_formula_sides(R: SymOperator, frame, lam) -> tuple[float, float]:
    """Both sides of 2<B w, w> = sum_{j != k} (l_j - l_k)^2 (K(v_j, v_k) + K(v_j, i v_k)).

    ``frame`` is a unitary n x n matrix with columns v_j and w = sum_j l_j v_j ^ i v_j.
    """
    n = R.algebra.n
    frame = np.asarray(frame, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    if np.linalg.norm(frame.conj().T @ frame - np.eye(n)) > 1e-10:
        raise ValueError("frame must be unitary")
    J = complex_structure(n)
    W = wedge_tensor(2 * n)
    vs = [real_vector(frame[:, j]) for j in range(n)]
    omega = sum(lam[j] * np.einsum("p,q,pqa->a", vs[j], J @ vs[j], W) for j in range(n))
    B = bochner(R)
    lhs = 2 * float(omega @ B.mat @ omega)
    Rext = extend_to_so(R)
    rhs = 0.0
    for j in range(n):
        for k in range(n):
            if j != k:
                rhs += (lam[j] - lam[k]) ** 2 * (
                    sectional(Rext, vs[j], vs[k]) + sectional(Rext, vs[j], J @ vs[k])
                )
    return lhs, rhs


def bochner_formula_check(R: SymOperator, frame, lam) -> float:
    lhs, rhs = bochner_formula_sides(R, frame, lam)
    return abs(lhs - rhs)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, Rr = np.linalg.qr(Z)
    return Q * (np.diag(Rr) / np.abs(np.diag(Rr)))


# ---------------------------------------------------------------- Ricci pinching


@dataclass
class Claim1Report:
    minimum: float
    v1: np.ndarray
    v2: np.ndarray

    def to_dict(self):
        return {"minimum": self.minimum}


def claim1_check(R: SymOperator) -> Claim1Report:
    """min of Ric(v1, v1) + Ric(v2, v2) over unit v1, v2 with Cv1 orthogonal to Cv2.

    By Ky Fan this is the sum of the two smallest eigenvalues of the Hermitian Ricci.
    """
    w, V = np.linalg.eigh(ricci_k(R))
    return Claim1Report(float(w[0] + w[1]), V[:, 0], V[:, 1])


def c2p_margin(R: SymOperator, p: float) -> float:
    """lambda_min(Ric - p scal / (2n) id); nonnegative iff R satisfies Ric >= p scal / 2n."""
    n = R.algebra.n
    Ric = ricci_k(R)
    return float(np.linalg.eigvalsh(Ric - p * scal_k(R) / (2 * n) * np.eye(n))[0])


def orth_bisectional(R: SymOperator, v, w) -> float:
    """K(v, w) + K(v, iw) for complex unit vectors v, w."""
    Rext = extend_to_so(R)
    J = complex_structure(R.algebra.n)
    x, y = real_vector(v), real_vector(w)
    return sectional(Rext, x, y) + sectional(Rext, x, J @ y)


def orth_bisectional_min(R: SymOperator, rng: np.random.Generator, starts: int = 16) -> float:
    """Frame-based minimum of K(v, w) + K(v, iw) over unit v, w with Cv orthogonal to Cw."""
    n = R.algebra.n
    if n < 2:
        raise ValueError("needs n >= 2")

    def unpack(p):
        z = p[: 2 * n].reshape(2, n)
        a = z[0] + 1j * z[1]
        z = p[2 * n :].reshape(2, n)
        b = z[0] + 1j * z[1]
        a = a / np.linalg.norm(a)
        b = b - (a.conj() @ b) * a
        return a, b / np.linalg.norm(b)

    best = np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(starts):
            p0 = rng.standard_normal(4 * n)
            res = minimize(lambda p: orth_bisectional(R, *unpack(p)), p0, method="BFGS", options={"gtol": 1e-10})
            best = min(best, float(res.fun))
    return best


# ---------------------------------------------------------------- constrained invariance


def random_near_einstein(n: int, rng: np.random.Generator, weyl: float = 0.3, spread: float = 0.1) -> KahlerOperator:
    """W + A*id with W a random Weyl part and A a perturbation of the identity."""
    L = _u(n)
    W = random_weyl(n, rng).mat if weyl_basis(n).shape[1] else np.zeros((L.dim, L.dim))
    A = np.eye(n) + spread * random_hermitian(n, rng)
    M = weyl * W + star(A, np.eye(n)).mat
    return KahlerOperator(L, M / np.linalg.norm(M))


@dataclass
class ConstrainedTrial:
    accepted: bool
    c2p: float
    margin: float
    danskin: float
    forward_difference: float

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "c2p": self.c2p,
            "margin": self.margin,
            "danskin": self.danskin,
            "forward_difference": self.forward_difference,
        }


def _boundary_along_E(R: SymOperator, family, starts: int, seed: int, iters: int = 60):
    """R + cE with min over the family equal to 0 (E is positive definite, so this is monotone in c)."""
    from .cones import min_form

    E = E_operator(R.algebra.n).mat

    def margin(c):
        return min_form(SymOperator(R.algebra, R.mat + c * E), family, starts=starts, seed=seed).min_value

    lo, hi = -1.0, 1.0
    while margin(lo) > 0:
        lo *= 2
    while margin(hi) < 0:
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if margin(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return KahlerOperator(R.algebra, R.mat + hi * E)


def constrained_invariance_experiment(
    family,
    p: float,
    s: float,
    trials: int,
    seed: int = 0,
    starts: int = 8,
    tau: float = 1e-6,
) -> list[ConstrainedTrial]:
    """Tangent-cone test for l_s(C) under the constraint C2(p).

    Each trial draws a near-Einstein Kähler R, moves it along E onto the
    boundary of C, keeps it if l_s(R) satisfies C2(p), and evaluates the
    derivative of the C-margin along the pulled-back field X(s) both as the
    Danskin value X(s)(R)(v, v-bar) and as a forward difference.
    """
    from .cones import min_form
    from .curvop import hermitian_form
    from .flows import pulled_back_field

    n = family.n
    out = []
    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        R = random_near_einstein(n, rng)
        R = _boundary_along_E(R, family, starts, seed + i)
        c2 = c2p_margin(l_s_kahler(R, s), p)
        rep0 = min_form(R, family, starts=starts, seed=seed + i)
        if c2 < 0:
            out.append(ConstrainedTrial(False, c2, rep0.min_value, float("nan"), float("nan")))
            continue
        X = pulled_back_field(R, s)
        dan = hermitian_form(X, rep0.argmin)
        Rt = SymOperator(R.algebra, R.mat + tau * X.mat)
        rep1 = min_form(Rt, family, starts=starts, seed=seed + i, init=[rep0.params])
        fd = (rep1.min_value - rep0.min_value) / tau
        out.append(ConstrainedTrial(True, c2, rep0.min_value, dan, fd))
    return out
