"""Ad-invariant subsets S of a complexified Lie algebra.

Each family is given by an explicit parametrization ``p -> z`` from real
parameters to complex coordinates.  Rank conditions are built in (outer
products, wedges of two vectors) and orbits of a fixed element are written
as ``k exp(iY) X0 exp(-iY) k^T`` with ``k`` orthogonal and ``Y`` real skew.

Families that are closed under scaling are optimized on the unit sphere,
the others over a capped parameter domain.  The cap is part of the family and
the optimizer reports how close the best parameter came to it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp  # noqa: E402
import numpy as np  # noqa: E402
from jax.scipy.linalg import expm as jexpm  # noqa: E402

from ..liealg import ComplexVector, MetricLieAlgebra, ParameterError, build_algebra  # noqa: E402

warnings.filterwarnings("ignore", message="Casting complex values to real", category=np.exceptions.ComplexWarning)

KINDS = (
    "FullSO",
    "TraceSquareZero",
    "NilpotentRank2",
    "Rank2CubeZero",
    "Rank2",
    "UnitEigen",
    "BoundedEigen",
    "Rank2Unit",
    "Nilpotent",
    "KahlerRank1",
    "KahlerRank1Nilpotent",
    "KahlerRank1Trace1",
    "KahlerRank1Trace1Shifted",
    "HarnackBrendle",
    "HarnackKahler",
)

TAGS = {
    "fullso": "FullSO",
    "tracesq0": "TraceSquareZero",
    "nilrank2": "NilpotentRank2",
    "rank2cube0": "Rank2CubeZero",
    "rank2": "Rank2",
    "unit_eigen": "UnitEigen",
    "bounded_eigen": "BoundedEigen",
    "rank2_unit": "Rank2Unit",
    "nilpotent": "Nilpotent",
    "krank1": "KahlerRank1",
    "krank1nil": "KahlerRank1Nilpotent",
    "krank1tr1": "KahlerRank1Trace1",
    "krank1tr1shift": "KahlerRank1Trace1Shifted",
    "harnack": "HarnackBrendle",
    "harnack_kahler": "HarnackKahler",
}
KIND_TO_TAG = {v: k for k, v in TAGS.items()}

_SO_KINDS = {"FullSO", "TraceSquareZero", "NilpotentRank2", "Rank2CubeZero", "Rank2",
             "UnitEigen", "BoundedEigen", "Rank2Unit", "Nilpotent"}
_KAHLER_KINDS = {"KahlerRank1", "KahlerRank1Nilpotent", "KahlerRank1Trace1", "KahlerRank1Trace1Shifted"}
_NON_SCALE = {"UnitEigen", "BoundedEigen", "Rank2Unit", "KahlerRank1Trace1", "KahlerRank1Trace1Shifted"}
_ORBIT_KINDS = {"UnitEigen", "BoundedEigen", "Rank2Unit"}

# squashing radius for the orbit generator Y (operator norm scale)
ORBIT_CAP = 3.0
# squashing radius for the free vector c in the trace-one families
TRACE1_CAP = 30.0
# stand-in for L = infinity
SHIFT_CAP = 1e3
NEAR_CAP = 0.98
# an orbit point counts as escaped once its norm exceeds this multiple of the
# largest norm on the bounded part of the orbit
ESCAPE_FACTOR = 2.0


@dataclass(frozen=True)
class ConeFamily:
    """A parametrized subset S of g (x) C.

    ``kind`` is one of :data:`KINDS`.  ``n`` is the size parameter of the
    target algebra: so(n) for the real families, u(n) for the Kähler ones,
    iso(n) for HarnackBrendle and u(n) x| C^n for HarnackKahler.  ``L`` is the
    shift bound of ``KahlerRank1Trace1Shifted`` (``math.inf`` allowed).
    """

    kind: str
    n: int
    L: float | None = None
    full_algebra: str | None = field(default=None, compare=True)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown family {self.kind!r}")
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ParameterError("n must be a positive integer")
        if self.kind in _SO_KINDS and n < 2:
            raise ParameterError(f"{self.kind} needs n >= 2")
        if self.kind == "TraceSquareZero" and n < 3:
            raise ParameterError("TraceSquareZero needs n >= 3")
        if self.kind == "NilpotentRank2" and n < 4:
            raise ParameterError("NilpotentRank2 needs n >= 4 (isotropic 2-planes)")
        if self.kind in ("Rank2CubeZero", "Rank2", "Rank2Unit") and n < 3:
            raise ParameterError(f"{self.kind} needs n >= 3")
        if self.kind == "Nilpotent" and n < 3:
            raise ParameterError("Nilpotent needs n >= 3")
        if self.kind == "UnitEigen" and n % 2:
            raise ParameterError("UnitEigen needs even n")
        if self.kind == "HarnackBrendle" and n < 3:
            raise ParameterError("HarnackBrendle needs n >= 3")
        if self.kind == "KahlerRank1Nilpotent" and n < 2:
            raise ParameterError("KahlerRank1Nilpotent needs n >= 2")
        if self.kind == "KahlerRank1Trace1Shifted":
            if self.L is None or not (self.L >= 0):
                raise ParameterError("KahlerRank1Trace1Shifted needs L in [0, inf]")
        elif self.L is not None:
            raise ParameterError(f"{self.kind} takes no L parameter")
        if self.full_algebra is not None:
            if self.kind != "FullSO" or self.full_algebra not in ("so", "u", "iso", "uiso"):
                raise ParameterError("full_algebra only applies to FullSO")

    # ------------------------------------------------------------ metadata

    @property
    def algebra_name(self) -> str:
        if self.full_algebra is not None:
            return self.full_algebra
        if self.kind in _KAHLER_KINDS:
            return "u"
        if self.kind == "HarnackBrendle":
            return "iso"
        if self.kind == "HarnackKahler":
            return "uiso"
        return "so"

    @property
    def algebra(self) -> MetricLieAlgebra:
        return build_algebra(self.algebra_name, self.n)

    @property
    def scale_invariant(self) -> bool:
        return self.kind not in _NON_SCALE

    @property
    def coadjoint(self) -> bool:
        return not self.algebra.ad_invariant

    @property
    def tag(self) -> str:
        t = KIND_TO_TAG[self.kind]
        if self.kind == "KahlerRank1Trace1Shifted":
            return f"{t}:{self.L}"
        return t

    @property
    def label(self) -> str:
        extra = f", L={self.L}" if self.L is not None else ""
        return f"{self.kind}({self.algebra.label}{extra})"

    @property
    def shift_cap(self) -> float:
        return SHIFT_CAP if self.L is None or math.isinf(self.L) else float(self.L)

    @property
    def parametrization(self) -> str:
        return _DESCRIPTIONS[self.kind]

    @property
    def nparams(self) -> int:
        return _spec(self).nparams

    # ------------------------------------------------------------ maps

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        p = rng.standard_normal(self.nparams)
        sp = _spec(self)
        if sp.small is not None:
            p[sp.small] *= 0.3
        return p

    def embed(self, p) -> np.ndarray:
        """Complex coordinates of the element with parameters p (unnormalized)."""
        return np.asarray(_compiled(self)[0](jnp.asarray(p, dtype=float)))

    def cap_fraction(self, p) -> float:
        """How close the capped parameters are to their cap (0 = centre, 1 = on the cap)."""
        return float(_compiled(self)[1](jnp.asarray(p, dtype=float)))

    def escaped(self, z) -> bool:
        """Whether a point with capped parameters has actually run off.

        For the orbit kinds the cap sits on the generator Y, and Y can saturate
        while moving along the stabilizer of the base point (e.g. when two
        eigenvalues of a BoundedEigen base point meet).  Only a large orbit
        point counts there.  Other kinds escape whenever they hit the cap.
        """
        if self.kind not in _ORBIT_KINDS:
            return True
        base = 1.0 if self.kind == "Rank2Unit" else math.sqrt(self.n // 2)
        return float(np.linalg.norm(z)) > ESCAPE_FACTOR * base

    def sample(self, rng: np.random.Generator) -> ComplexVector:
        z = self.embed(self.init_params(rng))
        if self.scale_invariant:
            z = z / np.linalg.norm(z)
        return ComplexVector.from_complex(z)

    def matrices(self, v) -> tuple[np.ndarray, np.ndarray | None]:
        """Matrix part (complex n x n) and translation part of an element."""
        z = v.z if isinstance(v, ComplexVector) else np.asarray(v, dtype=complex)
        name = self.algebra_name
        if name == "so":
            return build_algebra("so", self.n).matrix(z), None
        if name == "u":
            return build_algebra("u", self.n).matrix(z), None
        if name == "iso":
            r = build_algebra("so", self.n).dim
            return build_algebra("so", self.n).matrix(z[:r]), z[r:]
        r = self.n * self.n
        return build_algebra("u", self.n).matrix(z[:r]), z[r:]

    def constraint_residual(self, v) -> float:
        """Defect of the defining constraints, relative to the element's size."""
        return _residual(self, v)


def parse_family(tag: str, n: int) -> ConeFamily:
    """Family from a CLI tag such as ``nilrank2`` or ``krank1tr1shift:5``."""
    base, _, arg = tag.partition(":")
    if base not in TAGS:
        raise ParameterError(f"unknown family tag {tag!r}; expected one of {sorted(TAGS)}")
    kind = TAGS[base]
    if kind == "KahlerRank1Trace1Shifted":
        L = float(arg) if arg else math.inf
        return ConeFamily(kind, n, L=L)
    if arg:
        raise ParameterError(f"family {base!r} takes no parameter")
    return ConeFamily(kind, n)


_DESCRIPTIONS = {
    "FullSO": "free complex vector, unit norm",
    "TraceSquareZero": "x + iy with (x, y) a real orthonormal 2-frame in g",
    "NilpotentRank2": "(a + ib) ^ (c + id) with (a, b, c, d) a real orthonormal 4-frame",
    "Rank2CubeZero": "(a + ib) ^ w with (a, b) orthonormal and w complex, orthogonal to a, b",
    "Rank2": "u ^ w with u, w free complex vectors",
    "UnitEigen": "k exp(iY) J0 exp(-iY) k^T, J0 standard complex structure, |Y| capped",
    "BoundedEigen": "k exp(iY) D(mu) exp(-iY) k^T, |mu_j| < 1, |Y| capped",
    "Rank2Unit": "k exp(iY) (i e1 ^ e2) exp(-iY) k^T, |Y| capped",
    "Nilpotent": "k N k^T with N in the nilradical of a Borel subalgebra, k orthogonal",
    "KahlerRank1": "a b^H with a, b free complex vectors",
    "KahlerRank1Nilpotent": "a b^H with b orthogonal to a",
    "KahlerRank1Trace1": "a a^H + a c^H with a unit, c orthogonal to a, |c| capped",
    "KahlerRank1Trace1Shifted": "a a^H + a c^H + zI with |z| < L (cap for L = inf)",
    "HarnackBrendle": "(u ^ w, alpha u + beta w) with u, w free complex vectors",
    "HarnackKahler": "(a b^H, iota(gamma a)) with iota the complex-linear embedding C^n -> C^2n",
}


# ---------------------------------------------------------------- jax pieces


def _cvec(p, n):
    return p[:n] + 1j * p[n : 2 * n]


def _gram_schmidt(vs):
    out = []
    for v in vs:
        for q in out:
            v = v - jnp.vdot(q, v) * q
        out.append(v / jnp.linalg.norm(v))
    return out


def _wedge(u, w):
    return jnp.outer(u, w) - jnp.outer(w, u)


def _centralizer_complement(kind: str, n: int):
    """Projection of so(n) onto the complement of the centralizer of the orbit base point."""
    if kind == "UnitEigen":
        J = np.zeros((n, n))
        for j in range(n // 2):
            J[2 * j, 2 * j + 1], J[2 * j + 1, 2 * j] = 1.0, -1.0
        J = jnp.asarray(J)
        return lambda Y: 0.5 * (Y + J @ Y @ J)
    mask = np.ones((n, n))
    if kind == "Rank2Unit":
        mask[:2, :2] = 0.0
        mask[2:, 2:] = 0.0
    else:
        for j in range(n // 2):
            mask[2 * j, 2 * j + 1] = mask[2 * j + 1, 2 * j] = 0.0
    mask = jnp.asarray(mask)
    return lambda Y: Y * mask


def _squash(x, cap):
    r = jnp.sqrt(jnp.sum(jnp.abs(x) ** 2) + 1e-300)
    t = jnp.tanh(r / cap)
    return x * (cap * t / r), t


def _orthogonal(p, n):
    Q, R = jnp.linalg.qr(p.reshape(n, n))
    return Q * jnp.sign(jnp.diag(R) + 1e-300)


def _skew(p, n):
    P = p.reshape(n, n)
    return 0.5 * (P - P.T)


@dataclass
class _Spec:
    nparams: int
    fn: object  # p -> (matrix part or coords, translation) then coords
    small: slice | None = None


@lru_cache(maxsize=None)
def _witt_nilradical(n: int) -> np.ndarray:
    """Basis (k, n, n) of a maximal nilpotent subalgebra of so(n, C) in standard coordinates."""
    m = n // 2
    f = []
    for j in range(m):
        e1 = np.zeros(n)
        e2 = np.zeros(n)
        e1[2 * j], e2[2 * j + 1] = 1, 1
        f.append((e1 + 1j * e2) / np.sqrt(2))
    fb = [v.conj() for v in f]
    cols = list(f)
    if n % 2:
        e = np.zeros(n)
        e[n - 1] = 1
        cols.append(e.astype(complex))
    cols += fb[::-1]
    P = np.array(cols).T
    S = P.T @ P  # bilinear Gram matrix in the Witt basis (antidiagonal)
    # strictly upper triangular X_w with X_w^T S + S X_w = 0
    idx = [(i, j) for i in range(n) for j in range(i + 1, n)]
    A = np.zeros((n * n, len(idx)), dtype=complex)
    for c, (i, j) in enumerate(idx):
        X = np.zeros((n, n), dtype=complex)
        X[i, j] = 1
        A[:, c] = (X.T @ S + S @ X).reshape(-1)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10))
    kern = vt[rank:].conj()
    Pinv = np.linalg.inv(P)
    out = []
    for k in kern:
        Xw = np.zeros((n, n), dtype=complex)
        for c, (i, j) in enumerate(idx):
            Xw[i, j] = k[c]
        X = P @ Xw @ Pinv
        out.append(X / np.linalg.norm(X))
    B = np.array(out)
    B.setflags(write=False)
    return B


# Sign of the odd coordinates of iota; -1 selects the i-eigenspace of J.
IOTA_SIGN = -1


def _iota(zeta):
    """Complex-linear embedding C^m -> C^2m: interleave (zeta / 2, IOTA_SIGN i zeta / 2)."""
    return jnp.stack([zeta / 2, IOTA_SIGN * 1j * zeta / 2], axis=-1).reshape(-1)


def split_translation(t) -> tuple[np.ndarray, np.ndarray]:
    """Write t = iota(zeta) + iota'(eta), iota' the embedding with the opposite sign."""
    t = np.asarray(t, dtype=complex)
    a, b = t[0::2], t[1::2]
    zeta = a - IOTA_SIGN * 1j * b
    eta = a + IOTA_SIGN * 1j * b
    return zeta, eta


def _spec(fam: ConeFamily) -> _Spec:
    return _spec_cached(fam)


@lru_cache(maxsize=None)
def _spec_cached(fam: ConeFamily) -> _Spec:
    n, kind = fam.n, fam.kind
    L = fam.algebra
    iu = np.triu_indices(n, 1)

    def so_coords(X):
        return X[iu]

    if L.name in ("u", "uiso"):
        Cmap = jnp.asarray(build_algebra("u", n).coord_map)

        def u_coords(X):
            return Cmap @ X.reshape(-1)

    d = L.dim
    zero = jnp.zeros(())

    if kind == "FullSO":
        return _Spec(2 * d, lambda p: (_cvec(p, d), zero))
    if kind == "TraceSquareZero":

        def fn(p):
            x, y = _gram_schmidt([p[:d], p[d : 2 * d]])
            return x + 1j * y, zero

        return _Spec(2 * d, fn)
    if kind == "NilpotentRank2":

        def fn(p):
            a, b, c, e = _gram_schmidt([p[i * n : (i + 1) * n] for i in range(4)])
            return so_coords(_wedge(a + 1j * b, c + 1j * e)), zero

        return _Spec(4 * n, fn)
    if kind == "Rank2CubeZero":

        def fn(p):
            a, b = _gram_schmidt([p[:n], p[n : 2 * n]])
            w = _cvec(p[2 * n :], n)
            w = w - jnp.dot(a, w) * a - jnp.dot(b, w) * b
            return so_coords(_wedge(a + 1j * b, w)), zero

        return _Spec(4 * n, fn)
    if kind == "Rank2":

        def fn(p):
            return so_coords(_wedge(_cvec(p, n), _cvec(p[2 * n :], n))), zero

        return _Spec(4 * n, fn)
    if kind in _ORBIT_KINDS:
        nn = n * n
        if kind == "UnitEigen":
            X0 = np.zeros((n, n))
            for j in range(n // 2):
                X0[2 * j, 2 * j + 1], X0[2 * j + 1, 2 * j] = 1.0, -1.0
            extra = 0
        elif kind == "Rank2Unit":
            X0 = np.zeros((n, n), dtype=complex)
            X0[0, 1], X0[1, 0] = 1j, -1j
            extra = 0
        else:
            extra = 2 * (n // 2)
        X0 = None if kind == "BoundedEigen" else jnp.asarray(X0)
        m = n // 2
        # Y is restricted to the complement of the centralizer of the base
        # point, so the cap measures actual motion along the orbit rather
        # than drift in directions that fix X
        keep = _centralizer_complement(kind, n)

        def fn(p):
            k = _orthogonal(p[:nn], n)
            Y, t = _squash(keep(_skew(p[nn : 2 * nn], n)), ORBIT_CAP)
            if X0 is None:
                w = p[2 * nn : 2 * nn + m] + 1j * p[2 * nn + m : 2 * nn + 2 * m]
                mu = w / jnp.sqrt(1 + jnp.abs(w) ** 2)
                D = jnp.zeros((n, n), dtype=complex)
                for j in range(m):
                    D = D.at[2 * j, 2 * j + 1].set(mu[j]).at[2 * j + 1, 2 * j].set(-mu[j])
            else:
                D = X0
            g = jexpm(1j * Y)
            gi = jexpm(-1j * Y)
            X = k @ g @ D @ gi @ k.T
            return so_coords(X), t

        return _Spec(2 * nn + extra, fn, small=slice(nn, 2 * nn))
    if kind == "Nilpotent":
        B = jnp.asarray(_witt_nilradical(n))
        nb = B.shape[0]
        nn = n * n

        def fn(p):
            k = _orthogonal(p[:nn], n)
            c = _cvec(p[nn:], nb)
            N = jnp.tensordot(c, B, axes=1)
            return so_coords(k @ N @ k.T), zero

        return _Spec(nn + 2 * nb, fn)
    if kind == "KahlerRank1":

        def fn(p):
            return u_coords(jnp.outer(_cvec(p, n), _cvec(p[2 * n :], n).conj())), zero

        return _Spec(4 * n, fn)
    if kind == "KahlerRank1Nilpotent":

        def fn(p):
            a = _cvec(p, n)
            a = a / jnp.linalg.norm(a)
            b = _cvec(p[2 * n :], n)
            b = b - jnp.vdot(a, b) * a
            return u_coords(jnp.outer(a, b.conj())), zero

        return _Spec(4 * n, fn)
    if kind in ("KahlerRank1Trace1", "KahlerRank1Trace1Shifted"):
        shifted = kind == "KahlerRank1Trace1Shifted"
        Lcap = fam.shift_cap

        def fn(p):
            a = _cvec(p, n)
            a = a / jnp.linalg.norm(a)
            c = _cvec(p[2 * n :], n)
            c = c - jnp.vdot(a, c) * a
            c, t = _squash(c, TRACE1_CAP)
            X = jnp.outer(a, (a + c).conj())
            if shifted:
                w = p[4 * n] + 1j * p[4 * n + 1]
                s = jnp.abs(w)
                z = Lcap * w / jnp.sqrt(1 + s**2)
                X = X + z * jnp.eye(n)
                if math.isinf(fam.L):
                    t = jnp.maximum(t, s / jnp.sqrt(1 + s**2))
            return u_coords(X), t

        return _Spec(4 * n + (2 if shifted else 0), fn)
    if kind == "HarnackBrendle":

        def fn(p):
            u = _cvec(p, n)
            w = _cvec(p[2 * n :], n)
            al = p[4 * n] + 1j * p[4 * n + 1]
            be = p[4 * n + 2] + 1j * p[4 * n + 3]
            return jnp.concatenate([so_coords(_wedge(u, w)), al * u + be * w]), zero

        return _Spec(4 * n + 4, fn)
    if kind == "HarnackKahler":

        def fn(p):
            a = _cvec(p, n)
            b = _cvec(p[2 * n :], n)
            ga = p[4 * n] + 1j * p[4 * n + 1]
            return jnp.concatenate([u_coords(jnp.outer(a, b.conj())), _iota(ga * a)]), zero

        return _Spec(4 * n + 2, fn)
    raise ParameterError(kind)  # pragma: no cover


@lru_cache(maxsize=None)
def _compiled(fam: ConeFamily):
    fn = _spec(fam).fn
    embed = jax.jit(lambda p: fn(p)[0])
    cap = jax.jit(lambda p: jnp.asarray(fn(p)[1], dtype=float))
    return embed, cap


# ---------------------------------------------------------------- residuals


def _svals(X):
    return np.linalg.svd(X, compute_uv=False)


def _rank_defect(X, r):
    s = _svals(X)
    return float(s[r] / s[0]) if s[0] > 0 and len(s) > r else 0.0


def _residual(fam: ConeFamily, v) -> float:
    z = v.z if isinstance(v, ComplexVector) else np.asarray(v, dtype=complex)
    if fam.scale_invariant:
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        z = z / nz
    X, t = fam.matrices(z)
    nX = np.linalg.norm(X)
    n = fam.n
    kind = fam.kind
    if kind == "FullSO":
        return 0.0
    if kind == "TraceSquareZero":
        return float(abs(z @ z))
    if kind == "NilpotentRank2":
        return max(_rank_defect(X, 2), float(np.linalg.norm(X @ X)) / nX**2)
    if kind == "Rank2CubeZero":
        return max(_rank_defect(X, 2), float(np.linalg.norm(X @ X @ X)) / nX**3)
    if kind == "Rank2":
        return _rank_defect(X, 2)
    if kind == "UnitEigen":
        return float(np.linalg.norm(X @ X + np.eye(n))) / (1 + nX**2)
    if kind == "Rank2Unit":
        return max(_rank_defect(X, 2), float(np.linalg.norm(X @ X @ X - X)) / (1 + nX**3))
    if kind == "BoundedEigen":
        return max(0.0, float(np.max(np.abs(np.linalg.eigvals(X)))) - 1.0)
    if kind == "Nilpotent":
        return float(np.linalg.norm(np.linalg.matrix_power(X, n))) / nX**n
    if kind == "KahlerRank1":
        return _rank_defect(X, 1)
    if kind == "KahlerRank1Nilpotent":
        return max(_rank_defect(X, 1), abs(np.trace(X)) / nX)
    if kind == "KahlerRank1Trace1":
        return max(_rank_defect(X, 1), abs(np.trace(X) - 1))
    if kind == "KahlerRank1Trace1Shifted":
        zc = (np.trace(X) - 1) / n
        Y = X - zc * np.eye(n)
        over = max(0.0, abs(zc) - fam.shift_cap) if fam.L is not None and not math.isinf(fam.L) else 0.0
        return max(_rank_defect(Y, 1), over)
    if kind == "HarnackBrendle":
        return max(_rank_defect(X, 2), _range_defect(X, t, 2))
    if kind == "HarnackKahler":
        zeta, eta = split_translation(t)
        nz = max(np.linalg.norm(t), 1e-300)
        return max(_rank_defect(X, 1), float(np.linalg.norm(eta)) / nz, _range_defect(X, zeta, 1))
    raise ParameterError(kind)  # pragma: no cover


def _range_defect(X, v, r) -> float:
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    U, s, _ = np.linalg.svd(X)
    Ur = U[:, :r]
    return float(np.linalg.norm(v - Ur @ (Ur.conj().T @ v)) / nv)


# ---------------------------------------------------------------- boundary at infinity


def boundary_at_infinity(fam: ConeFamily) -> ConeFamily:
    """The family formed by limits of lambda_i v_i with lambda_i -> 0 and v_i in S."""
    kind, n = fam.kind, fam.n
    if kind == "KahlerRank1Trace1":
        return ConeFamily("KahlerRank1Nilpotent", n)
    if kind == "KahlerRank1Trace1Shifted":
        if fam.L is not None and math.isinf(fam.L):
            raise ParameterError("the boundary at infinity of S(inf) is not in the analytic table")
        return ConeFamily("KahlerRank1Nilpotent", n)
    if kind == "UnitEigen":
        if n > 7:
            raise ParameterError("X^2 = 0 allows rank 4 for n >= 8; only n <= 7 is tabulated")
        return ConeFamily("NilpotentRank2", n)
    if kind == "BoundedEigen":
        return ConeFamily("Nilpotent", n)
    if kind == "Rank2Unit":
        return ConeFamily("Rank2CubeZero", n)
    raise ParameterError(f"{fam.label} has no tabulated boundary at infinity")
