"""Metric Lie algebras so(n), u(n), iso(n) and their complexifications.

Every algebra is realized as a space of matrices together with a basis that is
orthonormal for the algebra's scalar product.  Coordinates are always taken
with respect to that basis, so transposes of coordinate matrices are adjoints.

Complexified vectors are kept as explicit ``(re, im)`` pairs.  Internally the
numerics work on complex coordinate arrays; :class:`ComplexVector` converts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

ALGEBRAS = ("so", "u", "iso", "uiso")


class ParameterError(ValueError):
    """Invalid algebra name or size."""


@dataclass(frozen=True)
class ComplexVector:
    """Element of g (x) C stored as real and imaginary coordinate vectors."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re, dtype=float)
        im = np.asarray(self.im, dtype=float)
        if re.shape != im.shape or re.ndim != 1:
            raise ValueError("re and im must be 1-d arrays of equal length")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z) -> "ComplexVector":
        z = np.asarray(z, dtype=complex)
        return cls(z.real.copy(), z.imag.copy())

    @property
    def z(self) -> np.ndarray:
        return self.re + 1j * self.im

    def __len__(self):
        return self.re.shape[0]

    def conj(self) -> "ComplexVector":
        return ComplexVector(self.re, -self.im)

    def norm2(self) -> float:
        """Hermitian norm squared."""
        return float(self.re @ self.re + self.im @ self.im)

    def normalized(self) -> "ComplexVector":
        s = np.sqrt(self.norm2())
        if s == 0:
            raise ValueError("cannot normalize the zero vector")
        return ComplexVector(self.re / s, self.im / s)

    def to_dict(self) -> dict:
        return {"re": self.re.tolist(), "im": self.im.tolist()}


@dataclass(frozen=True, eq=False)
class MetricLieAlgebra:
    """Finite-dimensional real Lie algebra with an orthonormal basis.

    ``basis[a]`` is the matrix realizing the a-th basis vector and
    ``structure[a, b, k]`` the coefficient of ``b_k`` in ``[b_a, b_b]``.
    ``rot_dim`` counts the leading basis vectors spanning the rotational part
    (all of them for so/u, the so(n) or u(m) block for iso/uiso).
    """

    name: str
    n: int
    basis: np.ndarray
    structure: np.ndarray
    coord_map: np.ndarray
    rot_dim: int
    ad_invariant: bool
    embedding: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def label(self) -> str:
        return f"{self.name}({self.n})"

    def __repr__(self):
        return f"MetricLieAlgebra({self.label}, dim={self.dim})"

    def coords(self, M) -> np.ndarray:
        """Coordinates of a matrix in the span of the basis (complex-linear)."""
        M = np.asarray(M)
        z = self.coord_map @ M.reshape(-1)
        if np.isrealobj(M) and np.isrealobj(self.basis):
            return np.real(z)
        return z

    def real_coords(self, M) -> np.ndarray:
        z = np.asarray(self.coords(M))
        if np.iscomplexobj(z):
            if np.max(np.abs(z.imag), initial=0.0) > 1e-10 * (1 + np.max(np.abs(z))):
                raise ValueError("matrix is not in the real form of the algebra")
            z = z.real
        return z

    def matrix(self, z) -> np.ndarray:
        """Matrix realizing the (possibly complex) coordinate vector ``z``."""
        z = np.asarray(z)
        if z.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {z.shape}")
        return np.tensordot(z, self.basis, axes=1)

    def bracket(self, x, y) -> np.ndarray:
        x, y = self._check(x), self._check(y)
        return np.einsum("a,b,abk->k", x, y, self.structure)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x

    @property
    def ad_tensor(self) -> np.ndarray:
        """Stack ``A[a] = ad(b_a)`` with ``A[a][k, b] = c[a, b, k]``."""
        return _ad_tensor(self)

    @property
    def adtr_tensor(self) -> np.ndarray:
        """Stack ``T[k]`` = matrix of ``x -> ad_x^tr b_k``."""
        return _adtr_tensor(self)

    @property
    def rot_projection(self) -> np.ndarray:
        """Orthogonal projection onto the rotational part (``pr`` for iso)."""
        P = np.zeros((self.dim, self.dim))
        P[: self.rot_dim, : self.rot_dim] = np.eye(self.rot_dim)
        return P


@lru_cache(maxsize=None)
def _ad_tensor_cached(key):
    L = _REGISTRY[key]
    A = np.ascontiguousarray(L.structure.transpose(0, 2, 1))
    A.setflags(write=False)
    return A


@lru_cache(maxsize=None)
def _adtr_tensor_cached(key):
    L = _REGISTRY[key]
    T = np.ascontiguousarray(L.structure.transpose(2, 1, 0))
    T.setflags(write=False)
    return T


def _ad_tensor(L):
    return _ad_tensor_cached((L.name, L.n))


def _adtr_tensor(L):
    return _adtr_tensor_cached((L.name, L.n))


_REGISTRY: dict[tuple[str, int], MetricLieAlgebra] = {}


# ---------------------------------------------------------------- bases


def so_basis(n: int) -> np.ndarray:
    """Basis ``e_i ^ e_j`` (i < j, lexicographic) with (e_i^e_j) e_k = d_jk e_i - d_ik e_j."""
    mats = []
    for i in range(n):
        for j in range(i + 1, n):
            M = np.zeros((n, n))
            M[i, j] = 1.0
            M[j, i] = -1.0
            mats.append(M)
    return np.array(mats).reshape(-1, n, n)


def so_index(n: int) -> dict[tuple[int, int], int]:
    idx, out = 0, {}
    for i in range(n):
        for j in range(i + 1, n):
            out[(i, j)] = idx
            idx += 1
    return out


def u_basis(n: int) -> np.ndarray:
    """Orthonormal basis of skew-Hermitian matrices for <X, Y> = -tr(XY).

    Order: i E_kk, then for each j < k the pair (E_jk - E_kj)/sqrt2, i(E_jk + E_kj)/sqrt2.
    """
    mats = []
    for k in range(n):
        M = np.zeros((n, n), dtype=complex)
        M[k, k] = 1j
        mats.append(M)
    r2 = np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            M = np.zeros((n, n), dtype=complex)
            M[j, k], M[k, j] = 1 / r2, -1 / r2
            mats.append(M)
            M = np.zeros((n, n), dtype=complex)
            M[j, k], M[k, j] = 1j / r2, 1j / r2
            mats.append(M)
    return np.array(mats)


def realify(A) -> np.ndarray:
    """Real 2n x 2n matrix of a complex n x n matrix.

    Real coordinates are ordered (x_1, y_1, x_2, y_2, ...) with z_k = x_k + i y_k,
    so the complex structure is the block rotation ``realify(i I)``.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[0::2, 0::2] = A.real
    out[0::2, 1::2] = -A.imag
    out[1::2, 0::2] = A.imag
    out[1::2, 1::2] = A.real
    return out


def complexify(M) -> np.ndarray:
    """Inverse of :func:`realify` for matrices commuting with J."""
    M = np.asarray(M, dtype=float)
    return M[0::2, 0::2] + 1j * M[1::2, 0::2]


def complex_structure(n: int) -> np.ndarray:
    return realify(1j * np.eye(n))


def real_vector(zeta) -> np.ndarray:
    """Real 2n-vector of a complex n-vector (interleaved real/imaginary parts)."""
    zeta = np.asarray(zeta, dtype=complex)
    out = np.empty(2 * zeta.shape[0])
    out[0::2] = zeta.real
    out[1::2] = zeta.imag
    return out


def _affine(rot: np.ndarray, trans: np.ndarray) -> np.ndarray:
    m = rot.shape[0]
    M = np.zeros((m + 1, m + 1), dtype=rot.dtype)
    M[:m, :m] = rot
    M[:m, m] = trans
    return M


def _structure_constants(basis: np.ndarray, coord_map: np.ndarray) -> np.ndarray:
    d = basis.shape[0]
    prod = np.einsum("aij,bjk->abik", basis, basis)
    comm = prod - prod.transpose(1, 0, 2, 3)
    c = np.einsum("kp,abp->abk", coord_map, comm.reshape(d, d, -1))
    if np.iscomplexobj(c):
        if np.max(np.abs(c.imag)) > 1e-12:
            raise RuntimeError("structure constants are not real")
        c = c.real
    c[np.abs(c) < 1e-15] = 0.0
    return c


def _coord_map(basis: np.ndarray) -> np.ndarray:
    d = basis.shape[0]
    B = basis.reshape(d, -1).T
    return np.linalg.pinv(B)


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


def build_algebra(name: str, n: int) -> MetricLieAlgebra:
    """Construct so(n), u(n), iso(n) or uiso(n) = u(n) x| C^n (inside iso(2n)).

    The result is cached and immutable; repeated calls return the same object.
    """
    if name not in ALGEBRAS:
        raise ParameterError(f"unknown algebra {name!r}; expected one of {ALGEBRAS}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ParameterError("n must be an integer")
    n = int(n)
    minimum = 1 if name in ("u", "uiso") else 2
    if n < minimum:
        raise ParameterError(f"{name}(n) requires n >= {minimum}, got {n}")
    return _build(name, n)


@lru_cache(maxsize=None)
def _build(name: str, n: int) -> MetricLieAlgebra:
    embedding = None
    if name == "so":
        basis = so_basis(n)
        rot_dim, ad_inv = basis.shape[0], True
    elif name == "u":
        basis = u_basis(n)
        rot_dim, ad_inv = basis.shape[0], True
        so2n = build_algebra("so", 2 * n)
        embedding = np.array([so2n.coords(realify(b)) for b in basis]).T
    elif name == "iso":
        rot = so_basis(n)
        mats = [_affine(b, np.zeros(n)) for b in rot]
        mats += [_affine(np.zeros((n, n)), e) for e in np.eye(n)]
        basis = np.array(mats)
        rot_dim, ad_inv = rot.shape[0], False
    else:  # uiso
        rot = [realify(b) for b in u_basis(n)]
        m = 2 * n
        mats = [_affine(b, np.zeros(m)) for b in rot]
        mats += [_affine(np.zeros((m, m)), e) for e in np.eye(m)]
        basis = np.array(mats)
        rot_dim, ad_inv = len(rot), False

    cmap = _coord_map(basis)
    structure = _structure_constants(basis, cmap)
    _freeze(basis, cmap, structure, embedding)
    L = MetricLieAlgebra(name, n, basis, structure, cmap, rot_dim, ad_inv, embedding)
    _REGISTRY[(name, n)] = L
    return L


def expected_dim(name: str, n: int) -> int:
    return {
        "so": n * (n - 1) // 2,
        "u": n * n,
        "iso": n * (n - 1) // 2 + n,
        "uiso": n * n + 2 * n,
    }[name]


# ---------------------------------------------------------------- maps


def ad_matrix(L: MetricLieAlgebra, x) -> np.ndarray:
    """Matrix of y -> [x, y]; complex input gives the complexified map."""
    x = L._check(x)
    return np.einsum("a,abk->kb", x, L.structure)


def adtr_matrix(L: MetricLieAlgebra, v) -> np.ndarray:
    """Matrix of x -> ad_x^tr v, where <ad_x^tr v, y> = <v, [x, y]>."""
    v = L._check(v)
    return np.einsum("k,ayk->ya", v, L.structure)


def adtr_apply(L: MetricLieAlgebra, x, v) -> np.ndarray:
    """ad_x^tr v, bilinear in (x, v)."""
    return adtr_matrix(L, v) @ L._check(x)


def _as_z(x) -> np.ndarray:
    return x.z if isinstance(x, ComplexVector) else np.asarray(x, dtype=complex)


def complex_bracket(L: MetricLieAlgebra, x, y) -> ComplexVector:
    """Complex-bilinear extension of the bracket."""
    return ComplexVector.from_complex(L.bracket(_as_z(x), _as_z(y)))


def complex_ad_action(L: MetricLieAlgebra, x, v) -> ComplexVector:
    """Complex-bilinear extension of (x, v) -> ad_x^tr v."""
    return ComplexVector.from_complex(adtr_apply(L, _as_z(x), _as_z(v)))


def gl_to_complexified_u(A, L: MetricLieAlgebra | None = None) -> ComplexVector:
    """Write a complex matrix A = X + iY with X, Y skew-Hermitian, as X + iY in u(n) (x) C."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("A must be square")
    if L is None:
        L = build_algebra("u", n)
    elif L.name != "u" or L.n != n:
        raise ValueError(f"expected u({n}), got {L.label}")
    X = (A - A.conj().T) / 2
    Y = (A + A.conj().T) / 2j
    return ComplexVector(L.real_coords(X), L.real_coords(Y))


def complexified_u_to_gl(v, L: MetricLieAlgebra) -> np.ndarray:
    return L.matrix(_as_z(v))


# ---------------------------------------------------------------- groups


def adjoint_group(L: MetricLieAlgebra, x) -> np.ndarray:
    """Ad_{exp x} = exp(ad_x) as a coordinate matrix."""
    return expm(ad_matrix(L, x))


def coadjoint_group(L: MetricLieAlgebra, x) -> np.ndarray:
    """Ad^tr_{exp(-x)} = exp(-ad_x^T), the coadjoint action of exp(x)."""
    return expm(-ad_matrix(L, x).T)


def random_element(L: MetricLieAlgebra, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * rng.standard_normal(L.dim)


def wedge_tensor(n: int) -> np.ndarray:
    """``W[p, q]`` = so(n) coordinates of e_p ^ e_q (antisymmetric in p, q)."""
    idx = so_index(n)
    W = np.zeros((n, n, len(idx)))
    for (i, j), a in idx.items():
        W[i, j, a] = 1.0
        W[j, i, a] = -1.0
    return W


def wedge(u, w) -> np.ndarray:
    """Matrix of u ^ w, i.e. z -> <w, z> u - <u, z> w (bilinear, no conjugation)."""
    u = np.asarray(u)
    w = np.asarray(w)
    return np.outer(u, w) - np.outer(w, u)


def iso_to_so_signs(n: int) -> np.ndarray:
    """Signed permutation identifying iso(n) coordinates with so(n+1) coordinates.

    The translation d/dt ^ e_k is sent to -(e_k ^ e_{n+1}).
    """
    L = build_algebra("iso", n)
    big = so_index(n + 1)
    small = so_index(n)
    P = np.zeros((L.dim, L.dim))
    for (i, j), a in small.items():
        P[big[(i, j)], a] = 1.0
    for k in range(n):
        P[big[(k, n)], L.rot_dim + k] = -1.0
    return P
