"""Brute-force reference computations used by the tests.

These go through explicit matrices and commutators only, never through the
package's structure-constant tensors, so they are independent checks.
"""

import numpy as np
from scipy.optimize import minimize


def wedge_matrix(n, i, j):
    """(e_i ^ e_j) e_k = delta_jk e_i - delta_ik e_j."""
    M = np.zeros((n, n))
    M[i, j], M[j, i] = 1.0, -1.0
    return M


def so_matrices(n):
    return [wedge_matrix(n, i, j) for i in range(n) for j in range(i + 1, n)]


def project(mats, X):
    """Real coordinates of X in the span of ``mats`` (least squares over real and imaginary parts)."""
    A = np.array([np.concatenate([np.ravel(m).real, np.ravel(m).imag]) for m in mats]).T
    b = np.concatenate([np.ravel(X).real, np.ravel(X).imag])
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    return c


def bracket_table(mats):
    """c[a, b, k] with [B_a, B_b] = sum_k c[a, b, k] B_k, from matrix commutators."""
    d = len(mats)
    c = np.zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            C = mats[a] @ mats[b] - mats[b] @ mats[a]
            c[a, b] = project(mats, C)
    return c


def ad_from_table(c, x):
    """Matrix of y -> [x, y]."""
    return np.einsum("a,abk->kb", x, c)


def sharp_bruteforce(c, R):
    """<R# e_a, e_b> = -1/2 tr(ad_a R ad_b R), with ad taken from a commutator table."""
    d = R.shape[0]
    ads = [ad_from_table(c, np.eye(d)[a]) for a in range(d)]
    out = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            out[a, b] = -0.5 * np.trace(ads[a] @ R @ ads[b] @ R)
    return out


def ricci_bruteforce(R, n):
    """Ric(e_p, e_q) = sum_i <R(e_p ^ e_i), e_q ^ e_i> on so(n)."""
    mats = so_matrices(n)
    coords = {}
    for p in range(n):
        for i in range(n):
            coords[p, i] = project(mats, wedge_matrix(n, p, i)) if p != i else np.zeros(len(mats))
    Ric = np.zeros((n, n))
    for p in range(n):
        for q in range(n):
            Ric[p, q] = sum(coords[q, i] @ R @ coords[p, i] for i in range(n))
    return Ric


def iso_matrices(n):
    """Affine (n+1) x (n+1) matrices: so(n) block, then translations d_t ^ e_k."""
    out = []
    for X in so_matrices(n):
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = X
        out.append(M)
    for k in range(n):
        M = np.zeros((n + 1, n + 1))
        M[k, n] = 1.0
        out.append(M)
    return out


def tsz_samples(n_samples, d, rng):
    """Unit z = x + iy with |x| = |y| and x orthogonal to y, so z.z = 0."""
    x = rng.standard_normal((n_samples, d))
    y = rng.standard_normal((n_samples, d))
    y -= (np.sum(x * y, axis=1) / np.sum(x * x, axis=1))[:, None] * x
    y *= (np.linalg.norm(x, axis=1) / np.linalg.norm(y, axis=1))[:, None]
    z = x + 1j * y
    return z / np.linalg.norm(z, axis=1)[:, None]


def tsz_oracle(R, rng, n_samples=100_000):
    d = R.dim
    Z = tsz_samples(n_samples, d, rng)
    vals = np.einsum("si,ij,sj->s", Z.real, R.mat, Z.real) + np.einsum("si,ij,sj->s", Z.imag, R.mat, Z.imag)
    z0 = Z[np.argmin(vals)]

    def f(p):
        x, w = p[:d], p[d:]
        y = w - (w @ x) / (x @ x) * x
        y *= np.linalg.norm(x) / np.linalg.norm(y)
        return (x @ R.mat @ x + y @ R.mat @ y) / (2 * x @ x)

    res = minimize(f, np.concatenate([z0.real, z0.imag]), method="BFGS", options={"gtol": 1e-12})
    return min(float(res.fun), float(vals.min()))
