import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvcone.curvop import (
    ContractViolation,
    ModelOperatorTag,
    SymOperator,
    bianchi_basis,
    bianchi_dim,
    bianchi_project,
    bianchi_residual,
    bianchi_residual_map,
    conjugate,
    hermitian_form,
    identity,
    identity_part,
    l_s_real,
    l_s_real_inverse,
    load_operator,
    model_operator,
    random_curvature_operator,
    random_operator,
    ric_wedge_id,
    ricci,
    s_bound,
    save_operator,
    scalar,
    sharp,
    sharp_adjoint,
    sharp_bilinear,
    sharp_coadjoint,
    sharp_metric,
    square,
    zero,
)
from curvcone.flows import integrate_array, metric_sharp_field
from curvcone.liealg import adjoint_group, build_algebra

from oracles import bracket_table, ricci_bruteforce, sharp_bruteforce

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


# ---------------------------------------------------------------- SymOperator


def test_operator_rejects_asymmetric_and_wrong_shape():
    L = build_algebra("so", 3)
    with pytest.raises(ValueError):
        SymOperator(L, np.arange(9.0).reshape(3, 3))
    with pytest.raises(ValueError):
        SymOperator(L, np.eye(4))


def test_json_round_trip(tmp_path):
    R = random_operator(build_algebra("iso", 3), np.random.default_rng(1))
    path = tmp_path / "R.json"
    save_operator(R, path)
    data = json.loads(path.read_text())
    assert data["algebra"] == {"name": "iso", "n": 3}
    assert np.array_equal(load_operator(path).mat, R.mat)


# ---------------------------------------------------------------- square and sharp


def test_square_trivial_cases():
    L = build_algebra("so", 4)
    assert np.array_equal(square(zero(L)).mat, np.zeros((6, 6)))
    assert np.array_equal(square(identity(L)).mat, np.eye(6))


def test_square_spectrum():
    R = random_operator(build_algebra("so", 4), np.random.default_rng(7))
    assert np.allclose(np.sort(square(R).eigvalsh()), np.sort(R.eigvalsh() ** 2), atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_sharp_of_identity(n):
    L = build_algebra("so", n)
    assert np.allclose(sharp_adjoint(identity(L)).mat, (n - 2) * np.eye(L.dim), atol=1e-12)


@pytest.mark.parametrize("name,n", [("so", 4), ("u", 2), ("iso", 3)])
def test_sharp_matches_bruteforce(name, n):
    L = build_algebra(name, n)
    R = random_operator(L, np.random.default_rng(n))
    c = bracket_table(list(L.basis))
    if L.ad_invariant:
        expected = sharp_bruteforce(c, R.mat)
    else:
        # coadjoint form: ad_z^tr x has matrix x -> (ad_z)^T x, i.e. use the transposed table
        expected = sharp_bruteforce(c.transpose(2, 1, 0), R.mat)
    assert np.allclose(sharp(R).mat, expected, atol=1e-12)


def test_sharp_of_zero():
    assert np.allclose(sharp_adjoint(zero(build_algebra("so", 4))).mat, 0)
    assert np.allclose(sharp_coadjoint(zero(build_algebra("iso", 4))).mat, 0)


def test_sharp_adjoint_refuses_iso():
    with pytest.raises(ContractViolation):
        sharp_adjoint(identity(build_algebra("iso", 3)))


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_polarization_is_symmetric(seed):
    L = build_algebra("so", 4)
    rng = np.random.default_rng(seed)
    R1, R2 = random_operator(L, rng), random_operator(L, rng)
    four = sharp(R1 + R2).mat - sharp(R1 - R2).mat
    assert np.allclose(four / 4, sharp_bilinear(R1, R2).mat, atol=1e-12)
    assert np.allclose(sharp_bilinear(R1, R2).mat, sharp_bilinear(R2, R1).mat, atol=1e-12)


def test_coadjoint_coincides_with_adjoint_on_so():
    L = build_algebra("so", 4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        R = random_operator(L, rng)
        assert np.abs(sharp_coadjoint(R).mat - sharp_adjoint(R).mat).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=seeds, name=st.sampled_from(["so", "u"]))
def test_sharp_adjoint_equivariant(seed, name):
    L = build_algebra(name, 3)
    rng = np.random.default_rng(seed)
    R = random_operator(L, rng)
    g = adjoint_group(L, rng.standard_normal(L.dim))
    lhs = sharp_adjoint(conjugate(R, g)).mat
    rhs = conjugate(sharp_adjoint(R), g).mat
    assert np.abs(lhs - rhs).max() < 1e-9 * max(1, np.abs(rhs).max())


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_sharp_coadjoint_equivariant_on_iso(seed):
    L = build_algebra("iso", 4)
    rng = np.random.default_rng(seed)
    R = random_operator(L, rng)
    g = adjoint_group(L, rng.standard_normal(L.dim))
    assert rel(sharp_coadjoint(conjugate(R, g)).mat, conjugate(sharp_coadjoint(R), g).mat) < 1e-9


# ---------------------------------------------------------------- metric sharp


def test_sharp_metric_identity_and_scaling():
    L = build_algebra("iso", 3)
    R = random_operator(L, np.random.default_rng(2))
    assert np.allclose(sharp_metric(R, np.eye(L.dim)), sharp_coadjoint(R).mat, atol=1e-12)
    c = 2.5
    assert np.allclose(sharp_metric(R, c * np.eye(L.dim)), c * sharp_coadjoint(R / c).mat, atol=1e-12)
    with pytest.raises(ValueError):
        sharp_metric(R, -np.eye(L.dim))


def test_metric_ode_pulls_back():
    # R -> R G^{-1} carries solutions of R' = R^{#_g} to solutions of S' = S^#
    L = build_algebra("iso", 3)
    rng = np.random.default_rng(5)
    f_std = lambda M: sharp_coadjoint(SymOperator(L, 0.5 * (M + M.T))).mat
    for _ in range(10):
        A = rng.standard_normal((L.dim, L.dim))
        G = A @ A.T + L.dim * np.eye(L.dim)
        S0 = random_operator(L, rng).mat * 0.3
        R0 = S0 @ G
        ts = np.linspace(0, 0.2, 5)
        _, Rs, _, _ = integrate_array(metric_sharp_field(L, G), R0, 0.2, ts, 1e-10, None)
        _, Ss, _, _ = integrate_array(f_std, S0, 0.2, ts, 1e-10, None)
        for R, S in zip(Rs, Ss):
            assert np.abs(R @ np.linalg.inv(G) - S).max() < 1e-6


# ---------------------------------------------------------------- forms


def test_hermitian_form_basics():
    L = build_algebra("so", 4)
    rng = np.random.default_rng(3)
    z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    z /= np.linalg.norm(z)
    assert np.isclose(hermitian_form(identity(L), z), 1.0)
    R = random_operator(L, rng)
    x = rng.standard_normal(6)
    assert np.isclose(hermitian_form(R, x), x @ R.mat @ x)
    for _ in range(100):
        z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert abs(hermitian_form(R, z) - np.real(z @ R.mat @ z.conj())) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_hermitian_form_bounds(seed):
    L = build_algebra("so", 4)
    rng = np.random.default_rng(seed)
    R = random_operator(L, rng)
    z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    w, V = np.linalg.eigh(R.mat)
    assert hermitian_form(R, z) >= w[0] * np.vdot(z, z).real - 1e-12
    assert np.isclose(hermitian_form(R, V[:, 0]), w[0])
    assert hermitian_form(square(R), z) >= -1e-12


# ---------------------------------------------------------------- Ricci


@pytest.mark.parametrize("n", [3, 4, 5])
def test_ricci_calibration(n):
    L = build_algebra("so", n)
    assert np.allclose(ricci(identity(L)), (n - 1) * np.eye(n))
    assert np.allclose(ricci(zero(L)), 0)


def test_ricci_matches_bruteforce():
    R = random_curvature_operator(4, np.random.default_rng(8))
    assert np.allclose(ricci(R), ricci_bruteforce(R.mat, 4), atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_scalar_of_sphere_cross_line(n):
    R = model_operator(ModelOperatorTag("SphereCrossLine", n))
    # identity on so(n-1): scal of the round S^{n-1} block
    assert np.isclose(scalar(R), (n - 1) * (n - 2))
    Ric = ricci(R)
    assert np.isclose(Ric[-1, -1], 0) and np.allclose(Ric[:-1, :-1], (n - 2) * np.eye(n - 1))


def test_ricci_refuses_iso():
    with pytest.raises(ContractViolation):
        ricci(identity(build_algebra("iso", 3)))


def test_ric_wedge_id():
    n = 4
    L = build_algebra("so", n)
    assert np.allclose(ric_wedge_id(np.eye(n)).mat, np.eye(L.dim))
    lam = np.array([1.0, -2.0, 0.5, 3.0])
    expected = [(lam[i] + lam[j]) / 2 for i in range(n) for j in range(i + 1, n)]
    assert np.allclose(ric_wedge_id(np.diag(lam)).mat, np.diag(expected))
    rng = np.random.default_rng(1)
    A, B = (M + M.T for M in rng.standard_normal((2, n, n)))
    assert np.allclose(ric_wedge_id(2 * A + B).mat, 2 * ric_wedge_id(A).mat + ric_wedge_id(B).mat, atol=1e-12)


# ---------------------------------------------------------------- Bianchi


@pytest.mark.parametrize("n", [3, 4, 5])
def test_bianchi_dimension(n):
    # algebraic curvature tensors: n^2 (n^2 - 1) / 12
    assert bianchi_dim(n) == n * n * (n * n - 1) // 12
    assert bianchi_dim(n) == bianchi_residual_map(n).shape[1] - np.linalg.matrix_rank(bianchi_residual_map(n))


def test_bianchi_projection_properties():
    L = build_algebra("so", 4)
    rng = np.random.default_rng(0)
    assert np.allclose(bianchi_project(identity(L)).mat, np.eye(6))
    K = bianchi_basis(4)
    P = K @ K.T
    assert np.allclose(P, P.T, atol=1e-12)
    for _ in range(50):
        R = random_operator(L, rng)
        B = bianchi_project(R)
        assert np.abs(bianchi_project(B).mat - B.mat).max() < 1e-12
        assert bianchi_residual(B) < 1e-10


def test_identity_part():
    L = build_algebra("so", 4)
    R = random_operator(L, np.random.default_rng(4))
    P = identity_part(R)
    assert np.allclose(P.mat, np.trace(R.mat) / 6 * np.eye(6))
    assert np.isclose(np.sum((R.mat - P.mat) * np.eye(6)), 0)


# ---------------------------------------------------------------- models


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sphere_cross_line_spectrum(n):
    w = model_operator(ModelOperatorTag("SphereCrossLine", n)).eigvalsh()
    assert np.isclose(w[0], 0) and np.isclose(w[-1], 1)


def test_fubini_study_spectrum():
    w = model_operator(ModelOperatorTag("FubiniStudyE", 2)).eigvalsh()
    assert np.allclose(w, [1, 1, 1, 3], atol=1e-12)


@pytest.mark.parametrize("k,n", [(1, 2), (1, 3), (2, 3)])
def test_cpk_cross_flat_kernel_contains_complement_block(k, n):
    from curvcone.kahler import block_embedding

    R = model_operator(ModelOperatorTag("CPkCrossFlat", n, k))
    L = build_algebra("u", n)
    for b in build_algebra("u", n - k).basis:
        X = np.zeros((n, n), dtype=complex)
        X[k:, k:] = b
        assert np.linalg.norm(R.mat @ L.real_coords(X)) < 1e-12
    assert block_embedding(k, n).shape == (n * n, k * k)


def test_model_tag_validation():
    with pytest.raises(ValueError):
        ModelOperatorTag("CPkCrossFlat", 3, 4)
    with pytest.raises(ValueError):
        ModelOperatorTag("Torus", 3)


# ---------------------------------------------------------------- l_s


def test_l_s_trivial_cases():
    n = 5
    R = random_curvature_operator(n, np.random.default_rng(0))
    assert np.array_equal(l_s_real(R, 0.0).mat, R.mat)
    # Ricci-flat part: remove Ricci through the Weyl projection of the Bianchi space
    K = bianchi_basis(n)
    rng = np.random.default_rng(1)
    from curvcone.curvop import sym_from_coords

    ric_map = np.array([ricci(SymOperator(R.algebra, sym_from_coords(k, R.dim))).ravel() for k in K.T]).T
    _, s, vt = np.linalg.svd(ric_map)
    rank = int(np.sum(s > 1e-10))
    W = K @ vt[rank:].T @ rng.standard_normal(vt.shape[0] - rank)
    Weyl = SymOperator(R.algebra, sym_from_coords(W, R.dim))
    assert np.abs(ricci(Weyl)).max() < 1e-12
    assert np.allclose(l_s_real(Weyl, 0.05).mat, Weyl.mat, atol=1e-12)


def test_l_s_inverse_and_bound_warning():
    n = 4
    R = random_curvature_operator(n, np.random.default_rng(3))
    s = 0.9 * s_bound(n)
    assert np.allclose(l_s_real_inverse(l_s_real(R, s), s).mat, R.mat, atol=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        l_s_real(R, s)
    with pytest.warns(UserWarning):
        l_s_real(R, 2 * s_bound(n))


def test_s_bound_value():
    assert np.isclose(s_bound(4), (np.sqrt(20) - 2) / 8)
