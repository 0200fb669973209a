import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import plane_generator, random_hyperbolic, random_jordan
from flagflow import (
    AlgElem,
    GroupElem,
    SemisimpleSpec,
    additive_jordan,
    ad_eigenspaces,
    cartan_inner,
    chamber_normalize,
    mu_gap,
    multiplicative_jordan,
)
from flagflow.errors import ClusterAmbiguity, NoPositiveRoot, NonSquareInput, NotHyperbolic, SpecMismatch
from flagflow.lie_core import block_diagonal_part, random_orthogonal, root_pairs


def test_alg_elem_rejects_trace():
    with pytest.raises(ValueError):
        AlgElem([np.eye(2)])


def test_alg_elem_rejects_non_square():
    with pytest.raises(NonSquareInput):
        AlgElem([np.zeros((2, 3))])


def test_group_elem_rejects_determinant():
    with pytest.raises(ValueError):
        GroupElem([2 * np.eye(2)])


def test_spec_mismatch_on_addition():
    with pytest.raises(SpecMismatch):
        AlgElem.zeros(SemisimpleSpec((2,))) + AlgElem.zeros(SemisimpleSpec((3,)))


def test_elements_are_immutable():
    X = plane_generator()
    with pytest.raises(ValueError):
        X[0][0, 0] = 5.0


def test_scalar_multiplication_with_numpy_scalar():
    X = plane_generator()
    Y = np.float64(2.0) * X
    assert isinstance(Y, AlgElem)
    assert Y.allclose(X + X)


def test_plane_example_jordan_parts():
    J = additive_jordan(plane_generator())
    assert np.allclose(J.E[0], 0.0, atol=1e-14)
    assert np.allclose(J.H[0], np.diag([-1.0, -1.0, 2.0]), atol=1e-14)
    assert np.allclose(J.N[0], np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0.0]]), atol=1e-14)


def test_plane_example_chamber_and_gap():
    c = chamber_normalize(additive_jordan(plane_generator()).H)
    f = c.factors[0]
    assert np.allclose(f.eigenvalues, (2.0, -1.0))
    assert f.multiplicities == (1, 2)
    assert np.isclose(np.linalg.det(f.V), 1.0)
    assert np.isclose(mu_gap(c), 3.0)


def test_rotation_is_elliptic():
    X = AlgElem([np.array([[0.0, -1.0], [1.0, 0.0]])])
    J = additive_jordan(X)
    assert J.E.allclose(X, atol=1e-14)
    assert J.H.norm() < 1e-14 and J.N.norm() < 1e-14
    with pytest.raises(NotHyperbolic):
        chamber_normalize(X)


def test_zero_generator_has_no_positive_root():
    c = chamber_normalize(AlgElem.zeros(SemisimpleSpec((3,))))
    with pytest.raises(NoPositiveRoot):
        mu_gap(c)


def test_near_coincident_eigenvalues_at_coarse_tolerance_are_ambiguous():
    with pytest.raises(ClusterAmbiguity):
        additive_jordan(AlgElem([np.diag([1.0, 1.03, -2.03])]), tol=1e-2)


def test_minus_identity_is_elliptic():
    m = multiplicative_jordan(GroupElem([-np.eye(2)]))
    assert np.allclose(m.e[0], -np.eye(2))
    assert np.allclose(m.h[0], np.eye(2))
    assert np.allclose(m.u[0], np.eye(2))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_additive_parts_match_construction(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(20):
        X, E, H, N = random_jordan(n, rng)
        J = additive_jordan(AlgElem([X]))
        assert np.allclose(J.E[0], E, atol=1e-7)
        assert np.allclose(J.H[0], H, atol=1e-7)
        assert np.allclose(J.N[0], N, atol=1e-7)


def test_multiplicative_parts_match_exponentials():
    rng = np.random.default_rng(11)
    for _ in range(30):
        X, E, H, N = random_jordan(int(rng.integers(2, 6)), rng)
        m = multiplicative_jordan(GroupElem([sla.expm(X)]))
        assert np.allclose(m.e[0], sla.expm(E), atol=1e-8)
        assert np.allclose(m.h[0], sla.expm(H), atol=1e-8)
        assert np.allclose(m.u[0], sla.expm(N), atol=1e-8)
        assert m.reconstruct().allclose(GroupElem([sla.expm(X)], check=False), atol=1e-8)


def test_product_spec_decomposes_factorwise():
    rng = np.random.default_rng(12)
    X1, _, H1, _ = random_jordan(3, rng)
    X2, _, H2, _ = random_jordan(2, rng)
    J = additive_jordan(AlgElem([X1, X2]))
    assert np.allclose(J.H[0], H1, atol=1e-8)
    assert np.allclose(J.H[1], H2, atol=1e-8)


def test_chamber_diagonalizes_and_sorts():
    rng = np.random.default_rng(13)
    for n in range(2, 6):
        H = AlgElem([random_hyperbolic(n, rng, [n - 1, 1] if n > 2 else None)])
        c = chamber_normalize(H)
        f = c.factors[0]
        D = f.V_inv @ H[0] @ f.V
        assert np.allclose(D, np.diag(f.diagonal), atol=1e-9)
        assert np.all(np.diff(f.eigenvalues) < 0)
        assert np.isclose(np.linalg.det(f.V), 1.0)
        assert c.hyperbolic().allclose(H, atol=1e-9)


def test_root_spaces_are_ad_eigenvectors():
    rng = np.random.default_rng(14)
    H = AlgElem([random_hyperbolic(4, rng, [2, 1, 1])])
    c = chamber_normalize(H)
    f = c.factors[0]
    for sign in (1, -1):
        for Y, (a, b) in zip(ad_eigenspaces(c, sign), root_pairs(f, sign)):
            rate = f.diagonal[a] - f.diagonal[b]
            assert np.sign(rate) == sign
            assert H.bracket(Y).allclose(rate * Y, atol=1e-9)


def test_block_diagonal_part_commutes_with_h():
    rng = np.random.default_rng(15)
    c = chamber_normalize(AlgElem([np.diag([1.0, 1.0, -2.0])])).adapted()
    Y = AlgElem([np.triu(rng.normal(size=(3, 3)), 1)])
    B = block_diagonal_part(c, Y)
    assert B.bracket(c.hyperbolic()).norm() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_cartan_inner_is_orthogonally_invariant(n, seed):
    rng = np.random.default_rng(seed)
    X = AlgElem([_traceless(rng.normal(size=(n, n)))])
    Y = AlgElem([_traceless(rng.normal(size=(n, n)))])
    k = GroupElem([random_orthogonal(n, rng)])
    assert np.isclose(cartan_inner(k.ad(X), k.ad(Y)), cartan_inner(X, Y), atol=1e-10)
    assert np.isclose(cartan_inner(X, Y), cartan_inner(Y, X))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_adjoint_is_a_homomorphism(n, seed):
    rng = np.random.default_rng(seed)
    X = AlgElem([_traceless(rng.normal(size=(n, n)))])
    Y = AlgElem([_traceless(rng.normal(size=(n, n)))])
    g = GroupElem.exp(AlgElem([_traceless(0.5 * rng.normal(size=(n, n)))]))
    lhs = g.ad(X.bracket(Y))
    rhs = g.ad(X).bracket(g.ad(Y))
    assert lhs.allclose(rhs, atol=1e-8 * max(1.0, lhs.norm()))


def test_exp_and_power_agree():
    X = plane_generator()
    g = GroupElem.exp(X, 0.3)
    assert g.power(3).allclose(GroupElem.exp(X, 0.9), atol=1e-10)
    assert (g @ g.inv()).allclose(GroupElem.identity(X.spec), atol=1e-12)


def _traceless(a):
    return a - np.trace(a) / a.shape[0] * np.eye(a.shape[0])
