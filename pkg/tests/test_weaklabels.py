import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakproper import weaklabels as wl
from weakproper.matrixcore import rank
from weakproper.errors import DimensionError, NotReconstructible

from families import TWO_ANNOTATOR_R, builtin_reconstructions, reconstruction_cases, two_annotators


# -- TransitionMatrix -------------------------------------------------------

def test_transition_validation():
    with pytest.raises(ValueError):
        wl.TransitionMatrix(("1", "2"), ("a", "b"), [[0.5, 0.5], [0.6, 0.5]])
    with pytest.raises(ValueError):
        wl.TransitionMatrix(("1", "2"), ("a", "b"), [[1.5, 0.0], [-0.5, 1.0]])
    with pytest.raises(DimensionError):
        wl.TransitionMatrix(("1", "2"), ("a",), [[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        wl.TransitionMatrix(("1", "2"), ("a", "a"), np.eye(2))


def test_index_by_tag_and_position():
    T = wl.partial_label_3class(0.1)
    assert T.index("110") == 3
    assert T.index(6) == 6
    with pytest.raises(KeyError):
        T.index("222")
    with pytest.raises(KeyError):
        T.index(7)


# -- families ---------------------------------------------------------------

def test_symmetric_noise():
    T = wl.symmetric_noise(3, 0.2).matrix
    assert np.allclose(np.diag(T), 0.8) and np.allclose(T[~np.eye(3, dtype=bool)], 0.1)
    assert np.array_equal(wl.symmetric_noise(3, 0.0).matrix, np.eye(3))
    assert not wl.is_reconstructible(wl.symmetric_noise(3, 2 / 3))
    assert rank(wl.symmetric_noise(3, 2 / 3).matrix) == 1


def test_symmetric_noise_reconstruction():
    R = wl.symmetric_noise_reconstruction(3, 0.2)
    expected = np.array([[1.8, -0.2, -0.2], [-0.2, 1.8, -0.2], [-0.2, -0.2, 1.8]]) / 1.4
    assert np.abs(R.matrix - expected).max() < 1e-12
    assert np.abs(wl.symmetric_noise_reconstruction(3, 0.0).matrix - np.eye(3)).max() == 0
    R4 = wl.symmetric_noise_reconstruction(4, 0.3)
    assert R4.identity_error(wl.symmetric_noise(4, 0.3)) < 1e-12
    assert R4.column_sum_error() < 1e-12
    with pytest.raises(NotReconstructible):
        wl.symmetric_noise_reconstruction(3, 2 / 3)


def test_partial_label_3class():
    T0 = wl.partial_label_3class(0.0).matrix
    assert np.array_equal(T0[:3], np.eye(3)) and not np.any(T0[3:])
    T = wl.partial_label_3class(0.1)
    m = T.matrix
    assert T.weak_labels == ("100", "010", "001", "110", "101", "011", "111")
    assert np.allclose(np.diag(m[:3]), 0.81)
    assert np.allclose(m[3:6][m[3:6] > 0], 0.09) and np.count_nonzero(m[3:6]) == 6
    assert np.allclose(m[6], 0.01)
    for p in (0.0, 0.3, 0.9):
        Tp = wl.partial_label_3class(p)
        assert np.abs(Tp.matrix.sum(axis=0) - 1).max() < 1e-12
        assert wl.is_reconstructible(Tp)


def test_partial_label_R_example():
    R = wl.partial_label_R_example(0.1).matrix
    assert abs(R[0, 3] - 2.8 / 2.7) < 1e-12 and abs(R[0, 5] + 2.9 / 2.7) < 1e-12
    for p in (0.0, 0.1, 0.5, 0.9):
        Rp = wl.partial_label_R_example(p)
        assert Rp.identity_error(wl.partial_label_3class(p)) < 1e-10
        assert Rp.column_sum_error() < 1e-12


def test_complementary():
    assert np.array_equal(wl.complementary(3).matrix,
                          [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
    assert np.array_equal(wl.complementary(2).matrix, [[0, 1], [1, 0]])
    T10 = wl.complementary(10).matrix
    assert np.allclose(T10[~np.eye(10, dtype=bool)], 1 / 9) and not np.any(np.diag(T10))
    assert np.abs(T10.sum(axis=0) - 1).max() < 1e-12


def test_pu_binary():
    assert np.array_equal(wl.pu_binary(0.5).matrix, [[0.5, 0], [0.5, 1]])
    assert np.array_equal(wl.pu_binary(1.0).matrix, np.eye(2))
    for r in (0.1, 0.5, 0.9):
        assert wl.is_reconstructible(wl.pu_binary(r))


def test_two_annotator_composition():
    T = two_annotators()
    expected = np.array([[0.5, 0, 0, 0.5], [0, 0.5, 0.5, 0], [0, 0.5, 0, 0.5]]).T
    assert np.array_equal(T.matrix, expected)
    assert not wl.is_reconstructible(wl.one_vs_rest(3, 1))
    assert not wl.is_reconstructible(wl.one_vs_rest(3, 2))
    assert wl.is_reconstructible(T)
    assert np.abs(TWO_ANNOTATOR_R @ T.matrix - np.eye(3)).max() == 0
    assert len(wl.cokernel(T)) == 1


def test_compose_single_source_unchanged():
    T = wl.complementary(3)
    C = wl.compose_multisource([T], [1.0])
    assert np.array_equal(C.matrix, T.matrix)


def test_compose_errors():
    with pytest.raises(ValueError):
        wl.compose_multisource([wl.complementary(3), wl.complementary(3)], [0.5, 0.4])
    with pytest.raises(ValueError):
        wl.compose_multisource([wl.complementary(3), wl.complementary(4)], [0.5, 0.5])


# -- inversion --------------------------------------------------------------

def test_reconstruction_examples():
    R = wl.reconstruction(wl.complementary(3), normalize=True).matrix
    assert np.abs(R - np.array([[-1, 1, 1], [1, -1, 1], [1, 1, -1]])).max() < 1e-12
    I = wl.symmetric_noise(3, 0.0)
    for norm in (False, True):
        assert np.abs(wl.reconstruction(I, normalize=norm).matrix - np.eye(3)).max() < 1e-15
    Rp = wl.reconstruction(wl.partial_label_3class(0.1), normalize=True)
    assert Rp.identity_error(wl.partial_label_3class(0.1)) < 1e-9
    assert Rp.column_sum_error() < 1e-9


def test_not_reconstructible():
    for T in (wl.symmetric_noise(3, 2 / 3), wl.symmetric_noise(2, 0.5),
              wl.nonambiguous_example(), wl.one_vs_rest(3, 1)):
        assert not wl.is_reconstructible(T)
        with pytest.raises(NotReconstructible):
            wl.reconstruction(T)


@pytest.mark.parametrize("name,T", reconstruction_cases(), ids=lambda x: x if isinstance(x, str) else "")
def test_reconstruction_invariants(name, T):
    for norm in (False, True):
        R = wl.reconstruction(T, normalize=norm)
        assert R.identity_error(T) < 1e-9
        # R^T 1_Z - 1_Y lies in the cokernel
        assert np.abs(T.matrix.T @ (R.matrix.sum(axis=0) - 1)).max() < 1e-9
        R.check(T)
    assert wl.reconstruction(T, normalize=True).column_sum_error() < 1e-9


@pytest.mark.parametrize("name,T", reconstruction_cases(), ids=lambda x: x if isinstance(x, str) else "")
def test_cokernel_invariants(name, T):
    basis = wl.cokernel(T)
    assert len(basis) == T.n_weak - T.n_true
    if len(basis):
        V = basis.vectors
        assert np.abs(V @ V.T - np.eye(len(basis))).max() < 1e-10
        assert np.abs(T.matrix.T @ basis.columns).max() < 1e-10
        rng = np.random.default_rng(0)
        P = rng.dirichlet(np.ones(T.n_true), size=100)
        assert np.abs(T.push(P) @ basis.columns).max() < 1e-10


def test_cokernel_examples():
    assert len(wl.cokernel(wl.complementary(3))) == 0
    assert len(wl.cokernel(wl.partial_label_3class(0.1))) == 4


def test_ambiguity_degree():
    assert wl.ambiguity_degree(wl.partial_label_3class(0.0)) == 0.0
    assert wl.ambiguity_degree(wl.pu_binary(0.3)) == 1.0
    assert wl.ambiguity_degree(wl.nonambiguous_example()) == 0.5
    with pytest.raises(ValueError):
        wl.ambiguity_degree(wl.symmetric_noise(3, 0.1))


def test_nonambiguous_example_is_rank_three():
    T = wl.nonambiguous_example()
    assert np.abs(T.matrix @ np.array([1, 1, -1, -1])).max() == 0
    T6 = wl.nonambiguous_example(extra=2)
    assert T6.matrix.shape == (6, 6)
    assert not wl.is_reconstructible(T6)


def test_sample_weak_labels_frequencies():
    T = wl.complementary(3)
    rng = np.random.default_rng(7)
    z = rng.integers(0, 3, 30000)
    y = wl.sample_weak_labels(T, z, rng)
    pbar = np.bincount(z, minlength=3) / z.size
    freq = np.bincount(y, minlength=3) / y.size
    assert np.abs(freq - T.push(pbar)).max() < 0.01
    # complementary labels never name the true class
    assert not np.any(y == z)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 0.95))
def test_symmetric_family_columns(K, p):
    T = wl.symmetric_noise(K, p)
    assert np.all(T.matrix >= 0) and np.abs(T.matrix.sum(axis=0) - 1).max() < 1e-12
    if abs(p - (K - 1) / K) > 1e-6:
        R = wl.reconstruction(T)
        assert R.identity_error(T) < 1e-9 and R.column_sum_error() < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.99))
def test_partial_family_columns(p):
    T = wl.partial_label_3class(p)
    assert np.all(T.matrix >= 0) and np.abs(T.matrix.sum(axis=0) - 1).max() < 1e-12
    R = wl.reconstruction(T)
    assert R.identity_error(T) < 1e-9 and R.column_sum_error() < 1e-9


def test_every_builtin_R_is_a_left_inverse():
    for name, T, R in builtin_reconstructions():
        assert R.identity_error(T) < 1e-9, name
