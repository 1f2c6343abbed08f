import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import softmax

from weakproper import potentials as pot
from weakproper.errors import LinkFailure, NonDifferentiable
from weakproper.potentials import GLS, LogSumExp
from weakproper.weaklabels import partial_label_R_example

LSE3 = LogSumExp(3)


def gls(k, alpha, K=3):
    return GLS(LogSumExp(K), k, alpha)


def rand_simplex(rng, K=3, n=None, lo=1e-3):
    p = rng.dirichlet(np.ones(K), size=n)
    p = np.maximum(p, lo)
    return p / p.sum(axis=-1, keepdims=True)


# -- value and subgradient --------------------------------------------------

def test_value_examples():
    assert abs(LSE3.value(np.zeros(3)) - np.log(3)) < 1e-15
    v = np.array([1.0, -1.0, 0.0])
    assert abs(gls(2, 2).value(v) - (LSE3.value(v) + 2)) < 1e-14
    u = np.array([1.0, 1.0, -2.0]) / np.sqrt(6)
    t = 1e3
    assert abs(LSE3.value(t * u) - (t * u.max() + np.log(2))) < 1e-12


def test_value_is_overflow_safe():
    assert np.isfinite(LSE3.value(np.array([1e5, -1e5, 0.0])))


def test_subgradient_examples():
    assert np.allclose(LSE3.gradient(np.zeros(3)), 1 / 3)
    v = np.array([1.0, -1.0, 0.0])
    assert np.allclose(gls(1, 2).gradient(v), softmax(v) + v, atol=1e-15)


def test_gls_zero_logit_cusp():
    with pytest.raises(NonDifferentiable):
        gls(1, 0.5).gradient(np.array([1.0, -1.0, 0.0]))
    # sign(0) = 0 for alpha >= 1
    g = gls(1, 1.0).penalty_gradient(np.array([1.0, -1.0, 0.0]))
    assert np.array_equal(g, [0.5, -0.5, 0.0])


def test_gls_validation_and_convexity_flag():
    with pytest.raises(ValueError):
        gls(-1, 2)
    with pytest.raises(ValueError):
        gls(1, 0)
    assert gls(1, 1).convex and gls(1, 2).convex and not gls(1, 0.5).convex


def test_potential_dict_roundtrip():
    for F in (LSE3, gls(0.3, 1.5)):
        G = pot.potential_from_dict(F.to_dict())
        v = np.array([0.3, -0.1, -0.2])
        assert G.value(v) == F.value(v)
    with pytest.raises(ValueError):
        pot.potential_from_dict({"kind": "hinge", "classes": 3})


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=8))
def test_lse_sandwich_and_softmax_is_simplex(vals):
    v = np.array(vals)
    F = LogSumExp(v.size)
    f = F.value(v)
    assert v.max() <= f <= v.max() + np.log(v.size) + 1e-12
    # strictness holds whenever the other terms are not lost to rounding
    if np.sort(v)[-2] > v.max() - 30:
        assert f > v.max()
    s = F.gradient(v)
    assert np.all(s >= 0) and abs(s.sum() - 1) < 1e-12


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_gls_convexity_spot_check(alpha):
    rng = np.random.default_rng(1)
    F = gls(0.7, alpha)
    for _ in range(1000):
        v0, v1 = (pot.center(3 * rng.standard_normal(3)) for _ in range(2))
        lam = rng.random()
        lhs = F.value(lam * v0 + (1 - lam) * v1)
        rhs = lam * F.value(v0) + (1 - lam) * F.value(v1)
        assert lhs <= rhs + 1e-9


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for F in (LSE3, gls(0.5, 1.5), gls(1.0, 2.0), gls(0.3, 3.0)):
        for _ in range(20):
            v = rng.standard_normal(3)
            h = 1e-6
            fd = np.array([(F.value(v + h * e) - F.value(v - h * e)) / (2 * h) for e in np.eye(3)])
            assert np.abs(fd - F.gradient(v)).max() < 1e-7


# -- link, conjugate, decode ------------------------------------------------

def test_link_lse_examples():
    assert np.abs(pot.link(LSE3, np.full(3, 1 / 3))).max() < 1e-15
    p = np.array([0.5, 0.25, 0.25])
    v = pot.link(LSE3, p)
    assert np.abs(v - (np.log(p) - np.log(p).mean())).max() < 1e-15
    assert np.abs(LSE3.gradient(v) - p).max() < 1e-12


@pytest.mark.parametrize("k,alpha", [(0.1, 2.0), (1.0, 2.0), (0.5, 1.5), (0.3, 3.0), (2.0, 1.2)])
def test_link_gls_first_order_condition(k, alpha):
    rng = np.random.default_rng(3)
    F = gls(k, alpha)
    for p in rand_simplex(rng, n=30):
        v = pot.link(F, p)
        assert abs(v.sum()) < 1e-9
        assert np.abs(pot.center(F.gradient(v)) - pot.center(p)).max() < 1e-8


def test_link_batched():
    rng = np.random.default_rng(4)
    P = rand_simplex(rng, n=5)
    F = gls(0.1, 2.0)
    V = pot.link(F, P)
    assert V.shape == (5, 3)
    assert np.allclose(V[2], pot.link(F, P[2]))


def test_link_failure_reports_residual(monkeypatch):
    monkeypatch.setattr(pot, "LINK_MAX_STEPS", 1)
    with pytest.raises(LinkFailure) as info:
        pot.link(gls(5.0, 1.1), np.array([0.9, 0.05, 0.05]))
    assert info.value.residual > 0


def test_conjugate_examples():
    u = np.full(3, 1 / 3)
    assert abs(pot.conjugate(LSE3, u) + np.log(3)) < 1e-14
    assert abs(pot.conjugate(LSE3, np.array([1.0, 0.0, 0.0]))) < 1e-9
    assert abs(pot.conjugate(gls(1, 2), u) + np.log(3)) < 1e-14


@pytest.mark.parametrize("F", [LSE3, gls(0.1, 2.0), gls(1.0, 1.5), gls(0.5, 3.0)],
                         ids=["lse", "gls-0.1-2", "gls-1-1.5", "gls-0.5-3"])
def test_fenchel_young_equality(F):
    rng = np.random.default_rng(5)
    for p in rand_simplex(rng, n=200):
        v = pot.link(F, p)
        assert abs(F.value(v) + pot.conjugate(F, p) - p @ v) < 1e-8


def test_decode_examples():
    rng = np.random.default_rng(6)
    v = rng.standard_normal((10, 3))
    assert np.abs(pot.decode(LSE3, v) - softmax(v, axis=1)).max() < 1e-15
    assert np.allclose(pot.decode(gls(1, 2), np.zeros(3)), 1 / 3)
    F = gls(0.1, 2.0)
    for p in rand_simplex(rng, n=50):
        assert np.abs(pot.decode(F, pot.link(F, p)) - p).max() < 1e-8


def test_decode_reports_clipping():
    q, clip = pot.decode(gls(5.0, 2.0), np.array([3.0, -3.0, 0.0]), full_output=True)
    assert clip > 0 and q.min() == 0 and abs(q.sum() - 1) < 1e-15
    _, clip0 = pot.decode(LSE3, np.array([3.0, -3.0, 0.0]), full_output=True)
    assert clip0 == 0


@pytest.mark.parametrize("F", [LSE3, gls(0.1, 2.0), gls(1.0, 1.5)], ids=["lse", "gls2", "gls1.5"])
def test_decode_link_roundtrip(F):
    rng = np.random.default_rng(7)
    for p in rand_simplex(rng, n=100, lo=1e-2):
        assert np.abs(pot.decode(F, pot.link(F, p)) - p).max() < 1e-7


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=3, max_size=3), st.floats(0.01, 5), st.floats(1.0, 3.0))
def test_decode_preserves_argmax(vals, k, alpha):
    v = np.array(vals)
    top = np.sort(v)
    if top[-1] - top[-2] < 1e-9:
        return
    q = pot.decode(GLS(LogSumExp(3), k, alpha), v)
    assert np.argmax(q) == np.argmax(softmax(v))


# -- boundedness ------------------------------------------------------------

def test_certify_lse_partial_example_unbounded():
    R = partial_label_R_example(0.1)
    v = pot.certify_boundedness(LSE3, R)
    assert v.status == "UnboundedWitness" and not v.bounded
    d = v.direction / np.abs(v.direction).max()
    assert np.allclose(d, [0.5, 0.5, -1.0], atol=1e-12)
    assert v.weak_label == 3
    assert np.all(np.diff(v.values) < 0)
    slope = np.polyfit(v.ts, v.values, 1)[0]
    # -29/9 per unit t along (1, 1, -2), rescaled to the unit direction
    assert abs(slope - (-29 / 9) / np.linalg.norm([1, 1, -2])) < 1e-6


def test_certify_gls_verdicts():
    R = partial_label_R_example(0.1)
    v = pot.certify_boundedness(gls(1, 2), R)
    assert v.status == "BoundedCertified" and v.rule == "gls-superlinear"
    for alpha in (0.5, 1.0):
        w = pot.certify_boundedness(gls(1, alpha), R)
        assert w.status == "UnboundedWitness"
        assert np.all(np.diff(w.values) < 0)


def test_certify_supervised_is_bounded_likely():
    v = pot.certify_boundedness(LSE3, np.eye(3))
    assert v.status == "BoundedLikely" and v.bounded
    assert v.min_gap >= 0


def test_certify_complementary_lse_unbounded():
    from weakproper.weaklabels import complementary, reconstruction
    # (R^T v)_y = -2 v_y on the hyperplane, which outgrows max_z v_z
    v = pot.certify_boundedness(LSE3, reconstruction(complementary(3)))
    assert v.status == "UnboundedWitness"
