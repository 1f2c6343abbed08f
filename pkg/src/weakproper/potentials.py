"""Convex potentials on the zero-sum logit hyperplane.

A potential ``F`` turns logits ``v`` (with ``sum(v) == 0``) into the proper
loss ``-v_z + F(v)``. Two potentials ship: :class:`LogSumExp`, which gives
the softmax cross entropy, and :class:`GLS`, which adds the generalized
logit-squeezing penalty ``(k/2) * sum(|v_z|**alpha)`` to a base potential.

All array-valued routines accept a single vector or a batch with classes on
the last axis.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import LinkFailure, NonDifferentiable

#: probabilities below this value are clamped before taking logs
PROB_EPS = 1e-12
LINK_TOL = 1e-10
LINK_MAX_STEPS = 10_000
# caps the gLS curvature |v|^(alpha-2) near zero for 1 < alpha < 2
_CURVATURE_CAP = 1e200


def center(v):
    """Project onto the zero-sum hyperplane along the last axis."""
    v = np.asarray(v, dtype=float)
    return v - v.mean(axis=-1, keepdims=True)


def hyperplane_basis(K):
    """Orthonormal ``K x (K-1)`` basis of the zero-sum hyperplane."""
    q, _ = np.linalg.qr(np.eye(K) - 1.0 / K)
    return q[:, : K - 1]


def clamp_probs(p):
    p = np.asarray(p, dtype=float)
    return np.maximum(p, PROB_EPS)


class ConvexPotential:
    """Interface shared by the shipped potentials."""

    n_classes: int

    @property
    def convex(self):
        return True

    def value(self, v):
        raise NotImplementedError

    def gradient(self, v):
        raise NotImplementedError

    def hessian(self, v):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class LogSumExp(ConvexPotential):
    n_classes: int

    def value(self, v):
        return logsumexp(np.asarray(v, dtype=float), axis=-1)

    def gradient(self, v):
        return softmax(np.asarray(v, dtype=float), axis=-1)

    def hessian(self, v):
        s = self.gradient(v)
        return np.diag(s) - np.outer(s, s)

    def to_dict(self):
        return {"kind": "lse", "classes": self.n_classes}


@dataclass(frozen=True)
class GLS(ConvexPotential):
    """``base(v) + (k/2) * sum(|v_z|**alpha)``.

    Constructible for any ``alpha > 0``; only ``alpha >= 1`` yields a convex
    potential.
    """

    base: ConvexPotential
    k: float
    alpha: float
    n_classes: int = field(init=False)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("gLS coefficient must be non-negative")
        if self.alpha <= 0:
            raise ValueError("gLS exponent must be positive")
        object.__setattr__(self, "n_classes", self.base.n_classes)

    @property
    def convex(self):
        return self.alpha >= 1.0 and self.base.convex

    def penalty(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * self.k * np.sum(np.abs(v) ** self.alpha, axis=-1)

    def penalty_gradient(self, v):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        if self.alpha < 1.0:
            if np.any(a == 0.0) and self.k > 0:
                raise NonDifferentiable(
                    f"|v|^{self.alpha} has no finite subgradient at a zero logit")
            return 0.5 * self.k * self.alpha * a ** (self.alpha - 1.0) * np.sign(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            mag = np.where(a > 0.0, a ** (self.alpha - 1.0), 0.0 if self.alpha > 1.0 else 1.0)
        return 0.5 * self.k * self.alpha * mag * np.sign(v)

    def value(self, v):
        return self.base.value(v) + self.penalty(v)

    def gradient(self, v):
        return self.base.gradient(v) + self.penalty_gradient(v)

    def hessian(self, v):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        with np.errstate(divide="ignore"):
            curv = np.where(a > 0.0, a ** (self.alpha - 2.0), np.inf if self.alpha < 2 else 0.0)
        if self.alpha == 2.0:
            curv = np.ones_like(v)
        curv = np.minimum(curv, _CURVATURE_CAP)
        diag = 0.5 * self.k * self.alpha * (self.alpha - 1.0) * curv
        return self.base.hessian(v) + np.diag(diag)

    def to_dict(self):
        return {"kind": "gls", "classes": self.n_classes, "k": self.k, "alpha": self.alpha}


def potential_from_dict(d):
    kind = d["kind"].lower()
    K = int(d["classes"])
    if kind == "lse":
        return LogSumExp(K)
    if kind == "gls":
        return GLS(LogSumExp(K), float(d["k"]), float(d["alpha"]))
    raise ValueError(f"unknown potential kind {kind!r}")


# -- module-level operations ------------------------------------------------

def value(F, v):
    return F.value(v)


def subgradient(F, v):
    return F.gradient(v)


def _line_search(F, p, v, d):
    """Step length along the ascent direction ``d`` for the concave link objective.

    The directional derivative ``(p - grad F(v + t d)) . d`` decreases in
    ``t``; the full step is taken while it stays non-negative, otherwise its
    sign change in ``(0, 1)`` is bracketed by bisection. Working with the
    derivative rather than objective values keeps the search meaningful
    when the objective change is below floating-point resolution.
    """
    def slope(t):
        return float((p - F.gradient(v + t * d)) @ d)

    if slope(1.0) >= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if slope(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo if lo > 0.0 else hi


def _newton_step(F, v, g):
    """Newton direction on the hyperplane for the ascent gradient ``g`` (already projected).

    Solves the equality-constrained system ``H d + mu 1 = g``, ``1^T d = 0``
    after symmetric diagonal scaling, which keeps it well conditioned when
    the gLS curvature near a zero logit is huge. Falls back to ``g`` when
    the result is not an ascent direction.
    """
    H = F.hessian(v)
    K = H.shape[0]
    scale = 1.0 / np.sqrt(np.maximum(np.diag(H), 1e-300))
    A = np.zeros((K + 1, K + 1))
    A[:K, :K] = H * np.outer(scale, scale)
    A[:K, K] = A[K, :K] = scale
    rhs = np.append(scale * g, 0.0)
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return g
    d = center(scale * sol[:K])
    if not np.all(np.isfinite(d)) or d @ g <= 0:
        return g
    return d


def link(F, p):
    """Logits ``v`` on the zero-sum hyperplane maximizing ``<p, v> - F(v)``.

    Closed form for :class:`LogSumExp`; otherwise a Newton ascent with a
    bisection line search that stops when the projected gradient norm drops
    below ``LINK_TOL``. For ``alpha == 1`` the maximizer may sit on a kink
    of the penalty, in which case :class:`LinkFailure` is raised.
    """
    p = clamp_probs(p)
    if isinstance(F, LogSumExp):
        return center(np.log(p))
    if p.ndim > 1:
        return np.stack([link(F, row) for row in p])
    K = F.n_classes
    Q = hyperplane_basis(K)
    base = F.base if isinstance(F, GLS) else F
    v = link(base, p) if isinstance(base, LogSumExp) else np.zeros(K)
    if isinstance(F, GLS) and F.k > 0:
        # start inside the region where the penalty does not dominate
        v = v / (1.0 + F.k)
    grad = p - F.gradient(v)
    gnorm = np.linalg.norm(Q.T @ grad)
    for _ in range(LINK_MAX_STEPS):
        if gnorm < LINK_TOL:
            return v
        step = _newton_step(F, v, center(grad))
        t = _line_search(F, p, v, step)
        if t == 0.0:
            break
        v = v + t * step
        grad = p - F.gradient(v)
        gnorm = np.linalg.norm(Q.T @ grad)
    if gnorm < LINK_TOL:
        return v
    raise LinkFailure(f"link did not converge (projected gradient norm {gnorm:.3g})", residual=gnorm)


def conjugate(F, p):
    """``F*(p)``, evaluated at the maximizer returned by :func:`link`."""
    v = link(F, p)
    p = clamp_probs(p)
    return np.sum(p * v, axis=-1) - F.value(v)


def decode(F, v, full_output=False):
    """Class probabilities from logits via a subgradient of ``F``.

    The subgradient is shifted along the all-ones direction so that it sums
    to one; any negative entries left over are clipped and the vector is
    renormalized. With ``full_output=True`` the total clipped mass is also
    returned.
    """
    g = np.asarray(F.gradient(v), dtype=float)
    K = g.shape[-1]
    q = g - (g.mean(axis=-1, keepdims=True) - 1.0 / K)
    clip = -np.sum(np.minimum(q, 0.0), axis=-1)
    q = np.maximum(q, 0.0)
    q = q / q.sum(axis=-1, keepdims=True)
    if full_output:
        return q, clip
    return q


# -- boundedness ------------------------------------------------------------

@dataclass
class BoundednessVerdict:
    status: str  # "UnboundedWitness" | "BoundedCertified" | "BoundedLikely"
    rule: str = None
    direction: np.ndarray = None
    weak_label: int = None
    ts: np.ndarray = None
    values: np.ndarray = None
    min_gap: float = None

    @property
    def bounded(self):
        return self.status != "UnboundedWitness"

    def to_dict(self):
        d = {"status": self.status}
        if self.rule is not None:
            d["rule"] = self.rule
        if self.direction is not None:
            d["direction"] = [float(x) for x in self.direction]
            d["weak_label"] = int(self.weak_label)
            d["ts"] = [float(x) for x in self.ts]
            d["values"] = [float(x) for x in self.values]
        if self.min_gap is not None:
            d["min_gap"] = float(self.min_gap)
        return d


def _reconstruction_array(R):
    return np.asarray(getattr(R, "matrix", R), dtype=float)


def candidate_directions(R, n_dirs, rng):
    """Unit zero-sum directions: random ones plus one per weak label.

    The weak-label directions are the centered columns of ``R``; along the
    centered column ``y`` the linear term ``(R^T u)_y`` grows fastest.
    """
    R = _reconstruction_array(R)
    K = R.shape[0]
    dirs = []
    for col in R.T:
        c = center(col)
        n = np.linalg.norm(c)
        if n > 1e-12:
            dirs.append(c / n)
    if n_dirs > 0:
        g = center(rng.standard_normal((n_dirs, K)))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dirs.extend(g)
    return np.array(dirs)


def certify_boundedness(F, R, n_dirs=256, t_max=1e4, n_t=41, seed=0):
    """Decide whether ``F(v) - max_y (R^T v)_y`` is bounded from below.

    gLS with ``alpha > 1`` and ``k > 0`` is certified analytically: the
    penalty grows superlinearly while the subtracted term is positively
    homogeneous of degree one. Otherwise the gap is sampled along rays
    ``t * u`` on a geometric grid of ``t`` up to ``t_max``. A ray whose gap
    decreases strictly over the last decade and ends below ``-1e3`` is
    returned as a witness; failing that the verdict is ``BoundedLikely``
    with the smallest gap seen, which is evidence, not proof.
    """
    if isinstance(F, GLS) and F.alpha > 1.0 and F.k > 0.0:
        return BoundednessVerdict("BoundedCertified", rule="gls-superlinear")
    Rm = _reconstruction_array(R)
    rng = np.random.default_rng(seed)
    dirs = candidate_directions(Rm, n_dirs, rng)
    ts = np.geomspace(t_max * 1e-4, t_max, n_t)
    rt_u = dirs @ Rm  # (D, |Y|): (R^T u)_y for each direction
    best_y = np.argmax(rt_u, axis=1)
    slope = rt_u[np.arange(len(dirs)), best_y]
    V = ts[None, :, None] * dirs[:, None, :]
    gaps = F.value(V) - ts[None, :] * slope[:, None]
    last = ts >= t_max / 10.0 * (1 - 1e-12)
    tail = gaps[:, last]
    decreasing = np.all(np.diff(tail, axis=1) < 0.0, axis=1)
    witness = decreasing & (tail[:, -1] < -1e3)
    if np.any(witness):
        # ties and near-ties go to the earliest candidate, i.e. the R-derived rays
        final = np.where(witness, gaps[:, -1], np.inf)
        i = int(np.flatnonzero(final <= final.min() + 1e-9 * abs(final.min()))[0])
        return BoundednessVerdict(
            "UnboundedWitness", direction=dirs[i], weak_label=int(best_y[i]),
            ts=ts[last], values=tail[i], min_gap=float(gaps.min()))
    return BoundednessVerdict("BoundedLikely", min_gap=float(gaps.min()))
