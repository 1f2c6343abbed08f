"""Weak-label losses built from a potential and a reconstruction matrix.

Three constructions are supported:

* ``dual``: ``-(R^T v)_y + F(v)`` (plus an optional cokernel-valued term);
* ``bc``: backward correction ``sum_z R[z, y] * l(q, z)`` of a supervised loss;
* ``fc``: forward correction ``l_Y(T q, y)`` of a weak-posterior loss.

Every loss can be evaluated on class probabilities ``q`` or on logits
``v``; in the latter case ``q`` is obtained with
:func:`weakproper.potentials.decode`.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import potentials as pot
from .potentials import GLS, LogSumExp
from .weaklabels import ReconstructionMatrix, TransitionMatrix, reconstruction

_FD_STEP = 1e-6


def _r(R):
    return np.asarray(getattr(R, "matrix", R), dtype=float)


def cross_entropy(q, z):
    """``-log q_z`` with the usual probability clamp."""
    q = pot.clamp_probs(q)
    return -np.log(np.take(q, z, axis=-1))


def lambda_f(F, v, z):
    v = np.asarray(v, dtype=float)
    return -v[..., z] + F.value(v)


def lambda_fr(F, R, v, y):
    Rm = _r(R)
    if not 0 <= y < Rm.shape[1]:
        raise KeyError(f"unknown weak label index {y}")
    v = np.asarray(v, dtype=float)
    return -(v @ Rm)[..., y] + F.value(v)


def bc_ce_gls(v, y, R, k=0.0, alpha=2.0):
    """Backward-corrected cross entropy with the gLS penalty, as trained in practice.

    ``k = 0`` gives the plain backward-corrected cross entropy (for an ``R``
    with unit column sums).
    """
    v = np.asarray(v, dtype=float)
    out = -(v @ _r(R))[..., y] + LogSumExp(v.shape[-1]).value(v)
    if k:
        out = out + 0.5 * k * np.sum(np.abs(v) ** alpha, axis=-1)
    return out


@dataclass(frozen=True, eq=False)
class WeakLoss:
    potential: pot.ConvexPotential
    recon: ReconstructionMatrix
    variant: str = "dual"
    transition: Optional[TransitionMatrix] = None
    base: Optional[Callable] = None
    delta: Optional[Callable] = None

    def __post_init__(self):
        if self.variant not in ("dual", "bc", "fc"):
            raise ValueError(f"unknown loss variant {self.variant!r}")
        if self.recon.n_true != self.potential.n_classes:
            raise ValueError("reconstruction matrix and potential disagree on the class count")
        if self.variant == "fc" and self.transition is None:
            raise ValueError("forward correction needs the transition matrix")
        if self.transition is not None and self.transition.matrix.shape != self.recon.matrix.T.shape:
            raise ValueError("transition and reconstruction shapes are incompatible")

    @property
    def n_classes(self):
        return self.recon.n_true

    @property
    def n_weak(self):
        return self.recon.n_weak

    # -- evaluation ---------------------------------------------------------

    def _delta(self, q):
        if self.delta is None:
            return 0.0
        return np.asarray(self.delta(q), dtype=float)

    def losses_q(self, q):
        """``l_W(q, y)`` for every weak label ``y`` (last axis)."""
        q = np.asarray(q, dtype=float)
        R = self.recon.matrix
        if self.variant == "fc":
            return self._weak_base(self.transition.push(q))
        if self.variant == "bc" and self.base is not None:
            K = self.n_classes
            per_class = np.stack([self.base(q, z) for z in range(K)], axis=-1)
            return per_class @ R + self._delta(q)
        v = pot.link(self.potential, q)
        return self._dual_or_bc(v) + self._delta(q)

    def __call__(self, q, y):
        return self.losses_q(q)[..., y]

    def logit_losses(self, v):
        """Loss for every weak label at logits ``v`` (last axis holds classes)."""
        v = np.asarray(v, dtype=float)
        if self.variant == "fc":
            q = pot.decode(self.potential, v)
            return self._weak_base(self.transition.push(q))
        if self.variant == "bc" and self.base is not None:
            q = pot.decode(self.potential, v)
            return self.losses_q(q)
        out = self._dual_or_bc(v)
        if self.delta is not None:
            out = out + self._delta(pot.decode(self.potential, v))
        return out

    def _dual_or_bc(self, v):
        R = self.recon.matrix
        f = np.asarray(self.potential.value(v))[..., None]
        if self.variant == "dual":
            return -(v @ R) + f
        return -(v @ R) + f * R.sum(axis=0)

    def _weak_base(self, u):
        if self.base is not None:
            return np.stack([self.base(u, y) for y in range(self.n_weak)], axis=-1)
        return -np.log(pot.clamp_probs(u))

    def expected(self, v, w):
        """Value and gradient in ``v`` of ``sum_y w_y * l(v, y)``."""
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        val = float(self.logit_losses(v) @ w)
        R = self.recon.matrix
        if self.delta is None and self.base is None and self.variant in ("dual", "bc"):
            scale = w.sum() if self.variant == "dual" else R.sum(axis=0) @ w
            return val, -(R @ w) + self.potential.gradient(v) * scale
        if (self.variant == "fc" and self.base is None
                and isinstance(self.potential, LogSumExp)):
            s = self.potential.gradient(v)
            u = pot.clamp_probs(self.transition.push(s))
            g = self.transition.matrix.T @ (w / u)
            return val, -(s * g - s * (s @ g))
        grad = np.zeros_like(v)
        for i in range(v.shape[0]):
            e = np.zeros_like(v)
            e[i] = _FD_STEP
            grad[i] = (self.logit_losses(v + e) @ w - self.logit_losses(v - e) @ w) / (2 * _FD_STEP)
        return val, grad


# -- constructors -----------------------------------------------------------

def dual_loss(F, R, delta=None):
    return WeakLoss(F, R, "dual", delta=delta)


def backward_correct(base, R, potential=None):
    """Backward correction of a supervised loss ``base(q, z)``.

    ``base=None`` or ``"ce"`` selects the cross entropy of the potential's own
    dual form, which is evaluated in closed form in logit space.
    """
    if potential is None:
        potential = LogSumExp(R.n_true)
    if isinstance(base, str):
        if base != "ce":
            raise ValueError(f"unknown supervised loss {base!r}")
        base = None
    return WeakLoss(potential, R, "bc", base=base)


def forward_correct(weak_base, T, potential=None, R=None):
    """Forward correction ``weak_base(T q, y)``; ``weak_base=None`` or ``"ce"`` is cross entropy."""
    if potential is None:
        potential = LogSumExp(T.n_true)
    if isinstance(weak_base, str):
        if weak_base != "ce":
            raise ValueError(f"unknown weak-posterior loss {weak_base!r}")
        weak_base = None
    if R is None:
        R = reconstruction(T, normalize=True)
    return WeakLoss(potential, R, "fc", transition=T, base=weak_base)


def make_loss(spec, T):
    """Build a :class:`WeakLoss` from a loss-spec mapping (see the JSON schema)."""
    variant = spec.get("variant", "bc")
    K = T.n_true
    pspec = dict(spec.get("potential") or {"kind": "lse"})
    pspec.setdefault("classes", K)
    if "k" in spec and spec["k"]:
        pspec = {"kind": "gls", "classes": K, "k": spec["k"], "alpha": spec.get("alpha", 2.0)}
    F = pot.potential_from_dict(pspec)
    R = reconstruction(T, normalize=spec.get("normalize_R", True))
    if variant == "fc":
        return forward_correct(None, T, potential=F, R=R)
    if variant == "bc":
        return WeakLoss(F, R, "bc", transition=T)
    if variant == "dual":
        return WeakLoss(F, R, "dual", transition=T)
    raise ValueError(f"unknown loss variant {variant!r}")


# -- empirical risk ---------------------------------------------------------

@dataclass
class BatchRiskReport:
    """Empirical batch risk split into per-true-class partial risks.

    ``extra`` holds the part that does not decompose over classes (the gLS
    penalty, and for forward correction the whole risk). When ``ga_applied``
    is false, ``total == partial_by_class.sum() + extra``.
    """

    total: float
    partial_by_class: np.ndarray
    ga_applied: bool
    extra: float = 0.0


def ga_objective(partials, extra=0.0, threshold=0.0):
    """Training objective after the gradient-ascent adjustment.

    Returns ``(objective, applied, coef)`` where ``coef`` holds the weight of
    each partial risk in the objective.
    """
    partials = np.asarray(partials, dtype=float)
    if partials.min() < threshold:
        coef = np.where(partials < threshold, -1.0, 0.0)
        return float(coef @ partials + extra), True, coef
    coef = np.ones_like(partials)
    return float(partials.sum() + extra), False, coef


def _split_potential(F):
    if isinstance(F, GLS):
        return F.base, F
    return F, None


def batch_risk(loss, logits, ys, ga=False, threshold=0.0, return_grad=False):
    """Empirical risk of a batch, with the optional gradient-ascent adjustment.

    For the ``dual`` and ``bc`` variants the risk is rewritten as
    ``sum_z partial_z + extra`` where
    ``partial_z = mean_i R[z, y_i] * (-v_iz + F0(v_i))`` and ``F0`` is the
    potential without its gLS penalty. With ``ga=True`` and some partial
    below ``threshold``, the training objective becomes
    ``-sum(partials below threshold) + extra`` and ``ga_applied`` is set;
    minimizing it ascends the offending partial risks.

    With ``return_grad=True`` the gradient of the returned objective with
    respect to ``logits`` is returned as well.
    """
    V = np.atleast_2d(np.asarray(logits, dtype=float))
    ys = np.asarray(ys, dtype=int).reshape(-1)
    N = V.shape[0]
    if N == 0 or ys.shape[0] != N:
        raise ValueError("batch must be non-empty with one weak label per row")
    K = loss.n_classes
    if loss.variant == "fc" or loss.base is not None or loss.delta is not None:
        if ga:
            raise ValueError("gradient ascent needs a class-decomposable (dual or bc) loss")
        vals = loss.logit_losses(V)[np.arange(N), ys]
        total = float(vals.mean())
        report = BatchRiskReport(total, np.zeros(K), False, total)
        if not return_grad:
            return report
        G = np.zeros_like(V)
        for i in range(N):
            w = np.zeros(loss.n_weak)
            w[ys[i]] = 1.0 / N
            G[i] = loss.expected(V[i], w)[1]
        return report, G

    R = loss.recon.matrix
    F0, gls = _split_potential(loss.potential)
    Ry = R[:, ys].T  # (N, K): R[z, y_i]
    colsum = Ry.sum(axis=1)
    f0 = np.asarray(F0.value(V))
    lam = -V + f0[:, None]  # lambda_F0(v_i, z)
    partials = (Ry * lam).mean(axis=0)
    extra_i = np.zeros(N)
    if loss.variant == "dual":
        extra_i = extra_i + f0 * (1.0 - colsum)
    if gls is not None:
        pen = gls.penalty(V)
        extra_i = extra_i + (pen if loss.variant == "dual" else pen * colsum)
    extra = float(extra_i.mean())
    if ga:
        total, ga_applied, coef = ga_objective(partials, extra, threshold)
    else:
        total, ga_applied, coef = float(partials.sum() + extra), False, np.ones(K)
    report = BatchRiskReport(total, partials, ga_applied, extra)
    if not return_grad:
        return report
    g0 = F0.gradient(V)
    cR = Ry * coef[None, :]
    G = -cR + g0 * cR.sum(axis=1, keepdims=True)
    if loss.variant == "dual":
        G += g0 * (1.0 - colsum)[:, None]
    if gls is not None:
        pg = gls.penalty_gradient(V)
        G += pg if loss.variant == "dual" else pg * colsum[:, None]
    return report, G / N
