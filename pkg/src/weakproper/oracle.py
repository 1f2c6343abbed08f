"""Brute-force checks of properness and lower-boundedness.

Nothing in this module uses closed-form links or minimizers: properness is
probed by minimizing expected losses numerically from random starts, and
boundedness by walking along rays.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import potentials as pot
from .errors import Inconclusive, NonDifferentiable
from .losses import WeakLoss, lambda_f
from .potentials import hyperplane_basis

DIVERGENCE_FLOOR = -1e6
CLIP_TOL = 1e-7


@dataclass
class PropernessReport:
    target: np.ndarray
    recovered: np.ndarray
    deviation: float
    converged: bool
    restarts: int
    diverged: bool = False
    objective: float = float("nan")
    grad_norm: float = float("nan")
    unique: bool = True

    def to_dict(self):
        return {
            "target": [float(x) for x in self.target],
            "recovered": [float(x) for x in self.recovered],
            "deviation": float(self.deviation),
            "converged": bool(self.converged),
            "restarts": int(self.restarts),
            "diverged": bool(self.diverged),
            "objective": float(self.objective),
            "grad_norm": float(self.grad_norm),
            "unique": bool(self.unique),
        }


@dataclass
class _Run:
    v: np.ndarray
    fun: float
    grad_norm: float
    converged: bool
    diverged: bool


class _Diverged(Exception):
    def __init__(self, v, fun):
        self.v, self.fun = v, fun


def _minimize_on_hyperplane(fun_grad, K, v0, tol, max_iter):
    """BFGS in an orthonormal basis of the zero-sum hyperplane."""
    Q = hyperplane_basis(K)

    def f(u):
        v = Q @ u
        val, g = fun_grad(v)
        if not np.isfinite(val) or val < DIVERGENCE_FLOOR:
            raise _Diverged(v, val)
        return val, Q.T @ g

    try:
        res = minimize(f, Q.T @ v0, jac=True, method="BFGS",
                       options={"gtol": tol, "maxiter": max_iter})
    except _Diverged as exc:
        return _Run(exc.v, exc.fun, float("nan"), False, True)
    except NonDifferentiable:
        return _Run(v0, float("nan"), float("nan"), False, False)
    v = Q @ res.x
    _, g = fun_grad(v)
    gn = float(np.linalg.norm(Q.T @ g))
    return _Run(v, float(res.fun), gn, gn < tol, False)


def _restarts(K, n, rng):
    return [pot.center(2.0 * rng.standard_normal(K)) for _ in range(n)]


def verify_t_proper(loss: WeakLoss, T, p, tol=1e-8, restarts=8, seed=0, max_iter=2000):
    """Minimize ``q -> E_{y ~ T p}[l_W(q, y)]`` in logit space and compare the minimizer with ``p``.

    Raises :class:`Inconclusive` when no restart converges and none diverged.
    """
    p = np.asarray(p, dtype=float)
    w = T.push(p)
    K = loss.n_classes
    rng = np.random.default_rng(seed)
    runs = []
    for v0 in _restarts(K, restarts, rng):
        run = _minimize_on_hyperplane(lambda v: loss.expected(v, w), K, v0, tol, max_iter)
        runs.append(run)
        if run.diverged:
            break

    def report_for(run, converged):
        try:
            q = pot.decode(loss.potential, run.v)
        except NonDifferentiable:
            q = np.full(K, np.nan)
        dev = float(np.abs(q - p).max()) if np.all(np.isfinite(q)) else float("inf")
        good = [r for r in runs if r.converged]
        unique = len(good) < 2 or max(np.abs(r.v - run.v).max() for r in good) < 1e-4
        return PropernessReport(p, q, dev, converged, len(runs), run.diverged,
                                run.fun, run.grad_norm, unique)

    div = [r for r in runs if r.diverged]
    if div:
        return report_for(div[0], False)
    good = [r for r in runs if r.converged]
    if good:
        return report_for(min(good, key=lambda r: r.fun), True)
    finite = [r for r in runs if np.isfinite(r.fun)]
    best = report_for(min(finite, key=lambda r: r.fun), False) if finite else None
    raise Inconclusive("no restart converged", report=best)


def _newton_polish(fun_grad, F, v, steps=50):
    """Damped Newton on the hyperplane; BFGS stalls where the curvature is tiny."""
    Q = hyperplane_basis(F.n_classes)
    val, g = fun_grad(v)
    for _ in range(steps):
        gq = Q.T @ g
        if np.linalg.norm(gq) == 0:
            break
        H = Q.T @ F.hessian(v) @ Q
        d = Q @ np.linalg.lstsq(H, -gq, rcond=None)[0]
        if not np.all(np.isfinite(d)) or d @ g >= 0:
            d = -Q @ gq
        t = 1.0
        while t > 1e-12:
            nv = v + t * d
            nval, ng = fun_grad(nv)
            if nval <= val:
                break
            t /= 2
        else:
            break
        if nval == val and np.array_equal(nv, v):
            break
        v, val, g = nv, nval, ng
    return v, val


def check_min_in_domain(F, p, tol=1e-9, restarts=4, seed=0, full_output=False):
    """Minimize ``E_{z ~ p}[-v_z + F(v)]`` and test whether the minimizer decodes without clipping."""
    p = pot.clamp_probs(p)
    p = p / p.sum()
    K = F.n_classes
    rng = np.random.default_rng(seed)

    def fun_grad(v):
        return float(-p @ v + F.value(v)), -p + F.gradient(v)

    runs = [_minimize_on_hyperplane(fun_grad, K, v0, tol, 5000)
            for v0 in [np.zeros(K)] + _restarts(K, restarts - 1, rng)]
    finite = [r for r in runs if np.isfinite(r.fun)]
    if not finite:
        raise Inconclusive("minimization produced no finite objective")
    best = min(finite, key=lambda r: r.fun)
    v = best.v
    try:
        v, _ = _newton_polish(fun_grad, F, v)
    except (NotImplementedError, NonDifferentiable):
        pass
    _, clip = pot.decode(F, v, full_output=True)
    ok = bool(clip < CLIP_TOL)
    if full_output:
        return ok, v, float(clip)
    return ok


def properness_gap(loss, T, ps, qs):
    """``min`` over pairs of ``E_{y~Tp}[l_W(q, y)] - E_{y~Tp}[l_W(p, y)]``.

    ``ps`` and ``qs`` are arrays of simplex points; every ``q`` is compared
    against every ``p``.
    """
    ps = np.atleast_2d(ps)
    qs = np.atleast_2d(qs)
    W = T.push(ps)  # (P, |Y|)
    Lp = loss.losses_q(ps)  # (P, |Y|)
    Lq = loss.losses_q(qs)  # (Q, |Y|)
    own = np.sum(W * Lp, axis=1)
    cross = W @ Lq.T  # (P, Q)
    return float((cross - own[:, None]).min())


# -- landscapes and rays ----------------------------------------------------

def simplex_grid(resolution):
    r = int(resolution)
    pts = [(i, j, r - i - j) for i in range(r + 1) for j in range(r + 1 - i)]
    return np.array(pts, dtype=float) / r


@dataclass
class LandscapeGrid:
    resolution: int
    weak_label: int
    points: np.ndarray
    values: np.ndarray = field(repr=False)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p1", "p2", "p3", "loss"])
        for pt, val in zip(self.points, self.values):
            w.writerow([repr(float(x)) for x in pt] + [repr(float(val))])
        return buf.getvalue()


def landscape(loss: WeakLoss, y, resolution=200):
    """``l_W(p, y)`` on the barycentric grid ``(i, j, r - i - j) / r`` of the 3-class simplex."""
    if loss.n_classes != 3:
        raise ValueError("landscapes are defined for three classes only")
    pts = simplex_grid(resolution)
    if isinstance(loss.potential, pot.LogSumExp) or loss.variant == "fc":
        vals = loss.losses_q(pts)[:, y]
    else:
        vals = np.array([loss.losses_q(pt)[y] for pt in pts])
    return LandscapeGrid(int(resolution), int(y), pts, vals)


def ray_divergence(loss: WeakLoss, direction, ts, full_output=False):
    """Loss along ``v = t * direction`` for the weak label maximizing ``(R^T direction)_y``."""
    d = np.asarray(direction, dtype=float)
    if not np.any(d):
        raise ValueError("direction must be non-zero")
    if abs(d.sum()) > 1e-9 * np.abs(d).max():
        raise ValueError("direction must sum to zero")
    y = int(np.argmax(d @ loss.recon.matrix))
    ts = np.asarray(ts, dtype=float)
    vals = loss.logit_losses(ts[:, None] * d[None, :])[:, y]
    if full_output:
        return vals, y
    return vals


def expected_dual_loss(F, p, v):
    """``E_{z~p}[lambda_F(v, z)]`` by explicit summation."""
    return float(sum(pz * lambda_f(F, v, z) for z, pz in enumerate(p)))
