"""Label-corruption models.

A :class:`TransitionMatrix` stores ``T[y, z] = p(y | z)`` with rows indexed
by weak labels and columns by true labels. Weak labels are opaque string
tags; families whose weak labels are candidate sets (partial labels, PU,
complementary labels) also carry the sets so that
:func:`ambiguity_degree` can read them.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import matrixcore
from .errors import DimensionError, NotReconstructible

COLUMN_SUM_TOL = 1e-12
IDENTITY_TOL = 1e-9


def _class_labels(n):
    return tuple(str(i + 1) for i in range(n))


def _bits(members, labels):
    return "".join("1" if z in members else "0" for z in labels)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    true_labels: tuple
    weak_labels: tuple
    matrix: np.ndarray
    candidate_sets: tuple = None

    def __post_init__(self):
        m = matrixcore.as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "true_labels", tuple(self.true_labels))
        object.__setattr__(self, "weak_labels", tuple(self.weak_labels))
        if m.shape != (len(self.weak_labels), len(self.true_labels)):
            raise DimensionError(
                f"matrix shape {m.shape} does not match "
                f"{len(self.weak_labels)} weak x {len(self.true_labels)} true labels")
        if len(self.weak_labels) < 1:
            raise DimensionError("at least one weak label is required")
        if len(set(self.weak_labels)) != len(self.weak_labels):
            raise ValueError("weak labels must be distinct")
        if np.any(m < 0.0) or np.any(m > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        col_err = np.abs(m.sum(axis=0) - 1.0).max()
        if col_err > COLUMN_SUM_TOL:
            raise ValueError(f"columns must sum to 1 (max deviation {col_err:.3g})")
        if self.candidate_sets is not None:
            sets = tuple(frozenset(s) for s in self.candidate_sets)
            if len(sets) != len(self.weak_labels):
                raise DimensionError("one candidate set per weak label is required")
            object.__setattr__(self, "candidate_sets", sets)

    @property
    def n_true(self):
        return len(self.true_labels)

    @property
    def n_weak(self):
        return len(self.weak_labels)

    def index(self, y):
        """Row index of weak label ``y`` (a tag or an integer index)."""
        if isinstance(y, (int, np.integer)):
            if not 0 <= y < self.n_weak:
                raise KeyError(f"weak label index {y} out of range")
            return int(y)
        try:
            return self.weak_labels.index(y)
        except ValueError:
            raise KeyError(f"unknown weak label {y!r}") from None

    def push(self, p):
        """Weak-label distribution ``T p`` for true-label distributions ``p`` (last axis)."""
        return np.asarray(p, dtype=float) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class ReconstructionMatrix:
    matrix: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "matrix", matrixcore.as_matrix(self.matrix))

    @property
    def n_true(self):
        return self.matrix.shape[0]

    @property
    def n_weak(self):
        return self.matrix.shape[1]

    def identity_error(self, T):
        """``max |R T - I|`` for the transition matrix ``T``."""
        prod = matrixcore.multiply(self.matrix, T.matrix)
        return float(np.abs(prod - np.eye(T.n_true)).max())

    def column_sum_error(self):
        return float(np.abs(self.matrix.sum(axis=0) - 1.0).max())

    def check(self, T, tol=IDENTITY_TOL):
        if self.matrix.shape != (T.n_true, T.n_weak):
            raise DimensionError(
                f"reconstruction shape {self.matrix.shape} incompatible with T {T.matrix.shape}")
        err = self.identity_error(T)
        if err > tol:
            raise ValueError(f"R T deviates from the identity by {err:.3g}")
        if self.normalized and self.column_sum_error() > tol:
            raise ValueError("normalized reconstruction must have unit column sums")
        return self


@dataclass(frozen=True, eq=False)
class CokernelBasis:
    """Orthonormal basis of ``ker T^T``, one basis vector per row of ``vectors``."""

    vectors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __len__(self):
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    @property
    def columns(self):
        return self.vectors.T


# -- families ---------------------------------------------------------------

def symmetric_noise(K, p):
    """Uniform label noise: keep the label with probability ``1 - p``."""
    if K < 2:
        raise ValueError("K must be at least 2")
    if not 0.0 <= p < 1.0:
        raise ValueError("noise rate must lie in [0, 1)")
    off = p / (K - 1)
    m = np.full((K, K), off)
    np.fill_diagonal(m, 1.0 - p)
    labels = _class_labels(K)
    return TransitionMatrix(labels, labels, m)


def symmetric_noise_reconstruction(K, p):
    """Closed-form inverse of :func:`symmetric_noise`.

    ``T = a I + q J`` with ``q = p / (K - 1)`` and ``a = 1 - K q``, so
    ``T^{-1} = (I - q J) / a`` since ``a + K q = 1``.
    """
    q = p / (K - 1)
    a = 1.0 - K * q
    if abs(a) < 1e-12:
        raise NotReconstructible(f"symmetric noise with p = {p} is not invertible for K = {K}")
    return ReconstructionMatrix((np.eye(K) - q * np.ones((K, K))) / a, normalized=True)


def partial_candidate_sets(labels=("1", "2", "3")):
    """All non-empty candidate sets, singletons first, then pairs, then larger."""
    sets = []
    for size in range(1, len(labels) + 1):
        sets.extend(frozenset(c) for c in combinations(labels, size))
    return sets


def partial_label_3class(p):
    """Three classes; each wrong label joins the candidate set independently with probability ``p``."""
    if not 0.0 <= p < 1.0:
        raise ValueError("spurious-label rate must lie in [0, 1)")
    labels = _class_labels(3)
    sets = partial_candidate_sets(labels)
    m = np.zeros((len(sets), 3))
    for i, s in enumerate(sets):
        for j, z in enumerate(labels):
            if z not in s:
                continue
            n_extra = len(s) - 1
            m[i, j] = p ** n_extra * (1.0 - p) ** (2 - n_extra)
    return TransitionMatrix(labels, tuple(_bits(s, labels) for s in sets), m, tuple(sets))


def partial_label_R_example(p):
    """A hand-built unit-column-sum left inverse of :func:`partial_label_3class`."""
    if p >= 1.0:
        raise NotReconstructible("partial labels with p = 1 carry no information")
    a = (3.0 - 2.0 * p) / (3.0 * (1.0 - p))
    b = -(3.0 - p) / (3.0 * (1.0 - p))
    c = 1.0 / 3.0
    m = np.array([
        [1, 0, 0, a, a, b, c],
        [0, 1, 0, a, b, a, c],
        [0, 0, 1, b, a, a, c],
    ], dtype=float)
    return ReconstructionMatrix(m, normalized=True)


def complementary(K):
    """Complementary labels: the observed label names one class the instance is not."""
    if K < 2:
        raise ValueError("K must be at least 2")
    labels = _class_labels(K)
    m = (np.ones((K, K)) - np.eye(K)) / (K - 1)
    weak = tuple("~" + z for z in labels)
    sets = tuple(frozenset(labels) - {z} for z in labels)
    return TransitionMatrix(labels, weak, m, sets)


def pu_binary(r):
    """Positive-unlabeled data seen as partial labels ``{1}`` and ``{1, 2}``."""
    if not 0.0 < r <= 1.0:
        raise ValueError("labeled-positive rate must lie in (0, 1]")
    labels = _class_labels(2)
    sets = (frozenset({"1"}), frozenset({"1", "2"}))
    m = np.array([[r, 0.0], [1.0 - r, 1.0]])
    return TransitionMatrix(labels, ("10", "11"), m, sets)


def nonambiguous_example(extra=0):
    """Four-class pair-candidate model that is non-ambiguous yet not left-invertible.

    With ``extra > 0`` the matrix is extended block-diagonally by an
    ``extra x extra`` identity acting on further singleton labels.
    """
    K = 4 + extra
    labels = _class_labels(K)
    pairs = [("1", "3"), ("1", "4"), ("2", "3"), ("2", "4")]
    sets = [frozenset(s) for s in pairs] + [frozenset({z}) for z in labels[4:]]
    m = np.zeros((len(sets), K))
    m[:4, :4] = [[0.5, 0, 0.5, 0], [0.5, 0, 0, 0.5], [0, 0.5, 0.5, 0], [0, 0.5, 0, 0.5]]
    m[4:, 4:] = np.eye(extra)
    return TransitionMatrix(labels, tuple(_bits(s, labels) for s in sets), m, tuple(sets))


def one_vs_rest(K, target):
    """An annotator who only tells class ``target`` (1-based) apart from the rest."""
    labels = _class_labels(K)
    t = str(target)
    rest = frozenset(labels) - {t}
    m = np.zeros((2, K))
    idx = labels.index(t)
    m[0, idx] = 1.0
    m[1, :] = 1.0
    m[1, idx] = 0.0
    return TransitionMatrix(labels, (t, "not" + t), m, (frozenset({t}), rest))


def compose_multisource(sources, alphas):
    """Stack sources ``alpha_d T^(d)`` into one transition matrix.

    Weak labels are tagged ``"s<d>:<tag>"`` with ``d`` counted from 1.
    """
    sources = list(sources)
    alphas = np.asarray(alphas, dtype=float)
    if not sources or len(sources) != len(alphas):
        raise ValueError("need one positive weight per source")
    if np.any(alphas <= 0):
        raise ValueError("weights must be positive")
    if abs(alphas.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    labels = sources[0].true_labels
    for s in sources[1:]:
        if s.true_labels != labels:
            raise ValueError("all sources must share the same true labels")
    weak, blocks, sets = [], [], []
    have_sets = all(s.candidate_sets is not None for s in sources)
    for d, (s, a) in enumerate(zip(sources, alphas), start=1):
        weak.extend(f"s{d}:{y}" for y in s.weak_labels)
        blocks.append(a * s.matrix)
        if have_sets:
            sets.extend(s.candidate_sets)
    return TransitionMatrix(labels, tuple(weak), np.vstack(blocks),
                            tuple(sets) if have_sets else None)


# -- inversion --------------------------------------------------------------

def is_reconstructible(T):
    return T.n_weak >= T.n_true and matrixcore.rank(T.matrix) == T.n_true


def cokernel(T):
    vecs = matrixcore.kernel_basis(T.matrix.T)
    if not vecs:
        return CokernelBasis(np.zeros((0, T.n_weak)))
    return CokernelBasis(np.vstack(vecs))


def reconstruction(T, normalize=True):
    """A left inverse of ``T``.

    Without normalization this is the Moore-Penrose left inverse ``R0``.
    With normalization the cokernel correction ``R0 + (1/|Z|) 1 w^T N^T`` is
    added, where the columns of ``N`` span ``ker T^T`` and ``N w`` equals
    ``1_Y - R0^T 1_Z``; the result still satisfies ``R T = I`` and has unit
    column sums.
    """
    if not is_reconstructible(T):
        raise NotReconstructible("transition matrix has no left inverse")
    r0 = matrixcore.left_pseudo_inverse(T.matrix)
    if not normalize:
        return ReconstructionMatrix(r0, normalized=False)
    target = np.ones(T.n_weak) - r0.sum(axis=0)
    basis = cokernel(T)
    if len(basis) == 0:
        # square T: the inverse is unique and already has unit column sums
        return ReconstructionMatrix(r0, normalized=True)
    n = basis.columns
    w = n.T @ target  # orthonormal columns: least squares reduces to projection
    r = r0 + np.outer(np.ones(T.n_true), n @ w) / T.n_true
    return ReconstructionMatrix(r, normalized=True)


def ambiguity_degree(T):
    """Largest probability that a given wrong label shows up next to the true one."""
    if T.candidate_sets is None:
        raise ValueError("weak labels carry no candidate-set structure")
    eps = 0.0
    for j, z in enumerate(T.true_labels):
        for z2 in T.true_labels:
            if z2 == z:
                continue
            mask = np.array([z2 in s for s in T.candidate_sets])
            eps = max(eps, float(T.matrix[mask, j].sum()))
    return eps


def sample_weak_labels(T, true_idx, rng):
    """Draw one weak-label index per true-label index from the columns of ``T``."""
    true_idx = np.asarray(true_idx, dtype=int)
    cdf = np.cumsum(T.matrix, axis=0)
    cdf[-1, :] = 1.0
    u = rng.random(true_idx.shape[0])
    return (u[:, None] > cdf[:, true_idx].T).sum(axis=1)
