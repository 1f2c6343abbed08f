"""Datasets for weak-label training.

Synthetic data are isotropic Gaussian classes whose true posterior is known
in closed form, which makes posterior-recovery and Bayes-accuracy checks
possible. MNIST is read from the raw IDX files when they are available.
"""

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import softmax

from ..errors import DimensionError
from ..weaklabels import TransitionMatrix, sample_weak_labels

MNIST_ENV = "WEAKPROPER_MNIST"


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    true_labels: np.ndarray
    weak_labels: np.ndarray
    n_classes: int

    def __len__(self):
        return self.features.shape[0]

    def subset(self, idx):
        return type(self)(**{**self._fields(), "features": self.features[idx],
                             "true_labels": self.true_labels[idx],
                             "weak_labels": self.weak_labels[idx]})

    def _fields(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class SyntheticDataset(Dataset):
    means: np.ndarray = None
    scale: float = 1.0
    priors: np.ndarray = None
    seed: int = 0

    def posterior(self, x):
        return analytic_posterior(self, x)


def class_means(K, d, separation):
    """Fixed mean layout: standard basis vectors if ``d >= K``, else a regular polygon."""
    if d >= K:
        m = np.eye(K, d)
    elif d >= 2:
        ang = 2 * np.pi * np.arange(K) / K
        m = np.zeros((K, d))
        m[:, 0] = np.cos(ang)
        m[:, 1] = np.sin(ang)
    elif K == 2:
        m = np.array([[-1.0], [1.0]])
    else:
        raise DimensionError("one-dimensional features support only two classes")
    return separation * m


def gen_gaussian(K, d, n, separation, T: TransitionMatrix, seed=0, scale=1.0):
    """Class-balanced Gaussian blobs with weak labels drawn column-wise from ``T``."""
    if K < 2:
        raise ValueError("need at least two classes")
    if T.n_true != K:
        raise DimensionError(f"transition matrix has {T.n_true} true labels, expected {K}")
    rng = np.random.default_rng(seed)
    means = class_means(K, d, separation)
    z = rng.permutation(np.arange(n) % K)
    x = means[z] + scale * rng.standard_normal((n, d))
    y = sample_weak_labels(T, z, rng)
    return SyntheticDataset(x, z, y, K, means=means, scale=float(scale),
                            priors=np.full(K, 1.0 / K), seed=seed)


def analytic_posterior(ds: SyntheticDataset, x):
    """Bayes posterior of the generating mixture at ``x`` (rows of a batch)."""
    x = np.asarray(x, dtype=float)
    sq = np.sum((x[..., None, :] - ds.means) ** 2, axis=-1)
    return softmax(-0.5 * sq / ds.scale ** 2 + np.log(ds.priors), axis=-1)


def bayes_accuracy(ds: SyntheticDataset):
    """Accuracy of the Bayes classifier on the samples of ``ds``."""
    post = analytic_posterior(ds, ds.features)
    return float(np.mean(post.argmax(axis=1) == ds.true_labels))


def split(ds, sizes, seed=None):
    """Split ``ds`` into consecutive parts of the given sizes (optionally shuffled first)."""
    if sum(sizes) > len(ds):
        raise ValueError("split sizes exceed the dataset size")
    idx = np.arange(len(ds))
    if seed is not None:
        idx = np.random.default_rng(seed).permutation(idx)
    out, start = [], 0
    for s in sizes:
        out.append(ds.subset(idx[start:start + s]))
        start += s
    return out


def synthetic_splits(K, d, sizes, separation, T, seed=0, scale=1.0):
    """Train/validation/test parts of one synthetic draw."""
    ds = gen_gaussian(K, d, sum(sizes), separation, T, seed=seed, scale=scale)
    return split(ds, sizes)


# -- MNIST ------------------------------------------------------------------

def load_idx(path):
    """Read an IDX file (optionally gzip-compressed) into an array."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype_code != 0x08:
        raise ValueError(f"{path} is not an unsigned-byte IDX file")
    dims = struct.unpack(">" + "I" * ndim, raw[4:4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: payload size does not match header")
    return data.reshape(dims)


def _find(root, stem):
    for name in (stem, stem + ".gz"):
        p = Path(root) / name
        if p.exists():
            return p
    raise FileNotFoundError(
        f"MNIST file {stem}[.gz] not found under {root}; set ${MNIST_ENV} or pass --data-root")


def mnist_root(root=None):
    root = root or os.environ.get(MNIST_ENV)
    if not root:
        raise FileNotFoundError(f"MNIST location unknown: set ${MNIST_ENV} or pass a data root")
    return Path(root)


def load_mnist(root=None):
    """``(x_train, z_train, x_test, z_test)`` with features flattened to 784 and scaled to [0, 1]."""
    root = mnist_root(root)
    out = []
    for kind in ("train", "t10k"):
        x = load_idx(_find(root, f"{kind}-images-idx3-ubyte"))
        z = load_idx(_find(root, f"{kind}-labels-idx1-ubyte"))
        out += [x.reshape(x.shape[0], -1).astype(float) / 255.0, z.astype(int)]
    return tuple(out)


def mnist_splits(T, seed=0, root=None, n_val=6000):
    """Training, validation and test sets with weak labels drawn from ``T`` on the training part."""
    x_tr, z_tr, x_te, z_te = load_mnist(root)
    rng = np.random.default_rng(seed)
    y_tr = sample_weak_labels(T, z_tr, rng)
    y_te = sample_weak_labels(T, z_te, rng)
    full = Dataset(x_tr, z_tr, y_tr, 10)
    train, val = split(full, (len(full) - n_val, n_val), seed=seed)
    return train, val, Dataset(x_te, z_te, y_te, 10)
