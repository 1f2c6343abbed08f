"""Linear and one-hidden-layer models with hand-written backpropagation."""

import numpy as np


class LinearModel:
    """``V = X W^T + b``."""

    def __init__(self, n_features, n_classes, bias=True, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        bound = 1.0 / np.sqrt(n_features)
        self.params = {"W": rng.uniform(-bound, bound, (n_classes, n_features))}
        if bias:
            self.params["b"] = rng.uniform(-bound, bound, n_classes)

    def forward(self, X):
        V = X @ self.params["W"].T
        if "b" in self.params:
            V = V + self.params["b"]
        return V

    def backward(self, X, G):
        """Parameter gradients given ``G = dL/dV``."""
        grads = {"W": G.T @ X}
        if "b" in self.params:
            grads["b"] = G.sum(axis=0)
        return grads


class MLP:
    """One hidden layer of rectified linear units."""

    def __init__(self, n_features, n_classes, hidden=512, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        b1 = 1.0 / np.sqrt(n_features)
        b2 = 1.0 / np.sqrt(hidden)
        self.params = {
            "W1": rng.uniform(-b1, b1, (hidden, n_features)),
            "b1": rng.uniform(-b1, b1, hidden),
            "W2": rng.uniform(-b2, b2, (n_classes, hidden)),
            "b2": rng.uniform(-b2, b2, n_classes),
        }
        self._cache = None

    def forward(self, X):
        pre = X @ self.params["W1"].T + self.params["b1"]
        H = np.maximum(pre, 0.0)
        self._cache = (X, pre, H)
        return H @ self.params["W2"].T + self.params["b2"]

    def backward(self, X, G):
        X_c, pre, H = self._cache
        if X_c is not X:
            self.forward(X)
            X_c, pre, H = self._cache
        dH = (G @ self.params["W2"]) * (pre > 0)
        return {
            "W2": G.T @ H,
            "b2": G.sum(axis=0),
            "W1": dH.T @ X,
            "b1": dH.sum(axis=0),
        }


def build_model(kind, n_features, n_classes, rng, hidden=512, bias=True):
    if kind == "linear":
        return LinearModel(n_features, n_classes, bias=bias, rng=rng)
    if kind == "mlp":
        return MLP(n_features, n_classes, hidden=hidden, rng=rng)
    raise ValueError(f"unknown model {kind!r}")


class SGD:
    """SGD with heavy-ball momentum and weight decay.

    By default weight decay is added to the gradient before the momentum
    update (the L2 form); ``decoupled=True`` shrinks the weights by
    ``1 - lr * weight_decay`` directly.
    """

    def __init__(self, params, lr, momentum=0.9, weight_decay=0.0, decoupled=False):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.decoupled = decoupled
        self.velocity = {k: None for k in params}

    def step(self, grads):
        for name, p in self.params.items():
            g = grads[name]
            if self.weight_decay and not self.decoupled:
                g = g + self.weight_decay * p
            buf = self.velocity[name]
            if self.momentum:
                buf = g.copy() if buf is None else self.momentum * buf + g
                self.velocity[name] = buf
            else:
                buf = g
            if self.weight_decay and self.decoupled:
                p *= 1.0 - self.lr * self.weight_decay
            p -= self.lr * buf
