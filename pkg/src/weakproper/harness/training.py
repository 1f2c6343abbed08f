"""Mini-batch training from weak labels with early stopping."""

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import potentials as pot
from ..errors import DivergenceDetected
from ..losses import batch_risk, make_loss
from .models import SGD, build_model

DIVERGENCE_FLOOR = -1e9
LOG_COLUMNS = ("epoch", "train_objective", "val_acc", "test_acc", "lr", "ga_trigger_count")


@dataclass
class TrainConfig:
    loss: dict = field(default_factory=lambda: {"variant": "bc"})
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 256
    patience: int = 10
    lr_decay: float = 10.0
    max_lr_drops: int = 2
    max_epochs: int = 200
    seed: int = 0
    model: str = "linear"
    hidden: int = 512
    bias: bool = True
    project_logits: bool = True
    decoupled_weight_decay: bool = False
    ga_threshold: float = 0.0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be non-negative")
        if self.batch_size < 1 or self.patience < 1:
            raise ValueError("batch size and patience must be at least 1")
        if self.lr_decay <= 0 or self.max_lr_drops < 0 or self.max_epochs < 1:
            raise ValueError("invalid learning-rate schedule")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainRun:
    config: TrainConfig
    model: object
    loss: object
    weights: dict
    velocity: dict
    log: list
    best_epoch: int
    best_val_acc: float
    test_acc: float

    def log_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=LOG_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.log:
            w.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in LOG_COLUMNS})
        return buf.getvalue()

    def logits(self, X):
        saved = self.model.params
        self.model.params = self.weights
        try:
            V = self.model.forward(X)
        finally:
            self.model.params = saved
        return pot.center(V) if self.config.project_logits else V

    def predict_proba(self, X):
        return pot.decode(self.loss.potential, self.logits(X))


def objective_and_grad(model, loss, X, ys, project=True, ga=False, threshold=0.0):
    """Batch objective and parameter gradients (the loss part only, no weight decay)."""
    V = model.forward(X)
    if project:
        V = pot.center(V)
    report, G = batch_risk(loss, V, ys, ga=ga, threshold=threshold, return_grad=True)
    if project:
        # the centering map is symmetric, so its adjoint is itself
        G = pot.center(G)
    return report, model.backward(X, G)


def accuracy(model, X, z):
    V = model.forward(X)
    return float(np.mean(np.argmax(V, axis=1) == z))


def train(train_ds, val_ds, test_ds, cfg: TrainConfig, T):
    """Run the training loop; the returned weights are those of the best validation epoch."""
    if cfg.batch_size > len(train_ds):
        raise ValueError("batch size exceeds the training set size")
    loss = make_loss(cfg.loss, T)
    ga = bool(cfg.loss.get("ga", False))
    rng = np.random.default_rng(cfg.seed)
    model = build_model(cfg.model, train_ds.features.shape[1], T.n_true, rng,
                        hidden=cfg.hidden, bias=cfg.bias)
    opt = SGD(model.params, cfg.lr, cfg.momentum, cfg.weight_decay, cfg.decoupled_weight_decay)
    X, ys = train_ds.features, train_ds.weak_labels
    n = len(train_ds)
    log = []
    best = (-1.0, 0, float("nan"), None)
    wait = stalls = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        objs, ga_count = [], 0
        for step, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            report, grads = objective_and_grad(model, loss, X[idx], ys[idx],
                                               cfg.project_logits, ga, cfg.ga_threshold)
            if not np.isfinite(report.total) or report.total < DIVERGENCE_FLOOR:
                raise DivergenceDetected(
                    f"training objective {report.total:.3g} at epoch {epoch}, step {step}",
                    epoch=epoch, step=step, objective=report.total)
            objs.append(report.total)
            ga_count += int(report.ga_applied)
            opt.step(grads)
        val_acc = accuracy(model, val_ds.features, val_ds.true_labels)
        test_acc = accuracy(model, test_ds.features, test_ds.true_labels)
        log.append({"epoch": epoch, "train_objective": float(np.mean(objs)), "val_acc": val_acc,
                    "test_acc": test_acc, "lr": opt.lr, "ga_trigger_count": ga_count})
        if val_acc > best[0]:
            best = (val_acc, epoch, test_acc, {k: v.copy() for k, v in model.params.items()})
            wait = 0
            continue
        wait += 1
        if wait >= cfg.patience:
            wait = 0
            stalls += 1
            if stalls > cfg.max_lr_drops:
                break
            opt.lr /= cfg.lr_decay
    velocity = {k: (v.copy() if v is not None else None) for k, v in opt.velocity.items()}
    return TrainRun(cfg, model, loss, best[3], velocity, log, best[1], best[0], best[2])


def evaluate(run: TrainRun, ds):
    """Accuracy against true labels, plus posterior error when the data carry an analytic posterior."""
    q = run.predict_proba(ds.features)
    out = {"accuracy": float(np.mean(q.argmax(axis=1) == ds.true_labels)), "n": len(ds)}
    if getattr(ds, "means", None) is not None:
        from .data import analytic_posterior
        out["posterior_error"] = float(np.abs(q - analytic_posterior(ds, ds.features)).max(axis=1).mean())
    return out


def metrics_record(run: TrainRun, test_ds):
    ev = evaluate(run, test_ds)
    return {
        "best_epoch": run.best_epoch,
        "best_val_acc": run.best_val_acc,
        "test_acc": run.test_acc,
        "epochs": len(run.log),
        "accuracy": ev["accuracy"],
        "posterior_error": ev.get("posterior_error"),
        "seed": run.config.seed,
        "loss": run.config.loss,
        "lr": run.config.lr,
    }


def aggregate(values):
    """Mean and sample (n - 1) standard deviation."""
    a = np.asarray(values, dtype=float)
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return {"mean": float(a.mean()), "std": std, "n": int(a.size)}
