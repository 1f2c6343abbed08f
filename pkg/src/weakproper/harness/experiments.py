"""Config-driven experiments: a single training job, parameter sweeps and seed aggregation.

An experiment config is a mapping with three parts::

    {"transition": {"family": "complementary", "k": 3},
     "data": {"kind": "synthetic", "dims": 2, "n_train": 30000, "n_val": 3000,
              "n_test": 10000, "separation": 2.0},
     "train": {... TrainConfig fields ...}}

``data.kind`` may also be ``"mnist"`` with an optional ``root``.
"""

import copy
import itertools
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import weaklabels as wl
from .data import bayes_accuracy, mnist_splits, synthetic_splits
from .training import TrainConfig, aggregate, metrics_record, train

#: learning-rate grid exposed for sweeps
LR_GRID = (0.1, 0.01, 0.001, 0.0001)

DEFAULT_DATA = {"kind": "synthetic", "dims": 2, "n_train": 30000, "n_val": 3000,
                "n_test": 10000, "separation": 2.0, "scale": 1.0}


def transition_from_spec(spec):
    """Build a built-in transition matrix from ``{"family": ..., <parameters>}``."""
    spec = dict(spec)
    fam = spec.pop("family")
    builders = {
        "symmetric": lambda k, p: wl.symmetric_noise(int(k), float(p)),
        "partial": lambda p: wl.partial_label_3class(float(p)),
        "complementary": lambda k: wl.complementary(int(k)),
        "pu": lambda r: wl.pu_binary(float(r)),
        "nonambiguous": lambda extra=0: wl.nonambiguous_example(int(extra)),
        "one_vs_rest": lambda k, target: wl.one_vs_rest(int(k), int(target)),
        "identity": lambda k: wl.symmetric_noise(int(k), 0.0),
    }
    if fam not in builders:
        raise ValueError(f"unknown family {fam!r}; choose from {sorted(builders)}")
    try:
        return builders[fam](**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for family {fam!r}: {exc}") from None


def build_data(data_spec, T, seed):
    d = {**DEFAULT_DATA, **(data_spec or {})}
    if d["kind"] == "synthetic":
        sizes = (int(d["n_train"]), int(d["n_val"]), int(d["n_test"]))
        return synthetic_splits(T.n_true, int(d["dims"]), sizes, float(d["separation"]), T,
                                seed=seed, scale=float(d["scale"]))
    if d["kind"] == "mnist":
        return mnist_splits(T, seed=seed, root=d.get("root"))
    raise ValueError(f"unknown data kind {d['kind']!r}")


def run_experiment(config, seed=None):
    """Train once; returns ``(run, metrics)``.

    The data seed and the training seed are both taken from ``train.seed``
    (overridden by ``seed`` when given).
    """
    config = copy.deepcopy(config)
    tcfg = dict(config.get("train", {}))
    if seed is not None:
        tcfg["seed"] = int(seed)
    cfg = TrainConfig.from_dict(tcfg)
    T = transition_from_spec(config.get("transition", {"family": "complementary", "k": 3}))
    tr, va, te = build_data(config.get("data"), T, cfg.seed)
    run = train(tr, va, te, cfg, T)
    metrics = metrics_record(run, te)
    if getattr(te, "means", None) is not None:
        metrics["bayes_accuracy"] = bayes_accuracy(te)
    metrics["label"] = config.get("label") or loss_label(cfg.loss)
    return run, metrics


def loss_label(spec):
    name = spec.get("variant", "bc").upper()
    if spec.get("ga"):
        name += "+GA"
    if spec.get("k"):
        name += f"+gLS(k={spec['k']:g},alpha={spec.get('alpha', 2.0):g})"
    return name


def _set_dotted(cfg, key, value):
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def expand_grid(base, grid=None, seeds=(0,)):
    """One config per combination of ``grid`` values (dotted keys) and seed."""
    grid = grid or {}
    keys = sorted(grid)
    jobs = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        for s in seeds:
            cfg = copy.deepcopy(base)
            for k, v in zip(keys, combo):
                _set_dotted(cfg, k, v)
            _set_dotted(cfg, "train.seed", int(s))
            jobs.append(cfg)
    return jobs


def _job(cfg):
    run, metrics = run_experiment(cfg)
    return metrics, run.log_csv()


def run_sweep(jobs, n_jobs=1):
    """Run configs independently; results come back in job order."""
    if n_jobs <= 1:
        return [_job(c) for c in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(_job, jobs))


def report_table(records, key="test_acc"):
    """Group metric records by label and aggregate ``key`` across seeds.

    Accuracies are reported in percent.
    """
    groups = {}
    for r in records:
        groups.setdefault(r.get("label", "run"), []).append(100.0 * float(r[key]))
    rows = []
    for label in sorted(groups):
        agg = aggregate(groups[label])
        rows.append({"method": label, **agg,
                     "summary": f"{agg['mean']:.2f} ± {agg['std']:.2f}"})
    return rows


def select_by_validation(records, group_key):
    """Pick the group (e.g. a k value) with the highest mean validation accuracy."""
    groups = {}
    for r in records:
        groups.setdefault(group_key(r), []).append(r)
    best = max(groups, key=lambda g: np.mean([r["best_val_acc"] for r in groups[g]]))
    return best, groups[best]
