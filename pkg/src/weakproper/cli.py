"""Command-line entry point.

Every subcommand writes its artifact to ``--out`` (stdout when omitted);
``train`` and ``sweep`` treat ``--out`` as a directory. Domain errors exit
with status 1 and a JSON error record on stdout, usage errors with status 2.
"""

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import losses, oracle, potentials, serialize
from . import weaklabels as wl
from .errors import Inconclusive, WeakProperError
from .harness import experiments
from .harness.data import gen_gaussian

FAMILY_PARAMS = ("k", "p", "r", "target", "extra")


class UsageError(Exception):
    pass


# -- argument helpers -------------------------------------------------------

def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_family(p, required=False):
    p.add_argument("--family", required=required,
                   help="built-in transition family (symmetric, partial, complementary, pu, "
                        "nonambiguous, one_vs_rest, identity)")
    p.add_argument("--transition", help="transition-matrix JSON file (instead of --family)")
    p.add_argument("--k", type=int, help="number of classes")
    p.add_argument("--p", type=float, help="noise or spurious-label rate")
    p.add_argument("--r", type=float, help="labeled-positive rate (pu)")
    p.add_argument("--target", type=int, help="target class (one_vs_rest)")
    p.add_argument("--extra", type=int, help="extra singleton classes (nonambiguous)")


def _add_potential(p):
    p.add_argument("--potential", default="lse",
                   help="lse, gls, or a potential JSON file")
    p.add_argument("--gls-k", type=float, default=0.0, help="gLS coefficient")
    p.add_argument("--alpha", type=float, default=2.0, help="gLS exponent")


def _add_recon(p):
    p.add_argument("--recon", help="partial_example, a family name, or a reconstruction JSON file")
    p.add_argument("--unnormalized", action="store_true",
                   help="use the plain pseudoinverse instead of the unit-column-sum left inverse")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _family_spec(args, family=None):
    spec = {"family": family or args.family}
    for name in FAMILY_PARAMS:
        val = getattr(args, name, None)
        if val is not None:
            spec[name] = val
    return spec


def _transition(args):
    if getattr(args, "transition", None):
        return serialize.transition_from_json(_load_json(args.transition))
    if not getattr(args, "family", None):
        raise UsageError("a transition family (--family) or file (--transition) is required")
    return experiments.transition_from_spec(_family_spec(args))


def _recon(args, T=None):
    name = getattr(args, "recon", None)
    if name and (name.endswith(".json") or os.path.exists(name)):
        return serialize.recon_from_json(_load_json(name))
    if name == "partial_example":
        if args.p is None:
            raise UsageError("--recon partial_example needs --p")
        return wl.partial_label_R_example(args.p)
    if name:
        T = experiments.transition_from_spec(_family_spec(args, name))
    if T is None:
        T = _transition(args)
    return wl.reconstruction(T, normalize=not args.unnormalized)


def _potential(args, K):
    if args.potential.endswith(".json") or os.path.exists(args.potential):
        return serialize.potential_from_json(_load_json(args.potential))
    if args.potential == "lse":
        return potentials.LogSumExp(K)
    if args.potential == "gls":
        return potentials.GLS(potentials.LogSumExp(K), args.gls_k, args.alpha)
    raise UsageError(f"unknown potential {args.potential!r}")


def _loss(args, T, R=None):
    if R is None:
        R = wl.reconstruction(T, normalize=not args.unnormalized)
    F = _potential(args, T.n_true)
    if args.loss == "fc":
        return losses.forward_correct(None, T, potential=F, R=R)
    return losses.WeakLoss(F, R, args.loss, transition=T)


def _write(args, text):
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _merge_config(args):
    """Fill unset options from the ``--config`` JSON (command-line values win)."""
    if not args.config or args.command in ("train", "sweep"):
        return
    for key, val in _load_json(args.config).items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) in (None, False):
            setattr(args, attr, val)


# -- subcommands ------------------------------------------------------------

def cmd_matrices(args):
    T = _transition(args)
    if args.emit == "T":
        return serialize.dumps(serialize.transition_to_json(T))
    if args.emit == "R":
        R = wl.reconstruction(T, normalize=not args.unnormalized)
        return serialize.dumps(serialize.recon_to_json(R))
    basis = wl.cokernel(T)
    return serialize.dumps({"vectors": [list(v) for v in basis], "dimension": len(basis)})


def cmd_certify(args):
    R = _recon(args)
    F = _potential(args, R.n_true)
    v = potentials.certify_boundedness(F, R, n_dirs=args.n_dirs, t_max=args.t_max, seed=args.seed)
    return serialize.dumps(v.to_dict())


def cmd_proper_check(args):
    T = _transition(args)
    R = _recon(args, T) if args.recon else None
    loss = _loss(args, T, R)
    p = np.asarray(args.point if args.point else np.full(T.n_true, 1.0 / T.n_true))
    if p.shape != (T.n_true,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise UsageError(f"--point must be a probability vector of length {T.n_true}")
    rep = oracle.verify_t_proper(loss, T, p, tol=args.tol, restarts=args.restarts, seed=args.seed)
    return serialize.dumps(rep.to_dict())


def cmd_landscape(args):
    T = _transition(args)
    R = _recon(args, T) if args.recon else None
    loss = _loss(args, T, R)
    tag = str(args.weak_label)
    # tags take precedence over row indices ("110" is a partial-label tag)
    y = T.index(tag if tag in T.weak_labels else int(tag))
    grid = oracle.landscape(loss, y, resolution=args.resolution)
    return grid.to_csv()


def cmd_ray(args):
    if args.family or args.transition:
        T = _transition(args)
        R = _recon(args, T) if args.recon else None
    else:
        # default setting: partial labels with the hand-built left inverse
        p = 0.1 if args.p is None else args.p
        T = wl.partial_label_3class(p)
        R = _recon(args, T) if args.recon else wl.partial_label_R_example(p)
    loss = _loss(args, T, R)
    vals, y = oracle.ray_divergence(loss, args.dir, args.ts, full_output=True)
    return _csv(["t", "loss"], zip(args.ts, vals))


def cmd_gen_data(args):
    T = _transition(args)
    ds = gen_gaussian(T.n_true, args.dims, args.n, args.separation, T, seed=args.seed)
    header = [f"x{i + 1}" for i in range(args.dims)] + ["true_label", "weak_label"]
    rows = ([*x, T.true_labels[z], T.weak_labels[y]]
            for x, z, y in zip(ds.features, ds.true_labels, ds.weak_labels))
    return _csv(header, rows)


def _experiment_config(args):
    cfg = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg.setdefault("train", {})["seed"] = args.seed
    if args.data_root:
        cfg.setdefault("data", {})["root"] = args.data_root
    return cfg


def _out_dir(args):
    if not args.out:
        raise UsageError(f"{args.command} needs --out DIR")
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_train(args):
    cfg = _experiment_config(args)
    out = _out_dir(args)
    run, metrics = experiments.run_experiment(cfg)
    (out / "config.json").write_text(serialize.dumps(cfg))
    (out / "epochs.csv").write_text(run.log_csv())
    (out / "metrics.json").write_text(serialize.dumps(metrics))
    return None


def cmd_sweep(args):
    cfg = _experiment_config(args)
    out = _out_dir(args)
    base = cfg.get("base", {})
    seeds = cfg.get("seeds", [args.seed if args.seed is not None else 0])
    jobs = experiments.expand_grid(base, cfg.get("grid"), seeds)
    results = experiments.run_sweep(jobs, n_jobs=args.threads)
    for i, (job, (metrics, log)) in enumerate(zip(jobs, results)):
        d = out / f"job{i:04d}"
        d.mkdir(exist_ok=True)
        (d / "config.json").write_text(serialize.dumps(job))
        (d / "epochs.csv").write_text(log)
        (d / "metrics.json").write_text(serialize.dumps(metrics))
    return None


def cmd_report(args):
    paths = []
    for item in args.inputs:
        p = Path(item)
        paths.extend(sorted(p.rglob("metrics.json")) if p.is_dir() else [p])
    if not paths:
        raise UsageError("no metric files found")
    records = [_load_json(p) for p in paths]
    rows = experiments.report_table(records, key=args.metric)
    return _csv(["method", "n", "mean", "std", "summary"],
                ([r["method"], r["n"], r["mean"], r["std"], r["summary"]] for r in rows))


# -- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values or an experiment config")
    common.add_argument("--out", help="output file (directory for train and sweep)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded, reproducible execution")
    common.add_argument("--threads", type=int, default=1, help="parallel jobs (sweep)")

    parser = argparse.ArgumentParser(prog="weakproper", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrices", parents=[common], help="emit a built-in transition matrix")
    _add_family(p)
    p.add_argument("--emit", choices=("T", "R", "cokernel"), default="T")
    p.add_argument("--unnormalized", action="store_true")
    p.set_defaults(func=cmd_matrices)

    p = sub.add_parser("certify", parents=[common], help="lower-boundedness verdict")
    _add_potential(p)
    _add_recon(p)
    _add_family(p)
    p.add_argument("--n-dirs", type=int, default=256)
    p.add_argument("--t-max", type=float, default=1e4)
    p.set_defaults(func=cmd_certify)

    for name, func, helptext in (("proper-check", cmd_proper_check, "numeric properness check"),
                                 ("landscape", cmd_landscape, "loss over the 3-class simplex"),
                                 ("ray", cmd_ray, "loss along a logit ray")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        _add_family(p)
        _add_potential(p)
        _add_recon(p)
        p.add_argument("--loss", choices=("bc", "fc", "dual"), default="bc")
        p.set_defaults(func=func)
        if name == "proper-check":
            p.add_argument("--point", type=_floats, help="class distribution p, comma-separated")
            p.add_argument("--tol", type=float, default=1e-8)
            p.add_argument("--restarts", type=int, default=8)
        elif name == "landscape":
            p.add_argument("--weak-label", default="0", help="weak-label tag or row index")
            p.add_argument("--resolution", type=int, default=200)
        else:
            p.add_argument("--dir", type=_floats, required=True, help="zero-sum direction")
            p.add_argument("--ts", type=_floats, default=[1.0, 10.0, 100.0])

    p = sub.add_parser("gen-data", parents=[common], help="synthetic Gaussian data as CSV")
    _add_family(p)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--separation", type=float, default=2.0)
    p.set_defaults(func=cmd_gen_data)

    for name, func in (("train", cmd_train), ("sweep", cmd_sweep)):
        p = sub.add_parser(name, parents=[common], help=f"{name} from an experiment config")
        p.add_argument("--data-root", help="directory holding the MNIST IDX files")
        p.set_defaults(func=func)

    p = sub.add_parser("report", parents=[common], help="mean and sample std over seeds")
    p.add_argument("inputs", nargs="+", help="metric JSON files or directories")
    p.add_argument("--metric", default="test_acc")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_config(args)
    if args.seed is None and args.command not in ("train", "sweep"):
        args.seed = 0
    if args.deterministic:
        args.threads = 1
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except Inconclusive as exc:
        rec = exc.to_record()
        if exc.report is not None:
            rec["report"] = exc.report.to_dict()
        sys.stdout.write(serialize.dumps(rec))
        return 1
    except WeakProperError as exc:
        sys.stdout.write(serialize.dumps(exc.to_record()))
        return 1
    except FileNotFoundError as exc:
        sys.stdout.write(serialize.dumps({"error": "DataUnavailable", "message": str(exc)}))
        return 1
    except (ValueError, KeyError) as exc:
        parser.error(str(exc))
    if text is not None:
        _write(args, text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
