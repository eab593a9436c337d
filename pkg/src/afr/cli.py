"""Command-line frontend.

Exit codes: 0 success, 2 bad usage or bad input data, 3 solver failure.
Every failure prints one line ``afr: error code=<CODE>: <message>`` on stderr.
Every run that gets past argument parsing writes a JSON report; wall-clock
timing is only included with ``--timing`` so that reports stay byte-identical
across identical runs.
"""
import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, data, metrics
from . import model as model_mod
from .basis import BasisConfig
from .errors import AFRError, ModelFormatError, SolverError, UndefinedMetricError
from .optimizer import SolverConfig
from .sweep import DEFAULT_LAMBDAS, DEFAULT_SIGMAS, best_row, run_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3


class CLIError(Exception):
    def __init__(self, code, message, status=EXIT_USAGE):
        super().__init__(message)
        self.code = code
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("E_USAGE", message)


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _float_list(text):
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load(path, **kw):
    if not os.path.isfile(path):
        raise CLIError("E_DATA", f"data file not found: {path}")
    return data.load_csv(path, **kw)


def _write_rows(path, header, rows, delimiter=","):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_report(path, report):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_fmt)
            fh.write("\n")


def _add_solver_flags(p):
    d = SolverConfig()
    p.add_argument("--lam", type=float, default=d.lam, help="regularization weight (default 5e-4)")
    p.add_argument("--sigma", type=float, default=d.sigma, help="C-loss scale")
    p.add_argument("--q", type=int, choices=(1, 2), default=d.q)
    p.add_argument("--eta", type=float, default=d.eta, help="ADMM penalty")
    p.add_argument("--eps", type=float, default=d.eps, help="stopping tolerance")
    p.add_argument("--outer-max-iter", type=int, default=d.outer_max_iter)
    p.add_argument("--inner-max-iter", type=int, default=d.inner_max_iter)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--warm-start", action="store_true", help="carry ADMM state across outer iterations")
    p.add_argument("--scaling", choices=("mean", "sum"), default=d.scaling)
    p.add_argument("--basis", choices=("bspline", "trig"), default="bspline")
    p.add_argument("--dim", type=int, default=8, help="basis functions per feature")
    p.add_argument("--order", type=int, default=4, help="spline order (4 = cubic)")


def _add_data_flags(p, label=True):
    p.add_argument("--data", required=True, help="delimited feature file with header")
    if label:
        p.add_argument("--label-column", default="label")
    p.add_argument("--id-column", default=None)


def _solver_config(args):
    return SolverConfig(lam=args.lam, sigma=args.sigma, q=args.q, eta=args.eta, eps=args.eps,
                        outer_max_iter=args.outer_max_iter, inner_max_iter=args.inner_max_iter,
                        seed=args.seed, warm_start=args.warm_start, scaling=args.scaling)


def _basis_config(args):
    return BasisConfig(family=args.basis, dim=args.dim, order=args.order)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

TRACE_HEADER = ["iteration", "objective", "objective_before", "penalized_risk",
                "primal_residual", "alpha_change", "inner_iterations", "inner_converged"]


def write_trace(path, trace):
    rows = [[r.iteration, r.objective, r.objective_before, r.penalized_risk,
             r.primal_residual, r.alpha_change, r.inner_iterations, int(r.inner_converged)]
            for r in trace.records]
    _write_rows(path, TRACE_HEADER, rows, delimiter="\t")


def cmd_train(args, report):
    basis, solver = _basis_config(args), _solver_config(args)
    ds = _load(args.data, label_column=args.label_column, id_column=args.id_column)
    if len(ds) == 0:
        raise CLIError("E_DATA", f"{args.data}: no training rows")
    report["config"] = {"basis": basis.to_dict(), "solver": solver.to_dict(), "data": args.data}
    trace_out = args.trace_out or args.model_out + ".trace.tsv"
    try:
        fitted, trace = model_mod.train(ds.feature_matrix(), basis, solver, ds.feature_names)
    except SolverError as exc:
        if exc.trace is not None and hasattr(exc.trace, "records"):
            write_trace(trace_out, exc.trace)
        raise
    model_mod.save(fitted, args.model_out)
    write_trace(trace_out, trace)
    train_acc = metrics.accuracy(model_mod.predict_labels(fitted, ds.features), ds.labels)
    report["metrics"] = {"train_accuracy": train_acc, "converged": trace.converged,
                         "outer_iterations": len(trace),
                         "selected_features": model_mod.select_features(fitted)}
    report["warnings"] = list(trace.warnings)
    report["outputs"] = {"model": args.model_out, "trace": trace_out}
    print(f"trained on {len(ds)} rows x {ds.n_features} features: "
          f"{len(trace)} outer iterations, converged={trace.converged}, "
          f"train accuracy={train_acc:.4f}")
    print(f"model written to {args.model_out}; trace written to {trace_out}")


def cmd_predict(args, report):
    fitted = _load_model(args.model)
    if os.path.isfile(args.data) and os.path.getsize(args.data) == 0:
        ds = data.Dataset(np.zeros((0, fitted.n_features)), None, [], [], args.data)
    else:
        ds = _load(args.data, label_column=None, id_column=args.id_column)
    names = ds.feature_names
    if args.label_column and args.label_column in names:
        keep = [i for i, nm in enumerate(names) if nm != args.label_column]
        ds = data.Dataset(ds.features[:, keep], None, [names[i] for i in keep], ds.ids, ds.source)
    if ds.n_features != fitted.n_features:
        raise CLIError("E_DIMENSION",
                       f"model expects {fitted.n_features} features, data has {ds.n_features}")
    scores = model_mod.predict_scores(fitted, ds.features) if len(ds) else np.zeros(0)
    labels = model_mod.label_from_score(scores)
    _write_rows(args.out, ["id", "score", "label"],
                [[i, float(s), int(y)] for i, s, y in zip(ds.ids, scores, labels)])
    report["config"] = {"model": args.model, "data": args.data}
    report["metrics"] = {"rows": len(ds)}
    report["outputs"] = {"predictions": args.out}
    print(f"wrote {len(ds)} predictions to {args.out}")


def _read_predictions(path):
    if not os.path.isfile(path):
        raise CLIError("E_DATA", f"predictions file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return {r["id"]: (float(r["score"]), float(r["label"])) for r in rows}, [r["id"] for r in rows]
    except (KeyError, ValueError) as exc:
        raise CLIError("E_DATA", f"{path}: malformed predictions file ({exc})")


def cmd_eval(args, report):
    preds, order = _read_predictions(args.predictions)
    truth = _load(args.truth, label_column=args.label_column, id_column=args.id_column)
    truth_map = dict(zip(truth.ids, truth.labels))
    if set(truth_map) != set(preds) or len(order) != len(truth_map):
        missing = sorted(set(preds) ^ set(truth_map))[:5]
        raise CLIError("E_ALIGN", f"prediction ids and truth ids differ (e.g. {missing})")
    scores = np.array([preds[i][0] for i in order])
    labels = np.array([preds[i][1] for i in order])
    y = np.array([truth_map[i] for i in order])
    acc = metrics.accuracy(labels, y)
    ap = metrics.average_precision(scores, y)
    report["config"] = {"predictions": args.predictions, "truth": args.truth}
    report["metrics"] = {"accuracy": acc, "average_precision": ap, "rows": len(order)}
    if args.out:
        _write_rows(args.out, ["metric", "value"], [["accuracy", acc], ["average_precision", ap]])
        report["outputs"] = {"metrics": args.out}
    print(f"Acc\t{acc:.6f}")
    print(f"AP\t{ap:.6f}")


SWEEP_HEADER = ["lam", "sigma", "val_acc", "val_ap", "test_acc", "test_ap",
                "n_selected", "support", "converged", "outer_iterations"]


def cmd_sweep(args, report):
    ds = _load(args.data, label_column=args.label_column, id_column=args.id_column)
    basis = _basis_config(args)
    base = _solver_config(args)
    rows = run_sweep(ds, args.lambdas, args.sigmas, args.fractions, args.split_seed, basis, base,
                     args.tau)
    table = [[r.lam, r.sigma, r.val_acc, r.val_ap, r.test_acc, r.test_ap, len(r.support),
              ";".join(str(j) for j in r.support), int(r.converged), r.outer_iterations]
             for r in rows]
    _write_rows(args.out, SWEEP_HEADER, table)
    best = best_row(rows)
    report["config"] = {"data": args.data, "lambdas": args.lambdas, "sigmas": args.sigmas,
                        "fractions": args.fractions, "split_seed": args.split_seed,
                        "basis": basis.to_dict(), "solver": base.to_dict()}
    report["metrics"] = {
        "best": None if best is None else {"lam": best.lam, "sigma": best.sigma,
                                           "val_acc": best.val_acc, "test_acc": best.test_acc,
                                           "support": list(best.support)},
        "grid_points": len(rows),
    }
    report["outputs"] = {"table": args.out}
    print("\t".join(SWEEP_HEADER))
    for row in table:
        print("\t".join(_fmt(v) for v in row))
    if best is not None:
        print(f"best: lam={best.lam!r} sigma={best.sigma!r} val_acc={best.val_acc:.4f}")


def cmd_rank(args, report):
    fitted = _load_model(args.model)
    norms = model_mod.feature_group_norms(fitted)
    retained = model_mod.select_features(fitted, args.tau)
    names = fitted.metadata.get("feature_names") or [f"x{j}" for j in range(fitted.n_features)]
    order = sorted(range(norms.size), key=lambda j: (-norms[j], j))
    table = [[rank, j, names[j], float(norms[j]), int(j in retained)]
             for rank, j in enumerate(order)]
    header = ["rank", "feature", "name", "group_norm", "retained"]
    print("\t".join(header))
    for row in table:
        print("\t".join(_fmt(v) for v in row))
    outputs = {}
    if args.out:
        _write_rows(args.out, header, table)
        outputs["table"] = args.out
    curves = []
    if args.curves_dir:
        os.makedirs(args.curves_dir, exist_ok=True)
        for j in retained:
            path = os.path.join(args.curves_dir, f"curve_feature_{j}.csv")
            _write_rows(path, ["x", "value"],
                        model_mod.component_function_curve(fitted, j, args.grid_size).tolist())
            curves.append(path)
        outputs["curves"] = curves
    report["config"] = {"model": args.model, "tau": args.tau}
    report["metrics"] = {"retained": retained, "group_norms": [float(v) for v in norms]}
    report["outputs"] = outputs
    print(f"retained {len(retained)} of {norms.size} features")


def cmd_generate(args, report):
    spec = data.SyntheticSpec(n=args.n, p=args.p, support=tuple(args.support),
                              freqs=tuple([1.0] * len(args.support)),
                              amps=tuple([1.0] * len(args.support)),
                              noise=args.noise, seed=args.seed)
    ds, truth = data.generate_synthetic(spec)
    data.write_csv(args.out, ds)
    report["config"] = {"n": spec.n, "p": spec.p, "support": list(spec.support),
                        "noise": spec.noise, "seed": spec.seed}
    report["metrics"] = {"flipped": len(truth.flipped)}
    report["outputs"] = {"data": args.out}
    print(f"wrote {spec.n} synthetic rows to {args.out} (support {list(spec.support)})")


def _load_model(path):
    if not os.path.isfile(path):
        raise CLIError("E_MODEL", f"model file not found: {path}")
    return model_mod.load(path)


# --------------------------------------------------------------------------
# parser / entry point
# --------------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="afr", description="Correntropy-loss sparse additive classifier")
    parser.add_argument("--version", action="version", version=f"afr {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model on a labelled feature file")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--trace-out", default=None, help="default: <model-out>.trace.tsv")

    p = sub.add_parser("predict", help="score a feature file")
    p.add_argument("--model", required=True)
    _add_data_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="accuracy and average precision of a predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--id-column", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="grid search over lam and sigma")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--lambdas", type=_float_list, default=list(DEFAULT_LAMBDAS))
    p.add_argument("--sigmas", type=_float_list, default=list(DEFAULT_SIGMAS))
    p.add_argument("--fractions", type=_float_list, default=[0.8, 0.1, 0.1])
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", help="rank features by coefficient group norm")
    p.add_argument("--model", required=True)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--curves-dir", default=None)
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--out", default=None)

    p = sub.add_parser("generate", help="write a synthetic sparse additive task")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--support", type=_int_list, default=[3, 8, 14])
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)

    for p in sub.choices.values():
        p.add_argument("--report", default=None, help="JSON run report path")
        p.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    return parser


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "eval": cmd_eval,
            "sweep": cmd_sweep, "rank": cmd_rank, "generate": cmd_generate}


def _default_report_path(args):
    if args.report:
        return args.report
    primary = {"train": "model_out", "predict": "out", "sweep": "out", "generate": "out"}.get(args.command)
    if primary:
        return getattr(args, primary) + ".report.json"
    if getattr(args, "out", None):
        return args.out + ".report.json"
    # eval and rank print their tables; the report sits next to their input
    if args.command == "eval":
        return args.predictions + ".eval.report.json"
    if args.command == "rank":
        return args.model + ".rank.report.json"
    return None


def main(argv=None):
    parser = build_parser()
    report_path = None
    report = {}
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CLIError("E_USAGE", "no command given; see afr --help")
        report_path = _default_report_path(args)
        report.update(command=args.command, config={}, metrics={}, outputs={}, timing=None)
        start = time.perf_counter()
        COMMANDS[args.command](args, report)
        if args.timing:
            report["timing"] = {"seconds": time.perf_counter() - start}
        status, code = EXIT_OK, None
    except CLIError as exc:
        status, code, msg = exc.status, exc.code, str(exc)
    except SolverError as exc:
        status, code, msg = EXIT_SOLVER, "E_SOLVER", str(exc)
    except ModelFormatError as exc:
        status, code, msg = EXIT_USAGE, "E_MODEL", str(exc)
    except UndefinedMetricError as exc:
        status, code, msg = EXIT_USAGE, "E_METRIC", str(exc)
    except (AFRError, OSError) as exc:
        status, code, msg = EXIT_USAGE, "E_DATA", str(exc)
    if status != EXIT_OK:
        print(f"afr: error code={code}: {msg}", file=sys.stderr)
        report["error"] = {"code": code, "message": msg}
    if report:
        report["exit_status"] = status
        try:
            _write_report(report_path, report)
        except OSError:
            pass
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
