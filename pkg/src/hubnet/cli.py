"""Command-line entry point: ``hubnet {simulate,fit,bench,recover,paths}``.

Every run is a pure function of its flags.  Failures print a JSON object
``{"kind": ..., "message": ...}`` on stderr and exit nonzero (2 for
invalid input specs, 1 otherwise).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import HubNetError, InvalidSpec
from .numcore import read_matrix
from .simgen import HubGraphSpec, ScenarioSpec, gen_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidSpec(message)


def _scenario_spec(args) -> ScenarioSpec:
    kind = args.scenario
    if str(kind).lower() in ("fig1", "fig2"):
        base = ScenarioSpec.figure(kind, seed=args.seed)
        kw = {k: getattr(args, k) for k in ("n", "p", "s") if getattr(args, k) is not None}
        return ScenarioSpec(kind=base.kind, n=kw.get("n", base.n), p=kw.get("p", base.p), s=kw.get("s", base.s),
                            t_frac=base.t_frac, seed=args.seed, n_test=args.n_test, family=args.family)
    return ScenarioSpec(
        kind=kind,
        n=args.n if args.n is not None else 100,
        p=args.p if args.p is not None else 500,
        s=args.s if args.s is not None else 10,
        t_frac=args.t_frac,
        seed=args.seed,
        n_test=args.n_test,
        family=args.family,
    )


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_simulate(args) -> None:
    data = gen_scenario(_scenario_spec(args))
    data.save(args.out)


def cmd_fit(args) -> None:
    X = read_matrix(args.x)
    y = read_matrix(args.y).ravel()
    if X.shape[0] != y.shape[0]:
        from .errors import DimensionMismatch

        raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    (method,) = harness.check_methods([args.method])
    out = {"method": method, "family": args.family, "means": None, "sds": None}
    if method == "hubnet":
        res = harness.run_hubnet(X, y, args.family, cv_k=args.cv_k, seed=args.seed)
        report = res.cv
        out["edgeout"] = res.edge_fit.to_dict()
        out["theta_grid"] = np.asarray(res.selection.grid).tolist()
        out["theta_scores"] = [None if not np.isfinite(v) else float(v) for v in res.selection.scores]
        out["weights"] = [None if not np.isfinite(v) else float(v) for v in res.weights.w]
        scaling = res.scaling
    else:
        from .numcore import standardize

        Z, scaling = standardize(X)
        report = harness.run_method(method, Z, y, args.family, args.cv_k, seed=args.seed)
    out["means"] = scaling.means.tolist()
    out["sds"] = scaling.sds.tolist()
    out["cv"] = report.to_dict()
    out["fit"] = report.chosen_fit.to_dict()
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out in (None, "-"):
        print(text)
    else:
        Path(args.out).write_text(text + "\n")


def cmd_bench(args) -> None:
    spec = _scenario_spec(args)
    methods = harness.check_methods(args.methods.split(","))
    table = harness.compare(spec, methods, reps=args.reps, seed=args.seed, cv_k=args.cv_k)
    _write_csv(args.out, harness.CSV_HEADER, [row.as_csv_fields() for row in table])


def cmd_recover(args) -> None:
    spec = HubGraphSpec(setting=args.setting, n=args.n or 100, p=args.p or 200, s=args.s or 4, seed=args.seed)
    curves = harness.recovery_table(spec, reps=args.reps, seed=args.seed, gamma=args.gamma)
    rows = []
    for rep, c in enumerate(curves):
        for k in range(c.grid.size):
            rows.append([rep, k, f"{c.grid[k]:.10g}", int(c.correct_hubs[k]), int(c.max_hub_rank[k]), int(c.nonzero_rows[k])])
    _write_csv(args.out, ["rep", "grid_index", "theta", "correct_hubs", "max_hub_rank", "nonzero_rows"], rows)


def cmd_paths(args) -> None:
    curve = harness.scenario_path(_scenario_spec(args), args.method, n_lambda=args.n_lambda)
    _write_csv(args.out, ["lambda", "nonzero", "fp", "fn"], list(curve.rows()))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hubnet", description="Hub-weighted sparse regression toolkit")
    parser.add_argument("--config", help="JSON file whose keys supply flag defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_flags(sp, scenario_required=True):
        sp.add_argument("--scenario", required=scenario_required, help="a, b, c, d, fig1 or fig2")
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=int)
        sp.add_argument("--s", type=int)
        sp.add_argument("--t-frac", type=float, default=0.2)
        sp.add_argument("--n-test", type=int)
        sp.add_argument("--family", choices=["gaussian", "binomial"], default="gaussian")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("simulate", help="draw one scenario and write CSV + truth.json")
    scenario_flags(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit one method to a design and response")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--method", default="hubnet")
    sp.add_argument("--family", choices=["gaussian", "binomial"], default="gaussian")
    sp.add_argument("--cv-k", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("bench", help="compare methods over replicates of a scenario")
    scenario_flags(sp)
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--methods", default=",".join(harness.METHODS))
    sp.add_argument("--cv-k", type=int, default=10)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("recover", help="hub recovery curves on a hub-graph setting")
    sp.add_argument("--setting", required=True, help="s1, s2 or s3")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--s", type=int)
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--reps", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("paths", help="FP/FN along one method's lambda path")
    scenario_flags(sp)
    sp.add_argument("--method", default="hubnet")
    sp.add_argument("--n-lambda", type=int, default=100)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_paths)
    for sp in sub.choices.values():
        sp.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of flag defaults")
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from ``--config`` (flags still win)."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidSpec("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    choices = parser._subparsers._group_actions[0].choices
    command = next((tok for tok in argv if tok in choices), None)
    if command is None:
        command = cfg.pop("command", None)
        if command not in choices:
            raise InvalidSpec("no subcommand given")
        argv = [command] + list(argv)
    cfg.pop("command", None)
    sp = choices[command]
    valid = {a.dest for a in sp._actions} - {"help", "config"}
    unknown = set(cfg) - valid
    if unknown:
        raise InvalidSpec(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    sp.set_defaults(**cfg)
    for action in sp._actions:
        if action.dest in cfg:
            action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        args.func(args)
    except InvalidSpec as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2
    except HubNetError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"kind": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
