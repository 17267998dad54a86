"""Command-line entry point: ``xai-audit <subcommand> [options]``.

Every subcommand writes its reports into the output directory (``--out``,
else ``$XAI_AUDIT_OUT``, else ``./xai-audit-out``) and nowhere else.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import typing
from pathlib import Path

import numpy as np

from . import seeding
from .audit import (APPLICABLE, RunConfig, consistency_sweep, cross_explain, explain_model,
                    mean_metrics, performance_delta_summary, top_k, train_and_score)
from .data import (SyntheticSpec, generate_synthetic, load_csv, pearson_matrix,
                   profile_imbalance, prune_correlated, write_csv)
from .errors import AuditError, ConfigError, DataError
from .explain import toy_alignment_demo
from .metrics import mcc_guarantee_probe
from .models import rules
from .reports import emit_report, metric_table, to_markdown

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
OUT_ENV = "XAI_AUDIT_OUT"
SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument groups


def _add_output(p):
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./xai-audit-out)")
    p.add_argument("--config", help="JSON file of option defaults; explicit flags win")


def _add_synthetic(p, flag=True):
    g = p.add_argument_group("synthetic dataset")
    if flag:
        g.add_argument("--synthetic", action="store_true", help="generate the dataset in memory")
    g.add_argument("--n-rows", type=int, default=20000)
    g.add_argument("--n-informative", type=int, default=3)
    g.add_argument("--n-noise", type=int, default=10)
    g.add_argument("--n-pairs", type=int, default=3, help="planted correlated pairs")
    g.add_argument("--positive-fraction", type=float, default=0.8)
    g.add_argument("--separation", type=float, default=4.0)
    g.add_argument("--correlation-noise", type=float, default=0.05)
    g.add_argument("--data-seed", type=int, default=0)


def _add_dataset(p):
    g = p.add_argument_group("CSV dataset")
    g.add_argument("--csv", help="path of a CSV export")
    g.add_argument("--label-column", default="Label")
    g.add_argument("--positive-label", action="append", default=None,
                   help="label value meaning attack (repeatable; default: 1)")
    g.add_argument("--drop", action="append", default=None, help="column to ignore (repeatable)")
    g.add_argument("--prune", action="store_true",
                   help="drop strongly correlated features before the run")
    g.add_argument("--prune-threshold", type=float, default=0.95)
    _add_synthetic(p)


def _add_run(p, method=True):
    g = p.add_argument_group("run configuration")
    g.add_argument("--model", choices=sorted(APPLICABLE), default="dt")
    if method:
        g.add_argument("--method", choices=["DT_FI", "RIDGE_FC", "PI", "SHAP_GLOBAL"],
                       default=None, help="explanation method (default: intrinsic if any, else PI)")
        g.add_argument("--k", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--test-fraction", type=float, default=0.15)
    g.add_argument("--criterion", choices=["gini", "entropy"], default="gini")
    g.add_argument("--max-depth", type=int, default=None)
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--optimizer", choices=["rmsprop", "adam"], default="rmsprop")
    g.add_argument("--learning-rate", type=float, default=0.001)
    g.add_argument("--batch-size", type=int, default=256)
    g.add_argument("--epochs", type=int, default=5)
    g.add_argument("--pi-repeats", type=int, default=10)
    g.add_argument("--pi-on", choices=["test", "train"], default="test")
    g.add_argument("--shap-background", type=int, default=100)
    g.add_argument("--shap-instances", type=int, default=50)
    g.add_argument("--shap-samples", type=int, default=2048)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="xai-audit",
        description="Audit feature-based explanations of binary intrusion-detection classifiers.",
        epilog="Reports go to --out, else $XAI_AUDIT_OUT, else ./xai-audit-out. "
               "Exit codes: 0 ok, 1 usage, 2 data, 3 runtime.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic CSV dataset")
    _add_output(p)
    _add_synthetic(p, flag=False)
    p.add_argument("--name", default="synthetic", help="file stem of the CSV")

    p = sub.add_parser("profile", help="class imbalance and correlation report")
    _add_output(p)
    _add_dataset(p)

    p = sub.add_parser("train", help="fit and score models over repeated splits")
    _add_output(p)
    _add_dataset(p)
    _add_run(p, method=False)
    p.set_defaults(model=None)
    p.add_argument("--models", default="dt,ridge,mlp", help="comma-separated model kinds")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--rules", action="store_true", help="also write the tree's decision rules")

    p = sub.add_parser("explain", help="importance vector, top-k set and SVG chart")
    _add_output(p)
    _add_dataset(p)
    _add_run(p)

    p = sub.add_parser("cross-explain", help="transferability of a top-k feature set")
    _add_output(p)
    _add_dataset(p)
    _add_run(p)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--features", help="comma-separated feature set to test instead of a source")

    p = sub.add_parser("sweep", help="explanation consistency across configuration changes")
    _add_output(p)
    _add_dataset(p)
    _add_run(p)
    p.add_argument("--vary", action="append", default=[], metavar="KEY=VALUE[,KEY=VALUE]",
                   help="one variation of the base run (repeatable); 'split' aliases test_fraction")
    p.add_argument("--seeds", help="comma-separated seeds, one variation each")
    p.add_argument("--seed-policy", choices=["shared", "derived"], default="shared")

    p = sub.add_parser("probe-mcc", help="search for matrices passing an MCC gate but failing another score")
    _add_output(p)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--max-small", type=int, default=20)
    p.add_argument("--tn", type=int, action="append", default=None,
                   help="true-negative count to probe (repeatable; default 10000 and 1000000)")

    p = sub.add_parser("toy-demo", help="coefficient vs gradient importance on the step/smooth toy models")
    _add_output(p)
    p.add_argument("--c1", type=float, default=0.9)
    p.add_argument("--c2", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=7.0)
    p.add_argument("--resolution", type=int, default=201)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "xai-audit-out")


def _synthetic_spec(args) -> SyntheticSpec:
    return SyntheticSpec(args.n_rows, args.n_informative, args.n_noise, args.n_pairs,
                         args.positive_fraction, args.separation, args.correlation_noise)


def _dataset(args):
    if bool(args.csv) == bool(args.synthetic):
        raise UsageError("give exactly one dataset source: --csv PATH or --synthetic")
    if args.csv:
        d = load_csv(args.csv, args.label_column, args.positive_label or ["1"], args.drop or [])
        source = {"csv": args.csv, "label_column": args.label_column,
                  "positive_labels": sorted(args.positive_label or ["1"]),
                  "drop": sorted(args.drop or [])}
    else:
        spec = _synthetic_spec(args)
        d = generate_synthetic(spec, args.data_seed)
        source = {"synthetic": spec.to_dict(), "data_seed": args.data_seed}
    if getattr(args, "prune", False):
        pruned = prune_correlated(d, args.prune_threshold)
        d = pruned.dataset
        source["pruned"] = {"threshold": args.prune_threshold, "removed": sorted(pruned.removed),
                            "constant": sorted(pruned.constant)}
    return d, source


def _default_method(model: str) -> str:
    return {"dt": "DT_FI", "ridge": "RIDGE_FC", "mlp": "PI"}[model]


def _run_config(args, model=None) -> RunConfig:
    model = model or args.model
    method = getattr(args, "method", None) or _default_method(model)
    return RunConfig(
        model=model, method=method, seed=args.seed, test_fraction=args.test_fraction,
        k=getattr(args, "k", 3), criterion=args.criterion, max_depth=args.max_depth,
        alpha=args.alpha, optimizer=args.optimizer, learning_rate=args.learning_rate,
        batch_size=args.batch_size, epochs=args.epochs, pi_repeats=args.pi_repeats,
        pi_on=args.pi_on, shap_background=args.shap_background,
        shap_instances=args.shap_instances, shap_samples=args.shap_samples,
    )


_ALIASES = {"split": "test_fraction", "lr": "learning_rate"}


def _coerce(key: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if key not in fields:
        raise UsageError(f"cannot vary unknown setting {key!r}")
    hint = typing.get_type_hints(RunConfig)[key]
    if raw.lower() in ("none", "null"):
        return None
    base = next((t for t in typing.get_args(hint) if t is not type(None)), hint)
    try:
        return base(raw)
    except ValueError:
        raise UsageError(f"bad value {raw!r} for {key}") from None


def parse_variation(text: str) -> dict:
    delta = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"variation {text!r} must look like key=value")
        key, raw = (s.strip() for s in part.split("=", 1))
        key = _ALIASES.get(key, key.replace("-", "_"))
        delta[key] = _coerce(key, raw)
    return delta


def _envelope(command: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, **body}


def _emit(report, out: Path, stem: str, markdown=None):
    emit_report(report, "json", out, stem)
    if markdown is not None:
        (out / f"{stem}.md").write_text(markdown, encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, out: Path) -> None:
    spec = _synthetic_spec(args)
    d = generate_synthetic(spec, args.data_seed)
    out.mkdir(parents=True, exist_ok=True)
    if "/" in args.name or args.name.startswith("."):
        raise UsageError("--name must be a plain file stem")
    write_csv(d, out / f"{args.name}.csv")
    emit_report(_envelope("synth", {"spec": spec.to_dict(), "data_seed": args.data_seed,
                                    "csv": f"{args.name}.csv", "rows": d.n_rows,
                                    "features": list(d.feature_names),
                                    "profile": profile_imbalance(d)}),
                "json", out, args.name)


def cmd_profile(args, out: Path) -> None:
    d, source = _dataset(args)
    prof = profile_imbalance(d)
    cm = pearson_matrix(d)
    pruned = prune_correlated(d, args.prune_threshold)
    report = _envelope("profile", {
        "source": source, "rows": d.n_rows, "n_features": d.n_features, "imbalance": prof,
        "correlation": {
            "threshold": args.prune_threshold,
            "strong_pairs": [{"a": a, "b": b, "r": r}
                             for a, b, r in cm.strong_pairs(args.prune_threshold)],
            "removed": sorted(pruned.removed),
            "constant": sorted(pruned.constant),
            "remaining": pruned.dataset.n_features,
        },
    })
    md = (f"### Class balance\n\n| Rows | Attack | Majority fraction | Degree |\n|---|---|---|---|\n"
          f"| {prof.total} | {prof.positives} | {prof.majority_fraction:.4f} | {prof.degree} |\n\n"
          f"### Correlation pruning (|r| >= {args.prune_threshold})\n\n"
          f"{len(pruned.removed)} of {d.n_features} features strongly correlated; "
          f"{len(pruned.constant)} constant.\n")
    _emit(report, out, "profile", md)


def cmd_train(args, out: Path) -> None:
    d, source = _dataset(args)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    if args.model:
        kinds = [args.model]
    unknown = [k for k in kinds if k not in APPLICABLE]
    if unknown:
        raise UsageError(f"unknown model kinds {unknown}")
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    means, body = {}, {}
    for kind in kinds:
        cfg = _run_config(args, kind)
        per, first = [], None
        for r in range(args.repeats):
            rcfg = cfg.replace(seed=seeding.derive_seed(args.seed, r))
            model, _, _, metrics = train_and_score(d, rcfg)
            per.append(metrics)
            first = first or model
        mean, var = mean_metrics(per)
        means[kind] = mean
        body[kind] = {"config": cfg, "mean": mean, "variance": var,
                      "per_repeat": per}
        emit_report(first, "json", out, f"model_{kind}")
        if kind == "dt" and args.rules:
            emit_report({"rules": rules(first)}, "json", out, "dt_rules")
            (out / "dt_rules.md").write_text(
                "\n".join(f"- {r}" for r in rules(first)) + "\n", encoding="utf-8")
    report = _envelope("train", {"source": source, "repeats": args.repeats, "models": body})
    md = f"### Mean test scores over {args.repeats} splits\n\n" + metric_table(
        {k.upper() if k != "ridge" else "Ridge": v for k, v in means.items()})
    _emit(report, out, "train", md)


def cmd_explain(args, out: Path) -> None:
    d, source = _dataset(args)
    cfg = _run_config(args)
    model, train, test, metrics = train_and_score(d, cfg)
    imp = explain_model(model, cfg.method, train, test, cfg)
    top = top_k(imp, cfg.k, {"model": cfg.model, "seed": cfg.seed})
    stem = f"importance_{cfg.model}_{cfg.method}"
    _emit(_envelope("explain", {"source": source, "config": cfg, "metrics": metrics,
                                "importance": imp, "top_k": top}),
          out, stem, to_markdown(imp))
    emit_report(imp, "svg", out, stem)


def cmd_cross_explain(args, out: Path) -> None:
    d, source = _dataset(args)
    cfg = _run_config(args)
    features = [f.strip() for f in args.features.split(",")] if args.features else None
    rep = cross_explain(d, cfg, k=cfg.k, seed=cfg.seed, repeats=args.repeats, features=features)
    _emit(_envelope("cross-explain", {"source": source, "config": cfg, "report": rep}),
          out, "transfer", to_markdown(rep))


def cmd_sweep(args, out: Path) -> None:
    d, source = _dataset(args)
    base = _run_config(args)
    variations = [parse_variation(v) for v in args.vary]
    if args.seeds:
        variations += [{"seed": int(s)} for s in args.seeds.split(",") if s.strip()]
    if not variations:
        raise UsageError("a sweep needs at least one --vary or --seeds entry")
    rep = consistency_sweep(d, base, variations, seed_policy=args.seed_policy)
    _emit(_envelope("sweep", {"source": source, "report": rep,
                              "summary": performance_delta_summary(rep)}),
          out, "sweep", to_markdown(rep))


def cmd_probe_mcc(args, out: Path) -> None:
    ladder = args.tn or [10 ** 4, 10 ** 6]
    found = mcc_guarantee_probe(args.threshold, args.max_small, ladder)
    report = _envelope("probe-mcc", {"threshold": args.threshold, "max_small": args.max_small,
                                     "tn_ladder": sorted(set(ladder)), "count": len(found),
                                     "counterexamples": found})
    rows = "\n".join(
        f"| {c.matrix.tp} | {c.matrix.fn} | {c.matrix.fp} | {c.matrix.tn} | "
        f"{c.metrics.mcc:.6f} | {', '.join(c.failing)} |" for c in found[:50])
    md = (f"{len(found)} matrices pass MCC >= {args.threshold} with another score below it.\n\n"
          "| TP | FN | FP | TN | MCC | Failing |\n|---|---|---|---|---|---|\n" + rows + "\n")
    _emit(report, out, "probe_mcc", md)


def cmd_toy_demo(args, out: Path) -> None:
    rep = toy_alignment_demo(args.c1, args.c2, args.threshold, args.resolution)
    _emit(_envelope("toy-demo", {"report": rep}), out, "toy_demo", to_markdown(rep))


COMMANDS = {
    "synth": cmd_synth, "profile": cmd_profile, "train": cmd_train, "explain": cmd_explain,
    "cross-explain": cmd_cross_explain, "sweep": cmd_sweep, "probe-mcc": cmd_probe_mcc,
    "toy-demo": cmd_toy_demo,
}


def _apply_config(parser, argv):
    """Re-parse with a JSON config file's values as defaults, so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {unknown}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def dispatch(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:  # --help, or argparse rejecting the command line
            return int(exc.code or 0)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        COMMANDS[args.command](args, _out_dir(args))
    except UsageError as exc:
        print(f"xai-audit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"xai-audit: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"xai-audit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (AuditError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"xai-audit: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
