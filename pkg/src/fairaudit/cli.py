"""Command-line entry point.

Subcommands: audit, decompose, curves, noise, subgroups, test, synth,
report, prepare-adult.  A flat key=value config file may supply any long
flag's value; explicit flags win.  All randomness derives from the single
--seed knob, and identical inputs plus seed produce a byte-identical
report body.

Exit codes: 0 success, 2 config error, 3 data error, 4 analysis error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import adult as adult_mod
from . import curves as curves_mod
from . import noise_bounds, stats, subgroups, synth
from . import decomposition as decomp
from .costs import CostKind, PredictionSet, discrimination_level, brier_score
from .data import (
    Dataset,
    Schema,
    Task,
    derive_seed,
    load_dataset,
    split,
    write_dataset,
)
from .errors import AnalysisError, ConfigError, DataError, FairauditError
from .learners import LearnerKind, LearnerSpec, apply_threshold, train
from .report import AuditReport, emit_report, write_curve_table

ANALYSES = (
    "audit",
    "decompose",
    "curves",
    "noise",
    "subgroups",
    "test",
    "synth",
    "report",
    "prepare-adult",
)


def parse_learner(text: str) -> LearnerSpec:
    """Parse 'kind' or 'kind:key=value,key=value' into a LearnerSpec."""
    kind_text, _, rest = text.partition(":")
    try:
        kind = LearnerKind(kind_text.strip())
    except ValueError:
        raise ConfigError(f"unknown learner kind {kind_text!r}") from None
    kwargs = {}
    converters = {
        "lam": float,
        "penalty": str,
        "k": int,
        "max_depth": int,
        "n_trees": int,
        "feature_fraction": float,
        "bootstrap": lambda s: s.lower() in ("1", "true", "yes"),
        "epochs": int,
        "step_size": float,
    }
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            if key not in converters:
                raise ConfigError(f"unknown learner option {key!r}")
            kwargs[key] = converters[key](value.strip())
    return LearnerSpec(kind=kind, **kwargs)


def parse_kinds(text: str) -> list[CostKind]:
    kinds = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            kinds.append(CostKind(item))
        except ValueError:
            raise ConfigError(f"unknown cost kind {item!r}") from None
    if not kinds:
        raise ConfigError("no cost kinds given")
    return kinds


def _read_config_file(path) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    for key, value in values.items():
        if not hasattr(args, key):
            raise ConfigError(f"config key {key!r} is not a known option")
        current = getattr(args, key)
        # Flags given on the command line win over the config file.
        if key in args._explicit:
            continue
        if key == "seed":
            setattr(args, key, int(value))
        elif isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, key, int(value))
        elif isinstance(current, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)


def _load_data(args) -> Dataset:
    if not args.data:
        raise ConfigError("--data is required for this subcommand")
    if not args.schema:
        raise ConfigError("--schema is required for this subcommand")
    return load_dataset(args.data, Schema.from_file(args.schema))


def _trained_predictions(args, d: Dataset, seed: int):
    """Either use the score column from the data, or train the configured
    learner on a split and evaluate on the held-out part."""
    if d.score is not None:
        labels = None
        if d.task is Task.BINARY:
            labels = apply_threshold(d.score, args.threshold)
        return PredictionSet(scores=d.score, labels=labels), d
    spec = replace(parse_learner(args.learner), seed=derive_seed(seed, "train"))
    ds = split(d, args.test_fraction, derive_seed(seed, "split"))
    model = train(spec, ds.train)
    scores = model.predict_scores(ds.test.features)
    labels = None
    if d.task is Task.BINARY:
        labels = apply_threshold(scores, args.threshold)
    return PredictionSet(scores=scores, labels=labels), ds.test


def cmd_audit(args, report: AuditReport) -> None:
    d = _load_data(args)
    preds, eval_set = _trained_predictions(args, d, args.seed)
    for kind in parse_kinds(args.kind):
        block = discrimination_level(preds, eval_set, kind)
        report.add(f"group_costs.{kind.value}", block)
        for w in block.warnings:
            report.warn(w)
    if eval_set.task is Task.BINARY and preds.scores is not None:
        briers = {
            str(a): brier_score(preds.scores, eval_set, a)
            for a in sorted(set(eval_set.group.tolist()))
        }
        report.add("brier_scores", briers)


def _synth_source(args, seed: int):
    if args.synth_kind == "regression":
        spec = synth.RegressionSynthSpec(
            sigma_eps=args.sigma_eps, homoskedastic=args.homoskedastic
        )
        sampler = lambda n, s: synth.gen_regression(spec, n, s)[0]
        _, om = synth.gen_regression(spec, 1, seed)
        return spec, sampler, om, Task.REGRESSION
    if args.synth_kind == "discrete":
        spec = synth.default_discrete_spec()
        sampler = lambda n, s: synth.gen_discrete(spec, n, s)[0]
        _, om = synth.gen_discrete(spec, 1, seed)
        return spec, sampler, om, Task.BINARY
    raise ConfigError(f"unknown synthetic kind {args.synth_kind!r}")


def cmd_decompose(args, report: AuditReport) -> None:
    seed = args.seed
    spec = parse_learner(args.learner)
    if args.data:
        d = _load_data(args)
        ds = split(d, args.test_fraction, derive_seed(seed, "split"))
        ensemble = decomp.ensemble_train(
            spec, ds.train, args.t_models, args.n_train or ds.train.n,
            ds.test, derive_seed(seed, "ensemble"), threshold=args.threshold,
        )
        om = None
        eval_set = ds.test
        loss = (
            decomp.Loss.ZERO_ONE
            if d.task is Task.BINARY
            else decomp.Loss.SQUARED
        )
    else:
        _, sampler, om, task = _synth_source(args, seed)
        eval_set = sampler(args.eval_size, derive_seed(seed, "eval"))
        ensemble = decomp.ensemble_train(
            spec, sampler, args.t_models, args.n_train or 200,
            eval_set, derive_seed(seed, "ensemble"), threshold=args.threshold,
        )
        loss = (
            decomp.Loss.ZERO_ONE if task is Task.BINARY else decomp.Loss.SQUARED
        )
    blocks = {}
    for a in sorted(set(eval_set.group.tolist())):
        blocks[str(a)] = decomp.group_decomposition(
            ensemble, eval_set, om, loss, a
        )
    report.add("decomposition", blocks)
    costs = [b.cost for b in blocks.values()]
    report.add("gamma_bar", max(costs) - min(costs))
    if om is None:
        report.warn(
            "outcome model unknown: bias and noise reported as a combined "
            "residual; see noise bounds for noise estimates"
        )


def cmd_curves(args, report: AuditReport) -> None:
    d = _load_data(args)
    spec = parse_learner(args.learner)
    grid = [int(x) for x in args.grid.split(",") if x.strip()]
    kinds = parse_kinds(args.kind)
    exp = curves_mod.run_curve_experiment(
        spec, d, grid, args.trials, derive_seed(args.seed, "curves"),
        cost_kinds=kinds, threshold=args.threshold,
    )
    fits = curves_mod.fit_curve_experiment(exp)
    fit_block = {
        f"{kind.value}.group{a}": fit for (a, kind), fit in sorted(
            fits.items(), key=lambda kv: (kv[0][1].value, kv[0][0])
        )
    }
    report.add("power_law_fits", fit_block)
    gaps = {}
    for kind in kinds:
        groups = sorted({a for (a, k) in fits if k == kind})
        if len(groups) >= 2:
            f0, f1 = fits[(groups[0], kind)], fits[(groups[-1], kind)]
            gaps[kind.value] = {
                "at_max_n": curves_mod.extrapolate_gamma(f0, f1, max(grid)),
                "asymptotic": curves_mod.extrapolate_gamma(f0, f1, np.inf),
            }
            if curves_mod.extrapolation_warning(f0, np.inf):
                report.warn(
                    f"{kind.value}: asymptotic gap extrapolates beyond "
                    f"10x the fitted range and may be unreliable"
                )
    report.add("gamma_extrapolations", gaps)
    rows = []
    for kind in kinds:
        for a in sorted(set(d.group.tolist())):
            for n, mean, count in exp.mean_costs(a, kind):
                values = [
                    c.cost
                    for c in exp.cells
                    if c.n_train == n and c.group == a
                    and c.cost_kind == kind and c.cost is not None
                ]
                stderr = (
                    float(np.std(values, ddof=1) / np.sqrt(len(values)))
                    if len(values) > 1
                    else 0.0
                )
                fit = fits.get((a, kind))
                fitted = fit(n) if fit else ""
                rows.append([n, a, kind.value, mean, stderr, fitted])
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_curve_table(os.path.join(args.out, "curve_data.csv"), rows)


def cmd_noise(args, report: AuditReport) -> None:
    d = _load_data(args)
    max_samples = args.max_nn_samples if args.max_nn_samples > 0 else None
    estimates = noise_bounds.all_bounds(
        d, k=args.k, folds=args.folds, seed=derive_seed(args.seed, "noise"),
        max_samples=max_samples,
    )
    block = {
        f"{e.method.value}.group{e.group}": e for e in estimates
    }
    report.add("noise_bounds", block)


def cmd_subgroups(args, report: AuditReport) -> None:
    d = _load_data(args)
    preds, eval_set = _trained_predictions(args, d, args.seed)
    kind = parse_kinds(args.kind)[0]
    if args.topics:
        cl = subgroups.load_membership(args.topics, n_expected=eval_set.n)
        rep = subgroups.rank_clusters(preds, eval_set, cl, CostKind.ZERO_ONE)
        report.add("topic_clusters", rep)
        for w in rep.warnings:
            report.warn(w)
    else:
        clusterings = subgroups.threshold_clusterings(eval_set)
        summary = {}
        for j, cl in enumerate(clusterings):
            if cl.degenerate:
                report.warn(f"feature {j} is constant; clustering degenerate")
                continue
            try:
                rep = subgroups.rank_clusters(preds, eval_set, cl, kind)
            except AnalysisError:
                continue
            top = rep.clusters[0]
            summary[eval_set.column_names[j]] = {
                "top_cluster": top,
                "gap": rep.gaps[top],
                "variance": rep.variances[top],
                "enrichment": rep.enrichment[top],
            }
        report.add("feature_threshold_clusters", summary)


def cmd_test(args, report: AuditReport) -> None:
    d = _load_data(args)
    preds, eval_set = _trained_predictions(args, d, args.seed)
    kind = parse_kinds(args.kind)[0]
    result = stats.gamma_z_test(preds, eval_set, kind, level=args.level)
    report.add("gamma_z_test", result)
    for w in result.detail.get("warnings", []):
        report.warn(w)
    ci = stats.bootstrap_gamma_ci(
        preds, eval_set, kind, reps=args.reps, level=args.level,
        seed=derive_seed(args.seed, "bootstrap"),
    )
    report.add("bootstrap_gamma_ci", {"low": ci[0], "high": ci[1]})
    groups = sorted(set(eval_set.group.tolist()))
    if len(groups) > 2:
        from .costs import per_sample_losses

        losses = [
            per_sample_losses(preds, eval_set, kind, a) for a in groups
        ]
        report.add("anova_f", stats.anova_f(losses, level=args.level))
        pairwise = stats.pairwise_welch_holm(losses, level=args.level)
        report.add(
            "pairwise_welch_holm",
            {f"{i},{j}": r for (i, j), r in sorted(pairwise.items())},
        )


def cmd_synth(args, report: AuditReport) -> None:
    seed = derive_seed(args.seed, "synth")
    if args.synth_kind == "regression":
        spec = synth.RegressionSynthSpec(
            sigma_eps=args.sigma_eps, homoskedastic=args.homoskedastic
        )
        d, _ = synth.gen_regression(spec, args.n, seed)
    else:
        spec = synth.default_discrete_spec()
        d, _ = synth.gen_discrete(spec, args.n, seed)
    bayes = synth.exact_bayes(spec)
    report.add(
        "exact_bayes",
        {"noise": list(bayes["noise"])},
    )
    if args.data:
        write_dataset(d, args.data)
        report.add("written", {"path": args.data, "rows": d.n, "features": d.k})


def cmd_report(args, report: AuditReport) -> None:
    if not args.data:
        raise ConfigError("report subcommand needs --data <report.json>")
    with open(args.data, "r", encoding="utf-8") as fh:
        loaded = AuditReport.from_json(fh.read())
    report.results = loaded.results
    report.warnings = loaded.warnings
    report.errors = loaded.errors


def cmd_prepare_adult(args, report: AuditReport) -> None:
    if not args.data or not args.out_csv or not args.out_schema:
        raise ConfigError(
            "prepare-adult needs --data <raw adult.data> --out-csv <csv> "
            "--out-schema <schema>"
        )
    rows = adult_mod.convert_adult(args.data, args.out_csv, args.out_schema)
    report.add(
        "prepare_adult",
        {"rows": rows, "csv": args.out_csv, "schema": args.out_schema},
    )


class _TrackingParser(argparse.ArgumentParser):
    """Records which destinations were explicitly given, so the config
    file only fills in unset options."""

    def parse_args(self, argv=None, namespace=None):
        args = super().parse_args(argv, namespace)
        explicit = set()
        argv = list(sys.argv[1:] if argv is None else argv)
        for action in self._get_all_actions():
            for opt in action.option_strings:
                if opt in argv or any(a.startswith(opt + "=") for a in argv):
                    explicit.add(action.dest)
        args._explicit = explicit
        return args

    def _get_all_actions(self):
        actions = list(self._actions)
        for action in self._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sub in action.choices.values():
                    actions.extend(sub._actions)
        return actions


def build_parser() -> _TrackingParser:
    parser = _TrackingParser(prog="fairaudit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None)
        p.add_argument("--data", default=None)
        p.add_argument("--schema", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="fairaudit_out")
        p.add_argument("--format", default="json", choices=("json", "csv"))
        p.add_argument("--kind", default="zero_one")
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--level", type=float, default=0.05)
        p.add_argument("--learner", default="bagged_trees")
        p.add_argument("--test-fraction", type=float, default=0.2)

    p = sub.add_parser("audit")
    common(p)
    p = sub.add_parser("decompose")
    common(p)
    p.add_argument("--t-models", type=int, default=50)
    p.add_argument("--n-train", type=int, default=0)
    p.add_argument("--eval-size", type=int, default=500)
    p.add_argument("--synth-kind", default="discrete",
                   choices=("discrete", "regression"))
    p.add_argument("--sigma-eps", type=float, default=1.0)
    p.add_argument("--homoskedastic", action="store_true")
    p = sub.add_parser("curves")
    common(p)
    p.add_argument("--grid", default="100,200,400")
    p.add_argument("--trials", type=int, default=10)
    p = sub.add_parser("noise")
    common(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-nn-samples", type=int, default=0)
    p = sub.add_parser("subgroups")
    common(p)
    p.add_argument("--topics", default=None)
    p = sub.add_parser("test")
    common(p)
    p.add_argument("--reps", type=int, default=1000)
    p = sub.add_parser("synth")
    common(p)
    p.add_argument("--synth-kind", default="discrete",
                   choices=("discrete", "regression"))
    p.add_argument("--sigma-eps", type=float, default=1.0)
    p.add_argument("--homoskedastic", action="store_true")
    p.add_argument("--n", type=int, default=1000)
    p = sub.add_parser("report")
    common(p)
    p = sub.add_parser("prepare-adult")
    common(p)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-schema", default=None)
    return parser


COMMANDS = {
    "audit": cmd_audit,
    "decompose": cmd_decompose,
    "curves": cmd_curves,
    "noise": cmd_noise,
    "subgroups": cmd_subgroups,
    "test": cmd_test,
    "synth": cmd_synth,
    "report": cmd_report,
    "prepare-adult": cmd_prepare_adult,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        _apply_config(args)
        if args.seed is None:
            raise ConfigError("--seed is mandatory (reproducibility contract)")
        # The echo covers analysis inputs only; emission options (where and
        # in which format to write) must not break byte-identical reruns.
        emission_only = {"out", "format", "config"}
        config_echo = {
            k: v
            for k, v in sorted(vars(args).items())
            if not k.startswith("_") and v is not None and k not in emission_only
        }
        report = AuditReport(config=config_echo)
        COMMANDS[args.command](args, report)
        emit_report(report, args.out, args.format)
        return 0
    except ConfigError as exc:
        print(f"fairaudit: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"fairaudit: data error: {exc}", file=sys.stderr)
        return 3
    except (AnalysisError, FairauditError) as exc:
        print(f"fairaudit: analysis error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
