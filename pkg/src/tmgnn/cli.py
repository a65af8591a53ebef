"""Command-line interface.

Exit codes: 0 on success, 1 for validation or configuration problems
(anything raised as a TmgnnError), 2 for unexpected runtime failures.
"""

import argparse
import dataclasses
import sys

from .data import import_chickenpox, import_mobility, load_canonical, save_canonical
from .errors import ConfigurationError, DataError, TmgnnError
from .estimator import TmgnnForecaster
from .harness import (
    TrainConfig,
    evaluate_baseline_mae,
    evaluate_mae,
    evaluate_mse,
    load_config,
    read_report,
    run_experiment,
)
from .synthetic import make_mobility_epidemic, make_weekly_epidemic

_LIST_FIELDS = ("level_sizes", "seeds")


def _parse_int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise ConfigurationError(f"expected comma-separated integers, got {text!r}") from exc


def _add_config_flags(parser):
    """One override flag per TrainConfig field."""
    for f in dataclasses.fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name in _LIST_FIELDS:
            parser.add_argument(flag, type=str, default=None, metavar="N,N,...")
        elif f.type in ("int", int):
            parser.add_argument(flag, type=int, default=None)
        elif f.type in ("float", float):
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def _config_from_args(args):
    doc = {}
    if args.config:
        doc = load_config(args.config).to_dict()
    for f in dataclasses.fields(TrainConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name in _LIST_FIELDS:
            value = list(_parse_int_list(value))
        doc[f.name] = value
    if getattr(args, "out", None):
        doc["output_dir"] = args.out
    return TrainConfig.from_dict(doc)


def _cmd_import_data(args):
    if args.kind == "chickenpox":
        if len(args.raw) != 2:
            raise ConfigurationError(
                "import-data chickenpox needs <edges.csv> <series.csv>"
            )
        ds = import_chickenpox(args.raw[0], args.raw[1])
    elif args.kind == "mobility":
        if len(args.raw) != 2:
            raise ConfigurationError(
                "import-data mobility needs <mobility.csv> <cases.csv>"
            )
        ds = import_mobility(args.raw[0], args.raw[1], allow_gaps=args.allow_gaps)
    else:
        raise ConfigurationError(f"unknown import kind {args.kind!r}")
    save_canonical(ds, args.out, mobility_format=args.mobility_format)
    print(f"wrote {args.out}: {ds.n} nodes, {ds.T} timesteps, {ds.granularity}ly")
    return 0


def _cmd_generate(args):
    if args.kind == "weekly-epidemic":
        ds = make_weekly_epidemic(seed=args.seed)
    elif args.kind == "mobility-epidemic":
        ds = make_mobility_epidemic(seed=args.seed)
    else:
        raise ConfigurationError(f"unknown generator {args.kind!r}")
    save_canonical(ds, args.out, mobility_format=args.mobility_format)
    print(f"wrote {args.out}: {ds.n} nodes, {ds.T} timesteps, seed {args.seed}")
    return 0


def _cmd_train(args):
    config = _config_from_args(args)
    if not config.dataset:
        raise ConfigurationError("a dataset path is required (config or --dataset)")
    if not config.output_dir:
        raise ConfigurationError("an output directory is required (-o or --output-dir)")

    def progress(result):
        print(
            f"seed {result.seed}: mse={result.mse:.6f} mae={result.mae:.6f} "
            f"final_loss={result.final_loss:.6f}"
        )
        if result.diagnostic:
            print(f"seed {result.seed}: warning: {result.diagnostic}")

    report = run_experiment(config, progress=progress)
    print(f"mse mean {report.mse_mean:.6f}" + (
        f" +/- {report.mse_std:.6f}" if report.mse_std is not None else ""
    ))
    print(f"report written to {config.output_dir}")
    return 0


def _cmd_evaluate(args):
    est = TmgnnForecaster.load(args.model)
    dataset = load_canonical(args.dataset)
    if args.horizon is not None and args.horizon != est.horizon:
        raise ConfigurationError(
            f"checkpoint predicts horizon {est.horizon}, not {args.horizon}"
        )
    est.dataset_ = dataset
    out_mse = evaluate_mse(est, dataset, eval_window=args.eval_window)
    out_mae = evaluate_mae(est, dataset, eval_window=args.eval_window)
    print(f"test_mse_standardized\t{out_mse!r}")
    print(f"test_mae_raw\t{out_mae!r}")
    return 0


def _cmd_baseline(args):
    dataset = load_canonical(args.dataset)
    value = evaluate_baseline_mae(
        dataset,
        args.kind,
        lags=args.lags,
        horizon=args.horizon,
        train_fraction=args.train_fraction,
        window=args.window,
    )
    print(f"baseline_{args.kind}_mae\t{value!r}")
    return 0


def _cmd_inspect_hierarchy(args):
    est = TmgnnForecaster.load(args.model)
    dataset = load_canonical(args.dataset)
    t = args.timestep
    if not (est.lags - 1 <= t <= dataset.T - 1 - est.horizon):
        raise DataError(
            f"timestep {t} is not a valid anchor; valid range is "
            f"[{est.lags - 1}, {dataset.T - 1 - est.horizon}]"
        )
    std_cases = est.scaler_.transform(dataset.cases)
    inputs = std_cases[t - est.lags + 1: t + 1].T
    graph = dataset.graph_at(t, inputs)
    from .mgn import build_hierarchy

    hierarchy = build_hierarchy(graph, est.model_.params, est.model_.config.mgn, mode="eval")
    print(hierarchy.dump())
    return 0


def _cmd_report(args):
    doc = read_report(args.input)
    results = doc.get("results", [])
    print("seed\tmse\tmae")
    for r in results:
        print(f"{r['seed']}\t{r['mse']!r}\t{r['mae']!r}")
    if doc.get("mse_mean") is not None:
        line = f"mean\t{doc['mse_mean']!r}\t{doc['mae_mean']!r}"
        print(line)
    if doc.get("mse_std") is not None:
        print(f"std\t{doc['mse_std']!r}\t{doc['mae_std']!r}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tmgnn",
        description="Temporal multiresolution graph forecasting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import-data", help="convert raw benchmark files to canonical form")
    p.add_argument("kind", choices=("chickenpox", "mobility"))
    p.add_argument("raw", nargs="+", help="raw input files")
    p.add_argument("-o", "--out", required=True, help="canonical output path")
    p.add_argument("--allow-gaps", action="store_true", help="accept missing days")
    p.add_argument("--mobility-format", choices=("sparse", "rle"), default="sparse")
    p.set_defaults(func=_cmd_import_data)

    p = sub.add_parser("generate", help="write a seeded synthetic canonical dataset")
    p.add_argument("kind", choices=("weekly-epidemic", "mobility-epidemic"))
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mobility-format", choices=("sparse", "rle"), default="sparse")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train and evaluate per the config")
    p.add_argument("-c", "--config", help="JSON config file")
    p.add_argument("-o", "--out", help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset")
    p.add_argument("-m", "--model", required=True, help="checkpoint path")
    p.add_argument("-d", "--dataset", required=True, help="canonical dataset path")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--eval-window", type=int, default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", help="evaluate a statistical baseline")
    p.add_argument("kind", choices=("avg", "last_day", "avg_window"))
    p.add_argument("-d", "--dataset", required=True)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--lags", type=int, default=8)
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("inspect-hierarchy", help="dump the hierarchy at one timestep")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("-d", "--dataset", required=True)
    p.add_argument("-t", "--timestep", type=int, required=True)
    p.set_defaults(func=_cmd_inspect_hierarchy)

    p = sub.add_parser("report", help="print the metrics table of a run directory")
    p.add_argument("-i", "--input", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TmgnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
