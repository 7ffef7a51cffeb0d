"""Command-line entry point: ``cbcfuzzy {gen,label,train,eval,predict,kb}``.

Exit codes: 0 success, 1 data or model error, 2 usage error.  Every option
can also come from ``--config FILE.json`` (keys are option names with
underscores); explicit flags win over the file, the file over built-in
defaults.
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .dataset import FEATURES, MODES, dumps_csv, generate_synthetic, load_csv
from .errors import CbcFuzzyError
from .inference import dumps_rules
from .knowledge import DEFAULT_TAU, DiseaseClass, load_knowledge
from .membership import FAMILIES, dumps_variables
from .metrics import FORMATS, ConfusionMatrix, reference_matrix, render, report
from .pipeline import Model, PipelineConfig, evaluate, label_records, predict_one, train

DEFAULTS = {
    "n_per_class": 100,
    "mode": "core",
    "seed": 0,
    "tau": DEFAULT_TAU,
    "family": "trapezoidal",
    "delta": [],
    "test_fraction": 0.3,
    "iqr_k": 1.5,
    "n_estimators": 100,
    "max_depth": 6,
    "features_per_split": None,
    "min_samples_split": 2,
    "format": "text",
}


def _delta(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip().upper(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta value in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with option defaults")

    fuzzy = argparse.ArgumentParser(add_help=False)
    fuzzy.add_argument("--tau", type=float, help="ambiguity threshold (default 0.5)")
    fuzzy.add_argument("--family", choices=FAMILIES, help="membership family (default trapezoidal)")
    fuzzy.add_argument(
        "--delta", type=_delta, action="append", metavar="NAME=VALUE",
        help="transition half-width override, e.g. --delta PLT=30",
    )
    fuzzy.add_argument("--variables", help="linguistic-variable JSON (default: built-in)")
    fuzzy.add_argument("--rules", help="rule-base JSON (default: built-in)")

    parser = argparse.ArgumentParser(prog="cbcfuzzy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write synthetic CBC records")
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output CSV ('-' for stdout)")

    p = sub.add_parser("label", parents=[common, fuzzy], help="append fuzzy labels to a CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="labelled CSV ('-' for stdout)")

    p = sub.add_parser("train", parents=[common], help="preprocess and fit the forest")
    p.add_argument("--in", dest="input", required=True, help="labelled CSV")
    p.add_argument("--model", required=True, help="model JSON to write")
    p.add_argument("--test-out", help="held-out rows CSV (default: <model>.test.csv)")
    p.add_argument("--train-out", help="training-partition rows CSV (default: <model>.train.csv)")
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--iqr-k", type=float)
    p.add_argument("--n-estimators", type=int)
    p.add_argument("--max-depth", type=int, help="0 for unbounded (default 6)")
    p.add_argument("--features-per-split", type=int)
    p.add_argument("--min-samples-split", type=int)
    p.add_argument("--format", choices=FORMATS)

    p = sub.add_parser("eval", parents=[common], help="evaluate a model or a stored confusion matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="labelled CSV to score")
    src.add_argument(
        "--from-confusion", help="confusion-matrix CSV to report on ('reference' for the bundled matrix)"
    )
    p.add_argument("--model")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("predict", parents=[common, fuzzy], help="classify one sample")
    for name in ("wbc", "hgb", "hct", "plt", "age"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--model")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("kb", parents=[common, fuzzy], help="export the knowledge base as editable JSON")
    p.add_argument("--out-dir", required=True, help="directory for variables.json and rules.json")
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CbcFuzzyError(f"cannot read config {args.config}: {exc}") from None
        config = {k.replace("-", "_"): v for k, v in config.items()}
    for key, default in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, config.get(key, default))
    if hasattr(args, "delta"):
        items = args.delta.items() if isinstance(args.delta, dict) else args.delta
        args.delta = {k.upper(): float(v) for k, v in items}
    return args


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _read(path):
    return None if path is None else Path(path).read_text(encoding="utf-8")


def _rule_base(args):
    return load_knowledge(_read(args.variables), _read(args.rules), args.family, args.delta)


def cmd_gen(args) -> int:
    records = generate_synthetic(args.n_per_class, args.mode, args.seed)
    _emit(dumps_csv(records), args.out)
    return 0


def cmd_label(args) -> int:
    rb = _rule_base(args)
    labeled = label_records(load_csv(args.input), args.tau, rb)
    _emit(dumps_csv(labeled, labeled=True), args.out)
    counts = Counter(r.label for r in labeled if r.label is not None)
    stream = sys.stderr if args.out == "-" else sys.stdout
    print(f"labelled {len(labeled)} records", file=stream)
    for cls in DiseaseClass:
        print(f"  {cls.short:<20} {counts.get(cls, 0):>7}", file=stream)
    unlabeled = sum(r.label is None for r in labeled)
    if unlabeled:
        print(f"  {'(incomplete)':<20} {unlabeled:>7}", file=stream)
    return 0


def cmd_train(args) -> int:
    config = PipelineConfig(
        test_fraction=args.test_fraction,
        iqr_k=args.iqr_k,
        n_estimators=args.n_estimators,
        max_depth=args.max_depth or None,
        features_per_split=args.features_per_split,
        min_samples_split=args.min_samples_split,
        seed=args.seed,
    )
    result = train(load_csv(args.input), config)
    model_path = Path(args.model)
    result.model.save(model_path)
    stem = model_path.with_suffix("")
    test_out = args.test_out or f"{stem}.test.csv"
    train_out = args.train_out or f"{stem}.train.csv"
    Path(test_out).write_text(dumps_csv(result.test_records, labeled=True), encoding="utf-8")
    Path(train_out).write_text(dumps_csv(result.train_records, labeled=True), encoding="utf-8")
    sys.stdout.write(render(result.report, args.format))
    if args.format == "text":
        print(f"trained on {len(result.balanced)} samples after oversampling; "
              f"{len(result.test_records)} rows held out -> {test_out}")
        for name, w in zip(FEATURES, result.model.forest.feature_importance()):
            print(f"  importance {name:<4} {w:.4f}")
    return 0


def cmd_eval(args) -> int:
    if args.from_confusion:
        if args.from_confusion == "reference":
            rep = report(reference_matrix())
        else:
            rep = report(ConfusionMatrix.from_csv(args.from_confusion))
    else:
        if not args.model:
            raise CbcFuzzyError("--model is required with --in")
        rep = evaluate(Model.load(args.model), load_csv(args.input))
    _emit(render(rep, args.format), args.out)
    return 0


def cmd_predict(args) -> int:
    model = Model.load(args.model) if args.model else None
    rb = _rule_base(args)
    values = {"WBC": args.wbc, "HGB": args.hgb, "HCT": args.hct, "PLT": args.plt, "Age": args.age}
    out = predict_one(values, model, args.tau, rb)
    if args.json:
        print(json.dumps(out, indent=2))
        return 0
    centroid = "n/a" if out["centroid"] is None else f"{out['centroid']:.4f}"
    print(f"fuzzy label: {out['fuzzy_label']} (max activation {out['max_activation']:.4f}, centroid {centroid})")
    for name, v in out["activations"].items():
        if v > 0:
            print(f"  activation {name}: {v:.4f}")
    if model is not None:
        print(f"model label: {out['model_label']}")
        for name, p in sorted(out["probabilities"].items(), key=lambda kv: -kv[1]):
            if p > 0:
                print(f"  probability {name}: {p:.4f}")
    return 0


def cmd_kb(args) -> int:
    rb = _rule_base(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "variables.json").write_text(dumps_variables(list(rb.variables.values())), encoding="utf-8")
    (out / "rules.json").write_text(dumps_rules(rb), encoding="utf-8")
    print(f"wrote {out / 'variables.json'} and {out / 'rules.json'}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "label": cmd_label,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "kb": cmd_kb,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        return COMMANDS[args.command](args)
    except (CbcFuzzyError, OSError) as exc:
        print(f"cbcfuzzy {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
