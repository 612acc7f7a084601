"""Command-line interface.

Subcommands:

* ``train``          fit a feature pipeline and SVM on a labeled corpus
* ``eval``           score a saved model against a labeled corpus
* ``ablate``         train and evaluate one model per feature preset
* ``predict``        classify posts with a saved model (TSV to stdout)
* ``stats``          label distribution of a corpus
* ``gen-synthetic``  write a synthetic train/test corpus pair

Exit codes: 0 on success, 2 for expected failures (bad arguments, unreadable
files, corrupt models, fingerprint mismatches), 1 for unexpected errors.
"""

import argparse
import json
import sys
import traceback
from dataclasses import replace
from pathlib import Path

from .classify import TrainConfig, grid_search, predict_batch, train_svm
from .corpus import LABELS, corpus_stats, load_posts, save_posts
from .errors import TriageError
from .evaluate import (
    ablation_run,
    evaluate_predictions,
    format_ablation_table,
    format_report,
)
from .features import (
    ABLATION_PRESETS,
    FeatureConfig,
    FeaturePipeline,
    PRESET_NAMES,
    load_embeddings,
    preset_config,
)
from .lexicons import bundled_lexicon_manifest, load_lexicon_bundle
from .model_io import load_model, save_model
from .synth import generate_split


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _load_bundle(args):
    return load_lexicon_bundle(args.lexicons)


def _load_embeddings(args):
    return load_embeddings(args.embeddings) if args.embeddings else None


def _add_lexicon_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--lexicons",
        default=str(bundled_lexicon_manifest()),
        help="lexicon bundle manifest (default: the bundled lexicons)",
    )
    parser.add_argument(
        "--embeddings",
        default=None,
        help="optional word embedding table (text format: 'count dim' header)",
    )


def _add_train_config_args(parser: argparse.ArgumentParser) -> None:
    # defaults are None so a config file can fill unset flags; the real
    # defaults live in TrainConfig
    parser.add_argument("--C", type=float, default=None, help="inverse regularization strength")
    parser.add_argument("--penalty", choices=("l1", "l2"), default=None)
    parser.add_argument("--class-weight", choices=("uniform", "balanced"), default=None)
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--step-floor", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)


def _train_config(args, file_train: dict | None = None) -> TrainConfig:
    """Resolve TrainConfig fields: explicit flag > config file > default."""
    file_train = file_train or {}
    values = dict(TrainConfig().to_dict())
    for key in values:
        if key in file_train:
            values[key] = file_train[key]
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return TrainConfig.from_dict(values)


def _parse_grid(text: str) -> dict[str, list]:
    """Parse 'C=0.01,0.1,1;class_weight=uniform,balanced' into a grid dict."""
    grid: dict[str, list] = {}
    for clause in text.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        name, _, values = clause.partition("=")
        name = name.strip()
        if not name or not values:
            raise TriageError(f"cannot parse grid clause {clause!r}")
        parsed = []
        for raw in values.split(","):
            raw = raw.strip()
            try:
                parsed.append(int(raw))
            except ValueError:
                try:
                    parsed.append(float(raw))
                except ValueError:
                    parsed.append(raw)
        grid[name] = parsed
    if not grid:
        raise TriageError(f"grid {text!r} holds no parameters")
    return grid


def _labels_of(posts):
    return [post.label for post in posts]


# ---------------------------------------------------------------------------
# Subcommand implementations


def _read_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TriageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise TriageError(f"config file {path} must hold a JSON object")
    return data


def _cmd_train(args) -> int:
    file_cfg = _read_config_file(args.config) if args.config else {}
    posts = load_posts(args.train)
    lexicons = _load_bundle(args)
    embeddings = _load_embeddings(args)
    # feature config: explicit --preset > config-file features dict > file preset
    preset = args.preset
    if preset is None and "features" in file_cfg:
        config = FeatureConfig.from_dict(file_cfg["features"])
        preset = file_cfg.get("preset", "custom")
    else:
        preset = preset or file_cfg.get("preset", "full")
        config = preset_config(preset, with_embeddings=embeddings is not None)
    pipeline = FeaturePipeline(config, lexicons=lexicons, embeddings=embeddings)
    X = pipeline.fit_transform(posts)
    y = _labels_of(posts)
    base = _train_config(args, file_cfg.get("train"))
    grid_result = None
    final_config = base
    grid_text = args.grid or file_cfg.get("grid")
    if grid_text:
        folds = args.folds if args.folds is not None else file_cfg.get("folds", 5)
        grid_result = grid_search(
            X, y, _parse_grid(grid_text), model_kind="svm",
            k_folds=folds, seed=base.seed, base_config=base,
        )
        final_config = replace(base, **grid_result.best_params)
    model = train_svm(X, y, final_config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(out / "model.json", pipeline, model)
    train_log = {
        "n_train": len(posts),
        "dim": pipeline.dim,
        "label_order": [str(label) for label in LABELS],
        "objectives": list(model.objectives),
        "steps_run": list(model.steps_run),
        "grid": grid_result.to_dict() if grid_result else None,
    }
    (out / "train_log.json").write_text(_json_text(train_log), encoding="utf-8")
    run_config = {
        "preset": preset,
        "features": config.to_dict(),
        "train": final_config.to_dict(),
        "corpus": str(args.train),
        "n_posts": len(posts),
        "lexicons": [{"name": lex.name, "digest": lex.digest} for lex in lexicons],
        "embeddings": embeddings.digest if embeddings else None,
    }
    (out / "run_config.json").write_text(_json_text(run_config), encoding="utf-8")

    print(f"trained on {len(posts)} posts, {pipeline.dim} features")
    if grid_result:
        print(f"grid best: {grid_result.best_params} (score {grid_result.best_score:.4f})")
    print(f"wrote {out / 'model.json'}")
    return 0


def _cmd_eval(args) -> int:
    lexicons = _load_bundle(args)
    embeddings = _load_embeddings(args)
    pipeline, model = load_model(args.model, lexicons=lexicons, embeddings=embeddings)
    posts = load_posts(args.test)
    predictions = predict_batch(model, pipeline.matrix(posts), [p.post_id for p in posts])
    report = evaluate_predictions(_labels_of(posts), predictions)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval_report.json").write_text(_json_text(report.to_dict()), encoding="utf-8")
        (out / "eval_report.txt").write_text(format_report(report) + "\n", encoding="utf-8")
    print(f"macro_f1_non_green {report.macro_f1_non_green:.4f}")
    print(f"flagged_f1 {report.flagged_f1:.4f}")
    print(f"urgent_f1 {report.urgent_f1:.4f}")
    print(f"crisis_f1 {report.crisis_f1:.4f}")
    return 0


def _cmd_ablate(args) -> int:
    train_posts = load_posts(args.train)
    test_posts = load_posts(args.test)
    lexicons = _load_bundle(args)
    embeddings = _load_embeddings(args)
    rows = args.rows.split(",") if args.rows else list(ABLATION_PRESETS)
    table = ablation_run(
        train_posts,
        test_posts,
        lexicons,
        rows=rows,
        embeddings=embeddings,
        train_config=_train_config(args),
    )
    text = format_ablation_table(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.json").write_text(_json_text(table), encoding="utf-8")
        (out / "ablation.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_predict(args) -> int:
    lexicons = _load_bundle(args)
    embeddings = _load_embeddings(args)
    pipeline, model = load_model(args.model, lexicons=lexicons, embeddings=embeddings)
    posts = load_posts(args.infile)
    predictions = predict_batch(model, pipeline.matrix(posts), [p.post_id for p in posts])
    lines = []
    for pred in predictions:
        scores = "\t".join(f"{pred.scores[label]:.6f}" for label in LABELS)
        lines.append(f"{pred.post_id}\t{pred.label}\t{scores}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_stats(args) -> int:
    posts = load_posts(args.infile)
    stats = corpus_stats(posts)
    print("label    count  percent")
    for label in reversed(LABELS):
        count = stats.counts[label]
        print(f"{label!s:<8} {count:>5}  {stats.percentages[label]:>6.2f}%")
    print(f"total    {stats.total:>5}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    train, test = generate_split(args.train_size, args.test_size, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_posts(out / "train.jsonl", train)
    save_posts(out / "test.jsonl", test)
    print(f"wrote {len(train)} posts to {out / 'train.jsonl'}")
    print(f"wrote {len(test)} posts to {out / 'test.jsonl'}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triagetext",
        description="Severity triage for support-forum posts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a feature pipeline and SVM on a labeled corpus")
    p.add_argument("--train", required=True, help="labeled corpus (.jsonl or .csv)")
    p.add_argument("--out", required=True, help="output directory for model and logs")
    p.add_argument("--preset", choices=PRESET_NAMES, default=None)
    p.add_argument(
        "--config",
        default=None,
        help="JSON config (e.g. a previous run_config.json); explicit flags override it",
    )
    p.add_argument(
        "--grid",
        default=None,
        help="SVM grid search, e.g. 'C=0.01,0.1,1;class_weight=uniform,balanced'",
    )
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds for --grid (default 5)")
    _add_lexicon_args(p)
    _add_train_config_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a saved model against a labeled corpus")
    p.add_argument("--model", required=True, help="model.json written by train")
    p.add_argument("--test", required=True, help="labeled corpus (.jsonl or .csv)")
    p.add_argument("--out", default=None, help="directory for eval_report.json/.txt")
    _add_lexicon_args(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="train and evaluate one model per feature preset")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--rows", default=None, help=f"comma-separated presets (default: {','.join(ABLATION_PRESETS)})")
    p.add_argument("--out", default=None, help="directory for ablation.json/.txt")
    _add_lexicon_args(p)
    _add_train_config_args(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("predict", help="classify posts; TSV of id, label, per-label scores")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="posts to classify (label optional)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    _add_lexicon_args(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("stats", help="label distribution of a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("gen-synthetic", help="write a synthetic train/test corpus pair")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--train-size", type=int, default=1200)
    p.add_argument("--test-size", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args) or 0
    except TriageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
