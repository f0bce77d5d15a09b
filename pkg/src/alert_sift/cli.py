"""Command-line orchestrator for the alert-filtering pipeline.

Subcommands chain through files: synth or ingest produces normalized
NDJSON, label attaches 1/0 labels from rule comments, sample dedups and
optionally splits by date, encode emits a feature-matrix CSV, and the
model stages (select, train, evaluate, explain, predict) operate on that
CSV plus a JSON model file.

Option precedence is flags > config file > built-in defaults; the config
file is JSON keyed by the long flag names with dashes as underscores.
Every run prints a one-line summary on success and exits nonzero with a
diagnostic on failure. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable

import numpy as np

from . import __version__
from .errors import AlertSiftError
from .evaluation import (
    cross_validate,
    evaluate_forest,
    workload_savings,
)
from .features import (
    FeatureProfile,
    ScalingCaps,
    chi2_select,
    encode_alert,
    feature_names,
    load_caps,
    read_matrix_csv,
    write_matrix_csv,
)
from .forest import (
    MODEL_FORMAT_VERSION,
    ForestParams,
    load_forest,
    predict_proba_batch,
    save_forest,
    train_forest,
)
from .ingest import (
    alert_to_record,
    attach_comments,
    load_field_map,
    parse_alert_record,
    parse_timestamp,
    read_corpus,
    read_rule_comments,
)
from .labeling import (
    KeywordConfig,
    LabeledAlert,
    build_label_lists,
    label_corpus,
    load_keyword_config,
    write_label_lists,
)
from .sampling import SampleParams, dedup_sample, partition_by_period
from .synth import (
    SynthSpec,
    generate_corpus,
    write_alerts,
    write_comments,
    write_truth,
)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise AlertSiftError(f"config file {path} must hold a JSON object")
    return obj


class _Options:
    """Resolved option lookup: CLI flag, then config key, then default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def get(self, name: str, default):
        value = getattr(self._args, name, None)
        if value is not None:
            return value
        if name in self._config:
            return self._config[name]
        return default


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _read_labeled(path: str) -> list[LabeledAlert]:
    """Read normalized NDJSON that carries a top-level label field."""
    out: list[LabeledAlert] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            obj = json.loads(text)
            if "label" not in obj:
                raise AlertSiftError(f"{path} line {line_no}: missing label field")
            alert = parse_alert_record(text)
            out.append(LabeledAlert(alert=alert, label=int(obj["label"])))
    return out


def _write_labeled(path: str, labeled: list[LabeledAlert]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in labeled:
            record = alert_to_record(item.alert)
            record["label"] = item.label
            fh.write(json.dumps(record, sort_keys=True))
            fh.write("\n")


def _profile(opt: _Options) -> FeatureProfile:
    name = opt.get("profile", "core20")
    try:
        return FeatureProfile(name)
    except ValueError:
        raise AlertSiftError(f"unknown profile {name!r} (expected core20 or full29)") from None


def cmd_synth(opt: _Options) -> str:
    spec = SynthSpec(
        n_tp=int(opt.get("n_tp", 982)),
        n_fp=int(opt.get("n_fp", 1126)),
        n_rules=int(opt.get("n_rules", 200)),
        duplication_factor=int(opt.get("dup", 50)),
        signal_strength=float(opt.get("signal", 0.9)),
        seed=int(opt.get("seed", 42)),
    )
    out = opt.get("out", "alerts.ndjson")
    comments = opt.get("comments", "rule_comments.csv")
    truth = opt.get("truth", "ground_truth.csv")
    corpus = generate_corpus(spec)
    with open(out, "w", encoding="utf-8") as fh:
        write_alerts(corpus, fh)
    with open(comments, "w", encoding="utf-8") as fh:
        write_comments(corpus, fh)
    with open(truth, "w", encoding="utf-8") as fh:
        write_truth(corpus, fh)
    return (
        f"synth: wrote {len(corpus.alerts)} alerts over {len(corpus.comments)} rules "
        f"to {out} (comments {comments}, truth {truth})"
    )


def cmd_ingest(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("ingest needs --in")
    out = opt.get("out", "parsed.ndjson")
    fmap = None
    fmap_path = opt.get("field_map", None)
    if fmap_path:
        with open(fmap_path, encoding="utf-8") as fh:
            fmap = load_field_map(fh)
    with open(src, encoding="utf-8") as fh:
        alerts, report = read_corpus(fh, fmap)
    sidecar = opt.get("comments", None)
    if sidecar:
        with open(sidecar, encoding="utf-8") as fh:
            alerts = attach_comments(alerts, read_rule_comments(fh))
    if report.accepted == 0 and report.rejected > 0:
        first = report.rejection_reasons[0]
        raise AlertSiftError(
            f"all {report.rejected} records rejected; first: line {first[0]}: {first[1]}"
        )
    with open(out, "w", encoding="utf-8") as fh:
        for alert in alerts:
            fh.write(json.dumps(alert_to_record(alert), sort_keys=True))
            fh.write("\n")
    return f"ingest: accepted {report.accepted}, rejected {report.rejected} -> {out}"


def _keyword_config(opt: _Options) -> KeywordConfig:
    path = opt.get("keywords", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            return load_keyword_config(fh)
    return KeywordConfig()


def cmd_label(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("label needs --in")
    out = opt.get("out", "labeled.ndjson")
    cfg = _keyword_config(opt)
    with open(src, encoding="utf-8") as fh:
        alerts, report = read_corpus(fh)
    if report.rejected:
        first = report.rejection_reasons[0]
        raise AlertSiftError(f"{src} line {first[0]}: {first[1]}")
    sidecar = opt.get("comments", None)
    if sidecar:
        with open(sidecar, encoding="utf-8") as fh:
            rules = read_rule_comments(fh)
        alerts = attach_comments(alerts, rules)
    else:
        seen: dict[str, str] = {}
        for alert in alerts:
            if alert.rev_comment and alert.rule_uuid not in seen:
                seen[alert.rule_uuid] = alert.rev_comment
        rules = list(seen.items())
    tp_list, fp_list = build_label_lists(rules, cfg)
    labeled = label_corpus(alerts, tp_list, fp_list)
    _write_labeled(out, labeled)
    lists_path = opt.get("lists", None)
    if lists_path:
        with open(lists_path, "w", encoding="utf-8") as fh:
            write_label_lists(tp_list, fp_list, fh)
    n_tp = sum(1 for x in labeled if x.label == 1)
    dropped = len(alerts) - len(labeled)
    return (
        f"label: {len(labeled)} labeled ({n_tp} tp, {len(labeled) - n_tp} fp), "
        f"{dropped} dropped -> {out}"
    )


def cmd_sample(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("sample needs --in")
    params = SampleParams(
        stride=int(opt.get("stride", 100)),
        per_rule_cap=int(opt.get("per_rule_cap", 10)),
    )
    labeled = _read_labeled(src)
    kept = dedup_sample(labeled, params)
    split_date = opt.get("split_date", None)
    if split_date:
        instant = parse_timestamp(split_date)
        train, test = partition_by_period(kept, instant)
        train_out = opt.get("train_out", "train.ndjson")
        test_out = opt.get("test_out", "test.ndjson")
        _write_labeled(train_out, train)
        _write_labeled(test_out, test)
        return (
            f"sample: kept {len(kept)} of {len(labeled)} "
            f"(train {len(train)} -> {train_out}, test {len(test)} -> {test_out})"
        )
    out = opt.get("out", "sampled.ndjson")
    _write_labeled(out, kept)
    return f"sample: kept {len(kept)} of {len(labeled)} -> {out}"


def cmd_encode(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("encode needs --in")
    out = opt.get("out", "matrix.csv")
    profile = _profile(opt)
    caps_path = opt.get("caps", None)
    caps = ScalingCaps()
    if caps_path:
        with open(caps_path, encoding="utf-8") as fh:
            caps = load_caps(fh)
    labeled = _read_labeled(src)
    vectors = [encode_alert(item.alert, profile, caps) for item in labeled]
    labels = [item.label for item in labeled]
    with open(out, "w", encoding="utf-8") as fh:
        write_matrix_csv(fh, vectors, labels, feature_names(profile))
    return f"encode: {len(vectors)} rows x {profile.width} features -> {out}"


def cmd_select(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("select needs --in")
    out = opt.get("out", "selection.json")
    k = int(opt.get("k", 20))
    with open(src, encoding="utf-8") as fh:
        X, labels, names = read_matrix_csv(fh)
    if labels is None:
        raise AlertSiftError(f"{src} has no label column; run encode on labeled input")
    # missing-counter sentinels (-1.0) carry no frequency mass
    result = chi2_select(np.where(X < 0, 0.0, X), labels, k)
    _write_json(
        out,
        {
            "k": k,
            "scores": {names[j]: result.chi2_scores[j] for j in range(len(names))},
            "selected_indices": result.selected_indices,
            "selected_features": [names[j] for j in result.selected_indices],
        },
    )
    reduced = opt.get("matrix_out", None)
    if reduced:
        keep = result.selected_indices
        with open(reduced, "w", encoding="utf-8") as fh:
            write_matrix_csv(fh, X[:, keep], labels, [names[j] for j in keep])
    return f"select: top {len(result.selected_indices)} of {len(names)} by chi2 -> {out}"


def cmd_train(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("train needs --in")
    model_path = opt.get("model", "model.json")
    params = ForestParams(
        n_estimators=int(opt.get("trees", 100)),
        max_depth=int(opt.get("depth", 6)),
        min_samples_split=int(opt.get("min_split", 2)),
        seed=int(opt.get("seed", 42)),
    )
    with open(src, encoding="utf-8") as fh:
        X, labels, names = read_matrix_csv(fh)
    if labels is None:
        raise AlertSiftError(f"{src} has no label column; run encode on labeled input")
    forest = train_forest(X, labels, params, feature_names=names)
    with open(model_path, "w", encoding="utf-8") as fh:
        save_forest(forest, fh)
    return (
        f"train: trained {params.n_estimators} trees, depth<={params.max_depth} "
        f"on {X.shape[0]} samples -> {model_path}"
    )


def cmd_evaluate(opt: _Options) -> str:
    src = opt.get("input", None)
    if src is None:
        raise AlertSiftError("evaluate needs --in")
    report_path = opt.get("report", "report.json")
    threshold = float(opt.get("threshold", 0.5))
    minutes = float(opt.get("minutes_per_alert", 4.0))
    kfold = opt.get("kfold", None)
    model_path = opt.get("model", None)
    if model_path is None and kfold is None:
        raise AlertSiftError("evaluate needs --model, --kfold, or both")
    with open(src, encoding="utf-8") as fh:
        X, labels, _ = read_matrix_csv(fh)
    if labels is None:
        raise AlertSiftError(f"{src} has no label column")

    report: dict = {
        "confusion": None,
        "metrics": None,
        "savings_hours": None,
        "per_fold": None,
        "mean": None,
        "variance": None,
    }
    summary_bits = []
    params = ForestParams(seed=int(opt.get("seed", 42)))
    if model_path:
        with open(model_path, encoding="utf-8") as fh:
            forest = load_forest(fh)
        params = forest.params
        cm, rep = evaluate_forest(forest, X, labels, threshold)
        savings = workload_savings(cm.fp_as_fp, minutes)
        report["confusion"] = {
            "tp_as_tp": cm.tp_as_tp,
            "tp_as_fp": cm.tp_as_fp,
            "fp_as_fp": cm.fp_as_fp,
            "fp_as_tp": cm.fp_as_tp,
        }
        report["metrics"] = {
            "tp_precision": rep.tp_precision,
            "tp_recall": rep.tp_recall,
            "fp_precision": rep.fp_precision,
            "fp_recall": rep.fp_recall,
            "accuracy": rep.accuracy,
        }
        report["savings_hours"] = savings
        acc = "n/a" if rep.accuracy is None else f"{rep.accuracy:.3f}"
        rec = "n/a" if rep.tp_recall is None else f"{rep.tp_recall:.3f}"
        summary_bits.append(f"accuracy {acc}, tp_recall {rec}, savings {savings:.1f}h")
    if kfold is not None:
        cv = cross_validate(X, labels, params, k=int(kfold), seed=params.seed, threshold=threshold)
        report["per_fold"] = [
            {
                "tp_precision": r.tp_precision,
                "tp_recall": r.tp_recall,
                "fp_precision": r.fp_precision,
                "fp_recall": r.fp_recall,
                "accuracy": r.accuracy,
            }
            for r in cv.reports
        ]
        report["mean"] = cv.mean_accuracy
        report["variance"] = cv.accuracy_variance
        summary_bits.append(
            f"{int(kfold)}-fold mean {cv.mean_accuracy:.3f} var {cv.accuracy_variance:.5f}"
        )
    _write_json(report_path, report)
    summary_path = opt.get("summary", None)
    if summary_path:
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write("metric,value\n")
            if report["metrics"]:
                for key, value in report["metrics"].items():
                    fh.write(f"{key},{'' if value is None else repr(float(value))}\n")
            if report["savings_hours"] is not None:
                fh.write(f"savings_hours,{report['savings_hours']!r}\n")
            if report["mean"] is not None:
                fh.write(f"kfold_mean_accuracy,{report['mean']!r}\n")
                fh.write(f"kfold_accuracy_variance,{report['variance']!r}\n")
    return f"evaluate: {'; '.join(summary_bits)} -> {report_path}"


def cmd_explain(opt: _Options) -> str:
    from .attribution import global_importance, tree_shap

    src = opt.get("input", None)
    model_path = opt.get("model", None)
    if src is None or model_path is None:
        raise AlertSiftError("explain needs --in and --model")
    out = opt.get("out", "importance.csv")
    with open(model_path, encoding="utf-8") as fh:
        forest = load_forest(fh)
    with open(src, encoding="utf-8") as fh:
        X, _, names = read_matrix_csv(fh)
    if X.shape[0] == 0:
        raise AlertSiftError(f"{src} has no rows to explain")
    if X.shape[1] != forest.width:
        raise AlertSiftError(
            f"{src} has {X.shape[1]} features but the model expects {forest.width}"
        )
    ranking = global_importance(forest, X)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("feature,mean_abs_shap\n")
        for name, score in ranking:
            fh.write(f"{name},{score!r}\n")
    row = opt.get("row", None)
    if row is not None:
        row = int(row)
        if not 0 <= row < X.shape[0]:
            raise AlertSiftError(f"--row {row} out of range for {X.shape[0]} rows")
        att = tree_shap(forest, X[row])
        _write_json(
            opt.get("attribution_out", "attribution.json"),
            {
                "row": row,
                "base_value": att.base_value,
                "phi": {forest.feature_names[j]: att.phi[j] for j in range(forest.width)},
                "prediction": att.total,
            },
        )
    return f"explain: ranked {len(ranking)} features over {X.shape[0]} rows -> {out}"


def cmd_predict(opt: _Options) -> str:
    src = opt.get("input", None)
    model_path = opt.get("model", None)
    if src is None or model_path is None:
        raise AlertSiftError("predict needs --in and --model")
    out = opt.get("out", "predictions.csv")
    threshold = float(opt.get("threshold", 0.5))
    if not 0.0 < threshold < 1.0:
        raise AlertSiftError(f"threshold must be in (0, 1), got {threshold}")
    with open(model_path, encoding="utf-8") as fh:
        forest = load_forest(fh)
    with open(src, encoding="utf-8") as fh:
        X, _, _ = read_matrix_csv(fh)
    if X.shape[1] != forest.width:
        raise AlertSiftError(
            f"{src} has {X.shape[1]} features but the model expects {forest.width}"
        )
    proba = predict_proba_batch(forest, X)
    preds = (proba >= threshold).astype(int)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("row,proba,label\n")
        for i in range(X.shape[0]):
            fh.write(f"{i},{float(proba[i])!r},{int(preds[i])}\n")
    filtered = int((preds == 0).sum())
    return f"predict: {X.shape[0]} rows, {filtered} filtered as fp -> {out}"


_HANDLERS: dict[str, Callable[[_Options], str]] = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "label": cmd_label,
    "sample": cmd_sample,
    "encode": cmd_encode,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "predict": cmd_predict,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alert-sift",
        description="Filter false-positive IDS alerts with a weakly supervised decision forest.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"alert-sift {__version__} (model format {MODEL_FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="RNG seed (default 42)")
        return p

    p = add("synth", "generate a deterministic synthetic corpus")
    p.add_argument("--out", help="alerts NDJSON path (default alerts.ndjson)")
    p.add_argument("--comments", help="rule-comment sidecar CSV (default rule_comments.csv)")
    p.add_argument("--truth", help="ground-truth CSV (default ground_truth.csv)")
    p.add_argument("--n-tp", type=int, dest="n_tp", help="base TP alerts (default 982)")
    p.add_argument("--n-fp", type=int, dest="n_fp", help="base FP alerts (default 1126)")
    p.add_argument("--n-rules", type=int, dest="n_rules", help="rule count (default 200)")
    p.add_argument("--dup", type=int, help="duplication factor (default 50)")
    p.add_argument("--signal", type=float, help="signal strength in [0,1] (default 0.9)")

    p = add("ingest", "parse and validate an NDJSON alert log")
    p.add_argument("--in", dest="input", help="raw NDJSON alert log")
    p.add_argument("--out", help="normalized NDJSON output (default parsed.ndjson)")
    p.add_argument("--field-map", dest="field_map", help="field=json.path remap file")
    p.add_argument("--comments", help="rule-comment sidecar CSV to attach")

    p = add("label", "weak-label alerts from rule comments")
    p.add_argument("--in", dest="input", help="normalized NDJSON from ingest")
    p.add_argument("--out", help="labeled NDJSON output (default labeled.ndjson)")
    p.add_argument("--comments", help="rule-comment sidecar CSV")
    p.add_argument("--keywords", help="keyword config file (tp:/fp: stanzas)")
    p.add_argument("--lists", help="also write the label lists CSV here")

    p = add("sample", "dedup-sample and optionally split by date")
    p.add_argument("--in", dest="input", help="labeled NDJSON")
    p.add_argument("--out", help="sampled NDJSON output (default sampled.ndjson)")
    p.add_argument("--stride", type=int, help="keep every stride-th per rule (default 100)")
    p.add_argument(
        "--per-rule-cap", type=int, dest="per_rule_cap", help="max survivors per rule (default 10)"
    )
    p.add_argument("--split-date", dest="split_date", help="ISO timestamp; before=train, rest=test")
    p.add_argument("--train-out", dest="train_out", help="train split path (default train.ndjson)")
    p.add_argument("--test-out", dest="test_out", help="test split path (default test.ndjson)")

    p = add("encode", "encode labeled alerts into the feature matrix CSV")
    p.add_argument("--in", dest="input", help="labeled NDJSON")
    p.add_argument("--out", help="matrix CSV output (default matrix.csv)")
    p.add_argument("--profile", help="core20 or full29 (default core20)")
    p.add_argument("--caps", help="scaling-caps file (name=value lines)")

    p = add("select", "rank features by chi-squared score")
    p.add_argument("--in", dest="input", help="labeled matrix CSV")
    p.add_argument("--out", help="selection JSON output (default selection.json)")
    p.add_argument("--k", type=int, help="features to keep (default 20)")
    p.add_argument("--matrix-out", dest="matrix_out", help="also write the reduced matrix CSV")

    p = add("train", "train the bagged forest on a labeled matrix")
    p.add_argument("--in", dest="input", help="labeled matrix CSV")
    p.add_argument("--model", help="model JSON output (default model.json)")
    p.add_argument("--trees", type=int, help="tree count (default 100)")
    p.add_argument("--depth", type=int, help="max depth (default 6)")
    p.add_argument("--min-split", type=int, dest="min_split", help="min samples to split (default 2)")

    p = add("evaluate", "holdout and/or k-fold evaluation")
    p.add_argument("--in", dest="input", help="labeled matrix CSV")
    p.add_argument("--model", help="trained model JSON (holdout evaluation)")
    p.add_argument("--kfold", type=int, help="also cross-validate with this many folds")
    p.add_argument("--threshold", type=float, help="TP decision threshold (default 0.5)")
    p.add_argument(
        "--minutes-per-alert",
        type=float,
        dest="minutes_per_alert",
        help="analyst minutes per reviewed alert (default 4.0)",
    )
    p.add_argument("--report", help="report JSON output (default report.json)")
    p.add_argument("--summary", help="also write a metric,value CSV here")

    p = add("explain", "per-feature attribution and global importance")
    p.add_argument("--in", dest="input", help="matrix CSV")
    p.add_argument("--model", help="trained model JSON")
    p.add_argument("--out", help="importance CSV output (default importance.csv)")
    p.add_argument("--row", type=int, help="also attribute this row to JSON")
    p.add_argument(
        "--attribution-out",
        dest="attribution_out",
        help="per-row attribution JSON path (default attribution.json)",
    )

    p = add("predict", "score a matrix with a trained model")
    p.add_argument("--in", dest="input", help="matrix CSV")
    p.add_argument("--model", help="trained model JSON")
    p.add_argument("--out", help="predictions CSV output (default predictions.csv)")
    p.add_argument("--threshold", type=float, help="TP decision threshold (default 0.5)")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        opt = _Options(args, config)
        summary = _HANDLERS[args.command](opt)
    except AlertSiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON input: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
