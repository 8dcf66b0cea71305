"""Command-line pipeline: synth -> embed -> features -> tune -> importance.

Commands communicate only through files with versioned headers, so any
stage can be rerun in isolation.  Every stage validates the kind,
version, and window metadata of its inputs before doing work.  Exit
codes: 0 ok, 1 user error (bad inputs, missing files, validation),
2 internal error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from sessionseg import baseline as baseline_mod
from sessionseg import corpus as corpus_mod
from sessionseg import features as features_mod
from sessionseg import report as report_mod
from sessionseg import synth as synth_mod
from sessionseg.behavior import (
    SgnsConfig,
    load_table,
    save_table,
    train_behavior_embeddings_with_report,
)
from sessionseg.explain import aggregate_importance, linear_shap, tree_shap
from sessionseg.fileio import FileFormatError
from sessionseg.metrics import MetricError, evaluate_scores
from sessionseg.models import (
    GbdtConfig,
    LinearModelConfig,
    ModelError,
    SvmConfig,
    fit_gbdt,
    fit_logreg,
    fit_svm,
    load_model,
    save_model,
)
from sessionseg.models.serialize import check_feature_compat
from sessionseg.textembed import HashedNgramProvider, load_precomputed
from sessionseg.tuning import (
    TuningError,
    gbdt_leafwise_space,
    gbdt_levelwise_space,
    group_kfold,
    logreg_space,
    random_search,
    svm_space,
)

MODEL_KINDS = ("gbdt", "logreg", "svm")


class UserError(Exception):
    """Input problems the operator can fix; exits with code 1."""


@dataclass
class PipelineConfig:
    log: str = ""
    catalog: str = ""
    annotations: str = ""
    workdir: str = "work"
    w: int = 2
    model: str = "gbdt"
    trials: int = 50
    folds: int = 5
    seed: int = 0
    threshold: float = 0.5
    ratio: tuple[int, int] = (4, 1)
    embedding: SgnsConfig = field(default_factory=SgnsConfig)
    growth: str = "leaf"
    num_rounds: int = 100
    text_dim: int = 256
    text_vectors: str = ""
    price_mode: str = "smooth"
    service: dict = field(default_factory=dict)

    def workpath(self, name: str) -> Path:
        return Path(self.workdir) / name


def load_config(path: str | None, overrides: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UserError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UserError(f"config file {path} is not valid JSON: {exc}") from exc
        paths = doc.get("paths", {})
        cfg.log = paths.get("log", cfg.log)
        cfg.catalog = paths.get("catalog", cfg.catalog)
        cfg.annotations = paths.get("annotations", cfg.annotations)
        cfg.workdir = paths.get("workdir", cfg.workdir)
        for key in ("w", "model", "trials", "folds", "seed", "threshold",
                    "growth", "num_rounds", "price_mode"):
            if key in doc:
                setattr(cfg, key, doc[key])
        if "ratio" in doc:
            cfg.ratio = tuple(doc["ratio"])
        if "embedding" in doc:
            cfg.embedding = SgnsConfig(**doc["embedding"])
        text = doc.get("text", {})
        cfg.text_dim = text.get("dim", cfg.text_dim)
        cfg.text_vectors = text.get("vectors") or ""
        cfg.service = doc.get("service", {})
    for key in ("w", "model", "trials", "seed", "threshold"):
        value = getattr(overrides, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if cfg.model not in MODEL_KINDS:
        raise UserError(f"model must be one of {MODEL_KINDS}, got {cfg.model!r}")
    if cfg.w < 1:
        raise UserError(f"w must be >= 1, got {cfg.w}")
    return cfg


def _require(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not str(path) or not path.exists():
        raise UserError(f"{what} not found: {path or '(unset)'}")
    return path


def _providers(cfg: PipelineConfig):
    # one provider instance per field so caches and spaces stay separate
    if cfg.text_vectors:
        path = _require(cfg.text_vectors, "text vector file")
        return load_precomputed(path), load_precomputed(path)
    title = HashedNgramProvider(dim=cfg.text_dim, seed=cfg.seed)
    brand = HashedNgramProvider(dim=cfg.text_dim, seed=cfg.seed + 1)
    return title, brand


def _load_inputs(cfg: PipelineConfig):
    sessions = corpus_mod.read_session_log(_require(cfg.log, "session log"))
    catalog = corpus_mod.read_catalog(_require(cfg.catalog, "catalog"))
    by_id = {s.session_id: s for s in sessions}
    annotated = corpus_mod.read_annotations(
        _require(cfg.annotations, "annotations file"), by_id
    )
    return sessions, catalog, annotated


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    synth_cfg = synth_mod.SynthConfig(
        n_annotated=args.annotated,
        n_unlabeled=args.unlabeled,
        n_topics=args.topics,
        multi_segment_rate=args.multi_segment_rate,
        three_segment_rate=args.three_segment_rate,
        impulse_rate=args.impulse_rate,
        rare_rate=args.rare_rate,
        seed=args.seed if args.seed is not None else 0,
    )
    result = synth_mod.generate(synth_cfg)
    corpus_mod.write_session_log(out_dir / "log.jsonl", result.sessions)
    corpus_mod.write_catalog(out_dir / "catalog.jsonl", result.catalog)
    corpus_mod.write_annotations(out_dir / "annotations.jsonl", result.annotated)
    (out_dir / "synth_report.json").write_text(
        json.dumps(result.report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote corpus to {out_dir}")
    for key in sorted(result.report):
        print(f"  {key}: {result.report[key]}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    sessions = corpus_mod.read_session_log(_require(args.log, "session log"))
    stats = corpus_mod.corpus_stats(sessions)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_mod.write_table(
        out_dir / "corpus_stats.tsv",
        "corpus-stats",
        ["metric", "value"],
        [
            ["total_sessions", stats.total_sessions],
            ["total_items", stats.total_items],
            ["mean_length", stats.mean_length],
            ["std_length", stats.std_length],
            ["min_length", stats.min_length],
            ["median_length", stats.median_length],
            ["max_length", stats.max_length],
        ],
    )
    report_mod.plot_session_lengths(
        out_dir / "session_lengths.png", [len(s.items) for s in sessions]
    )
    print(
        f"{stats.total_sessions} sessions, {stats.total_items} items, "
        f"mean length {stats.mean_length:.2f}, max {stats.max_length}"
    )
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    sessions, _, annotated = _load_inputs(cfg)
    exclude = {a.session.session_id for a in annotated}
    table, train_report = train_behavior_embeddings_with_report(
        sessions, cfg.embedding, exclude
    )
    cfg.workpath("").mkdir(parents=True, exist_ok=True)
    out = cfg.workpath("embeddings.txt")
    save_table(table, out)
    report_path = cfg.workpath("embed_report.json")
    report_path.write_text(
        json.dumps(train_report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"trained {len(table)} vectors (dim {table.dim}) on "
        f"{train_report['sessions_used']} sessions "
        f"({train_report['sessions_excluded']} annotated ids excluded) -> {out}"
    )
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    _, catalog, annotated = _load_inputs(cfg)
    table = load_table(_require(cfg.workpath("embeddings.txt"), "embedding table"))
    title, brand = _providers(cfg)
    fcfg = features_mod.FeatureConfig(w=cfg.w, price_mode=cfg.price_mode)
    X, y, groups, keys = features_mod.build_dataset(
        annotated, fcfg, table, title, brand, catalog
    )
    out = cfg.workpath(f"features_w{cfg.w}.tsv")
    features_mod.save_dataset(out, X, y, keys, cfg.w)
    print(
        f"{X.shape[0]} rows x {X.shape[1]} features (w={cfg.w}), "
        f"positive rate {float(np.mean(y)):.4f} -> {out}"
    )
    return 0


def _trainer_for(cfg: PipelineConfig, w: int):
    metadata = {"w": w, "layout": features_mod.LAYOUT_VERSION, "model": cfg.model}
    if cfg.model == "gbdt":
        space = gbdt_leafwise_space() if cfg.growth == "leaf" else gbdt_levelwise_space()

        def train(params: dict, X: np.ndarray, y: np.ndarray):
            gcfg = GbdtConfig(
                learning_rate=params["learning_rate"],
                num_rounds=cfg.num_rounds,
                growth=cfg.growth,
                num_leaves=int(params.get("num_leaves", 31)),
                max_depth=int(params.get("max_depth", 6)),
                feature_fraction=params["feature_fraction"],
                bagging_fraction=params["bagging_fraction"],
                l2_lambda=params["l2_lambda"],
                min_hessian=params["min_hessian"],
                gamma=params.get("gamma", 0.0),
                seed=cfg.seed + 3,
            )
            return fit_gbdt(X, y, gcfg, metadata)

    elif cfg.model == "logreg":
        space = logreg_space()

        def train(params: dict, X: np.ndarray, y: np.ndarray):
            return fit_logreg(X, y, LinearModelConfig(C=params["C"]), metadata)

    else:
        space = svm_space()

        def train(params: dict, X: np.ndarray, y: np.ndarray):
            scfg = SvmConfig(C=params["C"], gamma=params["gamma"], seed=cfg.seed + 3)
            return fit_svm(X, y, scfg, metadata)

    return space, train


def _baseline_scores_for_rows(
    keys: Sequence[tuple[str, int]],
    rows: np.ndarray,
    sessions_by_id: dict,
    table,
) -> np.ndarray:
    per_session: dict[str, np.ndarray] = {}
    scores = np.empty(rows.shape[0])
    for out_idx, row in enumerate(rows):
        sid, gap = keys[row]
        if sid not in per_session:
            per_session[sid], _ = baseline_mod.baseline_scores(
                sessions_by_id[sid], table
            )
        scores[out_idx] = per_session[sid][gap]
    return scores


def cmd_tune(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    features_path = _require(
        cfg.workpath(f"features_w{cfg.w}.tsv"),
        f"feature dataset for w={cfg.w} (run the features command first)",
    )
    X, y, groups, keys, meta = features_mod.load_dataset(features_path)
    if int(meta["w"]) != cfg.w:
        raise UserError(f"feature file w={meta['w']} does not match requested w={cfg.w}")

    session_ids = list(dict.fromkeys(groups))
    if len(session_ids) < 2:
        raise UserError("need at least 2 sessions to split")
    order = list(range(len(session_ids)))
    random.Random(cfg.seed).shuffle(order)
    n_train = round(len(session_ids) * cfg.ratio[0] / sum(cfg.ratio))
    n_train = min(max(n_train, 1), len(session_ids) - 1)
    train_ids = {session_ids[i] for i in order[:n_train]}
    test_ids = [sid for sid in session_ids if sid not in train_ids]
    manifest = {
        "train": [sid for sid in session_ids if sid in train_ids],
        "test": test_ids,
    }
    cfg.workpath("").mkdir(parents=True, exist_ok=True)
    split_path = cfg.workpath(f"split_w{cfg.w}.json")
    split_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    group_arr = np.array(groups)
    train_mask = np.isin(group_arr, sorted(train_ids))
    train_rows = np.flatnonzero(train_mask)
    test_rows = np.flatnonzero(~train_mask)
    if np.unique(y[test_rows]).shape[0] < 2 or np.unique(y[train_rows]).shape[0] < 2:
        raise UserError("degenerate split: one side is single-class")

    folds = group_kfold([groups[i] for i in train_rows], cfg.folds, cfg.seed + 1)
    space, train = _trainer_for(cfg, cfg.w)
    search = random_search(
        space,
        cfg.trials,
        X[train_rows],
        y[train_rows],
        folds,
        train,
        seed=cfg.seed + 2,
        threshold=cfg.threshold,
    )

    trial_log = cfg.workpath(f"trials_{cfg.model}_w{cfg.w}.jsonl")
    with open(trial_log, "w", encoding="utf-8") as fh:
        for t in search.trials:
            fh.write(
                json.dumps(
                    {
                        "trial": t.trial,
                        "params": t.params,
                        "fold_f1": t.fold_f1,
                        "mean_f1": t.mean_f1,
                        "status": t.status,
                        "error": t.error,
                    },
                    sort_keys=True,
                )
                + "\n"
            )

    model = train(search.best_params, X[train_rows], y[train_rows])
    model_path = cfg.workpath(f"model_{cfg.model}_w{cfg.w}.json")
    save_model(model, model_path)

    scores = model.predict_proba(X[test_rows])
    model_report = evaluate_scores(y[test_rows], scores, cfg.threshold)

    rows = [
        [
            cfg.model,
            cfg.w,
            model_report.f1,
            model_report.pr_auc,
            model_report.roc_auc,
            cfg.threshold,
            f"cv_f1={search.best_score:.6f};trials={cfg.trials}",
        ]
    ]
    named_scores = {cfg.model: (y[test_rows], scores)}

    sessions = corpus_mod.read_session_log(_require(cfg.log, "session log"))
    sessions_by_id = {s.session_id: s for s in sessions}
    table = load_table(_require(cfg.workpath("embeddings.txt"), "embedding table"))
    base_scores = _baseline_scores_for_rows(keys, test_rows, sessions_by_id, table)
    best_thr, best_f1 = baseline_mod.best_threshold_f1(y[test_rows], base_scores)
    base_report = evaluate_scores(y[test_rows], base_scores, best_thr)
    rows.append(
        [
            "baseline-cosine",
            1,
            best_f1,
            base_report.pr_auc,
            base_report.roc_auc,
            best_thr,
            "best-threshold-on-test",
        ]
    )
    named_scores["baseline"] = (y[test_rows], base_scores)

    report_path = cfg.workpath(f"metrics_{cfg.model}_w{cfg.w}.tsv")
    report_mod.write_table(
        report_path,
        "metric-report",
        ["model", "w", "f1", "pr_auc", "roc_auc", "threshold", "note"],
        rows,
    )
    report_mod.plot_curves(cfg.workpath(f"curves_{cfg.model}_w{cfg.w}"), named_scores)

    print(f"split: {len(manifest['train'])} train / {len(manifest['test'])} test sessions")
    print(
        f"best CV F1 {search.best_score:.4f} (trial {search.best_trial}); "
        f"test F1 {model_report.f1:.4f}, PR-AUC {model_report.pr_auc:.4f}, "
        f"ROC-AUC {model_report.roc_auc:.4f}"
    )
    print(
        f"baseline best-threshold F1 {best_f1:.4f}, PR-AUC {base_report.pr_auc:.4f}, "
        f"ROC-AUC {base_report.roc_auc:.4f}"
    )
    print(f"report -> {report_path}")
    return 0


def cmd_importance(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    w = args.w if args.w is not None else 4  # explanation default window
    cfg.w = w
    model_path = (
        Path(args.model_file)
        if args.model_file
        else cfg.workpath(f"model_{cfg.model}_w{w}.json")
    )
    model = load_model(_require(model_path, "model file"))
    features_path = _require(
        cfg.workpath(f"features_w{w}.tsv"), f"feature dataset for w={w}"
    )
    X, y, groups, keys, meta = features_mod.load_dataset(features_path)
    check_feature_compat(model, meta)
    if model.feature_dim != X.shape[1]:
        raise UserError(
            f"model expects {model.feature_dim} features, dataset has {X.shape[1]}"
        )

    split_path = cfg.workpath(f"split_w{w}.json")
    if split_path.exists():
        train_ids, test_ids = corpus_mod.read_split_manifest(split_path)
        group_arr = np.array(groups)
        train_rows = np.flatnonzero(np.isin(group_arr, train_ids))
        test_rows = np.flatnonzero(np.isin(group_arr, test_ids))
    else:
        train_rows = np.arange(X.shape[0])
        test_rows = np.arange(X.shape[0])

    rng = np.random.default_rng(cfg.seed + 4)
    if train_rows.shape[0] > args.background_size:
        background_rows = np.sort(
            rng.choice(train_rows, size=args.background_size, replace=False)
        )
    else:
        background_rows = train_rows
    if test_rows.shape[0] > args.max_rows:
        test_rows = np.sort(rng.choice(test_rows, size=args.max_rows, replace=False))
    background = X[background_rows]

    if model.kind == "gbdt":
        attributions = [
            tree_shap(model, X[i], background, mode=args.shap_mode)
            for i in test_rows
        ]
    else:
        mean = background.mean(axis=0)
        attributions = [linear_shap(model, X[i], mean) for i in test_rows]
    imp = aggregate_importance(attributions, w)

    out = cfg.workpath(f"importance_{model.kind}_w{w}.tsv")
    report_mod.write_table(
        out,
        "importance-report",
        ["rank", "feature", "mean_abs_contribution"],
        [[i + 1, name, value] for i, (name, value) in enumerate(imp.ranking)],
    )
    fig = report_mod.plot_importance(
        cfg.workpath(f"importance_{model.kind}_w{w}.png"), imp
    )
    approx = attributions[0].approximate if attributions else False
    print(
        f"{len(imp.labels)} features over {len(test_rows)} rows "
        f"({attributions[0].mode}{', approximate' if approx else ''}) -> {out}"
    )
    print(f"top: {imp.ranking[0][0]} ({imp.ranking[0][1]:.6f}); figure -> {fig}")
    return 0


def cmd_baseline_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    sessions, _, annotated = _load_inputs(cfg)
    table = load_table(_require(cfg.workpath("embeddings.txt"), "embedding table"))
    y_all: list[int] = []
    score_all: list[float] = []
    for ann in annotated:
        if ann.session.n_gaps == 0:
            continue
        scores, _ = baseline_mod.baseline_scores(ann.session, table)
        score_all.extend(scores)
        y_all.extend(ann.gap_labels)
    y = np.array(y_all)
    scores = np.array(score_all)
    grid = np.round(np.arange(0.0, 2.0001, 0.05), 4)
    rows = baseline_mod.sweep_thresholds(y, scores, grid)
    cfg.workpath("").mkdir(parents=True, exist_ok=True)
    out = cfg.workpath("baseline_sweep.tsv")
    report_mod.write_table(
        out,
        "baseline-sweep",
        ["threshold", "f1", "pr_auc", "roc_auc"],
        [[r["threshold"], r["f1"], r["pr_auc"], r["roc_auc"]] for r in rows],
    )
    report_mod.plot_threshold_sweep(cfg.workpath("baseline_sweep.png"), rows)
    best = max(rows, key=lambda r: r["f1"])
    print(
        f"swept {len(rows)} thresholds; best F1 {best['f1']:.4f} at "
        f"{best['threshold']:.2f}; ROC-AUC {best['roc_auc']:.4f} -> {out}"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from sessionseg.service import ServiceConfig, create_app, load_service

    cfg = load_config(args.config, args)
    svc = cfg.service
    if not svc.get("annotators"):
        raise UserError("config has no service.annotators map")
    service_cfg = ServiceConfig(
        sessions_path=str(_require(cfg.log, "session log")),
        catalog_path=str(_require(cfg.catalog, "catalog")),
        store_path=svc.get("store", str(cfg.workpath("annotations.log"))),
        annotators=dict(svc["annotators"]),
        seed=cfg.seed,
        reservation_timeout=float(svc.get("reservation_timeout", 300.0)),
        ui_dir=svc.get("ui_dir"),
    )
    app = create_app(load_service(service_cfg))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # bad flags are user errors, not internal
        self.print_usage(sys.stderr)
        raise UserError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sessionseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--w", type=int, default=None, help="window radius")
        p.add_argument("--model", choices=MODEL_KINDS, default=None)
        p.add_argument("--trials", type=int, default=None, help="search trials")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threshold", type=float, default=None, help="F1 threshold")

    p = sub.add_parser("synth", help="generate a synthetic corpus with labels")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--annotated", type=int, default=2000)
    p.add_argument("--unlabeled", type=int, default=6000)
    p.add_argument("--topics", type=int, default=12)
    p.add_argument(
        "--multi-segment-rate", type=float, default=0.40,
        help="fraction of sessions containing at least one boundary "
             "(the main positive-rate knob)",
    )
    p.add_argument("--three-segment-rate", type=float, default=0.07)
    p.add_argument("--impulse-rate", type=float, default=0.05)
    p.add_argument("--rare-rate", type=float, default=0.06)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("stats", help="corpus statistics and length histogram")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("embed", help="train behavior embeddings (annotated excluded)")
    common(p)
    p.set_defaults(handler=cmd_embed)

    p = sub.add_parser("features", help="build the similarity feature dataset")
    common(p)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser(
        "tune", help="split, grouped-CV search, refit, evaluate, report"
    )
    common(p)
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("importance", help="SHAP-style feature importance report")
    common(p)
    p.add_argument("--model-file", default=None)
    p.add_argument("--shap-mode", choices=("path", "interventional"), default="path")
    p.add_argument("--background-size", type=int, default=1000)
    p.add_argument("--max-rows", type=int, default=500)
    p.set_defaults(handler=cmd_importance)

    p = sub.add_parser("baseline-sweep", help="cosine-threshold baseline sweep")
    common(p)
    p.set_defaults(handler=cmd_baseline_sweep)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "handler", None) is None:
            parser.print_help()
            return 0
        return args.handler(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        corpus_mod.CorpusError,
        features_mod.FeatureError,
        FileFormatError,
        MetricError,
        ModelError,
        TuningError,
        baseline_mod.BaselineError,
        synth_mod.SynthError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort internal error reporting
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
