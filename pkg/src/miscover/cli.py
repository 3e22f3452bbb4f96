"""Command-line pipeline: gen-corpus, train, evaluate, discover, plot.

Every command takes ``--config`` (flat JSON key/value file; unknown keys are
rejected), ``--seed`` (overrides the config seed) and ``--out`` (output
directory, created on demand) and writes the fully resolved configuration
next to its outputs.  Exit codes: 0 success, 1 usage error, 2 pipeline
error.  Log verbosity comes from the ``MISCOVER_LOG`` environment variable
(debug / info / warning / error).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .clustering import NOISE, ClusterConfig
from .corpus import Corpus, load_corpus
from .discover import DiscoveryResult, clusters_to_json, projection_csv, run_discovery
from .evaluation import SplitSpec, metrics_csv, run_comparison, splits_csv, summary_csv
from .generator import GeneratorSpec, generate, groups_to_json
from .nnet import TrainConfig, train_code2vec
from .pathctx import build_vocab, encode_corpus, extract_paths
from .plotting import svg_scatter
from .turtlelang import RUBRIC_ITEMS, to_source

log = logging.getLogger("miscover")


class UsageError(Exception):
    pass


DEFAULT_CONFIG: dict = {
    "seed": 0,
    # corpus generation
    "gen_correct": 80,
    "gen_dup_moves": 10,
    "gen_fixed_repeat": 8,
    "gen_local_var": 3,
    "gen_max_jitter": 1,
    # path extraction / encoding
    "max_path_length": 8,
    "max_path_width": 2,
    "max_contexts": 100,
    "min_count": 1,
    # training
    "learning_rate": 2e-4,
    "max_epochs": 10000,
    "patience": 400,
    "batch_size": None,
    "d_emb": 100,
    "d_hidden": 100,
    "val_fraction": 0.125,
    "svm_lambda": 1e-3,
    # evaluation
    "train_fraction": 0.8,
    "n_runs": 50,
    # discovery
    "minpts": 3,
    "epsilon": None,
    "tsne_perplexity": 30.0,
    "tsne_iters": 1000,
    "embedding_kind": "context",
    "top_clusters": 4,
    "duplicate_jaccard": 0.8,
}


def _resolve_config(config_path: str | None, seed: int | None) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if config_path is not None:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {config_path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a flat JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def _write_outputs(out_dir: Path, files: dict[str, str | bytes]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in files.items():
        path = out_dir / name
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            path.write_text(payload, encoding="utf-8")
        log.info("wrote %s", path)


def _resolved_json(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg["learning_rate"],
        max_epochs=cfg["max_epochs"],
        patience=cfg["patience"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
        d_emb=cfg["d_emb"],
        d_hidden=cfg["d_hidden"],
        val_fraction=cfg["val_fraction"],
        svm_lambda=cfg["svm_lambda"],
    )


def _cluster_config(cfg: dict) -> ClusterConfig:
    return ClusterConfig(
        minpts=cfg["minpts"],
        epsilon=cfg["epsilon"],
        tsne_perplexity=cfg["tsne_perplexity"],
        tsne_iters=cfg["tsne_iters"],
        top_clusters=cfg["top_clusters"],
        duplicate_jaccard=cfg["duplicate_jaccard"],
    )


def _encode_with(corpus: Corpus, cfg: dict, vocab=None):
    context_sets = [
        extract_paths(s.ast, cfg["max_path_length"], cfg["max_path_width"])
        for s in corpus
    ]
    if vocab is None:
        vocab = build_vocab(context_sets, cfg["min_count"])
    enc = encode_corpus(corpus.ids(), context_sets, vocab, cfg["max_contexts"])
    return vocab, enc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_corpus(args, cfg: dict) -> int:
    spec = GeneratorSpec(
        n_correct=cfg["gen_correct"],
        n_dup_moves=cfg["gen_dup_moves"],
        n_fixed_repeat=cfg["gen_fixed_repeat"],
        n_local_var=cfg["gen_local_var"],
        seed=cfg["seed"],
        max_jitter=cfg["gen_max_jitter"],
    )
    corpus, groups = generate(spec)
    log.info("generated %d submissions", len(corpus))
    from .corpus import corpus_to_json

    _write_outputs(
        Path(args.out),
        {
            "corpus.json": corpus_to_json(corpus),
            "groups.json": groups_to_json(groups),
            "config.resolved.json": _resolved_json(cfg),
        },
    )
    return 0


def _history_csv(model) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("epoch", "train_loss", "val_loss", "val_acc"))
    hist = model.history
    for epoch, (tl, vl, va) in enumerate(
        zip(hist.train_loss, hist.val_loss, hist.val_acc)
    ):
        writer.writerow((epoch, repr(tl), repr(vl), repr(va)))
    return buf.getvalue()


def cmd_train(args, cfg: dict) -> int:
    corpus = load_corpus(args.corpus)
    vocab, enc = _encode_with(corpus, cfg)
    labels = np.array(corpus.labels(), dtype=np.int64)
    model = train_code2vec(enc, labels, _train_config(cfg))
    log.info(
        "trained %d epochs; best epoch %d (val loss %.6f)",
        len(model.history),
        model.best_epoch,
        min(model.history.val_loss),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        out / "checkpoint.npz",
        Checkpoint(
            params=model.params,
            vocab=vocab,
            vocab_hash=vocab.content_hash(),
            max_contexts=cfg["max_contexts"],
            max_path_length=cfg["max_path_length"],
            max_path_width=cfg["max_path_width"],
            min_count=cfg["min_count"],
        ),
    )
    _write_outputs(
        out,
        {
            "history.csv": _history_csv(model),
            "vocab.json": vocab.to_json() + "\n",
            "config.resolved.json": _resolved_json(cfg),
        },
    )
    return 0


def cmd_evaluate(args, cfg: dict) -> int:
    corpus = load_corpus(args.corpus)
    spec = SplitSpec(
        train_fraction=cfg["train_fraction"],
        n_runs=cfg["n_runs"],
        base_seed=cfg["seed"],
    )
    result = run_comparison(
        corpus,
        spec,
        _train_config(cfg),
        max_length=cfg["max_path_length"],
        max_width=cfg["max_path_width"],
        max_contexts=cfg["max_contexts"],
        min_count=cfg["min_count"],
    )
    _write_outputs(
        Path(args.out),
        {
            "metrics.csv": metrics_csv(result),
            "summary.csv": summary_csv(result),
            "splits.csv": splits_csv(result),
            "config.resolved.json": _resolved_json(cfg),
        },
    )
    return 0


def _render_report(result: DiscoveryResult, corpus: Corpus) -> str:
    by_id = {s.id: s for s in corpus}
    lines = [
        "misconception discovery report",
        f"incorrect submissions: {len(result.incorrect_ids)}",
        f"t-SNE final KL: {result.projection.kl_final!r}",
        "",
    ]
    for report in result.reports:
        lines.append(
            f"== item {report.item} ({report.item_name}) "
            f"epsilon={report.epsilon!r}"
        )
        if report.note is not None:
            lines.append(f"   note: {report.note}")
            lines.append("")
            continue
        for idx, c in enumerate(report.clusters):
            flags = []
            if c.selected:
                flags.append("selected")
            if c.duplicate_of:
                flags.append(f"duplicate of {c.duplicate_of}")
            if c.normalizer_degenerate:
                flags.append("normalizer degenerate")
            suffix = f" [{', '.join(flags)}]" if flags else ""
            lines.append(
                f"-- cluster {idx} rank={c.density_rank} size={len(c.members)} "
                f"ED={c.ed:.4f} TED={c.ted:.4f}{suffix}"
            )
            lines.append(f"   members: {' '.join(c.members)}")
            if c.selected:
                for sid in c.members:
                    sub = by_id[sid]
                    source = sub.source or to_source(sub.ast)
                    lines.append(f"   --- {sid} ---")
                    lines.extend("   | " + ln for ln in source.rstrip().splitlines())
        if report.noise:
            lines.append(f"-- noise ({len(report.noise)}): {' '.join(report.noise)}")
        lines.append("")
    lines.append(
        "note: TED normalization uses the failing set's medoid tree; tree "
        "space has no centroid."
    )
    return "\n".join(lines) + "\n"


def cmd_discover(args, cfg: dict) -> int:
    corpus = load_corpus(args.corpus)
    ckpt = load_checkpoint(args.checkpoint)
    context_sets = [
        extract_paths(s.ast, ckpt.max_path_length, ckpt.max_path_width)
        for s in corpus
    ]
    rebuilt = build_vocab(context_sets, ckpt.min_count)
    from .discover import VocabMismatch

    if rebuilt.content_hash() != ckpt.vocab_hash:
        raise VocabMismatch(
            "corpus vocabulary differs from the checkpoint's; discover must "
            "run on the corpus the model was trained on"
        )
    enc = encode_corpus(corpus.ids(), context_sets, ckpt.vocab, ckpt.max_contexts)
    result = run_discovery(
        corpus,
        ckpt.params,
        enc,
        _cluster_config(cfg),
        vocab_hash=ckpt.vocab_hash,
        tsne_seed=cfg["seed"],
        embedding_kind=cfg["embedding_kind"],
    )
    _write_outputs(
        Path(args.out),
        {
            "clusters.json": clusters_to_json(result.reports),
            "projection.csv": projection_csv(result),
            "report.txt": _render_report(result, corpus),
            "config.resolved.json": _resolved_json(cfg),
        },
    )
    return 0


def cmd_plot(args, cfg: dict) -> int:
    clusters_doc = json.loads(Path(args.clusters).read_text(encoding="utf-8"))
    rows = Path(args.projection).read_text(encoding="utf-8").strip().splitlines()
    header, *data = rows
    if header != "id,x,y,failed_items":
        raise ValueError(f"unexpected projection header: {header}")
    ids, coords, bitmasks = [], [], []
    for row in data:
        sid, x, y, bits = row.split(",")
        ids.append(sid)
        coords.append((float(x), float(y)))
        bitmasks.append(int(bits))
    coords = np.array(coords) if coords else np.zeros((0, 2))

    files: dict[str, str] = {}
    for item in range(len(RUBRIC_ITEMS)):
        key = f"R{item}"
        if key not in clusters_doc:
            continue
        member_cluster = {}
        ranks = {}
        for c_idx, cluster in enumerate(clusters_doc[key]):
            ranks[c_idx] = cluster["density_rank"]
            for sid in cluster["members"]:
                member_cluster[sid] = c_idx
        keep = [k for k, bits in enumerate(bitmasks) if bits & (1 << item)]
        pts = coords[keep]
        labels = [member_cluster.get(ids[k], NOISE) for k in keep]
        title = f"{key} {RUBRIC_ITEMS[item]} ({len(keep)} failing)"
        files[f"{key}.svg"] = svg_scatter(pts, labels, title, ranks)
    files["config.resolved.json"] = _resolved_json(cfg)
    _write_outputs(Path(args.out), files)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="miscover",
        description="misconception discovery pipeline over turtle programs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("gen-corpus", help="generate a synthetic graded corpus")
    common(p)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train the attention classifier")
    p.add_argument("corpus", help="corpus JSON file")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="resampled four-model comparison")
    p.add_argument("corpus", help="corpus JSON file")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("discover", help="cluster failing submissions per item")
    p.add_argument("corpus", help="corpus JSON file")
    p.add_argument("checkpoint", help="trained checkpoint (.npz)")
    common(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("plot", help="render SVG scatter per rubric item")
    p.add_argument("projection", help="projection.csv from discover")
    p.add_argument("clusters", help="clusters.json from discover")
    common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("MISCOVER_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _setup_logging()
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        cfg = _resolve_config(args.config, args.seed)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pipeline failures map to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
