"""Command-line entry point: ``cskg <command> --config run.ini``."""

from __future__ import annotations

import argparse
import json
import logging
import pickle
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .data import (amplify_zero_shot, build_zero_shot_index, common_relations, filter_test_common_relations,
                   load_triplets, relation_frequencies)
from .errors import CskgError
from .evaluation import evaluate
from .fileio import atomic_write_bytes, atomic_write_text
from .graph import IngestOptions, link_classes, load_edges, load_features, read_name_list
from .integrators import IntegratorConfig
from .midpaths import accumulate_statistics, render_midpath, top_midpaths_per_relation
from .predictor import RelationPredictor, train_predictor
from .similarity import rank_similar_pairs

log = logging.getLogger("cskg")

SNAPSHOT_MAGIC = "cskg-snapshot-v1"
CHECKPOINT_NAME = "model.ckpt.json"


# ---------------------------------------------------------------------------
# input loading
# ---------------------------------------------------------------------------


def _parse_graph(cfg: RunConfig):
    cfg.require("edges")
    opts = IngestOptions(conceptnet_uris=cfg.conceptnet_uris, language=cfg.language)
    graph = load_edges(cfg.edges, opts)
    features = None
    if cfg.features is not None:
        cfg.require("features")
        features = load_features(cfg.features, graph)
    return graph, features


def load_snapshot(path):
    with open(path, "rb") as fh:
        doc = pickle.load(fh)
    if not isinstance(doc, dict) or doc.get("magic") != SNAPSHOT_MAGIC:
        raise CskgError(f"{path} is not a graph snapshot")
    return doc["graph"], doc["features"]


def write_snapshot(path, graph, features) -> None:
    atomic_write_bytes(path, pickle.dumps({"magic": SNAPSHOT_MAGIC, "graph": graph, "features": features},
                                          protocol=pickle.HIGHEST_PROTOCOL))


def load_graph(cfg: RunConfig):
    if cfg.snapshot is not None and cfg.snapshot.exists():
        log.info("loading snapshot %s", cfg.snapshot)
        return load_snapshot(cfg.snapshot)
    return _parse_graph(cfg)


def _names_from_triplets(path, columns) -> list[str]:
    names: dict[str, None] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.rstrip("\r\n").split("\t")
            for c in columns:
                if c < len(cols):
                    names[cols[c].strip()] = None
    return list(names)


def load_vocab(cfg: RunConfig, graph):
    if cfg.classes is not None:
        cfg.require("classes")
        classes = read_name_list(cfg.classes)
    else:
        cfg.require("triplets")
        classes = _names_from_triplets(cfg.triplets, (1, 3))
    relations: list[str] = []
    if cfg.relations is not None:
        cfg.require("relations")
        relations = read_name_list(cfg.relations)
    elif cfg.triplets is not None and cfg.triplets.exists():
        relations = _names_from_triplets(cfg.triplets, (2,))
    return link_classes(classes, graph, relations=relations)


def _output(cfg: RunConfig, name: str) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir / name


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig, args) -> int:
    graph, features = _parse_graph(cfg)
    summary = {"nodes": graph.node_count, "edges": graph.edge_count, "labels": graph.label_count}
    if features is not None:
        summary.update(feature_dim=features.dim, feature_rows=int(features.present.sum()),
                       skipped_feature_rows=features.skipped_rows)
    target = args.snapshot or cfg.snapshot
    if target is not None:
        write_snapshot(target, graph, features)
        summary["snapshot"] = str(target)
    print(json.dumps(summary))
    return 0


def cmd_similar_pairs(cfg: RunConfig, args) -> int:
    graph, _ = load_graph(cfg)
    vocab = load_vocab(cfg, graph)
    report = rank_similar_pairs(graph, vocab, args.top_n)
    out = Path(args.output) if args.output else _output(cfg, "similar_pairs.jsonl")
    atomic_write_text(out, report.to_jsonl())
    for rank, (a, b, s) in enumerate(report, 1):
        print(f"{rank:>4}  {a}-{b}  {s:.4f}")
    return 0


def cmd_score_midpaths(cfg: RunConfig, args) -> int:
    graph, _ = load_graph(cfg)
    vocab = load_vocab(cfg, graph)
    cfg.require("triplets")
    data = load_triplets(cfg.triplets, vocab)
    split = None if args.split == "all" else args.split
    stats = accumulate_statistics(graph, vocab, data, cfg.hops, cfg.path_cap, split=split)
    if stats.grand_total == 0:
        raise CskgError("no MidPaths found between any triplet's subject and object")
    top = top_midpaths_per_relation(stats, args.top_n)
    lines = []
    for r, items in top.items():
        for rank, (p, score) in enumerate(items, 1):
            lines.append(f"{vocab.relations[r]}\t{rank}\t{score:.6f}\t{render_midpath(graph, p)}\n")
    report = "".join(lines)
    atomic_write_text(_output(cfg, "midpaths_top.tsv"), report)
    atomic_write_text(_output(cfg, "midpath_stats.jsonl"), stats.to_jsonl(graph, vocab.relations))
    sys.stdout.write(report)
    return 0


def _predictor_inputs(cfg: RunConfig, mode: str):
    graph, features = load_graph(cfg)
    vocab = load_vocab(cfg, graph)
    cfg.require("triplets")
    data = load_triplets(cfg.triplets, vocab)
    icfg = None
    if mode != "onehot":
        if features is None:
            raise CskgError("[paths] features is required for knowledge-based modes")
        icfg = IntegratorConfig(mode=mode, feature_dim=features.dim, hops=cfg.hops,
                                sort_pool_k=cfg.sort_pool_k, path_cap=cfg.path_cap)
    return graph, features, vocab, data, icfg


def cmd_train(cfg: RunConfig, args) -> int:
    mode = args.mode or cfg.mode
    graph, features, vocab, data, icfg = _predictor_inputs(cfg, mode)
    result = train_predictor(data, mode, cfg.training, graph, features, icfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else _output(cfg, CHECKPOINT_NAME)
    result.model.save(ckpt)
    atomic_write_text(_output(cfg, "train_log.jsonl"),
                      "".join(json.dumps({"step": i, "loss": l}) + "\n" for i, l in enumerate(result.losses)))
    final = result.losses[-1] if result.losses else float("nan")
    print(json.dumps({"mode": mode, "steps": result.steps, "final_loss": final, "checkpoint": str(ckpt)}))
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    graph, features = load_graph(cfg)
    vocab = load_vocab(cfg, graph)
    cfg.require("triplets")
    data = load_triplets(cfg.triplets, vocab)
    ckpt = Path(args.checkpoint) if args.checkpoint else cfg.output_dir / CHECKPOINT_NAME
    mode = args.mode or cfg.mode
    expected = None
    if mode != "onehot":
        if features is None:
            raise CskgError("[paths] features is required for knowledge-based modes")
        expected = IntegratorConfig(mode=mode, feature_dim=features.dim, hops=cfg.hops,
                                    sort_pool_k=cfg.sort_pool_k, path_cap=cfg.path_cap)
    model = RelationPredictor.load(ckpt, vocab, graph, features, expected, mode=mode)
    index = build_zero_shot_index(data)
    if args.remove_common:
        data = filter_test_common_relations(data, index, common_relations(data, args.remove_common))
    report = evaluate(model, data, index, cfg.ks)
    out = Path(args.output) if args.output else _output(cfg, "recall_report.json")
    atomic_write_text(out, report.to_json())
    print(report.summary())
    return 0


def cmd_amplify(cfg: RunConfig, args) -> int:
    graph, _ = load_graph(cfg)
    vocab = load_vocab(cfg, graph)
    cfg.require("triplets")
    data = load_triplets(cfg.triplets, vocab)
    before = relation_frequencies(data)
    amplified = amplify_zero_shot(data, args.tail_count, args.fraction)
    after = relation_frequencies(amplified)
    removed = sorted({s.scene_id for s in data.scenes} - {s.scene_id for s in amplified.scenes})
    out = Path(args.output) if args.output else _output(cfg, "triplets_amplified.tsv")
    atomic_write_text(out, amplified.to_tsv())
    print(f"removed {len(removed)} training scenes")
    for r in sorted(before, key=lambda r: (before[r], r)):
        print(f"{vocab.relations[r]}\t{before[r]}\t{after.get(r, 0)}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cskg", description="Commonsense knowledge-graph mining and "
                                     "knowledge-only zero-shot relation prediction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="run configuration (INI)")
        p.add_argument("--seed", type=int, default=None, help="override [training] seed")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "parse the edge and feature files and print counts")
    p.add_argument("--snapshot", type=Path, default=None, help="write a binary snapshot here")

    p = add("similar-pairs", cmd_similar_pairs, "rank class pairs by neighbor Jaccard")
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--output", default=None)

    p = add("score-midpaths", cmd_score_midpaths, "top MidPaths per relation")
    p.add_argument("--top-n", type=int, default=3)
    p.add_argument("--split", choices=("train", "test", "all"), default="train")

    p = add("train", cmd_train, "train a knowledge-only relation predictor")
    p.add_argument("--mode", choices=("neighbor", "path", "fused", "onehot"), default=None)
    p.add_argument("--checkpoint", default=None)

    p = add("eval", cmd_eval, "zero-shot recall report for a checkpoint")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--remove-common", type=int, default=0, metavar="N",
                   help="drop zero-shot test triplets of the N most common training relations")
    p.add_argument("--mode", choices=("neighbor", "path", "fused", "onehot"), default=None)

    p = add("amplify", cmd_amplify, "write a zero-shot amplified triplet file")
    p.add_argument("--tail-count", type=int, default=30)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--output", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_seed(args.seed)
        return args.func(cfg, args)
    except (CskgError, OSError, ValueError) as exc:
        print(f"cskg {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
