"""Command-line entry point for the rule miner."""

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import structlog
from pydantic import ValidationError

from .autodiff import grad_check, ops
from .config import RunConfig, build_run_config, get_settings, load_config
from .errors import ArgumentError, ContractError, DrumError
from .evaluation import (
    DistMultControl,
    DrumScorer,
    RuleScorer,
    entity_overlap,
    evaluate_inductive,
    evaluate_split,
    format_metrics,
    graph_operators,
    validation_hook,
)
from .kg import (
    RelationKind,
    TripleStore,
    build_operators,
    dump_vocabulary,
    load_dataset,
    load_triples,
    make_inductive_split,
    random_store,
    resolve_dataset_dir,
    sample_test_subset,
    split_facts_train,
    write_triples,
)
from .model import DrumModel, load_checkpoint, save_checkpoint, verify_vocabulary
from .rules import mine_rules, read_rules, write_rules
from .training import train


logger = structlog.get_logger()

REQUIRED = {
    "prepare": ("input",),
    "train": ("dataset",),
    "mine": ("checkpoint",),
    "eval": ("dataset",),
    "inductive-split": ("dataset", "sample_size"),
    "gradcheck": (),
}
GRADCHECK_DIM = 4


def configure_logging(level: str = "info") -> None:
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(getattr(logging, level.upper(), logging.INFO)),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
    )


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="flat key = value config file")
    shared.add_argument("--dataset", help="dataset directory or name under DRUM_DATA_DIR")
    shared.add_argument("--data-dir", type=Path)
    shared.add_argument("--out", type=Path)
    shared.add_argument("--T", type=int, help="maximum rule length")
    shared.add_argument("--L", type=int, help="rank")
    shared.add_argument("--hidden-dim", type=int)
    shared.add_argument("--embed-dim", type=int)
    shared.add_argument("--lr", type=float)
    shared.add_argument("--batch-size", type=int)
    shared.add_argument("--epochs", type=int)
    shared.add_argument("--clip-norm", type=float)
    shared.add_argument("--patience", type=int)
    shared.add_argument("--seed", type=int)
    shared.add_argument("--threads", type=int)
    shared.add_argument("--parallel-batch", action="store_true", default=None)

    parser = argparse.ArgumentParser(prog="drum", description="Differentiable rule mining over knowledge graphs")
    commands = parser.add_subparsers(dest="command", required=True)

    prepare = commands.add_parser("prepare", parents=[shared], help="split a raw training file into facts and train")
    prepare.add_argument("--input", type=Path, help="raw training triples")
    prepare.add_argument("--ratio", type=float, help="facts:train ratio (3 means 3:1)")

    train_cmd = commands.add_parser("train", parents=[shared], help="train a model")
    train_cmd.add_argument("--checkpoint", type=Path, help="checkpoint output path")

    mine = commands.add_parser("mine", parents=[shared], help="extract rules from a checkpoint")
    mine.add_argument("--checkpoint", type=Path)
    mine.add_argument("--min-conf", type=float)

    evaluate_cmd = commands.add_parser("eval", parents=[shared], help="filtered link-prediction metrics")
    evaluate_cmd.add_argument("--checkpoint", type=Path)
    evaluate_cmd.add_argument("--rules", type=Path)
    evaluate_cmd.add_argument("--split", choices=("valid", "test"))
    evaluate_cmd.add_argument("--tail-only", action="store_true", default=None)
    evaluate_cmd.add_argument("--protocol", choices=("transductive", "inductive"))
    evaluate_cmd.add_argument("--min-conf", type=float)
    evaluate_cmd.add_argument("--control-epochs", type=int)

    inductive = commands.add_parser("inductive-split", parents=[shared], help="build an unseen-entity split")
    inductive.add_argument("--sample-size", type=int)
    inductive.add_argument("--ratio", type=float)

    commands.add_parser("gradcheck", parents=[shared], help="finite-difference check of the training loss")
    return parser


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(command: str, config: RunConfig, inputs: Sequence[Path]) -> None:
    """Record what a run needs to be reproduced: config echo and input hashes."""
    manifest = {
        "command": command,
        "T": config.T,
        "L": config.L,
        "seed": config.seed,
        "config": config.model_dump(mode="json"),
        "inputs": {str(p): sha256_file(p) for p in inputs if p.is_file()},
    }
    config.out.mkdir(parents=True, exist_ok=True)
    with open(config.out / "manifest.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def dataset_files(root: Path) -> list[Path]:
    return [root / f"{name}.txt" for name in ("facts", "train", "valid", "test")]


def cmd_prepare(config: RunConfig) -> list[Path]:
    raw, vocab = load_triples(config.input)
    facts, train_store = split_facts_train(raw, config.ratio, config.seed)
    config.out.mkdir(parents=True, exist_ok=True)
    write_triples(facts, vocab, config.out / "facts.txt")
    write_triples(train_store, vocab, config.out / "train.txt")
    dump_vocabulary(vocab, config.out / "vocab.tsv")
    for sibling in ("valid.txt", "test.txt"):
        source = config.input.parent / sibling
        if source.exists() and source.resolve() != (config.out / sibling).resolve():
            shutil.copyfile(source, config.out / sibling)
    print(
        f"facts={len(facts)} train={len(train_store)} "
        f"entities={vocab.entity_count} relations={vocab.relation_count}"
    )
    return [config.input]


def cmd_train(config: RunConfig) -> list[Path]:
    root = resolve_dataset_dir(config.dataset, config.data_dir)
    dataset = load_dataset(root)
    operators = build_operators(dataset.facts, dataset.vocab)
    model = DrumModel(config.model(dataset.vocab.relation_count))
    hook = validation_hook(dataset, config.threads or 1) if dataset.valid is not None else None
    result = train(model, dataset.train, operators, config.training(), validation=hook, log_path=config.out / "train.log")
    checkpoint = config.checkpoint or config.out / "model.ckpt"
    save_checkpoint(checkpoint, result.model, dataset.vocab)
    print(f"epochs={len(result.history)} best_epoch={result.best_epoch} final_loss={result.losses[-1]:.6f}")
    return dataset_files(root)


def cmd_mine(config: RunConfig) -> list[Path]:
    model, header = load_checkpoint(config.checkpoint)
    rules = mine_rules(model, header.relation_vocabulary(), min_confidence=config.min_conf)
    write_rules(rules, config.out / "rules.txt")
    print(f"heads={len(rules.heads())} rules={len(rules)}")
    return [config.checkpoint]


def _eval_threads(config: RunConfig) -> int:
    return config.threads or os.cpu_count() or 1


def cmd_eval(config: RunConfig) -> list[Path]:
    if config.checkpoint is None and config.rules is None:
        raise ArgumentError("eval needs --checkpoint or --rules")
    root = resolve_dataset_dir(config.dataset, config.data_dir)
    dataset = load_dataset(root)
    threads = _eval_threads(config)
    inputs = dataset_files(root) + [p for p in (config.checkpoint, config.rules) if p is not None]

    model = header = None
    if config.checkpoint is not None:
        model, header = load_checkpoint(config.checkpoint)

    if config.protocol == "transductive":
        if config.rules is not None:
            scorer = RuleScorer(read_rules(config.rules), graph_operators(dataset))
        else:
            verify_vocabulary(header, dataset.vocab)
            scorer = DrumScorer(model, graph_operators(dataset))
        metrics = evaluate_split(scorer, dataset, config.split, config.tail_only, threads)
        results = {config.split: metrics}
        print(metrics.record_line())
    else:
        if config.rules is not None:
            rules = read_rules(config.rules)
        else:
            rules = mine_rules(model, header.relation_vocabulary(), min_confidence=config.min_conf)
        if model is not None and tuple(header.relation_names) != dataset.vocab.relations:
            logger.warning("checkpoint_relations_differ", checkpoint=str(config.checkpoint))
            model = None
        control = DistMultControl(
            dataset.vocab.entity_count,
            dataset.vocab.relation_count,
            dim=config.embed_dim,
            seed=config.seed,
        )
        control.fit(dataset.graph(), epochs=config.control_epochs, batch_size=config.batch_size, clip_norm=config.clip_norm)
        results = evaluate_inductive(dataset, rules, model, control, config.tail_only, threads)
        for name, metrics in results.items():
            print(f"scorer={name} {metrics.record_line()}")

    config.out.mkdir(parents=True, exist_ok=True)
    (config.out / "metrics.txt").write_text(format_metrics(results) + "\n", encoding="utf-8")
    return inputs


def cmd_inductive_split(config: RunConfig) -> list[Path]:
    root = resolve_dataset_dir(config.dataset, config.data_dir)
    dataset = load_dataset(root)
    vocab = dataset.vocab
    original = np.array([kind == RelationKind.RELATION for kind in vocab.relation_kinds])

    def originals(store: TripleStore) -> TripleStore:
        kept = store.triples[original[store.triples[:, 1]]]
        return TripleStore(kept, vocab.entity_count, vocab.relation_count)

    test = sample_test_subset(originals(dataset.split("test")), config.sample_size, config.seed)
    test_entities = test.entities()
    graph = originals(dataset.graph())
    kept = make_inductive_split(graph, test)
    overlap = entity_overlap(kept, test)
    if overlap:
        raise ContractError(f"inductive split leaks {len(overlap)} test entities into training")

    facts, train_store = split_facts_train(kept, config.ratio, config.seed)
    config.out.mkdir(parents=True, exist_ok=True)
    write_triples(facts, vocab, config.out / "facts.txt")
    write_triples(train_store, vocab, config.out / "train.txt")
    write_triples(test, vocab, config.out / "test.txt")
    print(
        f"train_before={len(graph)} train_after={len(kept)} test={len(test)} "
        f"train_entities={len(kept.entities())} test_entities={len(test_entities)} overlap={len(overlap)}"
    )
    return dataset_files(root)


def cmd_gradcheck(config: RunConfig, explicit: set[str]) -> tuple[list[Path], bool]:
    rng = np.random.default_rng(config.seed)
    store, vocab = random_store(entity_count=6, relation_count=2, edge_count=10, rng=rng)
    operators = build_operators(store, vocab)
    model = DrumModel(
        config.model(vocab.relation_count).model_copy(
            update={
                "hidden_dim": config.hidden_dim if "hidden_dim" in explicit else GRADCHECK_DIM,
                "embed_dim": config.embed_dim if "embed_dim" in explicit else GRADCHECK_DIM,
            }
        )
    )
    queries = store.triples[:3].tolist()

    def loss(params):
        total = None
        for x, head, y in queries:
            term = model.query_loss(x, head, y, operators, params=params)
            total = term if total is None else ops.add(total, term)
        return total

    report = grad_check(loss, model.params)
    print(report.summary())
    return [], report.passed


HANDLERS: dict[str, Callable[[RunConfig], list[Path]]] = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "mine": cmd_mine,
    "eval": cmd_eval,
    "inductive-split": cmd_inductive_split,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    configure_logging(settings.log_level)

    flags: dict[str, Any] = {k: v for k, v in vars(args).items() if k in RunConfig.model_fields and v is not None}
    try:
        file_values = load_config(args.config) if args.config else {}
        config = build_run_config(file_values, flags, settings)
    except ValidationError as e:
        parser.error(str(e))
    except (DrumError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        return 1

    missing = [name for name in REQUIRED[args.command] if getattr(config, name) is None]
    if missing:
        parser.error(f"{args.command} requires " + ", ".join("--" + m.replace("_", "-") for m in missing))

    logger.info("command_started", command=args.command, T=config.T, L=config.L, seed=config.seed)
    try:
        if args.command == "gradcheck":
            inputs, passed = cmd_gradcheck(config, set(flags) | set(file_values))
        else:
            inputs, passed = HANDLERS[args.command](config), True
        write_manifest(args.command, config, inputs + ([args.config] if args.config else []))
    except (DrumError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        return 1

    logger.info("command_finished", command=args.command, passed=passed)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
