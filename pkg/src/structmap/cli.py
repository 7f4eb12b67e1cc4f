"""Command-line entry point: synth | ingest | sample-pairs | train |
eval-nn | eval-purity | probe | export.

Configuration comes from an optional JSON file with ``synth`` / ``train``
/ ``eval`` sections plus a top-level ``seed``; flags override file values.
Every run writes a manifest with the fully resolved configuration into the
output directory, and nothing is written outside it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import structeval
from .errors import ConfigError, StructmapError
from .sampler import sample_pairs
from .structeval import (
    EvalConfig,
    kmeans_purity,
    nn_agreement,
    probe_fewshot,
    retrieval_dump,
    retrieve_neighbors,
    token_representations,
)
from .sylinear import LinearMap, load_map
from .synthgen import SynthConfig, generate_synthetic
from .trainer import TrainConfig, train
from .vecstore import Dataset, load_dataset, validate, write_dataset

VECTORS_NAME = "vectors.svec"
META_NAME = "metadata.jsonl"
MODEL_NAME = "model.smap"

_SECTIONS = ("synth", "train", "eval")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    allowed = set(_SECTIONS) | {"seed"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"{path}: unknown top-level key {key!r}")
    for section, cls in (("synth", SynthConfig), ("train", TrainConfig), ("eval", EvalConfig)):
        if section in raw:
            if not isinstance(raw[section], dict):
                raise ConfigError(f"{path}: section {section!r} must be an object")
            known = {f.name for f in dataclasses.fields(cls)}
            known.discard("transform")  # not settable from a file
            for key in raw[section]:
                if key not in known:
                    raise ConfigError(f"{path}: unknown key {section}.{key!r}")
    return raw


def _build_section(cls, section: dict, overrides: dict):
    values = dict(section)
    values.update({k: v for k, v in overrides.items() if v is not None})
    fields = {f.name for f in dataclasses.fields(cls)}
    assert set(values) <= fields, sorted(set(values) - fields)
    return cls(**values)


def _resolve_seed(args, config: dict, section: dict) -> int | None:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if "seed" in section:
        return section["seed"]
    if "seed" in config:
        return config["seed"]
    return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, resolved: dict, outputs: list[str]) -> None:
    manifest = {"command": command, "config": resolved, "outputs": outputs}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _dataset_paths(dataset_dir: str) -> tuple[Path, Path]:
    base = Path(dataset_dir)
    return base / VECTORS_NAME, base / META_NAME


def _load_dataset_arg(args) -> Dataset:
    vec, meta = _dataset_paths(args.dataset)
    return load_dataset(vec, meta)


def _load_model_arg(args) -> LinearMap | None:
    if getattr(args, "baseline", False):
        return None
    if getattr(args, "model", None) is None:
        raise ConfigError("pass --model PATH or --baseline")
    return load_map(args.model)


def _config_dict(cfg) -> dict:
    out = dataclasses.asdict(cfg)
    out.pop("transform", None)
    return out


def cmd_synth(args) -> int:
    config = _load_config(args.config)
    section = dict(config.get("synth", {}))
    seed = _resolve_seed(args, config, section)
    section.pop("seed", None)
    cfg = _build_section(SynthConfig, section, {"seed": seed})
    d = generate_synthetic(cfg)
    out = _out_dir(args)
    write_dataset(d, out / VECTORS_NAME, out / META_NAME)
    _write_manifest(out, "synth", _config_dict(cfg), [VECTORS_NAME, META_NAME])
    return 0


def cmd_ingest(args) -> int:
    d = _load_dataset_arg(args)
    violations = validate(d)
    out = _out_dir(args)
    payload = {
        "tokens": len(d.tokens),
        "groups": len(d.groups),
        "dim": d.store.dim,
        "has_constituency": d.has_constituency,
        "has_dependency": d.has_dependency,
        "violations": [str(v) for v in violations],
    }
    (out / "validation.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest(
        out, "ingest", {"dataset": args.dataset, "seed": args.seed or 0}, ["validation.json"]
    )
    if violations:
        print(f"{len(violations)} violation(s); see validation.json", file=sys.stderr)
        return 1
    return 0


def cmd_sample_pairs(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config, {}) or 0
    d = _load_dataset_arg(args)
    pairs = sample_pairs(d, args.pairs_per_group, seed=seed)
    out = _out_dir(args)
    with open(out / "pairs.jsonl", "w") as f:
        for p in pairs:
            f.write(json.dumps(dataclasses.asdict(p)) + "\n")
    _write_manifest(
        out,
        "sample-pairs",
        {"pairs_per_group": args.pairs_per_group, "seed": seed, "dataset": args.dataset},
        ["pairs.jsonl"],
    )
    return 0


def cmd_train(args) -> int:
    config = _load_config(args.config)
    section = dict(config.get("train", {}))
    seed = _resolve_seed(args, config, section)
    section.pop("seed", None)
    overrides = {
        "seed": seed,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "out_dim": args.out_dim,
    }
    cfg = _build_section(TrainConfig, section, overrides)
    d = _load_dataset_arg(args)
    out = _out_dir(args)
    _, report = train(d, cfg, out_dir=out)
    (out / "train_report.json").write_text(
        json.dumps(
            {
                "epoch_losses": report.epoch_losses,
                "skipped": report.skipped,
                "wall_time": report.wall_time,
            },
            indent=2,
        )
        + "\n"
    )
    _write_manifest(out, "train", _config_dict(cfg), [MODEL_NAME, "train_report.json"])
    return 0


def _eval_config(args, purity: bool = False) -> EvalConfig:
    config = _load_config(args.config)
    section = dict(config.get("eval", {}))
    seed = _resolve_seed(args, config, section)
    section.pop("seed", None)
    overrides: dict = {"seed": seed}
    if getattr(args, "queries", None) is not None:
        overrides["n_queries"] = args.queries
    if getattr(args, "exclusion", None) is not None:
        overrides["exclusion"] = args.exclusion
    if getattr(args, "hard", None) is not None:
        overrides["hard_top_pos"] = args.hard
    if purity and getattr(args, "purity", None) is not None:
        overrides["kmeans_ks"] = tuple(int(k) for k in args.purity.split(","))
    cfg = _build_section(EvalConfig, section, overrides)
    if isinstance(cfg.kmeans_ks, list):
        cfg = dataclasses.replace(cfg, kmeans_ks=tuple(cfg.kmeans_ks))
    return cfg


def cmd_eval_nn(args) -> int:
    cfg = _eval_config(args)
    cfg.transform = _load_model_arg(args)
    d = _load_dataset_arg(args)
    report = nn_agreement(d, cfg)
    out = _out_dir(args)
    (out / "eval_nn.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    outputs = ["eval_nn.json"]
    if args.dump:
        records = retrieval_dump(d, retrieve_neighbors(d, cfg))
        with open(out / "nn_pairs.jsonl", "w") as f:
            for rec in records:
                f.write(json.dumps(rec) + "\n")
        outputs.append("nn_pairs.jsonl")
    resolved = _config_dict(cfg)
    resolved["model"] = args.model if not args.baseline else None
    _write_manifest(out, "eval-nn", resolved, outputs)
    return 0


def cmd_eval_purity(args) -> int:
    cfg = _eval_config(args, purity=True)
    cfg.transform = _load_model_arg(args)
    d = _load_dataset_arg(args)
    purity = kmeans_purity(d, cfg)
    out = _out_dir(args)
    payload = {str(k): v for k, v in sorted(purity.items())}
    (out / "eval_purity.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    resolved = _config_dict(cfg)
    resolved["model"] = args.model if not args.baseline else None
    _write_manifest(out, "eval-purity", resolved, ["eval_purity.json"])
    return 0


def cmd_probe(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args, config, {}) or 0
    sizes = [int(s) for s in args.train_sizes.split(",")]
    transform = _load_model_arg(args)
    d = _load_dataset_arg(args)
    result = probe_fewshot(d, transform, sizes, seed=seed)
    out = _out_dir(args)
    payload = {
        "accuracy": {str(k): v for k, v in sorted(result.accuracy.items())},
        "majority": result.majority,
    }
    (out / "probe.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(
        out,
        "probe",
        {"train_sizes": sizes, "seed": seed, "model": args.model if not args.baseline else None},
        ["probe.json"],
    )
    return 0


def cmd_export(args) -> int:
    d = _load_dataset_arg(args)
    transform = load_map(args.model) if args.model else None
    reps = token_representations(d, transform)
    out = _out_dir(args)
    with open(out / "tokens_dump.jsonl", "w") as f:
        for k, t in enumerate(d.tokens):
            f.write(
                json.dumps(
                    {
                        "row": t.row,
                        "group_id": t.group_id,
                        "sent_id": t.sent_id,
                        "tok_idx": t.tok_idx,
                        "form": t.form,
                        "pos": t.pos,
                        "dep": t.dep,
                        "head_dep": t.head_dep,
                        "depth": t.depth,
                        "lex_id": t.lex_id,
                        "is_function": t.is_function,
                        "rep": [float(v) for v in reps[k]],
                    }
                )
                + "\n"
            )
    _write_manifest(
        out,
        "export",
        {"model": args.model, "dataset": args.dataset, "seed": args.seed or 0},
        ["tokens_dump.jsonl"],
    )
    return 0


def _add_common(p: argparse.ArgumentParser, dataset: bool = True) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="cap internal thread pools")
    if dataset:
        p.add_argument("--dataset", required=True, help="dataset directory")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="trained .smap file")
    p.add_argument("--baseline", action="store_true", help="evaluate raw vectors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p, dataset=False)

    p = sub.add_parser("ingest", help="load, validate, and report on a dataset")
    _add_common(p)

    p = sub.add_parser("sample-pairs", help="dump the training pair pool")
    _add_common(p)
    p.add_argument("--pairs-per-group", type=int, default=11)

    p = sub.add_parser("train", help="train the structural map")
    _add_common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--out-dim", type=int)

    p = sub.add_parser("eval-nn", help="closest-word agreement")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--queries", type=int)
    p.add_argument("--exclusion", choices=structeval.EXCLUSION_MODES)
    p.add_argument("--hard", type=int, nargs="?", const=5, help="restrict queries to top-N entropy POS tags")
    p.add_argument("--dump", action="store_true", help="also write per-query retrieval records")

    p = sub.add_parser("eval-purity", help="k-means cluster purity")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--purity", help="comma-separated K values")

    p = sub.add_parser("probe", help="few-shot dependency-label probe")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--train-sizes", default="50,100,200,500")

    p = sub.add_parser("export", help="per-token label/representation dump")
    _add_common(p)
    p.add_argument("--model", help="trained .smap file (omit for raw vectors)")

    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "sample-pairs": cmd_sample_pairs,
    "train": cmd_train,
    "eval-nn": cmd_eval_nn,
    "eval-purity": cmd_eval_purity,
    "probe": cmd_probe,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    runner = _COMMANDS[args.command]
    try:
        if getattr(args, "threads", None):
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return runner(args)
        return runner(args)
    except (StructmapError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
