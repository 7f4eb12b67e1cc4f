"""corpusbuild: turn a one-sentence-per-line corpus into dataset files.

    corpusbuild --input corpus.txt --out DIR [--smoke N] [--backend toy|hf]
                [--encoder-mode elmo-concat2|bert-mean+16] [--k 6] [--top 30]
                [--seed S]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import LexiconTagger, ToyMaskedLM
from .config import (
    DEFAULT_STOPLIST,
    EncoderUnavailableError,
    GenConfig,
    TaggerUnavailableError,
)
from .encode import WordEncoder, toy_word_encoder
from .export import export_dataset, write_generation_log
from .variants import generate_variants


def _backends(name: str, cfg: GenConfig):
    if name == "toy":
        return ToyMaskedLM(), LexiconTagger(cfg.function_stoplist), toy_word_encoder(cfg.encoder_mode)
    if name == "hf":
        from . import hf

        lm = hf.HFMaskedLM()
        tagger = hf.spacy_tagger()
        encoder = WordEncoder(cfg.encoder_mode, hf.HFLayeredEncoder())
        return lm, tagger, encoder
    raise ValueError(f"unknown backend {name!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corpusbuild", description=__doc__)
    p.add_argument("--input", required=True, help="plain text, one sentence per line")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--smoke", type=int, default=0, help="cap the corpus at N sentences")
    p.add_argument("--backend", choices=("toy", "hf"), default="toy")
    p.add_argument("--encoder-mode", choices=("elmo-concat2", "bert-mean+16"), default="elmo-concat2")
    p.add_argument("--k", type=int, default=6, help="variants per sentence")
    p.add_argument("--top", type=int, default=30, help="LM predictions considered per mask")
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = GenConfig(
        k_variants=args.k,
        top_predictions=args.top,
        function_stoplist=DEFAULT_STOPLIST,
        encoder_mode=args.encoder_mode,
        seed=args.seed,
    )
    try:
        cfg.check()
        lm, tagger, encoder = _backends(args.backend, cfg)
        lines = [ln.split() for ln in Path(args.input).read_text().splitlines() if ln.strip()]
        if args.smoke:
            lines = lines[: args.smoke]
        groups = []
        for tokens in lines:
            pos = tagger.tags(tokens)
            groups.append(generate_variants(tokens, pos, cfg, lm, tagger))
        out = Path(args.out)
        result = export_dataset(groups, cfg, encoder, out)
        write_generation_log(groups, out)
        manifest = {
            "backend": args.backend,
            "encoder_mode": cfg.encoder_mode,
            "k_variants": cfg.k_variants,
            "top_predictions": cfg.top_predictions,
            "seed": cfg.seed,
            "sentences": result.n_sentences,
            "tokens": result.n_tokens,
            "dim": result.dim,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except (EncoderUnavailableError, TaggerUnavailableError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
