"""Assemble encoded groups into the consumer toolkit's dataset files.

The vector and metadata formats are written here byte-for-byte against
their published layout (SVEC header + little-endian float32 payload;
flags line + one JSON token record per line), so the files are loadable
by the consumer without importing it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .config import GenConfig
from .encode import WordEncoder
from .variants import VariantSet


class Annotation(Protocol):
    dep: str
    head_dep: str
    depth: int
    cpath: list[str]


@dataclass
class TokenAnnotation:
    dep: str
    head_dep: str
    depth: int
    cpath: list[str]


class Annotator(Protocol):
    """Structural annotation backend (external dependency/constituency parsers)."""

    has_dependency: bool
    has_constituency: bool

    def annotate(self, tokens: list[str]) -> list[TokenAnnotation]: ...

VECTOR_MAGIC = b"SVEC"
VECTOR_VERSION = 1
VECTOR_HEADER = struct.Struct("<4sHIQ")
FORMAT_VERSION = 1

VECTORS_NAME = "vectors.svec"
META_NAME = "metadata.jsonl"
LOG_NAME = "generation_log.jsonl"


@dataclass
class ExportResult:
    vector_path: Path
    meta_path: Path
    n_tokens: int
    n_sentences: int
    dim: int


_NO_ANNOTATION = TokenAnnotation(dep="", head_dep="", depth=0, cpath=[])


def _token_record(
    group_id: int,
    sent_id: int,
    variant: int,
    tok_idx: int,
    form: str,
    lex_ids: dict[str, int],
    pos: str,
    is_function: bool,
    ann: TokenAnnotation,
    row: int,
) -> dict:
    lex = lex_ids.setdefault(form, len(lex_ids))
    return {
        "group_id": group_id,
        "sent_id": sent_id,
        "variant": variant,
        "tok_idx": tok_idx,
        "form": form,
        "lex_id": lex,
        "pos": pos,
        "is_function": is_function,
        "dep": ann.dep,
        "head_dep": ann.head_dep,
        "depth": ann.depth,
        "cpath": list(ann.cpath),
        "row": row,
    }


def export_dataset(
    groups: list[VariantSet],
    cfg: GenConfig,
    encoder: WordEncoder,
    out_dir: str | Path,
    annotator: Annotator | None = None,
) -> ExportResult:
    """Encode original + variants of every group and write both files.

    Without an annotation backend the dependency/constituency flags stay
    false and the corresponding fields are left empty, which the consumer
    accepts dataset-wide.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    has_dependency = bool(annotator and annotator.has_dependency)
    has_constituency = bool(annotator and annotator.has_constituency)
    records: list[dict] = []
    chunks: list[np.ndarray] = []
    lex_ids: dict[str, int] = {}
    row = 0
    sent_id = 0
    for group_id, group in enumerate(groups):
        sentences = [group.original] + group.variants
        for variant, tokens in enumerate(sentences):
            vectors = encoder.encode(tokens)
            chunks.append(vectors.astype(np.float32))
            anns = annotator.annotate(tokens) if annotator else [_NO_ANNOTATION] * len(tokens)
            for i, form in enumerate(tokens):
                records.append(
                    _token_record(
                        group_id=group_id,
                        sent_id=sent_id,
                        variant=variant,
                        tok_idx=i,
                        form=form,
                        lex_ids=lex_ids,
                        pos=group.pos[i],
                        is_function=form in cfg.function_stoplist,
                        ann=anns[i],
                        row=row + i,
                    )
                )
            row += len(tokens)
            sent_id += 1

    data = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, encoder.dim), np.float32)
    vector_path = out_dir / VECTORS_NAME
    with open(vector_path, "wb") as f:
        f.write(VECTOR_HEADER.pack(VECTOR_MAGIC, VECTOR_VERSION, encoder.dim, data.shape[0]))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())

    meta_path = out_dir / META_NAME
    flags = {
        "format_version": FORMAT_VERSION,
        "has_constituency": has_constituency,
        "has_dependency": has_dependency,
    }
    with open(meta_path, "w") as f:
        f.write(json.dumps(flags) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")

    return ExportResult(
        vector_path=vector_path,
        meta_path=meta_path,
        n_tokens=len(records),
        n_sentences=sent_id,
        dim=encoder.dim,
    )


def write_generation_log(groups: list[VariantSet], out_dir: str | Path) -> Path:
    """One JSON line per substitution step, for post-hoc auditing."""
    path = Path(out_dir) / LOG_NAME
    with open(path, "w") as f:
        for group_id, group in enumerate(groups):
            for step in group.steps:
                f.write(
                    json.dumps(
                        {
                            "group_id": group_id,
                            "variant": step.variant,
                            "position": step.position,
                            "original": step.original,
                            "candidates": list(step.candidates),
                            "chosen": step.chosen,
                        }
                    )
                    + "\n"
                )
    return path
