"""Dataset model and its bit-exact on-disk formats.

A dataset couples a dense float32 vector store with per-token structural
annotations (POS, dependency edge, parent's edge, tree depth, constituency
path, lexical identity) and a partition of sentences into equivalence
groups: sets of sentence variants that share length and function-word
placement position by position.

On-disk layout (little-endian throughout):

* vector file: magic ``SVEC``, version u16 = 1, dim u32, count u64
  (18-byte header), then ``count * dim`` consecutive float32 values,
  row-major.
* metadata file: one JSON object per line.  The first line holds the
  file-level flags ``{"format_version": 1, "has_constituency": ...,
  "has_dependency": ...}``; every following line is one token record with
  exactly the :class:`TokenRecord` fields.

Datasets are immutable after load: the vector array is marked read-only
and the record types are frozen, so any number of readers may share one
instance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    CountMismatchError,
    DimMismatchError,
    InconsistentGroupError,
    InvalidDatasetError,
    MetaFormatError,
    NonFiniteError,
    RowOutOfRangeError,
)

VECTOR_MAGIC = b"SVEC"
VECTOR_VERSION = 1
VECTOR_HEADER = struct.Struct("<4sHIQ")  # magic, version, dim, count -> 18 bytes
FORMAT_VERSION = 1

TOKEN_FIELDS = (
    "group_id",
    "sent_id",
    "variant",
    "tok_idx",
    "form",
    "lex_id",
    "pos",
    "is_function",
    "dep",
    "head_dep",
    "depth",
    "cpath",
    "row",
)

FLAG_FIELDS = ("format_version", "has_constituency", "has_dependency")


@dataclass(frozen=True)
class TokenRecord:
    """One word occurrence: a vector row plus its structural annotations."""

    group_id: int
    sent_id: int
    variant: int
    tok_idx: int
    form: str
    lex_id: int
    pos: str
    is_function: bool
    dep: str
    head_dep: str
    depth: int
    cpath: tuple[str, ...]
    row: int

    def to_json_obj(self) -> dict:
        obj = {name: getattr(self, name) for name in TOKEN_FIELDS}
        obj["cpath"] = list(self.cpath)
        return obj


class VectorStore:
    """Dense (count, dim) float32 matrix of token vectors, read-only."""

    def __init__(self, data: np.ndarray):
        data = np.ascontiguousarray(data, dtype=np.float32)
        if data.ndim != 2:
            raise DimMismatchError(f"vector data must be 2-D, got shape {data.shape}")
        data.setflags(write=False)
        self.data = data

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorStore):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(
                self.data.view(np.uint32), other.data.view(np.uint32)
            )
        )


@dataclass(frozen=True)
class EquivalenceGroup:
    """Sentence variants sharing token positions and function-word mask."""

    group_id: int
    sentence_ids: tuple[int, ...]
    length: int
    content_indices: frozenset[int]


@dataclass
class Dataset:
    store: VectorStore
    tokens: list[TokenRecord]
    groups: list[EquivalenceGroup]
    has_constituency: bool
    has_dependency: bool

    def group_by_id(self, group_id: int) -> EquivalenceGroup:
        for g in self.groups:
            if g.group_id == group_id:
                return g
        raise KeyError(group_id)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.store == other.store
            and self.tokens == other.tokens
            and self.groups == other.groups
            and self.has_constituency == other.has_constituency
            and self.has_dependency == other.has_dependency
        )


@dataclass(frozen=True)
class Violation:
    """One invariant breach, naming the offending record."""

    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}[{self.subject}]: {self.message}"


def build_groups(tokens: list[TokenRecord]) -> list[EquivalenceGroup]:
    """Derive the group table from token records.

    Group ids are emitted in ascending order; sentence ids keep their order
    of first appearance in the token stream.  Raises InconsistentGroupError
    when variants of one group disagree on token positions or function-word
    placement.
    """
    by_group: dict[int, dict[int, dict[int, TokenRecord]]] = {}
    sent_order: dict[int, list[int]] = {}
    for tok in tokens:
        sents = by_group.setdefault(tok.group_id, {})
        if tok.sent_id not in sents:
            sents[tok.sent_id] = {}
            sent_order.setdefault(tok.group_id, []).append(tok.sent_id)
        if tok.tok_idx in sents[tok.sent_id]:
            raise InconsistentGroupError(
                f"group {tok.group_id} sentence {tok.sent_id}: duplicate tok_idx {tok.tok_idx}"
            )
        sents[tok.sent_id][tok.tok_idx] = tok

    groups = []
    for gid in sorted(by_group):
        sents = by_group[gid]
        ordered = sent_order[gid]
        first = sents[ordered[0]]
        positions = sorted(first)
        func_mask = {i: first[i].is_function for i in positions}
        for sid in ordered[1:]:
            other = sents[sid]
            if sorted(other) != positions:
                raise InconsistentGroupError(
                    f"group {gid}: sentences {ordered[0]} and {sid} differ in token positions"
                )
            for i in positions:
                if other[i].is_function != func_mask[i]:
                    raise InconsistentGroupError(
                        f"group {gid}: function-word mask differs at tok_idx {i} "
                        f"between sentences {ordered[0]} and {sid}"
                    )
        groups.append(
            EquivalenceGroup(
                group_id=gid,
                sentence_ids=tuple(ordered),
                length=len(positions),
                content_indices=frozenset(i for i in positions if not func_mask[i]),
            )
        )
    return groups


def validate(d: Dataset) -> list[Violation]:
    """Check every record-level invariant; violations are data, not errors."""
    out: list[Violation] = []
    count = d.store.count
    lex_by_form: dict[str, int] = {}
    for k, tok in enumerate(d.tokens):
        subject = f"token#{k}(g{tok.group_id},s{tok.sent_id},i{tok.tok_idx})"
        if tok.row < 0 or tok.row >= count:
            out.append(Violation("row", subject, f"row {tok.row} outside store of {count}"))
        if tok.depth < 0:
            out.append(Violation("depth", subject, f"negative depth {tok.depth}"))
        if d.has_constituency and not tok.cpath:
            out.append(Violation("cpath", subject, "empty cpath in constituency-annotated dataset"))
        seen = lex_by_form.setdefault(tok.form, tok.lex_id)
        if seen != tok.lex_id:
            out.append(
                Violation("lex_id", subject, f"form {tok.form!r} maps to lex_ids {seen} and {tok.lex_id}")
            )
    known = {g.group_id for g in d.groups}
    for k, tok in enumerate(d.tokens):
        if tok.group_id not in known:
            out.append(Violation("group", f"token#{k}", f"unknown group_id {tok.group_id}"))
    for g in d.groups:
        if len(g.sentence_ids) < 2:
            out.append(
                Violation("group_size", f"group{g.group_id}", "fewer than 2 sentences, unusable for training")
            )
    return out


# Violation kinds that only limit training usability, not storage validity.
_SOFT_KINDS = frozenset({"group_size"})


def _read_vector_file(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < VECTOR_HEADER.size:
        raise BadMagicError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dim, count = VECTOR_HEADER.unpack_from(raw)
    if magic != VECTOR_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != VECTOR_VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    payload = raw[VECTOR_HEADER.size:]
    expected = count * dim * 4
    if len(payload) != expected:
        raise CountMismatchError(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    if data.size and not np.all(np.isfinite(data)):
        bad = int(np.argwhere(~np.isfinite(data))[0][0])
        raise NonFiniteError(f"{path}: non-finite value in row {bad}")
    return data


def _parse_flags(line: str, path: Path) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MetaFormatError(f"{path}:1: not valid JSON ({e})") from None
    if not isinstance(obj, dict) or set(obj) != set(FLAG_FIELDS):
        raise MetaFormatError(f"{path}:1: flags line must hold exactly {FLAG_FIELDS}")
    if obj["format_version"] != FORMAT_VERSION:
        raise MetaFormatError(f"{path}:1: unsupported format_version {obj['format_version']}")
    return obj


def _parse_token_line(line: str, lineno: int, path: Path) -> TokenRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MetaFormatError(f"{path}:{lineno}: not valid JSON ({e})") from None
    if not isinstance(obj, dict):
        raise MetaFormatError(f"{path}:{lineno}: record is not an object")
    keys = set(obj)
    expected = set(TOKEN_FIELDS)
    if keys != expected:
        extra = sorted(keys - expected)
        missing = sorted(expected - keys)
        raise MetaFormatError(
            f"{path}:{lineno}: wrong fields (extra={extra}, missing={missing})"
        )
    try:
        return TokenRecord(
            group_id=int(obj["group_id"]),
            sent_id=int(obj["sent_id"]),
            variant=int(obj["variant"]),
            tok_idx=int(obj["tok_idx"]),
            form=str(obj["form"]),
            lex_id=int(obj["lex_id"]),
            pos=str(obj["pos"]),
            is_function=bool(obj["is_function"]),
            dep=str(obj["dep"]),
            head_dep=str(obj["head_dep"]),
            depth=int(obj["depth"]),
            cpath=tuple(str(c) for c in obj["cpath"]),
            row=int(obj["row"]),
        )
    except (TypeError, ValueError) as e:
        raise MetaFormatError(f"{path}:{lineno}: bad field value ({e})") from None


def load_dataset(
    vector_path: str | Path,
    meta_path: str | Path,
    expect_dim: int | None = None,
) -> Dataset:
    """Load and validate a dataset; read-only and repeatable.

    Raises the format errors documented in :mod:`structmap.errors`; hard
    record-level violations surface as InvalidDatasetError.  Groups with a
    single sentence load fine (they are merely unusable for training).
    """
    vector_path = Path(vector_path)
    meta_path = Path(meta_path)
    data = _read_vector_file(vector_path)
    if expect_dim is not None and data.shape[1] != expect_dim:
        raise DimMismatchError(
            f"{vector_path}: dim {data.shape[1]} != expected {expect_dim}"
        )

    lines = meta_path.read_text().splitlines()
    if not lines:
        raise MetaFormatError(f"{meta_path}: missing flags line")
    flags = _parse_flags(lines[0], meta_path)
    tokens = [
        _parse_token_line(line, no, meta_path)
        for no, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]

    count = data.shape[0]
    for k, tok in enumerate(tokens):
        if tok.row < 0 or tok.row >= count:
            raise RowOutOfRangeError(
                f"{meta_path}: token#{k} row {tok.row} outside store of {count}"
            )

    groups = build_groups(tokens)
    d = Dataset(
        store=VectorStore(data),
        tokens=tokens,
        groups=groups,
        has_constituency=bool(flags["has_constituency"]),
        has_dependency=bool(flags["has_dependency"]),
    )
    hard = [v for v in validate(d) if v.kind not in _SOFT_KINDS]
    if hard:
        raise InvalidDatasetError(hard)
    return d


def write_dataset(d: Dataset, vector_path: str | Path, meta_path: str | Path) -> None:
    """Write both files; load_dataset round-trips them bit-for-bit."""
    vector_path = Path(vector_path)
    meta_path = Path(meta_path)

    header = VECTOR_HEADER.pack(VECTOR_MAGIC, VECTOR_VERSION, d.store.dim, d.store.count)
    with open(vector_path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(d.store.data, dtype="<f4").tobytes())

    flags = {
        "format_version": FORMAT_VERSION,
        "has_constituency": d.has_constituency,
        "has_dependency": d.has_dependency,
    }
    with open(meta_path, "w") as f:
        f.write(json.dumps(flags) + "\n")
        for tok in d.tokens:
            f.write(json.dumps(tok.to_json_obj()) + "\n")
