"""Embedding dumps, depth annotations, and measurement-mode selection.

The on-disk embedding format ("TPEB") is a flat little-endian stream:

    magic "TPEB" | u32 version | u32 n
    per sentence:
        u16 id length | UTF-8 id | u32 L
        L  u8 token-kind flags (0 = word piece, 1 = special)
        L  i32 word indices (-1 for special tokens)
        L*n f32 vectors, row major

It is streamable and seekable, and deliberately free of any language- or
model-specific assumptions.  Depth annotations arrive either as head-column
dependency files (CoNLL-style, head in column 7) or as JSON lines of
``{"id": ..., "depths": [...]}``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .constraints import DepthSequence
from .errors import (
    AmbiguityError,
    CycleError,
    FormatError,
    InvalidInputError,
    MissingAlignmentError,
    ShapeError,
)

TPEB_MAGIC = b"TPEB"
TPEB_VERSION = 1

WORD_PIECE = 0
SPECIAL = 1

MODES = ("e1", "e2", "e3", "e4")


@dataclass
class SentenceEmbedding:
    """One sentence's vectors plus token-kind and word-alignment metadata."""

    sentence_id: str
    vectors: np.ndarray     # (L, n)
    token_kinds: np.ndarray  # (L,) uint8
    word_index: np.ndarray   # (L,) int32, -1 for specials

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 1:
            raise InvalidInputError(
                f"sentence {self.sentence_id!r}: vectors must be a nonempty 2-d array"
            )
        L = self.vectors.shape[0]
        self.token_kinds = np.asarray(self.token_kinds, dtype=np.uint8)
        self.word_index = np.asarray(self.word_index, dtype=np.int32)
        if self.token_kinds.shape != (L,) or self.word_index.shape != (L,):
            raise ShapeError(
                f"sentence {self.sentence_id!r}: metadata length != vector count {L}"
            )
        if not np.all(np.isin(self.token_kinds, (WORD_PIECE, SPECIAL))):
            raise InvalidInputError("token kinds must be 0 (word piece) or 1 (special)")
        if np.any(self.word_index[self.token_kinds == SPECIAL] != -1):
            raise InvalidInputError("special tokens must carry word index -1")
        wp = self.word_index[self.token_kinds == WORD_PIECE]
        if wp.size and np.any(np.diff(wp[wp >= 0]) < 0):
            raise InvalidInputError("word indices must be nondecreasing over word pieces")

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def n(self) -> int:
        return int(self.vectors.shape[1])

    def num_words(self) -> int:
        wp = self.word_index[self.word_index >= 0]
        return int(np.unique(wp).size)

    def has_alignment(self) -> bool:
        return bool(np.all(self.word_index[self.token_kinds == WORD_PIECE] >= 0))


@dataclass
class Corpus:
    """A list of sentence embeddings with a shared dimension and optional labels."""

    sentences: list[SentenceEmbedding]
    n: int
    annotations: dict[str, DepthSequence] = field(default_factory=dict)

    def __post_init__(self):
        for s in self.sentences:
            if s.n != self.n:
                raise ShapeError(
                    f"sentence {s.sentence_id!r} has dimension {s.n}, corpus has {self.n}"
                )

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def annotation_for(self, sentence: SentenceEmbedding) -> DepthSequence | None:
        return self.annotations.get(sentence.sentence_id)


@dataclass(frozen=True)
class DepthAnnotation:
    """Gold word depths for one sentence, root at depth 1."""

    sentence_id: str
    word_depths: DepthSequence


# ---------------------------------------------------------------------------
# TPEB reader / writer


def write_embeddings(corpus: Corpus, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(TPEB_MAGIC)
        fh.write(struct.pack("<I", TPEB_VERSION))
        fh.write(struct.pack("<I", corpus.n))
        for sent in corpus.sentences:
            _write_sentence(fh, sent, corpus.n)


def _write_sentence(fh: BinaryIO, sent: SentenceEmbedding, n: int) -> None:
    ident = sent.sentence_id.encode("utf-8")
    if len(ident) > 0xFFFF:
        raise InvalidInputError(f"sentence id too long ({len(ident)} bytes)")
    fh.write(struct.pack("<H", len(ident)))
    fh.write(ident)
    fh.write(struct.pack("<I", len(sent)))
    fh.write(sent.token_kinds.astype(np.uint8).tobytes())
    fh.write(sent.word_index.astype("<i4").tobytes())
    fh.write(np.ascontiguousarray(sent.vectors, dtype="<f4").tobytes())


class _Reader:
    """Byte cursor that reports the offset of any truncated or bad field."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise FormatError(
                f"{self.path}: truncated while reading {what}", offset=self.pos
            )
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def read_embeddings(path: str | Path) -> Corpus:
    """Parse a TPEB file; the inverse of :func:`write_embeddings` bit for bit."""
    raw = Path(path).read_bytes()
    r = _Reader(raw, str(path))
    magic = r.take(4, "magic")
    if magic != TPEB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {TPEB_MAGIC!r}", offset=0)
    version = r.u32("version")
    if version != TPEB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}", offset=4)
    n = r.u32("dimension")
    if n < 1:
        raise FormatError(f"{path}: nonpositive dimension {n}", offset=8)
    sentences = []
    while not r.exhausted:
        id_len = r.u16("sentence id length")
        ident = r.take(id_len, "sentence id").decode("utf-8")
        L = r.u32(f"token count of {ident!r}")
        if L < 1:
            raise FormatError(f"{path}: sentence {ident!r} has zero tokens", offset=r.pos - 4)
        kinds = np.frombuffer(r.take(L, "token kinds"), dtype=np.uint8)
        word_index = np.frombuffer(r.take(4 * L, "word indices"), dtype="<i4")
        vec_bytes = r.take(4 * L * n, f"vectors of {ident!r} ({L}x{n})")
        vectors = np.frombuffer(vec_bytes, dtype="<f4").reshape(L, n)
        sentences.append(
            SentenceEmbedding(ident, vectors.copy(), kinds.copy(), word_index.copy())
        )
    return Corpus(sentences, n)


# ---------------------------------------------------------------------------
# Depth annotations


def read_conllu_depths(path: str | Path) -> list[DepthAnnotation]:
    """Derive word depths from a head-column dependency file.

    Depth of a word is one plus the depth of its head; the root (head 0) has
    depth 1.  Multiword range lines and empty nodes are skipped.
    """
    annotations = []
    tokens: list[tuple[int, int]] = []
    sent_id: str | None = None
    count = 0

    def flush():
        nonlocal tokens, sent_id, count
        if tokens:
            ident = sent_id if sent_id is not None else f"sent-{count}"
            annotations.append(_depths_from_heads(ident, tokens, str(path)))
            count += 1
        tokens = []
        sent_id = None

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                if "=" in line:
                    key, _, value = line.lstrip("# ").partition("=")
                    if key.strip() == "sent_id":
                        sent_id = value.strip()
                continue
            if not line.strip():
                flush()
                continue
            cols = line.split("\t")
            if len(cols) < 7:
                raise FormatError(f"{path}:{lineno}: expected >= 7 tab-separated columns")
            tok_id = cols[0]
            if "-" in tok_id or "." in tok_id:
                continue  # multiword range / empty node
            try:
                wid = int(tok_id)
                head = int(cols[6])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer id or head") from exc
            tokens.append((wid, head))
    flush()
    return annotations


def _depths_from_heads(
    ident: str, tokens: list[tuple[int, int]], path: str
) -> DepthAnnotation:
    ids = [t for t, _ in tokens]
    if ids != list(range(1, len(ids) + 1)):
        raise FormatError(f"{path}: sentence {ident!r} has non-consecutive word ids")
    heads = {t: h for t, h in tokens}
    roots = [t for t, h in tokens if h == 0]
    if len(roots) != 1:
        raise AmbiguityError(
            f"{path}: sentence {ident!r} has {len(roots)} roots, expected 1"
        )
    depths: dict[int, int] = {}

    def depth_of(word: int, trail: set[int]) -> int:
        if word in depths:
            return depths[word]
        if word in trail:
            raise CycleError(f"{path}: sentence {ident!r} has a head cycle at word {word}")
        trail.add(word)
        head = heads.get(word)
        if head is None:
            raise FormatError(f"{path}: sentence {ident!r} head points to missing word {word}")
        d = 1 if head == 0 else 1 + depth_of(head, trail)
        depths[word] = d
        return d

    for w in ids:
        depth_of(w, set())
    return DepthAnnotation(ident, DepthSequence(depths[w] for w in ids))


def read_jsonl_depths(path: str | Path) -> list[DepthAnnotation]:
    """Read annotations stored as JSON lines of ``{"id": ..., "depths": [...]}``."""
    annotations = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON") from exc
            if "id" not in obj or "depths" not in obj:
                raise FormatError(f"{path}:{lineno}: missing 'id' or 'depths' key")
            annotations.append(
                DepthAnnotation(str(obj["id"]), DepthSequence(obj["depths"]))
            )
    return annotations


def write_jsonl_depths(annotations: Iterable[DepthAnnotation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ann in annotations:
            fh.write(
                json.dumps(
                    {"id": ann.sentence_id, "depths": list(ann.word_depths.values)}
                )
                + "\n"
            )


def read_depths(path: str | Path) -> list[DepthAnnotation]:
    """Dispatch on extension: .jsonl/.json lines or head-column dependency text."""
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return read_jsonl_depths(path)
    return read_conllu_depths(path)


def attach_annotations(corpus: Corpus, annotations: Iterable[DepthAnnotation]) -> Corpus:
    for ann in annotations:
        corpus.annotations[ann.sentence_id] = ann.word_depths
    return corpus


# ---------------------------------------------------------------------------
# Measurement modes


def select_mode(sentence: SentenceEmbedding, mode: str) -> SentenceEmbedding:
    """Carve one sentence into the requested measurement view.

    e1 keeps every token including specials, e2 drops specials, e3 averages
    each word's sub-token vectors while keeping specials in place, and e4
    keeps only the per-word averages.
    """
    if mode not in MODES:
        raise InvalidInputError(f"unknown measurement mode {mode!r}")
    if mode == "e1":
        return sentence
    if mode == "e2":
        keep = sentence.token_kinds == WORD_PIECE
        if not np.any(keep):
            raise InvalidInputError(
                f"sentence {sentence.sentence_id!r} has no word-piece tokens"
            )
        return SentenceEmbedding(
            sentence.sentence_id,
            sentence.vectors[keep],
            sentence.token_kinds[keep],
            sentence.word_index[keep],
        )
    # e3 / e4 need complete word alignment
    if not sentence.has_alignment():
        raise MissingAlignmentError(
            f"sentence {sentence.sentence_id!r} lacks word alignment needed for {mode}"
        )
    rows: list[tuple[int, np.ndarray, int, int]] = []  # (first pos, vector, kind, widx)
    seen: dict[int, int] = {}
    for pos in range(len(sentence)):
        if sentence.token_kinds[pos] == SPECIAL:
            if mode == "e3":
                rows.append((pos, sentence.vectors[pos], SPECIAL, -1))
            continue
        widx = int(sentence.word_index[pos])
        if widx not in seen:
            seen[widx] = len(rows)
            rows.append((pos, sentence.vectors[pos].astype(np.float64), WORD_PIECE, widx))
        else:
            at = seen[widx]
            first_pos, acc, kind, wi = rows[at]
            rows[at] = (first_pos, acc + sentence.vectors[pos], kind, wi)
    counts: dict[int, int] = {}
    for pos in range(len(sentence)):
        if sentence.token_kinds[pos] == WORD_PIECE:
            widx = int(sentence.word_index[pos])
            counts[widx] = counts.get(widx, 0) + 1
    rows.sort(key=lambda item: item[0])
    vectors, kinds, word_index = [], [], []
    for _, vec, kind, widx in rows:
        if kind == WORD_PIECE:
            vec = np.asarray(vec, dtype=np.float64) / counts[widx]
        vectors.append(np.asarray(vec, dtype=sentence.vectors.dtype))
        kinds.append(kind)
        word_index.append(widx)
    if not vectors:
        raise InvalidInputError(f"sentence {sentence.sentence_id!r} has no words")
    return SentenceEmbedding(
        sentence.sentence_id,
        np.stack(vectors),
        np.array(kinds, dtype=np.uint8),
        np.array(word_index, dtype=np.int32),
    )


def select_mode_corpus(corpus: Corpus, mode: str) -> Corpus:
    return Corpus(
        [select_mode(s, mode) for s in corpus.sentences],
        corpus.n,
        dict(corpus.annotations),
    )


def gold_targets(sentence: SentenceEmbedding, annotation: DepthSequence) -> np.ndarray:
    """Per-position gold depths with NaN where no gold exists.

    Word-piece tokens inherit the depth of their word; special tokens carry
    no gold depth and are excluded from supervised residuals.
    """
    depths = annotation.values
    out = np.full(len(sentence), np.nan, dtype=np.float64)
    for pos in range(len(sentence)):
        widx = int(sentence.word_index[pos])
        if widx < 0:
            continue
        if widx >= len(depths):
            raise ShapeError(
                f"sentence {sentence.sentence_id!r}: word index {widx} outside "
                f"annotation of length {len(depths)}"
            )
        out[pos] = depths[widx]
    return out
