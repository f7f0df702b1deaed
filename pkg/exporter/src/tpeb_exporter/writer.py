"""TPEB embedding-file writer.

The format is the consumer toolkit's external interface, duplicated here so
this package stays independent of it.  Little-endian throughout:

    magic "TPEB" | u32 version (=1) | u32 n
    per sentence:
        u16 id length | UTF-8 id | u32 L
        L   u8  token kinds (0 = word piece, 1 = special)
        L   i32 word indices (-1 for specials)
        L*n f32 vectors, row major
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TPEB_MAGIC = b"TPEB"
TPEB_VERSION = 1

WORD_PIECE = 0
SPECIAL = 1


@dataclass
class SentenceRecord:
    sentence_id: str
    vectors: np.ndarray      # (L, n) any float dtype; stored as f32
    token_kinds: np.ndarray  # (L,) 0/1
    word_index: np.ndarray   # (L,) int, -1 for specials

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        L = self.vectors.shape[0]
        self.token_kinds = np.asarray(self.token_kinds, dtype=np.uint8)
        self.word_index = np.asarray(self.word_index, dtype=np.int32)
        if self.vectors.ndim != 2 or L < 1:
            raise ValueError(f"{self.sentence_id!r}: vectors must be nonempty (L, n)")
        if self.token_kinds.shape != (L,) or self.word_index.shape != (L,):
            raise ValueError(f"{self.sentence_id!r}: metadata must match token count")


class TpebWriter:
    """Streams sentence records into one TPEB file."""

    def __init__(self, path: str | Path, n: int):
        self.n = int(n)
        self._fh = open(path, "wb")
        self._fh.write(TPEB_MAGIC)
        self._fh.write(struct.pack("<I", TPEB_VERSION))
        self._fh.write(struct.pack("<I", self.n))
        self.sentences_written = 0

    def add(self, record: SentenceRecord) -> None:
        if record.vectors.shape[1] != self.n:
            raise ValueError(
                f"{record.sentence_id!r}: dimension {record.vectors.shape[1]} != {self.n}"
            )
        ident = record.sentence_id.encode("utf-8")
        if len(ident) > 0xFFFF:
            raise ValueError(f"sentence id too long: {record.sentence_id!r}")
        self._fh.write(struct.pack("<H", len(ident)))
        self._fh.write(ident)
        self._fh.write(struct.pack("<I", record.vectors.shape[0]))
        self._fh.write(record.token_kinds.astype(np.uint8).tobytes())
        self._fh.write(record.word_index.astype("<i4").tobytes())
        self._fh.write(np.ascontiguousarray(record.vectors, dtype="<f4").tobytes())
        self.sentences_written += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
