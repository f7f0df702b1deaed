"""Per-layer hidden-state export.

Runs a pretrained encoder with ``output_hidden_states=True`` and writes one
TPEB file per requested layer: layer 0 is the embedding-layer output
(before any transformer block) and layer i includes the first i blocks.
Token kinds come from the tokenizer's special-tokens mask and word indices
from its word alignment (fast tokenizers derive it from offset mappings);
when the tokenizer cannot provide alignment, word indices are written as -1
and the word-level measurement modes are unavailable downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .writer import SPECIAL, WORD_PIECE, SentenceRecord, TpebWriter

logger = logging.getLogger(__name__)


@dataclass
class ExportJob:
    """What to export: model, layer indices, sentences, destination."""

    model: str                    # model name or local path
    layers: tuple[int, ...]
    input_path: str               # one sentence per line
    output_dir: str
    batch_size: int = 16
    device: str = "cpu"
    max_length: int | None = None  # defaults to the model's limit

    def __post_init__(self):
        if not self.layers:
            raise ValueError("at least one layer index is required")
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")


@dataclass
class ExportResult:
    files: dict[int, str]
    sentences_written: int
    sentences_skipped: int
    alignment_available: bool


def read_sentences(path: str | Path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    sentences = [line.strip() for line in lines if line.strip()]
    if not sentences:
        raise ValueError(f"{path}: no sentences found")
    return sentences


def _word_ids_available(tokenizer) -> bool:
    return bool(getattr(tokenizer, "is_fast", False))


def export(job: ExportJob) -> ExportResult:
    """Run the model over the input sentences and write one TPEB per layer."""
    tokenizer = AutoTokenizer.from_pretrained(job.model)
    model = AutoModel.from_pretrained(job.model)
    model.eval()
    device = torch.device(job.device)
    model.to(device)

    num_layers = model.config.num_hidden_layers
    for layer in job.layers:
        if not 0 <= layer <= num_layers:
            raise ValueError(
                f"layer {layer} outside [0, {num_layers}] for model {job.model!r}"
            )
    hidden_size = model.config.hidden_size
    max_length = job.max_length or tokenizer.model_max_length

    aligned = _word_ids_available(tokenizer)
    if not aligned:
        logger.warning(
            "tokenizer for %s provides no word alignment; word indices will be -1 "
            "and word-level measurement modes are unavailable", job.model,
        )

    sentences = read_sentences(job.input_path)
    outdir = Path(job.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {layer: outdir / f"layer_{layer}.tpeb" for layer in job.layers}
    writers = {layer: TpebWriter(path, hidden_size) for layer, path in paths.items()}

    skipped = 0
    written = 0
    try:
        for start in range(0, len(sentences), job.batch_size):
            batch = sentences[start : start + job.batch_size]
            kept_rows, encoded = _encode_batch(tokenizer, batch, max_length)
            skipped += len(batch) - len(kept_rows)
            if not kept_rows:
                continue
            inputs = {
                key: torch.as_tensor(value, device=device)
                for key, value in encoded["tensors"].items()
            }
            try:
                with torch.no_grad():
                    outputs = model(**inputs, output_hidden_states=True)
            except RuntimeError as err:
                if "out of memory" in str(err).lower():
                    raise RuntimeError(
                        f"ran out of memory on a batch of {len(kept_rows)}; "
                        f"retry with a smaller --batch-size"
                    ) from err
                raise
            hidden = outputs.hidden_states  # tuple: embeddings + one per block
            for row, original_row in enumerate(kept_rows):
                length = encoded["lengths"][row]
                kinds = encoded["kinds"][row][:length]
                word_index = encoded["word_index"][row][:length]
                # ids are global input line numbers so annotations stay aligned
                # even when overlong sentences are skipped
                ident = f"s{start + original_row:06d}"
                for layer, writer in writers.items():
                    vectors = hidden[layer][row, :length].cpu().numpy()
                    writer.add(
                        SentenceRecord(
                            ident,
                            vectors.astype(np.float32),
                            kinds,
                            word_index,
                        )
                    )
                written += 1
    finally:
        for writer in writers.values():
            writer.close()

    if skipped:
        logger.info("skipped %d sentences longer than %d tokens", skipped, max_length)
    return ExportResult(
        files={layer: str(path) for layer, path in paths.items()},
        sentences_written=written,
        sentences_skipped=skipped,
        alignment_available=aligned,
    )


def _encode_batch(tokenizer, batch: list[str], max_length: int):
    """Tokenize without truncation, dropping sentences over the length limit."""
    encoding = tokenizer(
        batch,
        padding=True,
        truncation=False,
        return_special_tokens_mask=True,
        return_tensors=None,
    )
    lengths = [sum(mask) for mask in encoding["attention_mask"]]
    kept_rows = [row for row, length in enumerate(lengths) if length <= max_length]

    kinds_all, word_index_all = [], []
    for row in range(len(batch)):
        special = np.asarray(encoding["special_tokens_mask"][row], dtype=np.uint8)
        kinds = np.where(special == 1, SPECIAL, WORD_PIECE).astype(np.uint8)
        if getattr(tokenizer, "is_fast", False):
            ids = encoding.word_ids(row)
            word_index = np.array(
                [-1 if w is None else int(w) for w in ids], dtype=np.int32
            )
            word_index[kinds == SPECIAL] = -1
        else:
            word_index = np.full(len(kinds), -1, dtype=np.int32)
        kinds_all.append(kinds)
        word_index_all.append(word_index)

    if kept_rows != list(range(len(batch))):
        keep = kept_rows
        tensors = {
            "input_ids": [encoding["input_ids"][r] for r in keep],
            "attention_mask": [encoding["attention_mask"][r] for r in keep],
        }
        if "token_type_ids" in encoding:
            tensors["token_type_ids"] = [encoding["token_type_ids"][r] for r in keep]
        lengths = [lengths[r] for r in keep]
        kinds_all = [kinds_all[r] for r in keep]
        word_index_all = [word_index_all[r] for r in keep]
    else:
        tensors = {
            "input_ids": encoding["input_ids"],
            "attention_mask": encoding["attention_mask"],
        }
        if "token_type_ids" in encoding:
            tensors["token_type_ids"] = encoding["token_type_ids"]

    return kept_rows, {
        "tensors": tensors,
        "lengths": lengths,
        "kinds": kinds_all,
        "word_index": word_index_all,
    }
