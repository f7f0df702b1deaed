"""Exporter behavior: file structure, alignment, layer semantics, CLI."""

import json
import struct
import subprocess
import sys

import numpy as np
import pytest
import torch
from transformers import AutoModel, AutoTokenizer

from tpeb_exporter import ExportJob, export, read_sentences
from tpeb_exporter.writer import SPECIAL, WORD_PIECE


def read_tpeb(path):
    """Minimal reference parser for the public TPEB layout."""
    raw = open(path, "rb").read()
    assert raw[:4] == b"TPEB"
    version, n = struct.unpack("<II", raw[4:12])
    assert version == 1
    pos = 12
    sentences = []
    while pos < len(raw):
        (id_len,) = struct.unpack("<H", raw[pos : pos + 2])
        pos += 2
        ident = raw[pos : pos + id_len].decode("utf-8")
        pos += id_len
        (L,) = struct.unpack("<I", raw[pos : pos + 4])
        pos += 4
        kinds = np.frombuffer(raw[pos : pos + L], dtype=np.uint8)
        pos += L
        word_index = np.frombuffer(raw[pos : pos + 4 * L], dtype="<i4")
        pos += 4 * L
        vectors = np.frombuffer(raw[pos : pos + 4 * L * n], dtype="<f4").reshape(L, n)
        pos += 4 * L * n
        sentences.append((ident, kinds, word_index, vectors))
    return n, sentences


@pytest.fixture(scope="module")
def small_export(tiny_model_dir, workspace):
    text = workspace / "two.txt"
    text.write_text("the quick fox chased a small dog\nevery painter followed the garden\n")
    outdir = workspace / "small_dump"
    result = export(
        ExportJob(
            model=str(tiny_model_dir),
            layers=(0, 2),
            input_path=str(text),
            output_dir=str(outdir),
            batch_size=8,
        )
    )
    return result


class TestExportStructure:
    def test_two_files_two_sentences(self, small_export):
        assert set(small_export.files) == {0, 2}
        assert small_export.sentences_written == 2
        for path in small_export.files.values():
            n, sentences = read_tpeb(path)
            assert n == 32
            assert [s[0] for s in sentences] == ["s000000", "s000001"]

    def test_specials_flagged_and_unaligned(self, small_export):
        _, sentences = read_tpeb(small_export.files[0])
        for _, kinds, word_index, _ in sentences:
            assert kinds[0] == SPECIAL and kinds[-1] == SPECIAL  # [CLS] ... [SEP]
            assert word_index[0] == -1 and word_index[-1] == -1
            assert np.all(word_index[kinds == WORD_PIECE] >= 0)

    def test_split_word_shares_word_index(self, small_export):
        # "painter" and "garden" split into two pieces each on line 2
        _, sentences = read_tpeb(small_export.files[0])
        _, kinds, word_index, _ = sentences[1]
        pieces = word_index[kinds == WORD_PIECE]
        # line 2 has 5 words; painter -> 2 pieces, followed -> 2, garden -> 2
        assert len(pieces) == 8
        counts = {w: int(np.sum(pieces == w)) for w in np.unique(pieces)}
        assert sorted(counts.values()) == [1, 1, 2, 2, 2]
        assert list(pieces) == sorted(pieces)  # nondecreasing over word pieces

    def test_layer0_is_embedding_output(self, small_export, tiny_model_dir, workspace):
        model = AutoModel.from_pretrained(tiny_model_dir)
        tokenizer = AutoTokenizer.from_pretrained(tiny_model_dir)
        model.eval()
        text = (workspace / "two.txt").read_text().splitlines()[0]
        batch = tokenizer([text], return_tensors="pt")
        with torch.no_grad():
            reference = model.embeddings(input_ids=batch["input_ids"])[0].numpy()
        _, sentences = read_tpeb(small_export.files[0])
        np.testing.assert_allclose(sentences[0][3], reference, atol=1e-6)

    def test_vectors_differ_across_layers(self, small_export):
        _, at_zero = read_tpeb(small_export.files[0])
        _, at_two = read_tpeb(small_export.files[2])
        assert not np.allclose(at_zero[0][3], at_two[0][3])


class TestExportValidation:
    def test_layer_out_of_range(self, tiny_model_dir, workspace):
        text = workspace / "one.txt"
        text.write_text("the fox chased a dog\n")
        with pytest.raises(ValueError, match="layer"):
            export(
                ExportJob(
                    model=str(tiny_model_dir),
                    layers=(0, 99),
                    input_path=str(text),
                    output_dir=str(workspace / "x"),
                )
            )

    def test_overlong_sentences_skipped(self, tiny_model_dir, workspace):
        text = workspace / "long.txt"
        text.write_text(
            "the fox chased a dog\n" + " ".join(["the fox"] * 30) + "\n"
        )
        result = export(
            ExportJob(
                model=str(tiny_model_dir),
                layers=(0,),
                input_path=str(text),
                output_dir=str(workspace / "skip_dump"),
                max_length=16,
            )
        )
        assert result.sentences_written == 1
        assert result.sentences_skipped == 1
        _, sentences = read_tpeb(result.files[0])
        assert sentences[0][0] == "s000000"

    def test_empty_input_rejected(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("\n")
        with pytest.raises(ValueError):
            read_sentences(empty)


class TestCli:
    def test_cli_round_trip(self, tiny_model_dir, workspace):
        text = workspace / "cli.txt"
        text.write_text("the fox chased a dog\nthe bird liked the park\n")
        outdir = workspace / "cli_dump"
        proc = subprocess.run(
            [
                sys.executable, "-m", "tpeb_exporter.cli",
                "--model", str(tiny_model_dir),
                "--layers", "0,1",
                "--input", str(text),
                "--outdir", str(outdir),
                "--batch-size", "4",
            ],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["sentences_written"] == 2
        assert payload["alignment_available"] is True
        assert set(payload["files"]) == {"0", "1"}

    def test_cli_missing_model(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable, "-m", "tpeb_exporter.cli",
                "--model", str(tmp_path / "nope"),
                "--layers", "0",
                "--input", str(tmp_path / "missing.txt"),
                "--outdir", str(tmp_path / "out"),
            ],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
