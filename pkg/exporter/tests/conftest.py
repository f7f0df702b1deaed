"""Fixtures: a deterministic stand-in encoder and exported layer dumps.

No model hub is reachable from the test environment, so the "BERT-large
class" model is a desk-scale stand-in: a 12-block BERT encoder over a
~525-token WordPiece vocabulary, briefly masked-language-model trained on
the generated corpus so its layers carry real contextual structure.  All
seeds are pinned; the fixture is bit-deterministic for a fixed software
stack.
"""

import sys
from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

sys.path.insert(0, str(Path(__file__).parent))

from gen_corpus import vocabulary, write_corpus  # noqa: E402

HIDDEN = 64
LAYERS = 24  # matches the block count of the model class being stood in for
EXPORT_LAYERS = (0, 8, 16, 24)
SENTENCES = 600
MLM_STEPS = 600

torch.set_num_threads(4)


def make_tokenizer():
    vocab = vocabulary()
    return BertTokenizerFast(
        vocab={token: index for index, token in enumerate(vocab)},
        do_lower_case=True,
    )


def train_mlm(tokenizer, sentences, hidden=HIDDEN, layers=LAYERS, steps=MLM_STEPS):
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden,
        num_hidden_layers=layers,
        num_attention_heads=4,
        intermediate_size=2 * hidden,
        max_position_embeddings=64,
    )
    torch.manual_seed(7)
    model = BertForMaskedLM(config)
    optimizer = torch.optim.AdamW(model.parameters(), lr=1e-3)
    rng = torch.Generator().manual_seed(13)
    model.train()
    for _ in range(steps):
        index = torch.randint(0, len(sentences), (32,), generator=rng)
        batch = tokenizer(
            [sentences[i] for i in index], padding=True, return_tensors="pt"
        )
        input_ids = batch["input_ids"].clone()
        labels = input_ids.clone()
        maskable = (batch["attention_mask"] == 1) & (input_ids >= 5)
        masked = maskable & (torch.rand(input_ids.shape, generator=rng) < 0.15)
        labels[~masked] = -100
        input_ids[masked] = tokenizer.mask_token_id
        out = model(
            input_ids=input_ids,
            attention_mask=batch["attention_mask"],
            labels=labels,
        )
        optimizer.zero_grad()
        out.loss.backward()
        optimizer.step()
    model.eval()
    return model


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    return tmp_path_factory.mktemp("exporter")


@pytest.fixture(scope="session")
def corpus_files(workspace):
    return write_corpus(workspace, SENTENCES, seed=1)


@pytest.fixture(scope="session")
def model_dir(workspace, corpus_files):
    sentences_path, _ = corpus_files
    sentences = sentences_path.read_text().splitlines()
    tokenizer = make_tokenizer()
    model = train_mlm(tokenizer, sentences)
    directory = workspace / "model"
    model.bert.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def tiny_model_dir(workspace):
    """Untrained two-block model for fast structural tests."""
    tokenizer = make_tokenizer()
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(3)
    model = BertForMaskedLM(config)
    directory = workspace / "tiny_model"
    model.bert.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def layer_dumps(workspace, corpus_files, model_dir):
    from tpeb_exporter import ExportJob, export

    sentences_path, annotations_path = corpus_files
    outdir = workspace / "dump"
    result = export(
        ExportJob(
            model=str(model_dir),
            layers=EXPORT_LAYERS,
            input_path=str(sentences_path),
            output_dir=str(outdir),
            batch_size=32,
        )
    )
    assert result.sentences_written == SENTENCES
    return result, annotations_path
