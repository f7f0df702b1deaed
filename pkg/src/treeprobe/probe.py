"""Linear depth probe: prediction, losses, analytic gradient, and training.

The probe is an m-by-n matrix f (m < n) scoring each vector h with the
squared Euclidean norm of f*h as its predicted tree depth.  Probes train
against one of three targets: annotated gold depths ("supervised"), the
greedy nearest valid sequence rebuilt from the current predictions ("ssp"),
or the greedy farthest one ("essp").  Self-supervised targets are treated as
constants within a step: the projection is recomputed every step but no
gradient flows through its construction.

Optimisation is plain decoupled-weight-decay Adam with a linear warmup,
written out here so the update rule is exactly reproducible: parameters are
stored in single precision while gradients, moments, and loss sums
accumulate in double precision.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constraints import distance
from .errors import (
    FormatError,
    InvalidInputError,
    MissingLabelsError,
    ShapeError,
)
from .greedy import PredictedDepths, greedy_farthest, greedy_nearest
from .ingest import Corpus, SentenceEmbedding, gold_targets

CHECKPOINT_MAGIC = b"TPRB"
CHECKPOINT_VERSION = 1

TARGET_MODES = ("supervised", "ssp", "essp")


@dataclass
class ProbeMatrix:
    """The probe's linear map with fixed norm exponent 2."""

    entries: np.ndarray  # (m, n) float32
    p: int = 2

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float32)
        if self.entries.ndim != 2:
            raise ShapeError("probe matrix must be 2-d")
        m, n = self.entries.shape
        if not m < n:
            raise InvalidInputError(f"probe rank {m} must be smaller than dimension {n}")
        if not np.all(np.isfinite(self.entries)):
            raise InvalidInputError("probe entries must be finite")
        if self.p != 2:
            raise InvalidInputError("only the squared-norm probe (p = 2) is supported")

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return int(self.entries.shape[1])

    @classmethod
    def initialize(cls, m: int, n: int, init_range: float = 0.05, rng=None) -> "ProbeMatrix":
        rng = np.random.default_rng(rng)
        return cls(rng.uniform(-init_range, init_range, size=(m, n)))

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<III", CHECKPOINT_VERSION, self.m, self.n))
            fh.write(np.ascontiguousarray(self.entries, dtype="<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ProbeMatrix":
        raw = Path(path).read_bytes()
        if len(raw) < 16:
            raise FormatError(f"{path}: truncated header", offset=len(raw))
        if raw[:4] != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: bad magic {raw[:4]!r}", offset=0)
        version, m, n = struct.unpack("<III", raw[4:16])
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}", offset=4)
        expected = 16 + 4 * m * n
        if len(raw) != expected:
            raise FormatError(
                f"{path}: expected {expected} bytes for a {m}x{n} probe, got {len(raw)}",
                offset=min(len(raw), expected),
            )
        entries = np.frombuffer(raw[16:], dtype="<f4").reshape(m, n)
        return cls(entries.copy())


def _entries64(f: ProbeMatrix | np.ndarray) -> np.ndarray:
    entries = f.entries if isinstance(f, ProbeMatrix) else np.asarray(f)
    return np.asarray(entries, dtype=np.float64)


def _vectors(H) -> np.ndarray:
    if isinstance(H, SentenceEmbedding):
        H = H.vectors
    arr = np.asarray(H, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ShapeError("embeddings must form a nonempty (L, n) array")
    return arr


def predict_depths(f: ProbeMatrix | np.ndarray, H) -> PredictedDepths:
    """Squared norms of the probed vectors, one nonnegative depth per token."""
    F = _entries64(f)
    vecs = _vectors(H)
    if vecs.shape[1] != F.shape[1]:
        raise ShapeError(
            f"vector dimension {vecs.shape[1]} != probe dimension {F.shape[1]}"
        )
    proj = vecs @ F.T
    return PredictedDepths(np.einsum("ij,ij->i", proj, proj))


def loss(pdep, target) -> float:
    """Mean squared distance between predicted depths and a target sequence."""
    values = pdep.values if isinstance(pdep, PredictedDepths) else np.asarray(pdep)
    tvals = np.asarray(tuple(target) if not isinstance(target, np.ndarray) else target)
    if values.shape != tvals.shape:
        raise ShapeError(f"length mismatch: {values.shape} vs {tvals.shape}")
    return distance(values, tvals)


def masked_loss(pdep, targets: np.ndarray) -> float:
    """Supervised loss over the positions that carry a gold depth (non-NaN)."""
    values = pdep.values if isinstance(pdep, PredictedDepths) else np.asarray(pdep)
    targets = np.asarray(targets, dtype=np.float64)
    if values.shape != targets.shape:
        raise ShapeError(f"length mismatch: {values.shape} vs {targets.shape}")
    mask = ~np.isnan(targets)
    if not np.any(mask):
        raise MissingLabelsError("no labeled positions in sentence")
    return distance(values[mask], targets[mask])


def loss_selfsup(f, H, mode: str) -> float:
    """Self-supervised loss; the integer target is rebuilt from the current predictions."""
    if mode not in ("ssp", "essp"):
        raise InvalidInputError(f"self-supervised mode must be 'ssp' or 'essp', got {mode!r}")
    pdep = predict_depths(f, H)
    target = greedy_nearest(pdep) if mode == "ssp" else greedy_farthest(pdep)
    return loss(pdep, target)


def gradient(f, H, target) -> np.ndarray:
    """Analytic loss gradient with the target held constant.

    d/df of mean_i (|f h_i|^2 - t_i)^2 is (4 / L) sum_i (pdep_i - t_i) (f h_i) h_i^T,
    where positions with NaN targets drop out of both the sum and the count.
    """
    F = _entries64(f)
    vecs = _vectors(H)
    if vecs.shape[1] != F.shape[1]:
        raise ShapeError(
            f"vector dimension {vecs.shape[1]} != probe dimension {F.shape[1]}"
        )
    targets = np.asarray(
        tuple(target) if not isinstance(target, np.ndarray) else target,
        dtype=np.float64,
    )
    if targets.shape != (vecs.shape[0],):
        raise ShapeError(f"target length {targets.shape} != token count {vecs.shape[0]}")
    mask = ~np.isnan(targets)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise MissingLabelsError("no labeled positions in sentence")
    proj = vecs @ F.T  # (L, m)
    pdep = np.einsum("ij,ij->i", proj, proj)
    residual = np.zeros(vecs.shape[0], dtype=np.float64)
    residual[mask] = pdep[mask] - targets[mask]
    return (4.0 / count) * (proj * residual[:, None]).T @ vecs


@dataclass
class TrainConfig:
    """Probe training hyperparameters.

    The optimizer defaults (learning rate 2e-5, epsilon 1e-8, ten epochs,
    warmup, uniform init in [-0.05, 0.05], rank n/2) follow the standard
    recipe for depth probes on transformer embeddings; batch size and weight
    decay are this package's own knobs.
    """

    learning_rate: float = 2e-5
    optimizer_epsilon: float = 1e-8
    epochs: int = 10
    warmup_fraction: float = 0.1
    batch_size: int = 32
    init_range: float = 0.05
    seed: int = 0
    target_mode: str = "supervised"
    rank: int | None = None  # defaults to n // 2
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if self.learning_rate <= 0 or self.optimizer_epsilon <= 0:
            raise InvalidInputError("learning rate and epsilon must be positive")
        if self.epochs < 0:
            raise InvalidInputError("epochs must be nonnegative")
        if not 0 <= self.warmup_fraction < 1:
            raise InvalidInputError("warmup fraction must be in [0, 1)")
        if self.batch_size < 1 or self.init_range <= 0:
            raise InvalidInputError("batch size and init range must be positive")
        if self.target_mode not in TARGET_MODES:
            raise InvalidInputError(
                f"target mode must be one of {TARGET_MODES}, got {self.target_mode!r}"
            )
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise InvalidInputError("betas must be in [0, 1)")
        if self.weight_decay < 0:
            raise InvalidInputError("weight decay must be nonnegative")


class _AdamW:
    """Decoupled-weight-decay Adam over a single parameter matrix."""

    def __init__(self, shape, cfg: TrainConfig, total_steps: int):
        self.cfg = cfg
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.t = 0
        self.warmup_steps = int(round(cfg.warmup_fraction * total_steps))

    def step(self, params32: np.ndarray, grad: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        self.t += 1
        lr = cfg.learning_rate
        if self.warmup_steps > 0 and self.t <= self.warmup_steps:
            lr = lr * self.t / self.warmup_steps
        self.m = cfg.beta1 * self.m + (1 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1 - cfg.beta2) * grad * grad
        m_hat = self.m / (1 - cfg.beta1**self.t)
        v_hat = self.v / (1 - cfg.beta2**self.t)
        params = params32.astype(np.float64)
        params -= lr * cfg.weight_decay * params
        params -= lr * m_hat / (np.sqrt(v_hat) + cfg.optimizer_epsilon)
        return params.astype(np.float32)


def _sentence_target(
    entries: np.ndarray, sent: SentenceEmbedding, mode: str, gold: np.ndarray | None
) -> np.ndarray:
    if mode == "supervised":
        return gold
    pdep = predict_depths(entries, sent)
    built = greedy_nearest(pdep) if mode == "ssp" else greedy_farthest(pdep)
    return built.as_array()


def train(corpus: Corpus, cfg: TrainConfig) -> tuple[ProbeMatrix, float]:
    """Train a probe on a corpus and return it with the final corpus metric.

    Deterministic for a fixed seed: initialisation, batch order, and the
    gradient reduction order are all driven by one generator.
    """
    if len(corpus) == 0:
        raise InvalidInputError("cannot train on an empty corpus")
    n = corpus.n
    m = cfg.rank if cfg.rank is not None else n // 2
    if not 0 < m < n:
        raise InvalidInputError(f"probe rank {m} must be in (0, {n})")

    golds: list[np.ndarray | None] = []
    if cfg.target_mode == "supervised":
        for sent in corpus.sentences:
            ann = corpus.annotation_for(sent)
            if ann is None:
                raise MissingLabelsError(
                    f"sentence {sent.sentence_id!r} has no depth annotation"
                )
            golds.append(gold_targets(sent, ann))
    else:
        golds = [None] * len(corpus)

    rng = np.random.default_rng(cfg.seed)
    params = rng.uniform(-cfg.init_range, cfg.init_range, size=(m, n)).astype(np.float32)
    num = len(corpus)
    steps_per_epoch = math.ceil(num / cfg.batch_size)
    optimizer = _AdamW((m, n), cfg, total_steps=cfg.epochs * steps_per_epoch)

    for _ in range(cfg.epochs):
        order = rng.permutation(num)
        for start in range(0, num, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad = np.zeros((m, n), dtype=np.float64)
            entries = params.astype(np.float64)
            for idx in batch:
                sent = corpus.sentences[idx]
                target = _sentence_target(entries, sent, cfg.target_mode, golds[idx])
                grad += gradient(entries, sent, target)
            grad /= batch.size
            params = optimizer.step(params, grad)

    probe = ProbeMatrix(params)
    return probe, evaluate(corpus, probe, cfg.target_mode)


def sentence_loss(f, sent: SentenceEmbedding, mode: str, gold: np.ndarray | None) -> float:
    if mode == "supervised":
        if gold is None:
            raise MissingLabelsError(f"sentence {sent.sentence_id!r} has no annotation")
        return masked_loss(predict_depths(f, sent), gold)
    return loss_selfsup(f, sent, mode)


def evaluate(corpus: Corpus, f: ProbeMatrix, mode: str, threads: int = 1) -> float:
    """Corpus-mean loss in one target mode; reduction order is fixed."""
    if mode not in TARGET_MODES:
        raise InvalidInputError(f"unknown target mode {mode!r}")
    if len(corpus) == 0:
        raise InvalidInputError("cannot evaluate an empty corpus")

    def one(sent: SentenceEmbedding) -> float:
        gold = None
        if mode == "supervised":
            ann = corpus.annotation_for(sent)
            if ann is None:
                raise MissingLabelsError(
                    f"sentence {sent.sentence_id!r} has no depth annotation"
                )
            gold = gold_targets(sent, ann)
        return sentence_loss(f, sent, mode, gold)

    losses = _ordered_map(one, corpus.sentences, threads)
    return math.fsum(losses) / len(losses)


def _ordered_map(fn, items, threads: int):
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]
