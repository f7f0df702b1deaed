"""Synthetic embedding sets with planted projected norms.

Given an m-by-n projection P of full row rank and per-position target depths
t_i with tolerances eps_i, the sampler constructs vectors h_i whose squared
projected norms sit strictly inside the band

    t_i - sqrt(eps_i) < |P h_i|^2 < t_i + sqrt(eps_i).

Each h_i is a random direction in the image space scaled to the desired
norm and lifted back through the right inverse P^T (P P^T)^-1, so the band
membership holds by construction and a probe trained on such a corpus has an
exact planted solution to recover.

With a positive minimum target every feasible projected vector keeps its
norm away from zero (an annulus); allowing a zero target turns position
one's feasible set into a ball around the kernel, which is the geometric
reason the root depth is anchored at 1 rather than 0.

The transport map rescales a sampled set from one target profile onto
another, carrying band membership along with explicitly rescaled P and
tolerances, and is inverted exactly by swapping its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constraints import DepthSequence
from .errors import (
    DomainError,
    InvalidInputError,
    ShapeError,
    SingularityError,
)
from .ingest import Corpus, SentenceEmbedding

#: Default tolerance factor: eps_i = DEFAULT_EPS_FACTOR * t_i^2.
DEFAULT_EPS_FACTOR = 1e-4
#: Tolerances must stay well below the squared targets.
MAX_EPS_FACTOR = 1e-2


@dataclass(frozen=True)
class PlantedSpec:
    """Recipe for sampling vectors with planted projected norms."""

    targets: tuple[float, ...]
    tolerances: tuple[float, ...]
    projection: np.ndarray  # (m, n)

    def __init__(self, targets, tolerances, projection, allow_zero_min: bool = False):
        targets = tuple(float(t) for t in targets)
        tolerances = tuple(float(e) for e in tolerances)
        projection = np.asarray(projection, dtype=np.float64)
        if len(targets) == 0 or len(targets) != len(tolerances):
            raise InvalidInputError("targets and tolerances must be nonempty, equal length")
        if projection.ndim != 2:
            raise ShapeError("projection must be an (m, n) matrix")
        if projection.shape[0] >= projection.shape[1]:
            raise InvalidInputError("projection must have fewer rows than columns")
        if not np.all(np.isfinite(projection)):
            raise InvalidInputError("projection entries must be finite")
        if min(targets) < 0:
            raise InvalidInputError("targets must be nonnegative")
        if min(targets) < 1 and not allow_zero_min:
            raise InvalidInputError(
                "minimum target below 1 requires allow_zero_min=True "
                "(the root depth is anchored at 1 by default)"
            )
        for t, e in zip(targets, tolerances):
            if e <= 0:
                raise InvalidInputError("tolerances must be positive")
            if t > 0 and e > MAX_EPS_FACTOR * t * t:
                raise InvalidInputError(
                    f"tolerance {e} too large for target {t}: "
                    f"must be <= {MAX_EPS_FACTOR} * target^2"
                )
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "tolerances", tolerances)
        object.__setattr__(self, "projection", projection)

    @property
    def m(self) -> int:
        return int(self.projection.shape[0])

    @property
    def n(self) -> int:
        return int(self.projection.shape[1])

    @classmethod
    def for_depths(
        cls,
        depths: DepthSequence | Sequence[int],
        projection: np.ndarray,
        eps_factor: float = DEFAULT_EPS_FACTOR,
    ) -> "PlantedSpec":
        targets = tuple(float(d) for d in depths)
        return cls(targets, tuple(eps_factor * t * t for t in targets), projection)


def _right_inverse(P: np.ndarray) -> np.ndarray:
    """P^T (P P^T)^-1, refusing rank-deficient projections."""
    singular = np.linalg.svd(P, compute_uv=False)
    if singular[-1] <= max(P.shape) * np.finfo(np.float64).eps * singular[0]:
        raise SingularityError("projection matrix is rank deficient")
    return P.T @ np.linalg.inv(P @ P.T)


def sample_planted(
    spec: PlantedSpec, rng=None, sentence_id: str = "planted"
) -> SentenceEmbedding:
    """Draw one vector set inside the planted band.

    Desired squared norms are drawn strictly inside 90% of the band so that
    membership survives the round trip through the lift.
    """
    rng = np.random.default_rng(rng)
    lift = _right_inverse(spec.projection)
    m = spec.m
    rows = []
    for t, eps in zip(spec.targets, spec.tolerances):
        band = math.sqrt(eps)
        if t > 0:
            desired = t + rng.uniform(-0.9, 0.9) * band
        else:
            desired = rng.uniform(0.0, 0.81) * band
        direction = rng.normal(size=m)
        direction /= np.linalg.norm(direction)
        rows.append(lift @ (math.sqrt(desired) * direction))
    vectors = np.stack(rows)
    L = len(spec.targets)
    return SentenceEmbedding(
        sentence_id,
        vectors,
        np.zeros(L, dtype=np.uint8),
        np.arange(L, dtype=np.int32),
    )


def projected_norms(projection: np.ndarray, H) -> np.ndarray:
    """Squared projected norms, the quantity the planted band constrains."""
    vectors = H.vectors if isinstance(H, SentenceEmbedding) else np.asarray(H)
    proj = vectors @ np.asarray(projection, dtype=np.float64).T
    return np.einsum("ij,ij->i", proj, proj)


def band_violation(spec: PlantedSpec, H) -> float:
    """Worst-case signed slack; negative means every position is inside its band."""
    norms = projected_norms(spec.projection, H)
    slack = np.abs(norms - np.asarray(spec.targets)) - np.sqrt(spec.tolerances)
    return float(np.max(slack))


def transport_map(H, targets, targets_new) -> SentenceEmbedding | np.ndarray:
    """Rescale a vector set from one positive target profile onto another.

    Position one is kept fixed and every other vector is scaled by
    sqrt(new_i * old_1 / (old_i * new_1)).  Swapping the two profiles gives
    the exact inverse map.  Both profiles must have strictly positive first
    elements and minima: scaling breaks down when a target touches zero.
    """
    old = np.asarray(tuple(targets), dtype=np.float64)
    new = np.asarray(tuple(targets_new), dtype=np.float64)
    if old.shape != new.shape:
        raise InvalidInputError("target profiles must have equal length")
    if old.min() <= 0 or new.min() <= 0:
        raise DomainError("transport requires strictly positive target profiles")
    vectors = H.vectors if isinstance(H, SentenceEmbedding) else np.asarray(H, dtype=np.float64)
    if vectors.shape[0] != old.size:
        raise ShapeError(f"vector count {vectors.shape[0]} != profile length {old.size}")
    factors = np.sqrt(new * old[0] / (old * new[0]))
    moved = vectors * factors[:, None]
    if isinstance(H, SentenceEmbedding):
        return SentenceEmbedding(
            H.sentence_id, moved, H.token_kinds.copy(), H.word_index.copy()
        )
    return moved


def transported_spec(spec: PlantedSpec, targets_new) -> PlantedSpec:
    """The planted band that transport_map carries a sample into.

    The projection rescales by sqrt(new_1 / old_1) and each tolerance by
    (new_i / old_i)^2.
    """
    new = tuple(float(t) for t in targets_new)
    old = spec.targets
    if len(new) != len(old):
        raise InvalidInputError("target profiles must have equal length")
    if min(old) <= 0 or min(new) <= 0:
        raise DomainError("transport requires strictly positive target profiles")
    projection = math.sqrt(new[0] / old[0]) * spec.projection
    tolerances = tuple(
        (n_i / o_i) ** 2 * e for n_i, o_i, e in zip(new, old, spec.tolerances)
    )
    return PlantedSpec(new, tolerances, projection, allow_zero_min=True)


def _default_planted_scale(m: int, init_range: float = 0.05) -> float:
    """Operator scale matching a freshly initialised probe.

    A rank-m probe with uniform entries in [-init_range, init_range] maps a
    unit vector to expected squared norm m * init_range^2 / 3; planting the
    projection at that scale starts training in the right norm regime
    instead of testing bare norm growth.
    """
    return math.sqrt(m * init_range * init_range / 3.0)


def random_depth_sequence(length: int, rng) -> DepthSequence:
    """Uniformly random ascending profile of the given length, then shuffled."""
    profile = [1]
    if length >= 2:
        profile.append(2)
    for _ in range(length - 2):
        profile.append(profile[-1] + int(rng.integers(0, 2)))
    values = np.array(profile, dtype=np.int64)[rng.permutation(length)]
    return DepthSequence(values)


def build_synthetic_corpus(
    num_sentences: int,
    length_range: tuple[int, int] = (3, 8),
    m: int = 4,
    n: int = 8,
    seed: int = 0,
    eps_factor: float = DEFAULT_EPS_FACTOR,
    planted_scale: float | None = None,
) -> Corpus:
    """Planted corpus with annotations equal to the planted depth targets.

    One shared projection is planted for the whole corpus; every sentence
    gets a fresh random valid depth sequence and vectors sampled inside the
    corresponding band.  Per-sentence seeds are split from the corpus seed so
    generation is deterministic and order independent.
    """
    lo, hi = length_range
    if num_sentences < 1 or lo < 1 or hi < lo:
        raise InvalidInputError("need at least one sentence and a valid length range")
    if not 0 < m < n:
        raise InvalidInputError(f"need 0 < m < n, got m={m}, n={n}")
    seeds = np.random.SeedSequence(seed).spawn(num_sentences + 1)
    rng0 = np.random.default_rng(seeds[0])
    scale = _default_planted_scale(m) if planted_scale is None else planted_scale
    gaussian = rng0.normal(size=(n, m))
    q, _ = np.linalg.qr(gaussian)  # orthonormal columns
    projection = scale * q.T

    sentences = []
    annotations: dict[str, DepthSequence] = {}
    for i in range(1, num_sentences + 1):
        rng = np.random.default_rng(seeds[i])
        length = int(rng.integers(lo, hi + 1))
        depths = random_depth_sequence(length, rng)
        spec = PlantedSpec.for_depths(depths, projection, eps_factor)
        ident = f"synth-{i - 1:04d}"
        sentences.append(sample_planted(spec, rng, sentence_id=ident))
        annotations[ident] = depths
    return Corpus(sentences, n, annotations)
