"""Corpus-level metric aggregation.

Three corpus metrics summarise one model slice: x_ssp (mean loss against the
greedy nearest valid sequence, a lower-bound surrogate), x_essp (mean loss
against the greedy farthest one, an upper-bound surrogate), and x_sp_true
(mean supervised loss against gold depths).  The midpoint of the two
self-supervised metrics is the unbiased supervised estimate: it equals the
expectation-weighted combination under the symmetric density 6(x - x^2) on
[0, 1], whose mean is one half.

Per sentence, the supervised loss's normalised position between the
nearest/farthest losses is recorded as well; its histogram over [0, 1] makes
up the report's distributional summary.  With greedy bounds the position can
mathematically fall outside [0, 1] (the greedy nearest target may be beaten
by the gold one), so positions are clamped for the histogram while the raw
numerator and denominator are kept for diagnostics.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constraints import (
    SORTED_PROFILE_CAP,
    DepthSequence,
    distance,
    max_oracle,
    min_oracle,
    validate,
)
from .errors import ConstraintError, InvalidInputError, InvariantError, ShapeError
from .greedy import greedy_farthest, greedy_nearest
from .ingest import Corpus, SentenceEmbedding, gold_targets
from .probe import ProbeMatrix, _ordered_map, loss_selfsup, masked_loss, predict_depths

#: Histogram resolution for the position distribution.
POSITION_BINS = 20
#: Denominators below this mark a position sample as excluded.
DEGENERATE_DENOMINATOR = 1e-12

CSV_COLUMNS = (
    "slice",
    "x_ssp",
    "x_essp",
    "x_sp_true",
    "x_sp_unbiased",
    "neg_log_x_ssp",
    "neg_log_x_essp",
    "neg_log_x_sp_true",
    "neg_log_x_sp_unbiased",
)


@dataclass(frozen=True)
class BoundsPosition:
    """Where one sentence's supervised loss sits between its two bounds."""

    sentence_id: str
    position: float | None  # clamped to [0, 1]; None when excluded
    raw_numerator: float
    raw_denominator: float

    @property
    def included(self) -> bool:
        return self.position is not None


def position_between_bounds(
    pdep,
    gold: DepthSequence | Sequence[int],
    lower_target: DepthSequence | Sequence[int],
    upper_target: DepthSequence | Sequence[int],
    sentence_id: str = "",
) -> BoundsPosition:
    """Normalised position of the gold-depth loss between two bound losses.

    0 means the gold loss equals the lower-bound loss, 1 the upper-bound
    loss.  A denominator below ``DEGENERATE_DENOMINATOR`` excludes the
    sample.
    """
    gold_vals = tuple(gold)
    if not validate(gold_vals):
        raise ConstraintError(f"gold depths {list(gold_vals)} violate the constraints")
    e_gold = distance(pdep, gold_vals)
    e_lower = distance(pdep, tuple(lower_target))
    e_upper = distance(pdep, tuple(upper_target))
    numerator = e_gold - e_lower
    denominator = e_upper - e_lower
    if denominator < DEGENERATE_DENOMINATOR:
        return BoundsPosition(sentence_id, None, numerator, denominator)
    value = min(1.0, max(0.0, numerator / denominator))
    return BoundsPosition(sentence_id, value, numerator, denominator)


def unbiased_sp(x_ssp: float, x_essp: float) -> float:
    """Midpoint estimate of the supervised metric from its two bounds."""
    if x_ssp < 0 or x_essp < 0:
        raise InvalidInputError("metrics must be nonnegative")
    if x_ssp > x_essp:
        raise InvariantError(f"lower bound {x_ssp} exceeds upper bound {x_essp}")
    return (x_ssp + x_essp) / 2.0


def combine_with_density(x_ssp: float, x_essp: float, expectation: float) -> float:
    """Expectation-weighted combination of the two bounds.

    With expectation 1/2 (the mean of the symmetric density 6(x - x^2) on
    [0, 1]) this reduces to :func:`unbiased_sp`.
    """
    if not 0.0 <= expectation <= 1.0:
        raise InvalidInputError(f"expectation must be in [0, 1], got {expectation}")
    return expectation * x_essp + (1.0 - expectation) * x_ssp


def neg_log(x: float) -> float:
    """Natural-log reporting transform; zero maps to the +inf sentinel."""
    if x < 0:
        raise InvalidInputError("metrics must be nonnegative")
    return math.inf if x == 0 else -math.log(x)


@dataclass(frozen=True)
class MetricReport:
    """All metrics for one model slice."""

    slice_id: str
    x_ssp: float
    x_essp: float
    x_sp_true: float | None
    x_sp_unbiased: float
    position_histogram: tuple[int, ...] | None
    corpus_size: int

    def __post_init__(self):
        if self.x_ssp > self.x_essp:
            raise InvariantError(
                f"slice {self.slice_id}: x_ssp {self.x_ssp} exceeds x_essp {self.x_essp}"
            )
        if self.x_sp_unbiased != (self.x_ssp + self.x_essp) / 2.0:
            raise InvariantError(
                f"slice {self.slice_id}: unbiased estimate must be the exact midpoint"
            )

    @classmethod
    def build(
        cls,
        slice_id: str,
        x_ssp: float,
        x_essp: float,
        x_sp_true: float | None = None,
        position_histogram: tuple[int, ...] | None = None,
        corpus_size: int = 0,
    ) -> "MetricReport":
        return cls(
            slice_id=slice_id,
            x_ssp=x_ssp,
            x_essp=x_essp,
            x_sp_true=x_sp_true,
            x_sp_unbiased=unbiased_sp(x_ssp, x_essp),
            position_histogram=position_histogram,
            corpus_size=corpus_size,
        )

    def to_dict(self) -> dict:
        return {
            "slice": self.slice_id,
            "x_ssp": self.x_ssp,
            "x_essp": self.x_essp,
            "x_sp_true": self.x_sp_true,
            "x_sp_unbiased": self.x_sp_unbiased,
            "neg_log_x_ssp": neg_log(self.x_ssp),
            "neg_log_x_essp": neg_log(self.x_essp),
            "neg_log_x_sp_true": None if self.x_sp_true is None else neg_log(self.x_sp_true),
            "neg_log_x_sp_unbiased": neg_log(self.x_sp_unbiased),
            "position_histogram": (
                None if self.position_histogram is None else list(self.position_histogram)
            ),
            "corpus_size": self.corpus_size,
        }


def _word_level_view(
    sent: SentenceEmbedding, gold: np.ndarray, pdep_values: np.ndarray
) -> tuple[np.ndarray, list[int]] | None:
    """One (prediction, gold depth) pair per word: the first labeled row of each.

    Sub-token views repeat a word's depth across its pieces, which breaks
    sequence validity; collapsing to first pieces restores one entry per word.
    """
    chosen_pdep: list[float] = []
    chosen_gold: list[int] = []
    seen: set[int] = set()
    for pos in range(len(sent)):
        widx = int(sent.word_index[pos])
        if widx < 0 or widx in seen:
            continue
        seen.add(widx)
        chosen_pdep.append(float(pdep_values[pos]))
        chosen_gold.append(int(gold[pos]))
    if not chosen_gold:
        return None
    return np.asarray(chosen_pdep), chosen_gold


def aggregate(
    corpus: Corpus,
    f_ssp: ProbeMatrix,
    f_essp: ProbeMatrix,
    f_sup: ProbeMatrix | None = None,
    slice_id: str = "slice",
    exact: bool = False,
    oracle_cap: int = SORTED_PROFILE_CAP,
    threads: int = 1,
) -> MetricReport:
    """Corpus means of the three metrics plus the position histogram.

    Position samples use the supervised probe's predictions at one entry per
    word, with greedy bound targets by default and exact oracle targets when
    ``exact`` is set and the sentence fits under the cap.
    """
    if len(corpus) == 0:
        raise InvalidInputError("cannot aggregate an empty corpus")
    for probe in (f_ssp, f_essp) + (() if f_sup is None else (f_sup,)):
        if probe.n != corpus.n:
            raise ShapeError(
                f"probe dimension {probe.n} != corpus dimension {corpus.n}"
            )

    ssp_losses = _ordered_map(
        lambda s: loss_selfsup(f_ssp, s, "ssp"), corpus.sentences, threads
    )
    essp_losses = _ordered_map(
        lambda s: loss_selfsup(f_essp, s, "essp"), corpus.sentences, threads
    )

    sup_losses: list[float] = []
    positions: list[BoundsPosition] = []
    if f_sup is not None:
        for sent in corpus.sentences:
            ann = corpus.annotation_for(sent)
            if ann is None:
                continue
            gold = gold_targets(sent, ann)
            pdep = predict_depths(f_sup, sent)
            sup_losses.append(masked_loss(pdep, gold))
            word_view = _word_level_view(sent, gold, pdep.values)
            if word_view is None:
                continue
            word_pdep, word_gold = word_view
            if not validate(word_gold):
                continue
            if exact and word_pdep.size <= oracle_cap:
                lower, _ = min_oracle(word_pdep, cap=oracle_cap)
                upper, _ = max_oracle(word_pdep, cap=oracle_cap)
            else:
                lower = greedy_nearest(word_pdep)
                upper = greedy_farthest(word_pdep)
            positions.append(
                position_between_bounds(
                    word_pdep, word_gold, lower, upper, sentence_id=sent.sentence_id
                )
            )

    x_ssp = math.fsum(ssp_losses) / len(ssp_losses)
    x_essp = math.fsum(essp_losses) / len(essp_losses)
    x_sp_true = math.fsum(sup_losses) / len(sup_losses) if sup_losses else None
    histogram: tuple[int, ...] | None = None
    if positions:
        included = [p.position for p in positions if p.included]
        counts, _ = np.histogram(included, bins=POSITION_BINS, range=(0.0, 1.0))
        histogram = tuple(int(c) for c in counts)
    return MetricReport.build(
        slice_id=slice_id,
        x_ssp=x_ssp,
        x_essp=x_essp,
        x_sp_true=x_sp_true,
        position_histogram=histogram,
        corpus_size=len(corpus),
    )


# ---------------------------------------------------------------------------
# Serialization and grouping


def reports_to_json(reports: Iterable[MetricReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def reports_to_csv(reports: Iterable[MetricReport]) -> str:
    """Stable CSV with one row per slice; absent metrics leave empty cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        row_dict = report.to_dict()
        row = []
        for column in CSV_COLUMNS:
            value = row_dict[column]
            if value is None:
                row.append("")
            elif isinstance(value, float):
                row.append(repr(value) if math.isfinite(value) else "inf")
            else:
                row.append(str(value))
        writer.writerow(row)
    return buf.getvalue()


#: Grouping bin edges used for range summaries of layer sweeps.
DEFAULT_SSP_EDGES = (0.01, 0.05, 0.1, 0.15)
DEFAULT_ESSP_EDGES = (0.3, 0.4, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class RangeGroup:
    lower: float  # -inf for the open left end
    upper: float  # +inf for the open right end
    slices: tuple[str, ...]


def group_by_ranges(
    reports: Iterable[MetricReport], metric: str, edges: Sequence[float]
) -> list[RangeGroup]:
    """Bucket slices by metric value into [edge, next-edge) ranges.

    The outermost buckets are open ended; edges must be strictly increasing.
    """
    edges = list(edges)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvalidInputError("bin edges must be strictly increasing")
    bounds = [-math.inf, *edges, math.inf]
    buckets: list[list[str]] = [[] for _ in range(len(bounds) - 1)]
    for report in reports:
        value = report.to_dict()[metric]
        if value is None:
            continue
        for i in range(len(bounds) - 1):
            if bounds[i] <= value < bounds[i + 1]:
                buckets[i].append(report.slice_id)
                break
    return [
        RangeGroup(bounds[i], bounds[i + 1], tuple(buckets[i]))
        for i in range(len(bounds) - 1)
    ]
