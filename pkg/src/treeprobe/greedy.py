"""Greedy integer targets for predicted depths.

The exact oracles in :mod:`treeprobe.constraints` enumerate exponentially
many candidates, so longer sentences use a local greedy construction
instead: walk the predicted depths in ascending order, start at 1 then 2,
and at each later position step up by one exactly when that lands closer to
the current predicted value.  Assigning the resulting ascending profile back
to positions in the same order approximates the nearest valid sequence, and
assigning it in reverse order approximates the farthest one.

The same-order greedy target is provably exact whenever consecutive gaps in
the sorted predicted depths are at most one (see
:func:`sorted_gaps_within_one`); otherwise it may be suboptimal, which is
why callers below the oracle cap may prefer the exact search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constraints import DepthSequence
from .errors import InvalidInputError


class PredictedDepths:
    """Nonnegative predicted depths plus their stable ascending order.

    ``order[r]`` is the original position of the r-th smallest value, with
    ties resolved by original position so downstream assignments are
    deterministic.
    """

    __slots__ = ("values", "order", "ascending")

    def __init__(self, values):
        if isinstance(values, PredictedDepths):
            values = values.values
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidInputError("predicted depths must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("predicted depths must be finite")
        if np.any(arr < 0):
            raise InvalidInputError("predicted depths must be nonnegative")
        self.values = arr
        self.order = np.argsort(arr, kind="stable")
        self.ascending = arr[self.order]

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        return f"PredictedDepths({self.values.tolist()!r})"


def _coerce(pdep) -> PredictedDepths:
    return pdep if isinstance(pdep, PredictedDepths) else PredictedDepths(pdep)


def greedy_profile(ascending: Sequence[float]) -> DepthSequence:
    """Build the greedy ascending profile for sorted predicted depths.

    Starts at 1, then 2, and afterwards steps up by one exactly when the
    incremented value is at least as close to the current predicted depth as
    the unincremented one (ties step up).
    """
    arr = np.asarray(ascending, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("input must be a nonempty 1-d sequence")
    if np.any(np.diff(arr) < 0):
        raise InvalidInputError("input must be sorted ascending")
    profile = [1]
    if arr.size >= 2:
        profile.append(2)
    for i in range(2, arr.size):
        prev = profile[-1]
        step = 1 if abs(prev + 1 - arr[i]) <= abs(prev - arr[i]) else 0
        profile.append(prev + step)
    return DepthSequence(profile)


def assign_in_order(profile: DepthSequence, pdep) -> DepthSequence:
    """Place an ascending profile back into original positions, same order.

    The r-th smallest predicted depth receives the r-th profile value.
    """
    pd = _coerce(pdep)
    values = np.asarray(tuple(profile), dtype=np.int64)
    if values.size != len(pd):
        raise InvalidInputError(
            f"profile length {values.size} != predicted depth length {len(pd)}"
        )
    out = np.empty(values.size, dtype=np.int64)
    out[pd.order] = values
    return DepthSequence(out)


def assign_reversed(profile: DepthSequence, pdep) -> DepthSequence:
    """Place an ascending profile back into original positions, reversed.

    The r-th smallest predicted depth receives the r-th *largest* profile
    value, the assignment that pushes the distance up rather than down.
    """
    pd = _coerce(pdep)
    values = np.asarray(tuple(profile), dtype=np.int64)
    if values.size != len(pd):
        raise InvalidInputError(
            f"profile length {values.size} != predicted depth length {len(pd)}"
        )
    out = np.empty(values.size, dtype=np.int64)
    out[pd.order] = values[::-1]
    return DepthSequence(out)


def greedy_nearest(pdep) -> DepthSequence:
    """Greedy approximation to the nearest valid sequence."""
    pd = _coerce(pdep)
    return assign_in_order(greedy_profile(pd.ascending), pd)


def greedy_farthest(pdep) -> DepthSequence:
    """Greedy approximation to the farthest valid sequence."""
    pd = _coerce(pdep)
    return assign_reversed(greedy_profile(pd.ascending), pd)


def sorted_gaps_within_one(pdep) -> bool:
    """True when consecutive sorted predicted depths differ by at most one.

    Under this condition the same-order greedy target attains exactly the
    distance of the true nearest valid sequence.
    """
    pd = _coerce(pdep)
    return bool(np.all(np.diff(pd.ascending) <= 1.0))


@dataclass(frozen=True)
class GreedyTrace:
    """Full record of one greedy construction."""

    profile: DepthSequence
    bias_flags: tuple[int, ...]
    nearest: DepthSequence
    farthest: DepthSequence
    gaps_within_one: bool


def greedy_trace(pdep) -> GreedyTrace:
    """Run the greedy construction and keep the intermediate step flags."""
    pd = _coerce(pdep)
    profile = greedy_profile(pd.ascending)
    flags = tuple(
        int(b - a) for a, b in zip(profile.values[1:], profile.values[2:])
    )
    return GreedyTrace(
        profile=profile,
        bias_flags=flags,
        nearest=assign_in_order(profile, pd),
        farthest=assign_reversed(profile, pd),
        gaps_within_one=sorted_gaps_within_one(pd),
    )
