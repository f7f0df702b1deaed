"""Tree-depth sequences, their constraint set, and exact small-scale oracles.

A depth sequence assigns every token of a sentence the depth of its node in
a rooted tree, with the root at depth 1.  Valid sequences satisfy two
conditions:

* boundary: the minimum value is 1 and is attained exactly once; a sequence
  of length two or more also contains the value 2;
* recursion: sorting the sequence ascending yields consecutive steps of
  0 or 1.

Together these make the set of valid sequences of a fixed length finite
(no value can exceed the length), so the nearest and farthest members under
the mean squared distance can be found exactly by enumeration.  The search
over members is organised by sorted profile: the optimal assignment of a
profile's values to positions is same-order for the nearest member and
reverse-order for the farthest one, which keeps the exact oracles usable a
few lengths beyond full permutation enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConstraintError, InvalidInputError, OracleCapError, ShapeError

#: Maximum length for oracle searches over sorted profiles (2^(L-2) candidates).
SORTED_PROFILE_CAP = 10
#: Maximum length for full enumeration including permutations.
PERMUTATION_CAP = 7


def _violation(values: Sequence[int]) -> str | None:
    """Return a human-readable reason why ``values`` is invalid, or None."""
    if len(values) == 0:
        raise InvalidInputError("depth sequence must be nonempty")
    for v in values:
        if not float(v).is_integer():
            return f"non-integer depth {v!r}"
    vals = [int(v) for v in values]
    mn = min(vals)
    if mn != 1:
        return f"minimum depth is {mn}, expected 1"
    if vals.count(mn) != 1:
        return "minimum depth must be attained exactly once"
    if len(vals) >= 2 and 2 not in vals:
        return "sequences of length >= 2 must contain depth 2"
    ordered = sorted(vals)
    for a, b in zip(ordered, ordered[1:]):
        if b - a not in (0, 1):
            return f"sorted steps must be 0 or 1, found gap {b - a}"
    return None


def validate(seq: Sequence[int]) -> bool:
    """Check whether an integer sequence satisfies the tree-depth constraints."""
    return _violation(list(seq)) is None


@dataclass(frozen=True)
class DepthSequence:
    """An integer depth sequence validated against the tree constraints."""

    values: tuple[int, ...]

    def __init__(self, values: Iterable[int]):
        vals = list(values)
        reason = _violation(vals)
        if reason is not None:
            raise ConstraintError(f"invalid depth sequence {vals}: {reason}")
        object.__setattr__(self, "values", tuple(int(v) for v in vals))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class ConstraintSetEnumeration:
    """Complete listing of the valid sequences of one length."""

    length: int
    members: tuple[DepthSequence, ...]
    include_permutations: bool

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, seq) -> bool:
        target = tuple(int(v) for v in seq)
        return any(m.values == target for m in self.members)


def sorted_profiles(length: int) -> Iterator[tuple[int, ...]]:
    """Yield every ascending valid sequence of the given length, in lexicographic order.

    The first element is forced to 1, the second to 2, and each later step is
    free to be 0 or 1, giving 2^(length-2) profiles for length >= 2.
    """
    if length < 1:
        raise InvalidInputError("length must be positive")
    if length == 1:
        yield (1,)
        return
    for bits in itertools.product((0, 1), repeat=length - 2):
        profile = [1, 2]
        for b in bits:
            profile.append(profile[-1] + b)
        yield tuple(profile)


def enumerate_all(
    length: int,
    include_permutations: bool = False,
    cap: int | None = None,
) -> ConstraintSetEnumeration:
    """Enumerate the full constraint set for one length.

    With ``include_permutations=False`` only ascending members are returned.
    Enumeration is refused above the cap (defaults: 10 for sorted profiles,
    7 with permutations) because the member count grows exponentially.
    """
    if cap is None:
        cap = PERMUTATION_CAP if include_permutations else SORTED_PROFILE_CAP
    if length > cap:
        raise OracleCapError(
            f"length {length} exceeds the enumeration cap {cap}"
            f" ({'with' if include_permutations else 'without'} permutations)"
        )
    profiles = list(sorted_profiles(length))
    if not include_permutations:
        members = tuple(DepthSequence(p) for p in profiles)
    else:
        seen: set[tuple[int, ...]] = set()
        for p in profiles:
            seen.update(itertools.permutations(p))
        members = tuple(DepthSequence(m) for m in sorted(seen))
    return ConstraintSetEnumeration(length, members, include_permutations)


def distance(pdep: Sequence[float], target: Sequence[int]) -> float:
    """Mean squared distance between predicted depths and an integer sequence.

    Summation uses ``math.fsum`` so the result is the correctly rounded mean:
    the value never depends on term order, and candidates that are
    mathematically tied compare exactly equal.
    """
    p = np.asarray(pdep, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise InvalidInputError("sequences must be nonempty")
    return math.fsum((p - t) ** 2) / p.size


def _checked_values(pdep: Sequence[float], cap: int) -> np.ndarray:
    values = np.asarray(pdep, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise InvalidInputError("predicted depths must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("predicted depths must be finite")
    if values.size > cap:
        raise OracleCapError(
            f"length {values.size} exceeds the oracle cap {cap}; "
            "use the greedy construction instead"
        )
    return values


def min_oracle(
    pdep: Sequence[float], cap: int = SORTED_PROFILE_CAP
) -> tuple[DepthSequence, float]:
    """Exact nearest valid sequence under the mean squared distance.

    Searches every sorted profile and assigns its values to positions in the
    same order as the predicted depths (the assignment that minimises the
    distance for a fixed multiset of values).  Ties are broken toward the
    lexicographically smallest sequence.
    """
    values = _checked_values(pdep, cap)
    order = np.argsort(values, kind="stable")
    best_seq: np.ndarray | None = None
    best_dist = np.inf
    aligned = np.empty(values.size, dtype=np.int64)
    for profile in sorted_profiles(values.size):
        aligned[order] = profile
        d = distance(values, aligned)
        if d < best_dist or (d == best_dist and tuple(aligned) < tuple(best_seq)):
            best_dist = d
            best_seq = aligned.copy()
    return DepthSequence(best_seq), best_dist


def max_oracle(
    pdep: Sequence[float], cap: int = SORTED_PROFILE_CAP
) -> tuple[DepthSequence, float]:
    """Exact farthest valid sequence under the mean squared distance.

    Mirrors :func:`min_oracle` with reverse-order assignment, which maximises
    the distance for a fixed multiset of values.  Runs of equal predicted
    depths receive their assigned values in ascending order so ties still
    resolve to the lexicographically smallest sequence.
    """
    values = _checked_values(pdep, cap)
    order = np.argsort(values, kind="stable")
    ascending = values[order]
    runs = _equal_runs(ascending)
    best_seq: np.ndarray | None = None
    best_dist = -np.inf
    aligned = np.empty(values.size, dtype=np.int64)
    for profile in sorted_profiles(values.size):
        assigned = np.array(profile[::-1], dtype=np.int64)
        for lo, hi in runs:
            assigned[lo:hi] = np.sort(assigned[lo:hi])
        aligned[order] = assigned
        d = distance(values, aligned)
        if d > best_dist or (d == best_dist and tuple(aligned) < tuple(best_seq)):
            best_dist = d
            best_seq = aligned.copy()
    return DepthSequence(best_seq), best_dist


def _equal_runs(ascending: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges of equal consecutive values, length >= 2 only."""
    runs = []
    start = 0
    for i in range(1, ascending.size + 1):
        if i == ascending.size or ascending[i] != ascending[start]:
            if i - start >= 2:
                runs.append((start, i))
            start = i
    return runs
