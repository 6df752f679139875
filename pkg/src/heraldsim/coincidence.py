"""Time-tag stream analysis: windowed matching, histograms, closed forms.

Timestamps are integer femtoseconds, so window comparisons are exact and
event files are bit-stable.  Conventions, pinned once and used
everywhere:

- signed time differences are t_B - t_A;
- a window's ``offset_fs`` is the expected t_B - t_A, subtracted before
  comparing against the (inclusive) half width;
- matching is greedy earliest-first and one-to-one: walking the merged
  sorted streams, the earliest unmatched A event pairs with the earliest
  unmatched B event inside the window, so no event is counted twice even
  under multi-pair pileup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np


class Detector(str, Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"


@dataclass(frozen=True, order=True)
class DetectionEvent:
    """One detector click.  Streams sort by time, ties broken by event id."""

    sort_index: tuple = field(init=False, repr=False, compare=True)
    event_id: int = field(compare=False)
    detector: Detector = field(compare=False)
    time_fs: int = field(compare=False)

    def __post_init__(self):
        if not isinstance(self.time_fs, (int, np.integer)):
            raise TypeError("time_fs must be an integer femtosecond count")
        object.__setattr__(self, "time_fs", int(self.time_fs))
        object.__setattr__(self, "event_id", int(self.event_id))
        object.__setattr__(self, "sort_index", (self.time_fs, self.event_id))


@dataclass(frozen=True)
class CoincidenceWindow:
    """Inclusive +-half_width_fs acceptance around an expected delay."""

    half_width_fs: int
    offset_fs: int = 0

    def __post_init__(self):
        if not self.half_width_fs > 0:
            raise ValueError("half_width_fs must be > 0")
        object.__setattr__(self, "half_width_fs", int(self.half_width_fs))
        object.__setattr__(self, "offset_fs", int(self.offset_fs))


def _check_sorted(stream: Sequence[DetectionEvent], name: str) -> None:
    for k in range(1, len(stream)):
        if stream[k].sort_index < stream[k - 1].sort_index:
            raise ValueError(
                f"{name} is not sorted by (time_fs, event_id) at position {k}: "
                f"{stream[k - 1]} before {stream[k]}"
            )


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[DetectionEvent, DetectionEvent], ...]
    n_a: int
    n_b: int

    @property
    def count(self) -> int:
        return len(self.pairs)


def match(
    stream_a: Sequence[DetectionEvent],
    stream_b: Sequence[DetectionEvent],
    window: CoincidenceWindow,
) -> MatchResult:
    """Greedy earliest-first one-to-one coincidences between two sorted streams.

    Pairs (a, b) satisfy |t_b - t_a - offset| <= half_width.  Unsorted
    input is rejected with a diagnostic.  The matched set is a pure
    function of the inputs; swapping the streams while negating the
    offset yields the mirrored set.
    """
    _check_sorted(stream_a, "stream A")
    _check_sorted(stream_b, "stream B")
    w = window.half_width_fs
    off = window.offset_fs
    ta = [e.time_fs for e in stream_a]
    tb = [e.time_fs for e in stream_b]
    na, nb = len(ta), len(tb)
    pairs = []
    i = j = 0
    while i < na and j < nb:
        d = tb[j] - ta[i] - off
        if d < -w:
            j += 1
        elif d > w:
            i += 1
        else:
            pairs.append((stream_a[i], stream_b[j]))
            i += 1
            j += 1
    return MatchResult(tuple(pairs), na, nb)


@dataclass(frozen=True)
class DtHistogram:
    """Histogram of nearest-neighbor time differences (t_B - t_A).

    Bin k counts differences in [k*bin_width, (k+1)*bin_width); edges are
    integer multiples of the bin width spanning at least +-range.
    """

    bin_width_fs: int
    first_bin_index: int
    counts: tuple[int, ...]

    @property
    def edges_fs(self) -> tuple[int, ...]:
        k0 = self.first_bin_index
        return tuple((k0 + i) * self.bin_width_fs
                     for i in range(len(self.counts) + 1))

    def to_dict(self) -> dict:
        return {
            "bin_width_fs": self.bin_width_fs,
            "first_bin_index": self.first_bin_index,
            "counts": list(self.counts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DtHistogram":
        return cls(int(d["bin_width_fs"]), int(d["first_bin_index"]),
                   tuple(int(c) for c in d["counts"]))


def dt_histogram(
    stream_a: Sequence[DetectionEvent],
    stream_b: Sequence[DetectionEvent],
    bin_width_fs: int,
    range_fs: int,
) -> DtHistogram:
    """Bin, for each A event, the signed difference to its nearest B event.

    Differences beyond +-range_fs (or A events with no B neighbor) are
    dropped.  Equidistant neighbors resolve to the earlier B event.
    """
    if bin_width_fs <= 0:
        raise ValueError("bin_width_fs must be > 0")
    if range_fs <= 0:
        raise ValueError("range_fs must be > 0")
    _check_sorted(stream_a, "stream A")
    _check_sorted(stream_b, "stream B")

    k_min = (-range_fs) // bin_width_fs
    k_max = range_fs // bin_width_fs
    nbins = k_max - k_min + 1
    counts = np.zeros(nbins, dtype=np.int64)

    if stream_a and stream_b:
        ta = np.array([e.time_fs for e in stream_a], dtype=np.int64)
        tb = np.array([e.time_fs for e in stream_b], dtype=np.int64)
        right = np.searchsorted(tb, ta, side="left")
        left = right - 1
        right_ok = right < len(tb)
        left_ok = left >= 0
        d_right = np.where(right_ok, tb[np.minimum(right, len(tb) - 1)] - ta,
                           np.iinfo(np.int64).max)
        d_left = np.where(left_ok, ta - tb[np.maximum(left, 0)],
                          np.iinfo(np.int64).max)
        # ties go to the earlier (left) neighbor
        use_left = d_left <= d_right
        dt = np.where(use_left, -d_left, d_right)
        dt = dt[np.abs(dt) <= range_fs]
        if dt.size:
            idx = np.floor_divide(dt, bin_width_fs) - k_min
            np.add.at(counts, idx, 1)

    return DtHistogram(int(bin_width_fs), int(k_min),
                       tuple(int(c) for c in counts))


def dispersed_coincidence_fraction(delay_spread, window):
    """Closed-form pair-survival fraction for the dispersed timing model.

    For two independent delays uniform on [0, delay_spread], the
    probability that they differ by at most ``window`` is 2a - a^2 with
    a = min(window / delay_spread, 1).  Unit-agnostic: pass both
    arguments in the same time unit (exact for exact numeric types).
    """
    if not delay_spread > 0:
        raise ValueError("delay_spread must be > 0")
    if window < 0:
        raise ValueError("window must be >= 0")
    a = window / delay_spread
    if a >= 1:
        return 1.0
    return 2 * a - a * a
