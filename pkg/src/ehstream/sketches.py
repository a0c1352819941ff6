"""Exponential-histogram sketches over a sliding window.

Four variants summarize the last ``window`` elements of a stream with
relative error ``eps`` in sublinear memory:

* ``BitCountEH``  -- number of 1s in a bit stream.
* ``IntSumEH``    -- sum of non-negative integers, kept in the canonical
  bucket decomposition (bit-identical to running the one-at-a-time merge
  cascade, but O(buckets) per add instead of O(value)).
* ``IntMeanEH``   -- window mean as a sum sketch divided by a count sketch.
* ``VarianceEH``  -- mean and variance of a real stream via mergeable
  (count, mean, squared-deviation) buckets.

Timestamps are logical 0-based stream indices. Expiry is strict: a bucket
is dropped as soon as its newest element falls outside the window, i.e.
``last_ts <= now - window``.
"""

from __future__ import annotations

import math
import operator
from collections import deque
from dataclasses import dataclass

# one 8-byte index plus three 8-byte reals per bucket, with struct padding
BYTES_PER_BUCKET = 40


@dataclass(frozen=True)
class Bucket:
    """One contiguous chunk of the window: newest timestamp plus summary stats."""

    last_ts: int
    count: int
    sum: float
    var: float


@dataclass(frozen=True)
class WindowEstimate:
    """Point-in-time window summary. Values are real; see :meth:`count_rounded`."""

    count: float
    sum: float
    mean: float
    variance: float

    def count_rounded(self) -> int:
        """Count as an integer, halves rounding up."""
        return math.floor(self.count + 0.5)


_ZERO = WindowEstimate(0.0, 0.0, 0.0, 0.0)


def _check_params(eps: float, window: int) -> None:
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0, 1), got {eps!r}")
    if not isinstance(window, int) or isinstance(window, bool) or window < 1:
        raise ValueError(f"window must be a positive integer, got {window!r}")


class BitCountEH:
    """Approximate count of 1s among the last ``window`` bits.

    Buckets hold power-of-two counts of 1s. With ``k = ceil(1/eps)``, each
    size keeps between ``k//2`` and ``k//2 + 1`` buckets; inserting past that
    range merges the two oldest buckets of the size into one of the next.

    Only the oldest bucket can straddle the window boundary, and between 1
    and all of its ones are still live; the estimate reports the midpoint of
    that interval, ``total - (oldest - 1)/2``. A singleton oldest bucket is
    therefore counted exactly, and the worst-case relative error is below
    ``1/(2*(k//2))``, which is at most eps whenever k is even (in particular
    for any eps = 1/m).
    """

    __slots__ = ("eps", "window", "k", "_cap", "_levels", "_total", "_now")

    def __init__(self, eps: float, window: int):
        _check_params(eps, window)
        self.eps = eps
        self.window = window
        self.k = math.ceil(1.0 / eps)
        self._cap = self.k // 2 + 1
        # _levels[j] holds last_ts of live buckets of size 2**j, oldest first.
        # Bucket age decreases with level, so the global oldest sits at the top.
        self._levels: list[deque[int]] = []
        self._total = 0
        self._now = -1

    @property
    def now(self) -> int:
        return self._now

    @property
    def total_ones(self) -> int:
        """Exact number of 1s covered by live buckets (window plus stub of oldest)."""
        return self._total

    def add(self, bit: int) -> None:
        if bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {bit!r}")
        self._now += 1
        self._expire()
        if not bit:
            return
        if not self._levels:
            self._levels.append(deque())
        self._levels[0].append(self._now)
        self._total += 1
        j = 0
        while len(self._levels[j]) > self._cap:
            lvl = self._levels[j]
            lvl.popleft()
            ts = lvl.popleft()  # merged bucket keeps the newer timestamp
            if j + 1 == len(self._levels):
                self._levels.append(deque())
            self._levels[j + 1].append(ts)
            j += 1

    def _expire(self) -> None:
        limit = self._now - self.window
        while self._levels:
            top = self._levels[-1]
            if not top:
                self._levels.pop()
                continue
            if top[0] > limit:
                break
            top.popleft()
            self._total -= 1 << (len(self._levels) - 1)

    def estimate(self) -> WindowEstimate:
        if self._total == 0:
            return _ZERO
        oldest = 1 << (len(self._levels) - 1)
        count = self._total - (oldest - 1) / 2.0
        n_win = min(self._now + 1, self.window)
        return WindowEstimate(count, count, count / n_win, 0.0)

    def bucket_count(self) -> int:
        return sum(len(lvl) for lvl in self._levels)

    def buckets(self) -> list[Bucket]:
        """Live buckets, oldest first."""
        out = []
        for j in range(len(self._levels) - 1, -1, -1):
            size = 1 << j
            for ts in self._levels[j]:
                out.append(Bucket(ts, size, float(size), 0.0))
        return out


def l_canonical(total: int, l: int) -> list[int]:
    """Per-size bucket multiplicities for ``total`` ones, smallest size first.

    This is the unique decomposition total = sum_j c_j * 2**j with
    c_j in [l, l+1] below the top size and 1 <= c_top <= l+1. It equals the
    state reached by inserting ``total`` ones through a merge cascade that
    tops out at l+2 buckets per size, which is how the closed form below is
    derived: with j levels full, l*(2**j - 1) ones are committed and the
    remainder distributes one extra bucket per binary digit.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if total <= 0:
        return []
    j = ((total + l) // (l + 1)).bit_length() - 1
    rem = total - l * ((1 << j) - 1)
    top = rem >> j
    digits = rem - (top << j)
    counts = [l + ((digits >> i) & 1) for i in range(j)]
    counts.append(top)
    return counts


class IntSumEH:
    """Approximate sum of the last ``window`` non-negative integers.

    A value v arrives as v conceptual 1s sharing one timestamp. Rather than
    cascading v singletons, each add rebuilds the canonical decomposition of
    the new total directly; the rebuilt chunks always align with old bucket
    boundaries, so the result matches the cascade bucket for bucket.
    """

    __slots__ = ("eps", "window", "k", "l", "_buckets", "_total", "_now")

    def __init__(self, eps: float, window: int):
        _check_params(eps, window)
        self.eps = eps
        self.window = window
        self.k = math.ceil(1.0 / eps)
        self.l = self.k // 2
        self._buckets: list[tuple[int, int]] = []  # (last_ts, size), oldest first
        self._total = 0
        self._now = -1

    @property
    def now(self) -> int:
        return self._now

    @property
    def total_ones(self) -> int:
        return self._total

    def add(self, value: int) -> None:
        value = operator.index(value)
        if value < 0:
            raise ValueError(f"value must be a non-negative integer, got {value}")
        self._now += 1
        self._expire()
        if value == 0:
            return
        counts = l_canonical(self._total + value, self.l)
        old = self._buckets
        new: list[tuple[int, int]] = []
        i = 0
        fresh = value
        now = self._now
        for j in range(len(counts) - 1, -1, -1):
            size = 1 << j
            for _ in range(counts[j]):
                need = size
                ts = now
                while need > 0:
                    if i < len(old):
                        b_ts, b_size = old[i]
                        # a cascade only ever merges whole buckets, so old
                        # boundaries always align with the rebuilt chunks
                        assert b_size <= need
                        need -= b_size
                        ts = b_ts
                        i += 1
                    else:
                        take = need if need < fresh else fresh
                        need -= take
                        fresh -= take
                        ts = now
                new.append((ts, size))
        assert i == len(old) and fresh == 0
        self._buckets = new
        self._total += value

    def _expire(self) -> None:
        limit = self._now - self.window
        bs = self._buckets
        while bs and bs[0][0] <= limit:
            self._total -= bs[0][1]
            bs.pop(0)

    def estimate(self) -> WindowEstimate:
        if not self._buckets:
            return _ZERO
        # same straddle reasoning as BitCountEH: at least one of the oldest
        # bucket's conceptual ones (the one at last_ts) is still live
        est = self._total - (self._buckets[0][1] - 1) / 2.0
        n_win = min(self._now + 1, self.window)
        return WindowEstimate(est, est, est / n_win, 0.0)

    def bucket_count(self) -> int:
        return len(self._buckets)

    def buckets(self) -> list[Bucket]:
        return [Bucket(ts, size, float(size), 0.0) for ts, size in self._buckets]


class IntMeanEH:
    """Window mean of non-negative integers: sum sketch over count sketch.

    Both sub-sketches share eps, window and the logical clock; the count
    side sees one 1 per element regardless of its value.
    """

    __slots__ = ("eps", "window", "sum_eh", "count_eh")

    def __init__(self, eps: float, window: int):
        _check_params(eps, window)
        self.eps = eps
        self.window = window
        self.sum_eh = IntSumEH(eps, window)
        self.count_eh = BitCountEH(eps, window)

    @property
    def now(self) -> int:
        return self.sum_eh.now

    def add(self, value: int) -> None:
        self.sum_eh.add(value)
        self.count_eh.add(1)

    def estimate(self) -> WindowEstimate:
        s = self.sum_eh.estimate().sum
        c = self.count_eh.estimate().count
        mean = s / c if c > 0 else 0.0
        return WindowEstimate(c, s, mean, 0.0)

    def bucket_count(self) -> int:
        return self.sum_eh.bucket_count() + self.count_eh.bucket_count()

    def buckets(self) -> list[Bucket]:
        """Sum-sketch buckets followed by count-sketch buckets, each oldest first."""
        return self.sum_eh.buckets() + self.count_eh.buckets()


def merge_stats(n1: float, mean1: float, v1: float, n2: float, mean2: float, v2: float):
    """Combine two (count, mean, sum of squared deviations) summaries exactly."""
    n = n1 + n2
    if n2 == 0.0:
        return n1, mean1, v1
    if n1 == 0.0:
        return n2, mean2, v2
    delta = mean1 - mean2
    v = v1 + v2 + n1 * n2 / n * delta * delta
    mean = (n1 * mean1 + n2 * mean2) / n
    return n, mean, v


def _unmerge_stats(n: float, mean: float, v: float, n1: float, mean1: float, v1: float):
    """Invert merge_stats: remove component (n1, mean1, v1) from the total."""
    n2 = n - n1
    if n2 <= 0.0:
        return 0.0, 0.0, 0.0
    mean2 = (n * mean - n1 * mean1) / n2
    delta = mean1 - mean2
    v2 = v - v1 - n1 * n2 / n * delta * delta
    return n2, mean2, (v2 if v2 > 0.0 else 0.0)


class VarianceEH:
    """Approximate mean and variance of the last ``window`` reals.

    Buckets carry (last_ts, count, mean, V) where V is the sum of squared
    deviations from the bucket mean. A merged bucket must stay small next to
    everything newer than it: 9*V_bucket <= eps^2 * V_suffix. Compression
    runs as a full oldest-to-newest sweep that merges every adjacent pair
    the invariant allows; sweeps trigger once the bucket count has roughly
    doubled since the previous one, which keeps the amortized cost per add
    constant while the count stays within a constant factor of what the
    invariant permits.

    Each bucket covers consecutive stream positions ending at last_ts, so
    the number of its elements still inside the window is known exactly.
    The estimate replaces the boundary-straddling oldest bucket with a
    pseudo-bucket carrying its live share, (live, mean, V*live/n); what is
    approximated is only the live share's mean and spread, whose deviation
    the structural invariant keeps below eps. At exactly half straddle this
    is the familiar (n/2, mean, V/2) pseudo-bucket, and a fully live oldest
    bucket is used as is.

    A running total over all live buckets is kept so expiry, the merge test
    and estimates are O(1); it is recomputed from scratch periodically to
    stop float drift from accumulating.
    """

    __slots__ = (
        "eps",
        "window",
        "_buckets",
        "_tn",
        "_tm",
        "_tv",
        "_now",
        "_dirty",
        "_base",
    )

    _RESYNC_EVERY = 4096

    def __init__(self, eps: float, window: int):
        _check_params(eps, window)
        self.eps = eps
        self.window = window
        self._buckets: list[list] = []  # [last_ts, n, mean, V], oldest first
        self._tn = 0.0
        self._tm = 0.0
        self._tv = 0.0
        self._now = -1
        self._dirty = 0
        self._base = 8  # bucket count right after the last compression sweep

    @property
    def now(self) -> int:
        return self._now

    def add(self, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"value must be finite, got {value!r}")
        self._now += 1
        bs = self._buckets
        limit = self._now - self.window
        while bs and bs[0][0] <= limit:
            _, n, m, v = bs.pop(0)
            self._tn, self._tm, self._tv = _unmerge_stats(self._tn, self._tm, self._tv, n, m, v)
        bs.append([self._now, 1.0, value, 0.0])
        self._tn, self._tm, self._tv = merge_stats(self._tn, self._tm, self._tv, 1.0, value, 0.0)

        if len(bs) > 2 * self._base + 16:
            self._sweep()

        self._dirty += 1
        if self._dirty >= self._RESYNC_EVERY:
            self._recompute_total()

    def _sweep(self) -> None:
        """Merge every adjacent pair the structural invariant allows.

        Walks oldest to newest keeping a running prefix aggregate, so each
        pair test is O(1): suffix = total (-) prefix (-) candidate. A merge
        is retried at the same position; a failure advances. The comparison
        margin keeps merged buckets valid under exact recomputation despite
        drift in the cached totals.
        """
        self._recompute_total()
        bs = self._buckets
        thresh = self.eps * self.eps / 9.0
        pn = pm = pv = 0.0  # aggregate of buckets[0..i-1]
        i = 0
        while i + 1 < len(bs):
            _, n1, m1, v1 = bs[i]
            t2, n2, m2, v2 = bs[i + 1]
            cn, cm, cv = merge_stats(n1, m1, v1, n2, m2, v2)
            rn, rm, rv = _unmerge_stats(self._tn, self._tm, self._tv, pn, pm, pv)
            _, _, sv = _unmerge_stats(rn, rm, rv, cn, cm, cv)
            if cv <= thresh * sv * (1.0 - 1e-12):
                bs[i] = [t2, cn, cm, cv]
                del bs[i + 1]
            else:
                pn, pm, pv = merge_stats(pn, pm, pv, n1, m1, v1)
                i += 1
        self._base = len(bs)

    def _recompute_total(self) -> None:
        tn = tm = tv = 0.0
        for _, n, m, v in self._buckets:
            tn, tm, tv = merge_stats(tn, tm, tv, n, m, v)
        self._tn, self._tm, self._tv = tn, tm, tv
        self._dirty = 0

    def estimate(self) -> WindowEstimate:
        bs = self._buckets
        if not bs:
            return _ZERO
        ts0, n1, m1, v1 = bs[0]
        live = float(ts0 - (self._now - self.window))  # in [1, n1]: not expired
        if live > n1:
            live = n1
        rn, rm, rv = _unmerge_stats(self._tn, self._tm, self._tv, n1, m1, v1)
        en, em, ev = merge_stats(live, m1, v1 * (live / n1), rn, rm, rv)
        if ev < 0.0:
            ev = 0.0
        variance = ev / en if en > 1.0 else 0.0
        return WindowEstimate(en, en * em, em, variance)

    def bucket_count(self) -> int:
        return len(self._buckets)

    def buckets(self) -> list[Bucket]:
        return [Bucket(ts, int(n), n * m, v) for ts, n, m, v in self._buckets]

    def check_invariant(self) -> None:
        """Assert the structural invariant against exactly recomputed suffixes."""
        suffix_n = suffix_m = suffix_v = 0.0
        for i in range(len(self._buckets) - 1, 0, -1):
            _, n, m, v = self._buckets[i]
            suffix_n, suffix_m, suffix_v = merge_stats(n, m, v, suffix_n, suffix_m, suffix_v)
            v_prev = self._buckets[i - 1][3]
            if v_prev > 0.0:
                assert 9.0 * v_prev <= self.eps * self.eps * suffix_v * (1.0 + 1e-9), (
                    f"bucket {i - 1}: 9*{v_prev} > eps^2*{suffix_v}"
                )


def memory_footprint(sketch) -> tuple[int, int]:
    """(live bucket count, deterministic byte estimate) for any sketch variant."""
    n = sketch.bucket_count()
    return n, n * BYTES_PER_BUCKET
