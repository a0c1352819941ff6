"""Exact reference implementations the sketch tests compare against."""

import math
import statistics
from collections import deque


class ExactWindow:
    """Ring buffer holding the last ``window`` values with exact statistics.

    Running sums are refreshed with math.fsum every RESYNC adds so float
    drift stays far below the tolerances under test. For integer streams the
    running sums are exact anyway.
    """

    RESYNC = 1024

    def __init__(self, window):
        self.window = window
        self._buf = deque()
        self._sum = 0.0
        self._sumsq = 0.0
        self._since = 0

    def add(self, x):
        self._buf.append(x)
        self._sum += x
        self._sumsq += x * x
        if len(self._buf) > self.window:
            old = self._buf.popleft()
            self._sum -= old
            self._sumsq -= old * old
        self._since += 1
        if self._since >= self.RESYNC:
            self._sum = math.fsum(self._buf)
            self._sumsq = math.fsum(x * x for x in self._buf)
            self._since = 0

    @property
    def count(self):
        return len(self._buf)

    @property
    def sum(self):
        return self._sum

    @property
    def mean(self):
        return self._sum / len(self._buf) if self._buf else 0.0

    @property
    def variance(self):
        n = len(self._buf)
        if n <= 1:
            return 0.0
        v = self._sumsq - self._sum * self._sum / n
        return max(v, 0.0) / n

    def exact_variance(self):
        """Two-pass population variance, for spot-checking the running version."""
        if len(self._buf) <= 1:
            return 0.0
        return statistics.pvariance(self._buf)


class CascadeIntSum:
    """Reference integer-sum sketch that feeds each value through the merge
    cascade one conceptual 1 at a time. O(value) per add, used only to pin
    down the expected bucket states."""

    def __init__(self, eps, window):
        self.eps = eps
        self.window = window
        self.k = math.ceil(1.0 / eps)
        self.cap = self.k // 2 + 1
        self.levels = []  # levels[j]: deque of last_ts for size 2**j, oldest first
        self.total = 0
        self.now = -1

    def add(self, value):
        if value < 0:
            raise ValueError("negative value")
        self.now += 1
        self._expire()
        for _ in range(value):
            if not self.levels:
                self.levels.append(deque())
            self.levels[0].append(self.now)
            self.total += 1
            j = 0
            while len(self.levels[j]) > self.cap:
                lvl = self.levels[j]
                lvl.popleft()
                ts = lvl.popleft()
                if j + 1 == len(self.levels):
                    self.levels.append(deque())
                self.levels[j + 1].append(ts)
                j += 1

    def _expire(self):
        limit = self.now - self.window
        while self.levels:
            top = self.levels[-1]
            if not top:
                self.levels.pop()
                continue
            if top[0] > limit:
                break
            top.popleft()
            self.total -= 1 << (len(self.levels) - 1)

    def state(self):
        """Buckets as (last_ts, size) tuples, oldest first."""
        out = []
        for j in range(len(self.levels) - 1, -1, -1):
            for ts in self.levels[j]:
                out.append((ts, 1 << j))
        return out

    def estimate_sum(self):
        st = self.state()
        if not st:
            return 0.0
        return self.total - (st[0][1] - 1) / 2.0
