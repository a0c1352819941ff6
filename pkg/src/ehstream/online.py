"""Incremental Gaussian Naive Bayes and prequential (test-then-train) evaluation."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


class GaussianNB:
    """Streaming NB with one gaussian per class-feature pair.

    Mean and variance are maintained with Welford updates. Variances are
    floored at 1e-6 when scoring so a degenerate feature cannot produce
    infinite log-likelihoods. Ties break toward the lowest class label;
    before any example has been seen, ``cold_start`` is predicted.
    """

    VAR_FLOOR = 1e-6

    def __init__(self, cold_start=0):
        self.cold_start = cold_start
        self._stats = {}  # label -> [count, means, m2s]
        self._n = 0

    @property
    def classes(self):
        return sorted(self._stats)

    def learn(self, features, label) -> None:
        st = self._stats.get(label)
        if st is None:
            st = [0, [0.0] * len(features), [0.0] * len(features)]
            self._stats[label] = st
        elif len(features) != len(st[1]):
            raise ValueError(f"expected {len(st[1])} features, got {len(features)}")
        st[0] += 1
        n = st[0]
        means, m2s = st[1], st[2]
        for j, x in enumerate(features):
            d = x - means[j]
            means[j] += d / n
            m2s[j] += d * (x - means[j])
        self._n += 1

    def class_stats(self, label):
        """(count, means, variances) for one class; variances are population."""
        n, means, m2s = self._stats[label]
        return n, list(means), [m2 / n for m2 in m2s]

    def log_posterior(self, features, label):
        n, means, m2s = self._stats[label]
        lp = math.log(n / self._n)
        for j, x in enumerate(features):
            var = m2s[j] / n
            if var < self.VAR_FLOOR:
                var = self.VAR_FLOOR
            d = x - means[j]
            lp += -0.5 * (math.log(2.0 * math.pi * var) + d * d / var)
        return lp

    def predict(self, features):
        if not self._stats:
            return self.cold_start
        best = None
        best_lp = -math.inf
        for label in sorted(self._stats):
            st = self._stats[label]
            if len(features) != len(st[1]):
                raise ValueError(f"expected {len(st[1])} features, got {len(features)}")
            lp = self.log_posterior(features, label)
            if lp > best_lp:
                best, best_lp = label, lp
        return best


@dataclass
class PrequentialResult:
    n: int
    correct: int
    accuracy: float
    trace: list = field(default_factory=list)

    def report_line(self) -> str:
        return f"n={self.n}, accuracy={self.accuracy:.6f}"


def prequential_eval(model, stream, trace_window=1000, keep_trace=False) -> PrequentialResult:
    """Predict each record, score it, then learn from it, in stream order."""
    n = 0
    correct = 0
    window_hits = deque(maxlen=trace_window)
    trace = []
    for rec in stream:
        hit = 1 if model.predict(rec.features) == rec.label else 0
        correct += hit
        n += 1
        model.learn(rec.features, rec.label)
        if keep_trace:
            window_hits.append(hit)
            trace.append(sum(window_hits) / len(window_hits))
    accuracy = correct / n if n else 0.0
    return PrequentialResult(n, correct, accuracy, trace)
