"""Multi-resolution window statistics for feature streams.

A :class:`Summarizer` keeps one variance sketch per (attribute, window size)
pair and turns each incoming record into an augmented feature vector:
optionally the raw attributes, then for every attribute and window size the
selected window statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sketches import VarianceEH

_VALID_STATS = ("mean", "variance")


@dataclass(frozen=True)
class ResolutionConfig:
    """Which window sizes and statistics to compute, and at what accuracy."""

    resolutions: tuple
    stats: tuple = _VALID_STATS
    eps: float = 0.05
    include_raw: bool = True

    def __post_init__(self):
        res = tuple(int(w) for w in self.resolutions)
        if not res:
            raise ValueError("resolutions must be non-empty")
        if any(w < 1 for w in res):
            raise ValueError(f"window sizes must be positive, got {res}")
        if list(res) != sorted(set(res)):
            raise ValueError(f"resolutions must be strictly increasing, got {res}")
        stats = tuple(s for s in _VALID_STATS if s in self.stats)
        if not stats or set(self.stats) - set(_VALID_STATS):
            raise ValueError(f"stats must be a non-empty subset of {_VALID_STATS}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must be in (0, 1), got {self.eps}")
        object.__setattr__(self, "resolutions", res)
        object.__setattr__(self, "stats", stats)  # mean always before variance


@dataclass
class StreamRecord:
    """One stream element: position, feature vector, optional class label."""

    t: int
    features: tuple
    label: object = None


class Summarizer:
    """Maintains the sketch grid and emits augmented records.

    Output feature order: raw attributes first (if configured), then for each
    attribute, for each window size, the selected statistics, mean before
    variance. Column names follow the same order, e.g. ``a0_w50_mean``.
    """

    def __init__(self, n_attributes: int, config: ResolutionConfig):
        if n_attributes < 1:
            raise ValueError(f"n_attributes must be >= 1, got {n_attributes}")
        self.n_attributes = n_attributes
        self.config = config
        self._grid = [
            [VarianceEH(config.eps, w) for w in config.resolutions]
            for _ in range(n_attributes)
        ]

    @property
    def output_width(self) -> int:
        c = self.config
        width = len(c.resolutions) * len(c.stats) * self.n_attributes
        if c.include_raw:
            width += self.n_attributes
        return width

    def feature_names(self, base=None) -> list:
        c = self.config
        if base is None:
            base = [f"a{j}" for j in range(self.n_attributes)]
        elif len(base) != self.n_attributes:
            raise ValueError(f"expected {self.n_attributes} base names, got {len(base)}")
        names = []
        if c.include_raw:
            names.extend(base)
        for j in range(self.n_attributes):
            for w in c.resolutions:
                for s in c.stats:
                    suffix = "mean" if s == "mean" else "var"
                    names.append(f"{base[j]}_w{w}_{suffix}")
        return names

    def push(self, record: StreamRecord) -> StreamRecord:
        """Feed one record through every sketch and return the augmented record."""
        feats = record.features
        if len(feats) != self.n_attributes:
            raise ValueError(
                f"expected {self.n_attributes} features, got {len(feats)}"
            )
        if any(not math.isfinite(x) for x in feats):
            raise ValueError(f"features must be finite, got {feats!r}")
        c = self.config
        out = list(feats) if c.include_raw else []
        want_mean = "mean" in c.stats
        want_var = "variance" in c.stats
        for j, x in enumerate(feats):
            for sk in self._grid[j]:
                sk.add(x)
                est = sk.estimate()
                if want_mean:
                    out.append(est.mean)
                if want_var:
                    out.append(est.variance)
        return StreamRecord(record.t, tuple(out), record.label)

    def sketch(self, attribute: int, resolution: int) -> VarianceEH:
        """Direct access to one grid cell (attribute index, window size)."""
        return self._grid[attribute][self.config.resolutions.index(resolution)]

    def reset(self) -> None:
        c = self.config
        self._grid = [
            [VarianceEH(c.eps, w) for w in c.resolutions]
            for _ in range(self.n_attributes)
        ]
