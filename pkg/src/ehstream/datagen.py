"""Drifting-stream generators and dataset ingestion.

Synthetic streams: a one-feature sine signal whose vertical offset encodes
the active concept, composed under sudden, incremental, or reoccurring
drift. Real data: the half-hourly electricity market layout (date, day,
period, nswprice, nswdemand, vicprice, vicdemand, transfer, class), of
which the six real-valued features are kept. A seeded surrogate generator
produces a stand-in stream with the same shape, scale, and label
construction for environments where the real file is unavailable.

CSV and ARFF writers serialize reals with 17 significant digits so a
read-after-write round-trips float64 exactly.
"""

from __future__ import annotations

import math
import os
import random
from collections import deque
from dataclasses import dataclass

from .windowing import StreamRecord

_DRIFT_KINDS = ("sudden", "incremental", "reoccurring")

ELECTRICITY_FEATURES = (
    "period",
    "nswprice",
    "nswdemand",
    "vicprice",
    "vicdemand",
    "transfer",
)
ELECTRICITY_COLUMNS = ("date", "day") + ELECTRICITY_FEATURES + ("class",)
ELECTRICITY_N = 45312


@dataclass(frozen=True)
class SineConceptSpec:
    """Two sine concepts y = amplitude * (sin(t*step) + offset_i)."""

    offsets: tuple = (2.0, 3.0)
    amplitude: float = 10.0
    step: float = 2.0 * math.pi / 100.0
    n: int = 10000
    seed: int = 0

    def __post_init__(self):
        if len(self.offsets) != 2:
            raise ValueError("offsets must hold exactly two concept offsets")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")


@dataclass(frozen=True)
class DriftSpec:
    """How the two concepts are composed over time.

    sudden: concept 0 until tau (default: one concept length), then 1.
    incremental: concept 1 drawn with probability p_schedule(t); the default
        schedule ramps linearly from 0 to 1 over the middle third.
    reoccurring: both concepts cut into chunk_len pieces, concatenated in an
        order shuffled by shuffle_seed.
    """

    kind: str
    tau: int = None
    p_schedule: object = None
    chunk_len: int = 500
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.kind not in _DRIFT_KINDS:
            raise ValueError(f"kind must be one of {_DRIFT_KINDS}, got {self.kind!r}")
        if self.tau is not None and self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.chunk_len < 1:
            raise ValueError(f"chunk_len must be >= 1, got {self.chunk_len}")


def _ramp_middle_third(length):
    lo = length / 3.0
    hi = 2.0 * length / 3.0

    def p(t):
        if t < lo:
            return 0.0
        if t >= hi:
            return 1.0
        return (t - lo) / (hi - lo)

    return p


def gen_sine_mixed(spec: SineConceptSpec, drift: DriftSpec) -> list:
    """Two-concept sine stream of length 2*spec.n under the given drift."""
    total = 2 * spec.n
    amp = spec.amplitude
    records = []
    if drift.kind == "sudden":
        tau = spec.n if drift.tau is None else drift.tau
        for t in range(total):
            c = 0 if t < tau else 1
            y = amp * (math.sin(t * spec.step) + spec.offsets[c])
            records.append(StreamRecord(t, (y,), c))
    elif drift.kind == "incremental":
        p = drift.p_schedule if drift.p_schedule is not None else _ramp_middle_third(total)
        rng = random.Random(spec.seed)
        for t in range(total):
            c = 1 if rng.random() < p(t) else 0
            y = amp * (math.sin(t * spec.step) + spec.offsets[c])
            records.append(StreamRecord(t, (y,), c))
    else:  # reoccurring
        chunks = []
        for c in (0, 1):
            ys = [amp * (math.sin(t * spec.step) + spec.offsets[c]) for t in range(spec.n)]
            for i in range(0, spec.n, drift.chunk_len):
                chunks.append((c, ys[i : i + drift.chunk_len]))
        random.Random(drift.shuffle_seed).shuffle(chunks)
        t = 0
        for c, ys in chunks:
            for y in ys:
                records.append(StreamRecord(t, (y,), c))
                t += 1
    return records


def load_electricity(path, features=ELECTRICITY_FEATURES) -> list:
    """Read the electricity market file (CSV or ARFF) into StreamRecords.

    Keeps the six real-valued features; date and day are dropped. The label
    column comes back verbatim (UP/DOWN in the standard distribution).
    """
    if str(path).lower().endswith(".arff"):
        names, rows = _read_arff_raw(path)
    else:
        names, rows = _read_csv_raw(path)
    names = [n.lower() for n in names]
    missing = [f for f in features if f not in names]
    if missing:
        raise ValueError(f"{path}: missing expected columns {missing} in {names}")
    if "class" not in names:
        raise ValueError(f"{path}: no class column")
    idx = [names.index(f) for f in features]
    label_i = names.index("class")
    records = []
    for t, row in enumerate(rows):
        if len(row) != len(names):
            raise ValueError(f"{path}: row {t} has {len(row)} fields, expected {len(names)}")
        feats = tuple(float(row[i]) for i in idx)
        records.append(StreamRecord(t, feats, row[label_i]))
    if not records:
        raise ValueError(f"{path}: no data rows")
    return records


def gen_electricity_like(n=ELECTRICITY_N, seed=20) -> list:
    """Seeded surrogate for the electricity stream.

    Mirrors the real set's documented structure: half-hourly periods (48 per
    day), demand with a daily profile and a weekend dip, and a price whose
    baseline is a slowly trending random walk (reflected to stay in range)
    on top of regime-dependent demand coupling and shocks; the regimes shift
    every few thousand steps and supply the drift. The label compares the
    current price against its moving average over the preceding day, so it
    hinges on where the price sits relative to its own recent level. All six
    features land in [0, 1].
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = random.Random(seed)
    records = []
    demand_ar = vic_ar = transfer_ar = fast = 0.0
    # market regimes: (price-demand coupling, shock scale)
    regimes = [(0.05, 0.006), (0.09, 0.012), (0.025, 0.004), (0.07, 0.009)]
    regime = 0
    next_switch = rng.randrange(5000, 9000)
    level = rng.uniform(0.40, 0.60)
    trend = rng.choice((-1.0, 1.0)) * 0.003
    hist = deque(maxlen=48)
    clip = lambda x: 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)
    for t in range(n):
        if t == next_switch:
            regime = (regime + 1) % len(regimes)
            next_switch += rng.randrange(5000, 9000)
        couple, shock = regimes[regime]
        period = (t % 48) / 47.0
        tod = math.sin(2.0 * math.pi * (t % 48) / 48.0 - 1.3)
        weekend = 0.08 if ((t // 48) % 7) >= 5 else 0.0
        demand_ar = 0.85 * demand_ar + rng.gauss(0.0, 0.05)
        nswdemand = clip(0.55 + 0.22 * tod - weekend + demand_ar)
        vic_ar = 0.85 * vic_ar + rng.gauss(0.0, 0.06)
        vicdemand = clip(0.50 + 0.20 * tod - weekend + vic_ar)
        transfer_ar = 0.90 * transfer_ar + rng.gauss(0.0, 0.06)
        transfer = clip(0.5 + transfer_ar)
        # price baseline: trending walk, direction flips occasionally or at the walls
        if rng.random() < 1.0 / 1500.0:
            trend = -trend
        level += trend + rng.gauss(0.0, 0.002)
        if level > 0.60:
            level, trend = 1.20 - level, -abs(trend)
        elif level < 0.40:
            level, trend = 0.80 - level, abs(trend)
        fast = 0.7 * fast + rng.gauss(0.0, 0.008)
        nswprice = clip(level + couple * (nswdemand - 0.55) + fast + rng.gauss(0.0, shock))
        vicprice = clip(0.6 * nswprice + 0.15 * vicdemand + 0.05 + rng.gauss(0.0, 0.03))
        ma = sum(hist) / len(hist) if hist else nswprice
        label = "UP" if nswprice >= ma else "DOWN"
        hist.append(nswprice)
        records.append(
            StreamRecord(t, (period, nswprice, nswdemand, vicprice, vicdemand, transfer), label)
        )
    return records


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(records, path, feature_names=None, label_name="class") -> None:
    """Comma-separated, header row, features first and the class column last."""
    if records and feature_names is None:
        feature_names = [f"a{j}" for j in range(len(records[0].features))]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(list(feature_names or []) + [label_name]) + "\n")
        for rec in records:
            row = [_fmt(x) for x in rec.features]
            row.append("" if rec.label is None else str(rec.label))
            fh.write(",".join(row) + "\n")


def _read_csv_raw(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    names = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return names, rows


def _coerce_label(s):
    try:
        return int(s)
    except ValueError:
        return s


def read_csv(path):
    """Inverse of write_csv: (records, feature_names). Integer-looking labels
    come back as ints so generated streams round-trip exactly."""
    names, rows = _read_csv_raw(path)
    feature_names = names[:-1]
    k = len(feature_names)
    records = []
    for t, row in enumerate(rows):
        if len(row) != k + 1:
            raise ValueError(f"{path}: row {t} has {len(row)} fields, expected {k + 1}")
        records.append(
            StreamRecord(t, tuple(float(v) for v in row[:k]), _coerce_label(row[k]))
        )
    return records, feature_names


def write_arff(records, path, feature_names=None, relation="stream") -> None:
    """ARFF with numeric attributes and a nominal class (first-seen order)."""
    if records and feature_names is None:
        feature_names = [f"a{j}" for j in range(len(records[0].features))]
    classes = []
    for rec in records:
        lab = str(rec.label)
        if lab not in classes:
            classes.append(lab)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"@relation {relation}\n")
        for name in feature_names or []:
            fh.write(f"@attribute {name} numeric\n")
        fh.write("@attribute class {" + ",".join(classes) + "}\n")
        fh.write("@data\n")
        for rec in records:
            row = [_fmt(x) for x in rec.features]
            row.append(str(rec.label))
            fh.write(",".join(row) + "\n")


def _read_arff_raw(path):
    names = []
    rows = []
    in_data = False
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("%"):
                continue
            low = ln.lower()
            if low.startswith("@attribute"):
                parts = ln.split(None, 2)
                names.append(parts[1])
            elif low.startswith("@data"):
                in_data = True
            elif in_data:
                rows.append(ln.split(","))
    if not names or not rows:
        raise ValueError(f"{path}: not a usable ARFF file")
    return names, rows


def read_arff(path):
    """(records, feature_names, class_values) from an ARFF in our layout."""
    names = []
    class_values = None
    rows = []
    in_data = False
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("%"):
                continue
            low = ln.lower()
            if low.startswith("@attribute"):
                parts = ln.split(None, 2)
                if parts[2].strip().startswith("{"):
                    class_values = [v.strip() for v in parts[2].strip()[1:-1].split(",")]
                else:
                    names.append(parts[1])
            elif low.startswith("@data"):
                in_data = True
            elif in_data:
                rows.append(ln.split(","))
    if class_values is None:
        raise ValueError(f"{path}: no nominal class attribute")
    records = []
    for t, row in enumerate(rows):
        if len(row) != len(names) + 1:
            raise ValueError(f"{path}: row {t} has {len(row)} fields")
        records.append(
            StreamRecord(t, tuple(float(v) for v in row[:-1]), _coerce_label(row[-1]))
        )
    return records, names, class_values


def resolve_electricity(path=None, n=ELECTRICITY_N, seed=20):
    """The real electricity stream when a file is available, else the surrogate.

    Checks, in order: the explicit path argument, the EHSTREAM_ELECTRICITY
    environment variable, then falls back to gen_electricity_like. Returns
    (records, source_description).
    """
    candidate = path or os.environ.get("EHSTREAM_ELECTRICITY")
    if candidate:
        return load_electricity(candidate), f"file:{candidate}"
    return gen_electricity_like(n=n, seed=seed), f"surrogate:seed={seed}"
