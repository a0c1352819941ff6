"""Elman network and its sketch-augmented variant, with TBPTT training.

The augmented model average-pools each hidden state, feeds every pooled
value into a grid of sliding-window variance sketches (one row per pooled
feature, one column per window resolution), and concatenates the windowed
statistics to the hidden state before the output layer. The sketch
statistics are treated as constants by backpropagation: they are discrete
summaries, so weights reading them still learn but no gradient flows into
them.

Training runs truncated backpropagation over contiguous segments of one
temporal sequence. "Batch size" is realized as gradient accumulation over
that many consecutive segments per optimizer step, which keeps a single
sketch timeline alive instead of slicing the stream into parallel batches.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .sketches import VarianceEH

_VALID_STATS = ("mean", "variance")

METRICS_HEADER = "config_id,epoch,train_loss,val_accuracy,epoch_seconds,param_count"


def _softmax(z):
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def pool_hidden(h, k_p):
    """Non-overlapping average pooling with stride k_p; remainder dropped."""
    if k_p < 1:
        raise ValueError(f"pooling kernel must be >= 1, got {k_p}")
    h = np.asarray(h, dtype=float)
    n_p = h.shape[0] // k_p
    return h[: n_p * k_p].reshape(n_p, k_p).mean(axis=1)


def _canonical_stats(stats):
    out = tuple(s for s in _VALID_STATS if s in stats)
    bad = set(stats) - set(_VALID_STATS)
    if bad:
        raise ValueError(f"unknown statistics {sorted(bad)}; choose from {_VALID_STATS}")
    if not out:
        raise ValueError("at least one statistic is required")
    return out


class EhMatrix:
    """n_p x r grid of variance sketches over the pooled hidden trace.

    update() adds the current pooled values first and then queries, so the
    reported window statistics include the current timestep.
    """

    def __init__(self, n_p, resolutions, eps=0.05, stats=("mean", "variance")):
        if n_p < 1:
            raise ValueError(f"n_p must be >= 1, got {n_p}")
        self.resolutions = tuple(int(w) for w in resolutions)
        if not self.resolutions:
            raise ValueError("at least one resolution is required")
        self.n_p = n_p
        self.eps = eps
        self.stats = _canonical_stats(stats)
        self._grid = [[VarianceEH(eps, w) for w in self.resolutions] for _ in range(n_p)]

    @property
    def width(self):
        return self.n_p * len(self.resolutions) * len(self.stats)

    def sketch(self, i, j):
        return self._grid[i][j]

    def update(self, pooled):
        if len(pooled) != self.n_p:
            raise ValueError(f"expected {self.n_p} pooled values, got {len(pooled)}")
        out = np.empty(self.width)
        k = 0
        for i, v in enumerate(pooled):
            v = float(v)
            for row in self._grid[i]:
                row.add(v)
                est = row.estimate()
                for stat in self.stats:
                    out[k] = est.mean if stat == "mean" else est.variance
                    k += 1
        return out

    def reset(self):
        self._grid = [
            [VarianceEH(self.eps, w) for w in self.resolutions] for _ in range(self.n_p)
        ]


class Elman:
    """tanh Elman network with a softmax output layer."""

    kind = "elman"

    def __init__(self, n_in, n_hidden, n_out, seed=0):
        if n_in < 1 or n_hidden < 1 or n_out < 2:
            raise ValueError("need n_in >= 1, n_hidden >= 1, n_out >= 2")
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.n_out = n_out
        self.seed = seed
        rng = np.random.default_rng(seed)
        b = 1.0 / math.sqrt(n_hidden)
        self.W_h = rng.uniform(-b, b, (n_hidden, n_in))
        self.U_h = rng.uniform(-b, b, (n_hidden, n_hidden))
        self.b_h = rng.uniform(-b, b, n_hidden)
        self.W_y = rng.uniform(-b, b, (n_out, self.feature_width))
        self.b_y = rng.uniform(-b, b, n_out)

    @property
    def feature_width(self):
        """Width of the output layer's input."""
        return self.n_hidden

    def parameters(self):
        return [
            ("W_h", self.W_h),
            ("U_h", self.U_h),
            ("b_h", self.b_h),
            ("W_y", self.W_y),
            ("b_y", self.b_y),
        ]

    def param_count(self):
        return sum(int(a.size) for _, a in self.parameters())

    def output_param_count(self):
        return int(self.W_y.size + self.b_y.size)

    def init_hidden(self):
        return np.zeros(self.n_hidden)

    def reset_sketches(self):
        pass

    def hidden_step(self, x, h_prev):
        return np.tanh(self.W_h @ x + self.U_h @ h_prev + self.b_h)

    def output_features(self, h, frozen=None):
        return h

    def step(self, x, h_prev):
        """(class probabilities, next hidden state) for one input."""
        x = np.asarray(x, dtype=float)
        h_prev = np.asarray(h_prev, dtype=float)
        if x.shape != (self.n_in,) or h_prev.shape != (self.n_hidden,):
            raise ValueError(
                f"expected input ({self.n_in},) and hidden ({self.n_hidden},), "
                f"got {x.shape} and {h_prev.shape}"
            )
        h = self.hidden_step(x, h_prev)
        z = self.output_features(h)
        return _softmax(self.W_y @ z + self.b_y), h


class Ehrnn(Elman):
    """Elman core plus windowed statistics of the pooled hidden state."""

    kind = "ehrnn"

    def __init__(
        self,
        n_in,
        n_hidden,
        n_out,
        resolutions,
        eps=0.05,
        stats=("mean", "variance"),
        k_p=None,
        seed=0,
    ):
        resolutions = tuple(int(w) for w in resolutions)
        if len(resolutions) == 0:
            raise ValueError(
                "no window resolutions given; use Elman for a sketch-free model"
            )
        if k_p is None:
            k_p = int(math.isqrt(n_hidden))
        if k_p < 1 or k_p > n_hidden:
            raise ValueError(f"pooling kernel must be in [1, {n_hidden}], got {k_p}")
        self.k_p = k_p
        self.n_p = n_hidden // k_p
        self.resolutions = resolutions
        self.eps = eps
        self.stats = _canonical_stats(stats)
        self.eh = EhMatrix(self.n_p, resolutions, eps, self.stats)
        super().__init__(n_in, n_hidden, n_out, seed=seed)

    @property
    def feature_width(self):
        return self.n_hidden + self.n_p * len(self.resolutions) * len(self.stats)

    def reset_sketches(self):
        self.eh.reset()

    def fresh_matrix(self):
        return EhMatrix(self.n_p, self.resolutions, self.eps, self.stats)

    def output_features(self, h, frozen=None, matrix=None):
        stats = frozen if frozen is not None else (matrix or self.eh).update(
            pool_hidden(h, self.k_p)
        )
        return np.concatenate([h, stats])


def elman_step(model, x, h_prev):
    return model.step(x, h_prev)


def ehrnn_step(model, x, h_prev):
    return model.step(x, h_prev)


@dataclass
class TrainConfig:
    lr: float = 0.01
    decay: float = 0.9
    eps_opt: float = 1e-8
    batch_size: int = 32
    epochs: int = 15
    tbptt_len: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1 or self.batch_size < 1 or self.tbptt_len < 1:
            raise ValueError("epochs, batch_size and tbptt_len must all be >= 1")


def encode_stream(records, classes=None):
    """Stack records into (X, y, classes); labels map to indices in sorted order."""
    if not records:
        raise ValueError("empty stream")
    if classes is None:
        classes = sorted({r.label for r in records}, key=str)
    index = {c: i for i, c in enumerate(classes)}
    X = np.array([r.features for r in records], dtype=float)
    y = np.array([index[r.label] for r in records], dtype=np.int64)
    return X, y, list(classes)


def temporal_split(X, y, val_frac=0.15):
    """Hold out the most recent fraction as validation, kept in order."""
    n = len(X)
    n_val = max(1, int(round(n * val_frac)))
    cut = n - n_val
    if cut < 1:
        raise ValueError("stream too short for the requested validation fraction")
    return X[:cut], y[:cut], X[cut:], y[cut:]


def _forward_segment(model, X, y, h0, matrix=None, frozen=None, record_stats=False):
    """One TBPTT segment. Returns (mean loss, cache for backward, h_last)."""
    T = len(X)
    hs = [np.asarray(h0, dtype=float)]
    feats = []
    probs = []
    stats_used = [] if record_stats else None
    loss = 0.0
    for t in range(T):
        h = model.hidden_step(X[t], hs[-1])
        hs.append(h)
        if model.kind == "ehrnn":
            if frozen is not None:
                s = frozen[t]
            else:
                s = (matrix if matrix is not None else model.eh).update(
                    pool_hidden(h, model.k_p)
                )
            if stats_used is not None:
                stats_used.append(np.array(s))
            z = np.concatenate([h, s])
        else:
            z = h
        feats.append(z)
        logits = model.W_y @ z + model.b_y
        m = logits.max()
        logZ = m + math.log(np.exp(logits - m).sum())
        loss += logZ - logits[y[t]]
        probs.append(np.exp(logits - logZ))
    cache = {"hs": hs, "feats": feats, "probs": probs, "X": X, "y": y}
    return loss / T, cache, hs[-1], stats_used


def _backward_segment(model, cache):
    """Gradients of the segment's mean cross-entropy. Stats enter as constants."""
    hs, feats, probs, X, y = (
        cache["hs"],
        cache["feats"],
        cache["probs"],
        cache["X"],
        cache["y"],
    )
    T = len(X)
    g = {name: np.zeros_like(a) for name, a in model.parameters()}
    h_dim = model.n_hidden
    dh_next = np.zeros(h_dim)
    for t in range(T - 1, -1, -1):
        dlogits = probs[t].copy()
        dlogits[y[t]] -= 1.0
        dlogits /= T
        g["W_y"] += np.outer(dlogits, feats[t])
        g["b_y"] += dlogits
        dh = model.W_y.T @ dlogits
        dh = dh[:h_dim] + dh_next  # no gradient through the sketch statistics
        dpre = dh * (1.0 - hs[t + 1] ** 2)
        g["W_h"] += np.outer(dpre, X[t])
        g["U_h"] += np.outer(dpre, hs[t])
        g["b_h"] += dpre
        dh_next = model.U_h.T @ dpre
    return g


class RmsProp:
    def __init__(self, model, lr, decay, eps_opt):
        self.lr = lr
        self.decay = decay
        self.eps_opt = eps_opt
        self._cache = {name: np.zeros_like(a) for name, a in model.parameters()}

    def apply(self, model, grads):
        for name, p in model.parameters():
            c = self._cache[name]
            gr = grads[name]
            c *= self.decay
            c += (1.0 - self.decay) * gr * gr
            p -= self.lr * gr / (np.sqrt(c) + self.eps_opt)


def validate(model, X, y):
    """Forward-only accuracy over a labeled stream, in order.

    Starts from a zero hidden state and, for the sketch-augmented model, a
    fresh sketch matrix whose state evolves over the pass. Using a scratch
    matrix keeps validation repeatable and leaves training state untouched.
    """
    h = model.init_hidden()
    matrix = model.fresh_matrix() if model.kind == "ehrnn" else None
    correct = 0
    for t in range(len(X)):
        h = model.hidden_step(X[t], h)
        z = (
            model.output_features(h, matrix=matrix)
            if model.kind == "ehrnn"
            else model.output_features(h)
        )
        logits = model.W_y @ z + model.b_y
        if int(np.argmax(logits)) == int(y[t]):
            correct += 1
    return correct / len(X) if len(X) else 0.0


@dataclass
class TrainResult:
    best_epoch: int
    best_val_accuracy: float
    metrics: list = field(default_factory=list)  # rows matching METRICS_HEADER


def train(model, X_train, y_train, X_val, y_val, cfg: TrainConfig, config_id="run"):
    """TBPTT training with gradient accumulation; keeps the best-validation epoch.

    The model is left holding the weights of the epoch with the highest
    validation accuracy. Metrics rows follow METRICS_HEADER.
    """
    if len(X_train) == 0 or len(X_val) == 0:
        raise ValueError("empty stream")
    opt = RmsProp(model, cfg.lr, cfg.decay, cfg.eps_opt)
    n = len(X_train)
    result = TrainResult(best_epoch=0, best_val_accuracy=-1.0)
    best_weights = None
    pcount = model.param_count()
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        h = model.init_hidden()
        model.reset_sketches()
        accum = {name: np.zeros_like(a) for name, a in model.parameters()}
        pending = 0
        loss_sum = 0.0
        seg_count = 0
        for start in range(0, n, cfg.tbptt_len):
            Xs = X_train[start : start + cfg.tbptt_len]
            ys = y_train[start : start + cfg.tbptt_len]
            loss, cache, h, _ = _forward_segment(model, Xs, ys, h)
            grads = _backward_segment(model, cache)
            for name in accum:
                accum[name] += grads[name]
            pending += 1
            loss_sum += loss
            seg_count += 1
            if pending == cfg.batch_size:
                for name in accum:
                    accum[name] /= pending
                opt.apply(model, accum)
                accum = {name: np.zeros_like(a) for name, a in model.parameters()}
                pending = 0
        if pending:  # flush the final partial accumulation
            for name in accum:
                accum[name] /= pending
            opt.apply(model, accum)
        val_acc = validate(model, X_val, y_val)
        train_loss = loss_sum / seg_count
        result.metrics.append(
            (config_id, epoch, train_loss, val_acc, time.perf_counter() - t0, pcount)
        )
        if val_acc > result.best_val_accuracy:
            result.best_val_accuracy = val_acc
            result.best_epoch = epoch
            best_weights = {name: a.copy() for name, a in model.parameters()}
    for name, a in model.parameters():
        np.copyto(a, best_weights[name])
    return result


def forward_trace(model, X):
    """Hidden states (and sketch statistics, when present) over a full pass."""
    h = model.init_hidden()
    matrix = model.fresh_matrix() if model.kind == "ehrnn" else None
    hidden = np.empty((len(X), model.n_hidden))
    stats = (
        np.empty((len(X), model.feature_width - model.n_hidden))
        if model.kind == "ehrnn"
        else None
    )
    preds = np.empty(len(X), dtype=np.int64)
    for t in range(len(X)):
        h = model.hidden_step(X[t], h)
        hidden[t] = h
        if model.kind == "ehrnn":
            s = matrix.update(pool_hidden(h, model.k_p))
            stats[t] = s
            z = np.concatenate([h, s])
        else:
            z = h
        preds[t] = int(np.argmax(model.W_y @ z + model.b_y))
    return {"hidden": hidden, "stats": stats, "predictions": preds}


def gradient_check(model, X, y, step=1e-5):
    """Max relative gap between analytic and central-difference gradients.

    Sketch statistics are recorded on one live pass and then frozen, matching
    the rule that backpropagation treats them as constants.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    h0 = model.init_hidden()
    frozen = None
    if model.kind == "ehrnn":
        matrix = model.fresh_matrix()
        _, _, _, stats_used = _forward_segment(
            model, X, y, h0, matrix=matrix, record_stats=True
        )
        frozen = stats_used

    def loss_fn():
        loss, _, _, _ = _forward_segment(model, X, y, h0, frozen=frozen)
        return loss

    loss, cache, _, _ = _forward_segment(model, X, y, h0, frozen=frozen)
    analytic = _backward_segment(model, cache)
    worst = 0.0
    for name, p in model.parameters():
        flat = p.reshape(-1)
        ga = analytic[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss_fn()
            flat[i] = keep - step
            down = loss_fn()
            flat[i] = keep
            gn = (up - down) / (2.0 * step)
            denom = max(abs(ga[i]), abs(gn), 1e-6)
            worst = max(worst, abs(ga[i] - gn) / denom)
    return worst


_CKPT_VERSION = 1


def save_model(model, path):
    """Versioned checkpoint holding every matrix plus the rebuild config."""
    extra = {}
    if model.kind == "ehrnn":
        extra = {
            "resolutions": np.array(model.resolutions, dtype=np.int64),
            "eps": np.array(model.eps),
            "k_p": np.array(model.k_p),
            "stats": np.array(",".join(model.stats)),
        }
    with open(path, "wb") as fh:  # exact path, no implicit .npz suffix
        np.savez(
            fh,
            format_version=np.array(_CKPT_VERSION),
            kind=np.array(model.kind),
            n_in=np.array(model.n_in),
            n_hidden=np.array(model.n_hidden),
            n_out=np.array(model.n_out),
            seed=np.array(model.seed),
            **{name: a for name, a in model.parameters()},
            **extra,
        )


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        version = int(z["format_version"])
        if version != _CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        kind = str(z["kind"])
        n_in, n_hidden, n_out = int(z["n_in"]), int(z["n_hidden"]), int(z["n_out"])
        seed = int(z["seed"])
        if kind == "elman":
            model = Elman(n_in, n_hidden, n_out, seed=seed)
        else:
            model = Ehrnn(
                n_in,
                n_hidden,
                n_out,
                resolutions=tuple(int(w) for w in z["resolutions"]),
                eps=float(z["eps"]),
                stats=tuple(str(z["stats"]).split(",")),
                k_p=int(z["k_p"]),
                seed=seed,
            )
        for name, a in model.parameters():
            np.copyto(a, z[name])
    return model
