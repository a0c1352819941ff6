"""Command-line front end: dataset generation, windowing, evaluation, training.

Subcommands map onto the library modules one-to-one. Every run is
deterministic under --seed (default from EHSTREAM_SEED). A config file of
key=value lines can preload any subcommand's flags; explicit flags win.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from collections import deque

from .datagen import (
    ELECTRICITY_FEATURES,
    DriftSpec,
    SineConceptSpec,
    gen_electricity_like,
    gen_sine_mixed,
    read_arff,
    read_csv,
    write_arff,
    write_csv,
)
from .online import GaussianNB, prequential_eval
from .sketches import BitCountEH, VarianceEH, memory_footprint
from .windowing import ResolutionConfig, Summarizer

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _env_seed(fallback=0):
    raw = os.environ.get("EHSTREAM_SEED")
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"EHSTREAM_SEED must be an integer, got {raw!r}")


def _int_list(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")


def _float_list(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def _stats_list(text):
    alias = {"var": "variance", "variance": "variance", "mean": "mean"}
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        return tuple(alias[p] for p in parts)
    except KeyError as e:
        raise argparse.ArgumentTypeError(f"unknown statistic {e.args[0]!r}; use mean,var")


def _read_stream(path):
    if str(path).lower().endswith(".arff"):
        records, names, _ = read_arff(path)
        return records, names
    return read_csv(path)


def _write_stream(records, path, names):
    if str(path).lower().endswith(".arff"):
        write_arff(records, path, feature_names=names)
    else:
        write_csv(records, path, feature_names=names)


# ------------------------------------------------------------ subcommands


def cmd_generate(args):
    if args.kind == "sine-mixed":
        spec = SineConceptSpec(
            offsets=args.offsets, amplitude=args.amplitude, step=args.step,
            n=args.n, seed=args.seed,
        )
        drift = DriftSpec(
            kind=args.drift, tau=args.tau, chunk_len=args.chunk,
            shuffle_seed=args.shuffle_seed,
        )
        records = gen_sine_mixed(spec, drift)
        names = ["y"]
    else:  # electricity-like
        records = gen_electricity_like(n=args.n, seed=args.seed)
        names = list(ELECTRICITY_FEATURES)
    _write_stream(records, args.out, names)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_window(args):
    records, names = _read_stream(args.inp)
    if not records:
        raise ValueError(f"{args.inp}: no records")
    cfg = ResolutionConfig(
        resolutions=args.res, stats=args.stats, eps=args.eps, include_raw=args.raw
    )
    summ = Summarizer(len(records[0].features), cfg)
    out = [summ.push(r) for r in records]
    _write_stream(out, args.out, summ.feature_names(names))
    print(f"wrote {len(out)} records x {summ.output_width} features to {args.out}")
    return 0


def cmd_eval_stream(args):
    records, _ = _read_stream(args.inp)
    if not records:
        raise ValueError(f"{args.inp}: no records")
    labels = sorted({r.label for r in records}, key=str)
    model = GaussianNB(cold_start=labels[0])
    keep = args.trace_out is not None
    result = prequential_eval(model, records, trace_window=args.trace_window, keep_trace=keep)
    print(result.report_line())
    if keep:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fh.write("t,rolling_accuracy\n")
            for t, v in enumerate(result.trace):
                fh.write(f"{t},{v:.6f}\n")
    return 0


def cmd_train_rnn(args):
    from . import ehrnn as nn

    records, _ = _read_stream(args.inp)
    if not records:
        raise ValueError(f"{args.inp}: no records")
    if args.limit:
        records = records[: args.limit]
    if args.windowed_input:
        if args.arch != "vanilla":
            raise ValueError("--windowed-input applies to --arch vanilla")
        cfg = ResolutionConfig(
            resolutions=args.res, stats=args.stats, eps=args.eps, include_raw=True
        )
        summ = Summarizer(len(records[0].features), cfg)
        records = [summ.push(r) for r in records]
    X, y, classes = nn.encode_stream(records)
    Xt, yt, Xv, yv = nn.temporal_split(X, y, val_frac=args.val_frac)
    tcfg = nn.TrainConfig(
        lr=args.lr, batch_size=args.batch, epochs=args.epochs,
        tbptt_len=args.tbptt, seed=args.seed,
    )
    kernel = args.kernel or None
    if args.arch == "vanilla":
        model = nn.Elman(X.shape[1], args.hidden, len(classes), seed=args.seed)
    else:
        model = nn.Ehrnn(
            X.shape[1], args.hidden, len(classes), resolutions=args.res,
            eps=args.eps, stats=args.stats, k_p=kernel, seed=args.seed,
        )
    config_id = args.config_id or f"{args.arch}-h{args.hidden}-seed{args.seed}"
    result = nn.train(model, Xt, yt, Xv, yv, tcfg, config_id=config_id)
    print(
        f"arch={args.arch}, params={model.param_count()}, "
        f"output_params={model.output_param_count()}, "
        f"best_epoch={result.best_epoch}, val_accuracy={result.best_val_accuracy:.6f}"
    )
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as fh:
            fh.write(nn.METRICS_HEADER + "\n")
            for row in result.metrics:
                cid, epoch, loss, acc, secs, pc = row
                fh.write(f"{cid},{epoch},{loss:.6f},{acc:.6f},{secs:.3f},{pc}\n")
    if args.checkpoint:
        nn.save_model(model, args.checkpoint)
    if args.hidden_trace:
        tr = nn.forward_trace(model, X)
        width = tr["hidden"].shape[1]
        stats = tr["stats"]
        with open(args.hidden_trace, "w", encoding="utf-8") as fh:
            cols = [f"h{i}" for i in range(width)]
            if stats is not None:
                cols += [f"s{i}" for i in range(stats.shape[1])]
            fh.write("t," + ",".join(cols) + "\n")
            for t in range(len(X)):
                vals = list(tr["hidden"][t])
                if stats is not None:
                    vals += list(stats[t])
                fh.write(str(t) + "," + ",".join(f"{v:.9g}" for v in vals) + "\n")
    return 0


class _ExactWindow:
    """Ring-buffer reference for the benchmark report."""

    def __init__(self, window):
        self.buf = deque(maxlen=window)
        self.sum = 0.0
        self.sumsq = 0.0
        self._since_sync = 0

    def add(self, x):
        if len(self.buf) == self.buf.maxlen:
            old = self.buf[0]
            self.sum -= old
            self.sumsq -= old * old
        self.buf.append(x)
        self.sum += x
        self.sumsq += x * x
        self._since_sync += 1
        if self._since_sync >= 4096:  # bound float drift in the reference itself
            self.sum = math.fsum(self.buf)
            self.sumsq = math.fsum(v * v for v in self.buf)
            self._since_sync = 0

    @property
    def count(self):
        return len(self.buf)

    @property
    def variance(self):
        n = len(self.buf)
        if n < 2:
            return 0.0
        return max(0.0, (self.sumsq - self.sum * self.sum / n) / n)


def _bench_values(dist, n, seed):
    import random

    rng = random.Random(seed)
    if dist == "gaussian":
        return [rng.gauss(0.0, 1.0) for _ in range(n)]
    if dist == "uniform":
        return [rng.uniform(-1.0, 1.0) for _ in range(n)]
    return [math.sin(t * 2.0 * math.pi / 97.0) + 0.1 * rng.gauss(0.0, 1.0) for t in range(n)]


def cmd_sketch_bench(args):
    values = _bench_values(args.dist, args.n, args.seed)
    oracle = _ExactWindow(args.window)
    max_rel = 0.0
    buckets_max = 0
    bytes_max = 0
    full_window_steps = 0
    if args.sketch == "variance":
        sk = VarianceEH(args.eps, args.window)
        for t, v in enumerate(values):
            sk.add(v)
            oracle.add(v)
            nb, byts = memory_footprint(sk)
            buckets_max = max(buckets_max, nb)
            bytes_max = max(bytes_max, byts)
            if t + 1 >= args.window:
                full_window_steps += 1
                exact = oracle.variance
                got = sk.estimate().variance
                if exact > 0:
                    max_rel = max(max_rel, abs(got - exact) / exact)
    else:  # bitcount
        sk = BitCountEH(args.eps, args.window)
        for t, v in enumerate(values):
            bit = 1 if v > 0 else 0
            sk.add(bit)
            oracle.add(float(bit))
            nb, byts = memory_footprint(sk)
            buckets_max = max(buckets_max, nb)
            bytes_max = max(bytes_max, byts)
            if t + 1 >= args.window:
                full_window_steps += 1
                exact = oracle.sum
                got = sk.estimate().count
                if exact > 0:
                    max_rel = max(max_rel, abs(got - exact) / exact)
    print(f"sketch={args.sketch}, dist={args.dist}, eps={args.eps}, window={args.window}, n={args.n}")
    print(f"max_rel_error={max_rel:.6g}")
    print(f"buckets_max={buckets_max}")
    print(f"bytes_max={bytes_max}")
    print(f"warmup_only={'true' if full_window_steps == 0 else 'false'}")
    return 0


# ------------------------------------------------------------ parser


def build_parser():
    p = argparse.ArgumentParser(prog="ehstream", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic stream to a file")
    g.add_argument("kind", choices=["sine-mixed", "electricity-like"])
    g.add_argument("--config", help="key=value file preloading this subcommand's flags")
    g.add_argument("--drift", choices=["sudden", "incremental", "reoccurring"], default="sudden")
    g.add_argument("--tau", type=int, default=None, help="sudden switch point (default: one concept length)")
    g.add_argument("--chunk", type=int, default=500, help="reoccurring chunk length")
    g.add_argument("--shuffle-seed", type=int, default=0)
    g.add_argument("--offsets", type=_float_list, default=(2.0, 3.0))
    g.add_argument("--amplitude", type=float, default=10.0)
    g.add_argument("--step", type=float, default=2.0 * math.pi / 100.0)
    g.add_argument("--n", type=int, default=None, help="sine: per-concept length (default 10000); electricity-like: records (default 45312)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("window", help="augment a stream with sliding-window statistics")
    w.add_argument("--config")
    w.add_argument("--in", dest="inp", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--res", type=_int_list, required=True, help="comma-separated window lengths")
    w.add_argument("--stats", type=_stats_list, default=("mean", "variance"))
    w.add_argument("--eps", type=float, default=0.01)
    w.add_argument("--raw", action=argparse.BooleanOptionalAction, default=True,
                   help="keep the raw features alongside the statistics")
    w.set_defaults(func=cmd_window)

    e = sub.add_parser("eval-stream", help="prequential naive-bayes evaluation")
    e.add_argument("--config")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--trace-out", default=None, help="CSV of rolling accuracy")
    e.add_argument("--trace-window", type=int, default=1000)
    e.set_defaults(func=cmd_eval_stream)

    t = sub.add_parser("train-rnn", help="train the recurrent models")
    t.add_argument("--config")
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--arch", choices=["vanilla", "ehrnn"], default="ehrnn")
    t.add_argument("--windowed-input", action=argparse.BooleanOptionalAction, default=False,
                   help="vanilla only: concatenate windowed input statistics")
    t.add_argument("--res", type=_int_list, default=(48,),
                   help="window lengths (hidden sketches for ehrnn, input stats with --windowed-input)")
    t.add_argument("--stats", type=_stats_list, default=("mean", "variance"))
    t.add_argument("--eps", type=float, default=0.05)
    t.add_argument("--hidden", type=int, default=32)
    t.add_argument("--kernel", type=int, default=0, help="pool kernel (0 = floor(sqrt(hidden)))")
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--tbptt", type=int, default=32)
    t.add_argument("--epochs", type=int, default=15)
    t.add_argument("--val-frac", type=float, default=0.15)
    t.add_argument("--limit", type=int, default=0, help="use only the first N records")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--config-id", default=None)
    t.add_argument("--metrics", default=None, help="write per-epoch metrics CSV here")
    t.add_argument("--checkpoint", default=None, help="write the best model here")
    t.add_argument("--hidden-trace", default=None, help="dump hidden states (and statistics) CSV")
    t.set_defaults(func=cmd_train_rnn)

    b = sub.add_parser("sketch-bench", help="sketch accuracy/memory report against an exact reference")
    b.add_argument("--config")
    b.add_argument("--sketch", choices=["variance", "bitcount"], default="variance")
    b.add_argument("--dist", choices=["gaussian", "uniform", "sine"], default="gaussian")
    b.add_argument("--window", type=int, default=1000)
    b.add_argument("--eps", type=float, default=0.05)
    b.add_argument("--n", type=int, default=100000)
    b.add_argument("--seed", type=int, default=None)
    b.set_defaults(func=cmd_sketch_bench)
    return p


def _load_config_flags(path):
    flags = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: bad config line {line!r} (want key=value)")
            key, value = line.split("=", 1)
            key = key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in _TRUE:
                flags.append(f"--{key}")
            elif value.lower() in _FALSE:
                flags.append(f"--no-{key}")
            else:
                flags.extend((f"--{key}", value))
    return flags


def _apply_config(argv):
    """Insert config-file flags right after the subcommand; explicit flags win."""
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            return argv
        path = argv[i + 1]
    else:
        hit = [a for a in argv if a.startswith("--config=")]
        if not hit:
            return argv
        path = hit[0].split("=", 1)[1]
    flags = _load_config_flags(path)
    # argv[0] is "generate"/"window"/...; argv[1] may be a positional kind
    insert_at = 1
    if argv and argv[0] == "generate" and len(argv) > 1 and not argv[1].startswith("-"):
        insert_at = 2
    return argv[:insert_at] + flags + argv[insert_at:]


def _fill_seed_defaults(args):
    if getattr(args, "seed", 0) is None:
        if args.command == "generate" and args.kind == "electricity-like":
            args.seed = _env_seed(20)
        else:
            args.seed = _env_seed(0)
    if args.command == "generate" and args.n is None:
        args.n = 45312 if args.kind == "electricity-like" else 10000


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    _fill_seed_defaults(args)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
