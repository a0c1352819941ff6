"""JSON-lines stdio bridge exposing the sketches to out-of-process callers.

Serve mode (default): one JSON request per stdin line, one JSON response per
stdout line. Requests name an op (create/add/estimate/buckets/close/version)
and a sketch id. Numbers cross as JSON doubles, whose shortest round-trip
serialization preserves float64 bit patterns exactly.

Replay mode (--replay KIND EPS WINDOW): reads one numeric value per line,
adds it, and emits the estimate after each add. Used as the in-core
reference when checking that a foreign-language wrapper returns the exact
same numbers.

Run as `python -m ehstream.bridge`. One process serves one caller; sketches
are single-writer structures and the bridge adds no locking.
"""

from __future__ import annotations

import json
import sys

from . import __version__
from .sketches import BitCountEH, IntMeanEH, IntSumEH, VarianceEH

_KINDS = {
    "bitcount": BitCountEH,
    "intsum": IntSumEH,
    "intmean": IntMeanEH,
    "variance": VarianceEH,
}


def _coerce_value(kind, value):
    # integer sketches reject floats unless they are exact integers
    if kind in ("bitcount", "intsum", "intmean"):
        if isinstance(value, float):
            if not value.is_integer():
                raise TypeError(f"{kind} sketch takes integer values, got {value!r}")
            return int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError(f"{kind} sketch takes integer values, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"variance sketch takes numeric values, got {value!r}")
    return float(value)


def _estimate_payload(sketch):
    est = sketch.estimate()
    return {
        "ok": True,
        "count": est.count,
        "sum": est.sum,
        "mean": est.mean,
        "variance": est.variance,
    }


def _buckets_payload(sketch):
    return {
        "ok": True,
        "buckets": [[b.last_ts, b.count, b.sum, b.var] for b in sketch.buckets()],
    }


def serve(stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    sketches = {}

    def reply(obj):
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req["op"]
            if op == "version":
                reply({"ok": True, "version": __version__})
                continue
            if op == "create":
                kind = req["kind"]
                if kind not in _KINDS:
                    raise ValueError(f"unknown sketch kind {kind!r}")
                sid = req["id"]
                sketches[sid] = (kind, _KINDS[kind](req["eps"], req["window"]))
                reply({"ok": True, "id": sid, "version": __version__})
                continue
            sid = req["id"]
            if sid not in sketches:
                raise KeyError(f"no sketch with id {sid!r}")
            kind, sketch = sketches[sid]
            if op == "add":
                sketch.add(_coerce_value(kind, req["value"]))
                reply({"ok": True})
            elif op == "estimate":
                reply(_estimate_payload(sketch))
            elif op == "buckets":
                reply(_buckets_payload(sketch))
            elif op == "close":
                del sketches[sid]
                reply({"ok": True})
            else:
                raise ValueError(f"unknown op {op!r}")
        except Exception as exc:  # report and keep serving
            reply({"ok": False, "error": str(exc), "type": type(exc).__name__})


def replay(kind, eps, window, stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    if kind not in _KINDS:
        raise SystemExit(f"unknown sketch kind {kind!r}")
    sketch = _KINDS[kind](eps, window)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        sketch.add(_coerce_value(kind, json.loads(line)))
        est = _estimate_payload(sketch)
        del est["ok"]
        stdout.write(json.dumps(est) + "\n")
    stdout.flush()


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--replay":
        if len(argv) != 4:
            print("usage: python -m ehstream.bridge --replay KIND EPS WINDOW", file=sys.stderr)
            return 2
        replay(argv[1], float(argv[2]), int(argv[3]))
        return 0
    if argv:
        print("usage: python -m ehstream.bridge [--replay KIND EPS WINDOW]", file=sys.stderr)
        return 2
    serve()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
