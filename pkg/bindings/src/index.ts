/**
 * TypeScript client for the ehstream sliding-window sketches.
 *
 * Talks JSON-lines over stdio to `python3 -m ehstream.bridge`. All numeric
 * results are float64 on both sides and serialized with shortest round-trip
 * formatting, so values survive the hop bit-identically. Validation lives in
 * the Python library; invalid parameters or values surface here as
 * BridgeError with the Python exception class name attached.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import type { Readable, Writable } from "node:stream";
import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";
import * as path from "node:path";

/** Mirrors the Python package version; checked against the bridge at runtime. */
export const VERSION = "0.1.0";

export interface WindowEstimate {
  count: number;
  sum: number;
  mean: number;
  variance: number;
}

/** [lastTimestamp, count, sum, varianceContribution] as reported by the core. */
export type Bucket = [number, number, number, number];

export type SketchKind = "bitcount" | "intsum" | "intmean" | "variance";

/** Error raised by the Python side; `pyType` is the exception class name. */
export class BridgeError extends Error {
  readonly pyType: string;

  constructor(message: string, pyType: string) {
    super(message);
    this.name = "BridgeError";
    this.pyType = pyType;
  }
}

type Reply = { ok: boolean; [key: string]: unknown };

interface Waiter {
  resolve: (reply: Reply) => void;
  reject: (err: Error) => void;
}

function pythonBin(): string {
  return process.env.EHSTREAM_PYTHON ?? "python3";
}

/** Runs the bridge with the sibling Python sources on PYTHONPATH, so the
 *  bindings work from a checkout even when ehstream is not pip-installed. */
function bridgeEnv(): NodeJS.ProcessEnv {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const srcDir = path.resolve(here, "..", "..", "src");
  const existing = process.env.PYTHONPATH;
  return {
    ...process.env,
    PYTHONPATH: existing ? srcDir + path.delimiter + existing : srcDir,
  };
}

/**
 * One bridge process hosting any number of sketches.
 *
 * Replies come back in request order, so a FIFO of pending promises is
 * enough; no request ids are needed beyond the sketch handles themselves.
 */
export class Bridge {
  private child: ChildProcessByStdio<Writable, Readable, null>;
  private pending: Waiter[] = [];
  private closed = false;
  private nextId = 1;

  constructor() {
    this.child = spawn(pythonBin(), ["-m", "ehstream.bridge"], {
      env: bridgeEnv(),
      stdio: ["pipe", "pipe", "inherit"],
    });
    const lines = createInterface({ input: this.child.stdout });
    lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) return;
      let reply: Reply;
      try {
        reply = JSON.parse(line) as Reply;
      } catch (err) {
        waiter.reject(err as Error);
        return;
      }
      if (reply.ok) {
        waiter.resolve(reply);
      } else {
        waiter.reject(new BridgeError(String(reply.error), String(reply.type)));
      }
    });
    this.child.on("exit", () => {
      this.closed = true;
      const err = new Error("bridge process exited");
      for (const waiter of this.pending.splice(0)) waiter.reject(err);
    });
  }

  get isClosed(): boolean {
    return this.closed;
  }

  claimId(): number {
    return this.nextId++;
  }

  request(req: Record<string, unknown>): Promise<Reply> {
    if (this.closed) return Promise.reject(new Error("bridge is closed"));
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(req) + "\n");
    });
  }

  async version(): Promise<string> {
    const reply = await this.request({ op: "version" });
    return String(reply.version);
  }

  shutdown(): void {
    if (this.closed) return;
    this.closed = true;
    this.child.stdin.end();
    this.child.kill();
  }
}

let shared: Bridge | null = null;

/** Lazily started bridge shared by sketches that don't bring their own. */
export function defaultBridge(): Bridge {
  if (shared === null || shared.isClosed) shared = new Bridge();
  return shared;
}

export function shutdownDefaultBridge(): void {
  if (shared !== null) {
    shared.shutdown();
    shared = null;
  }
}

/** Shared behavior; use the per-kind subclasses' static create(). */
export class Sketch {
  readonly kind: SketchKind;
  readonly eps: number;
  readonly window: number;
  private id: number | null;
  private bridge: Bridge;

  /** Internal; create instances through `SomeSketch.create(...)`. */
  constructor(kind: SketchKind, eps: number, window: number, id: number, bridge: Bridge) {
    this.kind = kind;
    this.eps = eps;
    this.window = window;
    this.id = id;
    this.bridge = bridge;
  }

  private liveId(): number {
    if (this.id === null) throw new Error("sketch is closed");
    return this.id;
  }

  async add(value: number): Promise<void> {
    await this.bridge.request({ op: "add", id: this.liveId(), value });
  }

  async estimate(): Promise<WindowEstimate> {
    const r = await this.bridge.request({ op: "estimate", id: this.liveId() });
    return {
      count: r.count as number,
      sum: r.sum as number,
      mean: r.mean as number,
      variance: r.variance as number,
    };
  }

  async buckets(): Promise<Bucket[]> {
    const r = await this.bridge.request({ op: "buckets", id: this.liveId() });
    return r.buckets as Bucket[];
  }

  async close(): Promise<void> {
    if (this.id === null) return;
    const id = this.id;
    this.id = null;
    await this.bridge.request({ op: "close", id });
  }
}

async function open<T extends Sketch>(
  ctor: new (kind: SketchKind, eps: number, window: number, id: number, bridge: Bridge) => T,
  kind: SketchKind,
  eps: number,
  window: number,
  bridge: Bridge,
): Promise<T> {
  const id = bridge.claimId();
  const reply = await bridge.request({ op: "create", kind, id, eps, window });
  const remote = String(reply.version);
  if (remote !== VERSION) {
    throw new Error(`version skew: bindings ${VERSION}, core ${remote}`);
  }
  return new ctor(kind, eps, window, id, bridge);
}

/** Count of 1s among the last `window` bits. */
export class BitCountEH extends Sketch {
  static create(eps: number, window: number, bridge: Bridge = defaultBridge()): Promise<BitCountEH> {
    return open(BitCountEH, "bitcount", eps, window, bridge);
  }
}

/** Sum of the last `window` non-negative integers. */
export class IntSumEH extends Sketch {
  static create(eps: number, window: number, bridge: Bridge = defaultBridge()): Promise<IntSumEH> {
    return open(IntSumEH, "intsum", eps, window, bridge);
  }
}

/** Mean of the last `window` non-negative integers. */
export class IntMeanEH extends Sketch {
  static create(eps: number, window: number, bridge: Bridge = defaultBridge()): Promise<IntMeanEH> {
    return open(IntMeanEH, "intmean", eps, window, bridge);
  }
}

/** Count, sum, mean and variance of the last `window` real values. */
export class VarianceEH extends Sketch {
  static create(eps: number, window: number, bridge: Bridge = defaultBridge()): Promise<VarianceEH> {
    return open(VarianceEH, "variance", eps, window, bridge);
  }
}
