/** Shared test fixtures: snapshot builder and a deterministic RNG. */

import type { StateMessage } from "../src/protocol.js";

export interface StateOverrides {
  seq?: number;
  t?: number;
  step?: number;
  alpha?: number;
  paused?: boolean;
  q?: Partial<Record<"tape" | "follower" | "editor", number[]>>;
  tau_hat?: Partial<Record<"tape" | "follower" | "editor", number[]>>;
  in_contact?: boolean;
  tube_held?: boolean;
  lateral_force?: number;
  dropped?: number;
}

function joints(base: number): number[] {
  return Array.from({ length: 8 }, (_, i) => base + i * 0.01);
}

export function buildState(over: StateOverrides = {}): StateMessage {
  const robot = (base: number, name: "tape" | "follower" | "editor") => ({
    q: over.q?.[name] ?? joints(base),
    dq: joints(base + 0.001),
    tau_hat: over.tau_hat?.[name] ?? joints(base + 0.002),
  });
  return {
    type: "state",
    seq: over.seq ?? 1,
    t: over.t ?? 0.02,
    step: over.step ?? 10,
    config: { alpha: over.alpha ?? 0.5, paused: over.paused ?? false },
    robots: {
      tape: robot(0.1, "tape"),
      follower: robot(0.2, "follower"),
      editor: robot(0.3, "editor"),
    },
    contact: {
      in_contact: over.in_contact ?? false,
      lateral_force: over.lateral_force ?? 0,
      depth: 0,
      tube_held: over.tube_held ?? false,
      tip: [0.1, 0.42],
    },
    dropped_interventions: over.dropped ?? 0,
  };
}

/** Small deterministic generator (mulberry32) for seeded property loops. */
export function makeRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let x = a;
    x = Math.imul(x ^ (x >>> 15), x | 1);
    x ^= x + Math.imul(x ^ (x >>> 7), x | 61);
    return ((x ^ (x >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomVector(rng: () => number, n: number, span: number): number[] {
  return Array.from({ length: n }, () => (rng() - 0.5) * 2 * span);
}
