/** Session client behavior: every frame that reaches the socket is
 * schema-valid, interventions are clamped and rate-capped at 60 Hz, offline
 * sends are dropped with a warning, and the client reconnects after an
 * unintentional close. */

import { describe, expect, it } from "vitest";

import { DRAG_FORCE_LIMIT, MIN_SEND_INTERVAL_MS, SessionClient,
         type SocketLike } from "../src/net.js";
import { INTERVENTION_LIMIT, validateClientMessage } from "../src/protocol.js";
import { buildState, makeRng, randomVector } from "./helpers.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closeCalls = 0;
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closeCalls += 1;
  }

  open(): void {
    this.onopen?.();
  }

  receive(text: string): void {
    this.onmessage?.({ data: text });
  }

  dropConnection(): void {
    this.onclose?.();
  }
}

interface Harness {
  client: SessionClient;
  sockets: FakeSocket[];
  clock: { ms: number };
  scheduled: Array<{ fn: () => void; ms: number }>;
  events: Record<string, unknown[]>;
}

function makeHarness(): Harness {
  const sockets: FakeSocket[] = [];
  const clock = { ms: 0 };
  const scheduled: Array<{ fn: () => void; ms: number }> = [];
  const events: Record<string, unknown[]> = {
    state: [], ack: [], serverError: [], protocolError: [], connection: [], drop: [],
  };
  const client = new SessionClient("ws://127.0.0.1:8765", {
    onState: (m) => events.state.push(m),
    onAck: (m) => events.ack.push(m),
    onServerError: (r) => events.serverError.push(r),
    onProtocolError: (r) => events.protocolError.push(r),
    onConnection: (s) => events.connection.push(s),
    onDrop: (n) => events.drop.push(n),
  }, {
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    monotonicMs: () => clock.ms,
    wallClockSec: () => 1724580000 + clock.ms / 1000,
    scheduler: (fn, ms) => scheduled.push({ fn, ms }),
  });
  return { client, sockets, clock, scheduled, events };
}

function connected(): Harness {
  const h = makeHarness();
  h.client.connect();
  h.sockets[0].open();
  return h;
}

describe("outbound frames are always schema-valid", () => {
  it("random drags, torques, and controls all pass validation", () => {
    const h = connected();
    const rng = makeRng(42);
    for (let i = 0; i < 300; i++) {
      h.clock.ms += MIN_SEND_INTERVAL_MS + 1;
      const pick = rng();
      if (pick < 0.4) {
        h.client.sendDrag((rng() - 0.5) * 80, (rng() - 0.5) * 80);
      } else if (pick < 0.8) {
        h.client.sendTorque(randomVector(rng, 8, 15));
      } else if (pick < 0.9) {
        h.client.release();
      } else {
        h.client.control("set_alpha", { alpha: rng() });
      }
    }
    const frames = h.sockets[0].sent;
    expect(frames.length).toBeGreaterThan(250);
    for (const frame of frames) {
      expect(validateClientMessage(JSON.parse(frame))).toBeNull();
    }
  });

  it("torques are clamped to the protocol limit before sending", () => {
    const h = connected();
    h.client.sendTorque([9, -12, 0, 0, 0, 0, 0, 0]);
    const msg = JSON.parse(h.sockets[0].sent[0]);
    expect(msg.tau[0]).toBe(INTERVENTION_LIMIT);
    expect(msg.tau[1]).toBe(-INTERVENTION_LIMIT);
  });

  it("drags are clamped so mapped torques stay inside the engine limit", () => {
    const h = connected();
    h.client.sendDrag(500, 0);
    const msg = JSON.parse(h.sockets[0].sent[0]);
    expect(Math.hypot(msg.force[0], msg.force[1]))
      .toBeCloseTo(DRAG_FORCE_LIMIT, 9);
  });
});

describe("rate cap", () => {
  it("caps interventions at 60 Hz", () => {
    const h = connected();
    for (let i = 0; i < 1000; i++) {
      h.clock.ms = i;   // 1 kHz of drag updates for one second
      h.client.sendDrag(1, 1);
    }
    const n = h.sockets[0].sent.length;
    expect(n).toBeLessThanOrEqual(61);
    expect(n).toBeGreaterThanOrEqual(59);
  });

  it("release messages bypass the cap so holds always end", () => {
    const h = connected();
    h.client.sendDrag(2, 0);
    expect(h.client.sendDrag(0, 0)).toBe(true);   // same instant
    const frames = h.sockets[0].sent.map((f) => JSON.parse(f));
    expect(frames).toHaveLength(2);
    expect(frames[1].force).toEqual([0, 0]);
  });

  it("control frames are never rate-capped", () => {
    const h = connected();
    expect(h.client.control("pause")).toBe(true);
    expect(h.client.control("resume")).toBe(true);
    expect(h.client.control("save", { id: 1 })).toBe(true);
    expect(h.sockets[0].sent).toHaveLength(3);
  });
});

describe("offline behavior", () => {
  it("drops interventions with a visible warning instead of queuing", () => {
    const h = makeHarness();   // never connected
    expect(h.client.sendDrag(1, 0)).toBe(false);
    expect(h.client.sendTorque([1, 0, 0, 0, 0, 0, 0, 0])).toBe(false);
    expect(h.client.droppedCount).toBe(2);
    expect(h.events.drop).toEqual([1, 2]);
    expect(h.sockets).toHaveLength(0);
  });

  it("reconnects after an unintentional close, but not after close()", () => {
    const h = connected();
    expect(h.events.connection).toEqual(["connecting", "connected"]);
    h.sockets[0].dropConnection();
    expect(h.client.state).toBe("closed");
    expect(h.scheduled).toHaveLength(1);
    h.scheduled[0].fn();
    expect(h.sockets).toHaveLength(2);
    expect(h.client.state).toBe("connecting");
    h.sockets[1].open();
    expect(h.client.state).toBe("connected");

    h.client.close();
    expect(h.sockets[1].closeCalls).toBe(1);
    const pending = h.scheduled.length;
    h.scheduled.slice(0, pending).forEach((s) => s.fn());
    expect(h.sockets).toHaveLength(2);   // no new socket after a user close
  });
});

describe("inbound dispatch", () => {
  it("routes parsed frames to the right hooks", () => {
    const h = connected();
    h.sockets[0].receive(JSON.stringify(buildState({ seq: 5 })));
    h.sockets[0].receive('{"type":"ack","action":"pause","id":1}');
    h.sockets[0].receive('{"type":"error","reason":"nope"}');
    expect(h.events.state).toHaveLength(1);
    expect((h.events.state[0] as { seq: number }).seq).toBe(5);
    expect(h.events.ack).toHaveLength(1);
    expect(h.events.serverError).toEqual(["nope"]);
  });

  it("reports off-schema frames without throwing", () => {
    const h = connected();
    h.sockets[0].receive("{broken");
    h.sockets[0].receive('{"type":"state","seq":1}');
    expect(h.events.protocolError).toHaveLength(2);
    expect(h.events.protocolError[0]).toContain("not valid JSON");
    expect(h.events.state).toHaveLength(0);
  });
});
