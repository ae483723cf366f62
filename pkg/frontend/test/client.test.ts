import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { BridgeClient, SocketLike } from "../src/client.js";
import { Snapshot } from "../src/protocol.js";
import { IDLE_SNAPSHOT, RINGING_SNAPSHOT } from "./fixtures.js";

class FakeSocket implements SocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  sent: string[] = [];
  closed = false;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  serverOpen(): void {
    this.onopen?.();
  }

  serverSend(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) + "\n" });
  }

  serverDrop(): void {
    this.onclose?.();
  }
}

function withSeq(snapshot: Snapshot, seq: number): Snapshot {
  return { ...snapshot, seq };
}

describe("BridgeClient", () => {
  let sockets: FakeSocket[];
  let client: BridgeClient;

  beforeEach(() => {
    vi.useFakeTimers();
    sockets = [];
    client = new BridgeClient({
      url: "ws://test",
      socketFactory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      initialBackoffMs: 100,
      maxBackoffMs: 1000,
    });
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("delivers snapshots in order", () => {
    const seen: number[] = [];
    client.onSnapshot = (s) => seen.push(s.seq);
    client.connect();
    sockets[0]!.serverOpen();
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 1));
    sockets[0]!.serverSend(withSeq(RINGING_SNAPSHOT, 2));
    expect(seen).toEqual([1, 2]);
  });

  it("flags a seq gap", () => {
    const gaps: Array<[number, number]> = [];
    client.onSeqGap = (expected, got) => gaps.push([expected, got]);
    client.connect();
    sockets[0]!.serverOpen();
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 1));
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 2));
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 5));
    expect(gaps).toEqual([[3, 5]]);
  });

  it("reports server errors without dropping the connection", () => {
    const errors: string[] = [];
    client.onServerError = (m) => errors.push(m);
    client.connect();
    sockets[0]!.serverOpen();
    sockets[0]!.serverSend({ v: 1, error: "box must be 1, 2 or 3" });
    expect(errors).toEqual(["box must be 1, 2 or 3"]);
    expect(client.connected).toBe(true);
  });

  it("reconnects with exponential backoff after a drop", () => {
    const statuses: string[] = [];
    client.onStatus = (s) => statuses.push(s);
    client.connect();
    sockets[0]!.serverOpen();
    sockets[0]!.serverDrop();
    expect(statuses).toEqual(["connecting", "connected", "disconnected"]);

    vi.advanceTimersByTime(100); // first backoff
    expect(sockets).toHaveLength(2);
    sockets[1]!.serverDrop();
    vi.advanceTimersByTime(100); // doubled: not yet
    expect(sockets).toHaveLength(2);
    vi.advanceTimersByTime(100);
    expect(sockets).toHaveLength(3);
  });

  it("resumes from the live snapshot after reconnect without replay", () => {
    const seen: number[] = [];
    client.onSnapshot = (s) => seen.push(s.seq);
    client.onSeqGap = () => seen.push(-1);
    client.connect();
    sockets[0]!.serverOpen();
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 4));
    sockets[0]!.serverDrop();
    vi.advanceTimersByTime(100);
    sockets[1]!.serverOpen();
    sockets[1]!.serverSend(withSeq(IDLE_SNAPSHOT, 9)); // server moved on meanwhile
    expect(seen).toEqual([4, -1, 9]); // gap flagged, snapshot still rendered
  });

  it("sends exactly one message per gesture and tracks the ack", () => {
    client.connect();
    sockets[0]!.serverOpen();
    expect(client.send({ cmd: "open_lid", box: 1 })).toBe(true);
    expect(sockets[0]!.sent).toHaveLength(1);
    expect(JSON.parse(sockets[0]!.sent[0]!)).toEqual({ cmd: "open_lid", box: 1 });
    expect(client.pendingCommands).toBe(1);
    sockets[0]!.serverSend(withSeq(IDLE_SNAPSHOT, 1));
    expect(client.pendingCommands).toBe(0);
  });

  it("refuses to send while disconnected", () => {
    expect(client.send({ cmd: "advance", seconds: 1 })).toBe(false);
  });

  it("close() stops the reconnect loop", () => {
    client.connect();
    sockets[0]!.serverOpen();
    client.close();
    vi.advanceTimersByTime(10_000);
    expect(sockets).toHaveLength(1);
  });
});
