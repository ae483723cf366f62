import { BridgeMessage, Command, Snapshot, encodeCommand, parseBridgeMessage } from "./protocol.js";

// Structural subset of WebSocket that both browsers and the `ws` package satisfy.
export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface BridgeClientOptions {
  url: string;
  socketFactory?: SocketFactory;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
}

/**
 * Maintains one bridge connection: snapshots in order, commands out,
 * reconnect with exponential backoff, snapshot seq gap detection.
 */
export class BridgeClient {
  onSnapshot: ((snapshot: Snapshot) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;
  onServerError: ((message: string) => void) | null = null;
  onSeqGap: ((expectedNext: number, got: number) => void) | null = null;

  private readonly url: string;
  private readonly socketFactory: SocketFactory;
  private readonly initialBackoffMs: number;
  private readonly maxBackoffMs: number;

  private socket: SocketLike | null = null;
  private backoffMs: number;
  private closing = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  lastSeq = 0;
  pendingCommands = 0;

  constructor(options: BridgeClientOptions) {
    this.url = options.url;
    this.socketFactory = options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.initialBackoffMs = options.initialBackoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 15000;
    this.backoffMs = this.initialBackoffMs;
  }

  connect(): void {
    this.closing = false;
    this.onStatus?.("connecting");
    const socket = this.socketFactory(this.url);
    this.socket = socket;

    socket.onopen = () => {
      this.backoffMs = this.initialBackoffMs;
      this.onStatus?.("connected");
    };
    socket.onmessage = (ev) => this.handleRaw(String(ev.data));
    socket.onerror = () => {
      // closure follows; onclose drives the reconnect
    };
    socket.onclose = () => {
      this.socket = null;
      this.pendingCommands = 0;
      this.onStatus?.("disconnected");
      if (!this.closing) {
        this.reconnectTimer = setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, this.maxBackoffMs);
      }
    };
  }

  close(): void {
    this.closing = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  /** Send one command; returns false when not connected. */
  send(command: Command): boolean {
    if (this.socket === null) {
      return false;
    }
    this.socket.send(encodeCommand(command));
    this.pendingCommands += 1;
    return true;
  }

  private handleRaw(raw: string): void {
    let message: BridgeMessage;
    try {
      message = parseBridgeMessage(raw);
    } catch (e) {
      this.onServerError?.(e instanceof Error ? e.message : String(e));
      return;
    }
    if (message.type === "error") {
      this.pendingCommands = Math.max(0, this.pendingCommands - 1);
      this.onServerError?.(message.message);
      return;
    }
    const snapshot = message.snapshot;
    if (this.lastSeq > 0 && snapshot.seq !== this.lastSeq + 1) {
      this.onSeqGap?.(this.lastSeq + 1, snapshot.seq);
    }
    this.lastSeq = snapshot.seq;
    // every processed command yields a snapshot, so arrival acknowledges
    this.pendingCommands = Math.max(0, this.pendingCommands - 1);
    this.onSnapshot?.(snapshot);
  }
}
