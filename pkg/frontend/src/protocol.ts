// Bridge message schema (v1): newline-terminated JSON objects over one WebSocket.

export const PROTOCOL_VERSION = 1;

export interface LogEntry {
  seq: number;
  at: string;
  kind: string;
  [field: string]: unknown;
}

export interface Snapshot {
  v: number;
  seq: number;
  time: string;
  state: string;
  lcd: [string, string, string, string];
  leds: [boolean, boolean, boolean];
  buzzer: boolean;
  recent_log: LogEntry[];
  sms_sentbox: Record<string, number>;
}

export interface BridgeError {
  v: number;
  error: string;
}

export type Command =
  | { cmd: "open_lid"; box: number }
  | { cmd: "close_lid"; box: number }
  | { cmd: "advance"; seconds: number }
  | { cmd: "set_speed"; factor: number }
  | { cmd: "set_time"; time: string };

export type BridgeMessage =
  | { type: "snapshot"; snapshot: Snapshot }
  | { type: "error"; message: string };

function isStringArray(value: unknown, length: number, itemLength?: number): boolean {
  return (
    Array.isArray(value) &&
    value.length === length &&
    value.every((row) => typeof row === "string" && (itemLength === undefined || row.length === itemLength))
  );
}

export function parseBridgeMessage(raw: string): BridgeMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new Error(`unparseable bridge message: ${raw.slice(0, 80)}`);
  }
  if (typeof obj !== "object" || obj === null) {
    throw new Error("bridge message is not an object");
  }
  const msg = obj as Record<string, unknown>;
  if (msg.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${String(msg.v)}`);
  }
  if (typeof msg.error === "string") {
    return { type: "error", message: msg.error };
  }
  if (
    typeof msg.seq !== "number" ||
    typeof msg.time !== "string" ||
    typeof msg.state !== "string" ||
    !isStringArray(msg.lcd, 4, 16) ||
    !Array.isArray(msg.leds) ||
    msg.leds.length !== 3 ||
    typeof msg.buzzer !== "boolean" ||
    !Array.isArray(msg.recent_log) ||
    typeof msg.sms_sentbox !== "object" ||
    msg.sms_sentbox === null
  ) {
    throw new Error("snapshot message is missing required fields");
  }
  return { type: "snapshot", snapshot: msg as unknown as Snapshot };
}

export function encodeCommand(command: Command): string {
  return JSON.stringify(command) + "\n";
}
