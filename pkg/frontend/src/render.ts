import { LogEntry, Snapshot } from "./protocol.js";

// Pure snapshot -> view-model functions. The DOM layer (main.ts) only copies
// these values onto elements, so rendering is testable without a browser.

export interface PanelView {
  lcdText: string; // the four 16-char rows verbatim, newline-joined
  leds: [boolean, boolean, boolean];
  lidsOpenHint: boolean[];
  buzzer: boolean;
  stateName: string;
  alarmActive: boolean;
  clock: string;
  logLines: string[]; // oldest first, ready for a <li> list
  sentboxLine: string;
}

const TERMINAL_KINDS = new Set(["TAKEN", "MISSED"]);

export function formatLogEntry(entry: LogEntry): string {
  const extras = Object.entries(entry)
    .filter(([key]) => key !== "seq" && key !== "at" && key !== "kind")
    .map(([key, value]) => `${key}=${String(value)}`)
    .join(" ");
  const time = entry.at.includes("T") ? entry.at.split("T")[1] : entry.at;
  return extras ? `${time} ${entry.kind} ${extras}` : `${time} ${entry.kind}`;
}

export function formatSentbox(sentbox: Record<string, number>): string {
  const patient = sentbox["PATIENT"] ?? 0;
  const family = sentbox["FAMILY"] ?? 0;
  return `PATIENT ${patient} / FAMILY ${family}`;
}

export function renderView(snapshot: Snapshot): PanelView {
  return {
    lcdText: snapshot.lcd.join("\n"),
    leds: snapshot.leds,
    lidsOpenHint: snapshot.recent_log.length
      ? [1, 2, 3].map((box) => lastLidState(snapshot.recent_log, box))
      : [false, false, false],
    buzzer: snapshot.buzzer,
    stateName: snapshot.state,
    alarmActive: snapshot.state !== "IDLE",
    clock: snapshot.time.replace("T", "  "),
    logLines: snapshot.recent_log.map(formatLogEntry),
    sentboxLine: formatSentbox(snapshot.sms_sentbox),
  };
}

function lastLidState(log: LogEntry[], box: number): boolean {
  for (let i = log.length - 1; i >= 0; i--) {
    const entry = log[i];
    if (entry === undefined || entry.compartment !== box) continue;
    if (entry.kind === "LID_CLOSE") return false;
    if (entry.kind === "TAKEN" || entry.kind === "UNSCHEDULED_OPEN" || entry.kind === "WRONG_COMPARTMENT") {
      return true;
    }
  }
  return false;
}

export function isTerminal(entry: LogEntry): boolean {
  return TERMINAL_KINDS.has(entry.kind);
}
