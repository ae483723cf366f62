import { BridgeClient, ConnectionStatus } from "./client.js";
import { Command } from "./protocol.js";
import { renderView } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const lcd = el<HTMLPreElement>("lcd");
const clock = el<HTMLSpanElement>("clock");
const stateName = el<HTMLSpanElement>("state-name");
const buzzer = el<HTMLDivElement>("buzzer");
const banner = el<HTMLDivElement>("banner");
const gapWarning = el<HTMLDivElement>("gap-warning");
const logList = el<HTMLUListElement>("log");
const sentbox = el<HTMLSpanElement>("sentbox");
const controls = Array.from(document.querySelectorAll<HTMLButtonElement>("button[data-cmd]"));
const speedSelect = el<HTMLSelectElement>("speed");
const timeInput = el<HTMLInputElement>("set-time");
const timeButton = el<HTMLButtonElement>("set-time-btn");

const lidOpen: Record<number, boolean> = { 1: false, 2: false, 3: false };

const wsUrl = new URLSearchParams(location.search).get("bridge") ?? "ws://127.0.0.1:8765";
const client = new BridgeClient({ url: wsUrl });

function setControlsEnabled(enabled: boolean): void {
  for (const button of controls) button.disabled = !enabled;
  speedSelect.disabled = !enabled;
  timeButton.disabled = !enabled;
}

client.onStatus = (status: ConnectionStatus) => {
  banner.textContent = status === "connected" ? `connected to ${wsUrl}` : status;
  banner.className = `banner ${status}`;
  setControlsEnabled(status === "connected");
};

client.onSeqGap = (expected, got) => {
  gapWarning.textContent = `snapshot gap: expected seq ${expected}, got ${got}`;
  gapWarning.hidden = false;
};

client.onServerError = (message) => {
  gapWarning.textContent = `bridge error: ${message}`;
  gapWarning.hidden = false;
  setControlsEnabled(client.connected);
};

client.onSnapshot = (snapshot) => {
  const view = renderView(snapshot);
  lcd.textContent = view.lcdText;
  clock.textContent = view.clock;
  stateName.textContent = view.stateName;
  stateName.className = view.alarmActive ? "state alarm" : "state";
  buzzer.className = view.buzzer ? "buzzer on" : "buzzer";
  for (const box of [1, 2, 3]) {
    const led = el<HTMLDivElement>(`led-${box}`);
    led.className = view.leds[box - 1] ? "led blinking" : "led";
  }
  logList.replaceChildren(
    ...view.logLines.map((line) => {
      const item = document.createElement("li");
      item.textContent = line;
      return item;
    }),
  );
  logList.scrollTop = logList.scrollHeight;
  sentbox.textContent = view.sentboxLine;
  // a snapshot acknowledges the last gesture; re-enable the controls
  if (client.pendingCommands === 0) setControlsEnabled(true);
};

function sendGesture(command: Command): void {
  if (!client.send(command)) return;
  setControlsEnabled(false);
}

for (const button of controls) {
  button.addEventListener("click", () => {
    const kind = button.dataset.cmd;
    if (kind === "lid") {
      const box = Number(button.dataset.box);
      const opening = !lidOpen[box];
      lidOpen[box] = opening;
      button.textContent = opening ? `CLOSE LID ${box}` : `OPEN LID ${box}`;
      sendGesture({ cmd: opening ? "open_lid" : "close_lid", box });
    } else if (kind === "advance") {
      sendGesture({ cmd: "advance", seconds: Number(button.dataset.seconds) });
    }
  });
}

speedSelect.addEventListener("change", () => {
  sendGesture({ cmd: "set_speed", factor: Number(speedSelect.value) });
});

timeButton.addEventListener("click", () => {
  if (timeInput.value) {
    sendGesture({ cmd: "set_time", time: timeInput.value.length === 16 ? `${timeInput.value}:00` : timeInput.value });
  }
});

setControlsEnabled(false);
client.connect();
