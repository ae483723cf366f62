"""Device panel bridge: snapshots out, commands in, over one WebSocket per client.

Every message is a single newline-terminated JSON object with a ``v`` schema
version. All device mutation funnels through one serialized command queue;
snapshots broadcast after every processed device event and every command.
"""

from __future__ import annotations

import asyncio
import json

from websockets.asyncio.server import serve as ws_serve

from .device import Device
from .domain import parse_walltime

PROTOCOL_VERSION = 1

TICK_INTERVAL_S = 0.2

COMMANDS = ("open_lid", "close_lid", "advance", "set_speed", "set_time")


class CommandError(ValueError):
    pass


def _validate_command(obj: object) -> dict:
    if not isinstance(obj, dict):
        raise CommandError("command must be an object")
    cmd = obj.get("cmd")
    if cmd not in COMMANDS:
        raise CommandError(f"unknown cmd {cmd!r}")
    if cmd in ("open_lid", "close_lid"):
        if obj.get("box") not in (1, 2, 3):
            raise CommandError("box must be 1, 2 or 3")
    elif cmd == "advance":
        seconds = obj.get("seconds")
        if not isinstance(seconds, int) or isinstance(seconds, bool) or seconds < 0:
            raise CommandError("seconds must be a nonnegative integer")
    elif cmd == "set_speed":
        factor = obj.get("factor")
        if not isinstance(factor, (int, float)) or isinstance(factor, bool) or factor <= 0:
            raise CommandError("factor must be a positive number")
    elif cmd == "set_time":
        try:
            parse_walltime(obj.get("time", ""))
        except (ValueError, TypeError):
            raise CommandError("time must be a local ISO-8601 timestamp")
    return obj


class BridgeServer:
    def __init__(self, device: Device, speed: float = 1.0):
        self.device = device
        self.speed = speed
        self.snapshot_seq = 0
        self._clients: set[asyncio.Queue] = set()
        self._commands: asyncio.Queue = asyncio.Queue()
        device.observers.append(self._on_device_event)

    # --- snapshots ---------------------------------------------------------

    def _snapshot_line(self) -> str:
        self.snapshot_seq += 1
        snap = {"v": PROTOCOL_VERSION, "seq": self.snapshot_seq, **self.device.state_dict()}
        return json.dumps(snap, separators=(",", ":")) + "\n"

    def _broadcast(self) -> None:
        line = self._snapshot_line()
        for queue in self._clients:
            queue.put_nowait(line)

    def _on_device_event(self, event, at) -> None:
        self._broadcast()

    # --- command processing --------------------------------------------------

    def _apply(self, cmd: dict) -> None:
        name = cmd["cmd"]
        if name == "open_lid":
            self.device.open_lid(cmd["box"])
        elif name == "close_lid":
            self.device.close_lid(cmd["box"])
        elif name == "advance":
            self.device.advance(cmd["seconds"])
        elif name == "set_speed":
            self.speed = float(cmd["factor"])
        elif name == "set_time":
            self.device.set_time(parse_walltime(cmd["time"]))

    async def _consume_commands(self) -> None:
        while True:
            cmd = await self._commands.get()
            self._apply(cmd)
            self._broadcast()

    async def _tick(self) -> None:
        """Map real time onto virtual time at the current speed factor."""
        loop = asyncio.get_running_loop()
        accrued = 0.0
        last = loop.time()
        while True:
            await asyncio.sleep(TICK_INTERVAL_S)
            now = loop.time()
            accrued += (now - last) * self.speed
            last = now
            whole = int(accrued)
            if whole > 0:
                accrued -= whole
                await self._commands.put({"cmd": "advance", "seconds": whole})

    # --- connections -----------------------------------------------------------

    async def handle_client(self, websocket) -> None:
        queue: asyncio.Queue = asyncio.Queue()
        self._clients.add(queue)
        self._broadcast()  # welcome snapshot goes to everyone: no seq gaps

        async def drain():
            while True:
                await websocket.send(await queue.get())

        sender = asyncio.create_task(drain())
        try:
            async for message in websocket:
                try:
                    cmd = _validate_command(json.loads(message))
                except (json.JSONDecodeError, CommandError) as e:
                    err = {"v": PROTOCOL_VERSION, "error": str(e)}
                    await websocket.send(json.dumps(err, separators=(",", ":")) + "\n")
                    continue
                await self._commands.put(cmd)
        finally:
            self._clients.discard(queue)
            sender.cancel()


async def serve_bridge(device: Device, host: str = "127.0.0.1", port: int = 8765, speed: float = 1.0) -> None:
    """Run the bridge until cancelled; binds before announcing readiness."""
    server = BridgeServer(device, speed)
    async with ws_serve(server.handle_client, host, port):
        print(f"pillsim bridge listening on ws://{host}:{port}", flush=True)
        consumer = asyncio.create_task(server._consume_commands())
        ticker = asyncio.create_task(server._tick())
        try:
            await asyncio.gather(consumer, ticker)
        finally:
            consumer.cancel()
            ticker.cancel()
