"""Live operator bridge: streams session state over a WebSocket and applies
operator commands.

One operator connection at a time. Messages are JSON, one per frame (the
WebSocket frame is the length delimiter); the full schema lives in
docs/protocol.md. On connect the server sends a `scene` message followed by
one binary frame carrying the lumen mesh as binary STL, then `state`
messages at the tick rate. Malformed or ill-typed messages get an `error`
reply and change nothing. A connection drop simply stops commands (the
session keeps ticking with no command) and is logged.
"""
from __future__ import annotations

import asyncio
import json
import logging

import numpy as np
import websockets

from .copilot import ControlMode, Phase, PhaseError, Session, set_phase
from .geometry.trimesh_io import write_stl_binary
from .planner.env import lateral_distance_to_axis

log = logging.getLogger("cathtwin.bridge")

PROTOCOL_VERSION = 1

PHASE_DOFS_WIRE = {
    "initialization": ["translation", "rotation"],
    "localization": ["translation", "rotation", "bending"],
    "releasing": ["sheath", "core", "sheath_core"],
    "anchoring": [],
    "retraction": ["translation", "sheath", "core"],
}


class Bridge:
    """Owns one session and serializes access between the tick loop and I/O."""

    def __init__(self, session: Session, tick_rate: float | None = None):
        self.session = session
        self.tick_rate = tick_rate or session.config.tick_rate
        self._cmd_queue: asyncio.Queue = asyncio.Queue()
        self._client = None
        self._lock = asyncio.Lock()
        self.tick_count = 0

    # -- message assembly ------------------------------------------------------

    def state_message(self, state, ack: int | None) -> dict:
        env = self.session.env
        lateral = lateral_distance_to_axis(state.tip_position, env.target.p1,
                                           env.target.axis)
        cosang = float(np.clip(state.tip_axis @ env.target.axis, -1.0, 1.0))
        ang = float(np.degrees(np.arccos(cosang)))
        crossed = float((state.tip_position - env.target.p1) @ env.target.axis) >= 0.0
        success = (lateral <= env.cfg.success_pos_tol
                   and ang <= env.cfg.success_ang_tol and crossed)
        msg = {
            "v": PROTOCOL_VERSION,
            "kind": "state",
            "t": state.t,
            "joints": [float(x) for x in state.joints],
            "tip": [float(x) for x in state.tip_position],
            "tip_axis": [float(x) for x in state.tip_axis],
            "phase": state.phase,
            "mode": state.mode,
            "scales": {k: float(v) for k, v in state.scales.items()},
            "terminal": "success" if success else "running",
            "intervening": state.intervening,
            "allowed_dofs": PHASE_DOFS_WIRE[state.phase],
        }
        if ack is not None:
            msg["ack"] = ack
        return msg

    def scene_message(self) -> dict:
        env = self.session.env
        return {
            "v": PROTOCOL_VERSION,
            "kind": "scene",
            "bounds": env.model.bounds.tolist(),
            "target": {"p1": env.target.p1.tolist(), "p2": env.target.p2.tolist()},
            "limits": {
                "lo": env.limits.lo.tolist(),
                "hi": env.limits.hi.tolist(),
                "max_velocity": env.limits.max_velocity.tolist(),
            },
            "rig": {
                "port_origin": env.rig.insertion_port.origin.tolist(),
                "port_axis": env.rig.insertion_port.axis.tolist(),
                "passive_length": env.rig.passive_length,
                "active_length": env.rig.active_length,
            },
            "tick_rate": self.tick_rate,
            "mode": self.session.mode.value,
            "phase": self.session.phase.value,
            "mesh": "stl-binary-next-frame",
        }

    # -- I/O -------------------------------------------------------------------

    async def handle_client(self, ws):
        if self._client is not None:
            await ws.send(json.dumps({
                "v": PROTOCOL_VERSION, "kind": "error",
                "message": "another operator is connected",
            }))
            await ws.close()
            return
        self._client = ws
        self.session.log("operator_connected")
        try:
            await ws.send(json.dumps(self.scene_message()))
            await ws.send(write_stl_binary(self.session.env.model.mesh))
            recv = asyncio.create_task(self._recv_loop(ws))
            tick = asyncio.create_task(self._tick_loop(ws))
            done, pending = await asyncio.wait(
                {recv, tick}, return_when=asyncio.FIRST_COMPLETED
            )
            for task in pending:
                task.cancel()
        finally:
            self._client = None
            self.session.log("operator_disconnected")

    async def _recv_loop(self, ws):
        try:
            async for raw in ws:
                reply = await self._handle_message(raw)
                if reply is not None:
                    await ws.send(json.dumps(reply))
        except websockets.ConnectionClosed:
            pass

    async def _handle_message(self, raw) -> dict | None:
        def err(message):
            return {"v": PROTOCOL_VERSION, "kind": "error", "message": message}

        if isinstance(raw, bytes):
            return err("binary frames are server-to-client only")
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            return err("malformed JSON")
        if not isinstance(msg, dict) or "kind" not in msg:
            return err("message must be an object with a 'kind'")
        kind = msg["kind"]
        async with self._lock:
            if kind == "cmd":
                try:
                    dof = msg["dof"]
                    vf = float(msg["velocity_fraction"])
                    seq = msg.get("seq")
                    if not isinstance(dof, str) or not -1.0 <= vf <= 1.0:
                        raise ValueError
                except (KeyError, TypeError, ValueError):
                    return err("cmd requires dof:str and velocity_fraction in [-1,1]")
                await self._cmd_queue.put((dof, vf, seq))
                return None
            if kind == "mode":
                try:
                    self.session.set_mode(ControlMode(msg.get("mode")))
                    return None
                except (ValueError, RuntimeError) as exc:
                    return err(f"mode change rejected: {exc}")
            if kind == "phase":
                try:
                    set_phase(self.session, Phase(msg.get("phase")))
                    return None
                except (ValueError, PhaseError) as exc:
                    return err(f"phase change rejected: {exc}")
            return err(f"unknown message kind {kind!r}")

    async def _tick_loop(self, ws):
        from .copilot import OperatorCommand  # local to keep import groups tidy

        dt = 1.0 / self.tick_rate
        try:
            while True:
                cmd = None
                ack = None
                dropped = 0
                while not self._cmd_queue.empty():
                    if cmd is not None:
                        dropped += 1
                    dof, vf, seq = self._cmd_queue.get_nowait()
                    try:
                        cmd = OperatorCommand(dof=dof, velocity_fraction=vf,
                                              timestamp=self.session.total_time)
                        ack = seq
                    except ValueError:
                        await ws.send(json.dumps({
                            "v": PROTOCOL_VERSION, "kind": "error",
                            "message": f"invalid command dof {dof!r}",
                        }))
                        cmd = None
                if dropped:
                    self.session.log("commands_dropped", count=dropped)
                async with self._lock:
                    state = self.session.tick(dt, cmd)
                    self.tick_count += 1
                await ws.send(json.dumps(self.state_message(state, ack)))
                await asyncio.sleep(dt)
        except websockets.ConnectionClosed:
            pass


async def serve_async(session: Session, host: str = "127.0.0.1",
                      port: int = 8787, tick_rate: float | None = None,
                      ready: asyncio.Event | None = None):
    bridge = Bridge(session, tick_rate)
    async with websockets.serve(bridge.handle_client, host, port):
        log.info("bridge listening on ws://%s:%d", host, port)
        if ready is not None:
            ready.set()
        await asyncio.Future()  # run until cancelled


def serve(session: Session, host: str = "127.0.0.1", port: int = 8787,
          tick_rate: float | None = None) -> None:
    """Blocking entry point for the CLI `serve` subcommand."""
    try:
        asyncio.run(serve_async(session, host, port, tick_rate))
    except KeyboardInterrupt:
        log.info("bridge stopped")
