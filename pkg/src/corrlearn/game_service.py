"""Session server for the human-in-the-loop teaching games.

A session streams trajectory playback frames to a client, records keyboard
corrections (translated to input-space directions by the per-game key
tables), and advances the cutting-plane learning loop one iteration per
playback.  The wire protocol is JSON text frames:

inbound   {"type": "start", "game": ..., "seed"?}   begin a session
          {"type": "key", "keys": [...], "t": int}  correction keystrokes
          {"type": "confirm"}                       trajectory accepted
          {"type": "reset"}                         back to the initial box
outbound  {"type": "plan", "k": int, "theta": [...]}
          {"type": "frame", "t": int, "state": [...]}
          {"type": "iteration_done", "k": int, "cuts": int}
          {"type": "done", "reason": str, "theta": [...]}
          {"type": "error", "message": str}

The session core is a synchronous state machine (`GameSession.handle`), so
scripted playback (tests, CLI) and the live asyncio/WebSocket wrapper share
one implementation.  The wrapper paces frame messages at the configured
playback rate and injects the internal end-of-playback event; corrections
apply as cuts only between playbacks.
"""

import argparse
import asyncio
import logging
import os
from dataclasses import replace

import numpy as np

from .kernel import Correction, correction_halfspace, recursive_kernel
from .polytope import EmptyInteriorError, add_cut, from_box, mve_center, prune_redundant
from .presets import TaskPreset, get_preset
from .trajopt import PlanOptions, TrajOptError, plan

__all__ = [
    "ARM_KEY_TABLE",
    "QUADROTOR_KEY_TABLE",
    "INBOUND_SCHEMA",
    "OUTBOUND_SCHEMA",
    "map_keys_to_correction",
    "GameSession",
    "run_scripted_session",
    "arm_link_points",
    "arm_clears_obstacle",
    "create_app",
    "main",
]

logger = logging.getLogger("corrlearn.game")

ARM_KEY_TABLE = {
    "up": np.array([1.0, 0.0]),
    "down": np.array([-1.0, 0.0]),
    "left": np.array([0.0, 1.0]),
    "right": np.array([0.0, -1.0]),
}

QUADROTOR_KEY_TABLE = {
    "up": np.array([1.0, 1.0, 1.0, 1.0]),
    "down": np.array([-1.0, -1.0, -1.0, -1.0]),
    "w": np.array([0.0, 1.0, 0.0, -1.0]),
    "s": np.array([0.0, -1.0, 0.0, 1.0]),
    "a": np.array([1.0, 0.0, -1.0, 0.0]),
    "d": np.array([-1.0, 0.0, 1.0, 0.0]),
}

_KEY_TABLES = {"arm_game": ARM_KEY_TABLE, "quadrotor_game": QUADROTOR_KEY_TABLE}

GAME_NAMES = tuple(_KEY_TABLES)

INBOUND_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "start"},
                "game": {"enum": list(GAME_NAMES)},
                "seed": {"type": "integer"},
            },
            "required": ["type", "game"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "key"},
                "keys": {"type": "array", "items": {"type": "string"}},
                "t": {"type": "integer", "minimum": 0},
            },
            "required": ["type", "keys", "t"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "confirm"}},
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "reset"}},
            "required": ["type"],
            "additionalProperties": False,
        },
    ]
}

OUTBOUND_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "plan"},
                "k": {"type": "integer", "minimum": 1},
                "theta": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["type", "k", "theta"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "frame"},
                "t": {"type": "integer", "minimum": 0},
                "state": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["type", "t", "state"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "iteration_done"},
                "k": {"type": "integer", "minimum": 1},
                "cuts": {"type": "integer", "minimum": 0},
            },
            "required": ["type", "k", "cuts"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "done"},
                "reason": {"type": "string"},
                "theta": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["type", "reason", "theta"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "error"},
                "message": {"type": "string"},
            },
            "required": ["type", "message"],
            "additionalProperties": False,
        },
    ]
}


def map_keys_to_correction(game: str, keys, t: int) -> Correction | None:
    """Sum the per-key direction vectors of the game's table.

    Unknown keys are dropped; an empty or fully-unknown key set, or keys
    that cancel to the zero vector, yield no correction.
    """
    table = _KEY_TABLES.get(game)
    if table is None:
        raise ValueError(f"unknown game {game!r}; expected one of {GAME_NAMES}")
    known = [table[k] for k in keys if k in table]
    if not known:
        return None
    direction = np.sum(known, axis=0)
    if not np.any(direction):
        return None
    return Correction(direction=direction, time=int(t))


def arm_link_points(q1: float, q2: float, lengths=(1.0, 1.0)):
    """Joint positions (base, elbow, tip) of the planar arm."""
    l1, l2 = lengths
    elbow = np.array([l1 * np.cos(q1), l1 * np.sin(q1)])
    tip = elbow + np.array([l2 * np.cos(q1 + q2), l2 * np.sin(q1 + q2)])
    return np.zeros(2), elbow, tip


def _segment_distance(p, a, b) -> float:
    ab = b - a
    denom = ab @ ab
    s = 0.0 if denom == 0 else np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + s * ab)))


def arm_clears_obstacle(states: np.ndarray, scene: dict) -> bool:
    """True when neither link intersects the circular obstacle in any state."""
    obstacle = scene["obstacle"]
    center = np.asarray(obstacle["center"], dtype=float)
    radius = float(obstacle["radius"])
    lengths = scene.get("link_lengths", (1.0, 1.0))
    for state in states:
        base, elbow, tip = arm_link_points(state[0], state[1], lengths)
        if (_segment_distance(center, base, elbow) <= radius
                or _segment_distance(center, elbow, tip) <= radius):
            return False
    return True


class GameSession:
    """Synchronous planning-correction-update state machine for one client.

    Phases: ``planning`` (transient, inside handle), ``playing`` (frames
    out, corrections accepted), ``done``.  ``handle`` consumes one message
    and returns the outbound messages it produced.  The internal message
    {"type": "playback_end"} marks the end of a playback; live wrappers and
    scripted drivers inject it, clients never see it.
    """

    def __init__(self, plan_options: PlanOptions | None = None):
        self.plan_options = plan_options or PlanOptions()
        self.phase = "idle"
        self.preset: TaskPreset | None = None
        self.game = None
        self.seed = None
        self.k = 0
        self.space = None
        self.theta = None
        self.traj = None
        self.pending: list[Correction] = []
        self._warm = None
        self.cut_log: list[tuple[np.ndarray, Correction, object]] = []

    # -- message entry point ------------------------------------------------

    def handle(self, message: dict) -> list[dict]:
        kind = message.get("type")
        if kind == "start":
            return self._on_start(message)
        if kind == "key":
            return self._on_key(message)
        if kind == "playback_end":
            return self._on_playback_end()
        if kind == "confirm":
            return self._on_confirm()
        if kind == "reset":
            return self._on_reset()
        return [{"type": "error", "message": f"unknown message type {kind!r}"}]

    # -- handlers -------------------------------------------------------------

    def _on_start(self, message) -> list[dict]:
        game = message.get("game")
        if game not in GAME_NAMES:
            return [{"type": "error", "message": f"unknown game {game!r}"}]
        self.game = game
        self.seed = message.get("seed")
        self.preset = get_preset(game)
        return self._restart()

    def _restart(self) -> list[dict]:
        self.space = from_box(self.preset.bounds)
        self.k = 0
        self.pending = []
        self.cut_log = []
        self._warm = (
            None
            if self.preset.initial_controls is None
            else self.preset.initial_controls.reshape(-1)
        )
        return self._begin_iteration(replan=True)

    def _begin_iteration(self, replan: bool) -> list[dict]:
        self.phase = "planning"
        self.k += 1
        if replan:
            try:
                self.theta = mve_center(self.space).center
            except EmptyInteriorError as exc:
                self.phase = "done"
                theta = [] if self.theta is None else list(self.theta)
                return [
                    {"type": "error", "message": f"search space emptied: {exc}"},
                    {"type": "done", "reason": "error", "theta": theta},
                ]
            try:
                opts = replace(self.plan_options, initial_controls=self._warm)
                self.traj = plan(
                    self.preset.system, self.preset.cost, self.theta,
                    self.preset.x0, self.preset.horizon, opts,
                )
                self._warm = self.traj.controls.reshape(-1)
            except TrajOptError as exc:
                self.phase = "done"
                return [
                    {"type": "error", "message": f"planning failed: {exc}"},
                    {"type": "done", "reason": "error", "theta": list(self.theta)},
                ]
        self.pending = []
        self.phase = "playing"
        out = [{"type": "plan", "k": self.k, "theta": [float(v) for v in self.theta]}]
        for t, state in enumerate(self.traj.states):
            out.append({"type": "frame", "t": t, "state": [float(v) for v in state]})
        return out

    def _on_key(self, message) -> list[dict]:
        if self.phase != "playing":
            return []
        t = message.get("t")
        if not isinstance(t, int) or not 0 <= t <= self.preset.horizon:
            logger.debug("ignoring key event with out-of-range t=%r", t)
            return []
        corr = map_keys_to_correction(self.game, message.get("keys", []), t)
        if corr is not None:
            self.pending.append(corr)
        return []

    def _on_playback_end(self) -> list[dict]:
        if self.phase != "playing":
            return []
        corrections, self.pending = self.pending, []
        n_cuts = len(corrections)
        if corrections:
            mats = recursive_kernel(self.preset.system, self.preset.cost, self.traj)
            for corr in corrections:
                cut = correction_halfspace(
                    self.preset.system, self.preset.cost, self.traj, corr,
                    matrices=mats,
                )
                self.cut_log.append((self.theta.copy(), corr, cut))
                self.space = add_cut(self.space, cut)
            if len(self.space.cuts) > 10 * self.preset.feature_dim:
                self.space = prune_redundant(self.space)
        out = [{"type": "iteration_done", "k": self.k, "cuts": n_cuts}]
        out.extend(self._begin_iteration(replan=n_cuts > 0))
        return out

    def _on_confirm(self) -> list[dict]:
        if self.phase == "done" or self.theta is None:
            return [{"type": "error", "message": "no active session to confirm"}]
        self.phase = "done"
        return [{
            "type": "done",
            "reason": "confirmed",
            "theta": [float(v) for v in self.theta],
        }]

    def _on_reset(self) -> list[dict]:
        if self.preset is None:
            return [{"type": "error", "message": "no game started"}]
        return self._restart()


def run_scripted_session(
    game: str,
    key_script: dict[int, list[dict]],
    max_iterations: int = 10,
    stop_when=None,
    seed: int | None = None,
    plan_options: PlanOptions | None = None,
) -> tuple[list[dict], GameSession]:
    """Replay a timed key script through the session loop, no transport.

    ``key_script`` maps an iteration index to the key messages delivered
    during that playback.  ``stop_when(session)`` is checked after each
    replanning cycle; when true (or the script is exhausted and clean), a
    confirm message ends the session.  Returns the full outbound log and
    the session for inspection.
    """
    session = GameSession(plan_options=plan_options)
    start: dict = {"type": "start", "game": game}
    if seed is not None:
        start["seed"] = seed
    log = session.handle(start)
    last_scripted = max(key_script) if key_script else 0
    for _ in range(max_iterations):
        if session.phase == "done":
            break
        if stop_when is not None and stop_when(session):
            log += session.handle({"type": "confirm"})
            break
        if stop_when is None and session.k > last_scripted:
            log += session.handle({"type": "confirm"})
            break
        for msg in key_script.get(session.k, []):
            log += session.handle(msg)
        log += session.handle({"type": "playback_end"})
    else:
        if session.phase != "done":
            log += session.handle({"type": "confirm"})
    return log, session


# ---------------------------------------------------------------------------
# Live WebSocket service
# ---------------------------------------------------------------------------


def create_app(playback_rate: float = 10.0, frontend_dir: str | None = None):
    """FastAPI app exposing the session protocol at /ws.

    Frames are paced at ``playback_rate`` steps per second.  Replanning for
    one session runs to completion before its next playback begins; other
    sessions stay responsive because session work runs on worker threads.
    """
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="corrlearn game service")
    interval = 1.0 / playback_rate

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = GameSession()
        lock = asyncio.Lock()
        out_queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()

        async def dispatch(message: dict):
            async with lock:
                outs = await loop.run_in_executor(None, session.handle, message)
            enqueue(outs)

        def enqueue(outs):
            for item in outs:
                out_queue.put_nowait(("msg", item))
            if outs and session.phase == "playing" and outs[-1].get("type") == "frame":
                out_queue.put_nowait(("playback_done",))

        async def sender():
            while True:
                item = await out_queue.get()
                if item[0] == "playback_done":
                    await dispatch({"type": "playback_end"})
                    continue
                await websocket.send_json(item[1])
                if item[1].get("type") == "frame":
                    await asyncio.sleep(interval)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                message = await websocket.receive_json()
                if not _valid_inbound(message):
                    await websocket.send_json(
                        {"type": "error", "message": "malformed message"}
                    )
                    continue
                await dispatch(message)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()

    if frontend_dir and os.path.isdir(frontend_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")
    return app


def _valid_inbound(message) -> bool:
    import jsonschema

    try:
        jsonschema.validate(message, INBOUND_SCHEMA)
        return True
    except jsonschema.ValidationError:
        return False


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="corrlearn game service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8731)
    parser.add_argument("--rate", type=float, default=10.0,
                        help="playback rate in steps per second")
    parser.add_argument("--frontend", default=None,
                        help="directory of built UI assets to serve at /")
    args = parser.parse_args(argv)

    import uvicorn

    level = os.environ.get("CORRLEARN_LOG", "warning").lower()
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING))
    app = create_app(playback_rate=args.rate, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level=level)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
