"""Websocket bridge for the browser operator console.

The console is a thin client: it renders what it receives and sends raw
interaction events back.  All interpretation (prompt windows, gestures,
debounce) stays on this side, inside the tracker, and every console event
is logged on the operator channel, so a console-driven run replays exactly
like a scripted one.

Protocol v1, JSON text frames:

    server -> client
        {"type": "hello", "v": 1, "width": W, "height": H,
         "scenario": ..., "mode": ..., "prompt_window_s": ...}
        {"type": "tick", "t": ..., "depth": ..., "behavior": ...,
         "tracker": ..., "centroid": [x, y] | null, "alerts": [...],
         "confirmed_distance": ... | null, "frame_b64": "..."}
        {"type": "done"}
    client -> server
        {"type": "click", "x": px, "y": px, "button": "left" | "right"}
        {"type": "init"}
        {"type": "stop"}

Unknown client message types are ignored, and clients must ignore fields
they do not know, so v1 peers survive additive changes.

Frames are base64 row-major uint8, rows bottom-up, so pixel (x, y) in a
tick message matches the coordinates the tracker expects in clicks.

No postponed annotations here: fastapi resolves the websocket endpoint's
hints at runtime and the WebSocket class only exists inside create_app.
"""
import asyncio
import base64
from typing import Optional

from .config import load_config
from .runner import Stack
from .telemetry import LogWriter
from .world.scenario import load_scenario


def build_stack(scenario: str, mode: str, seed: int,
                config_path: Optional[str], log_dir: Optional[str]) -> Stack:
    cfg = load_config(config_path)
    spec = load_scenario(scenario)
    return Stack(cfg, spec, mode, seed, writer=LogWriter(log_dir))


def create_app(scenario: str = "track_sine", mode: str = "track_oracle",
               seed: int = 0, duration: Optional[float] = None,
               config_path: Optional[str] = None,
               log_dir: Optional[str] = None):
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="flipperbot console bridge")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        outbox: list = []
        stack = build_stack(scenario, mode, seed, config_path, log_dir)
        stack.console = lambda msg: outbox.append(msg)
        cam = stack.cfg.camera
        await ws.send_json({"type": "hello", "v": 1, "width": cam.width,
                            "height": cam.height,
                            "scenario": stack.spec.get("name"),
                            "mode": mode,
                            "prompt_window_s": stack.cfg.tracker.prompt_window_s})
        total = float(duration if duration is not None
                      else stack.spec.get("duration_s", 60.0))
        blocks = stack.start(total)

        async def pump_input():
            while True:
                msg = await ws.receive_json()
                kind = msg.get("type")
                if kind == "click":
                    stack.inject_operator({"action": "click",
                                           "x": int(msg["x"]),
                                           "y": int(msg["y"]),
                                           "button": msg.get("button", "left")})
                elif kind == "init":
                    stack.inject_operator({"action": "init"})
                elif kind == "stop":
                    stack.inject_operator({"action": "stop"})

        pump = asyncio.create_task(pump_input())
        try:
            for _ in range(blocks):
                stack.step_block()
                while outbox:
                    msg = outbox.pop(0)
                    frame = msg.pop("frame", None)
                    if frame is not None:
                        msg["frame_b64"] = base64.b64encode(
                            frame.tobytes()).decode("ascii")
                    await ws.send_json(msg)
                await asyncio.sleep(stack.per_dt)
            stack.finalize(total)
            await ws.send_json({"type": "done"})
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()

    return app


def serve(scenario: str, mode: str, seed: int, duration: Optional[float],
          config_path: Optional[str], log_dir: Optional[str],
          listen: str = "127.0.0.1:8765") -> None:
    import uvicorn

    host, _, port = listen.partition(":")
    app = create_app(scenario=scenario, mode=mode, seed=seed,
                     duration=duration, config_path=config_path,
                     log_dir=log_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765),
                log_level="warning")
