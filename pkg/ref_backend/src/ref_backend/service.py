"""HTTP service: stateless request handling over ThreadingHTTPServer.

Modes:
  echo            return the request image untouched (integration testing)
  procedural      apply the seeded weather transform for the category
  diffusion-hook  delegate to a mounted callable (real pretrained models)

A hook is any callable ``hook(request: dict, image: ndarray, control: ndarray)
-> ndarray`` mounted at startup; exceptions inside it map to 500.
"""

import importlib
import json
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import protocol
from .transforms import apply_weather

GENERATE_PATH = "/v1/generate"
HEALTH_PATH = "/v1/health"
MODES = ("echo", "procedural", "diffusion-hook")


def load_hook(spec: str):
    """Resolve a ``module:callable`` dotted path into the hook callable."""
    module_name, _, attr = spec.partition(":")
    if not module_name or not attr:
        raise ValueError(f"hook spec must be 'module:callable', got {spec!r}")
    return getattr(importlib.import_module(module_name), attr)


class GenerationHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    # set by make_server on the handler class
    mode = "echo"
    hook = None
    quiet = True

    def log_message(self, fmt, *args):
        if not self.quiet:
            super().log_message(fmt, *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"error": {"code": code, "message": message}})

    def do_GET(self):
        if self.path == HEALTH_PATH:
            self._send(200, {"status": "ok", "modes": [self.mode]})
        else:
            self._error(404, "not_found", f"unknown path: {self.path}")

    def do_POST(self):
        if self.path != GENERATE_PATH:
            self._error(404, "not_found", f"unknown path: {self.path}")
            return
        started = time.perf_counter()
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
        except (ValueError, TypeError) as exc:
            self._error(400, "bad_request", f"body is not valid JSON: {exc}")
            return
        try:
            request = protocol.validate_schema(body)
        except protocol.SchemaViolation as exc:
            self._error(400, "bad_request", str(exc))
            return

        if self.mode == "echo":
            # validate both payloads, then return the image bytes untouched
            try:
                protocol.decode_image(request["image"], "image")
                protocol.decode_image(request["control_map"], "control_map")
            except protocol.UndecodableImage as exc:
                self._error(422, "undecodable_image", str(exc))
                return
            elapsed = (time.perf_counter() - started) * 1000.0
            self._send(200, {"image": request["image"], "backend": "ref-echo",
                             "elapsed_ms": elapsed})
            return

        try:
            image = protocol.decode_image(request["image"], "image")
            control = protocol.decode_image(request["control_map"], "control_map")
        except protocol.UndecodableImage as exc:
            self._error(422, "undecodable_image", str(exc))
            return
        if control.shape[:2] != image.shape[:2]:
            self._error(400, "bad_request", "control_map dimensions differ from image")
            return

        if self.mode == "procedural":
            out = apply_weather(image, request["category"], request["seed"],
                                protect=control)
        else:  # diffusion-hook
            if self.hook is None:
                self._error(500, "backend_failure", "no model mounted on the hook")
                return
            try:
                out = np.asarray(self.hook(request, image, control), dtype=np.uint8)
            except Exception as exc:
                self._error(500, "backend_failure", f"{type(exc).__name__}: {exc}")
                return
            if out.shape != image.shape:
                self._error(500, "backend_failure",
                            f"hook broke dimensions: {image.shape} -> {out.shape}")
                return
        elapsed = (time.perf_counter() - started) * 1000.0
        self._send(200, {"image": protocol.encode_image(out),
                         "backend": f"ref-{self.mode}", "elapsed_ms": elapsed})


def make_server(host: str = "127.0.0.1", port: int = 0, mode: str = "procedural",
                hook=None, quiet: bool = True) -> ThreadingHTTPServer:
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode!r}; expected one of {MODES}")
    handler = type("BoundHandler", (GenerationHandler,),
                   {"mode": mode, "hook": staticmethod(hook) if hook else None,
                    "quiet": quiet})
    return ThreadingHTTPServer((host, port), handler)
