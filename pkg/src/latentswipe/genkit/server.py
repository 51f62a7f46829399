"""HTTP host exposing any Generator over a three-endpoint protocol.

    GET  /v1/descriptor          -> {"d": ..., "height": ..., "width": ...}
    POST /v1/render  {"latent"}  -> image/png bytes
    POST /v1/embed   {"latent"} or {"png_base64"} -> {"embedding": [...]}

Built on the standard library's threading HTTP server so a generator
can be hosted with no extra dependencies, e.g. for integration tests or
to put the procedural generator behind the same wire protocol a real
model server would use. Embedding by png_base64 is answered from a
registry of images this host itself rendered (keyed by PNG bytes), as
pixel-only embedding is not defined for arbitrary foreign images.
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import json
import threading
from collections import OrderedDict
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .base import Generator
from .procedural import ProceduralGenerator

_EMBED_CACHE_LIMIT = 4096


class GeneratorHost:
    """Serve a generator; start()/close() for in-process use."""

    def __init__(self, generator: Generator, host: str = "127.0.0.1", port: int = 0):
        self.generator = generator
        self._rendered: OrderedDict[str, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def _send_json(self, status: int, payload: dict) -> None:
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/v1/descriptor":
                    d = outer.generator.descriptor()
                    self._send_json(
                        200, {"d": d.dim, "height": d.height, "width": d.width}
                    )
                else:
                    self._send_json(404, {"error": "unknown path"})

            def _read_body(self) -> dict | None:
                try:
                    length = int(self.headers.get("Content-Length", 0))
                    return json.loads(self.rfile.read(length))
                except (ValueError, json.JSONDecodeError):
                    return None

            def do_POST(self):
                body = self._read_body()
                if body is None:
                    self._send_json(400, {"error": "malformed JSON body"})
                    return
                if self.path == "/v1/render":
                    self._render(body)
                elif self.path == "/v1/embed":
                    self._embed(body)
                else:
                    self._send_json(404, {"error": "unknown path"})

            def _latent_from(self, body: dict) -> np.ndarray | None:
                latent = body.get("latent")
                d = outer.generator.descriptor().dim
                if not isinstance(latent, list) or len(latent) != d:
                    return None
                try:
                    return np.asarray(latent, dtype=float)
                except (TypeError, ValueError):
                    return None

            def _render(self, body: dict) -> None:
                latent = self._latent_from(body)
                if latent is None:
                    self._send_json(422, {"error": "latent must be a list of length d"})
                    return
                image = outer.generator.render(latent)
                png = image.to_png_bytes()
                outer._remember(png, outer.generator.embed(latent))
                self.send_response(200)
                self.send_header("Content-Type", "image/png")
                self.send_header("Content-Length", str(len(png)))
                self.end_headers()
                self.wfile.write(png)

            def _embed(self, body: dict) -> None:
                if "latent" in body:
                    latent = self._latent_from(body)
                    if latent is None:
                        self._send_json(
                            422, {"error": "latent must be a list of length d"}
                        )
                        return
                    emb = outer.generator.embed(latent)
                elif "png_base64" in body:
                    try:
                        png = base64.b64decode(body["png_base64"], validate=True)
                    except (ValueError, TypeError):
                        self._send_json(400, {"error": "png_base64 does not decode"})
                        return
                    emb = outer._lookup(png)
                    if emb is None:
                        self._send_json(
                            422,
                            {"error": "image was not rendered by this host"},
                        )
                        return
                else:
                    self._send_json(400, {"error": "need latent or png_base64"})
                    return
                self._send_json(200, {"embedding": [float(v) for v in emb]})

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def _remember(self, png: bytes, embedding: np.ndarray) -> None:
        key = hashlib.sha256(png).hexdigest()
        with self._lock:
            self._rendered[key] = embedding
            self._rendered.move_to_end(key)
            while len(self._rendered) > _EMBED_CACHE_LIMIT:
                self._rendered.popitem(last=False)

    def _lookup(self, png: bytes) -> np.ndarray | None:
        with self._lock:
            return self._rendered.get(hashlib.sha256(png).hexdigest())

    def start(self) -> "GeneratorHost":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._server.serve_forever()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Host the procedural generator over HTTP"
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8701)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--size", type=int, default=256)
    args = parser.parse_args(argv)
    host = GeneratorHost(
        ProceduralGenerator(dim=args.dim, size=args.size), args.host, args.port
    )
    print(f"serving generator on {host.url}")
    try:
        host.serve_forever()
    except KeyboardInterrupt:
        host.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
