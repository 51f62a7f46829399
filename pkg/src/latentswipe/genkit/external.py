"""Client for a generator hosted behind the HTTP wire protocol.

Maps transport failures onto the package's error types: connection
problems raise ExternalUnavailable and deadline overruns raise
ExternalTimeout, so callers can decide whether to retry, fall back, or
surface a 503. At most `max_inflight` requests run concurrently.

The wire protocol has no sampling endpoint; sample_latents draws from a
standard normal, the usual prior for GAN-style latent spaces.
"""

from __future__ import annotations

import base64
import threading

import numpy as np
import requests

from ..errors import DimensionMismatch, ExternalTimeout, ExternalUnavailable
from .base import Generator, GeneratorDescriptor, ImageBuffer

DEFAULT_TIMEOUT = 10.0
MAX_INFLIGHT = 4


class ExternalGenerator(Generator):
    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_inflight: int = MAX_INFLIGHT,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = float(timeout)
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._session = requests.Session()
        self._descriptor: GeneratorDescriptor | None = None

    def _request(self, method: str, path: str, **kwargs):
        url = f"{self.base_url}{path}"
        with self._gate:
            try:
                resp = self._session.request(
                    method, url, timeout=self.timeout, **kwargs
                )
            except requests.Timeout as exc:
                raise ExternalTimeout(
                    f"{url} did not answer within {self.timeout}s"
                ) from exc
            except requests.RequestException as exc:
                raise ExternalUnavailable(f"{url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ExternalUnavailable(
                f"{url} answered {resp.status_code}: {resp.text[:200]}"
            )
        return resp

    def descriptor(self) -> GeneratorDescriptor:
        if self._descriptor is None:
            data = self._request("GET", "/v1/descriptor").json()
            self._descriptor = GeneratorDescriptor(
                dim=int(data["d"]), height=int(data["height"]), width=int(data["width"])
            )
        return self._descriptor

    def sample_latents(self, n: int, seed: int) -> np.ndarray:
        d = self.descriptor().dim
        return np.random.default_rng(seed).standard_normal((n, d))

    def _check_latent(self, latent: np.ndarray) -> list[float]:
        latent = np.asarray(latent, dtype=float).reshape(-1)
        d = self.descriptor().dim
        if latent.shape != (d,):
            raise DimensionMismatch(f"latent must have shape ({d},), got {latent.shape}")
        return [float(v) for v in latent]

    def render(self, latent: np.ndarray) -> ImageBuffer:
        payload = {"latent": self._check_latent(latent)}
        resp = self._request("POST", "/v1/render", json=payload)
        return ImageBuffer.from_png_bytes(resp.content)

    def embed(self, target: np.ndarray | ImageBuffer) -> np.ndarray:
        if isinstance(target, ImageBuffer):
            payload = {
                "png_base64": base64.b64encode(target.to_png_bytes()).decode()
            }
        else:
            payload = {"latent": self._check_latent(target)}
        data = self._request("POST", "/v1/embed", json=payload).json()
        return np.asarray(data["embedding"], dtype=float)
