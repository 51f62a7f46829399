"""Shared generator types.

A generator owns a latent space: it can sample plausible latents, render
a latent to an image, and embed a latent (or one of its own rendered
images) into a feature space where cosine similarity means perceptual
similarity.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class GeneratorDescriptor:
    """Static facts a caller needs before using a generator."""

    dim: int
    height: int
    width: int


@dataclass
class ImageBuffer:
    """A rendered image plus whatever provenance the renderer kept.

    face_params carries the renderer's post-squash parameter vector when
    the image came from the procedural generator, which lets embed()
    answer for rendered images without decoding pixels.
    """

    pixels: np.ndarray  # (height, width, 3) uint8
    face_params: np.ndarray | None = None

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "ImageBuffer":
        with Image.open(io.BytesIO(data)) as im:
            return cls(pixels=np.asarray(im.convert("RGB"), dtype=np.uint8))


@runtime_checkable
class Generator(Protocol):
    def descriptor(self) -> GeneratorDescriptor: ...

    def sample_latents(self, n: int, seed: int) -> np.ndarray: ...

    def render(self, latent: np.ndarray) -> ImageBuffer: ...

    def embed(self, target: np.ndarray | ImageBuffer) -> np.ndarray: ...
