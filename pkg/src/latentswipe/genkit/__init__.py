"""Image generators: a procedural face renderer for offline work and a
client/host pair speaking a small HTTP protocol for external models."""

from .base import Generator, GeneratorDescriptor, ImageBuffer  # noqa: F401
from .procedural import ProceduralGenerator  # noqa: F401
