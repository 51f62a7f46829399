"""Procedural face generator with a structured latent space.

Latents are an affine warp of a standard normal: w = mean + A z. The
warp is block diagonal. The first k = min(16, d) coordinates form the
face block, split into sub-blocks with strictly descending scales
across the whole block, so a variance-ranked linear reduction of
sampled latents recovers the sub-blocks in order: a 4-dimensional
reduction spans the first sub-block only, an 8-dimensional one adds
the second, and so on. The leading sub-block (coordinates 0-3) stays
axis-aligned so each dominant variance direction is exactly one
nameable trait; sub-blocks 4-7 and 8-15 are mixed orthogonally, the
way entangled generator features usually are. The remaining d - k
coordinates have much smaller scales and never touch the renderer,
making them provably irrelevant to the image.

Each latent maps to k face parameters through a per-channel squash that
mimics how real generator features behave unevenly under an embedding:

- channels 0-3 are broad off-center responses (tanh with a wide
  denominator and a per-channel midpoint offset), coarse proportions
  that drift over the whole latent range instead of saturating;
- channels 4-7 pass through a sine wiggle before the tanh, giving the
  response fine periodic detail on top of the broad trend, like hair
  and brow styling that cycles as the latent moves;
- channels 8-15 are plain smooth tanh responses whose latent means
  carry a strong lean to one side or the other, a house style shared
  by every sampled face, so these parameters read as stable backdrop
  traits that individual faces only mildly vary around.

The glasses channel (index 10) keeps a shift of 1.0 as a soft
threshold: only latents with w_10 above roughly 1 render visible
glasses. The post-squash parameter vector doubles as the embedding, so
embeddings live in (-1, 1)^k and embed(render(w)) equals embed(w)
exactly because rendered images carry their parameter vector.

Rendering is pure numpy compositing of smooth-edged masks at 256x256 by
default. The same latent always renders to identical bytes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import DimensionMismatch
from .base import Generator, GeneratorDescriptor, ImageBuffer

MAX_FACE_PARAMS = 16

FACE_PARAM_NAMES = (
    "face_ratio",
    "skin_tone",
    "eye_spacing",
    "eye_size",
    "brow_angle",
    "nose_length",
    "mouth_width",
    "mouth_curve",
    "hair_length",
    "hair_tone",
    "glasses",
    "wrinkles",
    "pupil_size",
    "blush",
    "ear_size",
    "stubble",
)

GLASSES_INDEX = 10
GLASSES_SHIFT = 1.0

# channel ranges of the three squash textures
OFFSET_CHANNELS = (0, 4)
WIGGLE_CHANNELS = (4, 8)

_WARP_SEED = 710417
_FACE_SCALES = (1.8, 0.8)  # sqrt-variance range across the face block
_LEAD_SCALES = (2.6, 2.2, 1.9, 1.6)  # extra spread on the leading proportions
_REST_SCALES = (0.35, 0.15)  # scale range across the render-irrelevant block
_FACE_BLOCKS = (4, 8, MAX_FACE_PARAMS)  # sub-block boundaries

_OFFSET_TAU = 0.70  # offset-channel response width as a fraction of height
_WIGGLE_AMP = 0.50  # wiggle amplitude as a fraction of channel height
_WIGGLE_CYCLES = 12  # sine periods across a channel's height
_SMOOTH_DEN = 2.0  # tanh denominator outside the offset channels
_LEAN_MAG = 2.0  # house-style lean on the plain channels' latent means
_LEAN_JITTER = (0.8, 1.2)  # per-channel spread around the lean magnitude
_PHASE_SEED = 77003
_OFFSET_SEED = 11

_SKIN_LIGHT = np.array([0.976, 0.871, 0.741])
_SKIN_DARK = np.array([0.439, 0.306, 0.196])
_HAIR_DARK = np.array([0.16, 0.11, 0.07])
_HAIR_LIGHT = np.array([0.82, 0.72, 0.46])
_BACKGROUND = np.array([0.93, 0.94, 0.96])
_EYE_WHITE = np.array([0.97, 0.97, 0.96])
_PUPIL = np.array([0.10, 0.08, 0.07])
_LIP = np.array([0.70, 0.32, 0.30])
_FRAME = np.array([0.13, 0.12, 0.13])
_BLUSH = np.array([0.89, 0.52, 0.48])


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _face_scales() -> np.ndarray:
    scales = np.geomspace(*_FACE_SCALES, MAX_FACE_PARAMS)
    scales[: len(_LEAD_SCALES)] = _LEAD_SCALES
    return scales


@lru_cache(maxsize=None)
def _build_warp(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic warp (A, mean) for a given latent dimension."""
    rng = np.random.default_rng(_WARP_SEED)
    k = min(MAX_FACE_PARAMS, dim)
    scales = _face_scales()[:k]
    A = np.zeros((dim, dim))
    lo = 0
    for edge in _FACE_BLOCKS:
        hi = min(edge, k)
        if hi > lo:
            # every block consumes one rotation draw so editing a block
            # never reshuffles the draws of the blocks after it
            q = _orthogonal(rng, hi - lo)
            if lo == 0:
                q = np.eye(hi - lo)  # leading proportions stay axis-aligned
            A[lo:hi, lo:hi] = q * scales[lo:hi]
        lo = hi
    rest = dim - k
    if rest:
        A[k:, k:] = _orthogonal(rng, rest) * np.geomspace(*_REST_SCALES, rest)
    mean = rng.uniform(-0.4, 0.4, size=dim)
    # plain channels lean hard to a random side; draws are fixed-size so
    # the stream layout does not depend on dim
    n_lean = MAX_FACE_PARAMS - WIGGLE_CHANNELS[1]
    mag = rng.uniform(*_LEAN_JITTER, size=n_lean) * _LEAN_MAG
    sign = np.where(rng.random(n_lean) < 0.5, -1.0, 1.0)
    stop = min(MAX_FACE_PARAMS, dim)
    if stop > WIGGLE_CHANNELS[1]:
        mean[WIGGLE_CHANNELS[1] : stop] += (mag * sign)[: stop - WIGGLE_CHANNELS[1]]
    return A, mean


@lru_cache(maxsize=None)
def _texture(k: int) -> tuple[np.ndarray, ...]:
    """Per-channel squash constants (height, amp, phase, offset, den)."""
    full = MAX_FACE_PARAMS
    height = 3.0 * _face_scales()
    j = np.arange(full)
    broad = j < OFFSET_CHANNELS[1]
    wiggly = (j >= WIGGLE_CHANNELS[0]) & (j < WIGGLE_CHANNELS[1])
    amp = np.where(wiggly, _WIGGLE_AMP, 0.0)
    phase = np.random.default_rng(_PHASE_SEED).uniform(0, 2 * np.pi, full)
    offs = np.random.default_rng(_OFFSET_SEED).uniform(-0.25, 0.25, full) * height
    offset = np.where(broad, offs, 0.0)
    den = np.where(broad, _OFFSET_TAU * height, _SMOOTH_DEN)
    return tuple(a[:k].copy() for a in (height, amp, phase, offset, den))


def squash(latent: np.ndarray, k: int) -> np.ndarray:
    """Latent -> normalized face parameters in (-1, 1)^k."""
    raw = np.asarray(latent, dtype=float)[:k].copy()
    if k > GLASSES_INDEX:
        raw[GLASSES_INDEX] -= GLASSES_SHIFT
    height, amp, phase, offset, den = _texture(k)
    wig = raw + amp * height * np.sin(np.pi * _WIGGLE_CYCLES * raw / height + phase)
    return np.tanh((wig - offset) / den)


class _Canvas:
    def __init__(self, size: int):
        coords = (np.arange(size) + 0.5) / size
        self.y = coords[:, None]
        self.x = coords[None, :]
        self.aa = 1.5 / size
        self.img = np.empty((size, size, 3))
        self.img[:] = _BACKGROUND

    def paint(self, alpha: np.ndarray, color: np.ndarray) -> None:
        a = alpha[:, :, None]
        self.img = self.img * (1.0 - a) + color * a

    def _coverage(self, signed_dist: np.ndarray) -> np.ndarray:
        return np.clip(0.5 - signed_dist / self.aa, 0.0, 1.0)

    def ellipse(self, cx, cy, rx, ry) -> np.ndarray:
        d = np.sqrt(((self.x - cx) / rx) ** 2 + ((self.y - cy) / ry) ** 2)
        return self._coverage((d - 1.0) * min(rx, ry))

    def ring(self, cx, cy, radius, thickness) -> np.ndarray:
        d = np.abs(np.sqrt((self.x - cx) ** 2 + (self.y - cy) ** 2) - radius)
        return self._coverage(d - 0.5 * thickness)

    def segment(self, x0, y0, x1, y1, thickness) -> np.ndarray:
        vx, vy = x1 - x0, y1 - y0
        L2 = vx * vx + vy * vy
        if L2 == 0:
            d = np.sqrt((self.x - x0) ** 2 + (self.y - y0) ** 2)
        else:
            t = np.clip(((self.x - x0) * vx + (self.y - y0) * vy) / L2, 0.0, 1.0)
            d = np.sqrt((self.x - x0 - t * vx) ** 2 + (self.y - y0 - t * vy) ** 2)
        return self._coverage(d - 0.5 * thickness)

    def parabola(self, cx, cy, half_width, bow, thickness) -> np.ndarray:
        """Horizontal parabolic strip: center at cy + bow, ends at cy - bow."""
        rel = (self.x - cx) / half_width
        curve_y = cy + bow * (1.0 - 2.0 * rel * rel)
        d = np.abs(self.y - curve_y)
        inside = np.abs(rel) <= 1.0
        return self._coverage(d - 0.5 * thickness) * inside


def render_face(params: np.ndarray, size: int = 256) -> np.ndarray:
    """Rasterize a 16-parameter face to (size, size, 3) uint8 pixels."""
    p = np.zeros(MAX_FACE_PARAMS)
    p[: len(params)] = params
    cv = _Canvas(size)

    ratio = 1.0 + 0.25 * p[0]
    cx, cy = 0.5, 0.52
    half_h = 0.30
    half_w = 0.22 * ratio
    skin = _SKIN_LIGHT + (_SKIN_DARK - _SKIN_LIGHT) * (0.5 + 0.5 * p[1])

    # hair sits behind the head: anchored above the crown, lengthening
    # the ellipse downward
    hair_len = 0.5 + 0.5 * p[8]
    hair = _HAIR_DARK + (_HAIR_LIGHT - _HAIR_DARK) * (0.5 + 0.5 * p[9])
    top_y = cy - half_h - 0.03
    ry_hair = half_h * (0.50 + 1.05 * hair_len) + 0.05
    rx_hair = half_w + 0.03 + 0.01 * hair_len
    cv.paint(cv.ellipse(cx, top_y + ry_hair, rx_hair, ry_hair), hair)

    # ears peek out from under the hair, before the head covers their base
    ear_r = 0.032 + 0.014 * p[14]
    for sx in (-1.0, 1.0):
        cv.paint(cv.ellipse(cx + sx * half_w, cy + 0.02, ear_r, 1.5 * ear_r), skin)

    cv.paint(cv.ellipse(cx, cy, half_w, half_h), skin)

    wrinkle = 0.5 + 0.5 * p[11]
    crease = skin * 0.62
    for frac in (0.80, 0.66, 0.52):
        alpha = cv.parabola(cx, cy - half_h * frac, 0.55 * half_w, 0.012, 0.006)
        cv.paint(alpha * (0.38 * wrinkle), crease)

    # stubble shades the jaw before the mouth goes on top
    stubble = 0.5 + 0.5 * p[15]
    jaw = cv.ellipse(cx, cy + half_h * 0.62, half_w * 0.80, half_h * 0.40)
    cv.paint(jaw * (0.22 * stubble), skin * 0.70)

    ey = cy - 0.05
    es = 0.030 + 0.010 * p[3]
    eye_dx = half_w * (0.45 + 0.13 * p[2])
    pupil_r = es * (0.62 + 0.16 * p[12])
    for sx in (-1.0, 1.0):
        ex = cx + sx * eye_dx
        cv.paint(cv.ellipse(ex, ey, es * 1.4, es * 0.95), _EYE_WHITE)
        cv.paint(cv.ellipse(ex, ey, pupil_r, pupil_r), _PUPIL)
        under = cv.segment(ex - 1.1 * es, ey + 2.3 * es, ex + 1.1 * es, ey + 2.3 * es, 0.005)
        cv.paint(under * (0.30 * wrinkle), crease)
        by = ey - 0.055
        bl = 1.55 * es + 0.012
        tilt = 0.45 * p[4] * bl
        # inner brow end drops as the angle grows, mirrored across the face
        cv.paint(
            cv.segment(ex - sx * bl, by - tilt, ex + sx * bl, by + tilt, 0.010),
            _PUPIL * 0.9,
        )
        blush = cv.ellipse(ex, cy + half_h * 0.28, 0.26 * half_w, 0.030)
        cv.paint(blush * (0.28 * (0.5 + 0.5 * p[13])), _BLUSH)

    nose_len = 0.085 + 0.035 * p[5]
    cv.paint(cv.segment(cx, cy - 0.03, cx, cy - 0.03 + nose_len, 0.007), skin * 0.72)

    mouth_w = half_w * (0.62 + 0.20 * p[6])
    cv.paint(
        cv.parabola(cx, cy + half_h * 0.52, 0.5 * mouth_w, 0.045 * p[7], 0.012), _LIP
    )

    glasses = float(np.clip(p[GLASSES_INDEX], 0.0, 1.0))
    if glasses > 0.0:
        rg = 1.75 * es
        lens_l = cx - eye_dx
        lens_r = cx + eye_dx
        alpha = cv.ring(lens_l, ey, rg, 0.008)
        alpha = np.maximum(alpha, cv.ring(lens_r, ey, rg, 0.008))
        alpha = np.maximum(alpha, cv.segment(lens_l + rg, ey, lens_r - rg, ey, 0.007))
        alpha = np.maximum(
            alpha, cv.segment(lens_l - rg, ey, cx - half_w - 0.008, ey - 0.012, 0.007)
        )
        alpha = np.maximum(
            alpha, cv.segment(lens_r + rg, ey, cx + half_w + 0.008, ey - 0.012, 0.007)
        )
        cv.paint(alpha * (0.95 * glasses), _FRAME)

    return (np.clip(cv.img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


class ProceduralGenerator(Generator):
    """Self-contained face generator over a d-dimensional latent space.

    Parameters
    ----------
    dim : latent dimensionality (>= 1); only min(16, dim) coordinates
        influence the image.
    size : rendered image height and width in pixels.
    """

    def __init__(self, dim: int = 32, size: int = 256):
        if dim < 1:
            raise DimensionMismatch(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self.size = int(size)
        self.n_params = min(MAX_FACE_PARAMS, self.dim)
        self._A, self._mean = _build_warp(self.dim)

    def descriptor(self) -> GeneratorDescriptor:
        return GeneratorDescriptor(dim=self.dim, height=self.size, width=self.size)

    @property
    def latent_mean(self) -> np.ndarray:
        return self._mean.copy()

    @property
    def latent_covariance(self) -> np.ndarray:
        return self._A @ self._A.T

    def sample_latents(self, n: int, seed: int) -> np.ndarray:
        z = np.random.default_rng(seed).standard_normal((n, self.dim))
        return self._mean + z @ self._A.T

    def _check_latent(self, latent: np.ndarray) -> np.ndarray:
        latent = np.asarray(latent, dtype=float).reshape(-1)
        if latent.shape != (self.dim,):
            raise DimensionMismatch(
                f"latent must have shape ({self.dim},), got {latent.shape}"
            )
        return latent

    def face_params(self, latent: np.ndarray) -> np.ndarray:
        return squash(self._check_latent(latent), self.n_params)

    def render(self, latent: np.ndarray) -> ImageBuffer:
        params = self.face_params(latent)
        return ImageBuffer(pixels=render_face(params, self.size), face_params=params)

    def embed(self, target: np.ndarray | ImageBuffer) -> np.ndarray:
        if isinstance(target, ImageBuffer):
            if target.face_params is None:
                raise ValueError(
                    "cannot embed an image without parameter provenance; "
                    "pass the latent instead"
                )
            return target.face_params.copy()
        return self.face_params(target)
