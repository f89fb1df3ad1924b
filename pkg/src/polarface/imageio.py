"""Grayscale images: PGM codec, nearest-neighbour resampling and a synthetic face renderer.

Intensities are always reals in [0, 1]. ``x`` indexes rows (top-down) and
``y`` indexes columns (left-right); every module in the package follows this.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable M x N grid of intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"image must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def vector(self) -> np.ndarray:
        """Row-major flattening of the pixel grid."""
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


def as_image(img) -> GrayImage:
    return img if isinstance(img, GrayImage) else GrayImage(img)


# --------------------------------------------------------------------------
# PGM codec
# --------------------------------------------------------------------------


class PgmError(ValueError):
    """Malformed PGM stream. ``field`` names the offending header field."""

    field = "stream"

    def __init__(self, message: str):
        super().__init__(f"{self.field}: {message}")


class PgmMagicError(PgmError):
    field = "magic"


class PgmDimensionError(PgmError):
    field = "dimensions"


class PgmMaxvalError(PgmError):
    field = "maxval"


class PgmTruncatedError(PgmError):
    field = "pixel data"


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int):
    """Return ``count`` header tokens after the magic and the offset following the last one."""
    pos = 2
    tokens = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pgm(data: bytes) -> GrayImage:
    """Decode a binary (P5) or ASCII (P2) PGM stream, normalising by maxval."""
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise PgmMagicError(f"expected P5 or P2, got {magic!r}")
    tokens, pos = _header_tokens(data, 3)
    names = ("width", "height", "maxval")
    if len(tokens) < 3:
        missing = names[len(tokens)]
        cls = PgmMaxvalError if missing == "maxval" else PgmDimensionError
        raise cls(f"header ends before {missing}")
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmDimensionError(f"non-integer header token in {tokens!r}") from None
    if width <= 0 or height <= 0:
        raise PgmDimensionError(f"{width}x{height} is not a valid size")
    if not 0 < maxval <= 65535:
        raise PgmMaxvalError(f"{maxval} outside 1..65535")

    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        raster = data[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = n * dtype.itemsize
        if len(raster) < need:
            raise PgmTruncatedError(f"need {need} bytes, got {len(raster)}")
        values = np.frombuffer(raster[:need], dtype=dtype).astype(np.float64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < n:
            raise PgmTruncatedError(f"need {n} samples, got {len(body)}")
        try:
            values = np.array([int(v) for v in body[:n]], dtype=np.float64)
        except ValueError:
            raise PgmTruncatedError("non-integer sample in raster") from None
    if values.max(initial=0) > maxval:
        raise PgmMaxvalError(f"sample exceeds maxval {maxval}")
    return GrayImage((values / maxval).reshape(height, width))


def write_pgm(img: GrayImage, maxval: int = 255) -> bytes:
    """Encode as binary P5, quantising each intensity as round(p * maxval)."""
    if not 0 < maxval <= 65535:
        raise ValueError(f"maxval must be in 1..65535, got {maxval}")
    img = as_image(img)
    q = np.floor(img.pixels * maxval + 0.5)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    return header + q.astype(dtype).tobytes()


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def save_pgm(path, img: GrayImage, maxval: int = 255) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(img, maxval))


# --------------------------------------------------------------------------
# Resampling
# --------------------------------------------------------------------------


def resize_nearest(img: GrayImage, out_h: int, out_w: int) -> GrayImage:
    """Nearest-neighbour resize with pixel-centre alignment.

    Output pixel (i, j) takes input pixel
    (floor((i + 0.5) * M / out_h), floor((j + 0.5) * N / out_w)), clamped.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    img = as_image(img)
    M, N = img.shape
    rows = np.minimum(np.floor((np.arange(out_h) + 0.5) * M / out_h).astype(int), M - 1)
    cols = np.minimum(np.floor((np.arange(out_w) + 0.5) * N / out_w).astype(int), N - 1)
    return GrayImage(img.pixels[np.ix_(rows, cols)])


# --------------------------------------------------------------------------
# Synthetic faces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Blob:
    """Anisotropic Gaussian feature. Positions and radii are in head-relative units."""

    x: float
    y: float
    sx: float
    sy: float
    amplitude: float
    angle: float = 0.0  # degrees


@dataclass(frozen=True)
class FaceParams:
    """A face-like pattern: an elliptical warm head plus a set of blobs.

    Lengths are fractions of the half-size of the image, min(M, N) / 2.
    """

    head_rx: float = 0.62
    head_ry: float = 0.5
    head_level: float = 0.55
    background: float = 0.05
    edge: float = 0.1
    blobs: tuple[Blob, ...] = field(default_factory=tuple)


def default_face() -> FaceParams:
    return FaceParams(blobs=(
        Blob(-0.22, -0.2, 0.08, 0.1, 0.3),   # eyes
        Blob(-0.22, 0.2, 0.08, 0.1, 0.3),
        Blob(0.05, 0.0, 0.14, 0.06, 0.2),    # nose
        Blob(0.32, 0.0, 0.06, 0.18, -0.25),  # mouth
    ))


def random_face(rng: np.random.Generator) -> FaceParams:
    """Draw an individual: jittered head shape and feature layout."""
    u = rng.uniform
    blobs = [
        Blob(u(-0.3, -0.15), -u(0.12, 0.28), u(0.05, 0.1), u(0.06, 0.13), u(0.15, 0.4)),
        Blob(u(-0.3, -0.15), u(0.12, 0.28), u(0.05, 0.1), u(0.06, 0.13), u(0.15, 0.4)),
        Blob(u(-0.05, 0.15), u(-0.05, 0.05), u(0.08, 0.18), u(0.04, 0.09), u(0.1, 0.35)),
        Blob(u(0.25, 0.4), u(-0.05, 0.05), u(0.04, 0.08), u(0.1, 0.24), -u(0.1, 0.35)),
        Blob(u(-0.45, -0.3), u(-0.1, 0.1), u(0.05, 0.12), u(0.2, 0.4), u(-0.2, 0.2)),
    ]
    for _ in range(int(rng.integers(1, 4))):
        blobs.append(Blob(u(-0.4, 0.4), u(-0.45, 0.45), u(0.04, 0.12), u(0.04, 0.12),
                          u(-0.25, 0.25), u(0.0, 180.0)))
    return FaceParams(
        # head size varies less than the +-10% scale jitter so identity lives in the features
        head_rx=u(0.59, 0.65),
        head_ry=u(0.47, 0.53),
        head_level=u(0.4, 0.65),
        background=u(0.0, 0.1),
        blobs=tuple(blobs),
    )


def _render(params: FaceParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the pattern at head-relative coordinates."""
    rho = np.sqrt((x / params.head_rx) ** 2 + (y / params.head_ry) ** 2)
    head = 0.5 * (1.0 - np.tanh((rho - 1.0) / params.edge))
    out = params.background + (params.head_level - params.background) * head
    for b in params.blobs:
        c, s = np.cos(np.radians(b.angle)), np.sin(np.radians(b.angle))
        dx, dy = x - b.x, y - b.y
        u = (c * dx + s * dy) / b.sx
        v = (-s * dx + c * dy) / b.sy
        out = out + b.amplitude * head * np.exp(-0.5 * (u * u + v * v))
    return out


def synth_face(seed: int, params: FaceParams | None = None, rotation: float = 0.0,
               scale: float = 1.0, noise_sigma: float = 0.0,
               shape: Sequence[int] = (64, 64)) -> GrayImage:
    """Render a face-like pattern rotated and scaled about the image centre.

    The centre is (M // 2, N // 2), the same point the log-polar transform
    uses. A positive ``rotation`` turns content from the +x (row) axis toward
    +y (column). Additive Gaussian noise is drawn from ``seed`` and the
    result is clipped to [0, 1].
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    params = default_face() if params is None else params
    M, N = int(shape[0]), int(shape[1])
    half = min(M, N) / 2.0
    xs, ys = np.meshgrid(np.arange(M) - M // 2, np.arange(N) - N // 2, indexing="ij")
    t = np.radians(rotation)
    c, s = np.cos(t), np.sin(t)
    # inverse map: pull each output pixel back into the unrotated, unscaled frame
    x = (c * xs + s * ys) / (scale * half)
    y = (-s * xs + c * ys) / (scale * half)
    out = _render(params, x, y)
    if noise_sigma > 0:
        out = out + np.random.default_rng(seed).normal(0.0, noise_sigma, out.shape)
    return GrayImage(np.clip(out, 0.0, 1.0))


def radial_image(shape: Sequence[int], profile) -> GrayImage:
    """Image whose intensity is ``profile(r)`` with r the distance to (M // 2, N // 2)."""
    M, N = int(shape[0]), int(shape[1])
    xs, ys = np.meshgrid(np.arange(M) - M // 2, np.arange(N) - N // 2, indexing="ij")
    return GrayImage(np.clip(profile(np.hypot(xs, ys)), 0.0, 1.0))
