"""Cartesian to log-polar conversion with a fixed square output.

Output rows index log radius (row 0 innermost, r = 1) and columns index the
angle, column j sitting at 360 * j / S degrees. Rotating the input about the
centre therefore shows up as a circular shift of columns, and a central
scale change as a shift of rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imageio import GrayImage, as_image


@dataclass(frozen=True)
class PolarGeometry:
    m: int
    n: int
    R: float
    Z: int
    q: int

    @property
    def S(self) -> int:
        return self.Z ** self.q


def _ceil_log(R: float, Z: int) -> int:
    # integer search avoids float error at exact powers (log_2 16 -> 4, not 4.000001)
    q, p = 0, 1
    while p < R:
        p *= Z
        q += 1
    return q


def compute_geometry(M: int, N: int, Z: int = 2) -> PolarGeometry:
    """Centre (M // 2, N // 2), radius of the largest inscribed circle, and side Z**q."""
    if Z < 2:
        raise ValueError(f"base Z must be >= 2, got {Z}")
    m, n = M // 2, N // 2
    R = min(m, n, M - 1 - m, N - 1 - n)
    if R < 1:
        raise ValueError(f"image {M}x{N} too small: inscribed radius {R} < 1")
    return PolarGeometry(m=m, n=n, R=float(R), Z=Z, q=max(1, _ceil_log(R, Z)))


def cart_to_polar(x: float, y: float, geom: PolarGeometry) -> tuple[float, float]:
    """Radius and angle (degrees in [0, 360)) of pixel (x, y) about the centre."""
    dx, dy = x - geom.m, y - geom.n
    r = math.hypot(dx, dy)
    theta = math.degrees(math.atan2(dy, dx)) % 360.0 if r > 0 else 0.0
    return r, theta


def sampling_grid(geom: PolarGeometry, side: int | None = None):
    """Source coordinates (rows, cols) sampled by each output cell, as integer arrays."""
    S = geom.S if side is None else int(side)
    if S < 1:
        raise ValueError(f"output side must be positive, got {S}")
    log_r = np.linspace(0.0, math.log(geom.R), S) if S > 1 else np.zeros(1)
    r = np.exp(log_r)[:, None]
    theta = np.radians(360.0 * np.arange(S) / S)[None, :]
    x = geom.m + r * np.cos(theta)
    y = geom.n + r * np.sin(theta)
    rows = np.floor(x + 0.5).astype(int)
    cols = np.floor(y + 0.5).astype(int)
    return rows, cols


def log_polar_transform(img: GrayImage, Z: int = 2, side: int | None = None) -> GrayImage:
    """Resample ``img`` onto an S x S (log radius, angle) grid by nearest neighbour.

    Each output cell is mapped back into the source and takes the nearest
    pixel, so every output value occurs in the input. ``side`` forces a fixed
    output size; by default S = Z**q with q = ceil(log_Z R).
    """
    img = as_image(img)
    geom = compute_geometry(img.height, img.width, Z)
    rows, cols = sampling_grid(geom, side)
    rows = np.clip(rows, 0, img.height - 1)
    cols = np.clip(cols, 0, img.width - 1)
    return GrayImage(img.pixels[rows, cols])


def circular_column_shift(img: GrayImage, k: int) -> GrayImage:
    """Column j of the result is column (j - k) mod width of the input."""
    img = as_image(img)
    return GrayImage(np.roll(img.pixels, int(k), axis=1))


def best_column_shift(target: GrayImage, source: GrayImage) -> tuple[int, float]:
    """Shift k in (-S/2, S/2] minimising mean |target - shift(source, k)|, with that residual."""
    target, source = as_image(target), as_image(source)
    if target.shape != source.shape:
        raise ValueError(f"shape mismatch {target.shape} vs {source.shape}")
    W = target.width
    best_k, best_err = 0, math.inf
    for k in range(-((W - 1) // 2), W // 2 + 1):
        err = float(np.mean(np.abs(target.pixels - np.roll(source.pixels, k, axis=1))))
        if err < best_err or (err == best_err and abs(k) < abs(best_k)):
            best_k, best_err = k, err
    return best_k, best_err
