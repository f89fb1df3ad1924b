"""Eigenface basis via the snapshot method, projection and reconstruction."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imageio import GrayImage, as_image


class RankDeficientWarning(UserWarning):
    """Training set has no variance after mean subtraction; the basis is empty."""


@dataclass(frozen=True, eq=False)
class EigenSpace:
    """Mean face, unit-norm eigenfaces (one per row of ``basis``) and their eigenvalues.

    Eigenvalues are those of the unscaled scatter matrix A^T A, largest first.
    """

    mean_face: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    side: int
    variance_keep: float = 0.95

    @property
    def dim(self) -> int:
        return self.mean_face.shape[0]

    @property
    def U(self) -> int:
        return self.basis.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "dim": self.dim,
            "side": self.side,
            "mean_face": self.mean_face.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "basis": self.basis.tolist(),
            "variance_keep": self.variance_keep,
        })

    @classmethod
    def from_json(cls, text: str) -> "EigenSpace":
        d = json.loads(text)
        mean = np.asarray(d["mean_face"], dtype=np.float64)
        basis = np.asarray(d["basis"], dtype=np.float64).reshape(-1, d["dim"])
        if mean.shape != (d["dim"],):
            raise ValueError(f"mean_face length {mean.shape[0]} != dim {d['dim']}")
        return cls(mean, basis, np.asarray(d["eigenvalues"], dtype=np.float64),
                   int(d["side"]), float(d["variance_keep"]))


def _stack(images: Sequence) -> tuple[np.ndarray, int]:
    if len(images) < 2:
        raise ValueError(f"need at least 2 training images, got {len(images)}")
    imgs = [as_image(im) for im in images]
    shape = imgs[0].shape
    for i, im in enumerate(imgs):
        if im.shape != shape:
            raise ValueError(f"image {i} has shape {im.shape}, expected {shape}")
    return np.stack([im.vector() for im in imgs]), shape[0]


def _select_count(lam: np.ndarray, variance_keep: float) -> int:
    total = lam.sum()
    if total <= 0:
        return 0
    cum = np.cumsum(lam)
    # relative slack so that variance_keep == 1.0 keeps every positive direction
    return int(np.searchsorted(cum, variance_keep * total * (1 - 1e-12)) + 1)


def build_eigenspace(images: Sequence[GrayImage], variance_keep: float = 0.95,
                     max_u: int | None = None) -> EigenSpace:
    """Top principal directions of the centred training set.

    The P x P inner-product matrix L = A^T A of the centred columns is
    eigendecomposed and each eigenvector v is lifted to u = A v / |A v|. The
    number kept is the smallest U whose eigenvalue mass reaches
    ``variance_keep``, capped by ``max_u`` and by P - 1.
    """
    if not 0 < variance_keep <= 1:
        raise ValueError(f"variance_keep must be in (0, 1], got {variance_keep}")
    X, side = _stack(images)
    P = X.shape[0]
    mean = X.mean(axis=0)
    A = (X - mean).T  # D x P

    L = A.T @ A
    lam, V = np.linalg.eigh(L)
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    lam = np.where(lam < 0, 0.0, lam)
    tol = lam[0] * 1e-12
    lam = lam[: min(int(np.sum(lam > tol)), P - 1)]

    U = _select_count(lam, variance_keep)
    if max_u is not None:
        U = min(U, max_u)
    if U == 0:
        warnings.warn("training images have zero variance; eigenspace is empty",
                      RankDeficientWarning, stacklevel=2)
        return EigenSpace(mean, np.zeros((0, mean.shape[0])), np.zeros(0), side, variance_keep)

    basis = (A @ V[:, :U]).T
    basis /= np.linalg.norm(basis, axis=1, keepdims=True)
    # sign convention: largest-magnitude component positive
    pivots = np.argmax(np.abs(basis), axis=1)
    basis *= np.sign(basis[np.arange(U), pivots])[:, None]
    return EigenSpace(mean, basis, lam[:U].copy(), side, variance_keep)


def _vector(img, space: EigenSpace) -> np.ndarray:
    v = as_image(img).vector() if not isinstance(img, np.ndarray) or img.ndim != 1 else img
    if v.shape[0] != space.dim:
        raise ValueError(f"image has {v.shape[0]} pixels, eigenspace expects {space.dim}")
    return v


def project(img, space: EigenSpace) -> np.ndarray:
    """Feature vector w_k = u_k . (x - mean)."""
    return space.basis @ (_vector(img, space) - space.mean_face)


def project_many(images: Sequence, space: EigenSpace) -> np.ndarray:
    X = np.stack([_vector(im, space) for im in images])
    return (X - space.mean_face) @ space.basis.T


def reconstruct(features: np.ndarray, space: EigenSpace) -> np.ndarray:
    """mean + sum_k w_k u_k as a flat vector (not clamped to [0, 1])."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (space.U,):
        raise ValueError(f"feature vector length {features.shape} != U={space.U}")
    return space.mean_face + features @ space.basis
