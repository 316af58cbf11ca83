"""2D DFT helpers, circulant products and the regression label map."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError

__all__ = ["LabelParams", "fft2", "ifft2", "circulant_apply", "circulant_matrix", "gaussian_label"]


def fft2(x: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2D DFT over the first two axes."""
    return np.fft.fft2(np.asarray(x), axes=(0, 1))


def ifft2(spectrum: np.ndarray, real: bool = True, rtol: float = 1e-6) -> np.ndarray:
    """Inverse of :func:`fft2` (scaled by ``1/(H*W)``).

    With ``real=True`` the imaginary residue is checked against ``rtol``
    times the real magnitude and dropped.
    """
    out = np.fft.ifft2(spectrum, axes=(0, 1))
    if not real:
        return out
    residue = np.abs(out.imag).max(initial=0.0)
    scale = np.abs(out.real).max(initial=0.0)
    if residue > rtol * scale and residue > 1e-12:
        raise DegenerateError(
            f"inverse transform is not real: imaginary residue {residue:.3g} vs magnitude {scale:.3g}"
        )
    return out.real


def circulant_matrix(x: np.ndarray) -> np.ndarray:
    """Dense circulant matrix whose row ``i`` is ``x`` cyclically shifted by ``i``."""
    x = np.asarray(x)
    n = x.shape[0]
    idx = (np.arange(n)[np.newaxis, :] - np.arange(n)[:, np.newaxis]) % n
    return x[idx]


def circulant_apply(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``C(x) @ v`` in O(n log n), where ``C(x)`` has rows that are shifts of ``x``.

    ``C(x)[i, j] = x[(j - i) % n]`` so the product is the cyclic
    cross-correlation of ``v`` with ``x``.
    """
    x = np.asarray(x)
    v = np.asarray(v)
    if x.shape != v.shape or x.ndim != 1:
        raise ValueError(f"expected two 1D arrays of equal length, got {x.shape} and {v.shape}")
    out = np.fft.ifft(np.conj(np.fft.fft(np.conj(x))) * np.fft.fft(v))
    if np.isrealobj(x) and np.isrealobj(v):
        return out.real
    return out


@dataclass(frozen=True)
class LabelParams:
    """Shape of the regression target ``y = b * exp(-|D / sigma1| ** beta)``."""

    sigma1: float
    beta: float = 2.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.beta > 0 and self.b > 0):
            raise ValueError(f"label parameters must be positive, got {self}")

    @classmethod
    def for_target(cls, target_w: float, target_h: float, beta: float = 2.0, b: float = 1.0):
        """Default spatial scale: one tenth of the target's geometric mean side."""
        return cls(sigma1=math.sqrt(target_w * target_h) / 10.0, beta=beta, b=b)


def gaussian_label(h: int, w: int, params: LabelParams) -> np.ndarray:
    """Label map with its peak at index ``(0, 0)``.

    Distances wrap around the window, so the map is what you get by
    centring the label on the target and then shifting the centre to the
    origin.
    """
    if h < 1 or w < 1:
        raise ValueError(f"label size must be positive, got {h}x{w}")
    r = np.arange(h)
    c = np.arange(w)
    dr = np.minimum(r, h - r)[:, np.newaxis]
    dc = np.minimum(c, w - c)[np.newaxis, :]
    dist = np.sqrt(dr**2 + dc**2)
    return params.b * np.exp(-((dist / params.sigma1) ** params.beta))
