"""Kernelized correlation filter on multichannel feature stacks.

Training solves kernel ridge regression over every cyclic shift of the
training window in closed form in the Fourier domain; detection scores every
cyclic shift of a test window against the learned model at once.

Sign convention: ``kernel_correlation(a, b)[t]`` compares ``a`` with ``b``
cyclically shifted by ``t`` (``np.roll(b, t, axis=(0, 1))``). Detection
evaluates the test window against the model, so the response peaks at the
displacement of the target content inside the window.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .dft import LabelParams, fft2, gaussian_label, ifft2
from .errors import DegenerateError

__all__ = [
    "KcfParams",
    "TrackerModel",
    "Detection",
    "kernel_correlation",
    "train",
    "detect",
    "update",
    "signed_shift",
]

_DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class KcfParams:
    """Filter hyper-parameters.

    ``sigma`` is the Gaussian kernel bandwidth applied to squared distances
    averaged over feature elements (see :func:`kernel_correlation`).
    ``label`` may stay ``None`` until the target size is known.
    """

    lambda_: float = 1e-4
    sigma: float = 0.5
    interp_factor: float = 0.02
    label: LabelParams | None = None

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ValueError(f"lambda must be positive, got {self.lambda_}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.interp_factor <= 1.0:
            raise ValueError(f"interp_factor must lie in [0, 1], got {self.interp_factor}")

    def with_label(self, label: LabelParams) -> "KcfParams":
        return replace(self, label=label)


@dataclass(frozen=True, eq=False)
class TrackerModel:
    model_x: np.ndarray
    alpha_hat: np.ndarray
    label_hat: np.ndarray

    @property
    def window_size(self) -> tuple[int, int]:
        return self.model_x.shape[:2]


class Detection(NamedTuple):
    response: np.ndarray
    displacement: tuple[int, int]
    peak: float


def _as_stack(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, np.newaxis]
    if x.ndim != 3:
        raise ValueError(f"expected an H x W x C feature stack, got shape {x.shape}")
    return x


def kernel_correlation(x, z, sigma: float, normalize: bool = True) -> np.ndarray:
    """Gaussian kernel between ``x`` and every cyclic shift of ``z``.

    ``k[t] = exp(-max(0, |x|^2 + |z|^2 - 2 <x, roll(z, t)>) / (n * sigma^2))``
    with the cross term for all shifts summed over channels in the Fourier
    domain. ``n`` is the number of feature elements when ``normalize`` is
    true and 1 otherwise.
    """
    x = _as_stack(x)
    z = _as_stack(z)
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {z.shape}")
    # Accumulate channel by channel so that all-zero channels add exact zeros.
    cross = np.zeros(x.shape[:2], dtype=np.complex128)
    sq_norms = 0.0
    for c in range(x.shape[2]):
        xc, zc = x[:, :, c], z[:, :, c]
        cross += fft2(xc) * np.conj(fft2(zc))
        sq_norms += np.sum(xc * xc) + np.sum(zc * zc)
    corr = ifft2(cross)
    dist = sq_norms - 2.0 * corr
    if normalize:
        dist = dist / x.size
    # Analytically non-negative; rounding can push it a hair below zero.
    dist = np.maximum(dist, 0.0)
    return np.exp(-dist / sigma**2)


def train(features, params: KcfParams) -> TrackerModel:
    """Fit the dual coefficients for ``features`` against the label map."""
    if params.label is None:
        raise ValueError("KcfParams.label must be set before training")
    x = _as_stack(features)
    h, w = x.shape[:2]
    kxx = kernel_correlation(x, x, params.sigma)
    denominator = fft2(kxx) + params.lambda_
    if np.abs(denominator).min() < _DENOMINATOR_FLOOR:
        raise DegenerateError("kernel spectrum plus regularization is numerically zero")
    label_hat = fft2(gaussian_label(h, w, params.label))
    return TrackerModel(model_x=x, alpha_hat=label_hat / denominator, label_hat=label_hat)


def signed_shift(index: int, size: int) -> int:
    """Map a cyclic index to the signed range ``(-size/2, size/2]``."""
    return index - size if 2 * index > size else index


def detect(model: TrackerModel, z, params: KcfParams) -> Detection:
    """Score all cyclic shifts of the model against ``z``.

    Returns the response map, the displacement ``(dy, dx)`` of its maximum
    and the peak value. Ties go to the smallest displacement, then to the
    first bin in row-major order.
    """
    z = _as_stack(z)
    if z.shape != model.model_x.shape:
        raise ValueError(f"shape mismatch: window {z.shape} vs model {model.model_x.shape}")
    kzx = kernel_correlation(z, model.model_x, params.sigma)
    response = ifft2(fft2(kzx) * model.alpha_hat)

    h, w = response.shape
    peak = response.max()
    rows, cols = np.nonzero(response == peak)
    best = min(
        zip(rows.tolist(), cols.tolist()),
        key=lambda rc: (
            signed_shift(rc[0], h) ** 2 + signed_shift(rc[1], w) ** 2,
            rc[0] * w + rc[1],
        ),
    )
    displacement = (signed_shift(best[0], h), signed_shift(best[1], w))
    return Detection(response, displacement, float(peak))


def update(model: TrackerModel, new_features, params: KcfParams) -> TrackerModel:
    """Blend the model toward a freshly trained one with rate ``interp_factor``."""
    new_features = _as_stack(new_features)
    if new_features.shape != model.model_x.shape:
        raise ValueError(
            f"shape mismatch: features {new_features.shape} vs model {model.model_x.shape}"
        )
    eta = params.interp_factor
    fresh = train(new_features, params)
    return TrackerModel(
        model_x=(1 - eta) * model.model_x + eta * fresh.model_x,
        alpha_hat=(1 - eta) * model.alpha_hat + eta * fresh.alpha_hat,
        label_hat=model.label_hat,
    )
