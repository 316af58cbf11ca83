"""Random spectral-spatial filter bank and stacked 3D convolutional features.

The bank is a handful of ``w x w x D`` patches cut from the first-frame
target at random sliding-window positions, each made zero-mean and
unit-norm. Correlating a search window with every filter (summing over all
bands) gives one feature map per filter; the maps are stacked along a
trailing channel axis to form an ``H x W x d'`` feature stack.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateError, HeaderParseError, TruncatedPayloadError
from .hypercube import HyperCube

__all__ = [
    "CONVOLUTION_FLIP",
    "FilterBank",
    "FeatureStack",
    "sample_filter_bank",
    "convolve3d",
    "extract_features",
    "save_bank",
    "load_bank",
]

# Filters are applied as cross-correlation (no flip). Set to True to apply
# true convolution, i.e. flip every filter along all three axes first.
CONVOLUTION_FLIP = False

# Rows x cols x channels feature array; spatial size matches the input window.
FeatureStack = np.ndarray

_ZERO_VARIANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FilterBank:
    """``count`` normalized filters stored as a ``(count, w, w, D)`` array."""

    filters: np.ndarray
    seed: int = 0

    def __post_init__(self):
        f = np.array(self.filters, dtype=np.float64)
        if f.ndim != 4 or f.shape[1] != f.shape[2] or f.shape[0] < 1:
            raise ValueError(f"filters must have shape (count, w, w, D), got {f.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "filters", f)

    @property
    def count(self) -> int:
        return self.filters.shape[0]

    @property
    def w(self) -> int:
        return self.filters.shape[1]

    @property
    def bands(self) -> int:
        return self.filters.shape[3]

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, j: int) -> np.ndarray:
        return self.filters[j]

    def permuted(self, order) -> "FilterBank":
        return FilterBank(self.filters[list(order)], seed=self.seed)


def _cube_array(cube) -> np.ndarray:
    arr = cube.data if isinstance(cube, HyperCube) else np.asarray(cube, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return arr


def sample_filter_bank(target, w: int, count: int, seed: int) -> FilterBank:
    """Draw ``count`` filters from the ``w x w`` patches of ``target``.

    Positions are drawn uniformly without replacement over all stride-1
    placements that fit inside the target. Flat patches (zero variance)
    cannot be normalized and are skipped in favour of the next draw.
    """
    arr = _cube_array(target)
    h, wd, _ = arr.shape
    if w < 1 or count < 1:
        raise ValueError("filter size and count must be positive")
    if h < w or wd < w:
        raise ValueError(f"target of {wd}x{h} px is smaller than the {w}x{w} filter")
    n_rows, n_cols = h - w + 1, wd - w + 1
    if n_rows * n_cols < count:
        raise ValueError(
            f"target offers {n_rows * n_cols} filter positions, fewer than the {count} filters requested"
        )

    rng = np.random.default_rng(seed)
    picked = []
    for pos in rng.permutation(n_rows * n_cols):
        r, c = divmod(int(pos), n_cols)
        patch = arr[r:r + w, c:c + w, :]
        centred = patch - patch.mean()
        norm = np.linalg.norm(centred)
        if norm < _ZERO_VARIANCE:
            continue
        picked.append(centred / norm)
        if len(picked) == count:
            break

    if not picked:
        raise DegenerateError("degenerate target region: every candidate patch is flat")
    if len(picked) < count:
        raise DegenerateError(
            f"degenerate target region: only {len(picked)} non-flat patches for {count} filters"
        )
    return FilterBank(np.stack(picked), seed=seed)


def _oriented(filters: np.ndarray) -> np.ndarray:
    if CONVOLUTION_FLIP:
        return filters[..., ::-1, ::-1, ::-1]
    return filters


def _pad_edges(arr: np.ndarray, w: int) -> np.ndarray:
    before = w // 2
    after = w - 1 - before
    return np.pad(arr, ((before, after), (before, after), (0, 0)), mode="edge")


def _correlate_direct(arr: np.ndarray, filters: np.ndarray) -> np.ndarray:
    w = filters.shape[1]
    windows = sliding_window_view(_pad_edges(arr, w), (w, w), axis=(0, 1))
    return np.einsum("rcdij,kijd->rck", windows, filters, optimize=True)


def _correlate_fft(arr: np.ndarray, filters: np.ndarray) -> np.ndarray:
    h, wd, _ = arr.shape
    w = filters.shape[1]
    padded = _pad_edges(arr, w)
    ph, pw = padded.shape[:2]
    image_f = np.fft.rfft2(padded, axes=(0, 1))
    filt_f = np.fft.rfft2(filters, s=(ph, pw), axes=(1, 2))
    # Cross-correlation: multiply by the conjugate, sum over bands.
    prod = np.einsum("rcd,krcd->rck", image_f, np.conj(filt_f))
    full = np.fft.irfft2(prod, s=(ph, pw), axes=(0, 1))
    return full[:h, :wd, :]


def convolve3d(window, filt: np.ndarray, method: str = "direct") -> np.ndarray:
    """Correlate a cube with one ``w x w x D`` filter, summing over bands.

    The output has the window's spatial size; pixels beyond the window edge
    take the value of the nearest edge pixel.
    """
    arr = _cube_array(window)
    filt = np.asarray(filt, dtype=np.float64)
    if filt.ndim == 2:
        filt = filt[:, :, np.newaxis]
    return _correlate(arr, filt[np.newaxis], method)[:, :, 0]


def _correlate(arr: np.ndarray, filters: np.ndarray, method: str) -> np.ndarray:
    if filters.shape[3] != arr.shape[2]:
        raise ValueError(
            f"band mismatch: window has {arr.shape[2]} bands, filter has {filters.shape[3]}"
        )
    filters = _oriented(filters)
    if method == "direct":
        return _correlate_direct(arr, filters)
    if method == "fft":
        return _correlate_fft(arr, filters)
    raise ValueError(f"unknown convolution method {method!r}")


def extract_features(window, bank: FilterBank, method: str = "direct") -> FeatureStack:
    """Stack the response of every bank filter into an ``H x W x count`` array."""
    return _correlate(_cube_array(window), bank.filters, method)


def save_bank(path, bank: FilterBank) -> None:
    """Header line ``w,D,count,seed`` followed by float32 little-endian filters."""
    head = f"{bank.w},{bank.bands},{bank.count},{bank.seed}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(bank.filters.astype("<f4").tobytes(order="C"))


def load_bank(path) -> FilterBank:
    path = Path(path)
    blob = path.read_bytes()
    newline = blob.find(b"\n")
    if newline < 0:
        raise HeaderParseError("missing header line", path, 1)
    try:
        w, d, count, seed = (int(v) for v in blob[:newline].decode("ascii").split(","))
    except ValueError:
        raise HeaderParseError("header must be 'w,D,count,seed'", path, 1) from None
    payload = blob[newline + 1:]
    expected = count * w * w * d * 4
    if len(payload) != expected:
        raise TruncatedPayloadError(path, expected, len(payload))
    filters = np.frombuffer(payload, dtype="<f4").reshape(count, w, w, d)
    return FilterBank(filters.astype(np.float64), seed=seed)
