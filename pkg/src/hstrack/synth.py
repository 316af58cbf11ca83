"""Synthetic hyperspectral sequences with exact ground truth.

A scene is a flat background spectrum plus hard-edged objects (disks or
rectangles), each with its own spectrum and a per-frame centre. Objects are
painted in list order, so later objects cover earlier ones, and the ground
truth follows the first object. Noise is i.i.d. Gaussian per pixel and band,
drawn from a stream keyed by ``(seed, frame_index)``.

Scene files are JSON::

    {
      "width": 64, "height": 64, "bands": 8, "frames": 100,
      "seed": 0, "noise_sigma": 0.01,
      "background": [0.3, 0.3, ...],          # or a single number
      "objects": [
        {"spectrum": [...], "shape": "disk", "size": [12, 12],
         "path": {"start": [20, 32], "velocity": [2, 0], "bounce": true}}
      ]
    }

``path`` may also be an explicit list of ``[x, y]`` centres, one per frame.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .hypercube import BoundingBox, write_boxes, write_sequence

__all__ = [
    "SceneObject",
    "SceneSpec",
    "linear_path",
    "make_metamer_pair",
    "render",
    "write_scene",
    "load_scene",
    "scene_to_dict",
    "linear_motion_scene",
    "metamer_crossing_scene",
    "PRESETS",
]

SHAPES = ("disk", "rect")


@dataclass(frozen=True)
class SceneObject:
    spectrum: tuple[float, ...]
    size: tuple[int, int]
    path: tuple[tuple[float, float], ...]
    shape: str = "disk"

    def box_at(self, t: int) -> BoundingBox:
        cx, cy = self.path[t]
        w, h = self.size
        x0 = math.floor(cx - w / 2 + 0.5)
        y0 = math.floor(cy - h / 2 + 0.5)
        return BoundingBox(x0, y0, w, h)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    bands: int
    frames: int
    background: tuple[float, ...]
    objects: tuple[SceneObject, ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0
    wavelengths: tuple[float, ...] | None = None

    def __post_init__(self):
        if min(self.width, self.height, self.bands, self.frames) < 1:
            raise ValueError("width, height, bands and frames must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        _check_spectrum("background", self.background, self.bands)
        for i, obj in enumerate(self.objects):
            _check_spectrum(f"object {i} spectrum", obj.spectrum, self.bands)
            if obj.shape not in SHAPES:
                raise ValueError(f"object {i}: unknown shape {obj.shape!r}")
            if min(obj.size) < 1:
                raise ValueError(f"object {i}: size must be positive")
            if len(obj.path) != self.frames:
                raise ValueError(f"object {i}: path has {len(obj.path)} points for {self.frames} frames")
            for t, (cx, cy) in enumerate(obj.path):
                if not (0 <= cx < self.width and 0 <= cy < self.height):
                    raise ValueError(
                        f"object {i}: path out of bounds at frame {t}: ({cx:g}, {cy:g})"
                    )


def _check_spectrum(name, spectrum, bands):
    if len(spectrum) != bands:
        raise ValueError(f"{name} has {len(spectrum)} values for {bands} bands")
    if any(not 0.0 <= v <= 1.0 for v in spectrum):
        raise ValueError(f"{name} values must lie in [0, 1]")


def _reflect(p: float, lo: float, hi: float) -> float:
    span = hi - lo
    if span <= 0:
        return lo
    q = (p - lo) % (2 * span)
    return lo + (q if q <= span else 2 * span - q)


def linear_path(start, velocity, frames: int, bounds=None) -> tuple[tuple[float, float], ...]:
    """Constant-velocity centres; with ``bounds=((xlo, xhi), (ylo, yhi))`` the
    motion reflects off the bounds instead of leaving them."""
    pts = []
    for t in range(frames):
        x = start[0] + velocity[0] * t
        y = start[1] + velocity[1] * t
        if bounds is not None:
            x = _reflect(x, *bounds[0])
            y = _reflect(y, *bounds[1])
        pts.append((float(x), float(y)))
    return tuple(pts)


def make_metamer_pair(bands: int, band_mean: float, seed: int = 0, gray_band: int | None = None):
    """Two spectra with the same mean that differ by 0.3 or more in some band.

    For three or more bands they also agree exactly at ``gray_band``
    (default ``bands // 2``), so a single-band view of that band cannot
    tell them apart. With two bands only the mean can match.
    """
    if bands < 2:
        raise ValueError("a metamer pair needs at least 2 bands")
    if not 0 < band_mean < 1:
        raise ValueError("band_mean must lie strictly between 0 and 1")
    delta = min(0.3, band_mean, 1 - band_mean)
    if 2 * delta < 0.3:
        raise ValueError(
            f"band_mean {band_mean} is too close to 0 or 1 for a 0.3 spectral separation"
        )
    if bands == 2:
        pattern = np.array([-1.0, 1.0])
        free = [0, 1]
    else:
        gray = bands // 2 if gray_band is None else gray_band
        if not 0 <= gray < bands:
            raise ValueError(f"gray_band {gray} out of range")
        free = [i for i in range(bands) if i != gray]
        rng = np.random.default_rng(seed)
        while True:
            v = rng.standard_normal(len(free))
            v -= v.mean()
            if np.abs(v).max() > 1e-6:
                break
        pattern = np.zeros(bands)
        pattern[free] = v / np.abs(v).max()
    a = band_mean + delta * pattern
    b = band_mean - delta * pattern
    # Absorb rounding in the free bands so the shared band stays bit-identical.
    scale = bands / len(free)
    a[free] += (band_mean - a.mean()) * scale
    b[free] += (band_mean - b.mean()) * scale
    return np.clip(a, 0.0, 1.0), np.clip(b, 0.0, 1.0)


def _paint(frame: np.ndarray, obj: SceneObject, t: int) -> None:
    box = obj.box_at(t)
    h, w = frame.shape[:2]
    x0, y0 = int(box.x), int(box.y)
    bw, bh = obj.size
    r0, r1 = max(y0, 0), min(y0 + bh, h)
    c0, c1 = max(x0, 0), min(x0 + bw, w)
    if r0 >= r1 or c0 >= c1:
        return
    if obj.shape == "rect":
        frame[r0:r1, c0:c1, :] = obj.spectrum
        return
    rows = np.arange(r0, r1)[:, np.newaxis] + 0.5
    cols = np.arange(c0, c1)[np.newaxis, :] + 0.5
    cx, cy = x0 + bw / 2, y0 + bh / 2
    inside = ((cols - cx) / (bw / 2)) ** 2 + ((rows - cy) / (bh / 2)) ** 2 <= 1.0
    frame[r0:r1, c0:c1, :][inside] = obj.spectrum


def render_frame(spec: SceneSpec, t: int) -> np.ndarray:
    frame = np.empty((spec.height, spec.width, spec.bands))
    frame[:] = spec.background
    for obj in spec.objects:
        _paint(frame, obj, t)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng([spec.seed, t])
        frame += rng.normal(0.0, spec.noise_sigma, frame.shape)
    return np.clip(frame, 0.0, 1.0)


def render(spec: SceneSpec) -> tuple[np.ndarray, list[BoundingBox]]:
    """Render every frame; returns a ``(T, H, W, D)`` array and the target boxes."""
    frames = np.stack([render_frame(spec, t) for t in range(spec.frames)])
    boxes = [spec.objects[0].box_at(t) for t in range(spec.frames)] if spec.objects else []
    return frames, boxes


def write_scene(spec: SceneSpec, out_dir, name: str = "scene", dtype: str = "f32le"):
    """Write ``<name>.hdr``/``<name>.bin`` and ``<name>_gt.csv``; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header_path = out_dir / f"{name}.hdr"
    gt_path = out_dir / f"{name}_gt.csv"
    write_sequence(
        header_path,
        (render_frame(spec, t) for t in range(spec.frames)),
        dtype=dtype,
        wavelengths=spec.wavelengths,
    )
    if spec.objects:
        write_boxes(gt_path, [spec.objects[0].box_at(t) for t in range(spec.frames)])
    return header_path, gt_path


def _spectrum(value, bands):
    if isinstance(value, (int, float)):
        return (float(value),) * bands
    return tuple(float(v) for v in value)


def _size(value):
    if isinstance(value, (int, float)):
        return (int(value), int(value))
    w, h = value
    return (int(w), int(h))


def scene_from_dict(cfg: dict) -> SceneSpec:
    bands = int(cfg["bands"])
    frames = int(cfg["frames"])
    width, height = int(cfg["width"]), int(cfg["height"])
    objects = []
    for i, o in enumerate(cfg.get("objects", [])):
        path = o["path"]
        if isinstance(path, dict):
            bounds = None
            if path.get("bounce", False):
                sw, sh = _size(o["size"])
                bounds = ((sw / 2, width - sw / 2), (sh / 2, height - sh / 2))
            path = linear_path(path["start"], path.get("velocity", (0, 0)), frames, bounds)
        else:
            path = tuple((float(x), float(y)) for x, y in path)
        objects.append(
            SceneObject(
                spectrum=_spectrum(o["spectrum"], bands),
                size=_size(o["size"]),
                path=path,
                shape=o.get("shape", "disk"),
            )
        )
    wl = cfg.get("wavelengths")
    return SceneSpec(
        width=width,
        height=height,
        bands=bands,
        frames=frames,
        background=_spectrum(cfg["background"], bands),
        objects=tuple(objects),
        noise_sigma=float(cfg.get("noise_sigma", 0.0)),
        seed=int(cfg.get("seed", 0)),
        wavelengths=tuple(wl) if wl is not None else None,
    )


def load_scene(path) -> SceneSpec:
    with open(path, encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


def scene_to_dict(spec: SceneSpec) -> dict:
    """JSON-ready form with explicit per-frame paths."""
    out = {
        "width": spec.width,
        "height": spec.height,
        "bands": spec.bands,
        "frames": spec.frames,
        "seed": spec.seed,
        "noise_sigma": spec.noise_sigma,
        "background": list(spec.background),
        "objects": [
            {
                "spectrum": list(o.spectrum),
                "shape": o.shape,
                "size": list(o.size),
                "path": [list(p) for p in o.path],
            }
            for o in spec.objects
        ],
    }
    if spec.wavelengths is not None:
        out["wavelengths"] = list(spec.wavelengths)
    return out


def _wavelengths(bands: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(470, 620, bands).round(1))


def linear_motion_scene(seed: int = 0, frames: int = 100, noise_sigma: float = 0.01) -> SceneSpec:
    """64x64x8 scene: one disk bouncing horizontally at 2 px/frame."""
    bands, size = 8, 12
    target = tuple(float(v) for v in np.linspace(0.75, 0.35, bands).round(4))
    background = tuple(float(v) for v in np.linspace(0.2, 0.3, bands).round(4))
    bounds = ((size / 2 + 2, 64 - size / 2 - 2), (0, 64))
    path = linear_path((14.0, 30.0), (2.0, 0.0), frames, bounds)
    return SceneSpec(
        width=64, height=64, bands=bands, frames=frames,
        background=background,
        objects=(SceneObject(target, (size, size), path),),
        noise_sigma=noise_sigma, seed=seed, wavelengths=_wavelengths(bands),
    )


# Band at which the two crossing objects have identical reflectance.
CROSSING_GRAY_BAND = 4


def metamer_crossing_scene(seed: int = 0, frames: int = 60, noise_sigma: float = 0.01) -> SceneSpec:
    """Target and a metamer distractor crossing head-on.

    Both disks read the same at band :data:`CROSSING_GRAY_BAND` but have
    distinct spectra. The distractor runs one pixel below the target's line
    and is painted on top, so it covers all but a sliver of the target as
    the two pass.
    """
    bands, size = 8, 12
    spec_a, spec_b = make_metamer_pair(bands, 0.55, seed=7, gray_band=CROSSING_GRAY_BAND)
    background = (0.4,) * bands
    width, height = 160, 48
    target_path = linear_path((16.0, 24.0), (2.0, 0.0), frames)
    distractor_path = linear_path((60.0, 25.0), (-1.0, 0.0), frames)
    return SceneSpec(
        width=width, height=height, bands=bands, frames=frames,
        background=background,
        objects=(
            SceneObject(tuple(float(v) for v in spec_a), (size, size), target_path),
            SceneObject(tuple(float(v) for v in spec_b), (size, size), distractor_path),
        ),
        noise_sigma=noise_sigma, seed=seed, wavelengths=_wavelengths(bands),
    )


PRESETS = {
    "linear": linear_motion_scene,
    "crossing": metamer_crossing_scene,
}
