"""Frame-by-frame tracking loop.

Frame 0 fixes the filter bank (sampled from the target box) and trains the
correlation filter on a padded search window around the target. Every later
frame crops the search window at the previous centre, finds the peak of the
detection response, moves the box and blends a model retrained at the new
position into the old one. The box size never changes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .convfeat import FilterBank, extract_features, sample_filter_bank
from .dft import LabelParams
from .hypercube import BoundingBox, HyperCube, crop_window
from .kcf import KcfParams, TrackerModel, detect, train, update

__all__ = [
    "TrackerConfig",
    "TrackState",
    "cosine_window",
    "search_window_size",
    "init",
    "step",
    "run",
]


@dataclass(frozen=True)
class TrackerConfig:
    filter_w: int = 6
    filter_count: int = 10
    padding: float = 2.5
    seed: int = 0
    kcf: KcfParams = field(default_factory=KcfParams)
    # Envelope for the search window size relative to the initial target.
    search_scale_min: float = 0.2
    search_scale_max: float = 3.0
    conv_method: str = "direct"

    def __post_init__(self):
        if self.filter_w < 1 or self.filter_count < 1:
            raise ValueError("filter size and filter count must be positive")
        if self.padding < 1:
            raise ValueError(f"padding must be at least 1, got {self.padding}")
        if not self.search_scale_min <= 1 <= self.search_scale_max:
            raise ValueError("search scale envelope must bracket 1")
        if not self.search_scale_min <= self.padding <= self.search_scale_max:
            raise ValueError(
                f"padding {self.padding} lies outside the search scale envelope "
                f"[{self.search_scale_min}, {self.search_scale_max}]"
            )


@dataclass(frozen=True, eq=False)
class TrackState:
    frame_index: int
    box: BoundingBox
    model: TrackerModel
    bank: FilterBank
    cosine_window: np.ndarray
    params: KcfParams
    frame_shape: tuple[int, int, int]
    conv_method: str = "direct"
    response: np.ndarray | None = None


def cosine_window(h: int, w: int) -> np.ndarray:
    """Separable Hann taper: zero at the corners, close to one in the middle."""
    return np.outer(np.hanning(h), np.hanning(w))


def search_window_size(box: BoundingBox, padding: float) -> tuple[int, int]:
    """(rows, cols) of the search window for ``box``."""
    return (max(1, math.floor(box.h * padding)), max(1, math.floor(box.w * padding)))


def _window_box(center: tuple[float, float], size: tuple[int, int]) -> BoundingBox:
    rows, cols = size
    cx, cy = center
    return BoundingBox(math.floor(cx) - cols // 2, math.floor(cy) - rows // 2, cols, rows)


def _clamp_center(cx: float, cy: float, frame_shape) -> tuple[float, float]:
    h, w = frame_shape[:2]
    return (min(max(cx, 0.0), float(w)), min(max(cy, 0.0), float(h)))


def _windowed_features(frame: HyperCube, center, state_like) -> np.ndarray:
    cos = state_like.cosine_window
    window = crop_window(frame, _window_box(center, cos.shape))
    feats = extract_features(window, state_like.bank, method=state_like.conv_method)
    return feats * cos[:, :, np.newaxis]


@dataclass(frozen=True)
class _Extractor:
    bank: FilterBank
    cosine_window: np.ndarray
    conv_method: str


def init(first_frame: HyperCube, init_box: BoundingBox, config: TrackerConfig) -> TrackState:
    if init_box.w < config.filter_w or init_box.h < config.filter_w:
        raise ValueError(
            f"target box {init_box.w:g}x{init_box.h:g} is smaller than the "
            f"{config.filter_w}x{config.filter_w} filter"
        )
    cx, cy = _clamp_center(*init_box.center(), first_frame.shape)
    box = BoundingBox.from_center(cx, cy, init_box.w, init_box.h)

    size = search_window_size(box, config.padding)
    if min(size) < config.filter_w:
        raise ValueError(f"search window {size[1]}x{size[0]} is smaller than the filter")

    bank = sample_filter_bank(
        crop_window(first_frame, box), config.filter_w, config.filter_count, config.seed
    )
    params = config.kcf
    if params.label is None:
        params = params.with_label(LabelParams.for_target(box.w, box.h))
    extractor = _Extractor(bank, cosine_window(*size), config.conv_method)
    model = train(_windowed_features(first_frame, (cx, cy), extractor), params)
    return TrackState(
        frame_index=0,
        box=box,
        model=model,
        bank=bank,
        cosine_window=extractor.cosine_window,
        params=params,
        frame_shape=first_frame.shape,
        conv_method=config.conv_method,
    )


def step(state: TrackState, frame: HyperCube) -> tuple[TrackState, BoundingBox]:
    """Track into ``frame``; returns the new state and the new box."""
    if frame.shape != state.frame_shape:
        raise ValueError(f"frame shape {frame.shape} differs from the sequence's {state.frame_shape}")
    cx, cy = state.box.center()
    z = _windowed_features(frame, (cx, cy), state)
    found = detect(state.model, z, state.params)
    dy, dx = found.displacement

    cx, cy = _clamp_center(cx + dx, cy + dy, state.frame_shape)
    box = BoundingBox.from_center(cx, cy, state.box.w, state.box.h)
    x_new = _windowed_features(frame, (cx, cy), state)
    model = update(state.model, x_new, state.params)
    new_state = TrackState(
        frame_index=state.frame_index + 1,
        box=box,
        model=model,
        bank=state.bank,
        cosine_window=state.cosine_window,
        params=state.params,
        frame_shape=state.frame_shape,
        conv_method=state.conv_method,
        response=found.response,
    )
    return new_state, box


def run(
    frames: Iterable[HyperCube],
    init_box: BoundingBox,
    config: TrackerConfig,
    on_step: Callable[[TrackState], None] | None = None,
) -> list[BoundingBox]:
    """Track through a whole sequence; element 0 of the result is the start box.

    ``on_step`` sees every state after its frame is processed, frame 0
    included (whose state carries no response map).
    """
    it = iter(frames)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("cannot track an empty sequence") from None
    state = init(first, init_box, config)
    if on_step is not None:
        on_step(state)
    boxes = [init_box]
    for frame in it:
        state, box = step(state, frame)
        if on_step is not None:
            on_step(state)
        boxes.append(box)
    return boxes
