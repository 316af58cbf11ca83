"""Hyperspectral frames, bounding boxes and the on-disk sequence format.

A sequence on disk is a small text header plus one binary payload::

    width = 64
    height = 64
    bands = 8
    frames = 100
    dtype = f32le
    data = scene.bin
    wavelengths = 470, 490, 510, 530, 550, 570, 590, 610

The payload holds the frames back to back. Inside a frame the bands are
stored one after another (band-sequential, BSQ) and every band is a
row-major ``height x width`` plane. Multi-byte types are little-endian.
Integer payloads are scaled to [0, 1] on load by dividing by the type max.

Coordinates are 0-based with the origin at the top-left pixel; ``x`` runs
along columns and ``y`` along rows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence as SequenceT

import numpy as np

from .errors import HeaderParseError, TruncatedPayloadError

__all__ = [
    "DTYPES",
    "HyperCube",
    "SequenceHeader",
    "BoundingBox",
    "Sequence",
    "read_header",
    "write_header",
    "load_sequence",
    "write_sequence",
    "band",
    "crop_window",
    "read_boxes",
    "write_boxes",
]

DTYPES = {
    "u8": np.dtype("u1"),
    "u16le": np.dtype("<u2"),
    "f32le": np.dtype("<f4"),
}

REQUIRED_KEYS = ("width", "height", "bands", "frames", "dtype", "data")
BOX_HEADER = ("frame", "x", "y", "w", "h")


@dataclass(frozen=True, eq=False)
class HyperCube:
    """One frame: an ``H x W x D`` array of reflectance values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"cube must be a non-empty H x W x D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("cube contains non-finite values")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError(
                f"cube values must lie in [0, 1], got [{data.min():g}, {data.max():g}]"
            )
        if data is self.data or np.shares_memory(data, self.data):
            data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; ``(x, y)`` is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w >= 1 and self.h >= 1):
            raise ValueError(f"box extent must be at least 1x1, got {self.w}x{self.h}")

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(cx - w / 2, cy - h / 2, w, h)

    @classmethod
    def parse(cls, text: str) -> "BoundingBox":
        """Parse ``"x,y,w,h"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected x,y,w,h but got {text!r}")
        return cls(*(float(p) for p in parts))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class SequenceHeader:
    width: int
    height: int
    bands: int
    frame_count: int
    dtype: str
    data: str
    wavelengths: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dtype not in DTYPES:
            raise ValueError(f"unknown dtype {self.dtype!r}; expected one of {sorted(DTYPES)}")
        if self.frame_count < 1 or self.bands < 1 or self.width < 1 or self.height < 1:
            raise ValueError("width, height, bands and frames must all be >= 1")
        if self.wavelengths is not None:
            wl = tuple(float(v) for v in self.wavelengths)
            if len(wl) != self.bands:
                raise ValueError(f"{len(wl)} wavelengths given for {self.bands} bands")
            if any(b <= a for a, b in zip(wl, wl[1:])):
                raise ValueError("wavelengths must be strictly increasing")
            object.__setattr__(self, "wavelengths", wl)

    @property
    def frame_bytes(self) -> int:
        return self.width * self.height * self.bands * DTYPES[self.dtype].itemsize

    @property
    def payload_bytes(self) -> int:
        return self.frame_count * self.frame_bytes


def _parse_int(key, value, path, lineno):
    try:
        return int(value)
    except ValueError:
        raise HeaderParseError(f"{key} must be an integer, got {value!r}", path, lineno) from None


def read_header(path) -> SequenceHeader:
    """Parse a ``key = value`` sequence header.

    Blank lines and lines starting with ``#`` are ignored. Errors carry the
    offending line number.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise HeaderParseError(f"expected 'key = value', got {raw!r}", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in REQUIRED_KEYS and key != "wavelengths":
            raise HeaderParseError(f"unknown key {key!r}", path, lineno)
        if key in values:
            raise HeaderParseError(f"duplicate key {key!r}", path, lineno)
        if not value:
            raise HeaderParseError(f"empty value for {key!r}", path, lineno)
        values[key] = (value, lineno)

    last_line = len(text.splitlines())
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise HeaderParseError(f"missing required key(s): {', '.join(missing)}", path, last_line)

    ints = {
        k: _parse_int(k, values[k][0], path, values[k][1])
        for k in ("width", "height", "bands", "frames")
    }
    wavelengths = None
    if "wavelengths" in values:
        raw, lineno = values["wavelengths"]
        try:
            wavelengths = tuple(float(v) for v in raw.split(","))
        except ValueError:
            raise HeaderParseError(f"bad wavelength list {raw!r}", path, lineno) from None
    try:
        return SequenceHeader(
            width=ints["width"],
            height=ints["height"],
            bands=ints["bands"],
            frame_count=ints["frames"],
            dtype=values["dtype"][0],
            data=values["data"][0],
            wavelengths=wavelengths,
        )
    except ValueError as exc:
        raise HeaderParseError(str(exc), path) from None


def write_header(path, header: SequenceHeader) -> None:
    lines = [
        f"width = {header.width}",
        f"height = {header.height}",
        f"bands = {header.bands}",
        f"frames = {header.frame_count}",
        f"dtype = {header.dtype}",
        f"data = {header.data}",
    ]
    if header.wavelengths is not None:
        lines.append("wavelengths = " + ", ".join(f"{v:g}" for v in header.wavelengths))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class Sequence:
    """Lazy, memory-mapped view of an on-disk sequence.

    Frames are decoded on access, so long sequences never sit in memory at
    once. Indexing and iteration both yield :class:`HyperCube` objects.
    """

    def __init__(self, header: SequenceHeader, payload_path: Path):
        self.header = header
        self.payload_path = Path(payload_path)
        self._raw = np.memmap(
            self.payload_path,
            dtype=DTYPES[header.dtype],
            mode="r",
            shape=(header.frame_count, header.bands, header.height, header.width),
        )

    def __len__(self) -> int:
        return self.header.frame_count

    def __getitem__(self, index: int) -> HyperCube:
        if not -len(self) <= index < len(self):
            raise IndexError(f"frame {index} out of range for {len(self)} frames")
        plane = np.asarray(self._raw[index])
        return HyperCube(_decode(plane, self.header.dtype).transpose(1, 2, 0))

    def __iter__(self) -> Iterator[HyperCube]:
        for i in range(len(self)):
            yield self[i]


def _decode(raw: np.ndarray, dtype: str) -> np.ndarray:
    if dtype == "f32le":
        return raw.astype(np.float64)
    return raw.astype(np.float64) / np.iinfo(DTYPES[dtype]).max


def _encode(values: np.ndarray, dtype: str) -> np.ndarray:
    dt = DTYPES[dtype]
    if dtype == "f32le":
        return values.astype(dt)
    top = np.iinfo(dt).max
    return np.rint(np.clip(values, 0.0, 1.0) * top).astype(dt)


def load_sequence(header_path) -> Sequence:
    """Open a sequence from its header; the payload is mapped lazily."""
    header_path = Path(header_path)
    if not header_path.is_file():
        raise FileNotFoundError(f"sequence header not found: {header_path}")
    header = read_header(header_path)
    payload = header_path.parent / header.data
    if not payload.is_file():
        raise FileNotFoundError(f"sequence payload not found: {payload}")
    actual = payload.stat().st_size
    if actual != header.payload_bytes:
        raise TruncatedPayloadError(payload, header.payload_bytes, actual)
    return Sequence(header, payload)


def write_sequence(
    header_path,
    frames: Iterable[HyperCube | np.ndarray],
    dtype: str = "f32le",
    wavelengths: SequenceT[float] | None = None,
    data_name: str | None = None,
) -> SequenceHeader:
    """Write frames as header + BSQ payload; returns the written header.

    The payload file defaults to the header name with a ``.bin`` suffix,
    placed next to the header.
    """
    if dtype not in DTYPES:
        raise ValueError(f"unknown dtype {dtype!r}")
    header_path = Path(header_path)
    data_name = data_name or header_path.with_suffix(".bin").name
    payload = header_path.parent / data_name

    count = 0
    shape = None
    with open(payload, "wb") as fh:
        for frame in frames:
            arr = frame.data if isinstance(frame, HyperCube) else np.asarray(frame, dtype=np.float64)
            if arr.ndim == 2:
                arr = arr[:, :, np.newaxis]
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise ValueError(f"frame {count} has shape {arr.shape}, expected {shape}")
            fh.write(_encode(arr.transpose(2, 0, 1), dtype).tobytes(order="C"))
            count += 1
    if count == 0:
        raise ValueError("cannot write an empty sequence")

    header = SequenceHeader(
        width=shape[1],
        height=shape[0],
        bands=shape[2],
        frame_count=count,
        dtype=dtype,
        data=data_name,
        wavelengths=tuple(wavelengths) if wavelengths is not None else None,
    )
    write_header(header_path, header)
    return header


def band(cube: HyperCube, b: int) -> np.ndarray:
    """Return band ``b`` as an ``H x W`` plane (values untouched)."""
    if not 0 <= b < cube.bands:
        raise IndexError(f"band {b} out of range for a {cube.bands}-band cube")
    return cube.data[:, :, b]


def crop_window(cube: HyperCube, box: BoundingBox) -> HyperCube:
    """Cut ``box`` out of ``cube``, replicating edge pixels past the border.

    Fractional box corners are floored; the extent is ``int(w) x int(h)``.
    """
    x0 = math.floor(box.x)
    y0 = math.floor(box.y)
    rows = np.clip(np.arange(y0, y0 + int(box.h)), 0, cube.height - 1)
    cols = np.clip(np.arange(x0, x0 + int(box.w)), 0, cube.width - 1)
    return HyperCube(cube.data[np.ix_(rows, cols)])


def _format_number(v: float) -> str:
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return repr(round(v, 6))


def write_boxes(path, boxes: SequenceT[BoundingBox]) -> None:
    """Write boxes as ``frame,x,y,w,h`` CSV lines (0-based frame index)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOX_HEADER)
        for i, box in enumerate(boxes):
            writer.writerow([i, *(_format_number(v) for v in box.as_tuple())])


def read_boxes(path) -> list[BoundingBox]:
    """Read a box CSV; frame indices must run 0, 1, 2, ... without gaps."""
    path = Path(path)
    boxes: list[BoundingBox] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip() == "frame":
                continue
            if len(row) != 5:
                raise HeaderParseError(f"expected 5 fields, got {len(row)}", path, lineno)
            try:
                index = int(row[0])
                box = BoundingBox(*(float(v) for v in row[1:]))
            except ValueError as exc:
                raise HeaderParseError(str(exc), path, lineno) from None
            if index != len(boxes):
                raise HeaderParseError(
                    f"frame index {index} out of order (expected {len(boxes)})", path, lineno
                )
            boxes.append(box)
    if not boxes:
        raise HeaderParseError("no boxes found", path)
    return boxes
