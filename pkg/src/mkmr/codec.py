"""Grayscale image <-> stream of field elements.

Each row is scanned by a window of ``t`` consecutive pixels that moves one
pixel at a time and wraps around the row end, so an ``r x c`` image yields
``r*c`` elements and every pixel sits in ``t`` windows.  Window bytes are
packed big-endian (first pixel most significant).  Decoding reads each pixel
from the window in which it is the second byte: small additive noise can
carry into that byte by at most one.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError
from .field import DEFAULT_FIELD, FieldParams, centered_array
from .sampler import Rng, sample_uniform_vector
from .scheme import MessageMatrix


@dataclass(eq=False)
class GrayImage:
    pixels: np.ndarray  # uint8, shape (r, c)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2 or self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D image, got shape {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            if self.pixels.min() < 0 or self.pixels.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            self.pixels = self.pixels.astype(np.uint8)

    @property
    def r(self) -> int:
        return self.pixels.shape[0]

    @property
    def c(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(eq=False)
class WindowStream:
    r: int
    c: int
    t: int
    elems: np.ndarray  # int64, length r*c, row-major by window start

    def __post_init__(self):
        self.elems = np.asarray(self.elems, dtype=np.int64)
        if self.elems.shape != (self.r * self.c,):
            raise ValueError(f"stream has {self.elems.size} elements, expected {self.r * self.c}")

    def __len__(self) -> int:
        return self.r * self.c


def window_width(p: FieldParams | int) -> int:
    """Whole pixels per window: floor(floor(log2 q) / 8)."""
    q = p.q if isinstance(p, FieldParams) else int(p)
    log_q = q.bit_length() - 1
    if log_q < 16:
        raise ValueError(f"q = {q} too small for a two-byte window")
    return log_q // 8


def encode_image(img: GrayImage, t: int) -> WindowStream:
    if img.c < t:
        raise ValueError(f"image width {img.c} smaller than window {t}")
    px = img.pixels.astype(np.int64)
    acc = np.zeros_like(px)
    for u in range(t):
        acc = (acc << 8) | np.roll(px, -u, axis=1)
    return WindowStream(img.r, img.c, t, acc.ravel())


def _clamp(ws: WindowStream, q: int) -> np.ndarray:
    vals = centered_array(ws.elems, q).reshape(ws.r, ws.c)
    return np.clip(vals, 0, (1 << (8 * ws.t)) - 1)


def decode_stream(ws: WindowStream, q: int = DEFAULT_FIELD.q) -> GrayImage:
    """Pixel ``x`` = second byte of the window starting at ``x - 1``.

    Elements are first centered and clamped to ``[0, 2^(8t))`` so noise that
    wrapped a near-zero window past 0 lands back at 0.  With ``t < 3`` there
    is no middle byte; pixel ``x`` is then the first byte of window ``x``.
    """
    vals = _clamp(ws, q)
    if ws.t >= 3:
        byte = (vals >> (8 * (ws.t - 2))) & 0xFF
        return GrayImage(np.roll(byte, 1, axis=1).astype(np.uint8))
    return GrayImage(((vals >> (8 * (ws.t - 1))) & 0xFF).astype(np.uint8))


def decode_vote(ws: WindowStream, q: int = DEFAULT_FIELD.q) -> GrayImage:
    """Diagnostic decode: median of the pixel's value across all ``t`` windows."""
    vals = _clamp(ws, q)
    votes = []
    for u in range(ws.t):
        byte = (vals >> (8 * (ws.t - 1 - u))) & 0xFF
        votes.append(np.roll(byte, u, axis=1))
    return GrayImage(np.median(np.stack(votes), axis=0).round().astype(np.uint8))


def circular_error(a: GrayImage, b: GrayImage) -> np.ndarray:
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return np.minimum(d, 256 - d)


def pack_messages(
    streams: list,
    m: int,
    rng: Rng,
    field: FieldParams = DEFAULT_FIELD,
    l: int | None = None,
) -> MessageMatrix:
    """Stack up to ``m`` streams into a message matrix.

    Short streams are padded with uniform elements and every row beyond the
    supplied streams is uniform filler with recorded length 0.
    """
    if len(streams) > m:
        raise CapacityError(f"{len(streams)} streams but only {m} recipients")
    rows = [np.asarray(s.elems if isinstance(s, WindowStream) else s, dtype=np.int64) for s in streams]
    if l is None:
        if not rows:
            raise ValueError("stream length l must be given when no streams are supplied")
        l = max(len(r) for r in rows)
    if any(len(r) > l for r in rows):
        raise ValueError("stream longer than l")
    entries = sample_uniform_vector(field, m * l, rng).reshape(m, l)
    lengths = [0] * m
    for j, r in enumerate(rows):
        entries[j, : len(r)] = r
        lengths[j] = len(r)
    return MessageMatrix(entries, lengths, field)


def pattern_image(r: int, c: int, variant: int = 0) -> GrayImage:
    """Deterministic structured image (gradients, rings, bars)."""
    y, x = np.mgrid[0:r, 0:c].astype(np.float64)
    kind = variant % 4
    if kind == 0:
        img = 255 * (x + y) / max(r + c - 2, 1)
    elif kind == 1:
        d = np.hypot(y - r / 2, x - c / 2)
        img = 127.5 + 127.5 * np.cos(d / 3.0)
    elif kind == 2:
        img = np.where(((x // 8) + (y // 8)) % 2 == 0, 30, 220)
    else:
        img = 255 * np.sin(np.pi * x / c) ** 2 * (y / max(r - 1, 1))
    return GrayImage(np.clip(np.rint(img), 0, 255).astype(np.uint8))


_PGM_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def read_pgm(path: str | Path) -> GrayImage:
    blob = Path(path).read_bytes()
    match = _PGM_HEADER.match(blob)
    if not match:
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    c, r, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise ValueError(f"{path}: maxval {maxval} unsupported, need 255")
    data = blob[match.end() : match.end() + r * c]
    if len(data) != r * c:
        raise ValueError(f"{path}: truncated pixel data")
    return GrayImage(np.frombuffer(data, dtype=np.uint8).reshape(r, c).copy())


def write_pgm(img: GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (img.c, img.r) + img.pixels.tobytes())


_RAW_HEAD = struct.Struct("<II")


def read_raw(path: str | Path) -> GrayImage:
    """Raw format: u32 rows | u32 cols | rows*cols bytes."""
    blob = Path(path).read_bytes()
    if len(blob) < _RAW_HEAD.size:
        raise ValueError(f"{path}: truncated raw header")
    r, c = _RAW_HEAD.unpack_from(blob)
    data = blob[_RAW_HEAD.size :]
    if len(data) != r * c:
        raise ValueError(f"{path}: expected {r * c} pixel bytes, found {len(data)}")
    return GrayImage(np.frombuffer(data, dtype=np.uint8).reshape(r, c).copy())


def write_raw(img: GrayImage, path: str | Path) -> None:
    Path(path).write_bytes(_RAW_HEAD.pack(img.r, img.c) + img.pixels.tobytes())


def read_image(path: str | Path) -> GrayImage:
    with open(path, "rb") as fh:
        magic = fh.read(2)
    return read_pgm(path) if magic == b"P5" else read_raw(path)
