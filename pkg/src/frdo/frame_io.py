"""Grayscale frame storage and rectangular block views.

Frames are 8-bit luminance rasters kept as ``(height, width)`` uint8 arrays.
Only binary PGM (P5, maxval 255) is read or written.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np


class PGMError(ValueError):
    """Base class for PGM parsing failures."""


class MalformedHeaderError(PGMError):
    pass


class UnsupportedMaxvalError(PGMError):
    pass


class TruncatedPayloadError(PGMError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    width: int
    height: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        if samples.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} samples, got {samples.size}")
        if samples.dtype != np.uint8:
            if samples.size and (samples.min() < 0 or samples.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            samples = samples.astype(np.uint8)
        samples = samples.reshape(self.height, self.width)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_array(cls, array) -> "Frame":
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {array.shape}")
        return cls(array.shape[1], array.shape[0], array)

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.samples, other.samples))

    def __repr__(self):
        return f"Frame({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class Block:
    """A rectangle cut from a frame; ``x``/``y`` are frame coordinates."""

    x: int
    y: int
    width: int
    height: int
    samples: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"block dimensions must be positive, got {self.width}x{self.height}")
        samples = np.asarray(self.samples)
        if samples.size != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} samples, got {samples.size}")
        object.__setattr__(self, "samples", samples.reshape(self.height, self.width))

    @classmethod
    def from_array(cls, array, x: int = 0, y: int = 0) -> "Block":
        array = np.asarray(array)
        return cls(x, y, array.shape[1], array.shape[0], array)

    def __eq__(self, other):
        if not isinstance(other, Block):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.samples, other.samples))

    def __repr__(self):
        return f"Block({self.width}x{self.height} @ {self.x},{self.y})"


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int):
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeaderError("malformed header: unexpected end of header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def parse_pgm(data: bytes) -> Frame:
    if not data.startswith(b"P5"):
        raise MalformedHeaderError("malformed header: missing P5 magic")
    (magic, w, h, maxval), pos = _header_tokens(data, 4)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise MalformedHeaderError("malformed header: non-numeric field") from None
    if magic != b"P5" or width < 1 or height < 1:
        raise MalformedHeaderError("malformed header: bad magic or dimensions")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MalformedHeaderError("malformed header: missing separator after maxval")
    payload = data[pos + 1:]
    if len(payload) < width * height:
        raise TruncatedPayloadError(
            f"truncated payload: expected {width * height} bytes, got {len(payload)}")
    samples = np.frombuffer(payload, dtype=np.uint8, count=width * height)
    return Frame(width, height, samples.copy())


def load_pgm(path) -> Frame:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def pgm_bytes(frame: Frame) -> bytes:
    header = b"P5\n%d %d\n255\n" % (frame.width, frame.height)
    return header + np.ascontiguousarray(frame.samples, dtype=np.uint8).tobytes()


def save_pgm(frame: Frame, path) -> None:
    with open(os.fspath(path), "wb") as fh:
        fh.write(pgm_bytes(frame))


def extract_block(frame: Frame, x: int, y: int, w: int, h: int) -> Block:
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > frame.width or y + h > frame.height:
        raise ValueError(
            f"rectangle ({x},{y},{w},{h}) exceeds frame bounds {frame.width}x{frame.height}")
    return Block(x, y, w, h, frame.samples[y:y + h, x:x + w].copy())


def zero_pad_block(block: Block, target_w: int, target_h: int) -> Block:
    """Place ``block`` at the top-left of a zero-filled ``target_w`` x ``target_h`` block."""
    if target_w < block.width or target_h < block.height:
        raise ValueError(
            f"target {target_w}x{target_h} smaller than block {block.width}x{block.height}")
    if target_w == block.width and target_h == block.height:
        return block
    out = np.zeros((target_h, target_w), dtype=block.samples.dtype)
    out[:block.height, :block.width] = block.samples
    return Block(block.x, block.y, target_w, target_h, out)


def pad_to_multiple(samples: np.ndarray, multiple: int) -> np.ndarray:
    """Edge-replicate ``samples`` on the right/bottom up to a multiple of ``multiple``."""
    h, w = samples.shape
    ph = -h % multiple
    pw = -w % multiple
    if ph == 0 and pw == 0:
        return samples
    return np.pad(samples, ((0, ph), (0, pw)), mode="edge")
