"""Four-mode intra prediction from the reconstructed top row and left column."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

UNAVAILABLE = _kernels.UNAVAILABLE


class IntraMode(enum.IntEnum):
    DC = 0
    HORIZONTAL = 1
    VERTICAL = 2
    PLANAR = 3


@dataclass(frozen=True)
class Context:
    """Neighbouring reconstructed samples; ``None`` marks an unavailable side."""

    top: Optional[np.ndarray] = None
    left: Optional[np.ndarray] = None

    @classmethod
    def from_recon(cls, recon: np.ndarray, x: int, y: int, w: int, h: int) -> "Context":
        """Context for the block at (x, y) inside a CTU-local reconstruction buffer.

        Rows/columns outside the buffer (i.e. outside the CTU) are unavailable.
        """
        top = recon[y - 1, x:x + w] if y > 0 else None
        left = recon[y:y + h, x - 1] if x > 0 else None
        return cls(top, left)


def _side(samples, n):
    if samples is None:
        return np.full(n, UNAVAILABLE, dtype=np.int64)
    samples = np.asarray(samples, dtype=np.int64)
    if samples.shape != (n,):
        raise ValueError(f"context side has {samples.shape[0]} samples, expected {n}")
    return samples


def predict_all(ctx: Context, w: int, h: int) -> np.ndarray:
    """Predictions for every mode, stacked in mode order: ``(4, h, w)``.

    DC averages the available neighbours (128 with none); HORIZONTAL and
    VERTICAL copy the left column / top row; PLANAR averages a vertical and a
    horizontal linear ramp towards the last top and last left samples.
    Missing sides read as 128.
    """
    return _kernels.predict_modes(_side(ctx.top, w), _side(ctx.left, h),
                                  ctx.top is not None, ctx.left is not None, w, h)


def predict_intra(ctx: Context, mode, w: int, h: int) -> np.ndarray:
    return predict_all(ctx, w, h)[IntraMode(mode)]
