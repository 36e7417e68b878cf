"""Coding of a single block: predict, transform, quantize, entropy-code.

Leaf payload layout (MSB first)::

    mode        2 bits
    delta_qp    se(v), only when delta-QP signalling is enabled
    n_coded     ue(v), one past the last significant zigzag position (0 = none)
    per coded position: ue(|level|), then a sign bit when level != 0
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..frame_io import Block
from . import _kernels
from .bits import BitReader, BitstreamError, BitWriter, se_length
from .intra import Context, IntraMode, predict_intra
from .transform import QP_MAX, QP_MIN, check_qp, dct_matrix, qstep

MODE_BITS = 2


@dataclass(frozen=True)
class ParamConfig:
    intra_mode: IntraMode
    qp: int

    def __post_init__(self):
        object.__setattr__(self, "intra_mode", IntraMode(self.intra_mode))
        check_qp(self.qp)


@lru_cache(maxsize=None)
def zigzag_order(h: int, w: int) -> np.ndarray:
    """Flat raster indices of an ``h`` x ``w`` block in zigzag scan order."""
    order = []
    for s in range(h + w - 1):
        ys = range(min(s, h - 1), max(0, s - w + 1) - 1, -1)
        coords = [(y, s - y) for y in ys]
        if s % 2:
            coords.reverse()
        order.extend(y * w + x for y, x in coords)
    out = np.array(order, dtype=np.intp)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class EncodedBlock:
    """One coded candidate: reconstruction, exact bit count and coded levels."""

    recon: Block
    bits: int
    cfg: ParamConfig
    levels: np.ndarray  # zigzag-ordered, truncated after the last significant level
    delta_qp: Optional[int] = None

    @property
    def payload(self) -> list[int]:
        w = BitWriter()
        write_leaf(w, self.cfg.intra_mode, self.delta_qp, self.levels)
        return w.bits()


def write_leaf(writer: BitWriter, mode, delta_qp: Optional[int], levels) -> None:
    writer.write(int(mode), MODE_BITS)
    if delta_qp is not None:
        writer.write_se(int(delta_qp))
    writer.write_ue(len(levels))
    for level in levels:
        level = int(level)
        writer.write_ue(abs(level))
        if level:
            writer.write_bit(level < 0)


def reconstruct(pred: np.ndarray, levels_2d: np.ndarray, qp: int) -> np.ndarray:
    """``clip(pred + round(idct(level * qstep)), 0, 255)``; the decoder's path."""
    h, w = pred.shape
    return _kernels.reconstruct_block(np.ascontiguousarray(pred, dtype=np.int64),
                                      np.ascontiguousarray(levels_2d, dtype=np.int64),
                                      float(qstep(qp)), dct_matrix(h), dct_matrix(w))


def code_candidates(orig: np.ndarray, preds: np.ndarray, qps, side_bits):
    """Code every (prediction, qp) pair for one block, prediction-major.

    ``preds`` is ``(P, h, w)``; ``qps`` and ``side_bits`` have length ``Q``.
    Returns ``(levels_zz, n_coded, bits, sse, recon)`` for the ``P*Q``
    candidates; ``levels_zz`` rows hold every level in zigzag order.
    """
    h, w = orig.shape
    return _kernels.code_candidates(
        np.ascontiguousarray(orig, dtype=np.int64), np.ascontiguousarray(preds, dtype=np.int64),
        np.asarray(qstep(np.asarray(qps)), dtype=np.float64).reshape(-1),
        np.asarray(side_bits, dtype=np.int64).reshape(-1), MODE_BITS,
        dct_matrix(h), dct_matrix(w), zigzag_order(h, w))


def _levels_to_2d(levels_prefix: np.ndarray, h: int, w: int) -> np.ndarray:
    flat = np.zeros(h * w, dtype=np.int64)
    flat[zigzag_order(h, w)[:len(levels_prefix)]] = levels_prefix
    return flat.reshape(h, w)


def encode_block(orig: Block, ctx: Context, cfg: ParamConfig,
                 base_qp: Optional[int] = None) -> EncodedBlock:
    """Code ``orig`` under ``cfg``. Passing ``base_qp`` enables delta-QP signalling."""
    samples = np.asarray(orig.samples, dtype=np.int64)
    delta = None if base_qp is None else cfg.qp - int(base_qp)
    side = 0 if delta is None else se_length(delta)
    pred = predict_intra(ctx, cfg.intra_mode, orig.width, orig.height)
    zz, n_coded, bits, _, recon = code_candidates(samples, pred[None], [cfg.qp], [side])
    return EncodedBlock(Block(orig.x, orig.y, orig.width, orig.height, recon[0]), int(bits[0]),
                        cfg, zz[0, :n_coded[0]].copy(), delta)


def decode_leaf(reader: BitReader, ctx: Context, w: int, h: int, base_qp: int,
                delta_qp_enabled: bool = False):
    """Parse one leaf payload. Returns ``(recon, ParamConfig)``."""
    mode = reader.read(MODE_BITS)
    try:
        mode = IntraMode(mode)
    except ValueError:
        raise BitstreamError(f"invalid intra mode {mode}") from None
    qp = int(base_qp)
    if delta_qp_enabled:
        qp += reader.read_se()
    if not QP_MIN <= qp <= QP_MAX:
        raise BitstreamError(f"decoded qp {qp} out of range")
    n_coded = reader.read_ue()
    if n_coded > w * h:
        raise BitstreamError(f"coded coefficient count {n_coded} exceeds block size {w * h}")
    levels = np.zeros(n_coded, dtype=np.int64)
    for i in range(n_coded):
        mag = reader.read_ue()
        if mag and reader.read(1):
            mag = -mag
        levels[i] = mag
    pred = predict_intra(ctx, mode, w, h)
    recon = reconstruct(pred, _levels_to_2d(levels, h, w), qp)
    return recon, ParamConfig(mode, qp)


def decode_block(reader: BitReader, ctx: Context, w: int, h: int, base_qp: int,
                 delta_qp_enabled: bool = False) -> Block:
    recon, _ = decode_leaf(reader, ctx, w, h, base_qp, delta_qp_enabled)
    return Block.from_array(recon)

