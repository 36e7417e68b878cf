"""Frame-level bitstream: header, CTU loop, split codes and leaf payloads.

Layout::

    "FRD1" | version u8 | width u32le | height u32le | ctu_size u16le
    | base_qp u8 | flags u8 (bit 0 delta-QP on, bits 1-3 delta range)
    then one byte-aligned payload per CTU in raster order; each payload is
    the partition tree in pre-order, a 3-bit split code per node followed,
    at leaves, by the leaf payload.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from ..codec.bits import BitReader, BitstreamError, BitWriter
from ..codec.block import decode_leaf, write_leaf
from ..codec.intra import Context
from ..codec.transform import SUPPORTED_SIZES
from ..frame_io import Frame, pad_to_multiple
from .config import EncoderConfig
from .lagrangian import lambda_from_qp
from .partition import SPLIT_BITS, PartitionNode, SplitType, child_rects, search_ctu

MAGIC = b"FRD1"
VERSION = 1
_HEADER = struct.Struct("<4sBIIHBB")


@dataclass
class EncodeStats:
    width: int
    height: int
    total_bits: int
    ctu_bits: list
    recon: Frame
    sse: float
    trees: list = field(default_factory=list, repr=False)

    @property
    def bpp(self) -> float:
        return self.total_bits / (self.width * self.height)

    @property
    def psnr(self) -> float:
        mse = self.sse / (self.width * self.height)
        return math.inf if mse == 0 else 10.0 * math.log10(255.0 ** 2 / mse)


def write_tree(writer: BitWriter, node: PartitionNode) -> None:
    writer.write(int(node.split), SPLIT_BITS)
    if node.split == SplitType.NONE:
        write_leaf(writer, node.leaf.cfg.intra_mode, node.leaf.delta_qp, node.leaf.levels)
    else:
        for child in node.children:
            write_tree(writer, child)


def encode_frame(frame: Frame, cfg: EncoderConfig):
    """Encode ``frame``; returns ``(bitstream_bytes, EncodeStats)``."""
    lam = lambda_from_qp(cfg.base_qp, cfg.k)
    ctu = cfg.ctu_size
    padded = pad_to_multiple(frame.samples, ctu)
    recon = np.zeros_like(padded)
    flags = (1 | (cfg.delta_qp_range << 1)) if cfg.delta_qp_range > 0 else 0
    out = bytearray(_HEADER.pack(MAGIC, VERSION, frame.width, frame.height, ctu,
                                 cfg.base_qp, flags))
    ctu_bits, trees = [], []
    for y in range(0, padded.shape[0], ctu):
        for x in range(0, padded.shape[1], ctu):
            tree = search_ctu(padded, (x, y, ctu, ctu), cfg, lam)
            writer = BitWriter()
            write_tree(writer, tree)
            writer.align()
            out += writer.to_bytes()
            ctu_bits.append(len(writer))
            recon[y:y + ctu, x:x + ctu] = tree.recon
            trees.append(tree)
    cropped = recon[:frame.height, :frame.width]
    diff = frame.samples.astype(np.int64) - cropped
    stats = EncodeStats(frame.width, frame.height, 8 * len(out), ctu_bits,
                        Frame.from_array(cropped.copy()), float(np.sum(diff * diff)), trees)
    return bytes(out), stats


def _check_split(split: SplitType, w: int, h: int) -> None:
    for _, _, cw, ch in child_rects(0, 0, w, h, split):
        if cw not in SUPPORTED_SIZES or ch not in SUPPORTED_SIZES:
            raise BitstreamError(f"split {split.name} of {w}x{h} gives unsupported {cw}x{ch}")
    if split == SplitType.QUAD and w != h:
        raise BitstreamError(f"quad split of non-square {w}x{h} block")


def _decode_tree(reader, recon, x, y, w, h, base_qp, delta_on):
    code = reader.read(SPLIT_BITS)
    try:
        split = SplitType(code)
    except ValueError:
        raise BitstreamError(f"invalid split code {code}") from None
    if split == SplitType.NONE:
        ctx = Context.from_recon(recon, x, y, w, h)
        recon[y:y + h, x:x + w], _ = decode_leaf(reader, ctx, w, h, base_qp, delta_on)
        return
    _check_split(split, w, h)
    for cx, cy, cw, ch in child_rects(x, y, w, h, split):
        _decode_tree(reader, recon, cx, cy, cw, ch, base_qp, delta_on)


def read_header(data: bytes):
    if len(data) < _HEADER.size:
        raise BitstreamError("truncated header")
    magic, version, width, height, ctu, base_qp, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BitstreamError("bad magic")
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}")
    if width < 1 or height < 1 or ctu not in SUPPORTED_SIZES or ctu < 8 or base_qp > 51:
        raise BitstreamError("invalid header fields")
    return width, height, ctu, base_qp, bool(flags & 1), (flags >> 1) & 7


def decode_frame(data: bytes) -> Frame:
    """Decode a bitstream; independent of the distortion kind used to encode it."""
    width, height, ctu, base_qp, delta_on, _ = read_header(data)
    reader = BitReader(data[_HEADER.size:])
    ph, pw = -(-height // ctu) * ctu, -(-width // ctu) * ctu
    out = np.zeros((ph, pw), dtype=np.uint8)
    for y in range(0, ph, ctu):
        for x in range(0, pw, ctu):
            buf = np.zeros((ctu, ctu), dtype=np.uint8)
            _decode_tree(reader, buf, 0, 0, ctu, ctu, base_qp, delta_on)
            reader.align()
            out[y:y + ctu, x:x + ctu] = buf
    return Frame.from_array(out[:height, :width].copy())
