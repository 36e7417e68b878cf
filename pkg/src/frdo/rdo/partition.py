"""Recursive quad/binary/ternary partition search and its brute-force oracle."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..distortion import DistortionKind
from ..frame_io import Block, Frame
from ..codec.block import EncodedBlock, ParamConfig
from ..codec.intra import Context
from .config import EncoderConfig
from .lagrangian import RDCost, best_leaf_config, evaluate_candidates, rd_cost
from ..feature_net import extract_features

SPLIT_BITS = 3


class SplitType(enum.IntEnum):
    NONE = 0
    QUAD = 1
    BIN_H = 2  # horizontal boundary: top/bottom halves
    BIN_V = 3  # vertical boundary: left/right halves
    TRI_H = 4  # heights 1:2:1
    TRI_V = 5  # widths 1:2:1


def legal_splits(w: int, h: int, mtt_depth: int, min_cu: int, max_mtt_depth: int):
    """Splits allowed for a ``w`` x ``h`` node, in tie-break order.

    Quad splits are only available before any binary/ternary split.
    """
    out = []
    if w == h and w >= 2 * min_cu and mtt_depth == 0:
        out.append(SplitType.QUAD)
    if mtt_depth < max_mtt_depth:
        if h >= 2 * min_cu:
            out.append(SplitType.BIN_H)
        if w >= 2 * min_cu:
            out.append(SplitType.BIN_V)
        if h % 4 == 0 and h >= 4 * min_cu:
            out.append(SplitType.TRI_H)
        if w % 4 == 0 and w >= 4 * min_cu:
            out.append(SplitType.TRI_V)
    return out


def child_rects(x: int, y: int, w: int, h: int, split: SplitType):
    """Child rectangles in coding (raster) order."""
    if split == SplitType.QUAD:
        hw, hh = w // 2, h // 2
        return [(x, y, hw, hh), (x + hw, y, hw, hh), (x, y + hh, hw, hh), (x + hw, y + hh, hw, hh)]
    if split == SplitType.BIN_H:
        return [(x, y, w, h // 2), (x, y + h // 2, w, h // 2)]
    if split == SplitType.BIN_V:
        return [(x, y, w // 2, h), (x + w // 2, y, w // 2, h)]
    if split == SplitType.TRI_H:
        q = h // 4
        return [(x, y, w, q), (x, y + q, w, 2 * q), (x, y + 3 * q, w, q)]
    if split == SplitType.TRI_V:
        q = w // 4
        return [(x, y, q, h), (x + q, y, 2 * q, h), (x + 3 * q, y, q, h)]
    raise ValueError(f"{split!r} has no children")


def child_depth(split: SplitType, mtt_depth: int) -> int:
    return mtt_depth if split == SplitType.QUAD else mtt_depth + 1


@dataclass(eq=False)
class PartitionNode:
    x: int
    y: int
    w: int
    h: int
    split: SplitType
    children: list = field(default_factory=list)
    leaf: Optional[EncodedBlock] = None
    cost: Optional[RDCost] = None
    recon: Optional[np.ndarray] = field(default=None, repr=False)
    sse: float = 0.0  # pixel SSE of ``recon``

    @property
    def rect(self):
        return (self.x, self.y, self.w, self.h)

    @property
    def leaf_cfg(self) -> Optional[ParamConfig]:
        return self.leaf.cfg if self.leaf is not None else None

    def leaves(self):
        if self.split == SplitType.NONE:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def shape(self):
        """Nested ``(split, children)`` description, comparable across searches."""
        return (int(self.split), tuple(c.shape() for c in self.children))


def _region_samples(frame, rect):
    x, y, w, h = rect
    samples = frame.samples if isinstance(frame, Frame) else np.asarray(frame)
    if x < 0 or y < 0 or w < 1 or h < 1 or y + h > samples.shape[0] or x + w > samples.shape[1]:
        raise ValueError(f"rectangle {rect} outside frame")
    return samples[y:y + h, x:x + w].astype(np.int64)


class _RegionCoder:
    """Shared state for coding one CTU-like region: original samples, the
    reconstruction buffer that supplies prediction context, and a cache of
    original-block feature maps."""

    def __init__(self, orig: np.ndarray, origin, cfg: EncoderConfig, lam,
                 qp_list, base_qp: Optional[int]):
        self.orig = orig
        self.origin = origin
        self.cfg = cfg
        self.lam = lam
        self.qp_list = qp_list
        self.base_qp = base_qp
        self.recon = np.zeros(orig.shape, dtype=np.uint8)
        self._features = {}

    def orig_features(self, x, y, w, h):
        key = (x, y, w, h)
        if key not in self._features:
            self._features[key] = extract_features(self.orig[y:y + h, x:x + w], self.cfg.network)
        return self._features[key]

    def code_leaf(self, x, y, w, h) -> PartitionNode:
        ctx = Context.from_recon(self.recon, x, y, w, h)
        block = Block(self.origin[0] + x, self.origin[1] + y, w, h, self.orig[y:y + h, x:x + w])
        _, enc, cost = best_leaf_config(block, ctx, self.qp_list, self.lam, self.base_qp)
        self.recon[y:y + h, x:x + w] = enc.recon.samples
        return PartitionNode(x, y, w, h, SplitType.NONE, leaf=enc, sse=cost.distortion)

    def compare(self, x, y, w, h, candidates, d_sse=None):
        needs_features = self.cfg.kind.uses_features and len(candidates) > 1
        return evaluate_candidates(
            self.orig[y:y + h, x:x + w], candidates, self.cfg.kind, self.lam, self.cfg.network,
            self.orig_features(x, y, w, h) if needs_features else None, d_sse)

    def search(self, x, y, w, h, mtt_depth) -> PartitionNode:
        leaf = self.code_leaf(x, y, w, h)
        leaf.recon = self.recon[y:y + h, x:x + w].copy()
        options = [(leaf, SPLIT_BITS + leaf.leaf.bits)]
        for split in legal_splits(w, h, mtt_depth, self.cfg.min_cu, self.cfg.max_mtt_depth):
            d = child_depth(split, mtt_depth)
            children = [self.search(cx, cy, cw, ch, d)
                        for cx, cy, cw, ch in child_rects(x, y, w, h, split)]
            node = PartitionNode(x, y, w, h, split, children,
                                 recon=self.recon[y:y + h, x:x + w].copy(),
                                 sse=sum(c.sse for c in children))
            options.append((node, SPLIT_BITS + sum(c.cost.rate_bits for c in children)))
        if len(options) == 1:
            leaf.cost = rd_cost(leaf.sse, options[0][1], self.lam)
        else:
            idx, _, costs = self.compare(x, y, w, h, [(n.recon, rate) for n, rate in options],
                                         [n.sse for n, _ in options])
            node = options[idx][0]
            node.cost = costs[idx]
            self.recon[y:y + h, x:x + w] = node.recon
            return node
        return leaf


def partition_region(frame, rect, cfg: EncoderConfig, lam, mtt_depth: int = 0,
                     qp_list=None, base_qp: Optional[int] = None) -> PartitionNode:
    """Best partition tree for ``rect``, which is treated as a CTU.

    Every node compares the unsplit candidate (listed first, the normalization
    anchor) against each legal split whose children were searched recursively
    in coding order.
    """
    x, y, w, h = rect
    if w < cfg.min_cu or h < cfg.min_cu:
        raise ValueError(f"rectangle {rect} smaller than min_cu {cfg.min_cu}")
    orig = _region_samples(frame, rect)
    if qp_list is None:
        qp_list = [cfg.base_qp]
    coder = _RegionCoder(orig, (x, y), cfg, lam, qp_list, base_qp)
    return coder.search(0, 0, w, h, mtt_depth)


def delta_qp_search(frame, ctu_rect, cfg: EncoderConfig, lam) -> PartitionNode:
    """Partition search where every leaf also tries qp in base +- range.

    ``lam`` stays the base-QP multiplier; leaf rates include the delta code.
    A zero range signals no deltas at all and reduces to the plain search.
    """
    if cfg.delta_qp_range == 0:
        return partition_region(frame, ctu_rect, cfg, lam)
    return partition_region(frame, ctu_rect, cfg, lam, qp_list=cfg.qp_list(),
                            base_qp=cfg.base_qp)


def search_ctu(frame, rect, cfg: EncoderConfig, lam) -> PartitionNode:
    return delta_qp_search(frame, rect, cfg, lam)


# -- brute force -----------------------------------------------------------

def enumerate_shapes(w: int, h: int, mtt_depth: int, min_cu: int, max_mtt_depth: int):
    """Every legal tree as nested ``(split, children)`` tuples, unsplit first."""
    yield (int(SplitType.NONE), ())
    for split in legal_splits(w, h, mtt_depth, min_cu, max_mtt_depth):
        d = child_depth(split, mtt_depth)
        per_child = [list(enumerate_shapes(cw, ch, d, min_cu, max_mtt_depth))
                     for _, _, cw, ch in child_rects(0, 0, w, h, split)]
        for combo in itertools.product(*per_child):
            yield (int(split), tuple(combo))


def count_shapes(w: int, h: int, mtt_depth: int, min_cu: int, max_mtt_depth: int) -> int:
    total = 1
    for split in legal_splits(w, h, mtt_depth, min_cu, max_mtt_depth):
        d = child_depth(split, mtt_depth)
        n = 1
        for _, _, cw, ch in child_rects(0, 0, w, h, split):
            n *= count_shapes(cw, ch, d, min_cu, max_mtt_depth)
        total += n
    return total


def _code_shape(coder: _RegionCoder, shape, x, y, w, h) -> int:
    split = SplitType(shape[0])
    if split == SplitType.NONE:
        return SPLIT_BITS + coder.code_leaf(x, y, w, h).leaf.bits
    rate = SPLIT_BITS
    for sub, (cx, cy, cw, ch) in zip(shape[1], child_rects(x, y, w, h, split)):
        rate += _code_shape(coder, sub, cx, cy, cw, ch)
    return rate


def exhaustive_partition_oracle(frame, rect, cfg: EncoderConfig, lam, qp_list=None,
                                base_qp: Optional[int] = None, max_trees: int = 5000):
    """Code every legal tree of ``rect`` and return ``(best_shape, best_cost)``.

    All trees are scored together in one comparison (unsplit tree first as the
    anchor), so feature-based costs share one normalization.
    """
    x, y, w, h = rect
    n = count_shapes(w, h, 0, cfg.min_cu, cfg.max_mtt_depth)
    if n > max_trees:
        raise ValueError(f"region too large: {n} trees exceed the guard of {max_trees}")
    orig = _region_samples(frame, rect)
    if qp_list is None:
        qp_list = [cfg.base_qp]
    shapes, candidates = [], []
    coder = _RegionCoder(orig, (x, y), cfg, lam, qp_list, base_qp)
    for shape in enumerate_shapes(w, h, 0, cfg.min_cu, cfg.max_mtt_depth):
        coder.recon[:] = 0
        rate = _code_shape(coder, shape, 0, 0, w, h)
        shapes.append(shape)
        candidates.append((coder.recon.copy(), rate))
    idx, _, costs = coder.compare(0, 0, w, h, candidates)
    return shapes[idx], costs[idx]
