"""Lagrange multiplier, RD costs and candidate selection."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..codec.bits import se_length
from ..codec.block import EncodedBlock, ParamConfig, code_candidates
from ..codec.intra import Context, IntraMode, predict_all
from ..codec.transform import check_qp
from ..distortion import (FEATURE_METRICS, CandidateDistortion, DistortionKind,
                          effective_distortion, normalize_candidates, sse_pixel)
from ..feature_net import FeatureMap, Network, extract_features
from ..frame_io import Block

DEFAULT_K = 0.57

_faults: set = set()


@contextlib.contextmanager
def inject_fault(name: str):
    """Deliberately break a stage (``"normalization"``) so self-checks can be tested."""
    _faults.add(name)
    try:
        yield
    finally:
        _faults.discard(name)


@dataclass(frozen=True)
class Lambda:
    value: float
    k: float
    qp: int

    def __float__(self):
        return self.value


def lambda_from_qp(qp: int, k: float = DEFAULT_K) -> Lambda:
    check_qp(qp)
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    return Lambda(k * 2.0 ** ((qp - 12) / 3.0), k, int(qp))


@dataclass(frozen=True)
class RDCost:
    distortion: float
    rate_bits: int
    j: float = field(init=False)
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "j", self.distortion + self.lam * self.rate_bits)


def rd_cost(distortion: float, rate_bits: int, lam) -> RDCost:
    if distortion < 0 or rate_bits < 0:
        raise ValueError("distortion and rate must be non-negative")
    return RDCost(float(distortion), int(rate_bits), lam=float(lam))


def best_leaf_config(orig: Block, ctx: Context, qp_list: Sequence[int], lam,
                     base_qp: Optional[int] = None):
    """Pick the (mode, qp) pair with the lowest pixel-SSE Lagrangian cost.

    Candidates are enumerated mode-major (DC, H, V, PLANAR) with ascending qp
    inside each mode; the first minimum wins. ``base_qp`` switches on
    delta-QP signalling, whose code length is charged to the rate.
    """
    qps = sorted(check_qp(q) for q in qp_list)
    samples = np.asarray(orig.samples, dtype=np.int64)
    h, w = samples.shape
    nq = len(qps)
    if base_qp is None:
        side = [0] * nq
    else:
        side = [se_length(q - base_qp) for q in qps]
    zz, n_coded, bits, sse, recon = code_candidates(samples, predict_all(ctx, w, h), qps, side)
    j = sse + float(lam) * bits
    idx = int(np.argmin(j))
    cfg = ParamConfig(IntraMode(idx // nq), qps[idx % nq])
    enc = EncodedBlock(Block(orig.x, orig.y, w, h, recon[idx]), int(bits[idx]), cfg,
                       zz[idx, :n_coded[idx]].copy(),
                       None if base_qp is None else cfg.qp - base_qp)
    return cfg, enc, rd_cost(float(sse[idx]), enc.bits, lam)


def feature_distortion(kind, psi_orig: FeatureMap, recon: np.ndarray, network: Network) -> float:
    metric = FEATURE_METRICS[DistortionKind(kind).feature_metric]
    return metric(psi_orig, extract_features(recon, network))


def score_distortions(kind, dists: Sequence[CandidateDistortion], rates, lam):
    """Normalize (first entry is the anchor), combine and cost candidates.

    Returns ``(winner_index, distortions, costs)``; ties go to the lower index.
    """
    kind = DistortionKind(kind)
    dists = list(dists)
    if kind.uses_features:
        if "normalization" in _faults:
            dists = [replace(d, d_feat_norm=d.d_feat) for d in dists]
        else:
            dists = normalize_candidates(dists)
    dists = [replace(d, d_effective=effective_distortion(kind, d)) for d in dists]
    costs = [rd_cost(d.d_effective, rate, lam) for d, rate in zip(dists, rates)]
    js = [c.j for c in costs]
    return js.index(min(js)), dists, costs


def evaluate_candidates(orig_region, candidates, kind, lam, network: Optional[Network] = None,
                        orig_features: Optional[FeatureMap] = None, d_sse=None):
    """Score ``(recon_region, rate_bits)`` candidates over the full region.

    Feature maps are computed for the original and every reconstruction; a
    single candidate needs none (it is its own anchor). ``d_sse`` may carry
    already-known pixel SSEs.
    """
    kind = DistortionKind(kind)
    orig = np.asarray(orig_region.samples if isinstance(orig_region, Block) else orig_region)
    if not candidates:
        raise ValueError("no candidates")
    recons = []
    for recon, _ in candidates:
        r = np.asarray(recon.samples if isinstance(recon, Block) else recon)
        if r.shape != orig.shape:
            raise ValueError(f"size mismatch: candidate {r.shape} vs region {orig.shape}")
        recons.append(r)
    if d_sse is None:
        d_sse = [sse_pixel(orig, r) for r in recons]
    if kind.uses_features and len(recons) > 1:
        if network is None:
            raise ValueError(f"kind {kind.value} requires a network")
        if orig_features is None:
            orig_features = extract_features(orig, network)
        d_feat = [feature_distortion(kind, orig_features, r, network) for r in recons]
    else:
        d_feat = d_sse
    dists = [CandidateDistortion(s, f) for s, f in zip(d_sse, d_feat)]
    return score_distortions(kind, dists, [rate for _, rate in candidates], lam)


def compare_candidates(orig_region, candidates, kind, lam, network: Optional[Network] = None,
                       orig_features: Optional[FeatureMap] = None) -> int:
    """Index of the lowest-cost candidate; ties go to the lower index."""
    return evaluate_candidates(orig_region, candidates, kind, lam, network, orig_features)[0]
