"""Pixel and feature-space distortions, anchor normalization and hybrids."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .feature_net import FeatureMap


class DistortionKind(str, enum.Enum):
    SSE = "sse"
    FSSE = "fsse"
    FSAD = "fsad"
    HFSSE = "hfsse"
    HFSAD = "hfsad"

    @property
    def uses_features(self) -> bool:
        return self is not DistortionKind.SSE

    @property
    def is_hybrid(self) -> bool:
        return self in (DistortionKind.HFSSE, DistortionKind.HFSAD)

    @property
    def feature_metric(self) -> Optional[str]:
        if self in (DistortionKind.FSSE, DistortionKind.HFSSE):
            return "fsse"
        if self in (DistortionKind.FSAD, DistortionKind.HFSAD):
            return "fsad"
        return None


@dataclass(frozen=True)
class CandidateDistortion:
    d_sse: float
    d_feat: float = 0.0
    d_feat_norm: Optional[float] = None
    d_effective: Optional[float] = None


def _samples(x):
    return np.asarray(x.samples if hasattr(x, "samples") else x)


def sse_pixel(orig, recon) -> float:
    a, b = _samples(orig), _samples(recon)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.int64) - b.astype(np.int64)
    return float(np.sum(diff * diff))


def _feature_diff(psi_orig, psi_recon) -> np.ndarray:
    a = psi_orig.values if isinstance(psi_orig, FeatureMap) else np.asarray(psi_orig)
    b = psi_recon.values if isinstance(psi_recon, FeatureMap) else np.asarray(psi_recon)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a.astype(np.float64) - b.astype(np.float64)


def fsse(psi_orig, psi_recon) -> float:
    d = _feature_diff(psi_orig, psi_recon)
    return float(np.sum(d * d))


def fsad(psi_orig, psi_recon) -> float:
    return float(np.sum(np.abs(_feature_diff(psi_orig, psi_recon))))


FEATURE_METRICS = {"fsse": fsse, "fsad": fsad}


def anchor_scale(anchor: CandidateDistortion) -> float:
    """Factor mapping feature distortions onto the pixel-SSE range of the anchor."""
    if anchor.d_feat == 0:
        return 1.0
    return anchor.d_sse / anchor.d_feat


def normalize_candidates(cands: Sequence[CandidateDistortion]) -> list[CandidateDistortion]:
    """Rescale every feature distortion by the factor that makes the first
    candidate's feature distortion equal to its pixel SSE.

    A zero anchor feature distortion leaves all values unscaled.
    """
    if not cands:
        raise ValueError("empty candidate list")
    s = anchor_scale(cands[0])
    out = [replace(c, d_feat_norm=c.d_feat * s) for c in cands]
    if cands[0].d_feat != 0:
        # exact, not d_feat * (d_sse / d_feat)
        out[0] = replace(out[0], d_feat_norm=cands[0].d_sse)
    return out


def effective_distortion(kind, cand: CandidateDistortion) -> float:
    kind = DistortionKind(kind)
    if kind is DistortionKind.SSE:
        return cand.d_sse
    if cand.d_feat_norm is None:
        raise ValueError(f"kind {kind.value} needs a normalized feature distortion")
    if kind.is_hybrid:
        return 0.5 * (cand.d_sse + cand.d_feat_norm)
    return cand.d_feat_norm
