"""scikit-learn style wrappers around the codec and the feature extractor.

Images go in as a 2-D array or a sequence of 2-D uint8 arrays (sizes may
differ); transforms return lists of the same length.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .distortion import DistortionKind
from .feature_net import Network, extract_features, load_weights, seeded_test_network
from .frame_io import Frame
from .metrics import psnr
from .rdo.config import EncoderConfig
from .rdo.lagrangian import DEFAULT_K
from .rdo.stream import decode_frame, encode_frame


def check_images(X) -> list[np.ndarray]:
    """Normalise ``X`` to a list of 2-D uint8 arrays, rejecting anything else."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = [X]
    elif isinstance(X, Frame):
        X = [X.samples]
    if isinstance(X, np.ndarray) and X.ndim != 3:
        raise ValueError(f"expected a 2-D image or a stack of them, got shape {X.shape}")
    out = []
    for i, img in enumerate(X):
        a = np.asarray(img.samples if isinstance(img, Frame) else img)
        if a.ndim != 2 or a.size == 0:
            raise ValueError(f"image {i}: expected a non-empty 2-D array, got shape {a.shape}")
        if a.dtype != np.uint8:
            if not np.issubdtype(a.dtype, np.integer) or a.min() < 0 or a.max() > 255:
                raise ValueError(f"image {i}: samples must be integers in [0, 255]")
            a = a.astype(np.uint8)
        out.append(a)
    if not out:
        raise ValueError("no images")
    return out


def _network(weights, seed, width) -> Optional[Network]:
    if weights is not None:
        return load_weights(weights)
    if seed is not None:
        return seeded_test_network(seed, width=width)
    return None


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Maps images to feature maps of shape ``(C, H, W)``."""

    def __init__(self, weights=None, seed: Optional[int] = 0, width: int = 64):
        self.weights = weights
        self.seed = seed
        self.width = width

    def fit(self, X=None, y=None):
        net = _network(self.weights, self.seed, self.width)
        if net is None:
            raise ValueError("set weights or seed")
        self.network_ = net
        return self

    def transform(self, X):
        check_is_fitted(self, "network_")
        return [extract_features(a, self.network_).values for a in check_images(X)]


class IntraCodec(TransformerMixin, BaseEstimator):
    """Encoder/decoder pair. ``transform`` returns decoded reconstructions.

    Feature kinds take their network from ``weights`` or ``network_seed``.
    """

    def __init__(self, kind: str = "sse", qp: int = 22, delta_qp: int = 0, ctu_size: int = 64,
                 min_cu: int = 4, max_mtt_depth: int = 3, k: float = DEFAULT_K,
                 weights=None, network_seed: Optional[int] = None, network_width: int = 64):
        self.kind = kind
        self.qp = qp
        self.delta_qp = delta_qp
        self.ctu_size = ctu_size
        self.min_cu = min_cu
        self.max_mtt_depth = max_mtt_depth
        self.k = k
        self.weights = weights
        self.network_seed = network_seed
        self.network_width = network_width

    def fit(self, X=None, y=None):
        kind = DistortionKind(self.kind)
        net = _network(self.weights, self.network_seed, self.network_width) \
            if kind.uses_features else None
        self.config_ = EncoderConfig(
            ctu_size=self.ctu_size, min_cu=self.min_cu, max_mtt_depth=self.max_mtt_depth,
            kind=kind, base_qp=self.qp, delta_qp_range=self.delta_qp, k=self.k, network=net,
            delta_qp_limit=max(3, self.delta_qp))
        return self

    def encode(self, X) -> list[bytes]:
        check_is_fitted(self, "config_")
        streams, stats = [], []
        for a in check_images(X):
            data, st = encode_frame(Frame.from_array(a), self.config_)
            streams.append(data)
            stats.append(st)
        self.stats_ = stats
        return streams

    @staticmethod
    def decode(streams) -> list[np.ndarray]:
        return [decode_frame(s).samples for s in streams]

    def transform(self, X):
        return self.decode(self.encode(X))

    def score(self, X, y=None) -> float:
        """Mean PSNR of the reconstructions."""
        imgs = check_images(X)
        return float(np.mean([psnr(a, r) for a, r in zip(imgs, self.transform(imgs))]))
