from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..codec.transform import check_qp
from ..distortion import DistortionKind
from ..feature_net import Network
from .lagrangian import DEFAULT_K

MAX_DELTA_QP_RANGE = 7  # three bits in the stream header


def _pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class EncoderConfig:
    """Encoder settings. ``delta_qp_range`` 0 disables per-CU QP search."""

    ctu_size: int = 64
    min_cu: int = 4
    max_mtt_depth: int = 3
    kind: DistortionKind = DistortionKind.SSE
    base_qp: int = 22
    delta_qp_range: int = 0
    k: float = DEFAULT_K
    network: Optional[Network] = None
    delta_qp_limit: int = 3

    def __post_init__(self):
        object.__setattr__(self, "kind", DistortionKind(self.kind))
        if not _pow2(self.ctu_size) or not 8 <= self.ctu_size <= 128:
            raise ValueError(f"ctu_size must be a power of two in [8, 128], got {self.ctu_size}")
        if not _pow2(self.min_cu) or not 4 <= self.min_cu <= self.ctu_size:
            raise ValueError(f"min_cu must be a power of two in [4, ctu_size], got {self.min_cu}")
        if self.max_mtt_depth < 0:
            raise ValueError("max_mtt_depth must be non-negative")
        check_qp(self.base_qp)
        if not 0 <= self.delta_qp_limit <= MAX_DELTA_QP_RANGE:
            raise ValueError(f"delta_qp_limit must lie in [0, {MAX_DELTA_QP_RANGE}]")
        if not 0 <= self.delta_qp_range <= self.delta_qp_limit:
            raise ValueError(
                f"delta_qp_range {self.delta_qp_range} outside [0, {self.delta_qp_limit}]")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.kind.uses_features and self.network is None:
            raise ValueError(f"kind {self.kind.value} requires a feature network")

    def qp_list(self) -> list[int]:
        lo = max(0, self.base_qp - self.delta_qp_range)
        hi = min(51, self.base_qp + self.delta_qp_range)
        return list(range(lo, hi + 1))
