"""Orthonormal 2-D DCT-II and the uniform scalar quantizer."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

QP_MIN, QP_MAX = 0, 51
SUPPORTED_SIZES = (4, 8, 16, 32, 64, 128)


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Row k holds the k-th orthonormal DCT-II basis vector of length ``n``."""
    if n not in SUPPORTED_SIZES:
        raise ValueError(f"unsupported transform size {n}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    m[0, :] = np.sqrt(1.0 / n)
    m.flags.writeable = False
    return m


def dct2_forward(residual) -> np.ndarray:
    """Forward transform of an ``(h, w)`` block or a stack ``(..., h, w)``."""
    r = np.asarray(residual, dtype=np.float64)
    h, w = r.shape[-2:]
    return dct_matrix(h) @ r @ dct_matrix(w).T


def dct2_inverse(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    h, w = c.shape[-2:]
    return dct_matrix(h).T @ c @ dct_matrix(w)


def check_qp(qp: int) -> int:
    if not QP_MIN <= int(qp) <= QP_MAX:
        raise ValueError(f"qp {qp} outside [{QP_MIN}, {QP_MAX}]")
    return int(qp)


def qstep(qp) -> float:
    """Quantizer step 2**((qp - 4) / 6); equals 1 at qp 4."""
    return 2.0 ** ((np.asarray(qp, dtype=np.float64) - 4.0) / 6.0)


def quantize(coeffs, qp_or_step, *, is_step: bool = False) -> np.ndarray:
    """Round-half-away-from-zero scalar quantization to integer levels."""
    step = qp_or_step if is_step else qstep(check_qp(qp_or_step))
    c = np.asarray(coeffs, dtype=np.float64)
    return (np.sign(c) * np.floor(np.abs(c) / step + 0.5)).astype(np.int64)


def dequantize(levels, qp_or_step, *, is_step: bool = False) -> np.ndarray:
    step = qp_or_step if is_step else qstep(check_qp(qp_or_step))
    return np.asarray(levels, dtype=np.float64) * step
