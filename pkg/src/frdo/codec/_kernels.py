"""Compiled per-block kernels shared by the encoder search and the decoder.

Summation orders are fixed by the loop structure, so reconstructions are
reproducible; encoder and decoder reconstruct through ``reconstruct_block``.
"""

import numpy as np
from numba import njit

UNAVAILABLE = 128


@njit(cache=True)
def ue_len(v):
    v += 1
    n = 0
    while v:
        v >>= 1
        n += 1
    return 2 * n - 1


@njit(cache=True)
def predict_modes(top, left, has_top, has_left, w, h):
    """(4, h, w) predictions in mode order DC, HORIZONTAL, VERTICAL, PLANAR."""
    out = np.empty((4, h, w), dtype=np.int64)
    total = 0
    count = 0
    if has_top:
        for x in range(w):
            total += top[x]
        count += w
    if has_left:
        for y in range(h):
            total += left[y]
        count += h
    dc = UNAVAILABLE if count == 0 else (total + count // 2) // count
    tr = top[w - 1]
    bl = left[h - 1]
    denom = 2 * w * h
    for y in range(h):
        for x in range(w):
            out[0, y, x] = dc
            out[1, y, x] = left[y]
            out[2, y, x] = top[x]
            pv = (h - 1 - y) * top[x] + (y + 1) * bl
            ph = (w - 1 - x) * left[y] + (x + 1) * tr
            out[3, y, x] = (pv * w + ph * h + w * h) // denom
    return out


@njit(cache=True)
def forward_dct(residual, ch, cw):
    """ch @ residual @ cw.T with a fixed accumulation order."""
    h, w = residual.shape
    tmp = np.zeros((h, w))
    for i in range(h):
        for k in range(h):
            c = ch[i, k]
            for j in range(w):
                tmp[i, j] += c * residual[k, j]
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for k in range(w):
                acc += tmp[i, k] * cw[j, k]
            out[i, j] = acc
    return out


@njit(cache=True)
def inverse_dct(coeffs, ch, cw):
    """ch.T @ coeffs @ cw, skipping zero coefficients (raster order)."""
    h, w = coeffs.shape
    tmp = np.zeros((h, w))
    for i in range(h):
        for k in range(w):
            c = coeffs[i, k]
            if c != 0.0:
                for j in range(w):
                    tmp[i, j] += c * cw[k, j]
    out = np.zeros((h, w))
    for i in range(h):
        row_used = False
        for j in range(w):
            if tmp[i, j] != 0.0:
                row_used = True
                break
        if not row_used:
            continue
        for y in range(h):
            c = ch[i, y]
            for j in range(w):
                out[y, j] += c * tmp[i, j]
    return out


@njit(cache=True)
def reconstruct_block(pred, levels, step, ch, cw):
    h, w = pred.shape
    out = np.empty((h, w), dtype=np.uint8)
    any_nz = False
    for y in range(h):
        for x in range(w):
            if levels[y, x] != 0:
                any_nz = True
    if any_nz:
        res = inverse_dct(levels * step, ch, cw)
    else:
        res = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            v = pred[y, x] + np.int64(np.floor(res[y, x] + 0.5))
            if v < 0:
                v = 0
            elif v > 255:
                v = 255
            out[y, x] = v
    return out


@njit(cache=True)
def code_candidates(orig, preds, steps, side_bits, mode_bits, ch, cw, zz):
    """Code every (prediction, step) pair, prediction-major.

    Returns ``(levels_zz, n_coded, bits, sse, recon)``.
    """
    p_count = preds.shape[0]
    q_count = steps.shape[0]
    h, w = orig.shape
    n = h * w
    m = p_count * q_count
    levels_zz = np.zeros((m, n), dtype=np.int64)
    n_coded = np.zeros(m, dtype=np.int64)
    bits = np.zeros(m, dtype=np.int64)
    sse = np.zeros(m, dtype=np.int64)
    recon = np.empty((m, h, w), dtype=np.uint8)
    residual = np.empty((h, w))
    lev = np.empty((h, w), dtype=np.int64)
    for p in range(p_count):
        for y in range(h):
            for x in range(w):
                residual[y, x] = orig[y, x] - preds[p, y, x]
        coeffs = forward_dct(residual, ch, cw)
        for q in range(q_count):
            idx = p * q_count + q
            step = steps[q]
            for y in range(h):
                for x in range(w):
                    c = coeffs[y, x]
                    a = np.floor(abs(c) / step + 0.5)
                    lev[y, x] = np.int64(a) if c >= 0 else -np.int64(a)
            last = 0
            for i in range(n):
                v = lev[zz[i] // w, zz[i] % w]
                levels_zz[idx, i] = v
                if v != 0:
                    last = i + 1
            b = mode_bits + side_bits[q] + ue_len(last)
            for i in range(last):
                v = levels_zz[idx, i]
                if v != 0:
                    b += ue_len(abs(v)) + 1
                else:
                    b += 1
            n_coded[idx] = last
            bits[idx] = b
            rec = reconstruct_block(preds[p], lev, step, ch, cw)
            s = 0
            for y in range(h):
                for x in range(w):
                    d = np.int64(rec[y, x]) - orig[y, x]
                    s += d * d
            sse[idx] = s
            recon[idx] = rec
    return levels_zz, n_coded, bits, sse, recon
