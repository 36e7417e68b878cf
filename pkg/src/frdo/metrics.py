"""PSNR, feature fidelity, RD curves, BD-rate and the RD CSV format."""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distortion import FEATURE_METRICS
from .feature_net import MIN_FEATURE_SIZE, Network, extract_features
from .frame_io import Frame

CSV_HEADER = ["label", "qp", "rate_bpp", "psnr_db", "feat_db", "bits"]
FIDELITY_TILE = 64
INF = math.inf


def _frame_array(frame) -> np.ndarray:
    return np.asarray(frame.samples if isinstance(frame, Frame) else frame)


def psnr(orig, recon) -> float:
    """Peak SNR in dB for 8-bit samples; ``inf`` when the frames are identical."""
    a, b = _frame_array(orig), _frame_array(recon)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.int64) - b.astype(np.int64)
    mse = float(np.sum(diff * diff)) / diff.size
    return INF if mse == 0 else 10.0 * math.log10(255.0 ** 2 / mse)


def _tile_spans(n: int):
    cuts = list(range(0, n, FIDELITY_TILE)) + [n]
    if len(cuts) > 2 and cuts[-1] - cuts[-2] < MIN_FEATURE_SIZE:
        del cuts[-2]
    return list(zip(cuts, cuts[1:]))


def feature_fidelity(orig, recon, net: Network, metric: str = "fsse") -> float:
    """``-10 log10`` of the mean per-element feature error, higher is better.

    Frames are cut into non-overlapping 64x64 tiles; an edge remainder is
    merged into its neighbour when it is too small to run through the network
    unpadded. Errors and element counts of all tiles are pooled.
    """
    a, b = _frame_array(orig), _frame_array(recon)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    measure = FEATURE_METRICS[metric.lower()]
    total = 0.0
    count = 0
    h, w = a.shape
    for y0, y1 in _tile_spans(h):
        for x0, x1 in _tile_spans(w):
            ta = a[y0:y1, x0:x1]
            tb = b[y0:y1, x0:x1]
            fa = extract_features(ta, net)
            total += measure(fa, extract_features(tb, net))
            count += fa.values.size
    return INF if total == 0 else -10.0 * math.log10(total / count)


@dataclass(frozen=True)
class RDPoint:
    rate: float
    quality: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")


class RDCurve:
    """At least four RD points with strictly increasing rate."""

    def __init__(self, points: Sequence[RDPoint]):
        points = [p if isinstance(p, RDPoint) else RDPoint(*p) for p in points]
        if len(points) < 4:
            raise ValueError(f"need 4 points, got {len(points)}")
        points.sort(key=lambda p: p.rate)
        rates = [p.rate for p in points]
        if any(r2 <= r1 for r1, r2 in zip(rates, rates[1:])):
            raise ValueError("rates must be strictly increasing")
        qualities = [p.quality for p in points]
        if not all(math.isfinite(q) for q in qualities):
            raise ValueError("qualities must be finite")
        if any(q2 < q1 for q1, q2 in zip(qualities, qualities[1:])):
            warnings.warn("quality decreases with rate somewhere along the curve", stacklevel=2)
        self.points = tuple(points)

    @classmethod
    def from_arrays(cls, rates, qualities) -> "RDCurve":
        return cls([RDPoint(float(r), float(q)) for r, q in zip(rates, qualities)])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"RDCurve({[(p.rate, p.quality) for p in self.points]})"


def bd_rate(anchor: RDCurve, test: RDCurve) -> float:
    """Bjontegaard delta rate of ``test`` against ``anchor`` in percent.

    Cubic fits of log10(rate) over quality are integrated across the common
    quality interval; negative values mean ``test`` needs less rate.
    """
    if len(anchor) < 4 or len(test) < 4:
        raise ValueError("need 4 points")
    qa, qt = anchor.qualities, test.qualities
    lo = max(qa.min(), qt.min())
    hi = min(qa.max(), qt.max())
    if not hi > lo:
        raise ValueError("no overlap between the quality ranges")
    pa = np.polyint(np.polyfit(qa, np.log10(anchor.rates), 3))
    pt = np.polyint(np.polyfit(qt, np.log10(test.rates), 3))
    int_a = np.polyval(pa, hi) - np.polyval(pa, lo)
    int_t = np.polyval(pt, hi) - np.polyval(pt, lo)
    return (10.0 ** ((int_t - int_a) / (hi - lo)) - 1.0) * 100.0


@dataclass(frozen=True)
class RDRow:
    label: str
    qp: int
    rate_bpp: float
    psnr_db: float
    feat_db: Optional[float]
    bits: int


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if value == INF else f"{value:.9g}"
    return str(value)


def format_rd_rows(rows: Sequence[RDRow]) -> list[list[str]]:
    return [[r.label, str(r.qp), _fmt(float(r.rate_bpp)), _fmt(float(r.psnr_db)),
             _fmt(None if r.feat_db is None else float(r.feat_db)), str(r.bits)] for r in rows]


def emit_rd_csv(rows: Sequence[RDRow], path) -> None:
    with open(os.fspath(path), "w", newline="") as fh:
        write_rd_csv(rows, fh)


def write_rd_csv(rows: Sequence[RDRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(format_rd_rows(rows))


def read_rd_rows(path) -> list[RDRow]:
    with open(os.fspath(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: no data rows")
        if [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"{path}:1: unexpected header {header}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if not rec or not "".join(rec).strip():
                continue
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
            try:
                rows.append(RDRow(rec[0], int(rec[1]), float(rec[2]), float(rec[3]),
                                  float(rec[4]) if rec[4].strip() else None, int(rec[5])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def select_label(rows: Sequence[RDRow], label: Optional[str] = None) -> list[RDRow]:
    """Rows for ``label``; defaults to ``average`` rows, or the only label present."""
    labels = sorted({r.label for r in rows})
    if label is None:
        if "average" in labels:
            label = "average"
        elif len(labels) == 1:
            label = labels[0]
        else:
            raise ValueError(f"several labels present ({', '.join(labels)}); pick one")
    picked = [r for r in rows if r.label == label]
    if not picked:
        raise ValueError(f"no rows labelled {label!r}")
    return picked


def curve_from_rows(rows: Sequence[RDRow], axis: str = "psnr_db") -> RDCurve:
    if axis not in ("psnr_db", "feat_db"):
        raise ValueError(f"unknown quality axis {axis!r}")
    points = []
    for r in rows:
        q = getattr(r, axis)
        if q is None:
            raise ValueError(f"row for qp {r.qp} has no {axis} value")
        points.append(RDPoint(r.rate_bpp, q))
    return RDCurve(points)


def read_rd_csv(path, axis: str = "psnr_db", label: Optional[str] = None) -> RDCurve:
    return curve_from_rows(select_label(read_rd_rows(path), label), axis)


def average_rows(rows: Sequence[RDRow], label: str = "average") -> list[RDRow]:
    """Per-qp corpus averages of rate, quality and bits."""
    out = []
    for qp in sorted({r.qp for r in rows}):
        group = [r for r in rows if r.qp == qp]
        feats = [r.feat_db for r in group]
        out.append(RDRow(label, qp,
                         float(np.mean([r.rate_bpp for r in group])),
                         float(np.mean([r.psnr_db for r in group])),
                         None if any(f is None for f in feats) else float(np.mean(feats)),
                         int(round(np.mean([r.bits for r in group])))))
    return out
