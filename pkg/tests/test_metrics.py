import math
import warnings

import numpy as np
import pytest

from frdo.feature_net import identity_network
from frdo.metrics import (RDCurve, RDPoint, RDRow, average_rows, bd_rate, emit_rd_csv,
                          feature_fidelity, psnr, read_rd_csv, read_rd_rows)

# Computed before the implementation with an exact Vandermonde cubic solve and
# scipy.integrate.quad over the shared quality interval [30.2, 39].
FIXTURE_ANCHOR = ([100.0, 200.0, 400.0, 800.0], [30.0, 33.0, 36.0, 39.0])
FIXTURE_TEST = ([90.0, 185.0, 370.0, 760.0], [30.2, 33.1, 36.3, 39.2])
FIXTURE_BDR = -11.7283327


def test_psnr_examples():
    a = np.zeros((4, 4), np.uint8)
    assert psnr(a, a) == math.inf
    b = a.copy()
    b[0, :] = 2  # sum of squares 16 over 16 samples
    assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2))
    one = np.ones((4, 4), np.uint8)
    assert psnr(a, one) == pytest.approx(48.1308, abs=1e-4)
    assert psnr(a, np.full((4, 4), 255, np.uint8)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        psnr(a, np.zeros((4, 5), np.uint8))


def test_psnr_permutation_invariant(rng):
    a = rng.integers(0, 256, (8, 8)).astype(np.uint8)
    b = rng.integers(0, 256, (8, 8)).astype(np.uint8)
    perm = rng.permutation(64)
    assert psnr(a, b) == pytest.approx(psnr(a.ravel()[perm].reshape(8, 8),
                                            b.ravel()[perm].reshape(8, 8)))


def test_feature_fidelity_monotone_in_noise(rng, small_net):
    img = rng.integers(40, 216, (64, 96)).astype(np.uint8)
    assert feature_fidelity(img, img, small_net) == math.inf
    scores = []
    for amp in (2, 6, 20, 60):
        noisy = np.clip(img + rng.normal(0, amp, img.shape), 0, 255).astype(np.uint8)
        scores.append(feature_fidelity(img, noisy, small_net))
    assert scores == sorted(scores, reverse=True)
    with pytest.raises(ValueError):
        feature_fidelity(img, img[:10], small_net)


def test_identity_fidelity_is_shifted_psnr(rng):
    net = identity_network()
    img = rng.integers(0, 256, (70, 70)).astype(np.uint8)
    for amp in (1, 5, 30):
        rec = np.clip(img + rng.normal(0, amp, img.shape), 0, 255).astype(np.uint8)
        assert feature_fidelity(img, rec, net, "fsse") == pytest.approx(psnr(img, rec), abs=1e-9)


def test_bd_identical_and_half_rate():
    r, q = FIXTURE_ANCHOR
    a = RDCurve.from_arrays(r, q)
    assert bd_rate(a, a) == 0.0
    half = RDCurve.from_arrays(np.array(r) / 2, q)
    assert bd_rate(a, half) == pytest.approx(-50.0, abs=0.01)
    assert bd_rate(a, RDCurve.from_arrays(np.array(r) * 1.25, q)) == pytest.approx(25.0, abs=1e-9)


def test_bd_fixture():
    a = RDCurve.from_arrays(*FIXTURE_ANCHOR)
    t = RDCurve.from_arrays(*FIXTURE_TEST)
    assert bd_rate(a, t) == pytest.approx(FIXTURE_BDR, abs=0.05)
    assert bd_rate(t, a) > 0


def test_bd_errors():
    a = RDCurve.from_arrays([1, 2, 3, 4], [30, 31, 32, 33])
    b = RDCurve.from_arrays([1, 2, 3, 4], [40, 41, 42, 43])
    with pytest.raises(ValueError, match="no overlap"):
        bd_rate(a, b)
    with pytest.raises(ValueError, match="need 4 points"):
        RDCurve.from_arrays([1, 2, 3], [1, 2, 3])


def test_curve_validation():
    with pytest.raises(ValueError):
        RDPoint(0.0, 30)
    with pytest.raises(ValueError, match="strictly"):
        RDCurve.from_arrays([1, 1, 2, 3], [1, 2, 3, 4])
    with pytest.raises(ValueError, match="finite"):
        RDCurve.from_arrays([1, 2, 3, 4], [1, 2, 3, math.inf])
    with pytest.warns(UserWarning):
        RDCurve.from_arrays([1, 2, 3, 4], [1, 3, 2, 4])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        RDCurve.from_arrays([4, 3, 2, 1], [4, 3, 2, 1])  # sorted by rate internally


def _rows():
    return [RDRow("img", qp, 2.0 / (i + 1), 40.0 - i, 30.0 - i / 3, 1000 // (i + 1))
            for i, qp in enumerate((12, 17, 22, 27))]


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "rd.csv"
    emit_rd_csv(_rows(), p)
    assert p.read_text().splitlines()[0] == "label,qp,rate_bpp,psnr_db,feat_db,bits"
    for got, want in zip(read_rd_rows(p), _rows()):
        assert (got.label, got.qp, got.bits) == (want.label, want.qp, want.bits)
        for f in ("rate_bpp", "psnr_db", "feat_db"):
            assert getattr(got, f) == pytest.approx(getattr(want, f), rel=1e-8)
    c = read_rd_csv(p, "feat_db")
    assert np.allclose(c.rates, sorted(r.rate_bpp for r in _rows()), rtol=1e-7)


def test_csv_inf_and_missing(tmp_path):
    p = tmp_path / "rd.csv"
    emit_rd_csv([RDRow("x", 12, 1.5, math.inf, None, 9)], p)
    row = read_rd_rows(p)[0]
    assert row.psnr_db == math.inf and row.feat_db is None


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("label,qp,rate_bpp,psnr_db,feat_db,bits\nimg,12,abc,40,30,100\n")
    with pytest.raises(ValueError, match=":2:"):
        read_rd_rows(p)
    p.write_text("")
    with pytest.raises(ValueError, match="no data rows"):
        read_rd_rows(p)
    p.write_text("label,qp,rate_bpp,psnr_db,feat_db,bits\n")
    with pytest.raises(ValueError, match="no data rows"):
        read_rd_rows(p)


def test_average_rows():
    rows = _rows() + [RDRow("b", r.qp, r.rate_bpp * 3, r.psnr_db + 2, r.feat_db, r.bits)
                      for r in _rows()]
    avg = average_rows(rows)
    assert [r.qp for r in avg] == [12, 17, 22, 27]
    assert avg[0].rate_bpp == pytest.approx(4.0) and avg[0].psnr_db == pytest.approx(41.0)
