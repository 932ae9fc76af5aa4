import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from tefree.diskmodel import DiskConfig, transmission_det
from tefree.errors import ContourThroughZero, NewtonDivergence, PhaseJumpUnresolved, SentinelNonzeroWinding
from tefree.rootscan import (EigRecord, ScanRegion, _Scaled, _newton, auto_k_max, find_roots, spectrum,
                             winding_count)

CFG = DiskConfig.from_tuple((1.0, 1.0, 1.0, 4.0))
CFG_NEG = DiskConfig.from_tuple((1.0, 4.0, 2.0, 1.0))


def mode(k, cfg=CFG):
    return lambda lam: transmission_det(k, lam, cfg)


def test_winding_examples():
    a = 2 + 1j
    assert winding_count(lambda z: z - a, (0, 4, 0, 2)) == 1
    assert winding_count(lambda z: (z - a) ** 2, (0, 4, 0, 2)) == 2
    assert winding_count(lambda z: 1 / (z - a), (0, 4, 0, 2)) == -1
    assert winding_count(lambda z: np.exp(z), (-5, 5, -5, 5)) == 0


def test_region_validation():
    with pytest.raises(ValueError):
        ScanRegion(1, 0, 0, 1)
    with pytest.raises(ValueError):
        ScanRegion(0, 1, 0, 1, exclusion=-1)
    r = ScanRegion(0, 1, 0, 1).dilate(0.5)
    assert (r.re_min, r.re_max, r.im_min, r.im_max) == (-0.5, 1.5, -0.5, 1.5)


def _real_roots(k, a, b, n=10000):
    f = lambda l: float(transmission_det(k, l, CFG)[0].real)
    x = np.linspace(a, b, n)
    v = np.array([f(t) for t in x])
    return [brentq(f, x[i], x[i + 1], xtol=1e-14, rtol=1e-15) for i in np.flatnonzero(v[:-1] * v[1:] < 0)]


def test_mode0_against_dense_oracle():
    # real roots by sign changes on a 1e4 grid; |f| on a dense 2-d grid shows no nonreal minima
    real = _real_roots(0, 1.0, 50.0)
    re = np.linspace(1, 50, 500)
    im = np.linspace(0.05, 1.0, 20)
    L = re[None, :] + 1j * im[:, None]
    v, _ = transmission_det(0, L, CFG)
    assert np.min(np.abs(v)) > 1e-3
    recs = find_roots(mode(0), (1, 50, -1, 1))
    assert winding_count(mode(0), (1, 50, -1, 1)) == len(real) == sum(r.multiplicity for r in recs)
    got = sorted(r.lam.real for r in recs)
    np.testing.assert_allclose(got, real, rtol=1e-12)
    assert all(r.lam.imag == 0 for r in recs)


def test_quadratic_roots():
    r1, r2 = 1.3 - 0.7j, -2.1 + 0.4j
    recs = find_roots(lambda z: (z - r1) * (z - r2), (-5, 5, -5, 5), exclude_origin=False)
    got = sorted((r.lam for r in recs), key=lambda z: z.real)
    assert abs(got[0] - r2) < 1e-10 and abs(got[1] - r1) < 1e-10


def test_multiple_root_cluster():
    recs = find_roots(lambda z: (z - 0.5 - 0.5j) ** 3 * (z - 3), (0, 4, -1, 1), tol=1e-10, exclude_origin=False)
    mults = sorted(r.multiplicity for r in recs)
    assert sum(mults) == 4
    triple = [r for r in recs if abs(r.lam - (0.5 + 0.5j)) < 1e-3]
    assert sum(r.multiplicity for r in triple) == 3


def test_conservation_mode0():
    recs = find_roots(mode(0), (1, 100, -5, 5))
    assert sum(r.multiplicity for r in recs) == winding_count(mode(0), (1, 100, -5, 5))
    assert all(r.residual <= 1e-8 for r in recs)


def test_origin_exclusion():
    # z^2 (z - 1): the double zero at 0 is divided out
    f = lambda z: z**2 * (z - 1)
    recs = find_roots(f, (-2, 2, -2, 2))
    assert len(recs) == 1 and abs(recs[0].lam - 1) < 1e-10
    assert winding_count(f, (-2, 2, -2, 2)) == 3
    assert winding_count(f, (-2, 2, -2, 2), exclude_origin=True) == 1


def test_contour_through_zero_dilates():
    # a zero exactly on the bottom edge is handled by dilation
    assert winding_count(lambda z: z - (1 + 0j), (0, 2, 0, 1)) == 1
    with pytest.raises(ContourThroughZero):
        winding_count(lambda z: z - (1 + 0j), (0, 2, 0, 1), retries=0)


def test_phase_jump_unresolved():
    # a sign flip across Re z = 0.3 is a phase jump of pi at every sampling level
    with pytest.raises(PhaseJumpUnresolved):
        winding_count(lambda z: np.where(z.real < 0.3, 1.0, -1.0) + 0j, (0, 1, 0, 1))


def test_newton_divergence():
    g = _Scaled(lambda z: np.ones_like(z))
    with pytest.raises(NewtonDivergence):
        _newton(g, 0.5 + 0.5j, (0, 1, 0, 1), 1e-10, 1.0)


def test_spectrum_small_and_conjugate_closure():
    sp = spectrum(CFG, (1, 100, -10, 10))
    assert sp.sentinel_ok and sp.k_max == auto_k_max(CFG, (1, 100, -10, 10))
    lams = sp.lambdas
    for lam in lams[np.abs(lams.imag) > 0]:
        assert np.min(np.abs(lams - lam.conjugate())) < 1e-9 * max(1, abs(lam))
    for k in range(sp.k_max + 1):
        assert sp.windings[k] == winding_count(mode(k), (1, 100, -10, 10), exclude_origin=True)
    assert sp.total_multiplicity() == sum(rec.multiplicity for rec in sp)
    assert min(l.real for l in lams if l.imag == 0) == pytest.approx(8.4251335221860355, abs=1e-9)


def test_empty_rectangle():
    sp = spectrum(CFG, (0, 1, 50, 60))
    assert len(sp) == 0 and sp.sentinel_ok


def test_counts_monotone():
    counts = [spectrum(CFG, (1e-3, r * r, -s, s)).total_multiplicity() for r, s in ((5, 1), (7, 1), (7, 3), (9, 3))]
    assert counts == sorted(counts) and counts[-1] > counts[0]


def test_negative_eigenvalues_under_18():
    sp = spectrum(CFG_NEG, (-100, -1, -1, 1))
    assert len(sp) > 0
    assert all(rec.lam.real < 0 for rec in sp)


def test_refinement_stability():
    a = find_roots(mode(2), (1, 60, -3, 3), tol=1e-10)
    b = find_roots(mode(2), (1, 60, -3, 3), tol=5e-11)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert abs(x.lam - y.lam) <= 10 * 1e-10 * max(1, abs(x.lam))


def test_sentinel_failure():
    with pytest.raises(SentinelNonzeroWinding):
        spectrum(CFG, (1, 100, -1, 1), k_max=2)
    sp = spectrum(CFG, (1, 100, -1, 1), k_max=2, check_sentinels=False)
    assert not sp.sentinel_ok


def test_workers_deterministic():
    a = spectrum(CFG, (1, 150, -5, 5), workers=1)
    b = spectrum(CFG, (1, 150, -5, 5), workers=2)
    assert [(r.lam, r.mode, r.multiplicity) for r in a] == [(r.lam, r.mode, r.multiplicity) for r in b]


def test_record_defaults():
    r = EigRecord(1 + 1j)
    assert r.multiplicity == 1 and r.mode == 0


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(-3, 3))
def test_single_zero_located(x, y):
    a = complex(x, y)
    recs = find_roots(lambda z: (z - a) * np.exp(0.3 * z), (-4, 4, -4, 4), exclude_origin=False)
    assert len(recs) == 1 and abs(recs[0].lam - a) < 1e-9
