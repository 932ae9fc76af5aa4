import numpy as np
import pytest

from tefree.diskmodel import exact_dtn
from tefree.errors import DegenerateRho
from tefree.parametrix import (NormalJet, boundary_symbol_tau, disk_normal_jet, first_transport_closed_form,
                               lemma35_b, phase_lower_bound_check, printed_a10, residual_ratios, scaled_phase,
                               solve_eikonal, solve_transport)
from tefree.symbolcore import BoundaryGeometry, SpectralPoint, chi_cutoff, rho

GEOM = BoundaryGeometry(1.0)
POINTS = [(-1.0, "Z2"), (1 + 0.5j, "Z1"), (0.3 + 1j, "Z3")]


def _disk(z, zone, N=4, h=0.05, n_xi=65, xi_max=3.0, psi=1.0):
    sp = SpectralPoint(h, z, zone)
    jet = disk_normal_jet(1.0, 1.0, 1.0, N)
    phase = solve_eikonal(jet, sp, GEOM, n_x=16, n_xi=n_xi, xi_max=xi_max)
    amp = solve_transport(jet, phase, psi, sp, GEOM)
    return sp, jet, phase, amp


def _varying_jet(N=4, m1=True):
    # x'-dependent index of refraction and (optionally) first normal derivative
    depth = 2 * N + 2
    m = [lambda x: 1.0 + 0.2 * np.sin(x)]
    m.append((lambda x: 0.1 * np.cos(2 * x)) if m1 else 0.0)
    return NormalJet(N,
                     R_coeffs=[(ell + 1.0) for ell in range(depth)],
                     m_coeffs=m + [0.0] * (depth - 2),
                     q_sharp_coeffs=[1j] * depth,
                     q_flat_coeffs=[0.0] * depth,
                     qtilde_coeffs=[0.0] * depth)


def test_disk_jet_coefficients():
    jet = disk_normal_jet(1.0, 1.0, 2.0, 3)
    x = np.zeros(1)
    assert [jet.coeff("R_coeffs", ell, x)[0].real for ell in range(3)] == [1.0, 2.0, 3.0]
    assert jet.coeff("q_sharp_coeffs", 0, x)[0] == 1j
    assert jet.coeff("m_coeffs", 0, x)[0] == 2.0
    assert jet.coeff("m_coeffs", 1, x)[0] == 0.0
    # series and exact coefficients agree near the boundary
    x1 = 1e-3
    for name in ("R_coeffs", "q_sharp_coeffs"):
        ser = sum(x1**ell * jet.coeff(name, ell, x) for ell in range(8))
        assert abs(ser[0] - jet.exact_or_series(name, x1, x)[0]) < 1e-20 + 1e-15
    with pytest.raises(ValueError):
        disk_normal_jet(1.0, 1.0, 1.0, 9)


@pytest.mark.parametrize("z,zone", POINTS)
def test_second_phase_coefficient(z, zone):
    sp, jet, phase, amp = _disk(z, zone)
    xi = phase.xi[None, :]
    expected = -(xi**2) / (2.0 * phase.rho)
    assert np.max(np.abs(phase.coeffs[2] - expected)) < 1e-13
    assert np.max(np.abs(phase.rho - rho(xi**2, 1.0, z))) == 0.0


@pytest.mark.parametrize("z,zone", POINTS)
def test_residual_ratios_bounded(z, zone):
    sp, jet, phase, amp = _disk(z, zone, N=4)
    r = residual_ratios(jet, phase, amp, sp.h)
    for key in ("eikonal", "transport"):
        v = r[key]
        assert np.all(np.isfinite(v))
        # O(x1^N): ratios stay bounded as x1 goes from 2^-4 to 2^-10
        assert v.max() <= 2.0 * v[0] + 1e-12


def test_residual_ratios_varying_medium():
    sp = SpectralPoint(0.05, 1 + 0.5j, "Z1")
    jet = _varying_jet(4)
    phase = solve_eikonal(jet, sp, GEOM, n_x=32, n_xi=33, xi_max=3.0)
    amp = solve_transport(jet, phase, lambda x: 1.0 + 0.1 * np.cos(x), sp, GEOM)
    r = residual_ratios(jet, phase, amp, sp.h)
    for key in ("eikonal", "transport"):
        assert r[key].max() <= 2.0 * r[key][0] + 1e-12
    # the series-only jet uses the truncated coefficients, so E is a polynomial; the ratio must not grow
    assert r["b_term"].max() > 0


def test_a10_disk_closed_form():
    sp, jet, phase, amp = _disk(-1.0, "Z2", N=3, n_xi=65)
    xi = phase.xi
    a10 = amp.a(1, 0)[0]
    np.testing.assert_allclose(a10, 1.0 / (2.0 * (1.0 + xi**2)), rtol=0, atol=1e-14)
    cf = first_transport_closed_form(jet, phase, 1.0, sp, GEOM)
    assert np.max(np.abs(cf - amp.a(1, 0))) < 1e-14


def test_a10_closed_form_varying():
    sp = SpectralPoint(0.05, 0.3 + 1j, "Z3")
    jet = _varying_jet(3)
    psi = lambda x: 1.0 + 0.3 * np.sin(x)
    phase = solve_eikonal(jet, sp, GEOM, n_x=32, n_xi=33, xi_max=3.0)
    amp = solve_transport(jet, phase, psi, sp, GEOM)
    cf = first_transport_closed_form(jet, phase, psi, sp, GEOM)
    assert np.max(np.abs(cf - amp.a(1, 0))) < 1e-12
    # with d_x1 m = 0 the two-term expression agrees at xi' = 0 only
    jet = _varying_jet(3, m1=False)
    phase = solve_eikonal(jet, sp, GEOM, n_x=32, n_xi=33, xi_max=3.0)
    amp = solve_transport(jet, phase, psi, sp, GEOM)
    pr = printed_a10(jet, phase, psi)
    j0 = int(np.argmin(np.abs(phase.xi)))
    assert np.max(np.abs(pr[:, j0] - amp.a(1, 0)[:, j0])) < 1e-12
    assert np.max(np.abs(pr - amp.a(1, 0))) > 1e-3


def test_a10_vanishes_without_first_order_terms():
    depth = 8
    jet = NormalJet(3, [1.0] * 1 + [0.0] * (depth - 1), [1.0] + [0.0] * (depth - 1),
                    [0.0] * depth, [0.0] * depth, [0.0] * depth)
    sp = SpectralPoint(0.1, -1 + 0.2j, "Z2")
    phase = solve_eikonal(jet, sp, GEOM, n_x=16, n_xi=33)
    amp = solve_transport(jet, phase, 1.0, sp, GEOM)
    assert np.max(np.abs(amp.a(1, 0))) < 1e-14
    assert np.max(np.abs(phase.coeffs[2])) < 1e-14


def test_degenerate_rho():
    sp = SpectralPoint(0.1, 1 + 1e-30j, "Z1")
    jet = disk_normal_jet(1.0, 1.0, 1.0, 2)
    with pytest.raises(DegenerateRho):
        solve_eikonal(jet, sp, GEOM, n_x=16, xi_nodes=np.linspace(-1.0, 1.0, 17))


def test_phase_bound_disk():
    for z, zone in POINTS:
        sp, jet, phase, amp = _disk(z, zone, N=2)
        rep = phase_lower_bound_check(phase, sp, GEOM, delta=0.1)
        assert rep.passed and rep.min_margin >= 0
        assert rep.delta_star == 1.0


def test_phase_bound_adversarial():
    sp, jet, phase, amp = _disk(-1.0, "Z2", N=2)
    bad = scaled_phase(phase, 2, -100.0)
    rep = phase_lower_bound_check(bad, sp, GEOM, delta=0.1)
    assert not rep.passed
    assert 0 < rep.delta_star < 0.1
    assert phase_lower_bound_check(bad, delta=rep.delta_star * 0.99).passed


@pytest.mark.parametrize("z,zone", [(-1.0, "Z2"), (0.3 + 1j, "Z3")])
@pytest.mark.parametrize("N", [2, 3, 4])
def test_tau_matches_exact_dtn(z, zone, N):
    xi_pts = np.array([0.0, 0.5, 1.0])
    scaled = []
    for h in 2.0 ** -np.arange(4, 8):
        sp = SpectralPoint(h, z, zone)
        jet = disk_normal_jet(1.0, 1.0, 1.0, N)
        phase = solve_eikonal(jet, sp, GEOM, n_x=16, xi_nodes=np.r_[xi_pts, np.linspace(1.5, 3.0, 13)])
        amp = solve_transport(jet, phase, 1.0, sp, GEOM)
        tau = boundary_symbol_tau(amp, phase, sp).values[0, :3]
        ex = exact_dtn(np.rint(xi_pts / h).astype(int), sp, 1.0, 1.0, 1.0)
        scaled.append(np.max(np.abs(tau - ex)) / h**N)
    # a_{1,N-1} needs phi_{N+1}, which an order-N jet does not carry: the error is O(h^N)
    assert max(scaled) <= 1.5 * scaled[0]


def test_tau_small_h_limit():
    h = 1e-3
    sp, jet, phase, amp = _disk(-1.0, "Z2", N=3, h=h)
    j0 = int(np.argmin(np.abs(phase.xi)))
    t = boundary_symbol_tau(amp, phase, sp).values[0, j0]
    assert abs(t - (1j - 0.5j * h)) < h**2
    # psi = 0 leaves no boundary symbol at all
    sp, jet, phase, amp = _disk(-1.0, "Z2", N=2, psi=0.0)
    assert np.max(np.abs(boundary_symbol_tau(amp, phase, sp).values)) == 0.0


def test_orders_agree():
    h = 2.0**-6
    taus = []
    for N in (3, 4):
        sp, jet, phase, amp = _disk(1 + 0.5j, "Z1", N=N, h=h)
        taus.append(boundary_symbol_tau(amp, phase, sp).values)
    assert np.max(np.abs(taus[0] - taus[1])) <= 50 * h**3


def test_deterministic():
    a = _disk(0.3 + 1j, "Z3", N=3)[3]
    b = _disk(0.3 + 1j, "Z3", N=3)[3]
    for j in range(3):
        for k in range(len(a.coeffs[j])):
            assert np.array_equal(a.a(k, j), b.a(k, j))


def test_lemma35_b():
    b = lemma35_b(GEOM, 1.0, 1.0, 1.0, 0.4, n_x=16, n_xi=129, xi_max=6.0)
    XI = b.mesh[1]
    chi = chi_cutoff(XI**2, 0.4)
    # q#_0 = i/R, psi constant: b = (1 - chi)/(2R)
    np.testing.assert_allclose(b.values, (1 - chi) / 2.0, atol=1e-15)
    assert np.all(b.values[:, np.abs(b.xi) <= 1.5] == 0)
    # with delta0 explicit, b does not depend on n
    b2 = lemma35_b(GEOM, 1.0, 7.0, 1.0, 0.4, n_x=16, n_xi=129, xi_max=6.0)
    assert np.array_equal(b.values, b2.values)
