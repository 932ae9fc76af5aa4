"""Exact separation-of-variables model on the disk.

For constant media on the disk of radius R, mode k of the transmission
problem reduces to the 2x2 determinant

    d_k(lambda) = c1 w1 J_k'(w1 R) J_k(w2 R) - c2 w2 J_k'(w2 R) J_k(w1 R),
    w_j = sqrt(lambda n_j / c_j).

Dividing by (w1 w2)^k gives an entire, branch-free function of lambda, which
is what the root finder scans.  Values are returned as ``(value, log_scale)``
with ``|value|`` equal to |d| divided by the size of its two terms, so
``|value|`` is directly a relative residual.
"""

from dataclasses import dataclass
import math

import numpy as np

from .csbessel import MAX_ORDER, jn_scaled
from .errors import BesselOverflow, DirichletPole
from .symbolcore import (BoundaryGeometry, MediumPair, check_condition_12, japanese, rho)

_MAX_LAMBDA_R2 = 1.0e8


@dataclass(frozen=True)
class DiskConfig:
    """Disk of radius R with constant media (c1, n1) inside and (c2, n2) for the second field."""

    radius: float
    media: MediumPair

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.media.is_constant:
            raise ValueError("the disk model needs constant media")
        c1, n1, c2, n2 = self.coefficients
        for v in (c1, n1, c2, n2):
            if not v > 0:
                raise ValueError("media coefficients must be positive")
        check_condition_12(self.media, np.zeros(1))

    @classmethod
    def from_tuple(cls, media, radius=1.0):
        """Build from ``(c1, n1, c2, n2)``."""
        c1, n1, c2, n2 = (float(v) for v in media)
        return cls(float(radius), MediumPair(c1, n1, c2, n2))

    @property
    def coefficients(self):
        m = self.media
        return float(m.c1), float(m.n1), float(m.c2), float(m.n2)

    @property
    def geometry(self):
        return BoundaryGeometry(self.radius)


def _log_abs_angle(w):
    return np.log(np.abs(w)), np.angle(w)


def transmission_det(k, lam, cfg, omegas=None):
    """Normalized determinant of mode k (vectorized in ``lam``).

    Parameters
    ----------
    k : int
        Angular mode, k >= 0 (d_{-k} = d_k).
    lam : complex or array_like
        Spectral parameter(s), nonzero.
    cfg : DiskConfig
    omegas : tuple of arrays, optional
        Override the principal roots (w1, w2); used to test branch
        independence.

    Returns
    -------
    value : complex ndarray
        d_k / (w1 w2)^k = value * exp(log_scale); ``|value| <= 1`` is the
        determinant relative to the sum of the magnitudes of its two terms.
    log_scale : float ndarray
    """
    k = abs(int(k))
    if k > MAX_ORDER:
        raise ValueError(f"mode must not exceed {MAX_ORDER}")
    c1, n1, c2, n2 = cfg.coefficients
    R = cfg.radius
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("lambda = 0 is excluded")
    if np.any(np.abs(lam) * R * R > _MAX_LAMBDA_R2):
        raise BesselOverflow("|lambda| R^2 exceeds 1e8")
    if omegas is None:
        w1 = np.sqrt(lam * (n1 / c1))
        w2 = np.sqrt(lam * (n2 / c2))
    else:
        w1, w2 = (np.asarray(w, dtype=complex) for w in omegas)
    j1, jp1, l1 = jn_scaled(k, w1 * R)
    j2, jp2, l2 = jn_scaled(k, w2 * R)
    t1 = c1 * w1 * jp1 * j2
    t2 = c2 * w2 * jp2 * j1
    size = np.abs(t1) + np.abs(t2)
    safe = np.where(size > 0, size, 1.0)
    la1, an1 = _log_abs_angle(w1)
    la2, an2 = _log_abs_angle(w2)
    value = (t1 - t2) / safe * np.exp(-1j * k * (an1 + an2))
    log_scale = l1 + l2 - k * (la1 + la2) + np.log(safe)
    return value, log_scale


def transmission_det_value(k, lam, cfg):
    """Unscaled normalized determinant (may overflow to inf for large |lambda|)."""
    v, ls = transmission_det(k, lam, cfg)
    with np.errstate(over="ignore"):
        return v * np.exp(ls)


def _omega(sp, c, n):
    return np.sqrt(complex(sp.z) * n / c) / sp.h


def exact_dtn(mode, sp, R, c, n, pole_tol=1e-280):
    """Exact DtN eigenvalue -i h d/dx1 u on the boundary for data exp(i m theta).

    x1 = R - r is the inward normal distance, so the value is
    i h w J_m'(w R) / J_m(w R) with w = sqrt(z n / c) / h.  Vectorized over
    ``mode``.

    Raises
    ------
    DirichletPole
        If |J_m(w R)| < pole_tol * |J_m'(w R)|.
    """
    modes = np.abs(np.atleast_1d(np.asarray(mode, dtype=int)))
    w = _omega(sp, c, n)
    out = np.empty(modes.shape, dtype=complex)
    for idx, m in enumerate(modes):
        j, jp, _ = jn_scaled(int(m), w * R)
        j, jp = complex(j), complex(jp)
        if abs(j) <= pole_tol * abs(jp) or j == 0:
            raise DirichletPole(f"z/h^2 = {sp.lam:.6g} is a Dirichlet eigenvalue for mode {m}")
        out[idx] = 1j * sp.h * w * jp / j
    if np.ndim(mode) == 0:
        return complex(out[0])
    return out


def mode_range_for(h, R, xi_max=2.0):
    """Largest mode used by comparisons: round(xi_max R / h), capped by the Bessel order limit."""
    return int(min(MAX_ORDER, math.ceil(xi_max * R / h)))


@dataclass
class DtnReport:
    """Weighted per-mode errors of a boundary-symbol approximation."""

    h: float
    z: complex
    correction: str
    modes: np.ndarray
    xi: np.ndarray
    errors: np.ndarray

    @property
    def max_error(self):
        return float(np.max(self.errors))

    @property
    def argmax_xi(self):
        return float(self.xi[int(np.argmax(self.errors))])


def _b_values(correction, xi, sp, c, n, R, delta0):
    """h-order correction b(xi') of the boundary symbol, sampled at xi."""
    if correction == "none":
        return np.zeros_like(xi, dtype=complex)
    if correction == "lemma35":
        from .parametrix import lemma35_b
        geom = BoundaryGeometry(R)
        xi_max = max(float(np.max(np.abs(xi))), 1.0) * 1.001
        grid = lemma35_b(geom, c, n, 1.0, delta0, n_x=16, n_xi=4097, xi_max=xi_max)
        row = grid.values[0]
        return np.interp(xi, grid.xi, row.real) + 1j * np.interp(xi, grid.xi, row.imag)
    if correction == "transport":
        from .parametrix import disk_normal_jet, solve_eikonal, solve_transport
        geom = BoundaryGeometry(R)
        jet = disk_normal_jet(R, c, n, 2)
        phase = solve_eikonal(jet, sp, geom, n_x=4, xi_nodes=np.asarray(xi, dtype=float))
        amp = solve_transport(jet, phase, 1.0, sp, geom)
        return -1j * amp.a(1, 0)[0]
    raise ValueError(f"unknown correction {correction!r}")


def dtn_compare(sp, c, n, R=1.0, M_max=None, correction="none", delta0=None, use_b=None):
    """Weighted error <xi'_m> |exact_dtn(m) - (rho(xi'_m) + h b(xi'_m))| over |m| <= M_max.

    Parameters
    ----------
    correction : {"none", "lemma35", "transport"}
        ``"lemma35"`` uses the homogeneous boundary term of
        :func:`tefree.parametrix.lemma35_b`; ``"transport"`` uses
        b = -i a_{1,0}(z, xi') from the transport recursion.
    use_b : bool, optional
        Shorthand: True selects ``"lemma35"``, False selects ``"none"``.
    delta0 : float, optional
        Cutoff parameter for ``"lemma35"`` (default 0.4 c/n).
    """
    if use_b is not None:
        correction = "lemma35" if use_b else "none"
    if M_max is None:
        M_max = mode_range_for(sp.h, R)
    if delta0 is None:
        delta0 = 0.4 * c / n
    modes = np.arange(0, M_max + 1)
    xi = sp.h * modes / R
    exact = exact_dtn(modes, sp, R, c, n)
    approx = rho(xi**2, n / c, sp.z) + sp.h * _b_values(correction, xi, sp, c, n, R, delta0)
    err = japanese(xi) * np.abs(exact - approx)
    return DtnReport(sp.h, sp.z, correction, modes, xi, err)


def greens_identity_check(sp, c, n, R=1.0, M_max=None):
    """max over modes of |Re(c * exact_dtn(m))| at z = -1."""
    if abs(sp.z + 1) > 1e-14:
        raise ValueError("the realness check is stated at z = -1")
    if M_max is None:
        M_max = mode_range_for(sp.h, R)
    vals = exact_dtn(np.arange(0, M_max + 1), sp, R, c, n)
    return float(np.max(np.abs((c * vals).real)))


def media_dtn_residual(k, lam, cfg, h=None):
    """c1 dtn_1 - c2 dtn_2 for mode k at lambda, normalized by the sum of magnitudes.

    This vanishes exactly when lambda is a zero of the mode-k determinant
    (away from Dirichlet poles).  The scale h only fixes the point z = h^2 lambda.
    """
    c1, n1, c2, n2 = cfg.coefficients
    lam = complex(lam)
    h = 1.0 / math.sqrt(abs(lam)) if h is None else h
    z = lam * h * h
    sp = _raw_point(h, z)
    d1 = exact_dtn(k, sp, cfg.radius, c1, n1)
    d2 = exact_dtn(k, sp, cfg.radius, c2, n2)
    return abs(c1 * d1 - c2 * d2) / (abs(c1 * d1) + abs(c2 * d2))


@dataclass(frozen=True)
class _RawPoint:
    h: float
    z: complex

    @property
    def lam(self):
        return self.z / self.h**2


def _raw_point(h, z):
    # zone-free spectral point for internal exact evaluations
    return _RawPoint(float(h), complex(z))
