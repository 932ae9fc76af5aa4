"""Boundary symbols on the cotangent bundle of a circle.

The boundary Gamma is a circle of radius R parametrized by arc length x'.
Symbols a(x', xi') live on a :class:`SymbolGrid`: a periodic grid in x' times
a uniform grid in xi'.  This module provides the root rho of
``rho**2 + r0 - m*z = 0`` with ``Im rho > 0``, the cutoff chi, numeric
symbol-class norms, the inversion symbol ``c1*rho1 - c2*rho2`` and the
z-derivative symbol kappa.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import BranchFailure, ConditionViolated, GridTooCoarse, ZoneMismatch

_ZONE_TOL = 1e-12


class Zone(str, Enum):
    """The three pieces of the normalized spectral contour."""

    Z1 = "Z1"  # Re z = 1, 0 < |Im z| <= 1
    Z2 = "Z2"  # Re z = -1, |Im z| <= 1
    Z3 = "Z3"  # |Re z| <= 1, |Im z| = 1


@dataclass(frozen=True)
class SpectralPoint:
    """A normalized spectral parameter z = h**2 * lambda with its zone tag.

    Parameters
    ----------
    h : float
        Semiclassical parameter, h > 0.
    z : complex
        Point on the zone contour, 1 <= |z| <= 2.
    zone : Zone or str
        ``"Z1"``, ``"Z2"`` or ``"Z3"``.
    epsilon : float
        Margin in [0, 1/2).  For Z1 with epsilon > 0 the point must also lie in
        Z_{1,eps}, i.e. |Im z| >= h**(1/2 - epsilon).
    """

    h: float
    z: complex
    zone: Zone
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "zone", Zone(self.zone))
        object.__setattr__(self, "z", complex(self.z))
        h, z, eps = self.h, self.z, self.epsilon
        if not h > 0:
            raise ValueError("h must be positive")
        if not 0.0 <= eps < 0.5:
            raise ValueError("epsilon must lie in [0, 0.5)")
        if not 1.0 - _ZONE_TOL <= abs(z) <= 2.0 + _ZONE_TOL:
            raise ValueError(f"|z| must lie in [1, 2], got {abs(z):.6g}")
        ok = {
            Zone.Z1: abs(z.real - 1.0) <= _ZONE_TOL and 0.0 < abs(z.imag) <= 1.0 + _ZONE_TOL,
            Zone.Z2: abs(z.real + 1.0) <= _ZONE_TOL and abs(z.imag) <= 1.0 + _ZONE_TOL,
            Zone.Z3: abs(z.real) <= 1.0 + _ZONE_TOL and abs(abs(z.imag) - 1.0) <= _ZONE_TOL,
        }[self.zone]
        if not ok:
            raise ZoneMismatch(f"z = {z} does not lie in zone {self.zone.value}")
        if self.zone is Zone.Z1 and eps > 0 and abs(z.imag) < h ** (0.5 - eps) * (1 - _ZONE_TOL):
            raise ZoneMismatch(f"|Im z| = {abs(z.imag):.3g} is below h^(1/2-eps)")

    @property
    def lam(self):
        """The unnormalized spectral parameter z / h**2."""
        return self.z / self.h**2


def _as_function(v):
    if callable(v):
        return v
    value = float(v)
    return lambda x: np.full(np.shape(x), value)


@dataclass(frozen=True)
class MediumPair:
    """Boundary values of the two media (c1, n1) and (c2, n2).

    Each coefficient is a positive number or a callable of arc length x'.
    ``dnu_c1`` and ``dnu_c2`` are the normal derivatives of c1, c2 on the
    boundary (zero for media that are constant near Gamma).
    """

    c1: object
    n1: object
    c2: object
    n2: object
    dnu_c1: object = 0.0
    dnu_c2: object = 0.0

    def values(self, x):
        """Return arrays (c1, n1, c2, n2) evaluated at ``x``."""
        x = np.asarray(x, dtype=float)
        out = tuple(np.asarray(_as_function(v)(x), dtype=float) for v in (self.c1, self.n1, self.c2, self.n2))
        for name, arr in zip(("c1", "n1", "c2", "n2"), out):
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be positive")
        return out

    def normal_derivatives(self, x):
        x = np.asarray(x, dtype=float)
        return tuple(np.asarray(_as_function(v)(x), dtype=float) for v in (self.dnu_c1, self.dnu_c2))

    def m(self, x):
        """Return (m1, m2) = (n1/c1, n2/c2) at ``x``."""
        c1, n1, c2, n2 = self.values(x)
        return n1 / c1, n2 / c2

    @property
    def is_constant(self):
        return not any(callable(v) for v in (self.c1, self.n1, self.c2, self.n2))


@dataclass(frozen=True)
class BoundaryGeometry:
    """The circle of radius R in arc-length coordinates; r0 = xi'**2."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def circumference(self):
        return 2.0 * math.pi * self.radius

    @property
    def curvature_radius(self):
        return self.radius

    def r0(self, x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return xi * xi


def default_xi_max(m_max):
    """Default half-width of the xi' grid: 4 * max(sqrt(2 m), 1)."""
    return 4.0 * max(math.sqrt(2.0 * m_max), 1.0)


def japanese(xi):
    """<xi> = (1 + xi**2)**(1/2)."""
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


@dataclass(frozen=True)
class SymbolGrid:
    """Samples of a symbol a(x', xi') on a periodic-by-uniform grid.

    ``values[i, j] = a(x[i], xi[j])``.  Arrays are made read-only.
    """

    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray
    circumference: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        xi = np.array(self.xi, dtype=float)
        v = np.array(self.values, dtype=complex)
        if v.shape != (x.size, xi.size):
            raise ValueError(f"values shape {v.shape} does not match grid {(x.size, xi.size)}")
        if x.size < 16 or xi.size < 16:
            raise ValueError("grid sizes must be at least 16 in each direction")
        for arr in (x, xi, v):
            arr.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, geom, n_x=256, n_xi=513, xi_max=4.0):
        """Evaluate ``func(X, XI)`` on the grid (X, XI broadcast as (n_x, n_xi))."""
        x, xi = grid_nodes(geom, n_x, n_xi, xi_max)
        X, XI = np.meshgrid(x, xi, indexing="ij")
        return cls(x, xi, np.broadcast_to(func(X, XI), X.shape), geom.circumference)

    def like(self, values):
        """A grid with the same nodes and new values."""
        return SymbolGrid(self.x, self.xi, np.broadcast_to(values, self.values.shape), self.circumference)

    @property
    def mesh(self):
        return np.meshgrid(self.x, self.xi, indexing="ij")

    @property
    def xi_max(self):
        return float(self.xi[-1])

    @property
    def dxi(self):
        return float(self.xi[1] - self.xi[0])

    @property
    def x_independent(self):
        v = self.values
        return bool(np.all(v == v[:1, :]))

    def d_x(self, order=1, values=None):
        """Spectral x'-derivative of the given order."""
        v = self.values if values is None else values
        if order == 0:
            return np.array(v)
        n = self.x.size
        k = 2j * np.pi * np.fft.fftfreq(n, d=self.circumference / n)
        if n % 2 == 0 and order % 2 == 1:
            k[n // 2] = 0.0
        return np.fft.ifft((k**order)[:, None] * np.fft.fft(v, axis=0), axis=0)

    def __mul__(self, other):
        o = other.values if isinstance(other, SymbolGrid) else other
        return self.like(self.values * o)

    __rmul__ = __mul__

    def __add__(self, other):
        o = other.values if isinstance(other, SymbolGrid) else other
        return self.like(self.values + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = other.values if isinstance(other, SymbolGrid) else other
        return self.like(self.values - o)

    def __neg__(self):
        return self.like(-self.values)


def grid_nodes(geom, n_x=256, n_xi=513, xi_max=4.0):
    """Periodic x' nodes over [0, L) and uniform xi' nodes over [-xi_max, xi_max]."""
    L = geom.circumference
    x = np.arange(n_x) * (L / n_x)
    xi = np.linspace(-xi_max, xi_max, n_xi)
    return x, xi


def _fd4(v, dxi):
    # fourth-order central difference along axis 1; loses two columns per side
    return (-v[:, 4:] + 8.0 * v[:, 3:-1] - 8.0 * v[:, 1:-3] + v[:, :-4]) / (12.0 * dxi)


# --------------------------------------------------------------------------
# rho and its properties


def rho(r0_val, m_val, z):
    """Root of rho**2 + r0 - m*z = 0 with Im rho > 0 (vectorized).

    Raises
    ------
    BranchFailure
        If Im z = 0 and r0 <= m * Re z, where the root is real.
    """
    r0_val = np.asarray(r0_val, dtype=float)
    m_val = np.asarray(m_val, dtype=float)
    z = complex(z)
    if np.any(m_val <= 0):
        raise ValueError("m must be positive")
    w = m_val * z - r0_val
    if z.imag == 0.0 and np.any(r0_val <= m_val * z.real):
        raise BranchFailure(f"rho is real for z = {z}: the point is off the zones")
    s = np.sqrt(w.astype(complex))
    s = np.where(s.imag < 0, -s, s)
    return s[()] if s.ndim == 0 else s


def drho_dz(rho_val, m_val):
    """d rho / dz = m / (2 rho), from differentiating rho**2 = m z - r0."""
    return np.asarray(m_val) / (2.0 * np.asarray(rho_val))


@dataclass
class Lemma31Report:
    """Sampled constants of the three lower bounds for rho.

    ratio_32
        min of 2 Im(rho)|rho| / (m |Im z|); the bound holds when >= 1.
    C_33
        min of |rho| / sqrt(|Im z|).
    C_34, Ct_34
        min of |rho| / sqrt(r0+1) and max of 2 Im(rho) / sqrt(r0+1) over the
        (3.4) domain.
    ratio_34
        min of 2 Im(rho) / |rho| over the same domain (>= 1 required).
    """

    zone: Zone
    n_points: int
    ratio_32: float = float("nan")
    C_33: float = float("nan")
    C_34: float = float("nan")
    Ct_34: float = float("nan")
    ratio_34: float = float("nan")
    checked: tuple = ()
    passed: bool = False


def check_lemma31(sp, geom, m, bounds=None, n_r0=10000, n_x=16, r0_max=None):
    """Sample the lower bounds (3.2)-(3.4) for rho on a dense r0 grid.

    Parameters
    ----------
    sp : SpectralPoint
    geom : BoundaryGeometry
    m : float or callable
        Boundary function m = n/c.
    bounds : iterable of {"3.2", "3.3", "3.4"}, optional
        Defaults to all three for Z1/Z3 and to ("3.4",) for Z2.
    n_r0 : int
        Number of r0 samples per x' node.
    """
    zone = sp.zone
    if bounds is None:
        bounds = ("3.2", "3.3", "3.4") if zone in (Zone.Z1, Zone.Z3) else ("3.4",)
    bounds = tuple(bounds)
    for b in bounds:
        if b not in ("3.2", "3.3", "3.4"):
            raise ValueError(f"unknown bound {b}")
        if b in ("3.2", "3.3") and zone is Zone.Z2:
            raise ZoneMismatch(f"bound ({b}) is stated for Z1 and Z3 only")
    x = grid_nodes(geom, n_x, 16)[0]
    mx = np.asarray(_as_function(m)(x), dtype=float)
    if r0_max is None:
        r0_max = 100.0 * max(1.0, float(mx.max()))
    r0 = np.linspace(0.0, r0_max, n_r0)
    M = mx[:, None] * np.ones_like(r0)[None, :]
    R0 = np.broadcast_to(r0[None, :], M.shape)
    rh = rho(R0, M, sp.z)
    rep = Lemma31Report(zone=zone, n_points=int(rh.size), checked=bounds)
    ok = True
    aim = abs(sp.z.imag)
    if "3.2" in bounds:
        rep.ratio_32 = float(np.min(2.0 * rh.imag * np.abs(rh) / (M * aim)))
        ok &= rep.ratio_32 >= 1.0 - 1e-12
    if "3.3" in bounds:
        rep.C_33 = float(np.min(np.abs(rh) / math.sqrt(aim)))
        ok &= rep.C_33 > 0
    if "3.4" in bounds:
        dom = np.ones(M.shape, bool) if zone is Zone.Z2 else R0 >= 2.0 * M
        if not dom.any():
            raise ValueError("r0 range does not reach the (3.4) domain")
        rr, r0d = rh[dom], R0[dom]
        rep.C_34 = float(np.min(np.abs(rr) / np.sqrt(r0d + 1.0)))
        rep.Ct_34 = float(np.max(2.0 * rr.imag / np.sqrt(r0d + 1.0)))
        rep.ratio_34 = float(np.min(2.0 * rr.imag / np.abs(rr)))
        ok &= rep.C_34 > 0 and rep.ratio_34 >= 1.0 - 1e-12
    rep.passed = bool(ok)
    return rep


# --------------------------------------------------------------------------
# cutoff


def _flat(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(sigma):
    """phi(sigma): 1 for sigma <= 1, 0 for sigma >= 2, C-infinity and monotone.

    Built from g(s) = exp(-1/s) as g(2 - sigma) / (g(2 - sigma) + g(sigma - 1)),
    which is flat to all orders at both ends.
    """
    sigma = np.asarray(sigma, dtype=float)
    a = _flat(2.0 - sigma)
    b = _flat(sigma - 1.0)
    out = np.where(sigma <= 1.0, 1.0, np.where(sigma >= 2.0, 0.0, a / np.where(a + b > 0, a + b, 1.0)))
    return out[()] if out.ndim == 0 else out


def chi_cutoff(r0_val, delta0):
    """chi = phi(delta0 * r0)."""
    if not delta0 > 0:
        raise ValueError("delta0 must be positive")
    return smooth_step(delta0 * np.asarray(r0_val, dtype=float))


def default_delta0(m1_max, m2_max=None):
    """0.4 * min(1/m1, 1/m2), which satisfies 2*delta0 <= min 1/m with margin."""
    ms = [m1_max] if m2_max is None else [m1_max, m2_max]
    return 0.4 * min(1.0 / float(np.max(v)) for v in ms)


# --------------------------------------------------------------------------
# symbol-class norms


@dataclass
class ClassEstimate:
    """Parameters of a weighted symbol-class seminorm.

    The norm is the max over |alpha| + |beta| <= max_order of
    sup |d_x^alpha d_xi^beta a| * mu**(-ell + delta1*alpha + delta2*beta).
    """

    ell: float
    delta1: float
    delta2: float
    mu: SymbolGrid
    max_order: int = 2
    norm: float = float("nan")


def class_norm(a, est):
    """Evaluate the seminorm of :class:`ClassEstimate` on the grid of ``a``.

    x'-derivatives are spectral, xi'-derivatives fourth-order central
    differences (the sup is taken over nodes where the stencil fits).
    The result is also stored in ``est.norm``.
    """
    if est.max_order > 4:
        raise ValueError("max_order must not exceed 4")
    mu = np.abs(est.mu.values)
    if np.any(mu <= 0):
        raise ValueError("weight mu must be positive")
    dxi = a.dxi
    best = 0.0
    for alpha in range(est.max_order + 1):
        da = a.d_x(alpha)
        for beta in range(est.max_order + 1 - alpha):
            d = da
            for _ in range(beta):
                d = _fd4(d, dxi)
            cut = 2 * beta
            w = mu[:, cut : mu.shape[1] - cut] if cut else mu
            val = np.abs(d) * w ** (-est.ell + est.delta1 * alpha + est.delta2 * beta)
            best = max(best, float(np.max(val)))
    est.norm = best
    return best


def stable_class_norm(symbol, weight, geom, ell, delta1, delta2, max_order=2,
                      n_x=64, n_xi=513, xi_max=4.0, tol=0.1):
    """Class norm with a 2x grid-refinement stability check.

    ``symbol`` and ``weight`` are callables of (X, XI).  Returns the norm on
    the refined grid.

    Raises
    ------
    GridTooCoarse
        If refining both directions by 2x changes the norm by ``tol`` or more.
    """
    norms = []
    for nx, nxi in ((n_x, n_xi), (2 * n_x, 2 * n_xi - 1)):
        a = SymbolGrid.from_function(symbol, geom, nx, nxi, xi_max)
        mu = SymbolGrid.from_function(weight, geom, nx, nxi, xi_max)
        norms.append(class_norm(a, ClassEstimate(ell, delta1, delta2, mu, max_order)))
    coarse, fine = norms
    if abs(fine - coarse) >= tol * max(abs(fine), 1e-300):
        raise GridTooCoarse(f"class norm moved from {coarse:.6g} to {fine:.6g} under refinement")
    return fine


# --------------------------------------------------------------------------
# two-media symbols


def _two_rhos(mp, sp_z, geom, grid):
    X, XI = grid.mesh
    c1, n1, c2, n2 = mp.values(X)
    r0 = geom.r0(X, XI)
    r1 = rho(r0, n1 / c1, sp_z)
    r2 = rho(r0, n2 / c2, sp_z)
    return (c1, n1, c2, n2), r0, r1, r2


def _template_grid(mp, geom, n_x, n_xi, xi_max):
    if xi_max is None:
        x = grid_nodes(geom, n_x, 16)[0]
        m1, m2 = mp.m(x)
        xi_max = default_xi_max(max(m1.max(), m2.max()))
    return SymbolGrid.from_function(lambda X, XI: np.zeros(X.shape), geom, n_x, n_xi, xi_max)


def check_condition_12(mp, x, rtol=1e-14):
    """Raise ConditionViolated("(1.2)") if c1 n1 = c2 n2 at some node of ``x``."""
    c1, n1, c2, n2 = mp.values(x)
    a, b = c1 * n1, c2 * n2
    bad = np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b))
    if np.any(bad):
        raise ConditionViolated("(1.2)", "c1*n1 equals c2*n2 on the boundary")


def inversion_symbol(mp, sp, geom, n_x=256, n_xi=513, xi_max=None):
    """The symbol c1*rho1 - c2*rho2 on the boundary grid.

    Raises
    ------
    ConditionViolated
        If c1 n1 = c2 n2 somewhere on the grid (condition (1.2)).
    """
    grid = _template_grid(mp, geom, n_x, n_xi, xi_max)
    check_condition_12(mp, grid.x)
    (c1, n1, c2, n2), r0, r1, r2 = _two_rhos(mp, sp.z, geom, grid)
    return grid.like(c1 * r1 - c2 * r2)


def inversion_symbol_factored(mp, sp, geom, n_x=256, n_xi=513, xi_max=None):
    """The same symbol from the factored form ct*(z - c0*r0)/(c1 rho1 + c2 rho2).

    Here ct = c1 n1 - c2 n2 and c0 = (c1**2 - c2**2)/ct.  The sign follows
    from (c1 rho1)**2 - (c2 rho2)**2 = ct*z - (c1**2 - c2**2)*r0.
    """
    grid = _template_grid(mp, geom, n_x, n_xi, xi_max)
    check_condition_12(mp, grid.x)
    (c1, n1, c2, n2), r0, r1, r2 = _two_rhos(mp, sp.z, geom, grid)
    ct = c1 * n1 - c2 * n2
    c0 = (c1**2 - c2**2) / ct
    return grid.like(ct * (sp.z - c0 * r0) / (c1 * r1 + c2 * r2))


def _require_z2(z):
    z = complex(z)
    if abs(z.real + 1.0) > _ZONE_TOL or abs(z.imag) > 1.0 + _ZONE_TOL:
        raise ZoneMismatch(f"kappa is defined on Z2 (Re z = -1, |Im z| <= 1), got z = {z}")
    return z


def kappa(mp, z, geom, n_x=256, n_xi=513, xi_max=None):
    """kappa(z) = c1 d rho1/dz - c2 d rho2/dz = n1/(2 rho1) - n2/(2 rho2) on Z2."""
    z = _require_z2(z)
    grid = _template_grid(mp, geom, n_x, n_xi, xi_max)
    (c1, n1, c2, n2), r0, r1, r2 = _two_rhos(mp, z, geom, grid)
    return grid.like(c1 * drho_dz(r1, n1 / c1) - c2 * drho_dz(r2, n2 / c2))


def kappa_closed_form(mp, z, geom, n_x=256, n_xi=513, xi_max=None):
    """kappa from the rationalized form

    [c1 c2 (n2**2 - n1**2) r0 - z n1 n2 (c2 n2 - c1 n1)]
        / [2 c1 c2 rho1 rho2 (n1 rho2 + n2 rho1)].
    """
    z = _require_z2(z)
    grid = _template_grid(mp, geom, n_x, n_xi, xi_max)
    (c1, n1, c2, n2), r0, r1, r2 = _two_rhos(mp, z, geom, grid)
    num = c1 * c2 * (n2**2 - n1**2) * r0 - z * n1 * n2 * (c2 * n2 - c1 * n1)
    return grid.like(num / (2.0 * c1 * c2 * r1 * r2 * (n1 * r2 + n2 * r1)))


def dkappa_dz(mp, z, geom, n_x=256, n_xi=513, xi_max=None):
    """d kappa/dz = -n1**2/(4 c1 rho1**3) + n2**2/(4 c2 rho2**3)."""
    z = _require_z2(z)
    grid = _template_grid(mp, geom, n_x, n_xi, xi_max)
    (c1, n1, c2, n2), r0, r1, r2 = _two_rhos(mp, z, geom, grid)
    return grid.like(-(n1**2) / (4.0 * c1 * r1**3) + n2**2 / (4.0 * c2 * r2**3))


@dataclass
class KappaReport:
    """Sign and size of Im kappa(-1) on the grid."""

    constant_sign: bool
    sign: int
    C: float  # min of |Im kappa(-1)| * <xi'>
    max_real_part: float


def kappa_lower_bound(mp, geom, n_x=64, n_xi=513, xi_max=None):
    """Check that Im kappa(-1) has constant sign and |Im kappa(-1)| >= C <xi'>^-1."""
    k = kappa(mp, -1.0, geom, n_x, n_xi, xi_max)
    X, XI = k.mesh
    im = k.values.imag
    pos, neg = bool(np.all(im > 0)), bool(np.all(im < 0))
    return KappaReport(
        constant_sign=pos or neg,
        sign=1 if pos else (-1 if neg else 0),
        C=float(np.min(np.abs(im) * japanese(XI))),
        max_real_part=float(np.max(np.abs(k.values.real))),
    )
