"""WKB boundary parametrix in normal coordinates near the circle.

Near the boundary we use x1 = distance to Gamma (inward) and x' = arc length.
The operator is

    P = D_{x1}^2 + R(x) D_{x'}^2 - z m(x) + h (q#(x) D_{x1} + qb(x) D_{x'}) + h^2 qt(x),

with D = -i h d.  A solution ``exp(i phi / h) a`` is built from Taylor jets in
x1: phi = phi_0 + sum_k x1^k phi_k (with grad_{x'} phi_0 = xi') and
a = sum_j h^j sum_k x1^k a_{k,j}.  Conjugation gives

    exp(-i phi/h) P exp(i phi/h) = E + h T - h^2 L,
    E = (d1 phi)^2 + R (d' phi)^2 - z m,
    T = -2i d1phi d1 - 2i R d'phi d' + q# d1phi + qb d'phi - i (d1^2 phi + R d'^2 phi),
    L = d1^2 + R d'^2 + i q# d1 + i qb d' - qt.

The eikonal jets make E = O(x1^N); the transport jets make T a_j - L a_{j-1}
vanish to high order.  The boundary symbol of the Dirichlet-to-Neumann map is
tau = D_{x1}(exp(i phi/h) a) exp(-i phi/h) at x1 = 0, i.e.
tau = psi rho - i h sum_j h^j a_{1,j}.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateRho
from .symbolcore import SymbolGrid, chi_cutoff, rho

MAX_ORDER = 8


def _const(v):
    if callable(v):
        return v
    return lambda x, _v=complex(v): np.full(np.shape(x), _v)


@dataclass(frozen=True)
class NormalJet:
    """Taylor coefficients in x1 of the operator coefficients.

    Each list entry is a callable of x' (or a constant).  Entry l of
    ``R_coeffs`` is R_l(x'), so R(x) = sum_l x1^l R_l(x').  ``q_flat_coeffs``
    hold the coefficient of xi' in the linear symbol qb_l(x', xi').

    The lists are kept longer than N so that the transport jets can be
    carried to the depth the residual checks need.  ``exact`` optionally
    holds closed-form callables ``R(x1, x')``, ``m(x1, x')``,
    ``q_sharp(x1, x')``, ``q_flat(x1, x')`` and ``qtilde(x1, x')`` used by the
    residual oracles.
    """

    order: int
    R_coeffs: tuple
    m_coeffs: tuple
    q_sharp_coeffs: tuple
    q_flat_coeffs: tuple
    qtilde_coeffs: tuple
    exact: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 2 <= self.order <= MAX_ORDER:
            raise ValueError(f"jet order must lie in [2, {MAX_ORDER}]")
        for name in ("R_coeffs", "m_coeffs", "q_sharp_coeffs", "q_flat_coeffs", "qtilde_coeffs"):
            object.__setattr__(self, name, tuple(_const(v) for v in getattr(self, name)))

    def coeff(self, name, ell, x):
        seq = getattr(self, name)
        if ell >= len(seq):
            return np.zeros(np.shape(x), dtype=complex)
        return np.asarray(seq[ell](x), dtype=complex)

    def exact_or_series(self, name, x1, x):
        """Evaluate a full coefficient at (x1, x') from ``exact`` or the stored series."""
        key = {"R_coeffs": "R", "m_coeffs": "m", "q_sharp_coeffs": "q_sharp",
               "q_flat_coeffs": "q_flat", "qtilde_coeffs": "qtilde"}[name]
        if key in self.exact:
            return np.asarray(self.exact[key](x1, x), dtype=complex)
        seq = getattr(self, name)
        out = np.zeros(np.shape(x), dtype=complex)
        for ell in range(len(seq)):
            out = out + x1**ell * np.asarray(seq[ell](x), dtype=complex)
        return out


def disk_normal_jet(R_disk, c, n, N, depth=None):
    """Normal-coordinate jet of -h^2 (c/n) Laplacian - z for the disk.

    With r = R - x1 and arc length s = R theta the Laplacian becomes
    d_{x1}^2 - (R - x1)^{-1} d_{x1} + (1 - x1/R)^{-2} d_s^2, so
    R_l = (l+1)/R^l, m_0 = n/c, q#_l = i/R^(l+1), and qb = qt = 0.

    Parameters
    ----------
    R_disk, c, n : float
        Disk radius and the (constant) medium.
    N : int
        Jet order, 2 <= N <= 8.
    depth : int, optional
        Number of stored Taylor coefficients (default 2N + 2).
    """
    if not (R_disk > 0 and c > 0 and n > 0):
        raise ValueError("R, c and n must be positive")
    depth = 2 * N + 2 if depth is None else depth
    R_disk = float(R_disk)
    m0 = n / c
    exact = {
        "R": lambda x1, x: np.full(np.shape(x), (1.0 - x1 / R_disk) ** -2),
        "m": lambda x1, x: np.full(np.shape(x), m0),
        "q_sharp": lambda x1, x: np.full(np.shape(x), 1j / (R_disk - x1)),
        "q_flat": lambda x1, x: np.zeros(np.shape(x)),
        "qtilde": lambda x1, x: np.zeros(np.shape(x)),
    }
    return NormalJet(
        order=N,
        R_coeffs=[(ell + 1) / R_disk**ell for ell in range(depth)],
        m_coeffs=[m0] + [0.0] * (depth - 1),
        q_sharp_coeffs=[1j / R_disk ** (ell + 1) for ell in range(depth)],
        q_flat_coeffs=[0.0] * depth,
        qtilde_coeffs=[0.0] * depth,
        exact=exact,
    )


# --------------------------------------------------------------------------
# truncated power series in x1 with (x', xi') grid coefficients


def _dx(v, L):
    """Spectral derivative along axis 0 (the periodic x' direction)."""
    v = np.asarray(v, dtype=complex)
    n = v.shape[0]
    if n == 1 or np.all(v == v[:1]):
        return np.zeros_like(v)
    k = 2j * np.pi * np.fft.fftfreq(n, d=L / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = (n,) + (1,) * (v.ndim - 1)
    return np.fft.ifft(k.reshape(shape) * np.fft.fft(v, axis=0), axis=0)


def _cauchy(a, b, K):
    """Coefficient K of the product of two series (lists of arrays)."""
    out = 0.0
    for k in range(K + 1):
        if k < len(a) and K - k < len(b):
            out = out + a[k] * b[K - k]
    return out


@dataclass(frozen=True)
class _Setup:
    x: np.ndarray
    xi: np.ndarray
    L: float
    rho: np.ndarray
    R: list
    m: list
    qs: list
    qf: list
    qt: list


def _setup(jet, sp, geom, n_x, xi, depth):
    x = np.arange(n_x) * (geom.circumference / n_x)
    xi = np.asarray(xi, dtype=float)
    X = x[:, None]
    XI = xi[None, :]
    m0 = jet.coeff("m_coeffs", 0, X).real
    if np.any(m0 <= 0):
        raise ValueError("m_0 must be positive")
    r0 = geom.r0(X, XI)
    rh = rho(r0, m0, sp.z)
    if np.min(np.abs(rh)) < 1e-12:
        raise DegenerateRho("|rho| < 1e-12 on the grid")
    get = lambda name: [jet.coeff(name, ell, X) for ell in range(depth)]
    return _Setup(x, xi, geom.circumference, rh, get("R_coeffs"), get("m_coeffs"),
                  get("q_sharp_coeffs"), get("q_flat_coeffs"), get("qtilde_coeffs"))


@dataclass(frozen=True)
class PhaseJet:
    """Phase coefficients phi_k(x', xi') for k = 1..N (phi_0 is implicit).

    ``coeffs[0]`` is None; ``coeffs[1]`` equals rho.  The jet is carried one
    term beyond N-1 so that the eikonal residual is O(x1^N).
    """

    order: int
    coeffs: tuple
    x: np.ndarray
    xi: np.ndarray
    circumference: float
    z: complex

    @property
    def rho(self):
        return self.coeffs[1]

    def grid(self, k):
        return SymbolGrid(self.x, self.xi, np.broadcast_to(self.coeffs[k], (self.x.size, self.xi.size)),
                          self.circumference)

    def x1_derivative_series(self):
        """Coefficients of d phi / d x1."""
        return [(k + 1) * self.coeffs[k + 1] for k in range(len(self.coeffs) - 1)]

    def gradient_series(self):
        """Coefficients of d phi / d x' (grad phi_0 = xi')."""
        xi = np.broadcast_to(self.xi[None, :], (self.x.size, self.xi.size)).astype(complex)
        return [xi] + [_dx(np.broadcast_to(c, (self.x.size, self.xi.size)), self.circumference)
                       for c in self.coeffs[1:]]


def solve_eikonal(jet, sp, geom, n_x=64, n_xi=257, xi_max=4.0, xi_nodes=None):
    """Eikonal jets: phi_1 = rho, then phi_{K+1} for K = 1..N-1.

    The x1^K coefficient of (d1 phi)^2 + R (d' phi)^2 - z m contains
    phi_{K+1} only through 2 (K+1) rho phi_{K+1}; every other term involves
    lower jets, so phi_{K+1} is obtained by division by 2 (K+1) rho.

    ``xi_nodes`` replaces the uniform xi' grid by explicit nodes.

    Raises
    ------
    DegenerateRho
        If |rho| < 1e-12 somewhere on the grid.
    """
    N = jet.order
    xi = np.linspace(-xi_max, xi_max, n_xi) if xi_nodes is None else xi_nodes
    S = _setup(jet, sp, geom, n_x, xi, N + 1)
    shape = (S.x.size, S.xi.size)
    phis = [None, np.broadcast_to(S.rho, shape).astype(complex)]
    for K in range(1, N):
        P = [(k + 1) * phis[k + 1] for k in range(len(phis) - 1)] + [0.0]
        G = [np.broadcast_to(S.xi[None, :], shape).astype(complex)] + [_dx(c, S.L) for c in phis[1:]]
        RG = [_cauchy(S.R, G, k) for k in range(K + 1)]
        rest = _cauchy(P, P, K) + _cauchy(RG, G, K) - sp.z * S.m[K]
        phis.append(-rest / (2.0 * (K + 1) * S.rho))
    return PhaseJet(N, tuple(phis), S.x, S.xi, S.L, sp.z)


@dataclass(frozen=True)
class AmplitudeJet:
    """Amplitude coefficients ``coeffs[j][k] = a_{k,j}`` and the cutoff psi.

    a_j is carried to degree 2N-1-j in x1 so that every h-power of the full
    conjugated residual except the last one is O(x1^N).
    """

    order: int
    coeffs: tuple
    psi: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    circumference: float

    def a(self, k, j):
        seq = self.coeffs[j]
        return seq[k] if k < len(seq) else np.zeros((self.x.size, self.xi.size), complex)

    def grid(self, k, j):
        return SymbolGrid(self.x, self.xi, np.broadcast_to(self.a(k, j), (self.x.size, self.xi.size)),
                          self.circumference)


def _T_coeff(K, a, P, G, S):
    """Coefficient K of T a for the series a (list of arrays)."""
    L = S.L
    da1 = [(k + 1) * a[k + 1] for k in range(len(a) - 1)]
    dap = [_dx(c, L) for c in a]
    dP = [(k + 1) * P[k + 1] for k in range(len(P) - 1)]
    dG = [_dx(c, L) for c in G]
    RG = [_cauchy(S.R, G, k) for k in range(K + 1)]
    RdG = [_cauchy(S.R, dG, k) for k in range(K + 1)]
    mult = [_cauchy(S.qs, P, k) + _cauchy(S.qf, G, k) - 1j * (dP[k] if k < len(dP) else 0.0)
            - 1j * RdG[k] for k in range(K + 1)]
    return (-2j * _cauchy(P, da1, K) - 2j * _cauchy(RG, dap, K) + _cauchy(mult, a, K))


def _L_coeff(K, a, S):
    """Coefficient K of L a."""
    L = S.L
    da1 = [(k + 1) * a[k + 1] for k in range(len(a) - 1)]
    d2a1 = [(k + 1) * da1[k + 1] for k in range(len(da1) - 1)]
    dap = [_dx(c, L) for c in a]
    d2ap = [_dx(c, L) for c in dap]
    out = (d2a1[K] if K < len(d2a1) else 0.0)
    out = out + _cauchy(S.R, d2ap, K) + 1j * _cauchy(S.qs, da1, K) + 1j * _cauchy(S.qf, dap, K)
    return out - _cauchy(S.qt, a, K)


def solve_transport(jet, phase, psi, sp, geom):
    """Transport jets a_{k,j} with a_{0,0} = psi and a_{0,j} = 0 for j >= 1.

    For each j the x1^K coefficient of T a_j - L a_{j-1} contains a_{K+1,j}
    only through -2i (K+1) rho a_{K+1,j}; it is solved for K = 0, 1, ... up
    to degree 2N-1-j.

    Parameters
    ----------
    psi : float or callable
        Boundary cutoff psi(x').
    """
    N = phase.order
    depth = 2 * N + 1
    S = _setup(jet, sp, geom, phase.x.size, phase.xi, depth)
    shape = (S.x.size, S.xi.size)
    psi_vals = np.broadcast_to(np.asarray(_const(psi)(S.x), dtype=complex)[:, None], shape)
    P = phase.x1_derivative_series()
    G = phase.gradient_series()
    zero = np.zeros(shape, complex)
    all_a = []
    for j in range(N):
        deg = 2 * N - 1 - j
        a = [psi_vals.copy() if j == 0 else zero.copy()]
        prev = all_a[j - 1] if j > 0 else None
        for K in range(deg):
            trial = a + [zero]
            rest = _T_coeff(K, trial, P, G, S)
            if prev is not None:
                rest = rest - _L_coeff(K, prev, S)
            a.append(rest / (2j * (K + 1) * S.rho))
        all_a.append(tuple(a))
    return AmplitudeJet(N, tuple(all_a), psi_vals[:, 0].copy(), S.x, S.xi, S.L)


def first_transport_closed_form(jet, phase, psi, sp, geom):
    """Closed form of a_{1,0} implied by the transport equation at K = 0.

    a_{1,0} = -(i/2) q(0, x', 1, xi'/rho) psi - R_0 xi' d'psi / rho
              - phi_2 psi / rho.

    The last term comes from the second x1-derivative of the phase in the
    conjugated operator; at x1 = 0 the x'-gradient of the phase is xi', so
    no d'^2 phi term survives.
    """
    x, xi, L = phase.x, phase.xi, phase.circumference
    X, XI = x[:, None], xi[None, :]
    rh = phase.rho
    ps = np.asarray(_const(psi)(x), dtype=complex)[:, None]
    dps = _dx(ps, L)
    R0 = jet.coeff("R_coeffs", 0, X)
    q = jet.coeff("q_sharp_coeffs", 0, X) + jet.coeff("q_flat_coeffs", 0, X) * XI / rh
    return -0.5j * q * ps - R0 * XI * dps / rh - phase.coeffs[2] * ps / rh


def printed_a10(jet, phase, psi):
    """The two-term expression -(i/2) q(0,x',1,xi'/rho) psi - <R_0 xi', grad psi>/(2 rho).

    It omits the phase-curvature term of :func:`first_transport_closed_form`
    and halves its gradient term; the two agree where xi' = 0 provided m has
    no first normal derivative (otherwise phi_2 carries a -z m_1 term there).
    """
    x, xi, L = phase.x, phase.xi, phase.circumference
    X, XI = x[:, None], xi[None, :]
    rh = phase.rho
    ps = np.asarray(_const(psi)(x), dtype=complex)[:, None]
    dps = _dx(ps, L)
    R0 = jet.coeff("R_coeffs", 0, X)
    q = jet.coeff("q_sharp_coeffs", 0, X) + jet.coeff("q_flat_coeffs", 0, X) * XI / rh
    return -0.5j * q * ps - R0 * XI * dps / (2.0 * rh)


def boundary_symbol_tau(amp, phase, sp):
    """tau = psi rho - i h sum_j h^j a_{1,j} on the grid."""
    h = sp.h
    corr = 0.0
    for j in range(amp.order):
        corr = corr + h**j * amp.a(1, j)
    vals = amp.psi[:, None] * phase.rho - 1j * h * corr
    shape = (amp.x.size, amp.xi.size)
    return SymbolGrid(amp.x, amp.xi, np.broadcast_to(vals, shape), amp.circumference)


# --------------------------------------------------------------------------
# residual oracles


def _poly(coeffs, x1):
    out = 0.0
    for k, c in enumerate(coeffs):
        out = out + x1**k * c
    return out


def _phase_fields(phase, x1):
    """d1 phi, d1^2 phi, d' phi, d'^2 phi at x1 (direct polynomial evaluation)."""
    P = phase.x1_derivative_series()
    dP = [(k + 1) * P[k + 1] for k in range(len(P) - 1)]
    G = phase.gradient_series()
    dG = [_dx(c, phase.circumference) for c in G]
    return _poly(P, x1), _poly(dP, x1), _poly(G, x1), _poly(dG, x1)


def eikonal_residual(jet, phase, x1):
    """E(x1) = (d1 phi)^2 + R(x1) (d' phi)^2 - z m(x1) with the exact coefficients."""
    X = phase.x[:, None]
    P, _, G, _ = _phase_fields(phase, x1)
    R = jet.exact_or_series("R_coeffs", x1, X)
    m = jet.exact_or_series("m_coeffs", x1, X)
    return P**2 + R * G**2 - phase.z * m


def conjugated_residual_terms(jet, phase, amp, x1):
    """h-power coefficients of exp(-i phi/h) P exp(i phi/h) a at x1.

    Returns a list ``c`` with c[j] the coefficient of h^j, j = 0..N+1, computed
    from the exact operator coefficients and direct derivatives of the jets.
    Entries j <= N are O(x1^N); c[N+1] = -L a_{N-1} is the pure h^N B_N part.
    """
    L = phase.circumference
    X = phase.x[:, None]
    N = amp.order
    P, P1, G, G1 = _phase_fields(phase, x1)
    R = jet.exact_or_series("R_coeffs", x1, X)
    m = jet.exact_or_series("m_coeffs", x1, X)
    qs = jet.exact_or_series("q_sharp_coeffs", x1, X)
    qf = jet.exact_or_series("q_flat_coeffs", x1, X)
    qt = jet.exact_or_series("qtilde_coeffs", x1, X)
    E = P**2 + R * G**2 - phase.z * m

    def fields(j):
        seq = amp.coeffs[j]
        d1 = [(k + 1) * seq[k + 1] for k in range(len(seq) - 1)]
        d11 = [(k + 1) * d1[k + 1] for k in range(len(d1) - 1)]
        a = _poly(seq, x1)
        ap = _dx(a, L)
        return a, _poly(d1, x1), _poly(d11, x1), ap, _dx(ap, L)

    F = [fields(j) for j in range(N)]

    def T(j):
        a, a1, _, ap, _ = F[j]
        return (-2j * P * a1 - 2j * R * G * ap + (qs * P + qf * G - 1j * (P1 + R * G1)) * a)

    def Lop(j):
        a, a1, a11, ap, app = F[j]
        return a11 + R * app + 1j * qs * a1 + 1j * qf * ap - qt * a

    out = []
    for j in range(N + 2):
        c = 0.0
        if j < N:
            c = c + E * F[j][0]
        if 0 <= j - 1 < N:
            c = c + T(j - 1)
        if 0 <= j - 2 < N:
            c = c - Lop(j - 2)
        out.append(np.broadcast_to(c, (phase.x.size, phase.xi.size)))
    return out


def residual_ratios(jet, phase, amp, h, x1_values=None):
    """Ratios max|E(x1)|/x1^N and max|sum_{j<=N} h^j c_j(x1)|/x1^N.

    Returns a dict with arrays ``x1``, ``eikonal`` and ``transport`` and the
    size of the pure-h remainder ``b_term`` = h^(N+1) max|c_{N+1}(x1)|.
    """
    N = phase.order
    if x1_values is None:
        x1_values = 2.0 ** -np.arange(4, 11)
    x1_values = np.asarray(x1_values, dtype=float)
    eik, tra, bt = [], [], []
    for x1 in x1_values:
        eik.append(np.max(np.abs(eikonal_residual(jet, phase, x1))) / x1**N)
        c = conjugated_residual_terms(jet, phase, amp, x1)
        s = sum(h**j * c[j] for j in range(N + 1))
        tra.append(np.max(np.abs(s)) / x1**N)
        bt.append(h ** (N + 1) * np.max(np.abs(c[N + 1])))
    return {"x1": x1_values, "eikonal": np.array(eik), "transport": np.array(tra), "b_term": np.array(bt)}


# --------------------------------------------------------------------------
# phase lower bound


@dataclass
class PhaseBoundReport:
    """Outcome of the check Im phi >= x1 Im rho / 2 on 0 < x1 <= 2 delta min(1, |rho|^3)."""

    delta: float
    passed: bool
    min_margin: float
    delta_star: float


def _phase_bound_margin(phase, delta, n_x1=64):
    rh = phase.rho
    top = 2.0 * delta * np.minimum(1.0, np.abs(rh) ** 3)
    worst = np.inf
    for t in np.linspace(0.0, 1.0, n_x1 + 1)[1:]:
        x1 = t * top
        imphi = _poly([0.0] + list(phase.coeffs[1:]), x1).imag
        margin = (imphi - x1 * rh.imag / 2.0) / np.maximum(x1 * rh.imag, 1e-300)
        worst = min(worst, float(np.min(margin)))
    return worst


def phase_lower_bound_check(phase, sp=None, geom=None, delta=0.1, delta_cap=1.0, resolution=1e-3):
    """Check the phase lower bound at ``delta`` and locate the largest admissible delta.

    The margin reported is min (Im phi - x1 Im rho/2) / (x1 Im rho) over the
    sampled range; the bound holds when it is >= 0.  ``delta_star`` is the
    largest delta <= ``delta_cap`` passing the check, by bisection.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    margin = _phase_bound_margin(phase, delta)
    ok = margin >= 0.0
    if _phase_bound_margin(phase, delta_cap) >= 0.0:
        star = delta_cap
    else:
        lo, hi = 0.0, delta_cap
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if _phase_bound_margin(phase, mid) >= 0.0:
                lo = mid
            else:
                hi = mid
        star = lo
    return PhaseBoundReport(delta=delta, passed=bool(ok), min_margin=margin, delta_star=star)


def scaled_phase(phase, k, factor):
    """A copy of ``phase`` with phi_k multiplied by ``factor`` (for stress tests)."""
    coeffs = list(phase.coeffs)
    coeffs[k] = coeffs[k] * factor
    return PhaseJet(phase.order, tuple(coeffs), phase.x, phase.xi, phase.circumference, phase.z)


# --------------------------------------------------------------------------
# first-order boundary term of the DtN symbol


def lemma35_b(geom, c, n, psi, delta0, n_x=64, n_xi=513, xi_max=4.0):
    """The h-order boundary symbol b from the first transport coefficient at large xi'.

    b = -(i/2)(1 - chi) psi q(0, x', 1, xi'/sqrt(r0))
        - (1/2)(1 - chi) R_0 xi' d'psi / sqrt(r0),

    with the normal jet of the disk.  ``delta0`` fixes the cutoff chi and is
    an explicit argument so that b is independent of n.
    """
    jet = disk_normal_jet(geom.radius, c, n, 2)
    x = np.arange(n_x) * (geom.circumference / n_x)
    xi = np.linspace(-xi_max, xi_max, n_xi)
    X, XI = x[:, None], xi[None, :]
    r0 = geom.r0(X, XI)
    one_minus = 1.0 - chi_cutoff(r0, delta0)
    sq = np.sqrt(r0)
    safe = np.where(sq > 0, sq, 1.0)
    ps = np.asarray(_const(psi)(x), dtype=complex)[:, None]
    dps = _dx(ps, geom.circumference)
    q = jet.coeff("q_sharp_coeffs", 0, X) + jet.coeff("q_flat_coeffs", 0, X) * XI / safe
    R0 = jet.coeff("R_coeffs", 0, X)
    vals = -0.5j * one_minus * ps * q - 0.5 * one_minus * R0 * XI * dps / safe
    vals = np.where(one_minus > 0, vals, 0.0)
    return SymbolGrid(x, xi, np.broadcast_to(vals, (n_x, n_xi)), geom.circumference)
