"""Semiclassical quantization on the circle in the Fourier basis.

For a symbol a(x', xi') on the circle of circumference L the left
quantization acts on f = sum_m f_m exp(2 pi i m x / L) by

    Op_h(a) f (x) = sum_m a(x, 2 pi h m / L) f_m exp(2 pi i m x / L).

Writing a(x, xi) = sum_n ahat_n(xi) exp(2 pi i n x / L), the matrix of Op_h(a)
in the Fourier basis is A[p, m] = ahat_{p-m}(xi_m).  x'-independent symbols
give diagonal matrices.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import FrequencyOutOfRange, NoConvergence
from .symbolcore import SymbolGrid


@dataclass(frozen=True)
class PeriodicFunction:
    """Fourier coefficients f_m, |m| <= M, on a circle of circumference L.

    The coefficient array is ordered m = -M..M.  The L2 norm is
    sqrt(L * sum |f_m|^2).
    """

    fourier_coeffs: np.ndarray
    circumference: float = 2.0 * math.pi

    def __post_init__(self):
        c = np.array(self.fourier_coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("need an odd number of coefficients (m = -M..M)")
        if not self.circumference > 0:
            raise ValueError("circumference must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "fourier_coeffs", c)

    @property
    def M(self):
        return self.fourier_coeffs.size // 2

    @property
    def modes(self):
        return np.arange(-self.M, self.M + 1)

    @classmethod
    def mode(cls, m, M, circumference=2.0 * math.pi):
        """The single exponential exp(2 pi i m x / L)."""
        c = np.zeros(2 * M + 1, dtype=complex)
        c[m + M] = 1.0
        return cls(c, circumference)

    @classmethod
    def from_samples(cls, values, M, circumference=2.0 * math.pi):
        """Coefficients |m| <= M from equispaced samples on [0, L)."""
        values = np.asarray(values, dtype=complex)
        n = values.size
        if n < 2 * M + 1:
            raise ValueError("need at least 2M+1 samples")
        F = np.fft.fft(values) / n
        idx = np.arange(-M, M + 1) % n
        return cls(F[idx], circumference)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ph = np.exp(2j * np.pi * np.multiply.outer(x, self.modes) / self.circumference)
        return ph @ self.fourier_coeffs

    def norm(self):
        return math.sqrt(self.circumference * float(np.sum(np.abs(self.fourier_coeffs) ** 2)))


def frequencies(h, M, circumference):
    """Discrete frequencies xi'_m = 2 pi h m / L for m = -M..M."""
    return 2.0 * np.pi * h * np.arange(-M, M + 1) / circumference


def _x_spectrum(a):
    """ahat_n(xi) on the xi grid, n = -B..B (B = n_x // 2 - 1 when n_x is even)."""
    n = a.x.size
    F = np.fft.fft(a.values, axis=0) / n
    B = (n - 1) // 2
    idx = np.arange(-B, B + 1) % n
    return F[idx], B


def _sampled_spectrum(a, xi, circumference):
    """ahat_n evaluated at the frequencies ``xi``; returns (coeffs[n, m], B)."""
    if callable(a):
        return None
    if abs(a.circumference - circumference) > 1e-12 * circumference:
        raise ValueError("symbol and function live on different circles")
    lo, hi = a.xi[0], a.xi[-1]
    tol = 1e-12 * max(1.0, abs(hi))
    if np.any(xi < lo - tol) or np.any(xi > hi + tol):
        raise FrequencyOutOfRange(
            f"frequencies up to {np.max(np.abs(xi)):.6g} leave the symbol range [{lo:.6g}, {hi:.6g}]")
    spec, B = _x_spectrum(a)
    if a.x_independent:
        spec = spec[B : B + 1]
        B = 0
    xi_c = np.clip(xi, lo, hi)
    out = CubicSpline(a.xi, spec, axis=1)(xi_c)
    # keep exact node values where frequencies hit the grid
    pos = np.searchsorted(a.xi, xi_c)
    pos = np.clip(pos, 0, a.xi.size - 1)
    hit = np.abs(a.xi[pos] - xi_c) <= 1e-14 * max(1.0, abs(hi))
    out[:, hit] = spec[:, pos[hit]]
    return out, B


def op_matrix(a, h, M, circumference=None, M_out=None, n_x=256):
    """Matrix of Op_h(a) from modes |m| <= M to modes |p| <= M_out.

    Parameters
    ----------
    a : SymbolGrid or callable
        A callable is evaluated as a(x, xi) on ``n_x`` equispaced points.
    M_out : int, optional
        Output truncation (default M).

    Raises
    ------
    FrequencyOutOfRange
        If 2 pi h M / L exceeds the xi' range of a SymbolGrid.
    """
    if circumference is None:
        circumference = a.circumference if isinstance(a, SymbolGrid) else 2.0 * math.pi
    M_out = M if M_out is None else M_out
    xi = frequencies(h, M, circumference)
    if isinstance(a, SymbolGrid):
        spec, B = _sampled_spectrum(a, xi, circumference)
    else:
        x = np.arange(n_x) * (circumference / n_x)
        vals = np.asarray(a(x[:, None], xi[None, :]), dtype=complex)
        vals = np.broadcast_to(vals, (n_x, xi.size))
        F = np.fft.fft(vals, axis=0) / n_x
        B = (n_x - 1) // 2
        spec = F[np.arange(-B, B + 1) % n_x]
    A = np.zeros((2 * M_out + 1, 2 * M + 1), dtype=complex)
    cols = np.arange(2 * M + 1)
    m = cols - M
    for n in range(-B, B + 1):
        p = m + n
        ok = np.abs(p) <= M_out
        A[p[ok] + M_out, cols[ok]] = spec[n + B, ok]
    return A


def op_h_apply(a, f, h):
    """Apply Op_h(a) to ``f``; the result keeps the truncation |m| <= M of f."""
    A = op_matrix(a, h, f.M, f.circumference)
    return PeriodicFunction(A @ f.fourier_coeffs, f.circumference)


def matrix_norm(A, rtol=1e-8, max_iter=10000, seed=None):
    """Largest singular value by power iteration on A* A.

    The start vector is all ones, or a seeded complex Gaussian if ``seed`` is
    given.  Convergence is declared when the norm estimate changes by less
    than ``rtol`` relative in one step.

    Raises
    ------
    NoConvergence
        After ``max_iter`` iterations.
    """
    n = A.shape[1]
    if seed is None:
        v = np.ones(n, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    nv = np.linalg.norm(v)
    if nv == 0 or not np.any(A):
        return 0.0
    v /= nv
    est = 0.0
    AH = A.conj().T
    for _ in range(max_iter):
        w = AH @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the kernel; restart on a seeded random vector
            rng = np.random.default_rng(0 if seed is None else seed + 1)
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - est) <= rtol * new:
            return float(np.linalg.norm(A @ v))
        est = new
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def op_norm(a, h, M, circumference=None, seed=None, rtol=1e-8, max_iter=10000):
    """L2 operator norm of the truncated Op_h(a), modes |m| <= M."""
    if M < 1:
        raise ValueError("M must be positive")
    A = op_matrix(a, h, M, circumference)
    return matrix_norm(A, rtol=rtol, max_iter=max_iter, seed=seed)


def composition_defect(a_plus, a_minus, h, M, seed=None, rtol=1e-8):
    """Norm of Op_h(a+) Op_h(a-) - Op_h(a+ a-) on modes |m| <= M.

    The intermediate space keeps modes up to M + B, where B is the x'-bandwidth
    of a-, so that truncation does not create a spurious defect.  Both symbols
    must be SymbolGrids on the same grid; their product is taken pointwise.
    """
    if a_plus.values.shape != a_minus.values.shape or not (
            np.array_equal(a_plus.x, a_minus.x) and np.array_equal(a_plus.xi, a_minus.xi)):
        raise ValueError("symbols must share one grid")
    L = a_plus.circumference
    B = 0 if a_minus.x_independent else (a_minus.x.size - 1) // 2
    inner = M + B
    Am = op_matrix(a_minus, h, M, L, M_out=inner)
    Ap = op_matrix(a_plus, h, inner, L, M_out=M)
    Apm = op_matrix(a_plus * a_minus, h, M, L)
    return matrix_norm(Ap @ Am - Apm, rtol=rtol, seed=seed)
