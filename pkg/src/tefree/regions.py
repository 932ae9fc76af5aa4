"""Eigenvalue-free region predicates, coefficient conditions and counting laws."""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import IncompleteSpectrum, InsufficientData
from .symbolcore import BoundaryGeometry


class RegionKind(str, Enum):
    LambdaPlus = "LambdaPlus"
    LambdaMinus = "LambdaMinus"
    T12_Front = "T12_Front"
    T18_NegAxis = "T18_NegAxis"
    PV_Strip = "PV_Strip"


@dataclass(frozen=True)
class RegionSpec:
    """A region of the lambda plane and its constants.

    ``C`` is the main constant (C_eps, C or C_N depending on the kind),
    ``C_tilde`` the abscissa of LambdaMinus, ``eps``, ``N`` and ``kappa`` the
    exponent parameters.
    """

    kind: RegionKind
    C: float = 1.0
    eps: float = 0.05
    N: int = 1
    C_tilde: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        if not self.C > 0 or not self.C_tilde > 0:
            raise ValueError("region constants must be positive")
        if self.kind is RegionKind.LambdaPlus and not 0 < self.eps <= 0.25:
            raise ValueError("eps must lie in (0, 0.25]")
        if self.kind is RegionKind.T18_NegAxis and self.N < 1:
            raise ValueError("N must be at least 1")
        if self.kind is RegionKind.PV_Strip and not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")

    @property
    def exponent(self):
        """Exponent p of the boundary curve |Im lambda| = C (|Re lambda| + 1)^p."""
        return {
            RegionKind.LambdaPlus: 0.75 + self.eps,
            RegionKind.LambdaMinus: 0.0,
            RegionKind.T12_Front: 0.8,
            RegionKind.T18_NegAxis: -float(self.N),
            RegionKind.PV_Strip: 1.0 - 0.5 * self.kappa,
        }[self.kind]

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def in_region(lam, spec):
    """True if ``lam`` lies in the region described by ``spec``."""
    lam = complex(lam)
    x, y = lam.real, abs(lam.imag)
    k = spec.kind
    if k is RegionKind.LambdaPlus:
        return x >= 0 and y >= spec.C * (x + 1.0) ** (0.75 + spec.eps)
    if k is RegionKind.LambdaMinus:
        return x <= -spec.C_tilde or (-spec.C_tilde <= x <= 0 and y >= spec.C)
    if k is RegionKind.T12_Front:
        return x >= 0 and y >= spec.C * (x + 1.0) ** 0.8
    if k is RegionKind.T18_NegAxis:
        return x <= 0 and y >= spec.C * (abs(x) + 1.0) ** (-spec.N)
    return y >= spec.C * (abs(x) + 1.0) ** (1.0 - 0.5 * spec.kappa)


# --------------------------------------------------------------------------
# coefficient conditions


@dataclass(frozen=True)
class ConditionFlags:
    """Truth of each boundary condition on the media at every sampled node."""

    c12: bool
    c13: bool
    c14: bool
    c15: bool
    c16: bool
    c17: bool
    c18: bool
    c19: bool

    def as_dict(self):
        return {f"({k[1]}.{k[2]})": v for k, v in self.__dict__.items()}


def _ne(a, b, rtol):
    return np.abs(a - b) > rtol * np.maximum(np.abs(a), np.abs(b))


def condition_flags(mp, geom=None, n_nodes=256, rtol=1e-14):
    """Evaluate the conditions (1.2)..(1.9) on ``n_nodes`` boundary nodes."""
    geom = BoundaryGeometry() if geom is None else geom
    x = np.arange(n_nodes) * (geom.circumference / n_nodes)
    c1, n1, c2, n2 = mp.values(x)
    d1, d2 = mp.normal_derivatives(x)
    p1, p2 = c1 * n1, c2 * n2
    m1, m2 = n1 / c1, n2 / c2
    prod = (c1 - c2) * (p1 - p2)
    flags = ConditionFlags(
        c12=bool(np.all(_ne(p1, p2, rtol))),
        c13=bool(np.all(~_ne(c1, c2, rtol)) and np.all(~_ne(d1, d2, rtol) | ((d1 == 0) & (d2 == 0)))),
        c14=bool(np.all(_ne(c1, c2, rtol))),
        c15=bool(np.all(_ne(m1, m2, rtol))),
        c16=bool(np.all(~_ne(m1, m2, rtol))),
        c17=bool(np.all(prod > 0)),
        c18=bool(np.all(prod < 0)),
        c19=bool(np.all(~_ne(n1, n2, rtol))),
    )
    assert not flags.c18 or flags.c15, "(1.8) holds but (1.5) does not"
    assert not (flags.c17 and flags.c18)
    return flags


# --------------------------------------------------------------------------
# envelope exponent fits


@dataclass
class ExponentFit:
    """Least-squares fit of log|Im lambda| = log C + beta log(|Re lambda| + 1).

    ``beta = -inf`` (and C = 0) when every eigenvalue in the window is real.
    """

    beta: float
    C: float
    n_window: int
    envelope: np.ndarray = field(repr=False)

    def accepts(self, p, margin=0.05):
        """True if the envelope is consistent with no eigenvalues above exponent p."""
        return self.beta <= p + margin


def _lams(eigs):
    if hasattr(eigs, "lambdas"):
        return np.asarray(eigs.lambdas, dtype=complex)
    out = []
    for e in eigs:
        out.append(complex(e.lam) if hasattr(e, "lam") else complex(e))
    return np.asarray(out, dtype=complex)


def exponent_fit(eigs, branch="re_nonneg", window=10.0, min_count=10, bins_per_decade=1):
    """Fit the upper envelope of |Im lambda| against |Re lambda| + 1.

    Parameters
    ----------
    eigs : iterable of EigRecord, Spectrum or complex
    branch : {"re_nonneg", "re_nonpos"}
    window : float
        Only eigenvalues with |Re lambda| + 1 >= window enter.
    bins_per_decade : int
        The envelope is the per-bin maximum of |Im lambda| on log-spaced bins.

    Raises
    ------
    InsufficientData
        Fewer than ``min_count`` eigenvalues in the window, or fewer than two
        nonreal envelope points.
    """
    lam = _lams(eigs)
    if branch in ("re_nonneg", "Re>=0"):
        lam = lam[lam.real >= 0]
    elif branch in ("re_nonpos", "Re<=0"):
        lam = lam[lam.real <= 0]
    else:
        raise ValueError(f"unknown branch {branch!r}")
    x = np.abs(lam.real) + 1.0
    y = np.abs(lam.imag)
    keep = x >= window
    x, y = x[keep], y[keep]
    if x.size < min_count:
        raise InsufficientData(f"{x.size} eigenvalues in the fit window, need {min_count}")
    if not np.any(y > 0):
        return ExponentFit(-math.inf, 0.0, int(x.size), np.empty((0, 2)))
    lo = math.log10(window)
    hi = math.log10(float(x.max()))
    nb = max(1, int(math.ceil((hi - lo) * bins_per_decade - 1e-12)))
    edges = lo + np.arange(nb + 1) / bins_per_decade
    edges[-1] = max(edges[-1], hi)
    lx = np.log10(x)
    pts = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (lx >= a) & ((lx < b) | (b == edges[-1])) & (y > 0)
        if np.any(sel):
            i = np.flatnonzero(sel)[np.argmax(y[sel])]
            pts.append((x[i], y[i]))
    if len(pts) < 2:
        raise InsufficientData("fewer than two nonreal envelope points")
    env = np.array(pts)
    beta, logc = np.polyfit(np.log(env[:, 0]), np.log(env[:, 1]), 1)
    return ExponentFit(float(beta), float(math.exp(logc)), int(x.size), env)


# --------------------------------------------------------------------------
# counting functions


def weyl_tau(cfg):
    """tau_1 + tau_2 for the disk in two dimensions: (R^2 / 4)(n1/c1 + n2/c2)."""
    c1, n1, c2, n2 = cfg.coefficients
    omega_2 = math.pi
    area = math.pi * cfg.radius**2
    return omega_2 / (2.0 * math.pi) ** 2 * area * (n1 / c1 + n2 / c2)


def surface_speed(cfg):
    """c = |c1^2 - c2^2| / |c1 n1 - c2 n2| on the boundary."""
    c1, n1, c2, n2 = cfg.coefficients
    return abs(c1**2 - c2**2) / abs(c1 * n1 - c2 * n2)


def predicted_n_minus(cfg, r):
    """(r / 2 pi) * omega_1 * |Gamma| * c^(-1/2) with omega_1 = 2."""
    return r / (2.0 * math.pi) * 2.0 * (2.0 * math.pi * cfg.radius) / math.sqrt(surface_speed(cfg))


@dataclass
class WeylRow:
    r: float
    n_total: int
    n_total_pred: float
    ratio_total: float
    n_minus: int
    n_minus_pred: float
    ratio_minus: float
    complete: bool


def weyl_compare(eigs, cfg, r_values, mp_flags=None):
    """Empirical counting functions against their leading-order laws.

    ``eigs`` should be a :class:`tefree.rootscan.Spectrum`; its rectangle
    decides whether the disk |lambda| <= r^2 was fully scanned (``complete``).
    The N^- columns are NaN unless condition (1.8) holds.

    Raises
    ------
    IncompleteSpectrum
        If the spectrum's sentinel modes did not certify the mode cutoff.
    """
    if getattr(eigs, "sentinel_ok", True) is False:
        raise IncompleteSpectrum("the mode cutoff was not certified by the sentinel modes")
    rect = getattr(eigs, "rect", None)
    if hasattr(eigs, "records"):
        recs = eigs.records
    else:
        recs = list(eigs)
    lam = np.array([complex(e.lam) for e in recs], dtype=complex)
    mult = np.array([int(e.multiplicity) for e in recs], dtype=int)
    flags = condition_flags(cfg.media) if mp_flags is None else mp_flags
    tau = weyl_tau(cfg)
    rows = []
    for r in r_values:
        r = float(r)
        inside = np.abs(lam) <= r * r
        n_tot = int(mult[inside].sum())
        pred = tau * r * r
        if flags.c18:
            n_minus = int(mult[inside & (lam.real < 0)].sum())
            pm = predicted_n_minus(cfg, r)
            rm = n_minus / pm
        else:
            n_minus, pm, rm = 0, math.nan, math.nan
        complete = True
        if rect is not None:
            R2 = r * r
            complete = (rect.re_min <= -R2 and rect.re_max >= R2 and rect.im_min <= -R2 and rect.im_max >= R2)
        rows.append(WeylRow(r, n_tot, pred, n_tot / pred, n_minus, pm, rm, complete))
    return rows
