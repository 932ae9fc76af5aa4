"""Zeros of analytic functions in rectangles by the argument principle.

A rectangle is split recursively; the winding number of every cell is the
phase increment of f along its boundary divided by 2 pi.  Edge increments
are cached and shared between neighbouring cells, so the windings of the
children add up to the winding of their parent by construction (this is
still asserted).  Cells of winding one are finished by Newton's method.

Functions may return plain complex values or pairs ``(value, log_scale)``
meaning ``value * exp(log_scale)``; only ratios of values are ever formed,
so the scaled form never overflows.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.optimize import brentq

from .errors import (ContourThroughZero, NewtonDivergence, PhaseJumpUnresolved,
                     SentinelNonzeroWinding)

log = logging.getLogger(__name__)

MAX_SIDE_SAMPLES = 2**14
START_SAMPLES = 64
_MAX_JUMP = 0.5 * math.pi
_ZERO_REL = 1e-12


@dataclass(frozen=True)
class ScanRegion:
    """Axis-aligned rectangle in the lambda plane with an exclusion radius around 0."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    exclusion: float = 0.0

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("need re_min < re_max and im_min < im_max")
        if self.exclusion < 0:
            raise ValueError("exclusion radius must be nonnegative")

    @classmethod
    def coerce(cls, rect):
        if isinstance(rect, ScanRegion):
            return rect
        return cls(*(float(v) for v in rect))

    @property
    def scale(self):
        return max(1.0, abs(self.re_min), abs(self.re_max), abs(self.im_min), abs(self.im_max))

    @property
    def corners(self):
        return (complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max))

    def contains(self, lam, closed=True):
        lam = complex(lam)
        if closed:
            return self.re_min <= lam.real <= self.re_max and self.im_min <= lam.imag <= self.im_max
        return self.re_min < lam.real < self.re_max and self.im_min < lam.imag < self.im_max

    def dilate(self, d):
        return ScanRegion(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d, self.exclusion)


@dataclass
class EigRecord:
    """One zero: location, angular mode, multiplicity and quality data.

    ``residual`` is |f| at the root relative to the magnitude of the terms
    of f (the ``value`` part of a scaled evaluation).
    """

    lam: complex
    mode: int = 0
    multiplicity: int = 1
    residual: float = float("nan")
    newton_iters: int = 0


# --------------------------------------------------------------------------
# evaluation helpers


class _Scaled:
    """Wrap f so that every call returns (value, log_scale) arrays."""

    def __init__(self, f, deflate=0, guard_origin=False):
        self.f = f
        self.deflate = deflate
        self.guard_origin = guard_origin or deflate != 0
        self.calls = 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.guard_origin and np.any(z == 0):
            raise ContourThroughZero("contour passes through the excluded origin")
        out = self.f(z)
        self.calls += z.size
        if isinstance(out, tuple):
            v, ls = (np.asarray(o) for o in out)
            v = v.astype(complex)
            ls = np.broadcast_to(ls.astype(float), v.shape).copy()
            if self.deflate:
                v = v * np.exp(-1j * self.deflate * np.angle(z))
                ls = ls - self.deflate * np.log(np.abs(z))
        else:
            # plain values keep their size, so the residual is |f| itself
            v = np.broadcast_to(np.asarray(out, dtype=complex), z.shape).copy()
            if self.deflate:
                v = v / z**self.deflate
            ls = np.zeros(v.shape)
        return v, ls


def _phase_increment(g, a, b, n0=START_SAMPLES, zero_rel=_ZERO_REL):
    """Continuous change of arg g along the segment a -> b.

    Sampling starts at ``n0`` points and segments whose phase jump exceeds
    pi/2 are bisected until every jump is below pi/2.  The accepted sampling
    is then checked once more with every segment halved; a changed
    increment (a full turn hidden between two samples) restarts the
    refinement from the finer sampling.
    """
    t = np.linspace(0.0, 1.0, n0 + 1)
    v, _ = g(a + (b - a) * t)
    verified = None
    while True:
        if not np.all(np.isfinite(v)):
            raise ContourThroughZero("non-finite value on the contour")
        av = np.abs(v)
        if np.any(av <= zero_rel * max(float(np.max(av)), 1e-300)):
            raise ContourThroughZero("contour passes (numerically) through a zero")
        d = np.angle(v[1:] / v[:-1])
        bad = np.abs(d) > _MAX_JUMP
        if not np.any(bad):
            inc = float(np.sum(d))
            if verified is not None and abs(inc - verified) < 1.0:
                return inc
            verified = inc
            bad = np.ones_like(bad)
        else:
            verified = None
        if t.size - 1 + int(np.count_nonzero(bad)) > MAX_SIDE_SAMPLES:
            raise PhaseJumpUnresolved(f"phase jumps remain at {MAX_SIDE_SAMPLES} samples per side")
        idx = np.nonzero(bad)[0]
        tm = 0.5 * (t[idx] + t[idx + 1])
        vm, _ = g(a + (b - a) * tm)
        t = np.insert(t, idx + 1, tm)
        v = np.insert(v, idx + 1, vm)


class _EdgeCache:
    def __init__(self, g, n0=START_SAMPLES):
        self.g = g
        self.n0 = n0
        self.store = {}

    def __call__(self, a, b):
        key = (a, b)
        if key in self.store:
            return self.store[key]
        if (b, a) in self.store:
            return -self.store[(b, a)]
        inc = _phase_increment(self.g, a, b, self.n0)
        self.store[key] = inc
        return inc


def _cell_increment(edges, cell):
    """Total phase increment around cell = (x0, x1, y0, y1, xs, ys).

    ``xs``/``ys`` are the breakpoints along the bottom/top (x) and left/right
    (y) sides, so shared sub-edges match their neighbours exactly.
    """
    x0, x1, y0, y1, xs, ys = cell
    tot = 0.0
    pts_b = [complex(x, y0) for x in xs]
    pts_r = [complex(x1, y) for y in ys]
    pts_t = [complex(x, y1) for x in reversed(xs)]
    pts_l = [complex(x0, y) for y in reversed(ys)]
    for path in (pts_b, pts_r, pts_t, pts_l):
        for a, b in zip(path[:-1], path[1:]):
            tot += edges(a, b)
    return tot


def _winding_from_increment(inc):
    w = inc / (2.0 * math.pi)
    n = int(round(w))
    if abs(w - n) > 0.25:
        raise PhaseJumpUnresolved(f"winding {w:.4f} is not close to an integer")
    return n


def _outer_winding(g, r, n0, retries):
    """Winding of g around r, dilating r on contact with a zero; returns (winding, r, edges)."""
    for attempt in range(retries + 1):
        try:
            edges = _EdgeCache(g, n0)
            x0, x1, y0, y1 = r.re_min, r.re_max, r.im_min, r.im_max
            inc = _cell_increment(edges, (x0, x1, y0, y1, [x0, x1], [y0, y1]))
            return _winding_from_increment(inc), r, edges
        except ContourThroughZero:
            if attempt == retries:
                raise
            r = r.dilate(1e-6 * r.scale)


def winding_count(f, rect, samples_per_side=START_SAMPLES, retries=5, exclude_origin=False):
    """Winding number of f around the rectangle ``(re_min, re_max, im_min, im_max)``.

    If the contour passes within numerical reach of a zero, the rectangle is
    dilated by 1e-6 times its scale and the count retried (at most
    ``retries`` times).  With ``exclude_origin`` a zero of f at 0 is divided
    out first.
    """
    r = ScanRegion.coerce(rect)
    deflate = 0
    guard = exclude_origin and r.dilate(1e-6 * r.scale).contains(0.0)
    if guard:
        deflate = _deflation_order(f, r.scale)
    return _outer_winding(_Scaled(f, deflate, guard), r, int(samples_per_side), retries)[0]


# --------------------------------------------------------------------------
# Newton refinement


def _newton(g, z0, cell, tol, scale, max_iter=60):
    """Newton on the log-derivative; returns (root, residual, iterations)."""
    x0, x1, y0, y1 = cell
    pad = 0.5 * max(x1 - x0, y1 - y0)
    z = complex(z0)
    if z == 0:
        z = complex(1e-3 * pad, 1.3e-3 * pad)
    step_h = 1e-7 * scale
    for it in range(1, max_iter + 1):
        v, ls = g(np.array([z, z + step_h, z - step_h]))
        if v[0] == 0:
            return z, 0.0, it
        fp = v[1] * np.exp(ls[1] - ls[0]) - v[2] * np.exp(ls[2] - ls[0])
        dlog = fp / (2.0 * step_h * v[0])
        if not np.isfinite(dlog) or dlog == 0:
            raise NewtonDivergence("derivative vanished")
        dz = -1.0 / dlog
        z = z + dz
        if not (x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad):
            raise NewtonDivergence("iterate left its cell")
        if abs(dz) <= 1e-14 * max(abs(z), 1.0):
            v, _ = g(np.array([z]))
            res = float(abs(v[0]))
            if res <= tol:
                return z, res, it
            raise NewtonDivergence(f"stalled with residual {res:.3g}")
        if it >= 3 and abs(dz) <= 1e-9 * scale:
            v, _ = g(np.array([z]))
            res = float(abs(v[0]))
            if res <= tol:
                # one polishing step
                v2, ls2 = g(np.array([z, z + step_h, z - step_h]))
                if v2[0] != 0:
                    fp = v2[1] * np.exp(ls2[1] - ls2[0]) - v2[2] * np.exp(ls2[2] - ls2[0])
                    dz = -2.0 * step_h * v2[0] / fp
                    zn = z + dz
                    vn, _ = g(np.array([zn]))
                    if abs(vn[0]) <= res:
                        return zn, float(abs(vn[0])), it + 1
                return z, res, it
    raise NewtonDivergence("no convergence")


def _snap_real(g, z, cell, scale):
    """Replace a near-real root by the real root certified by a sign change."""
    x0, x1, y0, y1 = cell
    if not (y0 < 0.0 < y1):
        return z
    if abs(z.imag) > 1e-6 * scale:
        return z
    eps = max(1e-9 * scale, 10 * abs(z.imag))
    a, b = max(z.real - eps, x0), min(z.real + eps, x1)
    fa = g(np.array([complex(a)]))[0][0]
    fb = g(np.array([complex(b)]))[0][0]
    if abs(fa.imag) > 1e-6 * abs(fa) or abs(fb.imag) > 1e-6 * abs(fb):
        return z
    if fa.real * fb.real >= 0:
        return z
    r = brentq(lambda t: g(np.array([complex(t)]))[0][0].real, a, b, xtol=1e-15 * scale, rtol=1e-15)
    return complex(r, 0.0)


# --------------------------------------------------------------------------
# subdivision


@dataclass
class _Cell:
    x0: float
    x1: float
    y0: float
    y1: float
    xs: list = field(default_factory=list)  # breakpoints along bottom/top
    ys: list = field(default_factory=list)  # breakpoints along left/right
    winding: int = 0

    @property
    def tuple(self):
        return (self.x0, self.x1, self.y0, self.y1, self.xs, self.ys)

    @property
    def diameter(self):
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def center(self):
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))


_SPLIT_FRACTIONS = (0.5, 0.5 + 0.0137, 0.5 - 0.0213, 0.5 + 0.0391, 0.5 - 0.0577)


def _children(cell, fx, fy, split_x, split_y):
    """Split along x and/or y; breakpoints of the parent are inherited."""
    xm = cell.x0 + fx * (cell.x1 - cell.x0)
    ym = cell.y0 + fy * (cell.y1 - cell.y0)
    xcuts = [(cell.x0, xm), (xm, cell.x1)] if split_x else [(cell.x0, cell.x1)]
    ycuts = [(cell.y0, ym), (ym, cell.y1)] if split_y else [(cell.y0, cell.y1)]
    out = []
    for a, b in xcuts:
        xs = sorted({a, b} | {x for x in cell.xs if a < x < b})
        for c, d in ycuts:
            ys = sorted({c, d} | {y for y in cell.ys if c < y < d})
            out.append(_Cell(a, b, c, d, xs, ys))
    return out


def _split(edges, cell):
    """Children of ``cell`` with windings, perturbing the split line on trouble."""
    w, h = cell.x1 - cell.x0, cell.y1 - cell.y0
    split_x = w >= 0.5 * h
    split_y = h >= 0.5 * w
    last = None
    for fr in _SPLIT_FRACTIONS:
        kids = _children(cell, fr, fr, split_x, split_y)
        try:
            for k in kids:
                k.winding = _winding_from_increment(_cell_increment(edges, k.tuple))
        except (ContourThroughZero, PhaseJumpUnresolved) as exc:
            last = exc
            continue
        total = sum(k.winding for k in kids)
        if total != cell.winding:
            last = PhaseJumpUnresolved(f"winding not conserved: {cell.winding} -> {total}")
            continue
        return kids
    raise last


def _center_record(g, c):
    z = c.center
    try:
        v, _ = g(np.array([z]))
        res = float(abs(v[0]))
    except ContourThroughZero:
        res = float("nan")
    return EigRecord(z, 0, c.winding, res, 0)


def _cell_roots(g, edges, cell, tol, min_diam, scale, records):
    stack = [cell]
    while stack:
        c = stack.pop()
        if c.winding == 0:
            continue
        if c.winding == 1:
            try:
                z, res, it = _newton(g, c.center, (c.x0, c.x1, c.y0, c.y1), tol, scale)
                if c.x0 <= z.real <= c.x1 and c.y0 <= z.imag <= c.y1:
                    z = _snap_real(g, z, (c.x0, c.x1, c.y0, c.y1), scale)
                    records.append(EigRecord(z, 0, 1, res, it))
                    continue
            except (NewtonDivergence, ContourThroughZero):
                pass
            if c.diameter < min_diam:
                records.append(_center_record(g, c))
                continue
        elif c.diameter < min_diam:
            records.append(_center_record(g, c))
            continue
        stack.extend(reversed(_split(edges, c)))


def _deflation_order(f, scale):
    r = 1e-6 * scale
    return _outer_winding(_Scaled(f), ScanRegion(-r, r, -r, r), START_SAMPLES, 5)[0]


def find_roots(f, rect, tol=1e-10, exclude_origin=True, retries=5):
    """All zeros of f inside ``rect`` with multiplicities.

    Parameters
    ----------
    f : callable
        Vectorized in a complex array; returns values or ``(value, log_scale)``.
    rect : ScanRegion or 4-tuple
    tol : float
        Relative residual target for Newton; cells are not split below a
        diameter of 1e3 * tol * scale.
    exclude_origin : bool
        If the rectangle contains 0, the zero of f at 0 (order found on a
        square of half-width 1e-6 * scale) is divided out first.

    Returns
    -------
    list of EigRecord
        Sorted by real then imaginary part.  The total multiplicity equals
        the winding number of the (possibly dilated) outer contour.
    """
    r = ScanRegion.coerce(rect)
    scale = r.scale
    deflate = 0
    guard = exclude_origin and r.dilate(1e-6 * scale).contains(0.0)
    if guard:
        deflate = _deflation_order(f, scale)
    g = _Scaled(f, deflate, guard)
    wind, r, edges = _outer_winding(g, r, START_SAMPLES, retries)
    top = _Cell(r.re_min, r.re_max, r.im_min, r.im_max, [r.re_min, r.re_max], [r.im_min, r.im_max], wind)
    if top.winding < 0:
        raise PhaseJumpUnresolved(f"negative winding {top.winding}: f is not analytic in the rectangle")
    records = []
    _cell_roots(g, edges, top, tol, 1e3 * tol * scale, scale, records)
    total = sum(rec.multiplicity for rec in records)
    assert total == top.winding, f"multiplicity {total} != winding {top.winding}"
    records.sort(key=lambda e: (e.lam.real, e.lam.imag))
    return records


# --------------------------------------------------------------------------
# transmission spectrum of the disk


def auto_k_max(cfg, rect):
    """ceil(sqrt(max |lambda|) R max_j sqrt(n_j/c_j)) + 20."""
    r = ScanRegion.coerce(rect)
    lam_max = max(abs(c) for c in r.corners)
    c1, n1, c2, n2 = cfg.coefficients
    return int(math.ceil(math.sqrt(lam_max) * cfg.radius * max(math.sqrt(n1 / c1), math.sqrt(n2 / c2)))) + 20


@dataclass
class Spectrum:
    """Roots of all angular modes in one rectangle."""

    records: list
    rect: ScanRegion
    k_max: int
    sentinel_ok: bool
    windings: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def lambdas(self):
        return np.array([r.lam for r in self.records], dtype=complex)

    @property
    def multiplicities(self):
        return np.array([r.multiplicity for r in self.records], dtype=int)

    def total_multiplicity(self):
        return int(self.multiplicities.sum()) if self.records else 0


def _mode_function(k, cfg):
    from .diskmodel import transmission_det

    def f(lam):
        return transmission_det(k, lam, cfg)

    return f


def _scan_mode(k, cfg, rect, tol):
    recs = find_roots(_mode_function(k, cfg), rect, tol)
    for rec in recs:
        rec.mode = k
        if k > 0:
            rec.multiplicity *= 2
    return k, recs


def spectrum(cfg, rect, k_max="auto", tol=1e-10, workers=1, sentinels=3, check_sentinels=True):
    """Transmission eigenvalues of the disk in ``rect`` over modes 0..k_max.

    Roots of mode k > 0 count twice (modes +k and -k).

    Raises
    ------
    SentinelNonzeroWinding
        If one of the ``sentinels`` modes above k_max has zeros in the rectangle.
    """
    r = ScanRegion.coerce(rect)
    if k_max == "auto" or k_max is None:
        k_max = auto_k_max(cfg, r)
    k_max = int(k_max)
    modes = list(range(k_max + 1))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda k: _scan_mode(k, cfg, r, tol), modes))
    else:
        results = [_scan_mode(k, cfg, r, tol) for k in modes]
    records = []
    windings = {}
    for k, recs in results:
        records.extend(recs)
        windings[k] = sum(rec.multiplicity for rec in recs) // (2 if k > 0 else 1)
    # an unchecked cutoff is not certified
    ok = bool(check_sentinels)
    if check_sentinels:
        for k in range(k_max + 1, k_max + 1 + sentinels):
            w = winding_count(_mode_function(k, cfg), r, exclude_origin=True)
            windings[k] = w
            if w != 0:
                ok = False
                raise SentinelNonzeroWinding(f"mode {k} above k_max = {k_max} has {w} zeros; raise k_max")
    records.sort(key=lambda e: (e.lam.real, e.lam.imag, e.mode))
    log.info("spectrum: %d roots over %d modes", len(records), k_max + 1)
    return Spectrum(records, r, k_max, ok, windings)
