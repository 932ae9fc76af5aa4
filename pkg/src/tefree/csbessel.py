"""Bessel functions J_k(w) of integer order and complex argument.

Small arguments use the ascending series; everything else uses Miller's
backward recurrence normalized with the generating-function identity

    exp(i*s*w) = J_0(w) + 2 * sum_{n>=1} (i*s)**n J_n(w),   s = +-1,

where the sign s is chosen so that |exp(i*s*w)| >= 1.  With that choice the
normalization sum has no cancellation even when |Im w| is large.

Every routine can return the value split as ``scaled * exp(log_scale)``; the
backward recurrence is rescaled on the fly, so J_k(w) is available for
|Im w| in the thousands and for tiny |w| at large order.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BesselOverflow, NonFinite

MAX_ORDER = 2000
MAX_ARGUMENT = 1.0e4

_BIG = 1.0e250
_LOG_BIG = math.log(_BIG)
_LOG_MAX = 709.0


@njit(cache=True, nogil=True)
def _use_series(k, aw):
    # terms of the ascending series then shrink by at least 1/4 per step
    return aw <= 4.0 or aw * aw <= k + 1.0


@njit(cache=True, nogil=True)
def _series(k, w):
    """J_k(w) = s * exp(logt) from the ascending series (w != 0)."""
    q = -0.25 * w * w
    aq = abs(q)
    term = 1.0 + 0.0j
    s = 1.0 + 0.0j
    m = 1
    while m < 100000:
        term = term * q / (m * (k + m))
        s += term
        at = abs(term)
        if m * (k + m) > aq and (at <= 1e-17 * abs(s) or at < 1e-300):
            break
        m += 1
    logt = 0.0j
    if k > 0:
        # log before halving: 0.5 * w underflows for the smallest subnormals
        logt = k * (np.log(w) - math.log(2.0)) - math.lgamma(k + 1.0)
    return s, logt


@njit(cache=True, nogil=True)
def _ipow(n, sigma):
    r = n % 4
    if r == 0:
        return 1.0 + 0.0j
    if r == 1:
        return 1j * sigma
    if r == 2:
        return -1.0 + 0.0j
    return -1j * sigma


@njit(cache=True, nogil=True)
def _project(n, w, v):
    # J_n is real on the real axis and lies on the line (i sign y)^n on the imaginary axis
    if w.imag == 0.0:
        return v.real + 0.0j
    if w.real == 0.0:
        u = _ipow(n, 1.0 if w.imag > 0 else -1.0)
        return u * (v * u.conjugate()).real
    return v


@njit(cache=True, nogil=True)
def _axis3(k, w, a, b, c):
    return _project(k - 1, w, a), _project(k, w, b), _project(k + 1, w, c)


@njit(cache=True, nogil=True)
def _miller3(k, w):
    """Backward recurrence; returns J_{k-1}, J_k, J_{k+1} (scaled) and log scale."""
    aw = abs(w)
    nstart = k + 21 + int(1.2 * aw)
    sigma = -1.0 if w.imag >= 0.0 else 1.0
    inv_w = 1.0 / w
    fp1 = 0.0j
    f = 1.0 + 0.0j
    lcur = 0.0
    S = 2.0 * _ipow(nstart, sigma) * f
    c_m1 = 0.0j
    c_0 = 0.0j
    c_p1 = 0.0j
    l_m1 = 0.0
    l_0 = 0.0
    l_p1 = 0.0
    for n in range(nstart, 0, -1):
        fm1 = (2.0 * n) * inv_w * f - fp1
        fp1 = f
        f = fm1
        idx = n - 1
        if idx == 0:
            S += f
        else:
            S += 2.0 * _ipow(idx, sigma) * f
        if idx == k + 1:
            c_p1 = f
            l_p1 = lcur
        elif idx == k:
            c_0 = f
            l_0 = lcur
        elif idx == k - 1:
            c_m1 = f
            l_m1 = lcur
        if max(abs(f.real), abs(f.imag)) > _BIG:
            f /= _BIG
            fp1 /= _BIG
            S /= _BIG
            lcur += _LOG_BIG
    if k == 0:
        c_m1 = -c_p1
        l_m1 = l_p1
    # J_n = c_n / S * exp(l_n - lcur + i*sigma*w)
    g_re = -sigma * w.imag - lcur
    g_im = sigma * w.real
    r0 = c_0 / S
    if r0 != 0:
        L = math.log(abs(r0)) + l_0 + g_re
    else:
        L = l_0 + g_re
    ph = complex(math.cos(g_im), math.sin(g_im))
    jm1 = c_m1 / S * math.exp(l_m1 + g_re - L) * ph
    j0 = r0 * math.exp(l_0 + g_re - L) * ph
    jp1 = c_p1 / S * math.exp(l_p1 + g_re - L) * ph
    return jm1, j0, jp1, L


@njit(cache=True, nogil=True)
def _series3(k, w):
    s0, t0 = _series(k, w)
    sp, tp = _series(k + 1, w)
    if k == 0:
        sm = -sp
        tm = tp
    else:
        sm, tm = _series(k - 1, w)
    if s0 != 0:
        L = t0.real + math.log(abs(s0))
    else:
        L = t0.real
    if sm != 0:
        # J_{k-1}/J_k ~ 2k/w overflows for subnormal w; scale by the larger one
        Lm = tm.real + math.log(abs(sm))
        if Lm - L > 600.0:
            L = Lm
    jm1 = sm * np.exp(tm - L)
    j0 = s0 * np.exp(t0 - L)
    jp1 = sp * np.exp(tp - L)
    return jm1, j0, jp1, L


@njit(cache=True, nogil=True)
def _jscaled(k, w):
    """Scaled (J_k, J_k') and log scale; |J_k scaled| = 1 unless J_k = 0 or w is subnormal."""
    if w == 0:
        if k == 0:
            return 1.0 + 0.0j, 0.0j, 0.0
        if k == 1:
            return 0.0j, 0.5 + 0.0j, 0.0
        return 0.0j, 0.0j, 0.0
    if _use_series(k, abs(w)):
        jm1, j0, jp1, L = _series3(k, w)
    else:
        jm1, j0, jp1, L = _miller3(k, w)
    jm1, j0, jp1 = _axis3(k, w, jm1, j0, jp1)
    return j0, 0.5 * (jm1 - jp1), L


@njit(cache=True, nogil=True)
def _jscaled_array(k, w, out_j, out_jp, out_l):
    for i in range(w.size):
        a, b, c = _jscaled(k, w[i])
        out_j[i] = a
        out_jp[i] = b
        out_l[i] = c


@njit(cache=True, nogil=True)
def _jthree_array(k, w, out_m1, out_0, out_p1, out_l):
    for i in range(w.size):
        if w[i] == 0:
            out_m1[i] = 1.0 if k == 1 else 0.0
            out_0[i] = 1.0 if k == 0 else 0.0
            out_p1[i] = -1.0 if k == 1 else 0.0
            out_l[i] = 0.0
            continue
        if _use_series(k, abs(w[i])):
            a, b, c, d = _series3(k, w[i])
        else:
            a, b, c, d = _miller3(k, w[i])
        a, b, c = _axis3(k, w[i], a, b, c)
        out_m1[i] = a
        out_0[i] = b
        out_p1[i] = c
        out_l[i] = d


@dataclass(frozen=True)
class BesselEval:
    """J_k and its derivative at one complex argument."""

    order: int
    argument: complex
    value_j: complex
    value_jprime: complex


def _validate(order, w):
    if int(order) != order or order < 0 or order > MAX_ORDER:
        raise ValueError(f"order must be an integer in [0, {MAX_ORDER}], got {order}")
    w = np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise NonFinite("Bessel argument is not finite")
    if np.any(np.abs(w) > MAX_ARGUMENT):
        raise ValueError(f"|w| must not exceed {MAX_ARGUMENT:g}")
    return int(order), w


def jn_scaled(order, w):
    """Vectorized scaled evaluation.

    Parameters
    ----------
    order : int
        Nonnegative order k.
    w : array_like of complex
        Arguments.

    Returns
    -------
    j, jp : ndarray of complex
        Scaled J_k(w) and J_k'(w); ``|j| == 1`` unless J_k(w) is exactly zero.
    log_scale : ndarray of float
        J_k(w) = j * exp(log_scale) and J_k'(w) = jp * exp(log_scale).
    """
    k, w = _validate(order, w)
    shape = w.shape
    flat = np.ascontiguousarray(w.ravel())
    j = np.empty(flat.size, dtype=complex)
    jp = np.empty(flat.size, dtype=complex)
    lg = np.empty(flat.size, dtype=float)
    _jscaled_array(k, flat, j, jp, lg)
    return j.reshape(shape), jp.reshape(shape), lg.reshape(shape)


def jn_neighbors(order, w):
    """Scaled J_{k-1}, J_k, J_{k+1} sharing one log scale (vectorized).

    Used by tests of the three-term recurrence; ``J_{-1} = -J_1``.
    """
    k, w = _validate(order, w)
    shape = w.shape
    flat = np.ascontiguousarray(w.ravel())
    out = [np.empty(flat.size, dtype=complex) for _ in range(3)]
    lg = np.empty(flat.size, dtype=float)
    _jthree_array(k, flat, out[0], out[1], out[2], lg)
    return tuple(o.reshape(shape) for o in out) + (lg.reshape(shape),)


def bessel_j_log_scaled(order, w):
    """Return ``(scaled, log_scale)`` with J_order(w) = scaled * exp(log_scale).

    ``|scaled|`` is 1 up to rounding (0 when J vanishes identically, as for
    w = 0 and order > 0).
    """
    j, _, lg = jn_scaled(order, complex(w))
    return complex(j), float(lg)


def bessel_j_pair(order, w):
    """J_order(w) and J_order'(w) as a :class:`BesselEval`.

    Raises
    ------
    NonFinite
        If ``w`` is NaN or infinite.
    BesselOverflow
        If the unscaled values do not fit in a double; use
        :func:`bessel_j_log_scaled` or :func:`jn_scaled` instead.
    """
    j, jp, lg = jn_scaled(order, complex(w))
    j, jp, lg = complex(j), complex(jp), float(lg)
    mag = max(abs(j), abs(jp))
    if mag > 0 and lg + math.log(mag) > _LOG_MAX:
        raise BesselOverflow(f"J_{order}({w}) exceeds the double range")
    scale = math.exp(lg)
    return BesselEval(int(order), complex(w), j * scale, jp * scale)
