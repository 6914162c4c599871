"""Hot inner kernels, each in a numba flavour (``*_nb``) and a numpy flavour
(``*_np``).

The unsuffixed names are the ones the rest of the package calls; they are
bound to one flavour at import time according to ``ONEBIT_AR_NUMBA``.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "csign",
    "gamma_update",
    "secular_root",
    "quartic_root",
    "hard_threshold",
    "USE_NUMBA",
]


# --------------------------------------------------------------------------
# one-bit quantizer
# --------------------------------------------------------------------------

def csign_np(z):
    z = np.asarray(z, dtype=np.complex128)
    re = np.where(z.real >= 0.0, 1.0, -1.0)
    im = np.where(z.imag >= 0.0, 1.0, -1.0)
    return re + 1j * im


@njit
def _csign_flat_nb(z):
    out = np.empty(z.size, dtype=np.complex128)
    for i in range(z.size):
        re = 1.0 if z[i].real >= 0.0 else -1.0
        im = 1.0 if z[i].imag >= 0.0 else -1.0
        out[i] = complex(re, im)
    return out


def csign_nb(z):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    return _csign_flat_nb(z.ravel()).reshape(z.shape)


# --------------------------------------------------------------------------
# amplitude update: max(Re y * Re hs, 0) + j max(Im y * Im hs, 0)
# --------------------------------------------------------------------------

def gamma_update_np(y, hs):
    re = np.maximum(y.real * hs.real, 0.0)
    im = np.maximum(y.imag * hs.imag, 0.0)
    return re + 1j * im


@njit
def _gamma_flat_nb(y, hs):
    out = np.empty(y.size, dtype=np.complex128)
    for i in range(y.size):
        re = y[i].real * hs[i].real
        im = y[i].imag * hs[i].imag
        out[i] = complex(re if re > 0.0 else 0.0, im if im > 0.0 else 0.0)
    return out


def gamma_update_nb(y, hs):
    y = np.ascontiguousarray(y, dtype=np.complex128)
    hs = np.ascontiguousarray(hs, dtype=np.complex128)
    return _gamma_flat_nb(y.ravel(), hs.ravel()).reshape(y.shape)


# --------------------------------------------------------------------------
# secular equation  sum_i c2[i] / (rho + sig[i])**2 = r_norm
# --------------------------------------------------------------------------
# Returns (rho, status). status 0: converged, 1: no sign change in bracket,
# 2: iteration cap hit (rho is the best bracket midpoint).

def secular_root_np(c2, sig, r_norm, tol, maxiter):
    c2 = np.asarray(c2, dtype=np.float64)
    sig = np.asarray(sig, dtype=np.float64)
    total = c2.sum()
    smin = sig.min()
    smax = sig.max()
    root_scale = math.sqrt(total / r_norm)
    lo = max(-smin + 1e-12 * max(1.0, abs(smax)), -smax + root_scale)
    hi = -smin + root_scale

    def fd(rho):
        d = rho + sig
        f = np.sum(c2 / (d * d)) - r_norm
        fp = -2.0 * np.sum(c2 / (d * d * d))
        return f, fp

    f_lo, _ = fd(lo)
    if f_lo < 0.0:
        # equal eigenvalues put the root on the bracket end; rounding can
        # push f(lo) just below zero there
        return lo, 0 if -f_lo <= 1e-10 * r_norm else 1
    f_hi, _ = fd(hi)
    grow = 0
    while f_hi > 0.0:
        hi = hi + max(1.0, abs(hi))
        f_hi, _ = fd(hi)
        grow += 1
        if grow > 200:
            return hi, 1

    rho = hi
    f, fp = f_hi, fd(hi)[1]
    for _ in range(maxiter):
        if abs(f) <= tol * r_norm:
            return rho, 0
        step = rho - f / fp if fp != 0.0 else 0.5 * (lo + hi)
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        rho = step
        f, fp = fd(rho)
        if f > 0.0:
            lo = rho
        else:
            hi = rho
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            return rho, 0
    return rho, 2


@njit
def _secular_fd_nb(rho, c2, sig, r_norm):
    f = 0.0
    fp = 0.0
    for i in range(c2.size):
        d = rho + sig[i]
        inv2 = c2[i] / (d * d)
        f += inv2
        fp += inv2 / d
    return f - r_norm, -2.0 * fp


@njit
def secular_root_nb(c2, sig, r_norm, tol, maxiter):
    total = 0.0
    smin = sig[0]
    smax = sig[0]
    for i in range(c2.size):
        total += c2[i]
        smin = min(smin, sig[i])
        smax = max(smax, sig[i])
    root_scale = math.sqrt(total / r_norm)
    lo = max(-smin + 1e-12 * max(1.0, abs(smax)), -smax + root_scale)
    hi = -smin + root_scale

    f_lo, _ = _secular_fd_nb(lo, c2, sig, r_norm)
    if f_lo < 0.0:
        return lo, 0 if -f_lo <= 1e-10 * r_norm else 1
    f_hi, fp_hi = _secular_fd_nb(hi, c2, sig, r_norm)
    grow = 0
    while f_hi > 0.0:
        hi = hi + max(1.0, abs(hi))
        f_hi, fp_hi = _secular_fd_nb(hi, c2, sig, r_norm)
        grow += 1
        if grow > 200:
            return hi, 1

    rho = hi
    f, fp = f_hi, fp_hi
    for _ in range(maxiter):
        if abs(f) <= tol * r_norm:
            return rho, 0
        step = rho - f / fp if fp != 0.0 else 0.5 * (lo + hi)
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        rho = step
        f, fp = _secular_fd_nb(rho, c2, sig, r_norm)
        if f > 0.0:
            lo = rho
        else:
            hi = rho
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            return rho, 0
    return rho, 2


# --------------------------------------------------------------------------
# quartic of the semi-unitary case
#   R x^4 + 2R x^3 + (R - t1) x^2 + 2 (t2 - t1) x + (t2 - t1) = 0,  x > 0
# --------------------------------------------------------------------------

def _quartic_root_py(r_norm, t1, t2, tol, maxiter):
    a = t2 - t1

    def qd(x):
        q = (((r_norm * x + 2.0 * r_norm) * x + (r_norm - t1)) * x + 2.0 * a) * x + a
        dq = ((4.0 * r_norm * x + 6.0 * r_norm) * x + 2.0 * (r_norm - t1)) * x + 2.0 * a
        return q, dq

    if -a <= 1e-14 * t1:
        # constant and linear terms vanish: R (1 + x)^2 = t1
        return math.sqrt(t1 / r_norm) - 1.0, 0
    scale = math.sqrt(t1 / r_norm)
    lo = max(0.0, scale - 1.0)
    hi = scale
    q_hi, dq_hi = qd(hi)
    grow = 0
    while q_hi < 0.0:
        hi = 2.0 * hi + 1.0
        q_hi, dq_hi = qd(hi)
        grow += 1
        if grow > 200:
            return hi, 1
    x, q, dq = hi, q_hi, dq_hi
    for _ in range(maxiter):
        if abs(q) <= tol * max(r_norm * x ** 4, t1 * x * x, -a):
            return x, 0
        step = x - q / dq if dq != 0.0 else 0.5 * (lo + hi)
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        x = step
        q, dq = qd(x)
        if q < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4e-16 * max(1.0, hi):
            return x, 0
    return x, 2


quartic_root_np = _quartic_root_py
quartic_root_nb = njit(_quartic_root_py)


# --------------------------------------------------------------------------
# hard thresholding: keep the k largest-magnitude entries
# --------------------------------------------------------------------------

def hard_threshold_np(x, k):
    if k >= x.size:
        return x.copy()
    keep = np.argpartition(np.abs(x), -k)[-k:]
    out = np.zeros_like(x)
    out[keep] = x[keep]
    return out


@njit
def _hard_threshold_nb(x, k):
    # single pass keeping the k largest |x|^2 seen so far; on ties the
    # earlier index wins
    top = np.full(k, -1.0)
    idx = np.full(k, -1)
    lo = 0
    for i in range(x.size):
        v = x[i].real * x[i].real + x[i].imag * x[i].imag
        if v > top[lo]:
            top[lo] = v
            idx[lo] = i
            for j in range(k):
                if top[j] < top[lo]:
                    lo = j
    out = np.zeros_like(x)
    for j in range(k):
        out[idx[j]] = x[idx[j]]
    return out


def hard_threshold_nb(x, k):
    if k >= x.size:
        return x.copy()
    return _hard_threshold_nb(np.ascontiguousarray(x), k)


if USE_NUMBA:
    csign = csign_nb
    gamma_update = gamma_update_nb
    secular_root = secular_root_nb
    quartic_root = quartic_root_nb
    hard_threshold = hard_threshold_nb
else:
    csign = csign_np
    gamma_update = gamma_update_np
    secular_root = secular_root_np
    quartic_root = quartic_root_np
    hard_threshold = hard_threshold_np
