"""Hot numeric kernels: Fourier radius evaluation, generating-function jets,
and the first-crossing search used by the billiard simulator.

Every kernel exists twice. The plain functions below run on numpy arrays (or
Python floats). When numba is available the same functions are also compiled
with ``@njit``; the impact search additionally has a chunked vectorised numpy
variant because a scalar Python loop would be far too slow without JIT.

``active`` is the namespace the rest of the package calls. It points at the
numba kernels unless ``BTWIST_BACKEND=numpy`` is set.
"""
from types import SimpleNamespace

import numpy as np

from ._accel import USE_NUMBA, HAVE_NUMBA, njit

TWO_PI = 2.0 * np.pi


def fourier_eval(t, mean, a, b):
    """R, R', R'' of ``mean + sum a_k cos(2 pi k t) + b_k sin(2 pi k t)``."""
    # t - floor(t) is exact, so shifted arguments give bitwise-equal results
    tt = t - np.floor(t)
    R = mean + 0.0 * tt
    dR = 0.0 * tt
    ddR = 0.0 * tt
    for k in range(a.shape[0]):
        w = TWO_PI * (k + 1)
        cs = np.cos(w * tt)
        sn = np.sin(w * tt)
        R = R + a[k] * cs + b[k] * sn
        dR = dR + w * (b[k] * cs - a[k] * sn)
        ddR = ddR - w * w * (a[k] * cs + b[k] * sn)
    return R, dR, ddR


def h0_jet(R0, dR0, ddR0, R1, dR1, ddR1, tau):
    """Value and first/second partials of (R0 + R1)^2 / (2 tau)."""
    S = R0 + R1
    tau2 = tau * tau
    tau3 = tau2 * tau
    value = S * S / (2.0 * tau)
    d1 = S * dR0 / tau + S * S / (2.0 * tau2)
    d2 = S * dR1 / tau - S * S / (2.0 * tau2)
    d11 = (dR0 * dR0 + S * ddR0) / tau + 2.0 * S * dR0 / tau2 + S * S / tau3
    d22 = (dR1 * dR1 + S * ddR1) / tau - 2.0 * S * dR1 / tau2 + S * S / tau3
    q = S / tau
    d12 = -(q + dR0) * (q - dR1) / tau
    return value, d1, d2, d11, d12, d22


def hc_jet(R0, dR0, ddR0, R1, dR1, ddR1, tau, c):
    """Value and partials of the angular-momentum-c generating function.

    Written as f(P, Q, tau) with P = R0^2, Q = R1^2 and chained through
    P(t0), Q(t1), tau = t1 - t0. With s = sqrt(PQ - c^2 tau^2):

        f_P = (1 + s/P) / (2 tau)          f_tau = -(P + Q + 2s) / (2 tau^2)
        f_PP = (PQ - 2 s^2) / (4 s tau P^2)
        f_PQ = 1 / (4 s tau)               f_Ptau = -(1 + Q/s) / (2 tau^2)
        f_tautau = c^2 / (s tau) + (P + Q + 2s) / tau^3

    The arctan term contributes c^2/s to f_tau, which cancels the c-dependent
    part of d(s/tau)/dtau.
    """
    P = R0 * R0
    Q = R1 * R1
    dP = 2.0 * R0 * dR0
    dQ = 2.0 * R1 * dR1
    ddP = 2.0 * (dR0 * dR0 + R0 * ddR0)
    ddQ = 2.0 * (dR1 * dR1 + R1 * ddR1)
    PQ = P * Q
    D = PQ - c * c * tau * tau
    s = np.sqrt(D)
    tau2 = tau * tau
    num = P + Q + 2.0 * s
    value = num / (2.0 * tau) + c * np.arctan(c * tau / s)

    fP = (1.0 + s / P) / (2.0 * tau)
    fQ = (1.0 + s / Q) / (2.0 * tau)
    ft = -num / (2.0 * tau2)
    fPP = (PQ - 2.0 * D) / (4.0 * s * tau * P * P)
    fQQ = (PQ - 2.0 * D) / (4.0 * s * tau * Q * Q)
    fPQ = 1.0 / (4.0 * s * tau)
    fPt = -(1.0 + Q / s) / (2.0 * tau2)
    fQt = -(1.0 + P / s) / (2.0 * tau2)
    ftt = c * c / (s * tau) + num / (tau2 * tau)

    d1 = dP * fP - ft
    d2 = dQ * fQ + ft
    d11 = ddP * fP + dP * dP * fPP - 2.0 * dP * fPt + ftt
    d22 = ddQ * fQ + dQ * dQ * fQQ + 2.0 * dQ * fQt + ftt
    d12 = dP * dQ * fPQ + dP * fPt - dQ * fQt - ftt
    return value, d1, d2, d11, d12, d22


@njit
def _radius(t, mean, a, b):
    tt = t - np.floor(t)
    R = mean
    for k in range(a.shape[0]):
        w = TWO_PI * (k + 1)
        R += a[k] * np.cos(w * tt) + b[k] * np.sin(w * tt)
    return R


@njit
def _gap(t, t0, x, y, vx, vy, mean, a, b):
    dt = t - t0
    px = x + vx * dt
    py = y + vy * dt
    return np.sqrt(px * px + py * py) - _radius(t, mean, a, b)


@njit
def _bisect_crossing(lo, hi, t0, x, y, vx, vy, mean, a, b, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _gap(mid, t0, x, y, vx, vy, mean, a, b) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit
def _first_inside_step(t0, h, x, y, vx, vy, mean, a, b):
    # shrink the first step until the particle is strictly inside
    step = h
    for _ in range(40):
        if _gap(t0 + step, t0, x, y, vx, vy, mean, a, b) < 0.0:
            return step
        step *= 0.5
    return -1.0


@njit
def impact_search_loop(t0, x, y, vx, vy, h, t_end, mean, a, b, tol):
    """First time after ``t0`` where |x(t)| reaches R(t).

    Returns NaN if there is no crossing by ``t_end`` and -1 if the particle
    never gets strictly inside (grazing start). Marches with step ``h`` from
    the first interior sample, then bisects the bracketing cell to ``tol``.
    """
    first = _first_inside_step(t0, h, x, y, vx, vy, mean, a, b)
    if first < 0.0:
        return -1.0
    t_prev = t0 + first
    while True:
        t = t_prev + h
        if t > t_end:
            return np.nan
        if _gap(t, t0, x, y, vx, vy, mean, a, b) >= 0.0:
            return _bisect_crossing(t_prev, t, t0, x, y, vx, vy, mean, a, b, tol)
        t_prev = t


def _gap_np(t, t0, x, y, vx, vy, mean, a, b):
    dt = t - t0
    R = fourier_eval(t, mean, a, b)[0]
    return np.hypot(x + vx * dt, y + vy * dt) - R


def impact_search_chunked(t0, x, y, vx, vy, h, t_end, mean, a, b, tol, chunk=512):
    """Vectorised twin of :func:`impact_search_loop` for the numpy backend."""
    args = (t0, x, y, vx, vy, mean, a, b)
    step = h
    while _gap_np(t0 + step, *args) >= 0.0:
        step *= 0.5
        if step < h * 2.0**-40:
            return -1.0
    start = t0 + step
    steps = np.arange(1, chunk + 1, dtype=np.float64)
    offset = 0
    while True:
        ts = start + h * (offset + steps)
        hit = np.flatnonzero(_gap_np(ts, *args) >= 0.0)
        if hit.size:
            i = hit[0]
            if ts[i] > t_end:
                return np.nan
            lo = ts[i - 1] if i > 0 else start + h * offset
            hi = ts[i]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if _gap_np(mid, *args) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        if ts[-1] > t_end:
            return np.nan
        offset += chunk


NUMPY = SimpleNamespace(
    name="numpy",
    fourier_eval=fourier_eval,
    h0_jet=h0_jet,
    hc_jet=hc_jet,
    impact_search=impact_search_chunked,
)

if HAVE_NUMBA:
    NUMBA = SimpleNamespace(
        name="numba",
        fourier_eval=njit(fourier_eval),
        h0_jet=njit(h0_jet),
        hc_jet=njit(hc_jet),
        impact_search=impact_search_loop,
    )
else:  # pragma: no cover
    NUMBA = None

active = NUMBA if USE_NUMBA else NUMPY
