"""The implicit cylinder maps generated by h_0 / h_c, orbit iteration, and a
globally twisting extension of a generating function with quadratic tails.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtensionFailed, NoRootInStrip, OutOfStrip
from .genfunc import Jet2

ROOT_TOL = 1e-12
BRACKET_CELLS = 64
BOUNDARY_SHRINK = 1e-6
INFINITE_STRIP_CAP = 1e6


@dataclass(frozen=True)
class CylinderState:
    t: float
    K: float

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t) % 1.0)
        object.__setattr__(self, "K", float(self.K))


def _strip_bounds(gf):
    lo, hi = gf.strip.tau_min, gf.strip.tau_max
    if lo > 0:
        lo = lo * (1.0 + BOUNDARY_SHRINK)
    else:
        lo = BOUNDARY_SHRINK if math.isinf(hi) else hi * BOUNDARY_SHRINK
    hi = INFINITE_STRIP_CAP if math.isinf(hi) else hi * (1.0 - BOUNDARY_SHRINK)
    return lo, hi


def _momentum(gf, t, tau, forward):
    """K as a function of the flight time: d1 h(t, t+tau) or -d2 h(t-tau, t), plus its tau-derivative."""
    if forward:
        j = gf.jet(t, t + tau)
        return j.d1, j.d12
    j = gf.jet(t - tau, t)
    return -j.d2, j.d12


def solve_flight_time(gf, t, K, forward=True):
    """Flight time tau in the strip with K = d1 h(t, t+tau) (or the backward relation).

    Both relations are strictly decreasing in tau because d12 < 0, so a
    geometric scan locates the unique sign change, after which a Newton step
    safeguarded by the bracket finishes to ``ROOT_TOL``.
    """
    lo, hi = _strip_bounds(gf)
    taus = np.geomspace(lo, hi, BRACKET_CELLS + 1)
    k_vals, _ = _momentum(gf, t, taus, forward)
    g = K - k_vals
    if not (g[0] < 0.0 < g[-1]):
        if g[0] == 0.0:
            return float(taus[0])
        if g[-1] == 0.0:
            return float(taus[-1])
        k_lo, k_hi = float(k_vals[-1]), float(k_vals[0])
        raise NoRootInStrip(f"K={K!r} outside the reachable range [{k_lo!r}, {k_hi!r}] at t={t!r}", (k_lo, k_hi))
    i = int(np.flatnonzero(g > 0.0)[0])
    a, b = float(taus[i - 1]), float(taus[i])
    x = 0.5 * (a + b)
    for _ in range(200):
        kx, dk = _momentum(gf, t, x, forward)
        gx = K - kx
        if gx > 0.0:
            b = x
        elif gx < 0.0:
            a = x
        else:
            return x
        step = gx / dk  # g' = -dk
        xn = x + step
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= ROOT_TOL * max(1.0, abs(x)):
            # one more Newton step costs nothing and lands at machine precision
            kx, dk = _momentum(gf, t, xn, forward)
            xf = xn + (K - kx) / dk
            return xf if a <= xf <= b else xn
        if b - a <= ROOT_TOL * 1e-3 * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def forward_map(gf, state, direction="forward"):
    """Image (or preimage) of a cylinder state under the implicit map."""
    forward = direction == "forward"
    if not forward and direction != "backward":
        raise ValueError("direction must be 'forward' or 'backward'")
    tau = solve_flight_time(gf, state.t, state.K, forward)
    if forward:
        return CylinderState(state.t + tau, -gf.jet(state.t, state.t + tau).d2)
    return CylinderState(state.t - tau, gf.jet(state.t - tau, state.t).d1)


def sigma_star(gf, grid=1024):
    """max_t d1 h(t, t + sigma(1 - 1e-6)): lower edge of the twist region in K."""
    if math.isinf(gf.strip.tau_max):
        return 0.0
    t = np.arange(grid, dtype=np.float64) / grid
    return float(np.max(gf.jet(t, t + gf.strip.tau_max * (1.0 - BOUNDARY_SHRINK)).d1))


@dataclass
class Orbit:
    states: list
    lifted_times: list
    taus: list
    del_residuals: list
    below_threshold: list = field(default_factory=list)
    stopped_early: bool = False
    failure_index: int = None
    failure: str = None

    def rows(self):
        """Rows ``n, t_lift, t_mod1, K, tau, del_residual`` (blank where undefined)."""
        out = []
        for n, (s, tl) in enumerate(zip(self.states, self.lifted_times)):
            tau = self.taus[n] if n < len(self.taus) else None
            res = self.del_residuals[n - 1] if 1 <= n <= len(self.del_residuals) else None
            out.append((n, tl, s.t, s.K, tau, res))
        return out


def iterate_orbit(gf, state, n, t_lift=None):
    """n forward images of ``state``; stops early (flagged) on NoRootInStrip.

    ``del_residuals[k]`` is |d1 h(t_{k+1}, t_{k+2}) + d2 h(t_k, t_{k+1})|, the
    discrete Euler-Lagrange defect at the (k+1)-th interior time.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    thr = sigma_star(gf)
    t = state.t if t_lift is None else float(t_lift)
    K = state.K
    states, times, taus = [CylinderState(t, K)], [t], []
    below = [K <= thr]
    stopped, fail_idx, fail_msg = False, None, None
    for k in range(n):
        try:
            tau = solve_flight_time(gf, t, K, True)
        except NoRootInStrip as exc:
            stopped, fail_idx, fail_msg = True, k, f"NoRootInStrip: {exc}"
            break
        t_next = t + tau
        K = float(-gf.jet(t, t_next).d2)
        t = t_next
        taus.append(tau)
        times.append(t)
        states.append(CylinderState(t, K))
        below.append(K <= thr)
    residuals = []
    if len(times) >= 3:
        tt = np.asarray(times)
        right = gf.jet(tt[1:-1], tt[2:]).d1
        left = gf.jet(tt[:-2], tt[1:-1]).d2
        residuals = list(np.abs(right + left))
    return Orbit(states, times, taus, residuals, below, stopped, fail_idx, fail_msg)


def smoothstep(u):
    """Quintic 6u^5 - 15u^4 + 10u^3 clipped to [0, 1], with first two derivatives."""
    u = np.clip(u, 0.0, 1.0)
    s = u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
    ds = 30.0 * u * u * (1.0 - u) ** 2
    dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    return s, ds, dds


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_MEAN_SAMPLES = 64


class ExtendedGF:
    """C^2 diagonally periodic extension of ``inner`` that twists everywhere.

    With w(tau) the quintic blend weight (1 on [a', b'], 0 outside (a'', b''))
    and m(tau) the t0-average of the inner function along the diagonal,

        h_ext = w(tau) * (h - m(tau)) + M(tau),
        M'' = w m'' + (1 - w) lam,  M = m on [a', b'].

    Outside (a'', b'') this is lam tau^2 / 2 plus an affine function of tau on
    each side, so d12 = -lam there. A pure lam tau^2 / 2 tail is impossible:
    d12 < 0 everywhere forces the diagonal average to be convex in tau, while
    h_0's average decreases at a' and lam tau^2 / 2 increases at a'' > 0.
    """

    def __init__(self, inner, bands, lam):
        a2, a1, b1, b2 = (float(x) for x in bands)
        lo, hi = inner.strip.tau_min, inner.strip.tau_max
        if not (lo < a2 < a1 < b1 < b2 < hi):
            raise ValueError(f"bands must satisfy {lo} < a'' < a' < b' < b'' < {hi}")
        self.inner = inner
        self.bands = (a2, a1, b1, b2)
        self.lam = float(lam)
        self.profile = inner.profile
        self.angular_momentum = inner.angular_momentum
        self.strip = _FullStrip()
        self.sigma = inner.sigma
        self._edge = {}
        for side, (start, stop) in (("low", (a1, a2)), ("high", (b1, b2))):
            M, dM = self._M_band(np.array([stop]), start)
            self._edge[side] = (stop, float(M[0]), float(dM[0]))

    def _mean_jet(self, tau):
        t0 = np.arange(_MEAN_SAMPLES, dtype=np.float64) / _MEAN_SAMPLES
        T0, TAU = np.meshgrid(t0, np.atleast_1d(tau), indexing="ij")
        j = self.inner.jet(T0, T0 + TAU)
        return j.value.mean(axis=0), j.d2.mean(axis=0), j.d22.mean(axis=0)

    def _weight(self, tau):
        a2, a1, b1, b2 = self.bands
        w = np.ones_like(tau)
        dw = np.zeros_like(tau)
        ddw = np.zeros_like(tau)
        low = tau < a1
        s, ds, dds = smoothstep((tau[low] - a2) / (a1 - a2))
        w[low], dw[low], ddw[low] = s, ds / (a1 - a2), dds / (a1 - a2) ** 2
        high = tau > b1
        s, ds, dds = smoothstep((b2 - tau[high]) / (b2 - b1))
        w[high], dw[high], ddw[high] = s, -ds / (b2 - b1), dds / (b2 - b1) ** 2
        return w, dw, ddw

    def _M_second(self, s):
        w, _, _ = self._weight(s)
        inside = w > 0.0
        out = np.full_like(s, self.lam)
        if np.any(inside):
            mpp = self._mean_jet(s[inside])[2]
            out[inside] = w[inside] * mpp + (1.0 - w[inside]) * self.lam
        return out

    def _M_band(self, tau, anchor, chunk=128):
        """M and M' at ``tau`` by Gauss-Legendre integration of M'' from ``anchor``."""
        if tau.size > chunk:
            parts = [self._M_band(tau[i:i + chunk], anchor, chunk) for i in range(0, tau.size, chunk)]
            return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
        m, dm, _ = self._mean_jet(np.array([anchor]))
        M = np.empty_like(tau)
        dM = np.empty_like(tau)
        half = 0.5 * (tau - anchor)
        mid = 0.5 * (tau + anchor)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        f = self._M_second(nodes.ravel()).reshape(nodes.shape)
        wts = half[:, None] * _GL_WEIGHTS[None, :]
        dM[:] = dm[0] + np.sum(wts * f, axis=1)
        M[:] = m[0] + dm[0] * (tau - anchor) + np.sum(wts * (tau[:, None] - nodes) * f, axis=1)
        return M, dM

    def jet(self, t0, t1):
        scalar = np.ndim(t0) == 0 and np.ndim(t1) == 0
        t0, t1 = np.broadcast_arrays(np.asarray(t0, dtype=np.float64), np.asarray(t1, dtype=np.float64))
        shape = t0.shape
        t0, t1 = t0.ravel(), t1.ravel()
        tau = t1 - t0
        out = [np.empty_like(tau) for _ in range(6)]
        a2, a1, b1, b2 = self.bands

        core = (tau >= a1) & (tau <= b1)
        if np.any(core):
            j = self.inner.jet(t0[core], t1[core])
            for o, v in zip(out, j.astuple()):
                o[core] = v

        for side, mask in (("low", tau <= a2), ("high", tau >= b2)):
            if np.any(mask):
                e, Me, dMe = self._edge[side]
                d = tau[mask] - e
                M = Me + dMe * d + 0.5 * self.lam * d * d
                dM = dMe + self.lam * d
                vals = (M, -dM, dM, self.lam, -self.lam, self.lam)
                for o, v in zip(out, vals):
                    o[mask] = v

        for anchor, mask in ((a1, (tau > a2) & (tau < a1)), (b1, (tau > b1) & (tau < b2))):
            if not np.any(mask):
                continue
            tb = tau[mask]
            M, dM = self._M_band(tb, anchor)
            ddM = self._M_second(tb)
            m, dm, ddm = self._mean_jet(tb)
            w, dw, ddw = self._weight(tb)
            j = self.inner.jet(t0[mask], t1[mask])
            hb = j.value - m
            hb1, hb2 = j.d1 + dm, j.d2 - dm
            hb11, hb22, hb12 = j.d11 - ddm, j.d22 - ddm, j.d12 + ddm
            vals = (
                w * hb + M,
                -dw * hb + w * hb1 - dM,
                dw * hb + w * hb2 + dM,
                ddw * hb - 2.0 * dw * hb1 + w * hb11 + ddM,
                -ddw * hb + dw * (hb1 - hb2) + w * hb12 - ddM,
                ddw * hb + 2.0 * dw * hb2 + w * hb22 + ddM,
            )
            for o, v in zip(out, vals):
                o[mask] = v

        if scalar:
            return Jet2(*(float(o[0]) for o in out))
        return Jet2(*(o.reshape(shape) for o in out))

    def __call__(self, t0, t1):
        return self.jet(t0, t1).value

    def max_d12_in_bands(self, grid=256):
        a2, a1, b1, b2 = self.bands
        t0 = np.arange(grid, dtype=np.float64) / grid
        worst = -math.inf
        for lo, hi in ((a2, a1), (b1, b2)):
            T0, TAU = np.meshgrid(t0, np.linspace(lo, hi, grid), indexing="ij")
            worst = max(worst, float(np.max(self.jet(T0, T0 + TAU).d12)))
        return worst


@dataclass(frozen=True)
class _FullStrip:
    tau_min: float = -math.inf
    tau_max: float = math.inf

    def contains(self, tau):
        return np.ones_like(np.asarray(tau), dtype=bool)


def extend(gf, bands, lambda_hint=0.0, grid=256, retries=8):
    """Build the extension of ``gf`` and certify d12 < 0 on the blend bands.

    lam starts at max(lambda_hint, 2 sup |d12| over [a'', b'']) and doubles on
    each failed grid check; ExtensionFailed after ``retries`` doublings.
    """
    a2, _, _, b2 = bands
    t0 = np.arange(grid, dtype=np.float64) / grid
    T0, TAU = np.meshgrid(t0, np.linspace(a2, b2, grid), indexing="ij")
    try:
        sup12 = float(np.max(np.abs(gf.jet(T0, T0 + TAU).d12)))
    except OutOfStrip as exc:
        raise ValueError(f"bands leave the strip: {exc}") from exc
    lam = max(float(lambda_hint), 2.0 * sup12)
    for _ in range(retries + 1):
        ext = ExtendedGF(gf, bands, lam)
        worst = ext.max_d12_in_bands(grid)
        if worst < 0.0:
            return ext
        lam *= 2.0
    raise ExtensionFailed(f"d12 reaches {worst:.6g} on the blend bands after {retries} doublings")
