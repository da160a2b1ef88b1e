"""Quantitative converse-KAM bounds: strip extrema, the closed-form bounds
A_low and A_up on a(x) along a hypothetical invariant graph, the threshold
F(omega), the exclusion set Xi, and a checker for the Mather-type inequality
a(x) >= b(phi x) D^- + b(x) / D^+ along sampled graphs.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect, minimize, minimize_scalar

from ._numerics import loglog_slope
from .errors import DegenerateDiscriminant, NotInClass, OutOfRange
from .genfunc import GeneratingFunction
from .profile import DEFAULT_EPSILON, KAPPA_SHRINK, compute_norms, compute_sigmas, critical_point_kappa

OMEGA_CAP = 1e3  # upper end of omega scans when sigma is infinite
XI_TOL = 1e-8


@dataclass(frozen=True)
class StripExtrema:
    omega: float
    H11: float
    H22: float
    b_min: float
    b_max: float


def strip_extrema(gf, omega, grid=256):
    """max |h11|, max |h22|, min and max of -h12 over t in [0,1), tau in [omega-1, omega+1]."""
    if grid < 128:
        raise ValueError("grid must be >= 128 per axis")
    lo, hi = omega - 1.0, omega + 1.0
    if not (lo > gf.strip.tau_min and hi < gf.strip.tau_max):
        raise OutOfRange(f"[{lo}, {hi}] is not inside the strip ({gf.strip.tau_min}, {gf.strip.tau_max})")
    t0 = np.arange(grid, dtype=np.float64) / grid
    T0, TAU = np.meshgrid(t0, np.linspace(lo, hi, grid), indexing="ij")
    jet = gf.jet(T0, T0 + TAU)

    def polish(field_fn, values, sign):
        # sign=+1 maximises, -1 minimises; local search from the best grid node
        i, j = np.unravel_index(np.argmax(sign * values), values.shape)
        best = float(values[i, j])
        res = minimize(lambda p: -sign * field_fn(p[0], p[1]), x0=[T0[i, j], TAU[i, j]],
                       method="L-BFGS-B", bounds=[(T0[i, j] - 1.0 / grid, T0[i, j] + 1.0 / grid), (lo, hi)])
        if res.success and sign * (-sign * res.fun) > sign * best:
            return float(-sign * res.fun)
        return best

    H11 = polish(lambda t, s: abs(gf.jet(t, t + s).d11), np.abs(jet.d11), 1)
    H22 = polish(lambda t, s: abs(gf.jet(t, t + s).d22), np.abs(jet.d22), 1)
    b_min = polish(lambda t, s: -gf.jet(t, t + s).d12, -jet.d12, -1)
    b_max = polish(lambda t, s: -gf.jet(t, t + s).d12, -jet.d12, 1)
    return StripExtrema(float(omega), H11, H22, b_min, b_max)


# closed forms, vectorised over omega and taking ProfileNorms directly

def b_low(norms, omega):
    w = np.asarray(omega, dtype=np.float64)
    return (2.0 * norms.r_min / (w + 1.0) - norms.d1_norm) ** 2 / (w + 1.0)


def h_up(norms, omega):
    w = np.asarray(omega, dtype=np.float64) - 1.0
    Rb = norms.r_max
    return ((2.0 * norms.d1_norm**2 + 4.0 * Rb * norms.d2_norm) / w
            + 8.0 * Rb * norms.d1_norm / w**2 + 8.0 * Rb * Rb / w**3)


def a_low_from_norms(norms, omega):
    return 2.0 * b_low(norms, omega) ** 2 / h_up(norms, omega)


def _tail(norms, omega):
    return 8.0 * norms.r_max**2 / (np.asarray(omega, dtype=np.float64) - 1.0) ** 3


def _denominator(norms, critical_point_mode):
    return 4.0 * norms.r_min if critical_point_mode else 2.0 * (norms.r_max + norms.r_min)


def a_up_from_norms(norms, omega, kappa, critical_point_mode=False):
    w = np.asarray(omega, dtype=np.float64)
    return -_denominator(norms, critical_point_mode) * kappa / (w + 1.0) + _tail(norms, w)


def F_from_norms(norms, omega, critical_point_mode=False):
    w = np.asarray(omega, dtype=np.float64)
    return (w + 1.0) / _denominator(norms, critical_point_mode) * (_tail(norms, w) - a_low_from_norms(norms, w))


def F_noA_from_norms(norms, omega, critical_point_mode=False):
    w = np.asarray(omega, dtype=np.float64)
    return (w + 1.0) / _denominator(norms, critical_point_mode) * _tail(norms, w)


def _default_sigma(profile, sigma, mode, epsilon):
    if sigma is not None:
        return sigma
    sigma0, sigmaB = compute_sigmas(profile.norms, epsilon)
    return sigmaB if mode == "billiard" else sigma0


def _check_omega(omega, sigma):
    if not 1.0 < omega < sigma - 1.0:
        raise OutOfRange(f"omega={omega!r} outside (1, {sigma - 1.0!r})")


def a_low(profile, omega, sigma=None, mode="fermi_ulam", epsilon=DEFAULT_EPSILON):
    """A_low = 2 b_low^2 / H_up; sigma defaults to sigma_0 (or sigma_B in billiard mode)."""
    _check_omega(omega, _default_sigma(profile, sigma, mode, epsilon))
    return float(a_low_from_norms(profile.norms, omega))


def a_up(profile, omega, kappa, sigma=None, mode="fermi_ulam", epsilon=DEFAULT_EPSILON,
         critical_point_mode=False):
    """A_up = -2 kappa (R_min + R_max)/(omega + 1) + 8 R_max^2/(omega - 1)^3."""
    _check_omega(omega, _default_sigma(profile, sigma, mode, epsilon))
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return float(a_up_from_norms(profile.norms, omega, kappa, critical_point_mode))


def F(profile, omega, sigma=None, mode="fermi_ulam", epsilon=DEFAULT_EPSILON, critical_point_mode=False):
    _check_omega(omega, _default_sigma(profile, sigma, mode, epsilon))
    return float(F_from_norms(profile.norms, omega, critical_point_mode))


def F_noA(profile, omega, sigma=None, mode="fermi_ulam", epsilon=DEFAULT_EPSILON, critical_point_mode=False):
    _check_omega(omega, _default_sigma(profile, sigma, mode, epsilon))
    return float(F_noA_from_norms(profile.norms, omega, critical_point_mode))


def omega_grid_points(sigma, n):
    """omega_i = 1 + (w_max - 1)(i + 1)/n, i < n, with w_max = sigma - 1 (capped when sigma is infinite).

    The right end is the limit point sigma - 1 of the open range; F extends
    continuously there, so the infimum over the open interval is attained
    either inside or as this limit.
    """
    w_max = OMEGA_CAP if math.isinf(sigma) else sigma - 1.0
    return 1.0 + (w_max - 1.0) * (np.arange(n, dtype=np.float64) + 1.0) / n


def _grid_infimum(fn, omegas):
    vals = fn(omegas)
    i = int(np.argmin(vals))
    lo = omegas[i - 1] if i > 0 else 1.0 + 0.5 * (omegas[0] - 1.0)
    hi = omegas[min(i + 1, len(omegas) - 1)]
    best_w, best = float(omegas[i]), float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda w: float(fn(w)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if res.success and res.fun < best:
            best_w, best = float(res.x), float(res.fun)
    return best, best_w


def infimum_F(norms, sigma, omega_grid=4096, critical_point_mode=False, without_a_low=False):
    """(inf F, argmin) over omega in (1, sigma - 1) by grid scan and bounded polish."""
    if not sigma > 2.0:
        return math.inf, math.nan
    fn = F_noA_from_norms if without_a_low else F_from_norms
    return _grid_infimum(lambda w: fn(norms, w, critical_point_mode), omega_grid_points(sigma, omega_grid))


@dataclass
class CriterionScan:
    omega: np.ndarray
    a_low: np.ndarray
    a_up: np.ndarray
    F: np.ndarray
    F_noA: np.ndarray
    in_xi: np.ndarray
    verdict: dict = field(default_factory=dict)

    def rows(self):
        return zip(self.omega, self.a_low, self.a_up, self.F, self.F_noA, self.in_xi)

    @property
    def xi_intervals(self):
        return self.verdict["xi_intervals"]


SCAN_HEADER = ["omega", "a_low", "a_up", "F", "F_noA", "in_xi"]


def _xi_intervals(gap, omegas, w_max):
    """Maximal runs where gap(omega) = A_up - A_low < 0, endpoints refined by bisection."""
    vals = gap(omegas)
    inside = vals < 0.0
    out = []
    i, n = 0, len(omegas)
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        if i > 0:
            left = bisect(gap, omegas[i - 1], omegas[i], xtol=XI_TOL)
        else:
            left = 1.0
        if j < n - 1:
            right = bisect(gap, omegas[j], omegas[j + 1], xtol=XI_TOL)
        else:
            right = w_max
        out.append([float(left), float(right)])
        i = j + 1
    return out


def criterion_scan(profile, epsilon=DEFAULT_EPSILON, omega_grid=4096, mode="billiard",
                   critical_point_mode=False):
    """Scan A_low, A_up, F, F_noA and Xi membership over omega in (1, sigma - 1).

    Raises NotInClass when sigma <= 2 (no admissible rotation numbers). With
    kappa = 0 the scan still runs; Xi is then empty and every verdict false.
    """
    if mode not in ("billiard", "fermi_ulam"):
        raise ValueError("mode must be 'billiard' or 'fermi_ulam'")
    if omega_grid < 256:
        raise ValueError("omega_grid must be >= 256")
    norms = compute_norms(profile)
    sigma0, sigmaB = compute_sigmas(norms, epsilon)
    sigma = sigmaB if mode == "billiard" else sigma0
    if not sigma > 2.0:
        raise NotInClass(f"sigma = {sigma!r} <= 2: profile is not in the {mode} class")
    kappa = (critical_point_kappa(profile)[1] if critical_point_mode else norms.kappa) * KAPPA_SHRINK
    kappa = max(kappa, 0.0)
    omegas = omega_grid_points(sigma, omega_grid)
    w_max = float(omegas[-1])
    lo_vals = a_low_from_norms(norms, omegas)
    up_vals = a_up_from_norms(norms, omegas, kappa, critical_point_mode)
    F_vals = F_from_norms(norms, omegas, critical_point_mode)
    F0_vals = F_noA_from_norms(norms, omegas, critical_point_mode)
    in_xi = up_vals < lo_vals

    def gap(w):
        return a_up_from_norms(norms, w, kappa, critical_point_mode) - a_low_from_norms(norms, w)

    inf_F, loc_F = _grid_infimum(lambda w: F_from_norms(norms, w, critical_point_mode), omegas)
    inf_F0, loc_F0 = _grid_infimum(lambda w: F_noA_from_norms(norms, w, critical_point_mode), omegas)
    legacy = 2.0 * norms.r_max**2 / (norms.r_min * sigma**2) if not math.isinf(sigma) else 0.0
    verdict = {
        "mode": mode,
        "epsilon": epsilon,
        "critical_point_mode": critical_point_mode,
        "sigma": sigma,
        "kappa": kappa,
        "inf_F": inf_F,
        "inf_F_location": loc_F,
        "inf_F_noA": inf_F0,
        "inf_F_noA_location": loc_F0,
        "legacy_threshold": legacy,
        "xi_intervals": _xi_intervals(gap, omegas, w_max) if kappa > 0 else [],
        "improvement_pct": 100.0 * (inf_F0 - inf_F) / inf_F0,
        "c_range": [0.0, 0.0 if math.isinf(sigmaB) else epsilon * norms.r_min**2 / sigmaB] if mode == "billiard" else None,
        "verdict_new": bool(kappa > 0 and kappa > inf_F),
        "verdict_noA": bool(kappa > 0 and kappa > inf_F0),
        "verdict_legacy": bool(kappa > 0 and sigma > 4.0 and kappa > legacy),
    }
    return CriterionScan(omegas, lo_vals, up_vals, F_vals, F0_vals, in_xi, verdict)


@dataclass
class GraphSample:
    """Samples (x, phi(x), phi^{-1}(x)) of a Birkhoff map, with a(x), b(x), b(phi x) once filled."""

    x: np.ndarray
    phi_x: np.ndarray
    phi_inv_x: np.ndarray
    a_values: np.ndarray = None
    b_values: np.ndarray = None
    b_next_values: np.ndarray = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.phi_x = np.asarray(self.phi_x, dtype=np.float64)
        self.phi_inv_x = np.asarray(self.phi_inv_x, dtype=np.float64)
        if not (self.x.shape == self.phi_x.shape == self.phi_inv_x.shape) or self.x.size < 1:
            raise ValueError("x, phi_x and phi_inv_x must be non-empty and of equal length")
        if self.x.size > 1 and (np.any(np.diff(self.x) <= 0) or np.any(np.diff(self.phi_x) <= 0)):
            raise ValueError("graph samples must be strictly increasing in x and phi(x)")

    @property
    def points(self):
        return list(zip(self.x.tolist(), self.phi_x.tolist(), self.phi_inv_x.tolist()))


def rigid_rotation_graph(tau0, n=64):
    x = np.arange(n, dtype=np.float64) / n
    return GraphSample(x, x + tau0, x - tau0)


def graph_from_configuration(config):
    """Birkhoff-map samples from a periodic configuration: phi(t_n) = t_{n+1}, reduced to x in [0,1)."""
    t = np.asarray(config.times, dtype=np.float64)
    q, p = config.q, config.p
    ext = np.concatenate([t[-1:] - p, t, t[:1] + p])
    shift = np.floor(t)
    x = t - shift
    nxt = ext[2:] - shift
    prv = ext[:-2] - shift
    order = np.argsort(x, kind="stable")
    return GraphSample(x[order], nxt[order], prv[order])


def ab_along_graph(gf, graph):
    """Fill a(x) = h22(phi^-1 x, x) + h11(x, phi x), b(x) = -h12(phi^-1 x, x), b(phi x) = -h12(x, phi x)."""
    back = gf.jet(graph.phi_inv_x, graph.x)
    fwd = gf.jet(graph.x, graph.phi_x)
    return GraphSample(graph.x, graph.phi_x, graph.phi_inv_x,
                       a_values=np.asarray(back.d22 + fwd.d11),
                       b_values=np.asarray(-back.d12),
                       b_next_values=np.asarray(-fwd.d12))


@dataclass(frozen=True)
class BoundReport:
    B_plus: float
    B_minus: float
    C_plus_raw: float
    C_minus_raw: float
    C_plus: float
    C_minus: float
    D_plus: float
    D_minus: float
    min_slack: float
    capped: bool

    def to_dict(self):
        return dict(self.__dict__)


def mather_bound_check(graph, capped=True):
    """Constants B, C, D of the Mather-type inequality and its minimal slack along ``graph``.

    With ``capped`` each C is replaced by min(C, B^2/8), which keeps the
    discriminant B^2 - 4C positive; otherwise a zero discriminant (the
    integrable equality case) is allowed and only a negative one raises.
    """
    if graph.a_values is None:
        raise ValueError("fill a/b values with ab_along_graph first")
    a, b, bn = graph.a_values, graph.b_values, graph.b_next_values
    if np.any(b <= 0) or np.any(bn <= 0):
        raise DegenerateDiscriminant("b(x) must be positive along the graph")
    B_plus, B_minus = float(np.max(a / bn)), float(np.max(a / b))
    C_plus_raw, C_minus_raw = float(np.min(bn / b)), float(np.min(b / bn))
    if capped:
        C_plus, C_minus = min(C_plus_raw, B_plus**2 / 8.0), min(C_minus_raw, B_minus**2 / 8.0)
    else:
        C_plus, C_minus = C_plus_raw, C_minus_raw
    disc_plus, disc_minus = B_plus**2 - 4.0 * C_plus, B_minus**2 - 4.0 * C_minus
    bad = (disc_plus <= 0 or disc_minus <= 0) if capped else (disc_plus < 0 or disc_minus < 0)
    if bad:
        raise DegenerateDiscriminant(f"B^2 - 4C = ({disc_plus:.6g}, {disc_minus:.6g})")
    D_minus = (B_minus - math.sqrt(disc_minus)) / (2.0 * C_minus)
    D_plus = (B_plus + math.sqrt(disc_plus)) / 2.0
    slack = float(np.min(a - bn * D_minus - b / D_plus))
    return BoundReport(B_plus, B_minus, C_plus_raw, C_minus_raw, C_plus, C_minus, D_plus, D_minus, slack, capped)


@dataclass(frozen=True)
class DriftReport:
    c_values: list
    a_drift: list
    b_drift: list
    slope_a: float
    slope_b: float

    def to_dict(self):
        return dict(self.__dict__)


def perturbation_drift(profile, graph, c_values, epsilon=DEFAULT_EPSILON):
    """sup |a_c - a_0| and sup |b_c - b_0| along a fixed graph for each c, with log-log slopes."""
    strip_hi = max(np.max(graph.phi_x - graph.x), np.max(graph.x - graph.phi_inv_x))
    base = ab_along_graph(GeneratingFunction(profile), graph)
    a_drift, b_drift = [], []
    for c in c_values:
        gf = GeneratingFunction(profile, float(c), epsilon=epsilon)
        if strip_hi >= gf.strip.tau_max:
            raise OutOfRange(f"graph gaps up to {strip_hi} leave the h_c strip (0, {gf.strip.tau_max})")
        g = ab_along_graph(gf, graph)
        a_drift.append(float(np.max(np.abs(g.a_values - base.a_values))))
        b_drift.append(float(np.max(np.abs(np.concatenate([g.b_values - base.b_values,
                                                           g.b_next_values - base.b_next_values])))))
    c_values = [float(c) for c in c_values]
    return DriftReport(c_values, a_drift, b_drift, loglog_slope(c_values, a_drift), loglog_slope(c_values, b_drift))
