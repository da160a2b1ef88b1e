"""Breathing radius profiles R(t) as finite Fourier series of period 1.

Holds the sup-norm machinery (dense grid plus bounded Brent polish), the
strip widths sigma_0 and sigma_B, and the class membership tests used to
decide whether the converse-KAM argument applies to a profile.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import kernels
from ._numerics import refine_max, refine_min
from .errors import NonPositiveRadius

DEFAULT_GRID = 2**16
DEFAULT_EPSILON = 0.5
KAPPA_SHRINK = 1.0 - 1e-6


@dataclass(frozen=True)
class RadiusProfile:
    """R(t) = mean + sum_k a_k cos(2 pi k t) + b_k sin(2 pi k t)."""

    mean: float
    harmonics: tuple = ()

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.harmonics)
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "harmonics", pairs)

    @cached_property
    def _coeffs(self):
        a = np.array([p[0] for p in self.harmonics], dtype=np.float64)
        b = np.array([p[1] for p in self.harmonics], dtype=np.float64)
        return a, b

    def __call__(self, t):
        return evaluate(self, t)

    @property
    def is_even(self):
        return all(b == 0.0 for _, b in self.harmonics)

    def scaled(self, lam):
        return RadiusProfile(lam * self.mean, tuple((lam * a, lam * b) for a, b in self.harmonics))

    @cached_property
    def norms(self):
        return compute_norms(self)

    def to_dict(self):
        return {"mean": self.mean, "harmonics": [list(p) for p in self.harmonics]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mean"], tuple(tuple(p) for p in d.get("harmonics", [])))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def evaluate(profile, t, backend=None):
    """Return (R, R', R'') at ``t`` (scalar or array)."""
    k = backend or kernels.active
    a, b = profile._coeffs
    if np.ndim(t) == 0:
        R, dR, ddR = k.fourier_eval(float(t), profile.mean, a, b)
        return float(R), float(dR), float(ddR)
    t = np.ascontiguousarray(t, dtype=np.float64)
    return k.fourier_eval(t, profile.mean, a, b)


@dataclass(frozen=True)
class ProfileNorms:
    r_min: float
    r_max: float
    d1_norm: float
    d2_norm: float
    d2_sq_norm: float
    t_bar: float
    kappa: float


def _sq_second(profile, t):
    R, dR, ddR = evaluate(profile, t)
    return 2.0 * (dR * dR + R * ddR)


def compute_norms(profile, grid_points=DEFAULT_GRID):
    """Sup-norms of R, R', R'', (R^2)'' on a dense grid with local polish.

    Raises NonPositiveRadius if any sampled R is <= 0.
    """
    if grid_points < 1024:
        raise ValueError("grid_points must be >= 1024")
    n = int(grid_points)
    t = np.arange(n, dtype=np.float64) / n
    R, dR, ddR = evaluate(profile, t)
    if R.min() <= 0.0:
        raise NonPositiveRadius(f"R(t) <= 0 near t={t[np.argmin(R)]:.6g} (min {R.min():.6g})")
    if not profile.harmonics:
        r = profile.mean
        return ProfileNorms(r, r, 0.0, 0.0, 0.0, 0.0, 0.0)
    h = 1.0 / n

    def polish_max(f, values):
        i = int(np.argmax(values))
        return refine_max(f, t[i] - h, t[i] + h, t[i], float(values[i]))

    sq = 2.0 * (dR * dR + R * ddR)
    t_bar, r_max = polish_max(lambda s: evaluate(profile, s)[0], R)
    i = int(np.argmin(R))
    _, r_min = refine_min(lambda s: evaluate(profile, s)[0], t[i] - h, t[i] + h, t[i], float(R[i]))
    _, d1 = polish_max(lambda s: abs(evaluate(profile, s)[1]), np.abs(dR))
    _, d2 = polish_max(lambda s: abs(evaluate(profile, s)[2]), np.abs(ddR))
    _, d2sq = polish_max(lambda s: abs(_sq_second(profile, s)), np.abs(sq))
    t_bar = t_bar % 1.0
    kappa = -evaluate(profile, t_bar)[2]
    return ProfileNorms(r_min, r_max, d1, d2, d2sq, t_bar, kappa)


def compute_sigmas(norms, epsilon=DEFAULT_EPSILON):
    """(sigma_0, sigma_B); a term with a vanishing denominator is +inf."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    sigma0 = norms.r_min / norms.d1_norm if norms.d1_norm > 0 else math.inf
    first = norms.r_min / (2.0 * norms.d1_norm) if norms.d1_norm > 0 else math.inf
    if norms.d2_sq_norm > 0:
        second = 2.0 * math.sqrt(1.0 + math.sqrt(1.0 - epsilon**2)) * norms.r_min / math.sqrt(norms.d2_sq_norm)
    else:
        second = math.inf
    return sigma0, min(first, second)


def critical_point_kappa(profile, grid_points=DEFAULT_GRID):
    """Largest -R'' over the interior local maxima of R (zeros of R' with R'' < 0).

    Returns (t, kappa); kappa is 0 when R has no strict local maximum.
    """
    n = int(grid_points)
    t = np.arange(n, dtype=np.float64) / n
    _, dR, _ = evaluate(profile, t)
    nxt = np.roll(dR, -1)
    idx = np.flatnonzero((dR > 0) & (nxt <= 0))
    best_t, best_k = 0.0, 0.0
    for i in idx:
        lo, hi = t[i], t[i] + 1.0 / n
        tc = brentq(lambda s: evaluate(profile, s)[1], lo, hi, xtol=1e-15) if nxt[i] < 0 else hi
        k = -evaluate(profile, tc)[2]
        if k > best_k:
            best_t, best_k = tc % 1.0, k
    return best_t, best_k


@dataclass(frozen=True)
class ClassReport:
    sigma0: float
    sigmaB: float
    epsilon: float
    kappa: float
    in_R0: bool
    in_RB: bool
    in_R0_tilde: bool
    in_RB_tilde: bool
    inf_F: float
    inf_F_location: float
    inf_F0: float
    inf_F0_location: float
    c_max: float
    critical_point_mode: bool = False
    norms: ProfileNorms = field(default=None)

    def to_dict(self):
        return asdict(self)


def classify(profile, epsilon=DEFAULT_EPSILON, omega_grid=4096, critical_point_mode=False):
    """Decide membership in the classes R_0, R_B and their tilde versions.

    ``inf_F`` is taken over omega in (1, sigma_B - 1) and ``inf_F0`` over
    (1, sigma_0 - 1). With ``critical_point_mode`` kappa comes from the best
    interior local maximum of R instead of the global one and the threshold
    uses the 4 R_min denominator.
    """
    from .converse_kam import infimum_F

    if omega_grid < 256:
        raise ValueError("omega_grid must be >= 256")
    norms = compute_norms(profile)
    sigma0, sigmaB = compute_sigmas(norms, epsilon)
    if critical_point_mode:
        kappa = critical_point_kappa(profile)[1] * KAPPA_SHRINK
    else:
        kappa = norms.kappa * KAPPA_SHRINK
    in_R0 = sigma0 > 2.0
    in_RB = sigmaB > 2.0
    infB, locB = infimum_F(norms, sigmaB, omega_grid, critical_point_mode) if in_RB else (math.inf, math.nan)
    inf0, loc0 = infimum_F(norms, sigma0, omega_grid, critical_point_mode) if in_R0 else (math.inf, math.nan)
    in_R0_tilde = in_R0 and kappa > 0.0 and kappa > inf0
    in_RB_tilde = in_RB and kappa > 0.0 and kappa > infB
    c_max = 0.0 if math.isinf(sigmaB) else epsilon * norms.r_min**2 / sigmaB
    return ClassReport(
        sigma0=sigma0, sigmaB=sigmaB, epsilon=epsilon, kappa=kappa,
        in_R0=in_R0, in_RB=in_RB, in_R0_tilde=in_R0_tilde, in_RB_tilde=in_RB_tilde,
        inf_F=infB, inf_F_location=locB, inf_F0=inf0, inf_F0_location=loc0,
        c_max=c_max, critical_point_mode=critical_point_mode, norms=norms,
    )
