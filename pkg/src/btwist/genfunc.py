"""Generating functions of the Fermi-Ulam map (c = 0) and of the reduced
breathing-circle billiard map (angular momentum c > 0).

All evaluators are vectorised over (t0, t1) and return a :class:`Jet2` with
the value and every first and second partial derivative in closed form.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._numerics import loglog_slope
from .errors import DiscriminantNonPositive, OutOfStrip, TwistViolation
from .profile import DEFAULT_EPSILON, compute_sigmas, evaluate

STRIP_MARGIN = 1e-9
ARCTAN_LIMIT = math.tan(math.pi / 2 - 1e-6)


@dataclass(frozen=True)
class StripSpec:
    """The open band tau_min < t1 - t0 < tau_max."""

    tau_min: float = 0.0
    tau_max: float = math.inf

    def __post_init__(self):
        if self.tau_min < 0 or not self.tau_max > self.tau_min:
            raise ValueError(f"invalid strip ({self.tau_min}, {self.tau_max})")

    def contains(self, tau):
        return (tau > self.tau_min) & (tau < self.tau_max)

    def closed_grid(self, n, margin=STRIP_MARGIN):
        if math.isinf(self.tau_max):
            raise ValueError("grid scans need a finite strip")
        return np.linspace(self.tau_min + margin, self.tau_max - margin, n)


@dataclass(frozen=True)
class Jet2:
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d11: np.ndarray
    d12: np.ndarray
    d22: np.ndarray

    def astuple(self):
        return (self.value, self.d1, self.d2, self.d11, self.d12, self.d22)

    def __getitem__(self, idx):
        return Jet2(*(np.asarray(x)[idx] for x in self.astuple()))


def _prepare(t0, t1):
    scalar = np.ndim(t0) == 0 and np.ndim(t1) == 0
    t0, t1 = np.broadcast_arrays(np.asarray(t0, dtype=np.float64), np.asarray(t1, dtype=np.float64))
    return scalar, np.ascontiguousarray(t0).ravel(), np.ascontiguousarray(t1).ravel(), t0.shape


def _finish(parts, scalar, shape):
    if scalar:
        return Jet2(*(float(x[0]) for x in parts))
    return Jet2(*(x.reshape(shape) for x in parts))


def _check_strip(tau, lo, hi):
    bad = ~((tau > lo) & (tau < hi))
    if np.any(bad):
        raise OutOfStrip(f"t1 - t0 = {tau[bad][0]!r} outside the strip ({lo}, {hi})")


def h0_jet(profile, t0, t1, strip=None, backend=None):
    """Jet of (R0 + R1)^2 / (2 tau) from the closed forms; strip defaults to (0, sigma_0)."""
    k = backend or kernels.active
    scalar, t0, t1, shape = _prepare(t0, t1)
    tau = t1 - t0
    if strip is None:
        sigma0, _ = compute_sigmas(profile.norms)
        strip = StripSpec(0.0, sigma0)
    _check_strip(tau, strip.tau_min, strip.tau_max)
    R0, dR0, ddR0 = evaluate(profile, t0, k)
    R1, dR1, ddR1 = evaluate(profile, t1, k)
    return _finish(k.h0_jet(R0, dR0, ddR0, R1, dR1, ddR1, tau), scalar, shape)


def hc_jet(profile, c, t0, t1, strip=None, epsilon=DEFAULT_EPSILON, backend=None):
    """Jet of the angular-momentum-c generating function.

    Strip defaults to (0, sigma_B). Raises DiscriminantNonPositive when
    c^2 tau^2 >= R0^2 R1^2 anywhere.
    """
    k = backend or kernels.active
    scalar, t0, t1, shape = _prepare(t0, t1)
    tau = t1 - t0
    if strip is None:
        _, sigmaB = compute_sigmas(profile.norms, epsilon)
        strip = StripSpec(0.0, sigmaB)
    _check_strip(tau, strip.tau_min, strip.tau_max)
    R0, dR0, ddR0 = evaluate(profile, t0, k)
    R1, dR1, ddR1 = evaluate(profile, t1, k)
    disc = (R0 * R1) ** 2 - (c * tau) ** 2
    if np.any(disc <= 0.0):
        raise DiscriminantNonPositive(f"c^2 tau^2 >= R0^2 R1^2 at tau={tau[disc <= 0][0]!r}")
    if c > 0 and np.any(c * tau / np.sqrt(disc) >= ARCTAN_LIMIT):
        raise DiscriminantNonPositive("arctan argument too close to the branch limit")
    if c == 0:
        # formal substitution c = 0 gives h_0; use its shorter closed forms
        return _finish(k.h0_jet(R0, dR0, ddR0, R1, dR1, ddR1, tau), scalar, shape)
    return _finish(k.hc_jet(R0, dR0, ddR0, R1, dR1, ddR1, tau, float(c)), scalar, shape)


@dataclass(frozen=True)
class GeneratingFunction:
    """h_0 (``angular_momentum == 0``) or h_c on its strip."""

    profile: object
    angular_momentum: float = 0.0
    strip: StripSpec = None
    epsilon: float = DEFAULT_EPSILON
    sigma: float = field(init=False)

    def __post_init__(self):
        if self.angular_momentum < 0:
            raise ValueError("angular momentum must be >= 0")
        sigma0, sigmaB = compute_sigmas(self.profile.norms, self.epsilon)
        sigma = sigmaB if self.angular_momentum > 0 else sigma0
        object.__setattr__(self, "sigma", sigma)
        if self.strip is None:
            object.__setattr__(self, "strip", StripSpec(0.0, sigma))
        elif self.strip.tau_max > sigma * (1 + 1e-12):
            raise ValueError(f"strip upper end {self.strip.tau_max} exceeds sigma = {sigma}")

    @property
    def c(self):
        return self.angular_momentum

    def jet(self, t0, t1):
        if self.angular_momentum == 0.0:
            return h0_jet(self.profile, t0, t1, self.strip)
        return hc_jet(self.profile, self.angular_momentum, t0, t1, self.strip)

    def __call__(self, t0, t1):
        return self.jet(t0, t1).value


@dataclass(frozen=True)
class TwistReport:
    min_neg_d12: float
    argmin: tuple

    def to_dict(self):
        return {"min_neg_d12": self.min_neg_d12, "argmin": {"t0": self.argmin[0], "tau": self.argmin[1]}}


def verify_twist(gf, grid=256, strip=None):
    """Minimum of -d12 over a (t0 mod 1) x tau grid; TwistViolation if <= 0."""
    if grid < 64:
        raise ValueError("grid must be >= 64 per axis")
    strip = strip or gf.strip
    t0 = np.arange(grid, dtype=np.float64) / grid
    tau = strip.closed_grid(grid)
    T0, TAU = np.meshgrid(t0, tau, indexing="ij")
    neg = -gf.jet(T0, T0 + TAU).d12
    i, j = np.unravel_index(np.argmin(neg), neg.shape)
    report = TwistReport(float(neg[i, j]), (float(t0[i]), float(tau[j])))
    if not report.min_neg_d12 > 0.0:
        raise TwistViolation(f"-d12 = {report.min_neg_d12:.6g} at t0={t0[i]:.6g}, tau={tau[j]:.6g}")
    return report


@dataclass(frozen=True)
class ConvergenceReport:
    c_values: list
    sup_c2_distance: list
    component_distance: dict
    slope: float

    def to_dict(self):
        return {
            "c_values": list(self.c_values),
            "sup_c2_distance": list(self.sup_c2_distance),
            "component_distance": {k: list(v) for k, v in self.component_distance.items()},
            "slope": self.slope,
        }


JET_NAMES = ("value", "d1", "d2", "d11", "d12", "d22")


def convergence_probe(profile, strip, c_values, grid=64, epsilon=DEFAULT_EPSILON):
    """Sup distance between the h_c and h_0 jets on a strip grid, per c.

    ``slope`` is the least-squares slope of log(sup distance) against log(c).
    Each c must satisfy c * tau_max < epsilon * R_min^2 so that the square
    root stays well inside its domain.
    """
    c_values = [float(c) for c in c_values]
    if len(c_values) < 4:
        raise ValueError("need at least 4 values of c")
    c_lim = epsilon * profile.norms.r_min**2 / strip.tau_max
    if any(not 0.0 < c < c_lim for c in c_values):
        raise ValueError(f"every c must lie in (0, {c_lim:.6g})")
    t0 = np.arange(grid, dtype=np.float64) / grid
    T0, TAU = np.meshgrid(t0, strip.closed_grid(grid), indexing="ij")
    T1 = T0 + TAU
    base = h0_jet(profile, T0, T1, strip)
    comps = {name: [] for name in JET_NAMES}
    sup = []
    for c in c_values:
        jc = hc_jet(profile, c, T0, T1, strip, epsilon)
        worst = 0.0
        for name in JET_NAMES:
            d = float(np.max(np.abs(getattr(jc, name) - getattr(base, name))))
            comps[name].append(d)
            worst = max(worst, d)
        sup.append(worst)
    return ConvergenceReport(c_values, sup, comps, loglog_slope(c_values, sup))


def dump_grid_csv(gf, path, grid=64, strip=None):
    """Write the jet on a strip grid as ``t0,tau,value,d1,d2,d11,d12,d22``."""
    from .io import write_csv

    strip = strip or gf.strip
    t0 = np.arange(grid, dtype=np.float64) / grid
    T0, TAU = np.meshgrid(t0, strip.closed_grid(grid), indexing="ij")
    j = gf.jet(T0, T0 + TAU)
    rows = zip(T0.ravel(), TAU.ravel(), *(x.ravel() for x in j.astuple()))
    write_csv(path, ["t0", "tau", "value", "d1", "d2", "d11", "d12", "d22"], rows)
