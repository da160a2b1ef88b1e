"""Event-driven simulation of a point particle in the breathing disk.

Free flight between impacts, elastic reflection off the radially moving wall:
with n the outward normal and v_r = v.n, the outgoing velocity is
v' = v + 2 (R'(t) - v_r) n. Impact times of a trajectory are an independent
check of the generating function h_c through the discrete Euler-Lagrange
equation.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import GrazingImpact, NoImpact
from .profile import compute_sigmas, evaluate

IMPACT_TOL = 1e-13
GRAZING_TOL = 1e-8
MAX_STEP = 0.01
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class ParticleState:
    position: tuple
    velocity: tuple
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))
        object.__setattr__(self, "time", float(self.time))
        if math.hypot(*self.velocity) <= 0.0:
            raise ValueError("speed must be positive")

    @classmethod
    def from_polar(cls, r, theta, v_r, v_theta, time=0.0):
        ct, st = math.cos(theta), math.sin(theta)
        return cls((r * ct, r * st), (v_r * ct - v_theta * st, v_r * st + v_theta * ct), time)

    @property
    def angular_momentum(self):
        (x, y), (vx, vy) = self.position, self.velocity
        return x * vy - y * vx

    @property
    def energy(self):
        vx, vy = self.velocity
        return 0.5 * (vx * vx + vy * vy)

    def radial_speed(self):
        (x, y), (vx, vy) = self.position, self.velocity
        return (x * vx + y * vy) / math.hypot(x, y)


@dataclass(frozen=True)
class ImpactEvent:
    time: float
    angle: float
    radial_speed_in: float
    radial_speed_out: float
    angular_momentum: float
    energy_in: float
    energy_out: float
    state_in: ParticleState = field(default=None, repr=False, compare=False)


def _wall_speed(profile, t):
    return evaluate(profile, t)[1]


def next_impact(profile, state, backend=None):
    """First wall contact after ``state.time`` (pre-reflection data plus the reflected radial speed)."""
    k = backend or kernels.active
    norms = profile.norms
    sigma0, _ = compute_sigmas(norms)
    horizon = 10.0 * (sigma0 if math.isfinite(sigma0) else 2.0 * norms.r_max / math.hypot(*state.velocity))
    speed = math.hypot(*state.velocity)
    h = min(MAX_STEP, norms.r_min / (4.0 * speed))
    (x, y), (vx, vy) = state.position, state.velocity
    a, b = profile._coeffs
    t_hit = k.impact_search(state.time, x, y, vx, vy, h, state.time + horizon, profile.mean, a, b, IMPACT_TOL)
    if t_hit == -1.0:
        raise GrazingImpact(f"particle cannot enter the disk from t={state.time!r}")
    if math.isnan(t_hit):
        raise NoImpact(f"no wall crossing within {horizon:.6g} of t={state.time!r}")
    dt = t_hit - state.time
    px, py = x + vx * dt, y + vy * dt
    hit = ParticleState((px, py), (vx, vy), t_hit)
    v_r = hit.radial_speed()
    dR = _wall_speed(profile, t_hit)
    v_out = 2.0 * dR - v_r
    energy_out = hit.energy + 0.5 * (v_out * v_out - v_r * v_r)
    return ImpactEvent(t_hit, math.atan2(py, px) % (2.0 * math.pi), v_r, v_out,
                       hit.angular_momentum, hit.energy, energy_out, hit)


def reflect(profile, event, incoming):
    """Outgoing state v' = v + 2 (R'(t) - v_r) n at the impact point ``incoming``."""
    R, dR, _ = evaluate(profile, event.time)
    (x, y), (vx, vy) = incoming.position, incoming.velocity
    r = math.hypot(x, y)
    if abs(r - R) > BOUNDARY_TOL:
        raise ValueError(f"incoming position is off the wall by {r - R:.3g}")
    nx, ny = x / r, y / r
    v_r = vx * nx + vy * ny
    rel = v_r - dR
    if abs(rel) < GRAZING_TOL:
        raise GrazingImpact(f"relative radial speed {rel:.3g} at t={event.time!r}")
    if rel < 0:
        raise ValueError("particle is moving away from the wall; no reflection")
    j = 2.0 * (dR - v_r)
    return ParticleState((x, y), (vx + j * nx, vy + j * ny), event.time)


@dataclass
class Trajectory:
    events: list
    states: list
    grazed: bool = False
    failure: str = None

    @property
    def times(self):
        return [e.time for e in self.events]

    def rows(self):
        """Rows ``n, time, angle, vr_in, vr_out, c, energy_in, energy_out``."""
        return [(n, e.time, e.angle, e.radial_speed_in, e.radial_speed_out, e.angular_momentum,
                 e.energy_in, e.energy_out) for n, e in enumerate(self.events)]


def _starts_outgoing(profile, state):
    R, dR, _ = evaluate(profile, state.time)
    r = math.hypot(*state.position)
    return abs(r - R) <= BOUNDARY_TOL and state.radial_speed() - dR > 0.0


def simulate(profile, init, bounces, backend=None):
    """Alternate next_impact and reflect ``bounces`` times.

    A start on the wall that is moving outward relative to it is reflected at
    the start time first (not recorded as an event). A grazing impact ends the
    run with ``grazed`` set.
    """
    if bounces < 1:
        raise ValueError("bounces must be >= 1")
    state = init
    states = [init]
    if _starts_outgoing(profile, init):
        state = reflect(profile, ImpactEvent(init.time, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), init)
        states.append(state)
    events = []
    for _ in range(bounces):
        try:
            ev = next_impact(profile, state, backend)
            state = reflect(profile, ev, ev.state_in)
        except GrazingImpact as exc:
            return Trajectory(events, states, True, f"GrazingImpact: {exc}")
        events.append(ev)
        states.append(state)
    return Trajectory(events, states)


def del_residuals(times, gf):
    """|d1 h(t_n, t_{n+1}) + d2 h(t_{n-1}, t_n)| at every interior impact."""
    t = np.asarray(times, dtype=np.float64)
    if t.size < 3:
        return np.zeros(0)
    return np.abs(gf.jet(t[1:-1], t[2:]).d1 + gf.jet(t[:-2], t[1:-1]).d2)


def cross_check(events, gf):
    """Max DEL residual of the impact times against ``gf`` (OutOfStrip if a gap leaves the strip)."""
    res = del_residuals([e.time for e in events], gf)
    return float(res.max()) if res.size else 0.0


def random_trajectory_start(profile, c, rng, vr_range=(0.25, 1.0)):
    """On-wall start at a random phase with inward relative speed and angular momentum c."""
    t0 = float(rng.uniform(0.0, 1.0))
    theta = float(rng.uniform(0.0, 2.0 * math.pi))
    R, dR, _ = evaluate(profile, t0)
    v_r = dR - float(rng.uniform(*vr_range))
    return ParticleState.from_polar(R, theta, v_r, c / R, t0)
