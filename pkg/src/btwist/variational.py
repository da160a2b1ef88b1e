"""Periodic Aubry-Mather configurations of the discrete action, rotation
numbers of orbits, and hull-gap probes at irrational rotation numbers through
continued-fraction convergents.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoConvergence, OutOfStrip, StripEscape

DEL_TOL = 1e-10
MAX_ITER = 200
MAX_HALVINGS = 30
MAX_RESTARTS = 6
ESCAPE_SAMPLES = 41


@dataclass
class Configuration:
    times: np.ndarray
    p: int
    q: int
    action: float
    max_del_residual: float
    is_local_min: bool = True
    bounded_deviation: bool = True
    iterations: int = 0
    del_residuals: np.ndarray = field(default=None, repr=False)

    @property
    def gaps(self):
        t = np.asarray(self.times)
        return np.diff(np.append(t, t[0] + self.p))

    def rows(self):
        """Rows ``n, t_lift, t_mod1, gap, del_residual``."""
        return [(n, t, t % 1.0, g, r) for n, (t, g, r) in
                enumerate(zip(self.times, self.gaps, self.del_residuals))]

    def to_dict(self):
        return {"p": self.p, "q": self.q, "times": list(self.times), "action": self.action,
                "max_del_residual": self.max_del_residual, "is_local_min": self.is_local_min,
                "bounded_deviation": self.bounded_deviation, "iterations": self.iterations}


def _closure(t, p):
    return np.concatenate([t[-1:] - p, t, t[:1] + p])


def _in_strip(gf, t, p):
    gaps = np.diff(np.append(t, t[0] + p))
    return bool(np.all(gaps > gf.strip.tau_min) and np.all(gaps < gf.strip.tau_max))


def action(gf, t, p):
    t = np.asarray(t, dtype=np.float64)
    return float(np.sum(gf.jet(t, np.append(t[1:], t[0] + p)).value))


def del_gradient(gf, t, p):
    """Gradient of the closed action: d1 h(t_n, t_{n+1}) + d2 h(t_{n-1}, t_n)."""
    ext = _closure(np.asarray(t, dtype=np.float64), p)
    return gf.jet(ext[1:-1], ext[2:]).d1 + gf.jet(ext[:-2], ext[1:-1]).d2


def del_hessian(gf, t, p):
    """Cyclic tridiagonal Hessian of the closed action (dense; q is small)."""
    t = np.asarray(t, dtype=np.float64)
    q = t.size
    fwd = gf.jet(t, np.append(t[1:], t[0] + p))  # links (n, n+1)
    H = np.zeros((q, q))
    for n in range(q):
        m = (n + 1) % q
        H[n, n] += fwd.d11[n]
        H[m, m] += fwd.d22[n]
        H[n, m] += fwd.d12[n]
        H[m, n] += fwd.d12[n]
    return H


def _newton_step(H, g):
    """Newton step with the Hessian's eigenvalues replaced by their moduli.

    Near a nondegenerate minimum this is the plain Newton step; elsewhere it
    is still a descent direction for the action, so saddles repel. Directions
    with (near) zero curvature, such as the rigid shift of a constant profile,
    get no component, which keeps the seed's t_0.
    """
    w, V = np.linalg.eigh(H)
    wm = np.abs(w)
    coef = -(V.T @ g)
    keep = wm > 1e-12 * max(float(wm.max()), 1e-300)
    coef[keep] /= wm[keep]
    coef[~keep] = 0.0
    return V @ coef


def _newton(gf, t, p, tol, max_iter):
    g = del_gradient(gf, t, p)
    W = action(gf, t, p)
    for it in range(max_iter):
        err = float(np.max(np.abs(g)))
        if err <= tol:
            return t, g, it
        step = _newton_step(del_hessian(gf, t, p), g)
        slope = float(g @ step)
        lam, accepted, seen_strip = 1.0, None, False
        for _ in range(MAX_HALVINGS + 1):
            trial = t + lam * step
            if _in_strip(gf, trial, p):
                seen_strip = True
                Wt = action(gf, trial, p)
                gt = del_gradient(gf, trial, p)
                # Armijo on the action; near convergence the action change
                # drowns in rounding, so a smaller DEL residual also counts
                if Wt <= W + 1e-4 * lam * slope or (err < 1e-6 and np.max(np.abs(gt)) < err):
                    accepted = (trial, gt, Wt)
                    break
            lam *= 0.5
        if accepted is None:
            if not seen_strip:
                raise StripEscape(f"every damped Newton step leaves the strip at iteration {it}")
            raise NoConvergence(f"line search stalled at DEL residual {err:.3g} (iteration {it})")
        t, g, W = accepted
    if float(np.max(np.abs(g))) <= tol:
        return t, g, max_iter
    raise NoConvergence(f"DEL residual {np.max(np.abs(g)):.3g} after {max_iter} iterations")


def _is_local_min(H):
    eig = np.linalg.eigvalsh(H)
    scale = max(float(np.max(np.abs(eig))), 1e-300)
    return bool(eig[0] >= -1e-9 * scale), eig


def minimize_periodic(gf, p, q, seed=None, t0=0.0, tol=DEL_TOL, max_iter=MAX_ITER):
    """Stationary (p, q) configuration of the closed action by damped Newton on the DEL system.

    Starts from t_n = t0 + n p/q unless ``seed`` (times or a Configuration)
    is given. Steps use the modulus of the Hessian spectrum, so they descend
    the action. A start exactly on a symmetric critical point (the uniform
    seed often is one) has zero gradient; there the action is scanned along
    the most negative curvature direction and Newton restarts from the
    lowest point, up to a few times. Local minimality is reported in
    ``is_local_min`` and not enforced.
    """
    p, q = int(p), int(q)
    if q < 1:
        raise ValueError("q must be >= 1")
    if math.gcd(p, q) != 1:
        raise ValueError("p and q must be coprime")
    ratio = p / q
    if not (gf.strip.tau_min < ratio < gf.strip.tau_max):
        raise OutOfStrip(f"p/q = {ratio!r} outside the strip ({gf.strip.tau_min}, {gf.strip.tau_max})")
    if seed is None:
        t = t0 + np.arange(q, dtype=np.float64) * ratio
    else:
        t = np.array(getattr(seed, "times", seed), dtype=np.float64)
        if t.size != q:
            raise ValueError("seed length must equal q")
    if not _in_strip(gf, t, p):
        raise StripEscape("initial configuration leaves the strip")
    total = 0
    for attempt in range(MAX_RESTARTS + 1):
        t, g, its = _newton(gf, t, p, tol, max_iter - total)
        total += its
        H = del_hessian(gf, t, p)
        local_min, _ = _is_local_min(H)
        if local_min or attempt == MAX_RESTARTS:
            break
        escaped = _escape(gf, t, p, H)
        if escaped is None:
            break
        t = escaped
    g = del_gradient(gf, t, p)
    gaps = np.diff(np.append(t, t[0] + p))
    return Configuration(
        times=t, p=p, q=q, action=action(gf, t, p), max_del_residual=float(np.max(np.abs(g))),
        is_local_min=local_min, bounded_deviation=bool(np.all(np.abs(gaps - ratio) <= 1.0)),
        iterations=total, del_residuals=np.abs(g),
    )


def _escape(gf, t, p, H):
    """Lowest-action point along the most negative curvature direction, or None."""
    w, V = np.linalg.eigh(H)
    v = V[:, 0] / np.max(np.abs(V[:, 0]))
    q = t.size
    base = action(gf, t, p)
    best, best_t = base, None
    for s in np.linspace(-0.5 / q, 0.5 / q, ESCAPE_SAMPLES):
        if s == 0.0:
            continue
        trial = t + s * v
        if not _in_strip(gf, trial, p):
            continue
        a = action(gf, trial, p)
        if a < best:
            best, best_t = a, trial
    return best_t


def periodic_extension(config, n):
    """Lifted times t_0..t_n of the periodic orbit, using t_{k+q} = t_k + p."""
    k = np.arange(n + 1)
    t = np.asarray(config.times, dtype=np.float64)
    return t[k % config.q] + (k // config.q) * config.p


def rotation_number(orbit):
    """Tail-averaged (t_{j+L} - t_j)/L over j < N//2 with L = N - N//2.

    Accepts an Orbit or a sequence of lifted times. Bounded deviation of
    orbits on invariant graphs gives an error of at most 1/N.
    """
    t = np.asarray(getattr(orbit, "lifted_times", orbit), dtype=np.float64)
    N = t.size - 1
    if N < 100:
        raise ValueError("orbit needs at least 100 steps")
    J = N // 2
    L = N - J
    return float(np.mean((t[L:L + J] - t[:J]) / L))


def rotation_error_bound(orbit):
    t = getattr(orbit, "lifted_times", orbit)
    return 1.0 / (len(t) - 1)


def convergents(omega, depth):
    """Continued-fraction convergents p_k/q_k, k = 0..depth."""
    x = Fraction(omega)
    out = []
    h_prev, h = 1, int(math.floor(x))
    k_prev, k = 0, 1
    out.append((h, k))
    frac = x - math.floor(x)
    for _ in range(depth):
        if frac == 0:
            break
        x = 1 / frac
        a = int(math.floor(x))
        frac = x - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append((h, k))
    return out


@dataclass
class MatherProbe:
    omega_target: float
    convergents: list
    hull_points: list
    largest_gap: float
    excess_gap: float
    gap_location: float
    configurations: list = field(default_factory=list, repr=False)
    skipped: list = field(default_factory=list)

    def to_dict(self):
        return {
            "omega_target": self.omega_target,
            "convergents": [list(c) for c in self.convergents],
            "hull_points": list(self.hull_points),
            "largest_gap": self.largest_gap,
            "excess_gap": self.excess_gap,
            "gap_location": self.gap_location,
            "skipped": self.skipped,
            "configurations": [{"p": c.p, "q": c.q, "action": c.action,
                                "max_del_residual": c.max_del_residual,
                                "is_local_min": c.is_local_min} for c in self.configurations],
        }


def mather_probe(gf, omega, depth):
    """Minimize at each convergent of ``omega`` and measure the hull gaps at the deepest one.

    Convergents outside (max(1, tau_min), tau_max - 1) and minimizer failures
    are skipped and listed in ``skipped``. ``excess_gap`` is the largest
    circular gap between hull points minus the uniform spacing 1/q.
    """
    hi = gf.strip.tau_max - 1.0
    lo = max(1.0, gf.strip.tau_min)
    if not lo < omega < hi:
        raise OutOfStrip(f"omega={omega!r} outside ({lo}, {hi})")
    used, configs, skipped = [], [], []
    seed = None
    for p, q in convergents(omega, depth):
        if not lo < p / q < hi:
            skipped.append({"p": p, "q": q, "reason": "outside strip range"})
            continue
        try:
            cfg = minimize_periodic(gf, p, q, seed=seed)
        except (NoConvergence, StripEscape) as exc:
            skipped.append({"p": p, "q": q, "reason": f"{type(exc).__name__}: {exc}"})
            continue
        used.append((p, q))
        configs.append(cfg)
    if not configs:
        raise NoConvergence("no convergent produced a configuration")
    deep = configs[-1]
    pts = np.sort(np.asarray(deep.times) % 1.0)
    gaps = np.diff(np.append(pts, pts[0] + 1.0))
    i = int(np.argmax(gaps))
    raw = float(gaps[i])
    return MatherProbe(float(omega), used, pts.tolist(), raw, raw - 1.0 / deep.q,
                       float(pts[i]), configs, skipped)
