"""Independent oracles for the frozen reference values in ``frozen.json``.

Nothing here imports btwist. Values come from mpmath (40 digits) applied to
the defining formulas, brute-force grids, and scipy's BFGS on an action
assembled from mpmath-free closed values. Re-run with

    python tests/oracles/generate.py

and commit the resulting JSON; the tests only read it.
"""
import json
import math
import os

import mpmath as mp
import numpy as np
from scipy.optimize import minimize

mp.mp.dps = 40
HERE = os.path.dirname(os.path.abspath(__file__))

PROFILES = {
    "P0": (1.0, []),
    "P1": (1.0, [(0.01, 0.0)]),
    "P2": (1.0, [(0.0005, 0.0)]),
}


def R_mp(name, t):
    mean, harm = PROFILES[name]
    out = mp.mpf(mean)
    for k, (a, b) in enumerate(harm, start=1):
        out += a * mp.cos(2 * mp.pi * k * t) + b * mp.sin(2 * mp.pi * k * t)
    return out


def R_np(name, t, order=0):
    mean, harm = PROFILES[name]
    t = np.asarray(t, dtype=np.float64)
    out = np.full_like(t, mean if order == 0 else 0.0)
    for k, (a, b) in enumerate(harm, start=1):
        w = 2 * np.pi * k
        c, s = np.cos(w * t), np.sin(w * t)
        if order == 0:
            out += a * c + b * s
        elif order == 1:
            out += w * (b * c - a * s)
        else:
            out += -w * w * (a * c + b * s)
    return out


def h_mp(name, c, t0, t1):
    R0, R1 = R_mp(name, t0), R_mp(name, t1)
    tau = t1 - t0
    if c == 0:
        return (R0 + R1) ** 2 / (2 * tau)
    s = mp.sqrt(R0**2 * R1**2 - c**2 * tau**2)
    return (R0**2 + R1**2 + 2 * s) / (2 * tau) + c * mp.atan(c * tau / s)


def jet_mp(name, c, t0, t1):
    c = mp.mpf(c)
    f = lambda a, b: h_mp(name, c, a, b)
    t0, t1 = mp.mpf(t0), mp.mpf(t1)
    return [float(f(t0, t1)),
            float(mp.diff(f, (t0, t1), (1, 0))), float(mp.diff(f, (t0, t1), (0, 1))),
            float(mp.diff(f, (t0, t1), (2, 0))), float(mp.diff(f, (t0, t1), (1, 1))),
            float(mp.diff(f, (t0, t1), (0, 2)))]


def norms_bruteforce(name, n=10**6):
    t = np.arange(n) / n
    R, dR, ddR = R_np(name, t), R_np(name, t, 1), R_np(name, t, 2)
    sq = 2 * (dR * dR + R * ddR)
    i = int(np.argmax(R))
    return {"r_min": float(R.min()), "r_max": float(R.max()), "d1_norm": float(np.abs(dR).max()),
            "d2_norm": float(np.abs(ddR).max()), "d2_sq_norm": float(np.abs(sq).max()),
            "t_bar": float(t[i]), "kappa": float(-ddR[i])}


def sigmas(nm, eps=0.5):
    s0 = nm["r_min"] / nm["d1_norm"] if nm["d1_norm"] else math.inf
    first = nm["r_min"] / (2 * nm["d1_norm"]) if nm["d1_norm"] else math.inf
    second = (2 * math.sqrt(1 + math.sqrt(1 - eps * eps)) * nm["r_min"] / math.sqrt(nm["d2_sq_norm"])
              if nm["d2_sq_norm"] else math.inf)
    return s0, min(first, second)


def criterion_oracle(nm, sigma, n=10**4):
    Rl, Rb, d1, d2 = nm["r_min"], nm["r_max"], nm["d1_norm"], nm["d2_norm"]
    w = np.linspace(1, sigma - 1, n + 1)[1:]
    bl = (2 * Rl / (w + 1) - d1) ** 2 / (w + 1)
    hu = (2 * d1**2 + 4 * Rb * d2) / (w - 1) + 8 * Rb * d1 / (w - 1) ** 2 + 8 * Rb**2 / (w - 1) ** 3
    al = 2 * bl**2 / hu
    tail = 8 * Rb**2 / (w - 1) ** 3
    F = (w + 1) / (2 * (Rb + Rl)) * (tail - al)
    F0 = (w + 1) / (2 * (Rb + Rl)) * tail
    kappa = nm["kappa"] * (1 - 1e-6)
    au = -2 * kappa * (Rl + Rb) / (w + 1) + tail
    xi = w[au < al]
    return {"inf_F": float(F.min()), "inf_F_at": float(w[np.argmin(F)]), "inf_F_noA": float(F0.min()),
            "xi_lo": float(xi.min()) if xi.size else None, "xi_hi": float(xi.max()) if xi.size else None}


def a_low_oracle(nm, w):
    Rl, Rb, d1, d2 = nm["r_min"], nm["r_max"], nm["d1_norm"], nm["d2_norm"]
    bl = (2 * Rl / (w + 1) - d1) ** 2 / (w + 1)
    hu = (2 * d1**2 + 4 * Rb * d2) / (w - 1) + 8 * Rb * d1 / (w - 1) ** 2 + 8 * Rb**2 / (w - 1) ** 3
    return 2 * bl**2 / hu


def forward_oracle(name, c, t, K):
    """Secant on K = d1 h(t, t + tau) with the derivative taken by mpmath."""
    c = mp.mpf(c)
    t = mp.mpf(t)
    d1 = lambda tau: mp.diff(lambda a: h_mp(name, c, a, t + tau), t)
    tau = mp.findroot(lambda x: d1(x) - K, (mp.mpf(3), mp.mpf(4)), solver="secant", tol=mp.mpf(10) ** -30)
    K1 = -mp.diff(lambda b: h_mp(name, c, t, b), t + tau)
    return {"tau": float(tau), "t1": float((t + tau) % 1), "K1": float(K1)}


def impact_oracle(name, x, y, vx, vy, step=1e-4):
    """March |x(t)| - R(t) with a fine step, then refine with mpmath findroot."""
    g = lambda s: mp.sqrt((x + vx * s) ** 2 + (y + vy * s) ** 2) - R_mp(name, s)
    s = step
    while float(g(s)) >= 0:
        s += step  # leave the wall
    while float(g(s)) < 0:
        s += step
    root = mp.findroot(g, (mp.mpf(s - step), mp.mpf(s)), solver="anderson", tol=mp.mpf(10) ** -30)
    return float(root)


def strip_extrema_bruteforce(name, omega, n=1000):
    t0 = np.arange(n) / n
    T0, TAU = np.meshgrid(t0, np.linspace(omega - 1, omega + 1, n), indexing="ij")
    T1 = T0 + TAU
    R0, dR0, ddR0 = R_np(name, T0), R_np(name, T0, 1), R_np(name, T0, 2)
    R1, dR1, ddR1 = R_np(name, T1), R_np(name, T1, 1), R_np(name, T1, 2)
    S = R0 + R1
    q = S / TAU
    d11 = (dR0**2 + S * ddR0) / TAU + 2 * S * dR0 / TAU**2 + S * S / TAU**3
    d22 = (dR1**2 + S * ddR1) / TAU - 2 * S * dR1 / TAU**2 + S * S / TAU**3
    b = (q + dR0) * (q - dR1) / TAU
    return {"H11": float(np.abs(d11).max()), "H22": float(np.abs(d22).max()),
            "b_min": float(b.min()), "b_max": float(b.max())}


def h0_value_np(name, t0, t1):
    return (R_np(name, t0) + R_np(name, t1)) ** 2 / (2 * (t1 - t0))


def minimizer_oracle(name, p, q, seed=0):
    """BFGS on the closed action with finite-difference-free gradient from numpy closed forms."""
    def W(t):
        return float(np.sum(h0_value_np(name, t, np.append(t[1:], t[0] + p))))

    def grad(t):
        t1 = np.append(t[1:], t[0] + p)
        S = R_np(name, t) + R_np(name, t1)
        tau = t1 - t
        d1 = S * R_np(name, t, 1) / tau + S * S / (2 * tau * tau)
        d2 = S * R_np(name, t1, 1) / tau - S * S / (2 * tau * tau)
        return d1 + np.roll(d2, 1)

    rng = np.random.default_rng(seed)
    x0 = np.arange(q) * p / q + rng.normal(0, 0.05, q)
    res = minimize(W, x0, jac=grad, method="BFGS", options={"gtol": 1e-14, "maxiter": 10000})
    return {"times_mod1_sorted": sorted(float(v) for v in np.mod(res.x, 1.0)), "action": float(res.fun),
            "max_grad": float(np.max(np.abs(grad(res.x))))}


def main():
    out = {}
    out["norms"] = {k: norms_bruteforce(k) for k in ("P1", "P2")}
    out["sigmas"] = {k: dict(zip(("sigma0", "sigmaB"), sigmas(v))) for k, v in out["norms"].items()}
    out["hc_P0_c0.1_0_2"] = float(h_mp("P0", mp.mpf("0.1"), mp.mpf(0), mp.mpf(2)))
    out["jet_P1_h0_0.1_2.3"] = jet_mp("P1", 0, "0.1", "2.3")
    out["jet_P2_hc0.01_0.2_3.4"] = jet_mp("P2", "0.01", "0.2", "3.4")
    out["forward_P2_c0.01_t0.1_K0.15"] = forward_oracle("P2", "0.01", "0.1", mp.mpf("0.15"))
    R0 = float(R_mp("P2", 0))
    c = 0.01
    out["impact_P2"] = {"x": -R0, "y": 0.0, "vx": 0.5, "vy": -c / R0,
                        "time": impact_oracle("P2", -R0, 0.0, 0.5, -c / R0)}
    out["strip_extrema_P2_w12"] = strip_extrema_bruteforce("P2", 12.0)
    nm2 = out["norms"]["P2"]
    out["a_low_P2"] = {"12": a_low_oracle(nm2, 12.0), "12.7": a_low_oracle(nm2, 12.7)}
    out["criterion_P2_billiard"] = criterion_oracle(nm2, out["sigmas"]["P2"]["sigmaB"])
    out["criterion_P1_billiard"] = criterion_oracle(out["norms"]["P1"], out["sigmas"]["P1"]["sigmaB"])
    out["minimizers_P2"] = {f"{p}/{q}": minimizer_oracle("P2", p, q) for p, q in ((12, 1), (25, 2), (37, 3), (49, 4))}
    with open(os.path.join(HERE, "..", "frozen.json"), "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
