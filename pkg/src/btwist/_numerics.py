import numpy as np
from scipy.optimize import minimize_scalar


def refine_max(f, lo, hi, x0, f0, xatol=1e-13):
    """Polish a grid maximum of the scalar function ``f`` on ``[lo, hi]``.

    Keeps the grid point ``x0`` unless the bounded search strictly improves
    on ``f0``, so ties resolve to the grid (smallest-t) point.
    """
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    if res.success and -res.fun > f0:
        return float(res.x), float(-res.fun)
    return float(x0), float(f0)


def refine_min(f, lo, hi, x0, f0, xatol=1e-13):
    x, v = refine_max(lambda x: -f(x), lo, hi, x0, -f0, xatol)
    return x, -v


def loglog_slope(x, y):
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
