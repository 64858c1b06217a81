"""Independent reference values for the unit tests.

Run once; the output (frozen.json) is committed and read by the C++ tests. Nothing here
calls the C++ code: Bessel series through mpmath, level curves through skimage contours.
"""
import functools
import json
import math

import mpmath as mp
import numpy as np
from scipy.optimize import brentq
from skimage.measure import find_contours
from scipy.spatial import cKDTree

mp.mp.dps = 40


def zeros(nu, k):
    if nu == -0.5:
        return [(j - 0.5) * mp.pi for j in range(1, k + 1)]
    if nu == 0.5:
        return [j * mp.pi for j in range(1, k + 1)]
    return [mp.besseljzero(nu, j) for j in range(1, k + 1)]


@functools.lru_cache(None)
def coefficients(n, terms=80):
    nu = mp.mpf(n) / 2 - 1
    return [(j, j ** (nu - 1) / (2 ** (nu - 1) * mp.gamma(nu + 1) * mp.besselj(nu + 1, j)))
            for j in zeros(float(nu), terms)]


def survival(n, c):
    """1 - Theta_n(c): Brownian motion with generator Laplacian stays in the ball of radius sqrt(c) up to time 1."""
    c = mp.mpf(c)
    return mp.fsum(a * mp.exp(-j * j / c) for j, a in coefficients(n))


def survival_1d(c, terms=80):
    # interval (-r, r), per-coordinate variance 2t, c = r^2/t
    s = mp.mpf(0)
    for k in range(terms):
        m = 2 * k + 1
        s += mp.mpf(4) / mp.pi * (-1) ** k / m * mp.exp(-m * m * mp.pi ** 2 / (4 * c))
    return s


def theta(n, c):
    return float(1 - survival(n, c))


def log_grid(lo, hi, n):
    return [lo * (hi / lo) ** (k / (n - 1)) for k in range(n)]


def kappa(eta):
    best = math.inf
    for b in log_grid(1e-2, 1e2, 64):
        v = -b * (mp.log(eta) + mp.log(survival(2, b)))
        if v > 0:
            best = min(best, float(mp.sqrt(v)))
    return best


def theta_inverse(n, p):
    return brentq(lambda c: theta(n, c) - p, 1e-3, 1e3, xtol=1e-14, rtol=1e-14)


def level_bound(mu, eta, lam):
    a = -math.log(eta / mu)
    best = math.inf
    for s in log_grid(1e-3, 1.0, 64):
        t0 = a + (10 - a) * s
        p = 1 - math.exp(-t0) * mu / eta
        if not (0 < p < 1):
            continue
        best = min(best, math.sqrt(t0 / lam * theta_inverse(2, p)))
    return best


def zeta2(eps):
    n = 2.0
    return math.exp(n / 4) * math.sqrt(2) / (8 * n) ** (n / 4) * math.sqrt(math.gamma(n) / math.gamma(n / 2)) * (
        1 + 1 / math.sqrt(eps)) ** (n / 2)


def hot_spot_limit(sigma):
    best = math.inf
    for e in log_grid(1e-4, 1 - 1e-9, 64):
        if e < 1 - 1 / sigma:
            best = min(best, 1 + zeta2(e) / (sigma * (1 - e) - 1))
    return best


def curve_distance(f, lo, hi, a, b, n=4001, inside=None):
    x = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    F = f(X, Y)
    mask = None if inside is None else inside(X, Y)
    step = (hi - lo) / (n - 1)
    pts = []
    for level in (a, b):
        cs = find_contours(F, level, mask=mask)
        pts.append(np.vstack([lo + c * step for c in cs]))
    d, _ = cKDTree(pts[0]).query(pts[1])
    return float(d.min())


def square_heat_content(t, terms=2001):
    s = sum(8 / (m * m * math.pi ** 2) * math.exp(-m * m * math.pi ** 2 * t) for m in range(1, terms, 2))
    return 1 - s * s


def square_centre_survival(t, terms=2001):
    q = sum(4 / (m * math.pi) * math.sin(m * math.pi / 2) * math.exp(-m * m * math.pi ** 2 * t) for m in range(1, terms, 2))
    return q * q


out = {}
out["bessel_zeros"] = {str(nu): [float(z) for z in zeros(nu, 5)] for nu in (-0.5, 0.0, 0.5, 1.0)}
out["theta"] = [{"n": n, "c": c, "p": theta(n, c)} for n in (1, 2, 3) for c in (0.5, 1, 2, 4, 8, 16, 32)]
out["theta_1d_closed_form"] = [{"c": c, "p": float(1 - survival_1d(c))} for c in (0.5, 1, 2, 4, 8, 16, 32)]
out["theta_inverse"] = [{"n": 2, "p": p, "c": theta_inverse(2, p)} for p in (0.1, 0.5, 0.9)]
out["log_survival"] = [{"n": 2, "c": c, "value": float(mp.log(survival(2, c)))} for c in (0.01, 0.05, 0.2)]
out["kappa"] = [{"eta": e, "kappa": kappa(e)} for e in (0.3, 0.5, 0.8)]
lam_sq = 2 * math.pi ** 2
out["level_bound_square"] = [{"mu": m, "eta": e, "lambda": lam_sq, "rhs": level_bound(m, e, lam_sq)}
                             for m, e in ((0.9, 0.5), (0.8, 0.4))]
out["hot_spot_limit"] = [{"sigma": s, "bound": hot_spot_limit(s)} for s in (2.0, 21.0, 100.0)]

sinsin = lambda X, Y: np.sin(np.pi * X) * np.sin(np.pi * Y)
j01 = float(mp.besseljzero(0, 1))
jp11 = float(mp.besseljzero(1, 1, derivative=1))

def disk_neumann(X, Y):
    R = np.hypot(X, Y)
    from scipy.special import jv
    u = jv(1, jp11 * R) * np.where(R > 0, X / np.where(R > 0, R, 1), 0)
    return u / jv(1, jp11)  # maximum on the boundary at angle 0


def disk_radius(level):
    from scipy.special import j0
    return brentq(lambda r: j0(j01 * r) - level, 0, 1)


out["level_distance_analytic"] = {
    "square_dirichlet": [{"mu": m, "eta": e, "distance": curve_distance(sinsin, 0, 1, m, e)} for m, e in ((0.9, 0.5), (0.8, 0.4))],
    "square_neumann": [{"mu": m, "eta": e, "distance": (math.acos(e) - math.acos(m)) / math.pi} for m, e in ((0.9, 0.5), (0.8, 0.4))],
    "disk_dirichlet": [{"mu": m, "eta": e, "distance": disk_radius(e) - disk_radius(m)} for m, e in ((0.9, 0.5), (0.8, 0.4))],
    "disk_neumann": [{"mu": m, "eta": e, "distance": curve_distance(disk_neumann, -1, 1, m, e, inside=lambda X, Y: X ** 2 + Y ** 2 <= 1)} for m, e in ((0.9, 0.5), (0.8, 0.4))],
}
out["inner_radius_square"] = {"eta": 0.5, "distance": 1 / 6, "c": math.sqrt(lam_sq) / 6}
out["disk"] = {"j01_squared": j01 ** 2, "jprime11_squared": jp11 ** 2, "inner_radius_c": (1 - disk_radius(0.5)) * j01}
out["square_heat_content"] = [{"t": t, "content": square_heat_content(t)} for t in (0.01, 0.05, 0.2)]
out["square_centre_survival"] = [{"t": t, "q": square_centre_survival(t)} for t in (0.01, 0.02, 0.05)]

with open(__file__.replace("make_oracle.py", "frozen.json"), "w") as f:
    json.dump(out, f, indent=1, sort_keys=True)
    f.write("\n")
