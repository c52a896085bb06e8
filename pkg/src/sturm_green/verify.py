"""Falsification harness for the pointwise estimates on u, v, rho, d and G.

Every check reduces to a *margin*: the smallest slack over its samples,
negative when the estimate is violated.  Checks in ``assert`` mode fail when
``worst_margin < -tolerance``; ``report`` mode checks involve constants that
only exist abstractly and are measured against a value calibrated on
``q == 1``, failing only if the calibrated constant has to grow more than
tenfold.

Pair-sampled checks use a fixed seed, so a run is bit-for-bit reproducible.

Check ids
---------
rho_lipschitz         ``|rho'| < 1`` (grid differences)
d_range               ``0 < d <= 1``
d_stability[eps=e]    ``(1 - e) d(x) <= d(t) <= (1 + e) d(x)`` for ``|t - x| <= e d(x)``
log_derivative_scale  ``w_v d1`` and ``-w_u d2`` in ``[1/sqrt2, sqrt2]``
rho_vs_d1_d2          ``rho`` within a factor ``sqrt2`` of ``d1 d2 / (d1 + d2)``
rho_vs_d              ``d/4 <= rho <= 3d/2``
log_derivative_floor  ``w_v >= 1`` and ``-w_u >= 1``
exponential_growth    ``v(x) / v(t) >= exp(x - t)`` for ``t <= x``, mirrored for ``u``
rho_max               ``rho <= 1``
kernel_decay          ``G(x, t) <= exp(-|t - x|)``
kernel_vs_d           ``G(x, t) <= (3/4) d(x) exp(-|t - x|)``
kernel_derivative     ``|dG/dx| <= exp(-|t - x|)`` off the diagonal
one_sided_vs_d        ``2 sqrt2 d_i >= d``
one_sided_stability   ``d1 <= (3/sqrt2) d(x - sqrt2 d1 / 3)``, mirrored for ``d2``
local_log_ratio       report: ``v(t)/v(x)`` and ``u(t)/u(x)`` in ``[1/c, c]`` on ``|t - x| <= d/2``
local_mass            report: ``(G f_x)(t) >= d(x)**2 / c`` for the window indicator ``f_x``
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .dfuncs import compactness_indicator, compute_dfunctions, solve_d
from .green import GreenKernel, apply_indicator, kernel_dx, kernel_eval, solve_bvp
from .pfss import solve_pfss
from .potential import Forcing, Potential

SQRT2 = math.sqrt(2.0)
ENLARGEMENT_LIMIT = 10.0
WORKERS_ENV = "STURM_GREEN_WORKERS"


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    n_samples: int
    worst_margin: float
    witness: tuple
    mode: str = "assert"
    tolerance: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.worst_margin >= -self.tolerance

    def to_dict(self):
        return {
            "check_id": self.check_id,
            "mode": self.mode,
            "n_samples": self.n_samples,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "witness": list(self.witness),
            "detail": self.detail,
        }


def _result(check_id, margins, witnesses, tolerance, mode="assert", detail=None):
    margins = np.asarray(margins, dtype=float).ravel()
    j = int(np.argmin(margins))
    w = np.atleast_2d(np.asarray(witnesses, dtype=float))
    if w.shape[0] != margins.size:
        w = w.T
    return CheckResult(
        check_id=check_id,
        n_samples=int(margins.size),
        worst_margin=float(margins[j]),
        witness=tuple(float(v) for v in w[j]),
        mode=mode,
        tolerance=tolerance,
        detail=detail or {},
    )


def _between(val, lo, hi):
    return np.minimum(val - lo, hi - val)


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def corrupt_rho(p, factor):
    """Test hook: scale ``rho`` (and both logs consistently) by ``factor``."""
    half = 0.5 * math.log(factor)
    return replace(p, rho=p.rho * factor, log_v=p.log_v + half, log_u=p.log_u + half)


# -- calibration on q == 1 ---------------------------------------------------

@lru_cache(maxsize=None)
def calibrated_constants(p_norm=2):
    """Constants for the report-mode checks, measured on ``q == 1``.

    ``log_ratio``: max ``|log v(t) - log v(x)|`` over ``|t - x| <= d(x)/2``.
    ``local_mass``: min ``(G f_x)(t) / d(x)**2`` over ``t`` in the window.
    ``window_mass``: ``int_window |G f_x|**p / d(x)**(2p + 1)``.
    """
    q = Potential.constant(1.0)
    k = GreenKernel(solve_pfss(q, 6.0, 1e-10))
    x = 0.0
    d = solve_d(q, x)
    ts = x + 0.5 * d * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    log_ratio = float(np.max(np.abs(k.pfss.log_v_at(ts) - k.pfss.log_v_at(x))))
    gf = apply_indicator(k, x - d / 2, x + d / 2, ts)
    return {
        "log_ratio": log_ratio,
        "local_mass": float(gf.min() / d**2),
        "window_mass": _window_mass(k, x, d, p_norm) / d ** (2 * p_norm + 1),
    }


def _window_mass(k, x, d, p_norm):
    nodes, weights = np.polynomial.legendre.leggauss(24)
    a, b = x - d / 2, x + d / 2
    total = 0.0
    for lo, hi in ((a, x), (x, b)):
        t = lo + (hi - lo) * 0.5 * (nodes + 1.0)
        gf = apply_indicator(k, a, b, t)
        total += (hi - lo) * 0.5 * float(np.sum(weights * np.abs(gf) ** p_norm))
    return total


# -- the suite ---------------------------------------------------------------

class _Context:
    def __init__(self, q, L, n, tol, seed, rho_scale):
        self.q = q
        self.L = L
        pf = solve_pfss(q, L, tol)
        if rho_scale is not None:
            pf = corrupt_rho(pf, rho_scale)
        self.pfss = pf
        self.kernel = GreenKernel(pf)
        self.x = np.linspace(-L, L, n)
        self.w_v, self.w_u = pf.w_at(self.x)
        self.log_v = pf.log_v_at(self.x)
        self.log_u = pf.log_u_at(self.x)
        self.rho = np.exp(self.log_v + self.log_u)
        dfn = compute_dfunctions(q, self.x)
        self.d, self.d1, self.d2 = dfn.d, dfn.d1, dfn.d2
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=4 * n)
        j = rng.integers(0, n, size=4 * n)
        keep = i != j
        self.pi = np.concatenate((i[keep], np.arange(n)))
        self.pj = np.concatenate((j[keep], np.arange(n)))


def _check_rho_slope(c):
    x = c.pfss.grid
    slope = np.abs(np.diff(c.pfss.rho) / np.diff(x))
    return _result("rho_lipschitz", 1.0 - slope, 0.5 * (x[1:] + x[:-1]), 1e-9)


def _check_d_range(c):
    return _result("d_range", np.minimum(c.d, 1.0 - c.d), c.x, 1e-12)


def _check_d_stability(c):
    out = []
    taus = np.array([-1.0, -0.5, 0.5, 1.0])
    for eps in (0.25, 0.5, 1.0):
        t = c.x[:, None] + eps * c.d[:, None] * taus[None, :]
        dt = solve_d(c.q, t.ravel()).reshape(t.shape)
        dx = c.d[:, None]
        rel = _between(dt / dx, 1.0 - eps, 1.0 + eps)
        wit = np.stack([np.repeat(c.x, len(taus)), t.ravel()], axis=1)
        out.append(_result(f"d_stability[eps={eps}]", rel.ravel(), wit, 1e-9))
    return out


def _check_log_derivative(c):
    lo, hi = 1 / SQRT2, SQRT2
    m = np.minimum(_between(c.w_v * c.d1, lo, hi), _between(-c.w_u * c.d2, lo, hi))
    return _result("log_derivative_scale", m, c.x, 1e-6)


def _check_rho_d12(c):
    h = c.d1 * c.d2 / (c.d1 + c.d2)
    return _result("rho_vs_d1_d2", _between(c.rho / h, 1 / SQRT2, SQRT2), c.x, 1e-6)


def _check_rho_d(c):
    return _result("rho_vs_d", _between(c.rho / c.d, 0.25, 1.5), c.x, 1e-6)


def _check_w_lower(c):
    return _result("log_derivative_floor", np.minimum(c.w_v - 1.0, -c.w_u - 1.0), c.x, 1e-8)


def _check_growth(c):
    a = np.minimum(c.pi, c.pj)
    b = np.maximum(c.pi, c.pj)
    sel = a != b
    a, b = a[sel], b[sel]
    t, x = c.x[a], c.x[b]
    gap = x - t
    mv = (c.log_v[b] - c.log_v[a]) - gap
    mu = (c.log_u[a] - c.log_u[b]) - gap
    return _result("exponential_growth", np.minimum(mv, mu), np.stack([t, x], axis=1), 1e-8)


def _check_rho_max(c):
    return _result("rho_max", 1.0 - c.rho, c.x, 1e-12)


def _check_kernel_bounds(c):
    x, t = c.x[c.pi], c.x[c.pj]
    g = kernel_eval(c.kernel, x, t)
    scaled = g * np.exp(np.abs(t - x))
    wit = np.stack([x, t], axis=1)
    return [
        _result("kernel_decay", 1.0 - scaled, wit, 1e-8),
        _result("kernel_vs_d", 1.0 - scaled / (0.75 * c.d[c.pi]), wit, 1e-6),
    ]


def _check_kernel_derivative(c):
    sel = c.pi != c.pj
    x, t = c.x[c.pi[sel]], c.x[c.pj[sel]]
    g = np.abs(kernel_dx(c.kernel, x, t)) * np.exp(np.abs(t - x))
    return _result("kernel_derivative", 1.0 - g, np.stack([x, t], axis=1), 1e-6)


def _check_one_sided(c):
    m = np.minimum(2 * SQRT2 * c.d1 - c.d, 2 * SQRT2 * c.d2 - c.d) / c.d
    res = [_result("one_sided_vs_d", m, c.x, 1e-9)]
    left = solve_d(c.q, c.x - SQRT2 / 3 * c.d1)
    right = solve_d(c.q, c.x + SQRT2 / 3 * c.d2)
    m = np.minimum(3 / SQRT2 * left - c.d1, 3 / SQRT2 * right - c.d2) / c.d
    res.append(_result("one_sided_stability", m, c.x, 1e-9))
    return res


def _inner(c, stride=1):
    ok = (c.x - c.d / 2 >= -c.L) & (c.x + c.d / 2 <= c.L)
    idx = np.nonzero(ok)[0][::stride]
    return idx


def _check_log_ratio(c):
    # two-sided and anchored at x: c**-1 v(x) <= v(t) <= c v(x), same for u
    cal = calibrated_constants()
    idx = _inner(c)
    taus = np.array([-1.0, -0.5, 0.5, 1.0])
    x = c.x[idx]
    t = x[:, None] + 0.5 * c.d[idx, None] * taus[None, :]
    lv = np.abs(c.pfss.log_v_at(t) - c.log_v[idx, None])
    lu = np.abs(c.pfss.log_u_at(t) - c.log_u[idx, None])
    worst = np.maximum(lv, lu).max(axis=1)
    # enlargement of the two-sided constant exp(log_ratio) over the calibrated one
    enlarge = np.exp(worst - cal["log_ratio"])
    return _result(
        "local_log_ratio",
        1.0 - enlarge / ENLARGEMENT_LIMIT,
        x,
        0.0,
        mode="report",
        detail={"calibrated_c": math.exp(cal["log_ratio"]),
                "max_enlargement": float(enlarge.max())},
    )


def _check_local_mass(c):
    cal = calibrated_constants()
    idx = _inner(c, stride=max(1, len(c.x) // 100))
    ratios = []
    for i in idx:
        x, d = c.x[i], c.d[i]
        t = x + 0.5 * d * np.array([-1.0, 0.0, 1.0])
        gf = apply_indicator(c.kernel, x - d / 2, x + d / 2, t)
        ratios.append(gf.min() / d**2)
    ratios = np.array(ratios)
    enlarge = cal["local_mass"] / ratios
    return _result(
        "local_mass",
        1.0 - enlarge / ENLARGEMENT_LIMIT,
        c.x[idx],
        0.0,
        mode="report",
        detail={"calibrated_inverse_c": cal["local_mass"],
                "max_enlargement": float(enlarge.max())},
    )


_CHECKS = (
    _check_rho_slope,
    _check_d_range,
    _check_d_stability,
    _check_log_derivative,
    _check_rho_d12,
    _check_rho_d,
    _check_w_lower,
    _check_growth,
    _check_rho_max,
    _check_kernel_bounds,
    _check_kernel_derivative,
    _check_one_sided,
    _check_log_ratio,
    _check_local_mass,
)


def run_inequality_suite(q, L=10.0, n=500, tol=1e-10, seed=0, rho_scale=None):
    """Evaluate every pointwise estimate on ``n`` points of ``[-L, L]``.

    ``rho_scale`` is a fault-injection hook that multiplies ``rho`` before the
    checks run.
    """
    ctx = _Context(q, L, n, tol, seed, rho_scale)
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        outputs = list(pool.map(lambda fn: fn(ctx), _CHECKS))
    results = []
    for out in outputs:
        results.extend(out if isinstance(out, list) else [out])
    return results


def lower_bound_witness(q, L=None, tol=1e-8):
    """``y = G 1`` dominates ``rho**2`` at every node."""
    rep = solve_bvp(q, Forcing.constant(1.0), p=2, L=L, tol=tol)
    margin = rep.y - rep.rho**2
    return _result("necessity", margin, rep.grid, 1e-8,
                   detail={"min_y": float(rep.y.min())})


def kolmogorov_compactness_probe(q, N_list=(4.0, 8.0, 16.0), p=2, tol=1e-10):
    """Local ``L_p`` mass of ``G f_x`` near probe centres ``x = +-N``.

    ``f_x`` is the indicator of ``[x - d(x)/2, x + d(x)/2]``.  The mass
    ``int_window |G f_x|**p`` is compared with ``d(x)**(2p+1)`` through the
    constant calibrated on ``q == 1``.  The detail records the largest mass per
    ``N`` and whether it vanishes along ``N_list`` (strictly decreasing and
    shrinking at least tenfold), together with the classifier's verdict.
    """
    N_list = [float(v) for v in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly increasing")
    cal = calibrated_constants(p)
    L = N_list[-1] + 3.0
    k = GreenKernel(solve_pfss(q, L, tol))
    margins, wits, masses = [], [], []
    for N in N_list:
        per_n = []
        for x in (-N, N):
            d = solve_d(q, x)
            mass = _window_mass(k, x, d, p)
            enlarge = cal["window_mass"] * d ** (2 * p + 1) / mass
            margins.append(1.0 - enlarge / ENLARGEMENT_LIMIT)
            wits.append(x)
            per_n.append(mass)
        masses.append(max(per_n))
    masses = np.array(masses)
    vanishing = bool(np.all(np.diff(masses) < 0) and masses[-1] <= 0.1 * masses[0])
    verdict = compactness_indicator(q).verdict
    return _result(
        "kolmogorov",
        margins,
        wits,
        0.0,
        mode="report",
        detail={
            "p": p,
            "N": N_list,
            "local_mass": masses.tolist(),
            "trend": "vanishing" if vanishing else "bounded_below",
            "compactness": verdict,
            "consistent": vanishing == (verdict == "compact"),
        },
    )


def forcing_family():
    """Twelve fixed right-hand sides used to probe the operator norm of ``G``."""
    fam = [Forcing.constant(1.0)]
    fam += [Forcing.indicator(c - w, c + w) for c, w in ((0.0, 0.5), (0.0, 2.0), (3.0, 0.25), (-4.0, 1.0))]
    fam += [
        lambda t: np.exp(-t * t),
        lambda t: np.exp(-0.1 * (t - 2.0) ** 2),
        lambda t: np.cos(t),
        lambda t: np.cos(5.0 * t),
        lambda t: np.sign(np.sin(t)),
        lambda t: 1.0 / (1.0 + t * t),
        lambda t: np.tanh(t),
    ]
    return fam


def operator_norm_ratios(q, p=2, L=8.0, spacings=(0.02, 0.01), tol=1e-8):
    """Largest ``|Gf|_p / |f|_p`` and ``|(Gf)'|_p / |f|_p`` over :func:`forcing_family`.

    The ratios are recomputed for each spacing; the check fails if the
    largest ratio grows by more than 1% under refinement, which would mean
    the grid, not the operator, sets the size of ``G``.
    """
    table = []
    for h in spacings:
        ry, rd = [], []
        for f in forcing_family():
            rep = solve_bvp(q, f, p=p, L=L, tol=tol, spacing=h)
            nf = rep.norms["f"]
            ry.append(rep.norms["y"] / nf)
            rd.append(rep.norms["y_prime"] / nf)
        table.append((max(ry), max(rd)))
    table = np.array(table)
    growth = table[1:] / table[:-1] - 1.0
    margins = 0.01 - growth.ravel()
    return _result(
        "operator_bound",
        margins,
        np.repeat(np.asarray(spacings[1:], dtype=float), 2),
        0.0,
        mode="report",
        detail={"p": p, "spacings": list(spacings), "ratio_y": table[:, 0].tolist(),
                "ratio_y_prime": table[:, 1].tolist()},
    )


def report_json(results):
    return json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True)
