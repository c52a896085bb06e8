"""Principal fundamental system of ``z'' = q z`` in logarithmic-derivative form.

The growing solution ``v`` (small at ``-inf``) and the decaying solution ``u``
(small at ``+inf``) are never formed.  Instead the two Riccati equations

    w' = q - w**2,   w_v = v'/v,   w_u = u'/u

are integrated from WKB seeds placed 15 length units outside ``[-L, L]``;
the seeded branch is attracting, so the seed error is damped by roughly
``exp(-30)`` before the stored window begins.  From those::

    rho = u v = 1 / (w_v - w_u)
    log v = log sqrt(rho) + 1/2 int_0^x dt / rho
    log u = log sqrt(rho) - 1/2 int_0^x dt / rho

which fixes the pair with ``u(0) = v(0)``.  Every downstream quantity depends
on the pair only through ``rho``, ``w`` and differences of logs, so that
choice is harmless.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ArgumentOrderError,
    InternalConsistencyError,
    OutOfDomainError,
    PreconditionError,
    RefinementError,
)

BURN_IN = 15.0
MAX_STEPS = 2_000_000

# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _riccati_sweep(stops, cell_fns, w0, tol, h0, max_steps):
    """Integrate ``w' = f(s) - w**2`` through ascending ``stops``.

    ``cell_fns[i]`` evaluates the coefficient on ``[stops[i], stops[i+1]]``;
    every stop is landed on exactly, so a discontinuous coefficient only ever
    appears at a step boundary.  Returns ``w`` at every stop.
    """
    out = np.empty(len(stops))
    out[0] = w = w0
    h = h0
    steps = 0
    worst = 0.0
    for i in range(len(stops) - 1):
        s, s_end = stops[i], stops[i + 1]
        f = cell_fns[i]
        k1 = f(s) - w * w
        while s < s_end:
            if steps >= max_steps:
                raise RefinementError("Riccati step budget exhausted", worst)
            step = h
            last = s + step >= s_end or s_end - (s + step) < 1e-12 * (1.0 + abs(s_end))
            if last:
                step = s_end - s
            y = w + step * _A21 * k1
            k2 = f(s + 0.2 * step) - y * y
            y = w + step * (_A31 * k1 + _A32 * k2)
            k3 = f(s + 0.3 * step) - y * y
            y = w + step * (_A41 * k1 + _A42 * k2 + _A43 * k3)
            k4 = f(s + 0.8 * step) - y * y
            y = w + step * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
            k5 = f(s + 8 / 9 * step) - y * y
            y = w + step * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
            k6 = f(s + step) - y * y
            w_new = w + step * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = f(s + step) - w_new * w_new
            err = abs(step * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7))
            steps += 1
            if not math.isfinite(w_new) or not math.isfinite(err):
                raise InternalConsistencyError(f"Riccati solution blew up near s={s}")
            ratio = err / (tol * max(1.0, abs(w_new)))
            fac = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio**-0.2))
            if ratio <= 1.0:
                s = s_end if last else s + step
                w = w_new
                k1 = k7
                worst = max(worst, ratio)
                # a step clipped to a stop says little about the step size
                # that would have been accepted, so only let it shrink h
                h = step * fac if not last else (min(h, step * fac) if fac < 1 else h)
            else:
                h = step * max(0.1, fac)
                if h < 1e-14 * (1.0 + abs(s)):
                    raise RefinementError(f"step size underflow near s={s}", ratio)
        out[i + 1] = w
    return out


@dataclass(frozen=True)
class Pfss:
    """Sampled principal fundamental system.

    Attributes
    ----------
    grid : ndarray
        Strictly increasing nodes covering ``[-L, L]``; contains 0, the
        potential's breakpoints and any requested extra nodes.
    w_v, w_u : ndarray
        ``v'/v`` (positive) and ``u'/u`` (negative) at the nodes.
    rho : ndarray
        ``u v``.
    log_v, log_u : ndarray
        Logs of ``v`` and ``u`` normalised so that ``u(0) = v(0)``.
    q_right, q_left : ndarray
        One-sided values of the potential at the nodes.
    """

    grid: np.ndarray
    w_v: np.ndarray
    w_u: np.ndarray
    rho: np.ndarray
    log_v: np.ndarray
    log_u: np.ndarray
    q_right: np.ndarray
    q_left: np.ndarray
    x0: float
    L: float
    tol: float
    q: object = None

    # -- interpolation -----------------------------------------------------
    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.grid[0], self.grid[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any((x < lo - slack) | (x > hi + slack)) or np.any(np.isnan(x)):
            raise OutOfDomainError(f"points outside [{lo}, {hi}]")
        x = np.clip(x, lo, hi)
        i = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, len(self.grid) - 2)
        return x, i

    def _hermite(self, x, i, val, dleft, dright):
        x0 = self.grid[i]
        h = self.grid[i + 1] - x0
        s = (x - x0) / h
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        return h00 * val[i] + h10 * h * dleft[i] + h01 * val[i + 1] + h11 * h * dright[i + 1]

    def log_v_at(self, x):
        x, i = self._locate(x)
        return self._hermite(x, i, self.log_v, self.w_v, self.w_v)

    def log_u_at(self, x):
        x, i = self._locate(x)
        return self._hermite(x, i, self.log_u, self.w_u, self.w_u)

    def w_at(self, x):
        """Hermite-interpolated ``(w_v, w_u)`` using ``w' = q - w**2``."""
        x, i = self._locate(x)
        dv_r = self.q_right - self.w_v**2
        dv_l = self.q_left - self.w_v**2
        du_r = self.q_right - self.w_u**2
        du_l = self.q_left - self.w_u**2
        return (
            self._hermite(x, i, self.w_v, dv_r, dv_l),
            self._hermite(x, i, self.w_u, du_r, du_l),
        )

    def renormalized(self, c):
        """Same system with ``v -> c v`` and ``u -> u / c``."""
        shift = math.log(c)
        return replace(self, log_v=self.log_v + shift, log_u=self.log_u - shift)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "w_v", "w_u", "rho", "log_v", "log_u"])
            for row in zip(self.grid, self.w_v, self.w_u, self.rho, self.log_v, self.log_u):
                w.writerow([repr(float(v)) for v in row])


def build_grid(q, L, spacing, extra_nodes=()):
    """Uniform nodes ``k * spacing`` on ``[-L, L]`` merged with breakpoints.

    Uniform nodes closer than ``1e-9 * spacing`` to a breakpoint are dropped in
    favour of the breakpoint.
    """
    k_lo = math.ceil(-L / spacing - 1e-9)
    k_hi = math.floor(L / spacing + 1e-9)
    uniform = np.arange(k_lo, k_hi + 1) * spacing
    special = [-L, L, 0.0]
    special.extend(b for b in q.breakpoints if -L < b < L)
    special.extend(float(e) for e in extra_nodes if -L < e < L)
    special = np.unique(np.array(special, dtype=float))
    near = np.zeros(uniform.shape, dtype=bool)
    if special.size:
        j = np.clip(np.searchsorted(special, uniform), 1, len(special) - 1)
        d = np.minimum(np.abs(uniform - special[j - 1]), np.abs(uniform - special[j]))
        near = d < 1e-9 * spacing
    grid = np.union1d(uniform[~near & (uniform > -L) & (uniform < L)], special)
    return grid


def _cell_functions(q, stops, reflect=False):
    mids = 0.5 * (stops[:-1] + stops[1:])
    if reflect:
        seg = q.segment_index(-mids)
        fns = []
        for k in seg:
            g = q.scalar_on(int(k))
            fns.append(lambda s, g=g: g(-s))
        return fns
    return [q.scalar_on(int(k)) for k in q.segment_index(mids)]


def _sweep_stops(q, grid, far):
    # far end of the burn-in plus any breakpoints inside it
    bps = [b for b in q.breakpoints if far < b < grid[0]]
    return np.concatenate(([far], bps, grid))


def solve_pfss(q, L, tol=1e-10, spacing=None, extra_nodes=(), burn_in=BURN_IN,
               max_steps=MAX_STEPS):
    """Compute the principal fundamental system on ``[-L, L]``.

    Parameters
    ----------
    q : Potential
    L : float
        Truncation radius.
    tol : float
        Local error tolerance of the Riccati integrator (mixed abs/rel).
    spacing : float, optional
        Uniform node spacing; defaults to ``min(0.01, tol**0.25)``.
    extra_nodes : iterable of float
        Additional nodes (e.g. discontinuities of a right-hand side).

    Returns
    -------
    Pfss
    """
    if not L > 0:
        raise PreconditionError("L must be positive")
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    h = spacing if spacing is not None else min(0.01, tol**0.25)
    if not h > 0:
        raise PreconditionError("spacing must be positive")
    grid = build_grid(q, L, h, extra_nodes)

    # forward sweep for w_v from -L - burn_in
    stops = _sweep_stops(q, grid, -L - burn_in)
    seed = math.sqrt(q.eval(stops[0]))
    w_fwd = _riccati_sweep(stops, _cell_functions(q, stops), seed, tol, h, max_steps)
    w_v = w_fwd[-len(grid):]

    # backward sweep for w_u, run forward in s = -x on the reflected problem
    # (w~(s) = -w_u(-s) obeys the same equation with q(-s))
    rgrid = -grid[::-1]
    bps = [-b for b in q.breakpoints[::-1] if -L - burn_in < -b < rgrid[0]]
    rstops = np.concatenate(([-L - burn_in], bps, rgrid))
    seed = math.sqrt(q.eval_left(L + burn_in))
    w_bwd = _riccati_sweep(rstops, _cell_functions(q, rstops, reflect=True), seed, tol, h,
                           max_steps)
    w_u = -w_bwd[-len(grid):][::-1]

    if np.any(w_v <= 0) or np.any(w_u >= 0):
        raise InternalConsistencyError("Riccati branch left the principal sign pattern")

    g = w_v - w_u
    rho = 1.0 / g
    # int 1/rho by corrected trapezoid; (1/rho)' = w_u**2 - w_v**2 needs no q
    dg = w_u**2 - w_v**2
    dx = np.diff(grid)
    cell = 0.5 * dx * (g[:-1] + g[1:]) + dx**2 / 12.0 * (dg[:-1] - dg[1:])
    cum = np.concatenate(([0.0], np.cumsum(cell)))
    i0 = int(np.searchsorted(grid, 0.0))
    cum -= cum[i0]
    half_log_rho = 0.5 * np.log(rho)
    return Pfss(
        grid=grid,
        w_v=w_v,
        w_u=w_u,
        rho=rho,
        log_v=half_log_rho + 0.5 * cum,
        log_u=half_log_rho - 0.5 * cum,
        q_right=np.asarray(q.eval(grid), dtype=float),
        q_left=np.asarray(q.eval_left(grid), dtype=float),
        x0=0.0,
        L=float(L),
        tol=float(tol),
        q=q,
    )


def rho_at(p, x):
    """Linearly interpolated ``rho``."""
    x_arr, i = p._locate(x)
    x0 = p.grid[i]
    s = (x_arr - x0) / (p.grid[i + 1] - x0)
    r = (1 - s) * p.rho[i] + s * p.rho[i + 1]
    return float(r) if np.ndim(x) == 0 else r


def log_ratio_v(p, t, x):
    """``log v(t) - log v(x)`` for ``t <= x``; never exponentiates."""
    if np.any(np.asarray(t) > np.asarray(x)):
        raise ArgumentOrderError("log_ratio_v needs t <= x")
    r = p.log_v_at(t) - p.log_v_at(x)
    return float(r) if np.ndim(r) == 0 else r


def log_ratio_u(p, t, x):
    """``log u(t) - log u(x)`` for ``t >= x``."""
    if np.any(np.asarray(t) < np.asarray(x)):
        raise ArgumentOrderError("log_ratio_u needs t >= x")
    r = p.log_u_at(t) - p.log_u_at(x)
    return float(r) if np.ndim(r) == 0 else r


def wronskian_residual(p):
    """``max |rho (w_v - w_u) - 1|`` over the grid."""
    return float(np.max(np.abs(p.rho * (p.w_v - p.w_u) - 1.0)))


def riccati_residual(p, q=None):
    """Central-difference check of ``w' = q - w**2`` at interior nodes.

    Only nodes with equal spacing on both sides and no potential breakpoint in
    between are used.  Returns the max over both ``w_v`` and ``w_u``; the
    value is ``O(h**2)`` in the node spacing.
    """
    q = q if q is not None else p.q
    x = p.grid
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    ok = np.abs(hl - hr) <= 1e-9 * hl
    bps = q.breakpoints
    if bps.size:
        lo = np.searchsorted(bps, x[:-2], side="right")
        hi = np.searchsorted(bps, x[2:], side="left")
        ok &= hi <= lo
    qc = p.q_right[1:-1]
    worst = 0.0
    for w in (p.w_v, p.w_u):
        fd = (w[2:] - w[:-2]) / (hl + hr)
        r = np.abs(fd - (qc - w[1:-1] ** 2))[ok]
        if r.size:
            worst = max(worst, float(r.max()))
    return worst
