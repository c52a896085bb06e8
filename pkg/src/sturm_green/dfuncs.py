"""Local length scales d, d1, d2 of a potential and the compactness classifier.

For fixed ``x`` each scale is the root in ``(0, 1]`` of a strictly increasing
function of the length ``s``:

* ``d``:  ``s * integral_{x-s}^{x+s} q - 2``
* ``d1``: ``integral_0^{sqrt2 s} integral_{x-t}^x q  dt - 1``
* ``d2``: ``integral_0^{sqrt2 s} integral_x^{x+t} q  dt - 1``

The double integrals collapse to first moments,
``integral_{x-r}^x (xi - x + r) q(xi) dxi`` and its mirror, which the
potential evaluates in closed form, so every residual below is exact up to
roundoff.  All solvers are vectorised over ``x``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InternalConsistencyError, InvalidProbeError, PreconditionError

SQRT2 = math.sqrt(2.0)
BISECTION_STEPS = 60
DEFAULT_PROBES = (-1000.0, -100.0, -10.0, 10.0, 100.0, 1000.0)


def F_d(q, x, s):
    return s * q.integrate(x - s, x + s) - 2.0


def F_d1(q, x, s):
    r = SQRT2 * s
    return q.first_moment(x - r, x, x - r) - 1.0


def F_d2(q, x, s):
    r = SQRT2 * s
    return -q.first_moment(x, x + r, x + r) - 1.0


def _bisect(F, x, tol):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo = np.zeros(x.shape)
    hi = np.ones(x.shape)
    f_hi = np.asarray(F(x, hi), dtype=float)
    if np.any(f_hi < -max(tol, 1e-12)):
        bad = x[f_hi < -max(tol, 1e-12)][0]
        raise InternalConsistencyError(f"root bracket (0, 1] does not close at x={bad}")
    f_lo = np.asarray(F(x, lo), dtype=float)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(F(x, mid), dtype=float)
        right = fm >= 0
        hi = np.where(right, mid, hi)
        f_hi = np.where(right, fm, f_hi)
        lo = np.where(right, lo, mid)
        f_lo = np.where(right, f_lo, fm)
    return np.where(np.abs(f_hi) <= np.abs(f_lo), hi, lo)


def _solve(F, q, x, tol):
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    root = _bisect(lambda xx, s: F(q, xx, s), x, tol)
    return float(root[0]) if np.ndim(x) == 0 else root


def solve_d(q, x, tol=1e-12):
    """Root of ``s * integral_{x-s}^{x+s} q = 2`` (vectorised over ``x``)."""
    return _solve(F_d, q, x, tol)


def solve_d1(q, x, tol=1e-12):
    return _solve(F_d1, q, x, tol)


def solve_d2(q, x, tol=1e-12):
    return _solve(F_d2, q, x, tol)


@dataclass(frozen=True)
class DFunctions:
    grid: np.ndarray
    d: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    q_ref: object
    tol: float

    def residuals(self):
        """Max ``|F|`` of each defining equation, re-evaluated from scratch."""
        q, x = self.q_ref, self.grid
        return {
            "d": float(np.max(np.abs(F_d(q, x, self.d)))),
            "d1": float(np.max(np.abs(F_d1(q, x, self.d1)))),
            "d2": float(np.max(np.abs(F_d2(q, x, self.d2)))),
        }

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "d", "d1", "d2"])
            for row in zip(self.grid, self.d, self.d1, self.d2):
                w.writerow([repr(float(v)) for v in row])


def compute_dfunctions(q, grid, tol=1e-12):
    grid = np.asarray(grid, dtype=float)
    return DFunctions(
        grid=grid,
        d=solve_d(q, grid, tol),
        d1=solve_d1(q, grid, tol),
        d2=solve_d2(q, grid, tol),
        q_ref=q,
        tol=tol,
    )


@dataclass(frozen=True)
class CompactnessVerdict:
    verdict: str
    evidence: dict = field(default_factory=dict)
    consistent: bool = True

    def to_dict(self):
        return {"verdict": self.verdict, "consistent": self.consistent, "evidence": self.evidence}


def _tails(probes):
    probes = np.asarray(sorted(set(float(p) for p in probes)))
    left = probes[probes < 0][::-1]  # ordered by growing |x|
    right = probes[probes > 0]
    for name, tail in (("negative", left), ("positive", right)):
        if tail.size < 2 or abs(tail[-1]) < 100.0 * abs(tail[0]):
            raise InvalidProbeError(
                f"{name} probes must span at least two decades in |x| (got {tail.tolist()})"
            )
    return left, right


def _classify(values, mass, eps, mono_tol):
    tails = {}
    for name, v in values.items():
        shrinking = bool(np.all(v[1:] <= (1.0 + mono_tol) * v[:-1]))
        tails[name] = {
            "small": bool(v[-1] < eps),
            "monotone": shrinking,
            "heavy": bool(mass[name][-1] > 2.0 / eps),
            "floor": bool(np.all(v[-2:] >= eps)),
        }
    if all(t["small"] and t["monotone"] and t["heavy"] for t in tails.values()):
        return "compact"
    if any(t["floor"] for t in tails.values()):
        return "not_compact"
    return "inconclusive"


def compactness_indicator(q, probes=DEFAULT_PROBES, eps=0.05, tol=1e-12, mono_tol=0.10):
    """Classify whether sliding-window masses of ``q`` diverge at both ends.

    ``compact`` needs, on both tails, ``d < eps`` at the outermost probe,
    ``d`` non-increasing along the tail up to ``mono_tol`` relative slack and
    unit-window mass above ``2 / eps`` at the outermost probe.
    ``not_compact`` is returned when the two outermost probes of some tail
    both keep ``d >= eps``.  Anything else is ``inconclusive``.

    The same rule is applied to ``d1`` and ``d2``; ``consistent`` reports
    whether all three agree.
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    left, right = _tails(probes)
    tails = {"negative": left, "positive": right}
    mass = {k: np.asarray(q.window_mass(v, 1.0)) for k, v in tails.items()}
    verdicts = {}
    evidence = {"eps": eps, "max_abs_probe": float(max(-left[-1], right[-1]))}
    for name, solver in (("d", solve_d), ("d1", solve_d1), ("d2", solve_d2)):
        vals = {k: np.atleast_1d(solver(q, v, tol)) for k, v in tails.items()}
        verdicts[name] = _classify(vals, mass, eps, mono_tol)
        evidence[name] = {k: dict(zip(map(float, tails[k]), map(float, v))) for k, v in vals.items()}
    evidence["window_mass"] = {
        k: dict(zip(map(float, tails[k]), map(float, v))) for k, v in mass.items()
    }
    evidence["verdicts"] = verdicts
    return CompactnessVerdict(
        verdict=verdicts["d"],
        evidence=evidence,
        consistent=len(set(verdicts.values())) == 1,
    )
