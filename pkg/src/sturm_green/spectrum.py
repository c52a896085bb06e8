"""Low spectrum of ``-y'' + q y`` on truncated boxes ``[-L, L]``.

The operator is discretised with second-order central differences and
zero boundary values.  The resulting symmetric tridiagonal matrix is handed
to LAPACK's Sturm-sequence bisection, so eigenvalues are obtained by count
and never by a dense solve.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .dfuncs import compactness_indicator
from .errors import InternalConsistencyError, PreconditionError

METHOD = "FD2-dirichlet"
LOWER_BOUND_TOL = 1e-8


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    L: float
    n: int
    method: str = METHOD
    convergence: np.ndarray = None

    def to_dict(self):
        conv = None if self.convergence is None else [float(c) for c in self.convergence]
        return {
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "L": float(self.L),
            "n": int(self.n),
            "method": self.method,
            "convergence": conv,
        }


def _matrix(q, L, n):
    h = 2.0 * L / n
    x = -L + h * np.arange(1, n)
    diag = 2.0 / h**2 + np.asarray(q(x), dtype=float)
    off = np.full(n - 2, -1.0 / h**2)
    return diag, off


def _lowest(q, L, n, k):
    diag, off = _matrix(q, L, n)
    return eigh_tridiagonal(
        diag, off, eigvals_only=True, select="i", select_range=(0, k - 1),
        lapack_driver="stebz",
    )


def count_below(q, L, n, level):
    """Number of discrete eigenvalues strictly below ``level``."""
    diag, off = _matrix(q, L, n)
    ev = eigh_tridiagonal(
        diag, off, eigvals_only=True, select="v", select_range=(-np.inf, level),
        lapack_driver="stebz",
    )
    return int(ev.size)


def _check_args(L, n, k):
    if not L > 0:
        raise PreconditionError(f"L must be positive, got {L}")
    if int(n) != n or n < 100:
        raise PreconditionError(f"n must be an integer >= 100, got {n}")
    if int(k) != k or k < 1 or k > n / 4:
        raise PreconditionError(f"k must satisfy 1 <= k <= n/4, got k={k}, n={n}")


def eigen_truncated(q, L, n, k, refine=True):
    """Lowest ``k`` Dirichlet eigenvalues on ``[-L, L]`` with ``n`` mesh cells.

    Parameters
    ----------
    q : Potential
    L : float
        Half-width of the box.
    n : int
        Number of cells, ``h = 2L/n``; the matrix has ``n - 1`` rows.
    k : int
        How many eigenvalues to return, at most ``n/4``.
    refine : bool
        When true, recompute at ``(L + 2, 2n)`` and store the absolute
        change per eigenvalue in ``convergence``.

    Returns
    -------
    SpectralResult
    """
    _check_args(L, n, k)
    n, k = int(n), int(k)
    if refine:
        with ThreadPoolExecutor(max_workers=2) as ex:
            base, fine = ex.map(lambda a: _lowest(q, *a, k), ((L, n), (L + 2.0, 2 * n)))
        conv = np.abs(fine - base)
    else:
        base, conv = _lowest(q, L, n, k), None
    if base[0] < 1.0 - LOWER_BOUND_TOL:
        raise InternalConsistencyError(f"lowest eigenvalue {base[0]} is below 1")
    return SpectralResult(eigenvalues=base, L=float(L), n=n, convergence=conv)


@dataclass(frozen=True)
class DiscretenessReport:
    verdict: str
    compactness: str
    radii: list
    eigenvalues: list
    counts: list
    level: float
    stable: bool
    densifying: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "compactness": self.compactness,
            "radii": [float(r) for r in self.radii],
            "eigenvalues": [[float(e) for e in ev] for ev in self.eigenvalues],
            "counts": list(self.counts),
            "level": float(self.level),
            "stable": self.stable,
            "densifying": self.densifying,
            "detail": self.detail,
        }


def discreteness_diagnostic(q, k=5, L0=None, h=0.01, gap=0.5, rel_tol=1e-3,
                            compactness=None):
    """Compare box spectra on growing boxes against the compactness verdict.

    The box radius runs through ``L0, L0 + 4, L0 + 8`` at fixed mesh width
    ``h``.  ``stable`` means the lowest ``k`` eigenvalues move by less than
    ``rel_tol`` (relative) between the last two radii; ``densifying`` means the
    number of eigenvalues below ``lambda_1 + gap`` strictly grows with the
    radius.

    Returns
    -------
    DiscretenessReport
        ``discrete-consistent`` for a compact verdict with stable, non-densifying
        spectra, ``continuous-consistent`` for a non-compact verdict with
        densification, ``inconsistent`` otherwise.
    """
    if compactness is None:
        compactness = compactness_indicator(q).verdict
    if L0 is None:
        L0 = q.domain_hint
    radii = [float(L0), float(L0) + 4.0, float(L0) + 8.0]
    ns = [int(round(2 * L / h)) for L in radii]
    for L, n in zip(radii, ns):
        _check_args(L, n, k)

    def run(args):
        L, n = args
        ev = eigen_truncated(q, L, n, k, refine=False).eigenvalues
        return ev

    with ThreadPoolExecutor(max_workers=3) as ex:
        spectra = list(ex.map(run, zip(radii, ns)))
    level = float(spectra[0][0]) + gap
    counts = [count_below(q, L, n, level) for L, n in zip(radii, ns)]

    change = np.abs(spectra[-1] - spectra[-2]) / np.abs(spectra[-1])
    stable = bool(np.all(change < rel_tol))
    densifying = bool(all(b > a for a, b in zip(counts, counts[1:])))
    if compactness == "compact" and stable and not densifying:
        verdict = "discrete-consistent"
    elif compactness == "not_compact" and densifying:
        verdict = "continuous-consistent"
    else:
        verdict = "inconsistent"
    return DiscretenessReport(
        verdict=verdict,
        compactness=compactness,
        radii=radii,
        eigenvalues=spectra,
        counts=counts,
        level=level,
        stable=stable,
        densifying=densifying,
        detail={"h": h, "max_relative_change": float(change.max())},
    )
