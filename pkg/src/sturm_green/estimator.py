"""scikit-learn style wrappers.

``GreenSolver`` is fitted on a potential and then maps forcing samples on its
grid to solutions, so it drops into a :class:`sklearn.pipeline.Pipeline`.
``DFunctionTransformer`` maps abscissae to the three local length scales.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive, check_potential, check_samples
from .dfuncs import compute_dfunctions
from .green import GreenKernel, apply_on_grid


class GreenSolver(BaseEstimator, TransformerMixin):
    """Apply the Green operator of a fitted potential to sampled forcings.

    Parameters
    ----------
    L : float, optional
        Truncation radius; defaults to the potential's ``domain_hint``.  The
        operator integrates over ``[-L, L]`` only, so values within a few
        decay lengths of the edges feel the cut.
    tol : float
        Riccati sweep tolerance.
    spacing : float, optional
        Grid spacing; defaults to ``min(0.01, tol**0.25)``.
    derivative : bool
        If true, ``transform`` returns ``y'`` instead of ``y``.

    Attributes
    ----------
    kernel_ : GreenKernel
    grid_ : ndarray
        Nodes on which forcings must be sampled.
    """

    def __init__(self, L=None, tol=1e-10, spacing=None, derivative=False):
        self.L = L
        self.tol = tol
        self.spacing = spacing
        self.derivative = derivative

    def fit(self, X, y=None):
        q = check_potential(X)
        tol = check_positive(self.tol, "tol")
        L = q.domain_hint if self.L is None else check_positive(self.L, "L")
        kw = {} if self.spacing is None else {"spacing": check_positive(self.spacing, "spacing")}
        self.kernel_ = GreenKernel.from_potential(q, L, tol, **kw)
        self.grid_ = self.kernel_.grid
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        F = check_samples(X, self.grid_.size)
        out = np.empty_like(F)
        for i, f in enumerate(F):
            y, yp, _ = apply_on_grid(self.kernel_, f)
            out[i] = yp if self.derivative else y
        return out


class DFunctionTransformer(BaseEstimator, TransformerMixin):
    """Map abscissae ``x`` to rows ``(d(x), d1(x), d2(x))``.

    Parameters
    ----------
    potential : Potential
    tol : float
        Root tolerance.
    """

    def __init__(self, potential=None, tol=1e-12):
        self.potential = potential
        self.tol = tol

    def fit(self, X=None, y=None):
        self.potential_ = check_potential(self.potential)
        self.tol_ = check_positive(self.tol, "tol")
        return self

    def transform(self, X):
        check_is_fitted(self, "potential_")
        x = check_points(X)
        dfn = compute_dfunctions(self.potential_, x, self.tol_)
        return np.column_stack([dfn.d, dfn.d1, dfn.d2])
