"""scikit-learn style wrappers around the density estimators.

Fitting has nothing to learn: ``fit`` only validates the parameters and
records the query dimension. ``predict`` runs the cell-formula estimator for
each query row, so ``clone``/``get_params``/grid utilities work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import ergodic as E
from .geometry import RationalDirection
from .integrand import SurfaceIntegrand, VolumeIntegrand
from .medium import GeneratorKind, iid_cells, sample_medium
from .surface_cell import get_neighborhood


class FhomEstimator(BaseEstimator):
    """Rows of ``X`` are gradients ``xi`` (``n = 2`` columns, one component)."""

    def __init__(self, medium: GeneratorKind | None = None, p: float = 2.0, schedule=(8, 16, 32), n_seeds: int = 50,
                 h: float = 0.25, base_seed: int = 0, tol: float = 1e-10):
        self.medium = medium
        self.p = p
        self.schedule = schedule
        self.n_seeds = n_seeds
        self.h = h
        self.base_seed = base_seed
        self.tol = tol

    def _integrand(self) -> VolumeIntegrand:
        kind = self.medium if self.medium is not None else iid_cells((1.0, 4.0))
        return VolumeIntegrand(sample_medium(kind, self.base_seed), p=self.p)

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("xi rows need 2 columns")
        self._integrand()
        self.n_features_in_ = X.shape[1]
        return self

    def predict_series(self, X) -> list:
        check_is_fitted(self)
        X = check_array(X)
        f = self._integrand()
        return [E.estimate_fhom(f, [row], tuple(self.schedule), self.n_seeds, self.h, self.base_seed, self.tol)
                for row in X]

    def predict(self, X) -> np.ndarray:
        return np.array([s.point_estimate for s in self.predict_series(X)])


class GhomEstimator(BaseEstimator):
    """Rows of ``X`` are ``(zeta, nu_1, nu_2)``; ``nu`` must be an exactly
    rational unit vector (denominator at most 1000)."""

    def __init__(self, medium: GeneratorKind | None = None, family: str = "perimeter", schedule=(8, 16, 32, 64),
                 n_seeds: int = 50, base_seed: int = 0, neighborhood: str = "n4"):
        self.medium = medium
        self.family = family
        self.schedule = schedule
        self.n_seeds = n_seeds
        self.base_seed = base_seed
        self.neighborhood = neighborhood

    def _integrand(self) -> SurfaceIntegrand:
        kind = self.medium if self.medium is not None else iid_cells((1.0, 3.0))
        return SurfaceIntegrand(sample_medium(kind, self.base_seed), family=self.family)

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != 3:
            raise ValueError("rows must be (zeta, nu_1, nu_2)")
        for row in X:
            RationalDirection.from_vector(row[1:])
        self._integrand()
        get_neighborhood(self.neighborhood)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_series(self, X) -> list:
        check_is_fitted(self)
        X = check_array(X)
        g, nb = self._integrand(), get_neighborhood(self.neighborhood)
        out = []
        for row in X:
            spec = E.surface_spec(g, (float(row[0]),), RationalDirection.from_vector(row[1:]),
                                  base_seed=self.base_seed, neighborhood=nb)
            out.append(E.estimate_ghom(spec, tuple(self.schedule), self.n_seeds))
        return out

    def predict(self, X) -> np.ndarray:
        return np.array([s.point_estimate for s in self.predict_series(X)])
