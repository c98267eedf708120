"""scikit-learn style wrappers around the pipeline stages.

Inputs are functions (expression strings or ``AnalyticFunction``) and
configurations rather than feature matrices, so these estimators are not
meant for ``Pipeline``/``GridSearchCV``; they provide the familiar
``fit``/``transform``/``predict`` surface and ``get_params``/``set_params``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import config as cf
from .domain import Domain
from .expr import as_function
from .extender import build_extended
from .extractor import extract
from .realizer import realize
from .verifier import GRID, MODEL_TOL, verify_model


class LevelConfigExtractor(TransformerMixin, BaseEstimator):
    """Maps functions to their configuration on ``{|f| < level}``."""

    def __init__(self, level=1.0, box=None, canonical=False):
        self.level = level
        self.box = box
        self.canonical = canonical

    def fit(self, X=None, y=None):
        self.n_seen_ = 0 if X is None else len(X)
        return self

    def transform(self, X):
        out = [extract(as_function(f), self.level, box=self.box) for f in X]
        return [cf.canonical_form(c) for c in out] if self.canonical else out


class ExtendedConfigBuilder(TransformerMixin, BaseEstimator):
    """Maps ``(h, domain)`` pairs to extended configurations."""

    def __init__(self, margin=0.2, anchor=None, divisions=None):
        self.margin = margin
        self.anchor = anchor
        self.divisions = divisions

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return [build_extended(as_function(h), D, self.margin, anchor=self.anchor,
                               divisions=self.divisions).config for h, D in X]


class PolynomialRealizer(BaseEstimator):
    """Fits one polynomial per target configuration."""

    def __init__(self, seed=0, max_restarts=200, degree_cap=6):
        self.seed = seed
        self.max_restarts = max_restarts
        self.degree_cap = degree_cap

    def fit(self, X, y=None):
        self.results_ = [realize(c, seed=self.seed, max_restarts=self.max_restarts,
                                 degree_cap=self.degree_cap) for c in X]
        return self

    def predict(self, X=None):
        """Ascending coefficient lists for the fitted targets (or ``X``)."""
        if X is not None:
            self.fit(X)
        if not hasattr(self, "results_"):
            raise NotFittedError("call fit first")
        return [r.coefficients if r.success else None for r in self.results_]

    def score(self, X, y=None):
        self.fit(X)
        return float(np.mean([r.success for r in self.results_]))


class ConformalModel(BaseEstimator):
    """Polynomial model ``p`` and map ``phi`` with ``h = p o phi`` on a domain.

    ``fit(domain)`` runs extension, realization and verification.
    ``transform(Z)`` evaluates ``phi``; ``predict(Z)`` evaluates ``p(phi(Z))``.
    """

    def __init__(self, func="sin(z)", margin=0.2, anchor=None, seed=0, max_restarts=200,
                 grid=GRID, model_tol=MODEL_TOL):
        self.func = func
        self.margin = margin
        self.anchor = anchor
        self.seed = seed
        self.max_restarts = max_restarts
        self.grid = grid
        self.model_tol = model_tol

    def fit(self, X: Domain, y=None):
        h = as_function(self.func)
        self.config_ = build_extended(h, X, self.margin, anchor=self.anchor).config
        res = realize(self.config_, seed=self.seed, max_restarts=self.max_restarts)
        if not res.success:
            raise RuntimeError("no polynomial realizes the extended configuration")
        self.coefficients_ = res.coefficients
        self.polynomial_ = res.polynomial
        self.report_ = verify_model(h, X, self.polynomial_, grid=self.grid,
                                    model_tol=self.model_tol, seed=self.seed)
        self.h_ = h
        return self

    def _check(self):
        if not hasattr(self, "report_"):
            raise NotFittedError("call fit first")

    def transform(self, Z):
        self._check()
        phi = self.report_.phi
        Z = np.atleast_1d(np.asarray(Z, dtype=complex))
        near = np.abs(Z[:, None] - phi.z[None, :]).argmin(axis=1)
        g = self.polynomial_
        out = np.empty_like(Z)
        for i, (z, j) in enumerate(zip(Z, near)):
            # first-order step from the nearest sample, then Newton on p(w) = h(z)
            d = g.derivative()(phi.w[j])
            w0 = phi.w[j] + (self.h_(z) - g(phi.w[j])) / d if d != 0 else phi.w[j]
            out[i] = _solve(g, complex(self.h_(z)), w0)
        return out

    def predict(self, Z):
        return self.polynomial_(self.transform(Z))

    def score(self, X=None, y=None):
        self._check()
        return -float(self.report_.max_model_error)


def _solve(p, target, w0, steps=50):
    dp = p.derivative()
    w = complex(w0)
    for _ in range(steps):
        d = dp(w)
        if d == 0:
            break
        step = (p(w) - target) / d
        w -= step
        if abs(step) < 1e-15 * max(1.0, abs(w)):
            break
    return w


__all__ = ["LevelConfigExtractor", "ExtendedConfigBuilder", "PolynomialRealizer", "ConformalModel"]
