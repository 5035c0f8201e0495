"""Readout-error calibration and correction."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = ["ReadoutCalibration", "symmetrized_error", "binomial_standard_error"]


def symmetrized_error(eps0: float, eps1: float) -> float:
    """Effective flip rate after exhaustive bit-flip symmetrisation."""
    return 0.5 * (eps0 + eps1)


def binomial_standard_error(mean: float, shots: int) -> float:
    """Standard error of a +/-1-valued sample mean.

    The +1 frequency gets add-one smoothing, so a sample that is all +1 or
    all -1 still reports a non-zero error bar instead of a false certainty.
    """
    if shots < 1:
        return math.inf
    p = (shots * (1 + mean) / 2 + 1) / (shots + 2)
    return 2 * math.sqrt(p * (1 - p) / shots)


class ReadoutCalibration(TransformerMixin, BaseEstimator):
    """Scale factor ``lambda`` for one Z-tensor observable, learned on the ground state.

    ``fit`` takes the symmetrised +/-1 parities measured on |0...0> (or,
    with ``exact=True`` upstream, a single exact mean via ``fit_mean``).
    ``transform`` maps rows ``[mean, standard_error]`` of symmetrised
    estimates to corrected ``[mean / lambda, propagated_error]``.
    """

    def __init__(self, min_abs_lambda: float = 1e-12):
        self.min_abs_lambda = min_abs_lambda

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValueError("calibration needs at least one shot")
        if not np.all(np.isin(values, (-1.0, 1.0))):
            raise ValueError("calibration samples must be +/-1 parities")
        mean = float(values.mean())
        return self.fit_mean(mean, binomial_standard_error(mean, values.size))

    def fit_mean(self, mean: float, standard_error: float = 0.0):
        if abs(mean) > 1 + 1e-12:
            raise ValueError("|lambda| cannot exceed 1")
        self.lambda_ = float(mean)
        self.lambda_se_ = float(standard_error)
        self.usable_ = abs(self.lambda_) > self.min_abs_lambda
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "lambda_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValueError("expected rows of [mean, standard_error]")
        if not self.usable_:
            raise ZeroDivisionError("lambda is zero; the estimate cannot be corrected")
        lam, lam_se = self.lambda_, self.lambda_se_
        mean, se = X[:, 0], X[:, 1]
        corrected = mean / lam
        err = np.sqrt((se / lam) ** 2 + (mean * lam_se / lam**2) ** 2)
        return np.column_stack([corrected, err])
