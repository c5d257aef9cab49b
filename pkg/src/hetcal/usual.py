"""Closed-form ML estimation for the classical calibration model.

The classical model treats the standard concentrations as error-free.  All
estimators are closed-form, so this module doubles as the reduction oracle
for the heteroscedastic estimator: when every ``delta_var`` entry is zero the
two models coincide.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

from .data import FirstStageData, FitResult, SecondStageData, Theta, slope_threshold, validate
from .errors import InvalidLevel, SlopeNearZero

EXPANSION_FACTOR = 1.96  # conventional coverage factor for expanded uncertainty


def confidence_interval(x0_hat: float, var_x0: float, level: float = 0.95):
    """Symmetric normal-theory interval for the unknown concentration."""
    if not 0.0 < level < 1.0:
        raise InvalidLevel(f"confidence level must be in (0, 1), got {level}")
    if var_x0 < 0:
        raise ValueError(f"var_x0 must be nonnegative, got {var_x0}")
    z = float(norm.ppf(1.0 - (1.0 - level) / 2.0))
    half = z * math.sqrt(var_x0)
    return float(x0_hat - half), float(x0_hat + half)


def variance_usual(theta: Theta, first: FirstStageData, k: int) -> float:
    """Large-sample variance of the estimated concentration under the
    classical model, evaluated at ``theta``.

    Exposed separately so the simulator can evaluate it at the true
    parameter values as well as at the estimates.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if abs(theta.beta) < slope_threshold(first):
        raise SlopeNearZero(f"slope {theta.beta} is numerically zero")
    x = first.x_fixed
    n = x.size
    xbar = x.mean()
    sxx = np.mean((x - xbar) ** 2)
    return float(
        theta.sigma_eps2
        / theta.beta**2
        * (1.0 / k + 1.0 / n + (xbar - theta.x0) ** 2 / (n * sxx))
    )


def fit_usual(first: FirstStageData, second: SecondStageData, level: float = 0.95) -> FitResult:
    """Maximum-likelihood fit of the classical calibration model.

    Everything is closed form: slope and intercept from the first-stage
    normal equations, the unknown concentration by inverting the fitted line
    at the mean sample response, and the error variance as the pooled ML
    estimate (divisor n + k).
    """
    validate(first, second)
    x, y, y0 = first.x_fixed, first.y, second.y0
    n, k = x.size, y0.size
    xbar, ybar, y0bar = x.mean(), y.mean(), y0.mean()

    sxx = np.mean((x - xbar) ** 2)
    sxy = np.mean((x - xbar) * (y - ybar))
    beta = float(sxy / sxx)
    if abs(beta) < slope_threshold(first):
        raise SlopeNearZero(
            f"fitted slope {beta} is numerically zero; the unknown "
            "concentration is undefined"
        )
    alpha = float(ybar - beta * xbar)
    x0 = float((y0bar - alpha) / beta)

    ssr = float(np.sum((y - alpha - beta * x) ** 2))
    ss0 = float(np.sum((y0 - y0bar) ** 2))
    sigma_eps2 = (ssr + ss0) / (n + k)

    theta = Theta(alpha=alpha, beta=beta, x0=x0, sigma_eps2=sigma_eps2)
    var_x0 = variance_usual(theta, first, k)
    lo, hi = confidence_interval(x0, var_x0, level)

    if sigma_eps2 > 0:
        loglik = -0.5 * (n + k) * (math.log(sigma_eps2) + 1.0)
    else:
        loglik = math.inf  # degenerate noiseless fit
    return FitResult(
        theta_hat=theta,
        var_x0=var_x0,
        ci_lower=lo,
        ci_upper=hi,
        expanded_uncertainty=EXPANSION_FACTOR * math.sqrt(var_x0),
        log_likelihood=loglik,
        converged=True,
        iterations=0,
        score_residual_norm=0.0,
    )
