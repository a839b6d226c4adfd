"""
Ordinary least squares with classical inference, nested-model F-tests and the
F and t distribution tail functions behind the p-values.

Coefficients are solved from a Householder QR factorisation of the design
(X = QR, R b = Q'y); the normal equations are never formed. Distribution
functions use the regularized incomplete beta function evaluated by continued
fractions (modified Lentz), switching to the complementary form above the
mean so that both tails are computed directly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_triangular

from timeseries import DesignMatrix
from utils import InsufficientDataError, ModelSpecificationError, RankDeficiencyError, StatisticalError

logger = logging.getLogger(__name__)

# A column is dependent when its norm after orthogonalisation against the
# preceding columns falls below this fraction of its original norm
RANK_TOLERANCE = 1e-10

BETACF_MAX_ITERATIONS = 200
BETACF_EPS = 1e-14
_FPMIN = 1e-300


# =============================================================================
# Special functions
# =============================================================================

def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d

    for m in range(1, BETACF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        # Even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        # Odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETACF_EPS:
            return h

    raise StatisticalError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def incomplete_beta_pair(x: float, y: float, a: float, b: float) -> Tuple[float, float]:
    """
    Regularized incomplete beta I_x(a, b) and its complement 1 - I_x(a, b).

    Args:
        x: Point in [0, 1]
        y: 1 - x, passed separately so callers can supply it without cancellation
        a, b: Shape parameters, both positive

    Returns:
        (lower, upper) with lower + upper == 1 up to rounding
    """
    if x <= 0.0:
        return 0.0, 1.0
    if y <= 0.0:
        return 1.0, 0.0

    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)

    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _beta_continued_fraction(a, b, x) / a
        return lower, 1.0 - lower
    upper = front * _beta_continued_fraction(b, a, y) / b
    return 1.0 - upper, upper


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return incomplete_beta_pair(x, 1.0 - x, a, b)[0]


def _f_tails(x: float, d1: float, d2: float) -> Tuple[float, float]:
    if d1 <= 0 or d2 <= 0:
        raise ValueError(f"degrees of freedom must be positive, got ({d1}, {d2})")
    if math.isnan(x):
        return math.nan, math.nan
    if x < 0:
        raise ValueError(f"F statistic must be non-negative, got {x}")
    if math.isinf(x):
        return 1.0, 0.0
    scaled = d1 * x
    total = scaled + d2
    return incomplete_beta_pair(scaled / total, d2 / total, d1 / 2.0, d2 / 2.0)


def f_cdf(x: float, d1: float, d2: float) -> float:
    """
    CDF of the F distribution with (d1, d2) degrees of freedom.

    Computed as I_{d1 x / (d1 x + d2)}(d1/2, d2/2).

    Raises:
        ValueError: x negative or non-positive degrees of freedom
    """
    return _f_tails(x, d1, d2)[0]


def f_sf(x: float, d1: float, d2: float) -> float:
    """Upper tail 1 - f_cdf(x, d1, d2), computed without cancellation."""
    return _f_tails(x, d1, d2)[1]


def t_sf_two_sided(t: float, dof: float) -> float:
    """
    Two-sided tail probability P(|T| > |t|) of Student's t with dof degrees of freedom.

    Uses P(|T| > t) = 1 - F_cdf(t^2; 1, dof).
    """
    if math.isnan(t):
        return math.nan
    return f_sf(t * t, 1, dof)


def significance_code(p: float) -> str:
    """
    Significance stars: p < 0.01 "***", p < 0.05 "**", p < 0.1 "*", otherwise "".
    """
    if p < 0.01:
        return '***'
    elif p < 0.05:
        return '**'
    elif p < 0.1:
        return '*'
    return ''


# =============================================================================
# Least squares
# =============================================================================

@dataclass(frozen=True, eq=False)
class OlsFit:
    """Fitted linear model with classical (homoskedastic) inference."""

    names: Tuple[str, ...]
    coefficients: pd.Series
    coefficient_se: pd.Series
    t_stats: pd.Series
    p_values: pd.Series
    residuals: np.ndarray
    response: np.ndarray
    dates: pd.DatetimeIndex
    rss: float
    dof: int
    rse: float

    @property
    def n_obs(self) -> int:
        return len(self.response)

    @property
    def r_squared(self) -> float:
        centered = self.response - self.response.mean()
        tss = float(np.dot(centered, centered))
        return 1.0 - self.rss / tss if tss > 0 else math.nan

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        return np.asarray(matrix, dtype=float) @ self.coefficients.to_numpy()


@dataclass(frozen=True)
class FTestResult:
    """Nested-model F-test."""

    f_stat: float
    df_num: int
    df_den: int
    p_value: float


def _factorize(matrix: np.ndarray, names: Tuple[str, ...]) -> Tuple[np.ndarray, np.ndarray]:
    n, p = matrix.shape
    if n <= p:
        raise InsufficientDataError(f"{n} observations cannot estimate {p} coefficients")

    q, r = np.linalg.qr(matrix, mode='reduced')
    norms = np.linalg.norm(matrix, axis=0)
    diagonal = np.abs(np.diag(r))
    for j in range(p):
        if diagonal[j] <= RANK_TOLERANCE * norms[j]:
            raise RankDeficiencyError(f"regressor {names[j]} is linearly dependent on the preceding regressors")
    return q, r


def least_squares(matrix: np.ndarray, response: np.ndarray, names: Tuple[str, ...]) -> np.ndarray:
    """
    Least-squares coefficients of response on the columns of matrix.

    Raises:
        InsufficientDataError: No more rows than columns
        RankDeficiencyError: Dependent columns
    """
    q, r = _factorize(matrix, names)
    return solve_triangular(r, q.T @ response, lower=False)


def ols_fit(design: DesignMatrix) -> OlsFit:
    """
    Fit response on the design's regressors.

    Standard errors use the unbiased variance rss / dof with the covariance
    sigma^2 (R'R)^-1 taken from the triangular factor; p-values are two-sided
    from the t distribution with dof degrees of freedom.

    Raises:
        InsufficientDataError: T <= p
        RankDeficiencyError: Dependent design columns
    """
    matrix = np.asarray(design.matrix, dtype=float)
    response = np.asarray(design.response, dtype=float)
    names = tuple(design.names)
    n, p = matrix.shape

    q, r = _factorize(matrix, names)
    coefficients = solve_triangular(r, q.T @ response, lower=False)
    residuals = response - matrix @ coefficients
    rss = float(np.dot(residuals, residuals))
    dof = n - p
    sigma2 = rss / dof

    r_inverse = solve_triangular(r, np.eye(p), lower=False)
    variances = sigma2 * np.sum(r_inverse * r_inverse, axis=1)
    se = np.sqrt(variances)
    with np.errstate(divide='ignore', invalid='ignore'):
        t_stats = coefficients / se
    p_values = np.array([t_sf_two_sided(float(t), dof) for t in t_stats])

    logger.debug(f"OLS {design.response_name} on {', '.join(names)}: n={n}, rss={rss:.6g}")

    index = pd.Index(names)
    return OlsFit(
        names=names,
        coefficients=pd.Series(coefficients, index=index),
        coefficient_se=pd.Series(se, index=index),
        t_stats=pd.Series(t_stats, index=index),
        p_values=pd.Series(p_values, index=index),
        residuals=residuals,
        response=response,
        dates=design.dates,
        rss=rss,
        dof=dof,
        rse=math.sqrt(sigma2),
    )


def nested_f_test(restricted: OlsFit, full: OlsFit) -> FTestResult:
    """
    F-test of the full model against a restricted model nested in it.

    f = ((rss_restricted - rss_full) / q) / (rss_full / dof_full), with
    q = p_full - p_restricted, referred to F(q, dof_full).

    Raises:
        ModelSpecificationError: The restricted regressors are not a strict
            subset of the full regressors, or the fits use different samples
    """
    if restricted.n_obs != full.n_obs or not np.array_equal(restricted.response, full.response):
        raise ModelSpecificationError("nested models must be fitted on the same response rows")
    if not set(restricted.names) < set(full.names):
        raise ModelSpecificationError(
            f"regressors {list(restricted.names)} are not a strict subset of {list(full.names)}"
        )

    q = len(full.names) - len(restricted.names)
    reduction = max(restricted.rss - full.rss, 0.0)
    if full.rss > 0:
        f_stat = (reduction / q) / (full.rss / full.dof)
    else:
        f_stat = math.inf if reduction > 0 else 0.0

    return FTestResult(f_stat=f_stat, df_num=q, df_den=full.dof, p_value=f_sf(f_stat, q, full.dof))
