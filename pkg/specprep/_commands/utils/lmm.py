"""Two-group inference: pooled t-test by least squares and a random-intercept mixed model.

The mixed model is y = mu + beta * group + b[batch] + e with b ~ N(0, sigma_b^2) and
e ~ N(0, sigma_e^2). For a fixed ratio lam = sigma_b^2 / sigma_e^2 the covariance of batch k is
sigma_e^2 (I + lam 1 1'), whose inverse is (I - w_k 1 1') / sigma_e^2 with
w_k = lam / (1 + lam m_k). Every quantity the likelihood needs is therefore a sum over
batches of per-batch totals, so evaluating the profiled likelihood costs O(K) for K batches
and can be vectorized over many values of lam at once.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import optimize, stats

from specprep.exceptions import FitError

METHODS = ("ml", "reml")
REFERENCES = ("containment", "normal")

LAMBDA_MAX = 1e6
TOLERANCE = 1e-8
MAX_ITER = 200
GRID_POINTS = 64


@dataclass(frozen=True, eq=False)
class LmmData:
    """Response, 0/1 group indicator (1 = case) and batch index per sample."""

    y: np.ndarray
    group: np.ndarray
    batch: Optional[np.ndarray] = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        group = np.asarray(self.group)
        if y.ndim != 1 or group.shape != y.shape:
            raise FitError("y and group must be vectors of equal length.")
        if not np.isin(group, (0, 1)).all():
            raise FitError("group must be a 0/1 indicator (0 = control, 1 = case).")
        if not np.isfinite(y).all():
            raise FitError("y contains non-finite values.")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "group", group.astype(float))
        if self.batch is not None:
            batch = np.asarray(self.batch)
            if batch.shape != y.shape:
                raise FitError("batch must give one plate index per sample.")
            object.__setattr__(self, "batch", batch)

    @property
    def n(self) -> int:
        return int(self.y.size)

    def group_sizes(self) -> Tuple[int, int]:
        cases = int(self.group.sum())
        return self.n - cases, cases


@dataclass(frozen=True)
class LmmFit:
    mu_hat: float
    beta_hat: float
    sigma_b: float
    sigma_e: float
    se_beta: float
    statistic: float
    p_value: float
    method: str
    converged: bool
    log_likelihood: float
    df: float
    lambda_hat: float = 0.0
    n_iter: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check_groups(data: LmmData, minimum: int) -> Tuple[int, int]:
    if data.n < minimum:
        raise FitError(f"At least {minimum} observations are needed, got {data.n}.")
    n_controls, n_cases = data.group_sizes()
    if not n_controls or not n_cases:
        raise FitError("Both groups must be present to estimate the group effect.")
    return n_controls, n_cases


#################
# Least squares #
#################


def fit_ols(data: LmmData) -> LmmFit:
    """Difference of group means with a pooled-variance t-test (n - 2 df), two-sided."""
    n_controls, n_cases = _check_groups(data, 3)
    y, group = data.y, data.group == 1
    mean_controls, mean_cases = y[~group].mean(), y[group].mean()
    residuals = np.where(group, y - mean_cases, y - mean_controls)
    rss = float(residuals @ residuals)
    df = data.n - 2
    pooled = rss / df
    if not pooled > 0:
        raise FitError("The pooled variance is zero; the t statistic is undefined.")
    beta = float(mean_cases - mean_controls)
    se = float(np.sqrt(pooled * (1 / n_controls + 1 / n_cases)))
    statistic = beta / se
    sigma2_ml = rss / data.n
    return LmmFit(
        mu_hat=float(mean_controls),
        beta_hat=beta,
        sigma_b=0.0,
        sigma_e=float(np.sqrt(pooled)),
        se_beta=se,
        statistic=statistic,
        p_value=float(min(1.0, 2 * stats.t.sf(abs(statistic), df))),
        method="ols",
        converged=True,
        log_likelihood=float(-0.5 * data.n * (np.log(2 * np.pi * sigma2_ml) + 1)),
        df=float(df),
    )


##########################
# Random-intercept model #
##########################


class _BatchTotals:
    """Per-batch sufficient statistics for the design X = [1, group]."""

    def __init__(self, y: np.ndarray, group: np.ndarray, batch: np.ndarray):
        _, index = np.unique(batch, return_inverse=True)
        self.n = y.size
        self.sizes = np.bincount(index).astype(float)
        # Column sums of X within each batch, shape (K, 2).
        self.x_sums = np.column_stack([self.sizes, np.bincount(index, weights=group)])
        self.y_sums = np.bincount(index, weights=y)
        design = np.column_stack([np.ones_like(y), group])
        self.xtx = design.T @ design
        self.xty = design.T @ y
        self.yty = float(y @ y)

    @property
    def n_batches(self) -> int:
        return int(self.sizes.size)

    def solve(self, lam: np.ndarray):
        """GLS pieces at each ratio in `lam`: X'HX, fixed effects, and y'Hy - b'X'Hy."""
        weight = lam[:, None] / (1 + lam[:, None] * self.sizes[None, :])
        xthx = self.xtx[None] - np.einsum("lk,ki,kj->lij", weight, self.x_sums, self.x_sums)
        xthy = self.xty[None] - np.einsum("lk,ki,k->li", weight, self.x_sums, self.y_sums)
        ythy = self.yty - weight @ (self.y_sums**2)
        coef = np.linalg.solve(xthx, xthy[..., None])[..., 0]
        residual = ythy - np.einsum("li,li->l", coef, xthy)
        logdet_batches = np.log1p(lam[:, None] * self.sizes[None, :]).sum(axis=1)
        return xthx, coef, np.maximum(residual, 0.0), logdet_batches


def _profiled(totals: _BatchTotals, lam: np.ndarray, method: str) -> np.ndarray:
    """Profiled (restricted) log-likelihood at each ratio in `lam`."""
    xthx, _, residual, logdet_batches = totals.solve(lam)
    n = totals.n
    if method == "reml":
        dof = n - 2
        _, logdet_info = np.linalg.slogdet(xthx)
        sigma2 = residual / dof
        return -0.5 * (dof * np.log(2 * np.pi * sigma2) + logdet_batches + logdet_info + dof)
    sigma2 = residual / n
    return -0.5 * (n * np.log(2 * np.pi * sigma2) + logdet_batches + n)


def _to_ratio(theta):
    return np.expm1(theta)


def _maximize(totals: _BatchTotals, method: str) -> Tuple[float, bool, int]:
    """Maximize the profiled likelihood over theta = log(1 + lam) in [0, log(1 + LAMBDA_MAX)].

    A grid pass brackets the global maximum, bounded Brent refines it, and the boundaries
    are compared last so that lam = 0 is reported when it is the best value.
    """
    upper = np.log1p(LAMBDA_MAX)
    grid = np.linspace(0.0, upper, GRID_POINTS)
    values = _profiled(totals, _to_ratio(grid), method)
    best = int(np.argmax(values))
    low, high = grid[max(best - 1, 0)], grid[min(best + 1, GRID_POINTS - 1)]

    def objective(theta: float) -> float:
        return -float(_profiled(totals, _to_ratio(np.array([theta])), method)[0])

    result = optimize.minimize_scalar(
        objective,
        bounds=(low, high),
        method="bounded",
        options={"xatol": TOLERANCE, "maxiter": MAX_ITER},
    )
    candidates = [(float(-result.fun), float(result.x)), (float(values[best]), float(grid[best]))]
    candidates += [(float(values[0]), 0.0), (float(values[-1]), float(upper))]
    # Ties resolve towards the smaller ratio (the boundary sigma_b = 0 first).
    _, theta = max(candidates, key=lambda item: (item[0], -item[1]))
    return theta, bool(result.success), int(result.nfev)


def _reference_df(data: LmmData, totals: _BatchTotals) -> float:
    """Containment degrees of freedom for the group effect."""
    cases = totals.x_sums[:, 1]
    between_batches = bool(np.all((cases == 0) | (cases == totals.sizes)))
    if between_batches:
        return float(totals.n_batches - 2)
    return float(data.n - totals.n_batches - 1)


def fit_lmm(data: LmmData, method: str = "reml", reference: str = "containment") -> LmmFit:
    """Random-intercept fit by profiled ML or REML with a Wald test on the group effect.

    `reference="containment"` refers the Wald ratio to a t distribution with
    between-batch df (K - 2) when group is constant within every batch and within-batch df
    (n - K - 1) otherwise; `reference="normal"` uses the standard normal.
    """
    if method not in METHODS:
        raise FitError(f"method must be one of {list(METHODS)}, got {method!r}.")
    if reference not in REFERENCES:
        raise FitError(f"reference must be one of {list(REFERENCES)}, got {reference!r}.")
    if data.batch is None:
        raise FitError("A mixed-model fit needs a batch index per sample.")
    _check_groups(data, 4)

    # Fit on the standardized response; location and scale are restored afterwards.
    center, scale = float(data.y.mean()), float(data.y.std())
    if not scale > 0:
        raise FitError("The response is constant; no variance components can be estimated.")
    totals = _BatchTotals((data.y - center) / scale, data.group, data.batch)
    if np.linalg.matrix_rank(totals.xtx) < 2:
        raise FitError("The group effect is not estimable from this design.")

    if totals.sizes.max() == 1 or totals.n_batches == 1:
        # Batch variance is not identifiable apart from the residual or the intercept.
        theta, converged, n_iter = 0.0, True, 0
    else:
        theta, converged, n_iter = _maximize(totals, method)
    lam = _to_ratio(np.array([theta]))
    xthx, coef, residual, _ = totals.solve(lam)
    dof = data.n - 2 if method == "reml" else data.n
    sigma2 = float(residual[0]) / dof
    if not sigma2 > 0:
        raise FitError("The residual variance is zero; the fit is degenerate.")
    covariance = sigma2 * np.linalg.inv(xthx[0])
    log_likelihood = float(_profiled(totals, lam, method)[0]) - data.n * np.log(scale)
    if method == "reml":
        log_likelihood += 2 * np.log(scale)

    beta = float(coef[0, 1]) * scale
    se = float(np.sqrt(covariance[1, 1])) * scale
    statistic = beta / se
    df = _reference_df(data, totals)
    if reference == "normal" or df <= 0:
        df = float("inf")
        p_value = 2 * stats.norm.sf(abs(statistic))
    else:
        p_value = 2 * stats.t.sf(abs(statistic), df)
    return LmmFit(
        mu_hat=float(coef[0, 0]) * scale + center,
        beta_hat=beta,
        sigma_b=float(np.sqrt(lam[0] * sigma2)) * scale,
        sigma_e=float(np.sqrt(sigma2)) * scale,
        se_beta=se,
        statistic=float(statistic),
        p_value=float(min(1.0, p_value)),
        method=method,
        converged=converged,
        log_likelihood=log_likelihood,
        df=df,
        lambda_hat=float(lam[0]),
        n_iter=n_iter,
    )


def profiled_log_likelihood(data: LmmData, lam, method: str = "reml") -> np.ndarray:
    """Profiled objective of the standardized response at the given variance ratios."""
    if data.batch is None:
        raise FitError("A mixed-model fit needs a batch index per sample.")
    scale = float(data.y.std()) or 1.0
    totals = _BatchTotals((data.y - data.y.mean()) / scale, data.group, data.batch)
    return _profiled(totals, np.atleast_1d(np.asarray(lam, dtype=float)), method)


def wald_test(fit: LmmFit, alpha: float) -> bool:
    """Reject when the p-value is strictly below alpha."""
    return bool(fit.p_value < alpha)
