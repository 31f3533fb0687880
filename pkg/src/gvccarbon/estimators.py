"""Panel regression estimators: pooled OLS, FGLS with AR(1) errors,
fixed time effects, Wald tests, and the dynamic-panel IV estimator.

Observations are stacked unit-major (all periods of unit 0, then unit 1,
and so on), which keeps each unit's AR(1) covariance block contiguous.
Variables carrying unavailable head periods (lags, first differences)
cause those periods to be dropped listwise for every unit, so the
estimation sample stays rectangular.

The feasible GLS step models innovations as AR(1) within units, optionally
with a separate innovation variance per unit. The error covariance is
block diagonal per unit; it is never inverted explicitly. Instead each
unit's rows are rotated by the stationarity-preserving transform

    u*_1 = sqrt(1 - rho^2) u_1,    u*_t = u_t - rho u_{t-1}

and scaled by the unit innovation standard deviation, after which pooled
least squares on the rotated data is exact GLS.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy import stats

from .errors import (
    InsufficientPeriods,
    NonStationaryRho,
    RankDeficient,
    SchemaError,
    SingularSubCovariance,
    UnknownVariable,
    WeakInstrument,
)
from .panel import PanelDataset

COVARIANCE_SCHEMES = ("iid", "panel-heteroscedastic", "ar1",
                      "ar1+panel-heteroscedastic")

CONDITION_LIMIT = 1e10
INTERCEPT_NAME = "const"
TIME_DUMMY_PREFIX = "t_"


@dataclass(frozen=True)
class RegressionSpec:
    """What to regress on what, and under which error model."""

    dependent: str
    regressors: tuple
    intercept: bool = True
    time_effects: bool = False
    covariance: str = "iid"

    def __post_init__(self):
        regressors = tuple(self.regressors)
        if not regressors:
            raise SchemaError("spec needs at least one regressor")
        if len(set(regressors)) != len(regressors):
            raise SchemaError("regressors must be distinct")
        if self.dependent in regressors:
            raise SchemaError("dependent variable cannot be a regressor")
        if self.covariance not in COVARIANCE_SCHEMES:
            raise SchemaError(f"unknown covariance scheme {self.covariance!r}")
        object.__setattr__(self, "regressors", regressors)


@dataclass(frozen=True)
class RegressionResult:
    """Coefficients, covariance, residual panel, and fit metadata."""

    names: tuple
    beta: np.ndarray
    cov_beta: np.ndarray
    residuals: np.ndarray  # (N, T) grid, NaN at dropped periods
    p_values: np.ndarray
    n: int
    p: int
    rho_hat: float = None
    rho_by_unit: np.ndarray = None  # only under the per-unit rho option
    sigma_hat: np.ndarray = None  # per-unit innovation variances
    wald_stat: float = None
    wald_dof: int = None
    r_squared: float = None
    first_stage_f: dict = field(default_factory=dict)
    units: tuple = ()
    periods: tuple = ()

    def __post_init__(self):
        if self.n <= self.p:
            raise RankDeficient(self.names, f"n={self.n} must exceed p={self.p}")
        cov = self.cov_beta
        if np.abs(cov - cov.T).max() > 1e-10:
            raise SingularSubCovariance("coefficient covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise SingularSubCovariance("coefficient covariance is not PSD")
        if self.rho_hat is not None and abs(self.rho_hat) >= 1:
            raise NonStationaryRho(f"|rho| = {abs(self.rho_hat):.4f} >= 1")

    def coefficient(self, name) -> float:
        return float(self.beta[self.names.index(name)])

    def std_error(self, name) -> float:
        i = self.names.index(name)
        return float(np.sqrt(self.cov_beta[i, i]))

    def p_value(self, name) -> float:
        return float(self.p_values[self.names.index(name)])


# ---------------------------------------------------------------------------
# Design matrices
# ---------------------------------------------------------------------------

def _kept_periods(panel: PanelDataset, names):
    head = panel.head_missing([n for n in names if n in panel.variables])
    if panel.n_periods - head < 1:
        raise InsufficientPeriods("no periods left after dropping head cells")
    return head, panel.periods[head:]


def _time_dummy_column(name, periods, n_units):
    period = int(name[len(TIME_DUMMY_PREFIX):])
    if period not in periods:
        raise UnknownVariable(f"time dummy {name!r} refers to a dropped period")
    col = np.zeros((n_units, len(periods)))
    col[:, periods.index(period)] = 1.0
    return col


def build_design(panel: PanelDataset, spec: RegressionSpec):
    """Stack the dependent vector and named design matrix unit-major.

    Returns (y, X, names, periods_used). Time-dummy regressors named
    ``t_<period>`` are materialized on the fly; the panel itself is not
    modified.
    """
    involved = (spec.dependent,) + tuple(
        r for r in spec.regressors if not r.startswith(TIME_DUMMY_PREFIX)
    )
    head, periods = _kept_periods(panel, involved)
    n_units = panel.n_units

    def flat(grid):
        return grid[:, head:].reshape(-1)

    y = flat(panel.grid(spec.dependent))
    names, cols = [], []
    if spec.intercept:
        names.append(INTERCEPT_NAME)
        cols.append(np.ones_like(y))
    for name in spec.regressors:
        if name.startswith(TIME_DUMMY_PREFIX) and name not in panel.variables:
            grid = _time_dummy_column(name, periods, n_units)
        else:
            grid = panel.grid(name)[:, head:]
        names.append(name)
        cols.append(grid.reshape(-1))
    X = np.column_stack(cols)
    if np.isnan(X).any() or np.isnan(y).any():
        raise SchemaError("design matrix contains missing cells")
    return y, X, tuple(names), periods


def _check_rank(X, names):
    """Reject ill-conditioned designs, naming the latest collinear column."""
    if X.shape[0] < X.shape[1]:
        raise RankDeficient(names, "fewer observations than columns")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        dead = [names[j] for j in np.flatnonzero(norms == 0)]
        raise RankDeficient(dead, f"all-zero column(s): {', '.join(dead)}")
    r = np.linalg.qr(X, mode="r")
    ratio = np.abs(np.diag(r)) / norms
    flagged = [names[j] for j in np.flatnonzero(ratio < 1e-12)]
    if flagged:
        raise RankDeficient(flagged)
    if np.linalg.cond(X) >= CONDITION_LIMIT:
        worst = names[int(np.argmin(ratio))]
        raise RankDeficient([worst],
                            f"condition number exceeds {CONDITION_LIMIT:.0e}; "
                            f"most collinear column: {worst}")


def _residual_grid(panel, periods_used, resid_flat):
    grid = np.full((panel.n_units, panel.n_periods), np.nan)
    start = panel.n_periods - len(periods_used)
    grid[:, start:] = resid_flat.reshape(panel.n_units, len(periods_used))
    return grid


def _solve_cov(xtx):
    """Inverse of a symmetric PD normal matrix, symmetrized."""
    try:
        chol = scipy.linalg.cho_factor(xtx)
        inv = scipy.linalg.cho_solve(chol, np.eye(xtx.shape[0]))
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficient([], f"normal matrix not positive definite: {exc}") from exc
    return (inv + inv.T) / 2.0


def _finalize(panel, names, beta, cov, resid_flat, periods_used,
              n, p, rho=None, rho_units=None, sigma=None, r2=None,
              first_stage=None):
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / np.where(se > 0, se, 1.0),
                     np.where(beta == 0, 0.0, np.inf))
    p_values = 2.0 * stats.norm.sf(np.abs(z))
    result = RegressionResult(
        names=tuple(names), beta=beta, cov_beta=cov,
        residuals=_residual_grid(panel, periods_used, resid_flat),
        p_values=p_values, n=n, p=p, rho_hat=rho, rho_by_unit=rho_units,
        sigma_hat=sigma, r_squared=r2, first_stage_f=dict(first_stage or {}),
        units=panel.units, periods=tuple(periods_used),
    )
    slopes = [nm for nm in names if nm != INTERCEPT_NAME]
    if slopes:
        w, dof, _ = wald_joint(result, slopes)
        result = replace(result, wald_stat=w, wald_dof=dof)
    return result


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------

def ols(panel: PanelDataset, spec: RegressionSpec) -> RegressionResult:
    """Pooled least squares; the first stage feeding the FGLS covariance."""
    y, X, names, periods_used = build_design(panel, spec)
    _check_rank(X, names)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    n, p = X.shape
    sigma2 = float(resid @ resid) / (n - p)
    cov = sigma2 * _solve_cov(X.T @ X)
    tss = float(((y - y.mean()) ** 2).sum()) if spec.intercept else float(y @ y)
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else None
    return _finalize(panel, names, beta, cov, resid, periods_used, n, p, r2=r2)


# ---------------------------------------------------------------------------
# Feasible GLS with AR(1) innovations
# ---------------------------------------------------------------------------

def _rho_from(lagged, current, label=""):
    denom = float((lagged * lagged).sum())
    if denom <= 0:
        return 0.0
    rho = float((current * lagged).sum()) / denom
    if abs(rho) >= 1.0:
        raise NonStationaryRho(
            f"estimated rho {rho:.4f} is not stationary{label}")
    return rho


def _pooled_rho(resid_grid):
    return _rho_from(resid_grid[:, :-1], resid_grid[:, 1:])


def _unit_rhos(resid_grid, units):
    return np.array([
        _rho_from(resid_grid[i, :-1], resid_grid[i, 1:],
                  label=f" for unit {units[i]}")
        for i in range(resid_grid.shape[0])
    ])


def _ar1_rotate(grid, rho):
    """Rows become AR(1) innovations: first row scaled, rest quasi-differenced.

    ``rho`` may be a scalar (pooled) or a per-unit vector.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 1:
        rho = rho[:, np.newaxis]
    out = np.empty_like(grid)
    out[:, :1] = np.sqrt(1.0 - rho * rho) * grid[:, :1]
    out[:, 1:] = grid[:, 1:] - rho * grid[:, :-1]
    return out


def fgls_ar1(panel: PanelDataset, spec: RegressionSpec,
             per_unit_rho: bool = False) -> RegressionResult:
    """Two-step feasible GLS.

    Step one runs pooled OLS. Step two estimates a single AR(1)
    coefficient from the pooled residuals (when the scheme includes
    ``ar1``) and per-unit innovation variances from rotated residuals
    (when it includes ``panel-heteroscedastic``), assembles the implied
    block-diagonal error covariance, and reruns weighted least squares.
    The reported coefficient covariance follows the estimated-sigma
    convention: GLS-weighted residual variance on n - p degrees of
    freedom times the inverse weighted normal matrix.

    ``per_unit_rho`` switches to one AR(1) coefficient per unit; the
    default fits a single innovation model for the whole panel.
    """
    first = ols(panel, spec)
    y, X, names, periods_used = build_design(panel, spec)
    n_units = panel.n_units
    t_used = len(periods_used)
    if "ar1" in spec.covariance and t_used < 3:
        raise InsufficientPeriods("AR(1) step needs at least 3 periods")

    resid = (y - X @ first.beta).reshape(n_units, t_used)
    if "ar1" not in spec.covariance:
        rho = 0.0
    elif per_unit_rho:
        rho = _unit_rhos(resid, panel.units)
    else:
        rho = _pooled_rho(resid)
    innov = _ar1_rotate(resid, rho)
    if "panel-heteroscedastic" in spec.covariance:
        sigma2 = (innov ** 2).mean(axis=1)
    else:
        sigma2 = np.full(n_units, (innov ** 2).mean())
    # Perfect-fit guard: zero variances would give infinite weights.
    top = sigma2.max()
    if top <= 0.0:
        sigma2 = np.ones(n_units)
    else:
        sigma2 = np.maximum(sigma2, 1e-12 * top)

    scale = np.sqrt(sigma2)[:, np.newaxis]
    y_rot = (_ar1_rotate(y.reshape(n_units, t_used), rho) / scale).reshape(-1)
    x_rot = np.empty_like(X)
    for j in range(X.shape[1]):
        col = X[:, j].reshape(n_units, t_used)
        x_rot[:, j] = (_ar1_rotate(col, rho) / scale).reshape(-1)

    _check_rank(x_rot, names)
    beta, *_ = np.linalg.lstsq(x_rot, y_rot, rcond=None)
    n, p = X.shape
    gls_resid = y_rot - x_rot @ beta
    sigma2_fgls = float(gls_resid @ gls_resid) / (n - p)
    cov = sigma2_fgls * _solve_cov(x_rot.T @ x_rot)
    resid_flat = y - X @ beta

    rho_by_unit = None
    if "ar1" not in spec.covariance:
        rho_out = None
    elif per_unit_rho:
        rho_by_unit = np.asarray(rho)
        rho_out = float(rho_by_unit.mean())
    else:
        rho_out = rho
    sigma_out = sigma2 if spec.covariance != "iid" else None
    return _finalize(panel, names, beta, cov, resid_flat, periods_used,
                     n, p, rho=rho_out, rho_units=rho_by_unit,
                     sigma=sigma_out, r2=first.r_squared)


# ---------------------------------------------------------------------------
# Wald tests and time effects
# ---------------------------------------------------------------------------

def wald_joint(result: RegressionResult, subset):
    """Joint chi-square test that every coefficient in ``subset`` is zero."""
    subset = tuple(subset)
    if not subset:
        raise SchemaError("wald subset must be non-empty")
    try:
        idx = [result.names.index(name) for name in subset]
    except ValueError as exc:
        raise UnknownVariable(str(exc)) from None
    b = result.beta[idx]
    sub = result.cov_beta[np.ix_(idx, idx)]
    try:
        chol = scipy.linalg.cho_factor(sub)
        solved = scipy.linalg.cho_solve(chol, b)
    except scipy.linalg.LinAlgError as exc:
        raise SingularSubCovariance(
            f"sub-covariance for {subset} is singular"
        ) from exc
    w = float(b @ solved)
    dof = len(subset)
    return w, dof, float(stats.chi2.sf(w, dof))


def time_dummy_name(period) -> str:
    return f"{TIME_DUMMY_PREFIX}{int(period)}"


def with_time_effects(spec: RegressionSpec, periods) -> RegressionSpec:
    """Append one period indicator per period except the first (the base)."""
    periods = tuple(periods)
    if len(periods) < 2:
        raise InsufficientPeriods("time effects need at least two periods")
    dummies = tuple(time_dummy_name(p) for p in periods[1:])
    return replace(spec, time_effects=True,
                   regressors=spec.regressors + dummies)


# ---------------------------------------------------------------------------
# Dynamic panel IV (first differences, deeper-lag instruments)
# ---------------------------------------------------------------------------

LAGGED_DIFFERENCE = "lagged-difference"
LAGGED_LEVEL = "lagged-level"


def anderson_hsiao(panel: PanelDataset, dependent: str, regressors,
                   instrumented: str = None,
                   instrument: str = LAGGED_DIFFERENCE) -> RegressionResult:
    """First-differenced dynamic panel estimated by two-stage least squares.

    The equation is d(y)_t = alpha d(y)_{t-1} + d(x)_t' gamma + d(eps)_t.
    The lagged differenced dependent variable is endogenous by
    construction and is instrumented with its own deeper lag: the second
    difference lag d(y)_{t-2} by default, or the level y_{t-2} under the
    ``lagged-level`` variant. When ``instrumented`` names a regressor,
    its difference is treated as endogenous too and instrumented with the
    matching deeper lag of itself.

    Emits a :class:`WeakInstrument` warning whenever a first-stage F
    statistic falls below 10.
    """
    if instrument not in (LAGGED_DIFFERENCE, LAGGED_LEVEL):
        raise SchemaError(f"unknown instrument variant {instrument!r}")
    regressors = tuple(regressors)
    if instrumented is not None and instrumented not in regressors:
        raise UnknownVariable(
            f"instrumented variable {instrumented!r} is not a regressor"
        )

    head = panel.head_missing((dependent,) + regressors)
    n_units, n_periods = panel.n_units, panel.n_periods

    def levels(name):
        return panel.grid(name)[:, head:]

    y = levels(dependent)
    t_lvl = n_periods - head

    def diff(grid):
        out = np.full_like(grid, np.nan)
        out[:, 1:] = grid[:, 1:] - grid[:, :-1]
        return out

    def lag(grid, k):
        out = np.full_like(grid, np.nan)
        out[:, k:] = grid[:, :-k]
        return out

    dy = diff(y)
    dy_lag = lag(dy, 1)
    if instrument == LAGGED_DIFFERENCE:
        dep_instr = lag(dy, 2)
    else:
        dep_instr = lag(y, 2)

    names = [INTERCEPT_NAME, f"lag d({dependent})"]
    columns = [None, dy_lag]  # intercept filled after trimming
    endo_idx = [1]
    instr_cols = [dep_instr]
    for name in regressors:
        dx = diff(levels(name))
        names.append(f"d({name})")
        columns.append(dx)
        if name == instrumented:
            endo_idx.append(len(columns) - 1)
            if instrument == LAGGED_DIFFERENCE:
                instr_cols.append(lag(dx, 1))
            else:
                instr_cols.append(lag(levels(name), 1))

    start = max(_first_valid(col) for col in columns[1:] + instr_cols)
    if t_lvl - start < 1:
        raise InsufficientPeriods(
            f"need more than {start} periods after differencing and lagging"
        )
    periods_used = panel.periods[head + start:]

    def trim(grid):
        return grid[:, start:].reshape(-1)

    y_vec = trim(dy)
    obs = y_vec.size
    columns[0] = np.ones((n_units, t_lvl))
    X = np.column_stack([trim(c) for c in columns])
    Z = np.column_stack(
        [trim(columns[j]) for j in range(len(columns)) if j not in endo_idx]
        + [trim(c) for c in instr_cols]
    )
    if X.shape[0] <= X.shape[1]:
        raise InsufficientPeriods(
            f"{X.shape[0]} observations cannot identify {X.shape[1]} coefficients"
        )
    _check_rank(Z, tuple(f"z{j}" for j in range(Z.shape[1])))

    # Stage 1: project each endogenous column on the full instrument set.
    x_hat = X.copy()
    first_stage = {}
    n_exog = Z.shape[1] - len(instr_cols)
    for j in endo_idx:
        target = X[:, j]
        coef, *_ = np.linalg.lstsq(Z, target, rcond=None)
        fitted = Z @ coef
        x_hat[:, j] = fitted
        rss_u = float(((target - fitted) ** 2).sum())
        coef_r, *_ = np.linalg.lstsq(Z[:, :n_exog], target, rcond=None)
        rss_r = float(((target - Z[:, :n_exog] @ coef_r) ** 2).sum())
        q = len(instr_cols)
        dof = obs - Z.shape[1]
        f_stat = np.inf if rss_u <= 0 else ((rss_r - rss_u) / q) / (rss_u / dof)
        label = names[j]
        first_stage[label] = float(f_stat)
        if f_stat < 10:
            warnings.warn(
                f"weak instrument for {label}: first-stage F = {f_stat:.2f}",
                WeakInstrument,
                stacklevel=2,
            )

    _check_rank(x_hat, tuple(names))
    beta, *_ = np.linalg.lstsq(x_hat, y_vec, rcond=None)
    resid = y_vec - X @ beta  # actual regressors, not fitted
    n, p = X.shape
    sigma2 = float(resid @ resid) / (n - p)
    cov = sigma2 * _solve_cov(x_hat.T @ x_hat)
    tss = float(((y_vec - y_vec.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else None
    return _finalize(panel, names, beta, cov, resid, periods_used,
                     n, p, r2=r2, first_stage=first_stage)


def _first_valid(grid):
    """Index of the first column with no NaN anywhere."""
    bad = np.isnan(grid).any(axis=0)
    idx = np.flatnonzero(~bad)
    if idx.size == 0:
        raise InsufficientPeriods("series is entirely unavailable")
    return int(idx[0])


# ---------------------------------------------------------------------------
# Table rows
# ---------------------------------------------------------------------------

def significance_stars(p_value: float) -> str:
    """Two stars at the 5 percent level, one at 10 percent."""
    if p_value <= 0.05:
        return "**"
    if p_value <= 0.10:
        return "*"
    return ""


def render_model(result: RegressionResult, digits: int = 2,
                 skip=(INTERCEPT_NAME,), include_dummies: bool = False):
    """Coefficient rows as (label, starred coefficient, p-value in brackets)."""
    rows = []
    for i, name in enumerate(result.names):
        if name in skip:
            continue
        if not include_dummies and name.startswith(TIME_DUMMY_PREFIX):
            continue
        p = float(result.p_values[i])
        rows.append((
            name,
            f"{result.beta[i]:.{digits}f}{significance_stars(p)}",
            f"({p:.2f})",
        ))
    return rows
