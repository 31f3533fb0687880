"""Simulated data-generating processes shared across test modules."""

import numpy as np

from gvccarbon.panel import PanelDataset


def ar1_series(rng, n_units, n_periods, rho, scale=1.0):
    """Stationary AR(1) grid, unit variance innovations times scale."""
    out = np.empty((n_units, n_periods))
    out[:, 0] = rng.normal(scale=scale / np.sqrt(1.0 - rho * rho), size=n_units)
    for t in range(1, n_periods):
        out[:, t] = rho * out[:, t - 1] + rng.normal(scale=scale, size=n_units)
    return out


def simulate_ar1_panel(rng, n_units=16, n_periods=24, beta=(1.0, 0.5),
                       rho=0.6, x_rho=0.7, heteroscedastic=True):
    """Panel with AR(1) errors and a persistent regressor.

    y_it = beta0 + beta1 * x_it + u_it,  u AR(1) with unit-specific
    innovation scale when heteroscedastic.
    """
    x = ar1_series(rng, n_units, n_periods, x_rho)
    if heteroscedastic:
        scales = rng.uniform(0.5, 1.5, size=n_units)
    else:
        scales = np.ones(n_units)
    u = np.empty((n_units, n_periods))
    u[:, 0] = rng.normal(size=n_units) * scales / np.sqrt(1.0 - rho * rho)
    for t in range(1, n_periods):
        u[:, t] = rho * u[:, t - 1] + rng.normal(size=n_units) * scales
    y = beta[0] + beta[1] * x + u
    units = tuple(f"U{i:02d}" for i in range(n_units))
    periods = tuple(range(2000, 2000 + n_periods))
    return PanelDataset(units, periods, {"y": y, "x": x})


def simulate_dynamic_panel(rng, n_units=16, n_periods=24, alpha=0.45,
                           gamma=1.0, noise=1.0, burn=60):
    """Dynamic panel y_it = alpha y_{i,t-1} + gamma x_it + eps_it."""
    total = n_periods + burn
    x = rng.normal(size=(n_units, total))
    eps = noise * rng.normal(size=(n_units, total))
    y = np.zeros((n_units, total))
    for t in range(1, total):
        y[:, t] = alpha * y[:, t - 1] + gamma * x[:, t] + eps[:, t]
    units = tuple(f"U{i:02d}" for i in range(n_units))
    periods = tuple(range(1995, 1995 + n_periods))
    return PanelDataset(units, periods,
                        {"y": y[:, burn:], "x": x[:, burn:]})
