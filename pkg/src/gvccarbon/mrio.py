"""Inter-country input-output core: Leontief model and embodied accounts.

The model follows the standard demand-driven accounting identity

    x = Z 1 + F 1          (gross output = intermediate + final sales)
    A = Z diag(x)^(-1)     (technical coefficients)
    B = (I - A)^(-1)       (Leontief inverse, total requirements)

Embodied carbon attributes CO2 released anywhere upstream to a downstream
trade flow through diag(e) B T, where e holds direct emission intensities
(tonnes per thousand USD of gross output) and T is a matrix of trade flows.
Value-added participation measures use v = va / x, for which v' B = 1'
whenever value added closes the column accounts exactly.

All monetary magnitudes are thousand USD; emissions are tonnes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    BalanceError,
    DimensionMismatch,
    NonProductive,
    SingularOutput,
    UnknownCountry,
)

# Row-balance tolerance: absolute floor 1e-6, relative 1e-8 of gross output.
BALANCE_ABS_TOL = 1e-6
BALANCE_REL_TOL = 1e-8

# Tiny negative intermediate flows (balancing artifacts) are clamped to zero
# when |value| <= NEGATIVE_Z_REL_TOL * x_j; anything larger is rejected.
NEGATIVE_Z_REL_TOL = 1e-6

LEONTIEF_RESIDUAL_TOL = 1e-8
LEONTIEF_NEGATIVE_TOL = 1e-10


def _balance_tol(x):
    return np.maximum(BALANCE_ABS_TOL, BALANCE_REL_TOL * np.abs(x))


def _block_index(countries, industries):
    k = len(industries)
    return {c: slice(i * k, (i + 1) * k) for i, c in enumerate(countries)}


@dataclass(frozen=True)
class IcioTable:
    """Validated inter-country input-output table.

    Parameters
    ----------
    countries : ordered country codes (length N).
    industries : ordered industry codes (length K), shared by every country.
    Z : (N*K, N*K) intermediate-use matrix.
    F : (N*K, N) final demand aggregated to one column per destination country.
    x : (N*K,) gross output vector.
    va : (N*K,) value added; defaults to x - column sums of Z.
    year : optional reference year carried through to reports.
    """

    countries: tuple
    industries: tuple
    Z: np.ndarray
    F: np.ndarray
    x: np.ndarray
    va: np.ndarray = None
    year: int = None
    block_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        countries = tuple(self.countries)
        industries = tuple(self.industries)
        n, k = len(countries), len(industries)
        if n < 1 or k < 1:
            raise BalanceError("table needs at least one country and one industry")
        nk = n * k

        Z = np.array(self.Z, dtype=float)
        F = np.array(self.F, dtype=float)
        x = np.array(self.x, dtype=float)
        if Z.shape != (nk, nk):
            raise DimensionMismatch(f"Z must be {(nk, nk)}, got {Z.shape}")
        if F.shape != (nk, n):
            raise DimensionMismatch(f"F must be {(nk, n)}, got {F.shape}")
        if x.shape != (nk,):
            raise DimensionMismatch(f"x must be {(nk,)}, got {x.shape}")

        if np.any(x < 0):
            rows = np.flatnonzero(x < 0)
            raise BalanceError(f"negative gross output at rows {rows[:10].tolist()}")

        # Clamp balancing-artifact negatives in Z, reject real ones. Final
        # demand may be negative (inventory changes).
        neg = Z < 0
        if np.any(neg):
            limit = NEGATIVE_Z_REL_TOL * np.maximum(x, 1.0)[np.newaxis, :]
            bad = Z < -limit
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise BalanceError(
                    f"intermediate flow Z[{i},{j}] = {Z[i, j]:g} is negative "
                    "beyond the balancing tolerance"
                )
            Z = np.where(neg, 0.0, Z)

        tol = _balance_tol(x)
        implied_va = x - Z.sum(axis=0)
        va = self.va
        if va is None:
            va = implied_va
        else:
            va = np.array(va, dtype=float)
            if va.shape != (nk,):
                raise DimensionMismatch(f"va must be {(nk,)}, got {va.shape}")

        row_gap = np.abs(x - (Z.sum(axis=1) + F.sum(axis=1)))
        if np.any(row_gap > tol):
            worst = np.argsort(row_gap - tol)[::-1][:10]
            labels = self._labels_static(countries, industries)
            detail = ", ".join(f"{labels[i]} (gap {row_gap[i]:.3g})" for i in worst
                               if row_gap[i] > tol[i])
            raise BalanceError(f"row balance violated: {detail}")
        for values, what in ((implied_va, "column balance violated"),
                             (va, "negative value added")):
            if np.any(values < -tol):
                rows = np.flatnonzero(values < -tol)
                labels = self._labels_static(countries, industries)
                raise BalanceError(
                    f"{what} at " + ", ".join(labels[i] for i in rows[:10])
                )

        for arr in (Z, F, x, va):
            arr.setflags(write=False)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "industries", industries)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "va", va)
        object.__setattr__(self, "block_index", _block_index(countries, industries))

    @staticmethod
    def _labels_static(countries, industries):
        return [f"{c}:{s}" for c in countries for s in industries]

    @property
    def n_countries(self):
        return len(self.countries)

    @property
    def n_industries(self):
        return len(self.industries)

    def row_labels(self):
        return self._labels_static(self.countries, self.industries)

    def rows(self, country):
        """Row/column slice of one country's industries."""
        try:
            return self.block_index[country]
        except KeyError:
            raise UnknownCountry(f"country {country!r} not in table") from None


@dataclass(frozen=True)
class LeontiefModel:
    """Technical coefficients A and, once solved, the Leontief inverse B."""

    countries: tuple
    industries: tuple
    A: np.ndarray
    B: np.ndarray = None
    block_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "industries", tuple(self.industries))
        self.A.setflags(write=False)
        if self.B is not None:
            self.B.setflags(write=False)
        object.__setattr__(
            self, "block_index", _block_index(self.countries, self.industries)
        )

    def rows(self, country):
        try:
            return self.block_index[country]
        except KeyError:
            raise UnknownCountry(f"country {country!r} not in model") from None

    def validate(self):
        """Check residual, nonnegativity, and diagonal bounds of B.

        Raises :class:`NonProductive` on any violation. A successful LU
        factorization together with a nonnegative B certifies that the
        spectral radius of A is below one, so no separate power iteration
        is run.
        """
        if self.B is None:
            raise NonProductive("Leontief inverse has not been computed")
        n = self.A.shape[0]
        residual = (np.eye(n) - self.A) @ self.B - np.eye(n)
        worst = np.abs(residual).max()
        if worst > LEONTIEF_RESIDUAL_TOL:
            raise NonProductive(f"Leontief residual {worst:.3g} exceeds tolerance")
        if self.B.min() < -LEONTIEF_NEGATIVE_TOL:
            raise NonProductive(
                f"Leontief inverse has negative entry {self.B.min():.3g}"
            )
        if np.diag(self.B).min() < 1.0 - LEONTIEF_NEGATIVE_TOL:
            raise NonProductive("Leontief inverse diagonal fell below one")


@dataclass(frozen=True)
class EmissionIntensity:
    """Direct CO2 intensity per row, tonnes per thousand USD of gross output."""

    countries: tuple
    industries: tuple
    e: np.ndarray

    def __post_init__(self):
        e = np.array(self.e, dtype=float)
        nk = len(self.countries) * len(self.industries)
        if e.shape != (nk,):
            raise DimensionMismatch(f"e must be {(nk,)}, got {e.shape}")
        if np.any(e < 0):
            raise DimensionMismatch("emission intensities must be nonnegative")
        e.setflags(write=False)
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "industries", tuple(self.industries))
        object.__setattr__(self, "e", e)


class CountryEmbodied(NamedTuple):
    """Country total plus the per-industry breakdown behind it."""

    total: float
    by_industry: np.ndarray


@dataclass(frozen=True)
class EmbodiedAccounts:
    """Per-country, per-industry embodied trade accounts.

    Grids are (N, K). CO2 grids and ``backward_gvc`` attribute values to the
    exporting industry (the column of B); ``forward_gvc`` attributes to the
    domestic source industry whose value added travels in partners' exports.
    """

    countries: tuple
    industries: tuple
    gross_exports: np.ndarray
    domestic_co2: np.ndarray
    foreign_co2: np.ndarray
    forward_gvc: np.ndarray
    backward_gvc: np.ndarray
    year: int = None

    def __post_init__(self):
        grids = {
            "gross_exports": self.gross_exports,
            "domestic_co2": self.domestic_co2,
            "foreign_co2": self.foreign_co2,
            "forward_gvc": self.forward_gvc,
            "backward_gvc": self.backward_gvc,
        }
        shape = (len(self.countries), len(self.industries))
        for name, grid in grids.items():
            if grid.shape != shape:
                raise DimensionMismatch(f"{name} must be {shape}, got {grid.shape}")
            if grid.min() < -1e-9:
                raise DimensionMismatch(f"{name} has negative entry {grid.min():.3g}")
            grid.setflags(write=False)
        bwd = self.backward_gvc.sum(axis=1)
        exp = self.gross_exports.sum(axis=1)
        if np.any(bwd > exp * (1 + 1e-6) + 1e-9):
            i = int(np.argmax(bwd - exp))
            raise DimensionMismatch(
                f"backward participation exceeds gross exports for "
                f"{self.countries[i]}"
            )
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "industries", tuple(self.industries))

    def country_index(self, country):
        try:
            return self.countries.index(country)
        except ValueError:
            raise UnknownCountry(f"country {country!r} not in accounts") from None

    def indicator(self, name):
        """One of the five (N, K) grids by indicator key."""
        try:
            return getattr(self, name)
        except AttributeError:
            raise KeyError(f"unknown indicator {name!r}") from None

    def aggregate(self, name, industries=None):
        """Country totals of an indicator, optionally over an industry subset."""
        grid = self.indicator(name)
        if industries is None:
            return grid.sum(axis=1)
        cols = [self.industries.index(s) for s in industries if s in self.industries]
        if not cols:
            raise KeyError(
                f"none of the requested industries {sorted(industries)!r} exist "
                f"in {sorted(self.industries)!r}"
            )
        return grid[:, cols].sum(axis=1)


INDICATOR_KEYS = (
    "gross_exports",
    "domestic_co2",
    "foreign_co2",
    "forward_gvc",
    "backward_gvc",
)


# ---------------------------------------------------------------------------
# Coefficients and inverse
# ---------------------------------------------------------------------------

def build_coefficients(icio: IcioTable) -> LeontiefModel:
    """Build A = Z diag(x)^(-1) with zero columns for zero-output industries.

    Raises
    ------
    SingularOutput
        If an industry reports zero gross output but buys intermediates.
    """
    x = icio.x
    zero = x <= 0.0
    if np.any(zero):
        purchases = np.abs(icio.Z[:, zero]).max(axis=0)
        offending = np.flatnonzero(zero)[purchases > BALANCE_ABS_TOL]
        if offending.size:
            labels = icio.row_labels()
            raise SingularOutput(
                "zero-output industries with nonzero intermediate purchases: "
                + ", ".join(labels[i] for i in offending[:10])
            )
    denom = np.where(zero, 1.0, x)
    A = icio.Z / denom[np.newaxis, :]
    A[:, zero] = 0.0
    return LeontiefModel(icio.countries, icio.industries, A)


def leontief_inverse(model: LeontiefModel) -> LeontiefModel:
    """Solve (I - A) B = I by LU factorization with partial pivoting.

    The explicit inverse is never formed; B comes from triangular solves
    against the identity. The returned model passes
    :meth:`LeontiefModel.validate`.
    """
    n = model.A.shape[0]
    system = np.eye(n) - model.A
    try:
        lu, piv = scipy.linalg.lu_factor(system)
    except scipy.linalg.LinAlgError as exc:
        raise NonProductive(f"(I - A) could not be factorized: {exc}") from exc
    diag = np.abs(np.diag(lu))
    if diag.min() <= n * np.finfo(float).eps * max(diag.max(), 1.0):
        raise NonProductive("(I - A) is numerically singular")
    B = scipy.linalg.lu_solve((lu, piv), np.eye(n))
    if B.min() < -1e-6:
        raise NonProductive(
            f"economy is not productive: inverse entry {B.min():.3g} < 0"
        )
    solved = LeontiefModel(model.countries, model.industries, model.A, B)
    solved.validate()
    return solved


def build_model(icio: IcioTable) -> LeontiefModel:
    """Coefficients plus inverse in one step."""
    return leontief_inverse(build_coefficients(icio))


# ---------------------------------------------------------------------------
# Trade aggregates
# ---------------------------------------------------------------------------

def gross_exports(icio: IcioTable, country: str) -> np.ndarray:
    """Exports of each of ``country``'s industries to all foreign buyers.

    Sums intermediate sales to foreign industries and final demand of
    foreign destinations. Tiny negative results (inventory-change final
    demand) are clamped to zero; larger ones are rejected.
    """
    rc = icio.rows(country)
    dest = icio.countries.index(country)
    foreign_cols = np.ones(icio.Z.shape[1], dtype=bool)
    foreign_cols[rc] = False
    ex = icio.Z[rc][:, foreign_cols].sum(axis=1)
    fd = np.delete(icio.F[rc], dest, axis=1).sum(axis=1)
    ex = ex + fd
    if np.any(ex < 0):
        tol = _balance_tol(icio.x[rc])
        if np.any(ex < -tol):
            raise BalanceError(
                f"negative gross exports for {country}: {ex.min():.3g}"
            )
        ex = np.where(ex < 0, 0.0, ex)
    return ex


def gross_exports_vector(icio: IcioTable) -> np.ndarray:
    """Global (N*K,) stack of every country's gross-export vector."""
    out = np.empty(icio.x.shape)
    for c in icio.countries:
        out[icio.rows(c)] = gross_exports(icio, c)
    return out


def embodied_emissions(e: EmissionIntensity, B: np.ndarray,
                       trade: np.ndarray) -> np.ndarray:
    """Emissions embodied in trade flows: diag(e) B T.

    Entry (s, m) is CO2 originating in source row s that is embodied in
    trade-flow column m.
    """
    trade = np.asarray(trade, dtype=float)
    if trade.ndim == 1:
        trade = trade[:, np.newaxis]
    if B is None:
        raise DimensionMismatch("Leontief inverse B has not been computed")
    if B.shape[1] != trade.shape[0] or e.e.shape[0] != B.shape[0]:
        raise DimensionMismatch(
            f"non-conforming shapes: e {e.e.shape}, B {B.shape}, T {trade.shape}"
        )
    return e.e[:, np.newaxis] * (B @ trade)


# ---------------------------------------------------------------------------
# Country indicators
# ---------------------------------------------------------------------------

def _export_requirements(model: LeontiefModel, icio: IcioTable, country: str):
    """B restricted to columns of ``country`` times its export vector."""
    if model.B is None:
        raise NonProductive("Leontief inverse has not been computed")
    rc = icio.rows(country)
    ex = gross_exports(icio, country)
    return rc, model.B[:, rc] @ ex


def domestic_co2_exports(e: EmissionIntensity, model: LeontiefModel,
                         icio: IcioTable, country: str) -> CountryEmbodied:
    """CO2 generated anywhere in the domestic economy, embodied in exports.

    Source rows are restricted to the country itself, so round-trip loops
    already absorbed in the global B are included.
    """
    rc, req = _export_requirements(model, icio, country)
    by_source = e.e[rc] * req[rc]
    return CountryEmbodied(float(by_source.sum()), by_source)


def foreign_co2_exports(e: EmissionIntensity, model: LeontiefModel,
                        icio: IcioTable, country: str) -> float:
    """CO2 from foreign upstream industries embodied in a country's exports."""
    rc, req = _export_requirements(model, icio, country)
    contrib = e.e * req
    return float(contrib.sum() - contrib[rc].sum())


def _va_ratios(icio: IcioTable) -> np.ndarray:
    x = icio.x
    return np.where(x > 0, icio.va / np.where(x > 0, x, 1.0), 0.0)


def forward_gvc(icio: IcioTable, model: LeontiefModel,
                country: str) -> CountryEmbodied:
    """Domestic value added embodied in partners' gross exports.

    Returned per domestic source industry; the total is the forward
    participation measure.
    """
    rc = icio.rows(country)
    v = _va_ratios(icio)
    by_source = np.zeros(rc.stop - rc.start)
    for partner in icio.countries:
        if partner == country:
            continue
        _, req = _export_requirements(model, icio, partner)
        by_source += v[rc] * req[rc]
    return CountryEmbodied(float(by_source.sum()), by_source)


def backward_gvc(icio: IcioTable, model: LeontiefModel, country: str) -> float:
    """Foreign value added embodied in the country's own gross exports."""
    rc, req = _export_requirements(model, icio, country)
    contrib = _va_ratios(icio) * req
    return float(contrib.sum() - contrib[rc].sum())


# ---------------------------------------------------------------------------
# Full accounts
# ---------------------------------------------------------------------------

def compute_accounts(icio: IcioTable, model: LeontiefModel,
                     e: EmissionIntensity) -> EmbodiedAccounts:
    """All five indicators for every country in one pass.

    Builds G[i, j] = e_i B_ij EX_j (emissions of source i embodied in
    exports of industry j) and V[i, j] = v_i B_ij EX_j (the value-added
    analogue), then splits each column between domestic and foreign
    source rows.
    """
    if model.B is None:
        raise NonProductive("Leontief inverse has not been computed")
    n, k = icio.n_countries, icio.n_industries
    ex = gross_exports_vector(icio)
    W = model.B * ex[np.newaxis, :]
    G = e.e[:, np.newaxis] * W
    V = _va_ratios(icio)[:, np.newaxis] * W

    shape = (n, k)
    out = {key: np.zeros(shape) for key in INDICATOR_KEYS}
    for ci, c in enumerate(icio.countries):
        rc = icio.rows(c)
        col_g = G[:, rc]
        col_v = V[:, rc]
        out["gross_exports"][ci] = ex[rc]
        out["domestic_co2"][ci] = col_g[rc].sum(axis=0)
        out["foreign_co2"][ci] = col_g.sum(axis=0) - col_g[rc].sum(axis=0)
        out["backward_gvc"][ci] = col_v.sum(axis=0) - col_v[rc].sum(axis=0)
        # Forward participation: this country's value added in partners'
        # exports, attributed to the domestic source industry.
        foreign_cols = np.ones(V.shape[1], dtype=bool)
        foreign_cols[rc] = False
        out["forward_gvc"][ci] = V[rc][:, foreign_cols].sum(axis=1)
    # Exact zeros can pick up -0.0 and eps-scale noise from the solve.
    for key in INDICATOR_KEYS:
        grid = out[key]
        grid[(grid < 0) & (grid > -1e-9)] = 0.0
    return EmbodiedAccounts(icio.countries, icio.industries, year=icio.year, **out)


def conservation_gap(icio: IcioTable, model: LeontiefModel,
                     e: EmissionIntensity) -> float:
    """Relative gap between production-based and consumption-embodied totals.

    Production-based total is sum(e * x); the consumption side routes total
    final demand through diag(e) B. The two agree whenever row balance holds
    exactly, which makes this a cheap end-to-end sanity check on any table.
    """
    produced = float(e.e @ icio.x)
    final = icio.F.sum(axis=1)
    embodied = float(embodied_emissions(e, model.B, final).sum())
    scale = max(abs(produced), abs(embodied), 1e-30)
    return abs(produced - embodied) / scale
