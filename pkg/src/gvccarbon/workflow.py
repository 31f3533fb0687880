"""End-to-end runs: ingest -> accounts -> panel -> estimates -> tables.

Each public ``*_table`` function produces one report table with the row
and column structure of the corresponding published table: the two
quadratic models, the subsample runs with country-characteristic
interactions, the fixed-time-effects variant, the dynamic IV variant,
the dependence diagnostics, descriptive statistics, correlation
matrices, and the country rankings.
"""

from __future__ import annotations

import numpy as np

from . import diagnostics, estimators, mrio
from .errors import SchemaError
from .ingest import (
    RunConfig,
    check_sample,
    load_emissions_vector,
    load_icio,
    load_indicator_panel,
)
from .panel import PanelDataset, VariableMeta, assemble_panel, derive_variable
from .report import ReportBundle, Table, hash_run_inputs

ACCOUNT_VARS = ("Domestic CO2", "Foreign CO2", "Forward GVC", "Backward GVC")
CONTROL_VARS = ("GDP", "MFG", "ESI", "TO", "FOR_COVER", "REN_ENERGY_CONS",
                "POP_DENSITY")
GVC_CONTROLS = ("FOR_COVER", "REN_ENERGY_CONS", "POP_DENSITY")

SIGNIFICANCE_NOTES = (
    "** indicates significance at the 5% level",
    "* indicates significance at the 10% level",
    "Brackets hold the p-value",
)


def log_name(var):
    return f"log {var}"


def sq_name(var):
    return f"log {var} sq"


def inter_name(gvc, control):
    return f"log {gvc} x {control}"


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------

def load_year(config: RunConfig, year):
    icio = load_icio(config.icio_path(year))
    check_sample(config, icio)
    intensity = load_emissions_vector(config.emissions_path(year), icio)
    return icio, intensity


def year_accounts(config: RunConfig, year):
    icio, intensity = load_year(config, year)
    model = mrio.build_model(icio)
    accounts = mrio.compute_accounts(icio, model, intensity)
    gap = mrio.conservation_gap(icio, model, intensity)
    return icio, accounts, gap


def accounts_series(config: RunConfig):
    return {year: year_accounts(config, year)[1] for year in config.years}


def base_panel(config: RunConfig, accounts=None) -> PanelDataset:
    """Raw variables over the configured sample and years."""
    if accounts is None:
        accounts = accounts_series(config)
    indicators = load_indicator_panel(config.indicators_path)
    return assemble_panel(accounts, indicators, config.sample, config.years,
                          manufacturing=config.manufacturing)


def regression_panel(config: RunConfig, base: PanelDataset) -> PanelDataset:
    """Logs of every variable plus the squared and interacted GVC terms.

    The stringency index may sit at or below zero; with ``esi_shift``
    configured it is shifted up before the log, otherwise a non-positive
    level is a hard failure.
    """
    panel = base
    esi_source = "ESI"
    if config.esi_shift is not None:
        esi_source = "ESI shifted"
        panel = panel.with_variable(
            esi_source, panel.grid("ESI") + config.esi_shift,
            VariableMeta(kind="raw", parents=("ESI",)))
    for var in ACCOUNT_VARS + CONTROL_VARS:
        source = esi_source if var == "ESI" else var
        panel = derive_variable(panel, "log", source, log_name(var),
                                base=config.log_base)
    for gvc in ("Forward GVC", "Backward GVC"):
        panel = derive_variable(panel, "square", log_name(gvc), sq_name(gvc))
        for control in GVC_CONTROLS:
            panel = derive_variable(
                panel, "interaction", (log_name(gvc), log_name(control)),
                inter_name(gvc, control))
    return panel


def run_inputs(config: RunConfig):
    paths = [config.indicators_path]
    for year in config.years:
        paths.append(config.icio_path(year))
        paths.append(config.emissions_path(year))
    return tuple(paths)


# ---------------------------------------------------------------------------
# Model definitions
# ---------------------------------------------------------------------------

MODEL_SIDES = {
    "model1": ("Domestic CO2", "Forward GVC"),
    "model2": ("Foreign CO2", "Backward GVC"),
    "table6": ("Domestic CO2", "Forward GVC"),
    "table7": ("Foreign CO2", "Backward GVC"),
}


def _fit(config, panel, spec):
    return estimators.fgls_ar1(panel, spec)


def _coef_cell(result, name, digits=2):
    p = result.p_value(name)
    stars = estimators.significance_stars(p)
    return f"{result.coefficient(name):.{digits}f}{stars} ({p:.2f})"


def quadratic_model_table(config: RunConfig, panel: PanelDataset,
                          model_id: str) -> Table:
    """One column of the headline regression: GVC term, its square, controls."""
    dep_raw, gvc_raw = MODEL_SIDES[model_id]
    dep = log_name(dep_raw)
    rows_spec = [
        (log_name(gvc_raw), gvc_raw),
        (sq_name(gvc_raw), f"({gvc_raw})^2"),
        (log_name("GDP"), "GDP"),
        (log_name("MFG"), "MFG"),
        (log_name("ESI"), "STR"),
        (log_name("TO"), "TO"),
    ]
    spec = estimators.RegressionSpec(
        dep, tuple(name for name, _ in rows_spec),
        covariance=config.fgls_scheme)
    result = _fit(config, panel, spec)
    rows = [(label, _coef_cell(result, name)) for name, label in rows_spec]
    rows.append(("Wald Chi Square", f"{result.wald_stat:.2f}"))
    rows.append(("No. of Cross Sections", str(panel.n_units)))
    rows.append(("No. of Observations", str(result.n)))
    dep_label = "Domestic CO2" if model_id == "model1" else "Foreign CO2"
    short = ", ".join(label for _, label in rows_spec)
    return Table(
        name=f"table5_{model_id}",
        caption=f"Regression results ({model_id.upper()}): "
                f"{dep_label} = f({short})",
        columns=("Explanatory Variables", "Coefficient"),
        rows=tuple(rows),
        source_ops=("estimators.fgls_ar1", "estimators.wald_joint"),
        notes=SIGNIFICANCE_NOTES,
        stacked_p=True,
    )


def subsample_table(config: RunConfig, panel: PanelDataset,
                    model_id: str) -> Table:
    """OECD / non-OECD / full-sample runs with GVC interaction terms."""
    dep_raw, gvc_raw = MODEL_SIDES[model_id]
    dep = log_name(dep_raw)
    base_rows = [
        (log_name(gvc_raw), gvc_raw),
        (log_name("GDP"), "GDP"),
        (log_name("MFG"), "MFG"),
        (log_name("ESI"), "STR"),
        (log_name("TO"), "TO"),
    ]
    inter_rows = [
        (inter_name(gvc_raw, control), f"{gvc_raw}*{control}")
        for control in GVC_CONTROLS
    ]
    base_names = tuple(name for name, _ in base_rows)

    subsamples = (
        ("OECD", config.oecd, base_names),
        ("NON OECD", config.non_oecd, base_names),
        ("ALL EMEs", config.sample,
         base_names + tuple(name for name, _ in inter_rows)),
    )
    results = {}
    for column, units, regressors in subsamples:
        sub = panel.subset_units(units)
        spec = estimators.RegressionSpec(dep, regressors,
                                         covariance=config.fgls_scheme)
        results[column] = (sub, _fit(config, sub, spec))

    rows = []
    for name, label in base_rows + inter_rows:
        cells = []
        for column, _, _ in subsamples:
            _, result = results[column]
            cells.append(_coef_cell(result, name)
                         if name in result.names else "")
        rows.append((label, *cells))
    rows.append(("Wald Chi Square",
                 *(f"{results[c][1].wald_stat:.2f}" for c, _, _ in subsamples)))
    rows.append(("No. of Observations",
                 *(str(results[c][1].n) for c, _, _ in subsamples)))
    rows.append(("No. of Cross Sections",
                 *(str(results[c][0].n_units) for c, _, _ in subsamples)))

    table_no = "table6" if model_id == "table6" else "table7"
    dep_label = ("Domestic" if model_id == "table6" else "Foreign")
    return Table(
        name=table_no,
        caption=f"{dep_label} emissions embodied in gross exports through "
                f"{gvc_raw.lower()} participation, by subsample, "
                "with country characteristics",
        columns=("Explanatory Variables", "OECD", "NON OECD", "ALL EMEs"),
        rows=tuple(rows),
        source_ops=("estimators.fgls_ar1", "estimators.wald_joint"),
        notes=SIGNIFICANCE_NOTES,
        stacked_p=True,
    )


TABLE8_SIDES = (
    ("domestic", "Domestic Emissions", "Domestic CO2", "Forward GVC",
     "Forward Participation"),
    ("foreign", "Foreign Emissions", "Foreign CO2", "Backward GVC",
     "Backward Participation"),
)


def time_effects_table(config: RunConfig, panel: PanelDataset,
                       side: str) -> Table:
    tag, dep_label, dep_raw, gvc_raw, gvc_label = next(
        s for s in TABLE8_SIDES if s[0] == side)
    rows_spec = [
        (log_name("MFG"), "Manufacturing share"),
        (log_name("GDP"), "GDP Per Capita"),
        (log_name("TO"), "Trade openness"),
        (log_name(gvc_raw), gvc_label),
        (log_name("ESI"), "Stringency Index"),
    ]
    spec = estimators.RegressionSpec(
        log_name(dep_raw), tuple(name for name, _ in rows_spec),
        covariance=config.fgls_scheme)
    spec = estimators.with_time_effects(spec, panel.periods)
    result = _fit(config, panel, spec)
    rows = [(label, _coef_cell(result, name, digits=4))
            for name, label in rows_spec]
    rows.append(("Wald Chi Square", f"{result.wald_stat:.3f}"))
    rows.append(("Fixed Time Effects", "Yes"))
    rows.append(("No. of Observations", str(result.n)))
    rows.append(("No. of Cross sections", str(panel.n_units)))
    rows.append(("No of time periods", str(panel.n_periods)))
    return Table(
        name=f"table8_{tag}",
        caption=f"Panel results with fixed time effects, dep. var: {dep_label}",
        columns=("Dep Var: " + dep_label, "Coefficient"),
        rows=tuple(rows),
        source_ops=("estimators.with_time_effects", "estimators.fgls_ar1"),
        notes=SIGNIFICANCE_NOTES,
        stacked_p=True,
    )


def dynamic_iv_table(config: RunConfig, panel: PanelDataset,
                     side: str) -> Table:
    tag, dep_label, dep_raw, gvc_raw, gvc_label = next(
        s for s in TABLE8_SIDES if s[0] == side)
    dep = log_name(dep_raw)
    regressors = [
        (log_name("MFG"), "Manufacturing share"),
        (log_name("GDP"), "GDP Per Capita"),
        (log_name("TO"), "Trade openness"),
        (log_name(gvc_raw), gvc_label),
        (log_name("ESI"), "Stringency Index"),
    ]
    result = estimators.anderson_hsiao(
        panel, dep, tuple(name for name, _ in regressors),
        instrumented=log_name(gvc_raw), instrument=config.instrument)

    rows = [(f"Lagged {dep_label}",
             _coef_cell(result, f"lag d({dep})", digits=4))]
    for name, label in regressors:
        rows.append((f"{label} (First Difference)",
                     _coef_cell(result, f"d({name})", digits=4)))
    rows.append(("Constant", _coef_cell(result, "const", digits=4)))
    rows.append(("Wald Chi Square", f"{result.wald_stat:.2f}"))
    rows.append(("Overall R square", f"{result.r_squared:.4f}"))
    rows.append(("No. of Observations", str(result.n)))
    worst_f = min(result.first_stage_f.values())
    return Table(
        name=f"table9_{tag}",
        caption="Dynamic panel with instrumented lagged differences, "
                f"dep. var: {dep_label}",
        columns=("Dep Var: " + dep_label, "Coefficient"),
        rows=tuple(rows),
        source_ops=("estimators.anderson_hsiao",),
        notes=SIGNIFICANCE_NOTES + (
            f"Instrument variant: {config.instrument}; weakest first-stage "
            f"F = {worst_f:.2f}",
        ),
        stacked_p=True,
    )


# ---------------------------------------------------------------------------
# Diagnostics tables
# ---------------------------------------------------------------------------

CD_MODELS = (
    ("Dom CO2 = f(Forward GVC, TO, MFG, GDP, STR)", "Domestic CO2",
     "Forward GVC"),
    ("For CO2 = f(Backward GVC, TO, MFG, GDP, STR)", "Foreign CO2",
     "Backward GVC"),
)


def cd_table(config: RunConfig, panel: PanelDataset) -> Table:
    """Dependence diagnostics on the pooled-regression residuals."""
    rows = []
    for label, dep_raw, gvc_raw in CD_MODELS:
        spec = estimators.RegressionSpec(
            log_name(dep_raw),
            (log_name(gvc_raw), log_name("TO"), log_name("MFG"),
             log_name("GDP"), log_name("ESI")))
        result = estimators.ols(panel, spec)
        cd = diagnostics.pesaran_cd(result.residuals)
        rows.append((label,
                     f"{cd.avg_abs_correlation:.3f} ({cd.p_value:.2f})",
                     f"{cd.statistic:.2f}"))
    return Table(
        name="table2_cd",
        caption="Cross-sectional dependence of the pooled residuals",
        columns=("Model", "Avg Absolute Correlation", "Pesaran Statistic"),
        rows=tuple(rows),
        source_ops=("estimators.ols", "diagnostics.pesaran_cd"),
        notes=("H0: cross-sections are not dependent; "
               "p-values in parentheses",),
    )


APPENDIX_VARS = (
    ("Forward GVC", "Forward GVC"),
    ("Backward GVC", "Backward GVC"),
    ("Domestic CO2", "Domestic Emissions embodied in gross exports"),
    ("Foreign CO2", "Foreign Emissions embodied in gross exports"),
    ("FOR_COVER", "Forest Cover"),
    ("TO", "Trade Openness"),
    ("POP_DENSITY", "Population Density"),
    ("ESI", "Stringency Index"),
    ("GDP", "GDP Per Capita"),
    ("MFG", "Manufacturing Share in GDP"),
)


def stats_table(config: RunConfig, panel: PanelDataset) -> Table:
    names = [log_name(var) for var, _ in APPENDIX_VARS]
    stats = diagnostics.descriptive_stats(panel, names)
    rows = []
    for (_, label), row in zip(APPENDIX_VARS, stats):
        rows.append((label, str(row.obs), f"{row.mean:.6f}", f"{row.std:.6f}",
                     f"{row.minimum:.6f}", f"{row.maximum:.6f}"))
    return Table(
        name="appendix_stats",
        caption="Descriptive statistics (all variables in logarithmic form)",
        columns=("Variable", "Obs", "Mean", "Std. Dev.", "Min", "Max"),
        rows=tuple(rows),
        source_ops=("diagnostics.descriptive_stats",),
    )


CORR_SETS = {
    "forward": (("Forward GVC", "Forward Participation"),
                ("MFG", "Manufacturing Value Added"),
                ("GDP", "GDP Per Capita"),
                ("ESI", "Stringency Index"),
                ("TO", "Trade Openness")),
    "backward": (("Backward GVC", "Backward Participation"),
                 ("MFG", "Manufacturing Value Added"),
                 ("GDP", "GDP Per Capita"),
                 ("ESI", "Stringency Index"),
                 ("TO", "Trade Openness")),
}


def correlation_table(config: RunConfig, panel: PanelDataset,
                      which: str) -> Table:
    pairs = CORR_SETS[which]
    names = [log_name(var) for var, _ in pairs]
    labels = [label for _, label in pairs]
    corr = diagnostics.correlation_matrix(panel, names)
    rows = []
    for i, label in enumerate(labels):
        cells = [f"{corr[i, j]:.4f}" if j <= i else "" for j in range(len(labels))]
        rows.append((label, *cells))
    return Table(
        name=f"appendix_corr_{which}",
        caption=f"Correlation matrix ({which} participation set)",
        columns=("", *labels),
        rows=tuple(rows),
        source_ops=("diagnostics.correlation_matrix",),
    )


RANK_COLUMNS = (
    ("forward_gvc", "Forward Participation", "share"),
    ("backward_gvc", "Backward Participation", "share"),
    ("foreign_co2", "Foreign Emissions embodied in Gross Exports", "level"),
    ("domestic_co2", "Domestic Emissions embodied in Gross Exports", "level"),
)


def rank_year_table(config: RunConfig, year, basis_override=None) -> Table:
    """Country orderings for the four indicators in one year.

    Participation columns rank shares of gross exports (the published
    convention); emissions rank levels. ``basis_override`` forces one
    basis for all four columns.
    """
    _, accounts, _ = year_accounts(config, year)
    sample = config.sample
    exports = dict(zip(
        accounts.countries,
        accounts.aggregate("gross_exports", config.manufacturing)))
    orderings = []
    for key, _, default_basis in RANK_COLUMNS:
        basis = basis_override or default_basis
        values = dict(zip(accounts.countries,
                          accounts.aggregate(key, config.manufacturing)))
        values = {c: values[c] for c in sample}
        if basis == "share":
            table = diagnostics.rank_table(
                values, key, year, basis=diagnostics.SHARE_BASIS,
                gross_exports={c: exports[c] for c in sample})
        else:
            table = diagnostics.rank_table(values, key, year)
        orderings.append(table.ranking())
    rows = tuple(
        (str(rank + 1), *(ordering[rank] for ordering in orderings))
        for rank in range(len(sample))
    )
    return Table(
        name=f"ranks_{year}",
        caption=f"Ranks from highest to lowest in {year} "
                "(participation as a share of gross exports; emission levels)",
        columns=("Ranks",) + tuple(label for _, label, _ in RANK_COLUMNS),
        rows=rows,
        source_ops=("diagnostics.rank_table", "mrio.compute_accounts"),
        notes=("A low rank implies higher emissions and higher participation",),
    )


# ---------------------------------------------------------------------------
# Data exports
# ---------------------------------------------------------------------------

EXPORT_SETS = {
    "embodied": ("gross_exports", "domestic_co2", "foreign_co2"),
    "gvc": ("gross_exports", "forward_gvc", "backward_gvc"),
}


def accounts_export(config: RunConfig, year, which: str):
    """Per-country-industry rows for one year; returns (header, rows, gap)."""
    keys = EXPORT_SETS[which]
    _, accounts, gap = year_accounts(config, year)
    header = ("country", "industry") + keys
    rows = []
    for ci, country in enumerate(accounts.countries):
        for ki, industry in enumerate(accounts.industries):
            cells = [country, industry]
            cells += [repr(float(accounts.indicator(k)[ci, ki])) for k in keys]
            rows.append(tuple(cells))
    return header, tuple(rows), gap


def panel_export(panel: PanelDataset):
    header = ("country", "year", "variable", "value")
    rows = []
    for name in sorted(panel.names()):
        grid = panel.grid(name)
        for i, unit in enumerate(panel.units):
            for j, period in enumerate(panel.periods):
                value = grid[i, j]
                if not np.isnan(value):
                    rows.append((unit, str(period), name, repr(float(value))))
    return header, tuple(rows)


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------

REGRESS_TABLES = ("model1", "model2", "table6", "table7", "table8", "table9")


def regress_tables(config: RunConfig, panel: PanelDataset, model_id: str):
    if model_id in ("model1", "model2"):
        return [quadratic_model_table(config, panel, model_id)]
    if model_id in ("table6", "table7"):
        return [subsample_table(config, panel, model_id)]
    if model_id == "table8":
        return [time_effects_table(config, panel, side)
                for side, *_ in TABLE8_SIDES]
    if model_id == "table9":
        return [dynamic_iv_table(config, panel, side)
                for side, *_ in TABLE8_SIDES]
    raise SchemaError(f"unknown model id {model_id!r}")


def full_bundle(config: RunConfig) -> ReportBundle:
    accounts = accounts_series(config)
    panel = regression_panel(config, base_panel(config, accounts))
    bundle = ReportBundle(
        inputs=run_inputs(config),
        config_hash=hash_run_inputs(config, run_inputs(config)),
    )
    for model_id in REGRESS_TABLES:
        for table in regress_tables(config, panel, model_id):
            bundle.add(table)
    bundle.add(cd_table(config, panel))
    bundle.add(stats_table(config, panel))
    bundle.add(correlation_table(config, panel, "forward"))
    bundle.add(correlation_table(config, panel, "backward"))
    bundle.add(rank_year_table(config, config.years[0]))
    if len(config.years) > 1:
        bundle.add(rank_year_table(config, config.years[-1]))
    return bundle
