"""File ingestion: inter-country IO tables, emissions vectors, indicator
panels, and run configuration.

All files are UTF-8, comma-delimited, LF-terminated, decimal-point only.
The IO-table format carries a small metadata block ahead of the matrix:

    #countries: AAA,BBB
    #industries: D10T12,D35
    #year: 1995
    row,AAA:D10T12,...,FD:AAA,FD:BBB,OUT
    AAA:D10T12,<Z values...>,<final demand per destination>,<gross output>

Each data row holds the intermediate-use row, final demand aggregated to
one column per destination country, and gross output last. Value added is
the column residual, so the file fully determines the table.

Writers emit a canonical form (shortest round-trip float repr), which
makes load -> save -> load byte-stable. Writes go to a temp file in the
target directory and are renamed into place.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DuplicateKey,
    MissingRow,
    NegativeEmission,
    SchemaError,
    UnknownVariableName,
)
from .mrio import EmissionIntensity, IcioTable
from .panel import DEFAULT_MANUFACTURING, INDICATOR_VARIABLES

DATA_DIR_ENV = "GVCCARBON_DATA_DIR"

#: Accepted spellings for indicator codes, normalized to the canonical one.
VARIABLE_ALIASES = {
    "STR": "ESI",
    "STRINGENCY": "ESI",
    "TRADE_OPENNESS": "TO",
    "GDP_PER_CAPITA": "GDP",
}


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value: float) -> str:
    """Canonical shortest float repr; integers print without exponent."""
    value = float(value)
    if value == 0.0:
        return "0"
    return repr(value)


def _parse_float(token: str, where: str) -> float:
    token = token.strip()
    try:
        value = float(token)
    except ValueError:
        raise SchemaError(f"{where}: cannot parse {token!r} as a number") from None
    if not math.isfinite(value):
        raise SchemaError(f"{where}: non-finite value {token!r}")
    return value


def _parse_int(token: str, where: str) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise SchemaError(f"{where}: {token!r} is not an integer") from None


# ---------------------------------------------------------------------------
# ICIO tables
# ---------------------------------------------------------------------------

def load_icio(path) -> IcioTable:
    """Parse and validate one inter-country IO table file."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such file: {path}")
    meta = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, value = line[1:].partition(":")
        meta[key.strip()] = value.strip()
    else:
        raise SchemaError(f"{path}: no matrix body found")

    for key in ("countries", "industries"):
        if key not in meta:
            raise SchemaError(f"{path}: metadata line '#{key}:' is required")
    countries = tuple(c.strip() for c in meta["countries"].split(",") if c.strip())
    industries = tuple(s.strip() for s in meta["industries"].split(",") if s.strip())
    year = _parse_int(meta["year"], f"{path} #year") if "year" in meta else None

    n, k = len(countries), len(industries)
    nk = n * k
    labels = [f"{c}:{s}" for c in countries for s in industries]
    expected_header = ["row"] + labels + [f"FD:{c}" for c in countries] + ["OUT"]

    rows = list(csv.reader(lines[body_start:]))
    if not rows or rows[0] != expected_header:
        raise SchemaError(
            f"{path}: header must declare {len(expected_header)} columns "
            "(row, one per country-industry, one FD per country, OUT)"
        )
    data_rows = [r for r in rows[1:] if r]
    if len(data_rows) != nk:
        raise SchemaError(f"{path}: expected {nk} data rows, found {len(data_rows)}")

    Z = np.empty((nk, nk))
    F = np.empty((nk, n))
    x = np.empty(nk)
    for i, row in enumerate(data_rows):
        if len(row) != len(expected_header):
            raise SchemaError(
                f"{path} row {i + 1}: {len(row)} columns, expected "
                f"{len(expected_header)}"
            )
        if row[0] != labels[i]:
            raise SchemaError(
                f"{path} row {i + 1}: label {row[0]!r}, expected {labels[i]!r}"
            )
        where = f"{path} row {labels[i]}"
        values = [_parse_float(tok, where) for tok in row[1:]]
        Z[i] = values[:nk]
        F[i] = values[nk:nk + n]
        x[i] = values[-1]
    return IcioTable(countries, industries, Z, F, x, year=year)


def save_icio(icio: IcioTable, path):
    """Write a table in the canonical on-disk form."""
    out = []
    out.append("#countries: " + ",".join(icio.countries))
    out.append("#industries: " + ",".join(icio.industries))
    if icio.year is not None:
        out.append(f"#year: {icio.year}")
    labels = icio.row_labels()
    out.append(",".join(["row"] + labels
                        + [f"FD:{c}" for c in icio.countries] + ["OUT"]))
    for i, label in enumerate(labels):
        cells = ([_fmt(v) for v in icio.Z[i]]
                 + [_fmt(v) for v in icio.F[i]] + [_fmt(icio.x[i])])
        out.append(",".join([label] + cells))
    _atomic_write(path, "\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Emissions
# ---------------------------------------------------------------------------

EMISSIONS_HEADER = ["country", "industry", "tonnes"]


def load_emissions_vector(path, icio: IcioTable) -> EmissionIntensity:
    """Direct emissions per (country, industry), converted to intensities.

    Intensity is tonnes per thousand USD of gross output; zero-output
    industries get zero intensity so block indexing stays stable.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such file: {path}")
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != EMISSIONS_HEADER:
        raise SchemaError(f"{path}: header must be {','.join(EMISSIONS_HEADER)}")
    seen = {}
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise SchemaError(f"{path} line {r}: expected 3 columns")
        key = (row[0].strip(), row[1].strip())
        if key in seen:
            raise DuplicateKey(f"{path}: duplicate record for {key}")
        value = _parse_float(row[2], f"{path} line {r}")
        if value < 0:
            raise NegativeEmission(f"{path}: negative emissions for {key}")
        seen[key] = value

    tonnes = np.empty(len(icio.x))
    for i, (c, s) in enumerate((c, s) for c in icio.countries
                               for s in icio.industries):
        if (c, s) not in seen:
            raise MissingRow(f"{path}: no emissions record for ({c}, {s})")
        tonnes[i] = seen[(c, s)]
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(icio.x > 0, tonnes / np.where(icio.x > 0, icio.x, 1.0), 0.0)
    return EmissionIntensity(icio.countries, icio.industries, e)


def save_emissions(icio: IcioTable, tonnes, path):
    out = [",".join(EMISSIONS_HEADER)]
    idx = 0
    for c in icio.countries:
        for s in icio.industries:
            out.append(f"{c},{s},{_fmt(tonnes[idx])}")
            idx += 1
    _atomic_write(path, "\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Indicator panels
# ---------------------------------------------------------------------------

INDICATOR_HEADER = ["country", "year", "variable", "value", "unit"]


@dataclass(frozen=True)
class IndicatorPanel:
    """Long-format indicator records keyed by (country, year, variable)."""

    records: tuple  # (country, year, variable, value, unit)

    def __post_init__(self):
        index = {}
        for country, year, variable, value, unit in self.records:
            key = (country, int(year), variable)
            if key in index:
                raise DuplicateKey(f"duplicate indicator record {key}")
            index[key] = float(value)
        object.__setattr__(self, "_index", index)

    def variable_names(self):
        return tuple(sorted({r[2] for r in self.records}))

    def value(self, country, year, variable):
        return self._index.get((country, int(year), variable))

    def countries(self):
        return tuple(sorted({r[0] for r in self.records}))

    def years(self):
        return tuple(sorted({int(r[1]) for r in self.records}))


def normalize_variable_name(name: str, passthrough: bool = False) -> str:
    canon = name.strip().upper()
    canon = VARIABLE_ALIASES.get(canon, canon)
    if canon in INDICATOR_VARIABLES:
        return canon
    if passthrough:
        return canon
    raise UnknownVariableName(
        f"unknown indicator {name!r}; expected one of {INDICATOR_VARIABLES} "
        "(pass-through disabled)"
    )


def load_indicator_panel(path, passthrough: bool = False) -> IndicatorPanel:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such file: {path}")
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != INDICATOR_HEADER:
        raise SchemaError(f"{path}: header must be {','.join(INDICATOR_HEADER)}")
    records = []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise SchemaError(f"{path} line {r}: expected 5 columns")
        country = row[0].strip()
        year = _parse_int(row[1], f"{path} line {r}")
        variable = normalize_variable_name(row[2], passthrough)
        value = _parse_float(row[3], f"{path} line {r}")
        records.append((country, year, variable, value, row[4].strip()))
    return IndicatorPanel(tuple(records))


def save_indicator_panel(indicators: IndicatorPanel, path):
    out = [",".join(INDICATOR_HEADER)]
    for country, year, variable, value, unit in sorted(indicators.records):
        out.append(f"{country},{year},{variable},{_fmt(value)},{unit}")
    _atomic_write(path, "\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

FGLS_SCHEMES = ("iid", "panel-heteroscedastic", "ar1",
                "ar1+panel-heteroscedastic")
INSTRUMENT_VARIANTS = ("lagged-difference", "lagged-level")


@dataclass(frozen=True)
class RunConfig:
    """Paths, sample definition, and estimation switches for one run."""

    data_dir: Path
    icio_pattern: str
    emissions_pattern: str
    indicators: str
    years: tuple
    sample: tuple
    oecd: tuple
    manufacturing: tuple = DEFAULT_MANUFACTURING
    log_base: float = 10.0
    # Opt-in additive shift applied to the stringency index before its
    # log; by default non-positive levels are a hard failure.
    esi_shift: float = None
    fgls_scheme: str = "ar1+panel-heteroscedastic"
    instrument: str = "lagged-difference"
    output_dir: Path = Path("out")
    source_path: Path = None

    def __post_init__(self):
        if not self.years:
            raise ConfigError("config declares no years")
        if not self.sample:
            raise ConfigError("config declares no sample countries")
        extra = set(self.oecd) - set(self.sample)
        if extra:
            raise ConfigError(
                f"OECD flags name countries outside the sample: {sorted(extra)}"
            )
        if self.fgls_scheme not in FGLS_SCHEMES:
            raise ConfigError(f"unknown fgls_scheme {self.fgls_scheme!r}")
        if self.instrument not in INSTRUMENT_VARIANTS:
            raise ConfigError(f"unknown instrument {self.instrument!r}")

    @property
    def non_oecd(self):
        return tuple(c for c in self.sample if c not in set(self.oecd))

    def icio_path(self, year) -> Path:
        return self.data_dir / self.icio_pattern.format(year=year)

    def emissions_path(self, year) -> Path:
        return self.data_dir / self.emissions_pattern.format(year=year)

    @property
    def indicators_path(self) -> Path:
        return self.data_dir / self.indicators


def _parse_years(text: str):
    text = text.strip()
    if "-" in text and "," not in text:
        lo, _, hi = text.partition("-")
        lo, hi = _parse_int(lo, "years"), _parse_int(hi, "years")
        if hi < lo:
            raise ConfigError(f"year range {text!r} is reversed")
        return tuple(range(lo, hi + 1))
    return tuple(_parse_int(tok, "years") for tok in text.split(",") if tok.strip())


def _parse_list(text: str):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def parse_log_base(token) -> float:
    token = str(token).strip().lower()
    if token in ("e", "ln", "natural"):
        return math.e
    try:
        base = float(token)
    except ValueError:
        raise ConfigError(f"log base must be a number or 'e', got {token!r}") from None
    if base <= 0 or base == 1:
        raise ConfigError(f"log base {base} is not usable")
    return base


def load_config(path, data_dir=None, output_dir=None, log_base=None) -> RunConfig:
    """Read a sectioned key = value config file, applying CLI overrides.

    The data directory resolves as: explicit override, then the config's
    own value, then the GVCCARBON_DATA_DIR environment variable, then the
    config file's directory.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such config file: {path}")
    parser = ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except ConfigParserError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def get(section, option, fallback=None):
        return parser.get(section, option, fallback=fallback)

    for section in ("data", "sample"):
        if not parser.has_section(section):
            raise ConfigError(f"{path}: missing [{section}] section")

    if data_dir is not None:
        base = Path(data_dir)
    elif get("data", "dir") is not None:
        base = Path(get("data", "dir"))
        if not base.is_absolute():
            base = path.parent / base
    elif os.environ.get(DATA_DIR_ENV):
        base = Path(os.environ[DATA_DIR_ENV])
    else:
        base = path.parent

    years_text = get("data", "years")
    if years_text is None:
        raise ConfigError(f"{path}: [data] years is required")
    sample = _parse_list(get("sample", "countries", ""))
    oecd = _parse_list(get("sample", "oecd", ""))
    manufacturing = _parse_list(get("variables", "manufacturing", ""))

    out = Path(output_dir) if output_dir is not None else Path(
        get("output", "dir", "out")
    )
    shift_text = get("variables", "esi_shift")
    return RunConfig(
        data_dir=base,
        icio_pattern=get("data", "icio_pattern", "icio_{year}.csv"),
        emissions_pattern=get("data", "emissions_pattern", "emissions_{year}.csv"),
        indicators=get("data", "indicators", "indicators.csv"),
        years=_parse_years(years_text),
        sample=sample,
        oecd=oecd,
        manufacturing=manufacturing or DEFAULT_MANUFACTURING,
        log_base=parse_log_base(log_base if log_base is not None
                                else get("variables", "log_base", "10")),
        esi_shift=None if shift_text is None
        else _parse_float(shift_text, f"{path} esi_shift"),
        fgls_scheme=get("estimation", "fgls_scheme", "ar1+panel-heteroscedastic"),
        instrument=get("estimation", "instrument", "lagged-difference"),
        output_dir=out,
        source_path=path,
    )


def check_sample(config: RunConfig, icio: IcioTable):
    """Every sampled country must exist in the loaded table."""
    missing = set(config.sample) - set(icio.countries)
    if missing:
        raise ConfigError(
            f"sample countries missing from the IO table: {sorted(missing)}"
        )
