"""Report tables: rendering, bundling, provenance, and expectation checks.

A :class:`Table` is a named grid of strings plus provenance (which library
operations produced it). Bundles write each table as plain text, CSV, and
JSON, and a manifest records input digests, the config hash, and a
determinism hash over everything except the timestamp line, so identical
inputs yield byte-identical table files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import CheckFailure, SchemaError
from .ingest import _atomic_write, _parse_float

DEFAULT_CHECK_TOL = 5e-3


@dataclass(frozen=True)
class Table:
    name: str
    caption: str
    columns: tuple
    rows: tuple  # tuple of row tuples, all strings
    source_ops: tuple = ()
    notes: tuple = ()
    stacked_p: bool = False  # text form prints the p-value under the cell

    def __post_init__(self):
        rows = tuple(tuple(str(c) for c in row) for row in self.rows)
        for row in rows:
            if len(row) != len(self.columns):
                raise SchemaError(
                    f"table {self.name}: row width {len(row)} != "
                    f"{len(self.columns)} columns"
                )
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "source_ops", tuple(self.source_ops))
        object.__setattr__(self, "notes", tuple(self.notes))

    def cell(self, row_label: str, column: str) -> str:
        if column not in self.columns:
            raise KeyError(f"table {self.name} has no column {column!r}")
        j = self.columns.index(column)
        for row in self.rows:
            if row[0] == row_label:
                return row[j]
        raise KeyError(f"table {self.name} has no row {row_label!r}")


_P_SUFFIX = re.compile(r"\(([^)]*)\)\s*$")


def split_cell(text: str):
    """Split a rendered cell into (numeric part, trailing '(p)') strings."""
    text = text.strip()
    match = _P_SUFFIX.search(text)
    p_text = None
    if match and not text.startswith("("):
        p_text = match.group(0)
        text = text[: match.start()].strip()
    return text, p_text


def parse_cell_number(text: str) -> float:
    """Numeric value of a rendered cell such as '0.22**' or '(0.00)'."""
    cleaned = text.strip().strip("*")
    cleaned, _ = split_cell(cleaned)
    cleaned = cleaned.strip().strip("*")
    if cleaned.startswith("(") and cleaned.endswith(")"):
        cleaned = cleaned[1:-1]
    if cleaned in ("", "-"):
        raise ValueError(f"cell {text!r} holds no number")
    return float(cleaned)


# ---------------------------------------------------------------------------
# Renderers
# ---------------------------------------------------------------------------

def to_text(table: Table) -> str:
    columns = list(table.columns)
    display_rows = []
    for row in table.rows:
        if table.stacked_p:
            tops, bottoms = [row[0]], [""]
            has_p = False
            for cell in row[1:]:
                value, p_text = split_cell(cell)
                tops.append(value)
                bottoms.append(p_text or "")
                has_p = has_p or p_text is not None
            display_rows.append(tops)
            if has_p:
                display_rows.append(bottoms)
        else:
            display_rows.append(list(row))
    widths = [
        max(len(columns[j]), *(len(r[j]) for r in display_rows), 1)
        if display_rows else len(columns[j])
        for j in range(len(columns))
    ]
    rule = "-" * (sum(widths) + 2 * (len(columns) - 1))
    out = [table.caption, rule,
           "  ".join(c.ljust(w) for c, w in zip(columns, widths)), rule]
    for row in display_rows:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    out.append(rule)
    out.extend(f"Note: {note}" for note in table.notes)
    return "\n".join(out) + "\n"


def to_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerows(table.rows)
    return buffer.getvalue()


def to_payload(table: Table) -> dict:
    return {
        "name": table.name,
        "caption": table.caption,
        "columns": list(table.columns),
        "rows": [list(r) for r in table.rows],
        "source_ops": list(table.source_ops),
        "notes": list(table.notes),
    }


def to_json(table: Table) -> str:
    return json.dumps(to_payload(table), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------

@dataclass
class ReportBundle:
    tables: dict = field(default_factory=dict)
    inputs: tuple = ()
    config_hash: str = ""

    def add(self, table: Table):
        if table.name in self.tables:
            raise SchemaError(f"duplicate table name {table.name!r}")
        self.tables[table.name] = table

    def determinism_hash(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "tables": {k: to_payload(v) for k, v in sorted(self.tables.items())},
        }
        canonical = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(canonical).hexdigest()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, table in sorted(self.tables.items()):
            _atomic_write(out / f"{name}.txt", to_text(table))
            _atomic_write(out / f"{name}.csv", to_csv(table))
            _atomic_write(out / f"{name}.json", to_json(table))
        manifest = {
            "determinism_hash": self.determinism_hash(),
            "config_hash": self.config_hash,
            "inputs": [str(p) for p in self.inputs],
            "tables": {
                name: {"caption": t.caption, "source_ops": list(t.source_ops)}
                for name, t in sorted(self.tables.items())
            },
            # Excluded from the determinism hash by construction.
            "generated_at": datetime.now(timezone.utc).isoformat(),
        }
        _atomic_write(out / "manifest.json",
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return out


def hash_run_inputs(config, paths) -> str:
    digest = hashlib.sha256()
    if config.source_path is not None and Path(config.source_path).exists():
        digest.update(Path(config.source_path).read_bytes())
    for path in sorted(str(p) for p in paths):
        p = Path(path)
        digest.update(path.encode())
        if p.exists():
            digest.update(p.read_bytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Expectation checks
# ---------------------------------------------------------------------------

EXPECTATION_HEADER = ["table", "row", "column", "value", "tol"]


def load_expectations(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such expectation file: {path}")
    with path.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or [c.strip() for c in rows[0]] != EXPECTATION_HEADER:
        raise SchemaError(
            f"{path}: header must be {','.join(EXPECTATION_HEADER)}"
        )
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise SchemaError(f"{path} line {i}: expected 5 columns")
        tol = DEFAULT_CHECK_TOL if not row[4].strip() else \
            _parse_float(row[4], f"{path} line {i}")
        out.append((row[0].strip(), row[1].strip(), row[2].strip(),
                    _parse_float(row[3], f"{path} line {i}"), tol))
    return out


def check_expectations(tables: dict, expectations) -> list:
    """Compare produced cells against expected values; return failure lines."""
    failures = []
    for name, row_label, column, expected, tol in expectations:
        where = f"{name}[{row_label!r}, {column!r}]"
        table = tables.get(name)
        if table is None:
            failures.append(f"{where}: table was not produced")
            continue
        try:
            cell = table.cell(row_label, column)
            actual = parse_cell_number(cell)
        except (KeyError, ValueError) as exc:
            failures.append(f"{where}: {exc}")
            continue
        if abs(actual - expected) > tol:
            failures.append(
                f"{where}: got {actual:g}, expected {expected:g} "
                f"(tolerance {tol:g})"
            )
    return failures


def require_expectations(tables: dict, path):
    failures = check_expectations(tables, load_expectations(path))
    if failures:
        raise CheckFailure(
            "expectation check failed:\n  " + "\n  ".join(failures)
        )
