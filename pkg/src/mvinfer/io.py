"""Delimited-text ingestion for long and wide data layouts.

Long format holds one row per measurement, wide format one row per subject.
Both readers return the canonical ``Dataset`` (one d-vector per subject,
subjects ordered by cell) together with the ``DesignLayout`` derived from the
observed factor levels.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .design import (
    DesignLayout,
    build_crossed_layout,
    build_nested_layout,
    level_sort_key,
    sorted_levels,
)
from .errors import DataError, DesignError
from .estimation import Dataset
from .formula import ParsedFormula, parse_formula

_MISSING = {"", "na", "nan", "n/a"}


@dataclass
class CsvDialect:
    separator: str = ","
    decimal: str = "."
    header: bool = True

    def __post_init__(self) -> None:
        if len(self.separator) != 1:
            raise DataError("CSV separator must be a single character")
        if len(self.decimal) != 1:
            raise DataError("decimal character must be a single character")
        if self.separator == self.decimal:
            raise DataError("CSV separator and decimal character must differ")


def read_table(path, dialect: CsvDialect) -> tuple[list[str], list[list[str]]]:
    """Raw (column names, string rows).  Headerless files get V1..Vn names."""
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle, delimiter=dialect.separator)
        rows = [[cell.strip() for cell in row] for row in reader if row]
    if not rows:
        raise DataError(f"{path} is empty")
    if dialect.header:
        columns, body = rows[0], rows[1:]
    else:
        columns = [f"V{i + 1}" for i in range(len(rows[0]))]
        body = rows
    if len(set(columns)) != len(columns):
        raise DataError("duplicate column names in header")
    for lineno, row in enumerate(body, start=2 if dialect.header else 1):
        if len(row) != len(columns):
            raise DataError(
                f"line {lineno} has {len(row)} fields, expected {len(columns)}"
            )
    return columns, body


def _column_index(columns: list[str], name: str) -> int:
    try:
        return columns.index(name)
    except ValueError:
        raise DataError(f"column {name!r} not found in the data file") from None


def _parse_number(text: str, dialect: CsvDialect, column: str, lineno: int) -> float | None:
    """A float, or None when the field is a missing-value marker."""
    if text.lower() in _MISSING:
        return None
    cleaned = text.replace(dialect.decimal, ".") if dialect.decimal != "." else text
    try:
        return float(cleaned)
    except ValueError:
        raise DataError(
            f"cannot parse {text!r} in column {column!r}, line {lineno} as a number"
        ) from None


def _require_label(text: str, column: str, lineno: int) -> str:
    if text.lower() in _MISSING:
        raise DataError(f"missing factor level in column {column!r}, line {lineno}")
    return text


def _nested_cells(
    parsed: ParsedFormula,
    subject_labels: dict[str, tuple[str, ...]],
    nested_levels_unique: bool,
) -> tuple[list[tuple[str, ...]], tuple[int, ...], dict[str, list[str]]]:
    """Cell enumeration for balanced nested chains, plus per-stage counts."""
    chain = parsed.nested_chain
    observed = sorted(set(subject_labels.values()), key=lambda c: tuple(map(level_sort_key, c)))

    if nested_levels_unique:
        # Child labels are globally unique; each must sit under one parent.
        for stage in range(1, len(chain)):
            parent_of: dict[str, tuple[str, ...]] = {}
            for combo in observed:
                parent, child = combo[:stage], combo[stage]
                if parent_of.setdefault(child, parent) != parent:
                    raise DataError(
                        f"level {child!r} of nested factor {chain[stage]!r} "
                        "appears under more than one parent level"
                    )
        cells = observed
    else:
        # The same child label set must recur under every parent level.
        for stage in range(1, len(chain)):
            children: dict[tuple[str, ...], set[str]] = {}
            for combo in observed:
                children.setdefault(combo[:stage], set()).add(combo[stage])
            sets = list(children.values())
            if any(s != sets[0] for s in sets):
                raise DataError(
                    f"levels of nested factor {chain[stage]!r} differ between parent "
                    "levels; set nested_levels_unique for uniquely named levels"
                )
        cells = observed

    counts: list[int] = []
    groups: list[tuple[tuple[str, ...], ...]] = [()]
    for stage in range(len(chain)):
        sizes = set()
        next_groups = []
        for prefix in {c[:stage] for c in cells}:
            members = sorted_levels(c[stage] for c in cells if c[:stage] == prefix)
            sizes.add(len(members))
            next_groups.append(members)
        if len(sizes) != 1:
            raise DesignError(
                "only balanced nested designs are supported (equal level counts "
                f"of {chain[stage]!r} under every parent level)"
            )
        counts.append(sizes.pop())
        groups = next_groups
    if any(count < 2 for count in counts):
        raise DesignError("every nesting stage needs at least two levels")

    factor_levels = {name: sorted_levels(c[i] for c in cells) for i, name in enumerate(chain)}
    return cells, tuple(counts), factor_levels


def _finalize(
    parsed: ParsedFormula,
    layout: DesignLayout,
    subject_cells: dict[str, tuple[str, ...]],
    subject_values: dict[str, np.ndarray],
) -> tuple[Dataset, DesignLayout]:
    cell_index = {cell: i for i, cell in enumerate(layout.cells)}
    order = sorted(
        subject_values,
        key=lambda s: (cell_index[subject_cells[s]], level_sort_key(s)),
    )
    values = np.array([subject_values[s] for s in order], dtype=float)
    cell_of = np.array([cell_index[subject_cells[s]] for s in order], dtype=int)
    data = Dataset(
        subjects=order, cell_of=cell_of, values=values, a=layout.a, d=layout.d
    )
    return data, layout


def read_long_csv(
    path,
    formula: str,
    subject_column: str,
    *,
    mode: str = "manova-long",
    n_subplot_factors: int = 1,
    dialect: CsvDialect | None = None,
    nested_levels_unique: bool = False,
    drop_incomplete: bool = False,
) -> tuple[Dataset, DesignLayout]:
    """Ingest a long-format file (one row per measurement).

    For repeated-measures mode the last ``n_subplot_factors`` factors of the
    formula vary within subject and span the response components; otherwise
    each subject's rows enumerate the response dimensions in file order.
    Incomplete subjects raise ``DataError`` naming the subject, or are dropped
    with a warning when ``drop_incomplete`` is set.
    """
    dialect = dialect or CsvDialect()
    parsed = parse_formula(formula, mode)
    columns, body = read_table(path, dialect)

    resp_idx = _column_index(columns, parsed.response)
    subj_idx = _column_index(columns, subject_column)
    factor_idx = {name: _column_index(columns, name) for name in parsed.factors}

    if mode == "rm":
        if not 1 <= n_subplot_factors <= len(parsed.factors):
            raise DesignError(
                f"number of sub-plot factors must be between 1 and "
                f"{len(parsed.factors)}, got {n_subplot_factors}"
            )
        whole_names = parsed.factors[: len(parsed.factors) - n_subplot_factors]
        sub_names = parsed.factors[len(parsed.factors) - n_subplot_factors :]
    else:
        whole_names = parsed.factors
        sub_names = []

    first_line = 2 if dialect.header else 1
    # subject -> whole-plot labels, and subject -> list of (key, value, lineno)
    subject_whole: dict[str, tuple[str, ...]] = {}
    records: dict[str, list[tuple[tuple[str, ...], float | None, int]]] = {}
    for lineno, row in enumerate(body, start=first_line):
        subject = _require_label(row[subj_idx], subject_column, lineno)
        whole = tuple(
            _require_label(row[factor_idx[name]], name, lineno) for name in whole_names
        )
        sub = tuple(
            _require_label(row[factor_idx[name]], name, lineno) for name in sub_names
        )
        value = _parse_number(row[resp_idx], dialect, parsed.response, lineno)
        known = subject_whole.setdefault(subject, whole)
        if known != whole:
            raise DataError(
                f"subject {subject!r} appears in more than one group "
                f"({':'.join(known)} and {':'.join(whole)})"
            )
        records.setdefault(subject, []).append((sub, value, lineno))

    if mode == "rm":
        sub_levels = {name: [] for name in sub_names}
        for recs in records.values():
            for sub, _, _ in recs:
                for name, lvl in zip(sub_names, sub):
                    sub_levels[name].append(lvl)
        sub_levels = {name: sorted_levels(v) for name, v in sub_levels.items()}
        layout = _layout_for_long(
            parsed, whole_names, subject_whole, sub_levels, nested_levels_unique, d=None
        )
        component_index = {c: i for i, c in enumerate(layout.components)}
        subject_values = _collect_rm_values(records, component_index, drop_incomplete)
    else:
        d = max(len(recs) for recs in records.values())
        layout = _layout_for_long(
            parsed, whole_names, subject_whole, {}, nested_levels_unique, d=d
        )
        subject_values = _collect_long_manova_values(records, d, drop_incomplete)

    subject_cells = {s: subject_whole[s] for s in subject_values}
    _check_no_empty_cells(layout, subject_cells)
    return _finalize(parsed, layout, subject_cells, subject_values)


def _layout_for_long(parsed, whole_names, subject_whole, sub_levels, nested_levels_unique, d):
    if parsed.structure == "nested":
        cells, counts, factor_levels = _nested_cells(
            parsed, subject_whole, nested_levels_unique
        )
        return build_nested_layout(
            parsed, cells, counts, factor_levels,
            response_names=[str(s + 1) for s in range(d)],
        )
    whole_levels = {
        name: sorted_levels(c[pos] for c in subject_whole.values())
        for pos, name in enumerate(whole_names)
    }
    response_names = [str(s + 1) for s in range(d)] if d is not None else None
    return build_crossed_layout(parsed, whole_levels, sub_levels, response_names)


def _collect_rm_values(records, component_index, drop_incomplete):
    d = len(component_index)
    subject_values: dict[str, np.ndarray] = {}
    dropped: list[str] = []
    for subject, recs in records.items():
        vec = np.full(d, np.nan)
        seen = set()
        incomplete = False
        for sub, value, lineno in recs:
            if sub in seen:
                raise DataError(
                    f"duplicate measurement for subject {subject!r} at "
                    f"{':'.join(sub) or 'the response'} (line {lineno})"
                )
            seen.add(sub)
            if value is None:
                incomplete = True
            else:
                vec[component_index[sub]] = value
        if incomplete or len(seen) < d or np.any(np.isnan(vec)):
            if drop_incomplete:
                dropped.append(subject)
                continue
            raise DataError(
                f"subject {subject!r} is incomplete: expected one value per "
                f"within-subject combination ({d} in total)"
            )
        subject_values[subject] = vec
    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} incomplete subject(s): {', '.join(sorted(dropped))}",
            stacklevel=3,
        )
    if not subject_values:
        raise DataError("no complete subjects remain")
    return subject_values


def _collect_long_manova_values(records, d, drop_incomplete):
    subject_values: dict[str, np.ndarray] = {}
    dropped: list[str] = []
    for subject, recs in records.items():
        values = [value for _, value, _ in recs]
        if len(values) != d or any(v is None for v in values):
            if drop_incomplete:
                dropped.append(subject)
                continue
            raise DataError(
                f"subject {subject!r} has {len([v for v in values if v is not None])} "
                f"response values, expected {d}"
            )
        subject_values[subject] = np.array(values, dtype=float)
    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} incomplete subject(s): {', '.join(sorted(dropped))}",
            stacklevel=3,
        )
    if not subject_values:
        raise DataError("no complete subjects remain")
    return subject_values


def read_wide_csv(
    path,
    formula: str,
    *,
    dialect: CsvDialect | None = None,
    nested_levels_unique: bool = False,
    drop_incomplete: bool = False,
) -> tuple[Dataset, DesignLayout]:
    """Ingest a wide-format file (one row per subject).

    Response components come from the cbind(...) clause in the given order;
    subjects are numbered by row.
    """
    dialect = dialect or CsvDialect()
    parsed = parse_formula(formula, "manova-wide")
    columns, body = read_table(path, dialect)

    resp_idx = {name: _column_index(columns, name) for name in parsed.responses}
    factor_idx = {name: _column_index(columns, name) for name in parsed.factors}

    first_line = 2 if dialect.header else 1
    subject_whole: dict[str, tuple[str, ...]] = {}
    subject_values: dict[str, np.ndarray] = {}
    dropped: list[str] = []
    for lineno, row in enumerate(body, start=first_line):
        subject = str(lineno - first_line + 1)
        whole = tuple(
            _require_label(row[factor_idx[name]], name, lineno) for name in parsed.factors
        )
        values = [
            _parse_number(row[resp_idx[name]], dialect, name, lineno)
            for name in parsed.responses
        ]
        subject_whole[subject] = whole
        if any(v is None for v in values):
            if drop_incomplete:
                dropped.append(subject)
                continue
            missing = [n for n, v in zip(parsed.responses, values) if v is None]
            raise DataError(
                f"subject {subject} (line {lineno}) is missing response "
                f"value(s) in {', '.join(missing)}"
            )
        subject_values[subject] = np.array(values, dtype=float)
    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} incomplete subject(s): {', '.join(sorted(dropped))}",
            stacklevel=2,
        )
    if not subject_values:
        raise DataError("no complete subjects remain")

    kept_whole = {s: subject_whole[s] for s in subject_values}
    if parsed.structure == "nested":
        cells, counts, factor_levels = _nested_cells(parsed, kept_whole, nested_levels_unique)
        layout = build_nested_layout(parsed, cells, counts, factor_levels, parsed.responses)
    else:
        whole_levels = {
            name: sorted_levels(c[i] for c in kept_whole.values())
            for i, name in enumerate(parsed.factors)
        }
        layout = build_crossed_layout(parsed, whole_levels, None, parsed.responses)

    _check_no_empty_cells(layout, kept_whole)
    return _finalize(parsed, layout, kept_whole, subject_values)


def _check_no_empty_cells(layout: DesignLayout, subject_cells) -> None:
    present = set(subject_cells.values())
    for cell in layout.cells:
        if cell not in present:
            raise DataError(f"cell {':'.join(cell)} has no observations")
