"""End-to-end analysis: ingestion, statistics, resampling and report assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .design import DesignLayout, Hypothesis, all_hypotheses
from .errors import DesignError
from .estimation import Dataset, ModelFit, descriptive_rows, summarize
from .io import CsvDialect, read_long_csv, read_wide_csv
from .resampling import (
    ResamplingConfig,
    ResamplingResult,
    resolve_seed,
    run_resampling,
)
from .statistics import (
    TestResult,
    ats,
    ats_pvalue,
    mats,
    wts,
    wts_pvalue_asymptotic,
)

_CI_TARGET = "(all means)"


@dataclass
class AnalysisRequest:
    """Everything needed to run one analysis from a delimited text file."""

    mode: str  # "rm" | "manova-long" | "manova-wide"
    formula: str
    data_path: str | Path
    subject_column: str | None = None
    n_subplot_factors: int = 1
    iterations: int = 10_000
    alpha: float = 0.05
    resampling: str | None = None  # default: Perm for rm, paramBS otherwise
    seed: int | None = None
    workers: int | None = None
    ci_method: str = "t-quantile"
    decimals: int = 3
    nested_levels_unique: bool = False
    separator: str = ","
    decimal_char: str = "."
    header: bool = True
    drop_incomplete: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("rm", "manova-long", "manova-wide"):
            raise DesignError(f"unknown analysis mode {self.mode!r}")
        if self.decimals < 0:
            raise DesignError("decimals must be nonnegative")
        if self.ci_method not in ("t-quantile", "resampling"):
            raise DesignError(f"unknown CI method {self.ci_method!r}")
        if self.mode in ("rm", "manova-long") and not self.subject_column:
            raise DesignError(f"mode {self.mode!r} requires a subject column")
        if self.resampling is None:
            self.resampling = "Perm" if self.mode == "rm" else "paramBS"


@dataclass
class OutputReport:
    """Assembled analysis results plus the pieces needed to render them."""

    call: str
    mode: str
    alpha: float
    decimals: int
    scheme: str
    iterations: int
    seed: int
    descriptive_header: list[str]
    descriptive_rows: list[list]
    wts_results: list[TestResult]
    ats_results: list[TestResult] | None
    mats_results: list[TestResult] | None
    resampling_results: list[ResamplingResult] = field(repr=False)
    layout: DesignLayout = field(repr=False)
    fit: ModelFit = field(repr=False)
    dataset: Dataset = field(repr=False)
    ci_quantile: float | None = None

    def to_text(self) -> str:
        return render_text(self)

    def to_json_dict(self) -> dict:
        return render_json(self)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def analyze(
    data: Dataset,
    layout: DesignLayout,
    *,
    iterations: int = 10_000,
    alpha: float = 0.05,
    resampling: str | None = None,
    seed: int | None = None,
    workers: int | None = None,
    ci_method: str = "t-quantile",
    decimals: int = 3,
    call: str = "",
) -> OutputReport:
    """Run the full inference pipeline on an in-memory dataset."""
    if resampling is None:
        resampling = "Perm" if layout.mode == "rm" else "paramBS"
    config = ResamplingConfig(
        scheme=resampling,
        iterations=iterations,
        seed=resolve_seed(seed),
        workers=workers,
        alpha=alpha,
    )
    if config.scheme == "Perm" and layout.mode != "rm":
        raise DesignError(
            "the permutation scheme is only available for repeated-measures designs"
        )
    if ci_method == "resampling" and layout.mode != "rm":
        raise DesignError("resampling-based intervals apply to repeated-measures only")

    fit = summarize(data, layout)
    hypotheses = all_hypotheses(layout)

    wts_results: list[TestResult] = []
    ats_results: list[TestResult] | None = [] if layout.mode == "rm" else None
    mats_results: list[TestResult] | None = [] if layout.mode != "rm" else None
    for hyp in hypotheses:
        stat = wts(fit, hyp)
        wts_results.append(
            TestResult(
                effect_name=hyp.effect_name,
                kind="WTS",
                statistic=stat,
                df1=hyp.rank,
                p_asymptotic=wts_pvalue_asymptotic(stat, hyp.rank),
            )
        )
        if layout.mode == "rm":
            statistic, f1, f2 = ats(fit, hyp)
            ats_results.append(
                TestResult(
                    effect_name=hyp.effect_name,
                    kind="ATS",
                    statistic=statistic,
                    df1=f1,
                    df2=f2,
                    p_asymptotic=ats_pvalue(statistic, f1, f2),
                )
            )
        else:
            mats_results.append(
                TestResult(effect_name=hyp.effect_name, kind="MATS", statistic=mats(fit, hyp))
            )

    kinds = ["WTS", "ATS"] if layout.mode == "rm" else ["WTS", "MATS"]
    targets = list(hypotheses)
    if ci_method == "resampling":
        targets.append(_ci_target_hypothesis(layout))
    raw = run_resampling(data, fit, targets, kinds, config, mode="rm" if layout.mode == "rm" else "manova")

    ci_quantile = None
    resampled: list[ResamplingResult] = []
    for res in raw:
        if res.effect_name == _CI_TARGET:
            if res.statistic_kind == "WTS":
                ci_quantile = res.critical_value
            continue
        resampled.append(res)

    by_key = {(r.effect_name, r.statistic_kind): r for r in resampled}
    for result in wts_results:
        entry = by_key.get((result.effect_name, "WTS"))
        result.p_resampling = entry.p_value if entry else None
    for results in (ats_results, mats_results):
        if results is None:
            continue
        for result in results:
            entry = by_key.get((result.effect_name, result.kind))
            result.p_resampling = entry.p_value if entry else None

    header, rows = descriptive_rows(
        fit, layout, alpha=alpha, ci_method=ci_method, wts_quantile=ci_quantile
    )
    return OutputReport(
        call=call,
        mode=layout.mode,
        alpha=alpha,
        decimals=decimals,
        scheme=config.scheme,
        iterations=iterations,
        seed=config.seed,
        descriptive_header=header,
        descriptive_rows=rows,
        wts_results=wts_results,
        ats_results=ats_results,
        mats_results=mats_results,
        resampling_results=resampled,
        layout=layout,
        fit=fit,
        dataset=data,
        ci_quantile=ci_quantile,
    )


def _ci_target_hypothesis(layout: DesignLayout) -> Hypothesis:
    """Omnibus 'all cell-component means equal' target for interval scaling."""
    dim = layout.a * layout.d
    t = linalg.centering(dim)
    return Hypothesis(effect_name=_CI_TARGET, h=t, t=t, rank=dim - 1)


def run_analysis(request: AnalysisRequest) -> OutputReport:
    """Ingest the file named by the request and run the analysis."""
    dialect = CsvDialect(
        separator=request.separator,
        decimal=request.decimal_char,
        header=request.header,
    )
    if request.mode == "manova-wide":
        data, layout = read_wide_csv(
            request.data_path,
            request.formula,
            dialect=dialect,
            nested_levels_unique=request.nested_levels_unique,
            drop_incomplete=request.drop_incomplete,
        )
    else:
        data, layout = read_long_csv(
            request.data_path,
            request.formula,
            request.subject_column,
            mode=request.mode,
            n_subplot_factors=request.n_subplot_factors,
            dialect=dialect,
            nested_levels_unique=request.nested_levels_unique,
            drop_incomplete=request.drop_incomplete,
        )
    return analyze(
        data,
        layout,
        iterations=request.iterations,
        alpha=request.alpha,
        resampling=request.resampling,
        seed=request.seed,
        workers=request.workers,
        ci_method=request.ci_method,
        decimals=request.decimals,
        call=request.formula.strip(),
    )


# -- rendering ---------------------------------------------------------------


def _fmt(value, decimals: int) -> str:
    if value is None:
        return "NA"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return "NA"
    if np.isinf(value):
        return "Inf" if value > 0 else "-Inf"
    return f"{value:.{decimals}f}"


def _table(header: list[str], rows: list[list[str]], indent: str = "") -> str:
    widths = [
        max(len(header[j]), *(len(r[j]) for r in rows)) if rows else len(header[j])
        for j in range(len(header))
    ]
    lines = []
    for record in [header] + rows:
        cells = []
        for j, cell in enumerate(record):
            pad = widths[j] - len(cell)
            cells.append((" " * pad + cell) if j else (cell + " " * pad))
        lines.append((indent + "  ".join(cells)).rstrip())
    return "\n".join(lines)


def render_text(report: OutputReport) -> str:
    dec = report.decimals
    parts = [f"Call:\n{report.call}" if report.call else "Call:\n(in-memory data)"]

    rows = [[_fmt(v, dec) for v in row] for row in report.descriptive_rows]
    parts.append("Descriptive:\n" + _table(list(report.descriptive_header), rows))

    wts_rows = [
        [r.effect_name, _fmt(r.statistic, dec), _fmt(r.df1, 0), _fmt(r.p_asymptotic, dec)]
        for r in report.wts_results
    ]
    parts.append(
        "Wald-Type Statistic (WTS):\n"
        + _table(["", "Test statistic", "df", "p-value"], wts_rows)
    )

    if report.ats_results is not None:
        ats_rows = [
            [
                r.effect_name,
                _fmt(r.statistic, dec),
                _fmt(r.df1, dec),
                _fmt(r.df2, dec),
                _fmt(r.p_asymptotic, dec),
            ]
            for r in report.ats_results
        ]
        parts.append(
            "ANOVA-Type Statistic (ATS):\n"
            + _table(["", "Test statistic", "df1", "df2", "p-value"], ats_rows)
        )

    if report.mats_results is not None:
        mats_rows = [
            [r.effect_name, _fmt(r.statistic, dec)] for r in report.mats_results
        ]
        parts.append(
            "modified ANOVA-Type Statistic (MATS):\n"
            + _table(["", "Test statistic"], mats_rows)
        )

    second = "ATS" if report.ats_results is not None else "MATS"
    second_results = report.ats_results if second == "ATS" else report.mats_results
    resamp_rows = []
    for first_r, second_r in zip(report.wts_results, second_results):
        resamp_rows.append(
            [
                first_r.effect_name,
                _fmt(first_r.p_resampling, dec),
                _fmt(second_r.p_resampling, dec),
            ]
        )
    parts.append(
        "p-values resampling:\n"
        + _table(
            ["", f"{report.scheme} (WTS)", f"{report.scheme} ({second})"], resamp_rows
        )
    )
    return "\n\n".join(parts) + "\n"


def render_json(report: OutputReport) -> dict:
    def result_dict(r: TestResult) -> dict:
        return {
            "effect": r.effect_name,
            "statistic": r.statistic,
            "df1": None if r.df1 is None else float(r.df1),
            "df2": None
            if r.df2 is None
            else ("Inf" if np.isinf(r.df2) else float(r.df2)),
            "p_asymptotic": r.p_asymptotic,
            "p_resampling": r.p_resampling,
        }

    doc = {
        "call": report.call,
        "mode": report.mode,
        "alpha": report.alpha,
        "resampling": {
            "scheme": report.scheme,
            "iterations": report.iterations,
            "seed": report.seed,
        },
        "descriptive": {
            "columns": list(report.descriptive_header),
            "rows": [
                [v if isinstance(v, (str, int)) else float(v) for v in row]
                for row in report.descriptive_rows
            ],
        },
        "wts": [result_dict(r) for r in report.wts_results],
    }
    if report.ats_results is not None:
        doc["ats"] = [result_dict(r) for r in report.ats_results]
    if report.mats_results is not None:
        doc["mats"] = [result_dict(r) for r in report.mats_results]
    if report.ci_quantile is not None:
        doc["ci_wts_quantile"] = report.ci_quantile
    doc["critical_values"] = {
        f"{r.effect_name}|{r.statistic_kind}": r.critical_value
        for r in report.resampling_results
    }
    return doc
