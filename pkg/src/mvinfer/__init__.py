"""Heteroscedasticity-robust inference for factorial multivariate and
repeated-measures designs.

The package tests mean hypotheses in general factorial layouts without
assuming normality, equal covariance matrices across groups, or any specific
within-subject correlation structure.  Three quadratic-form statistics are
provided (Wald type, ANOVA type, modified ANOVA type) with asymptotic,
F-approximated and resampling-based p-values (parametric bootstrap, wild
bootstrap with random signs, and pooled permutation for repeated measures).
"""

from .analysis import AnalysisRequest, OutputReport, analyze, run_analysis
from .confidence import (
    ConfidenceEllipsoid,
    ConfidenceInterval,
    conf_ellipsoid,
    resampling_interval,
    t_interval,
    two_sample_difference_contrast,
)
from .design import (
    DesignLayout,
    FactorSpec,
    Hypothesis,
    all_hypotheses,
    hypothesis_for_effect,
    rm_profile_matrices,
)
from .errors import DataError, DesignError, MvinferError
from .estimation import CellSummary, Dataset, ModelFit, dataset_from_cell_arrays, summarize
from .formula import ParsedFormula, parse_formula
from .io import CsvDialect, read_long_csv, read_wide_csv
from .plotting import emit_plot_data, marginal_table, write_ellipsoid_svg
from .resampling import ResamplingConfig, ResamplingResult, run_resampling
from .statistics import TestResult, ats, mats, wts, wts_pvalue_asymptotic

__version__ = "0.1.0"

__all__ = [
    "AnalysisRequest",
    "CellSummary",
    "ConfidenceEllipsoid",
    "ConfidenceInterval",
    "CsvDialect",
    "DataError",
    "Dataset",
    "DesignError",
    "DesignLayout",
    "FactorSpec",
    "Hypothesis",
    "ModelFit",
    "MvinferError",
    "OutputReport",
    "ParsedFormula",
    "ResamplingConfig",
    "ResamplingResult",
    "TestResult",
    "all_hypotheses",
    "analyze",
    "ats",
    "conf_ellipsoid",
    "dataset_from_cell_arrays",
    "emit_plot_data",
    "hypothesis_for_effect",
    "marginal_table",
    "mats",
    "parse_formula",
    "read_long_csv",
    "read_wide_csv",
    "resampling_interval",
    "rm_profile_matrices",
    "run_analysis",
    "run_resampling",
    "summarize",
    "t_interval",
    "two_sample_difference_contrast",
    "write_ellipsoid_svg",
    "wts",
    "wts_pvalue_asymptotic",
]
