"""Per-cell summaries and the pooled mean / covariance quantities.

The canonical in-memory form of a data set is one d-vector per subject plus
the subject's whole-plot cell index; everything downstream (statistics,
resampling, confidence) consumes the ``ModelFit`` produced here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from .confidence import t_interval
from .design import DesignLayout
from .errors import DataError


@dataclass
class Dataset:
    """Observations in canonical order: one row per subject.

    subjects are ordered by (cell index, subject label); ``values[k]`` holds
    the d response components of subject k and ``cell_of[k]`` its cell.
    """

    subjects: list[str]
    cell_of: np.ndarray  # (N,) int
    values: np.ndarray  # (N, d) float64
    a: int
    d: int

    def __post_init__(self) -> None:
        self.cell_of = np.asarray(self.cell_of, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.subjects)
        if self.values.shape != (n, self.d):
            raise DataError(
                f"value matrix has shape {self.values.shape}, expected ({n}, {self.d})"
            )
        if self.cell_of.shape != (n,):
            raise DataError("cell assignment does not match the subject count")
        if not np.all(np.isfinite(self.values)):
            raise DataError("data contains non-finite response values")

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


@dataclass
class CellSummary:
    """Sample size, mean vector and unbiased covariance of one cell."""

    n: int
    mean: np.ndarray  # (d,)
    cov: np.ndarray  # (d, d)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov).copy()


@dataclass
class ModelFit:
    """Pooled quantities of a fitted layout.

    ``sigma_n`` is the block-diagonal covariance estimate of the scaled pooled
    mean vector (block i equals ``n_total * cov_i / n_i``) and ``d_n_diag``
    its diagonal.
    """

    cells: list[CellSummary]
    mean_vector: np.ndarray  # (a*d,)
    sigma_n: np.ndarray  # (a*d, a*d)
    d_n_diag: np.ndarray  # (a*d,)
    n_total: int

    @property
    def a(self) -> int:
        return len(self.cells)

    @property
    def d(self) -> int:
        return self.cells[0].mean.shape[0]


def cell_label(layout: DesignLayout, index: int) -> str:
    return ":".join(layout.cells[index]) if layout.cells[index] else "(all)"


def dataset_from_cell_arrays(arrays) -> Dataset:
    """Canonical dataset from one (n_i, d) value array per cell.

    Handy for simulations and in-memory use; subjects are named
    "<cell>.<index>" in input order.
    """
    arrays = [np.atleast_2d(np.asarray(x, dtype=float)) for x in arrays]
    if not arrays:
        raise DataError("at least one cell is required")
    d = arrays[0].shape[1]
    if any(x.shape[1] != d for x in arrays):
        raise DataError("all cells must have the same number of components")
    subjects = [
        f"{i + 1}.{k + 1}" for i, x in enumerate(arrays) for k in range(x.shape[0])
    ]
    cell_of = np.repeat(np.arange(len(arrays)), [x.shape[0] for x in arrays])
    return Dataset(
        subjects=subjects,
        cell_of=cell_of,
        values=np.vstack(arrays),
        a=len(arrays),
        d=d,
    )


def summarize(data: Dataset, layout: DesignLayout | None = None) -> ModelFit:
    """Per-cell means and covariances plus the pooled quantities.

    Every cell needs at least two subjects for the unbiased covariance;
    violations raise ``DataError`` naming the offending cell.
    """
    cells: list[CellSummary] = []
    for i in range(data.a):
        rows = data.values[data.cell_of == i]
        name = cell_label(layout, i) if layout is not None else str(i + 1)
        if rows.shape[0] == 0:
            raise DataError(f"cell {name} has no observations")
        if rows.shape[0] < 2:
            raise DataError(
                f"cell {name} has only {rows.shape[0]} subject(s); "
                "at least 2 are required to estimate a covariance"
            )
        mean = rows.mean(axis=0)
        centered = rows - mean
        cov = centered.T @ centered / (rows.shape[0] - 1)
        cov = 0.5 * (cov + cov.T)
        cells.append(CellSummary(n=rows.shape[0], mean=mean, cov=cov))

    n_total = sum(c.n for c in cells)
    mean_vector = np.concatenate([c.mean for c in cells])
    sigma_n = scipy.linalg.block_diag(*[(n_total / c.n) * c.cov for c in cells])
    d_n_diag = np.diag(sigma_n).copy()
    return ModelFit(
        cells=cells,
        mean_vector=mean_vector,
        sigma_n=sigma_n,
        d_n_diag=d_n_diag,
        n_total=n_total,
    )


def descriptive_rows(
    fit: ModelFit,
    layout: DesignLayout,
    alpha: float = 0.05,
    ci_method: str = "t-quantile",
    wts_quantile: float | None = None,
) -> tuple[list[str], list[list]]:
    """Descriptive table as (header, rows).

    Repeated-measures layouts get one row per (cell, component) with a
    confidence interval; MANOVA layouts get one row per cell with the d means.
    ``wts_quantile`` supplies the resampled critical value when
    ``ci_method == "resampling"``.
    """
    level = 100 * (1 - alpha)
    level_txt = f"{level:g}"
    if layout.mode == "rm":
        header = (
            layout.whole_names
            + layout.sub_names
            + ["n", "Means", f"Lower {level_txt} %", f"Upper {level_txt} %"]
        )
        rows = []
        for i, cell in enumerate(layout.cells):
            summ = fit.cells[i]
            for s, comp in enumerate(layout.components):
                variance = float(summ.cov[s, s])
                if ci_method == "resampling":
                    if wts_quantile is None:
                        raise ValueError(
                            "resampling-based intervals need the resampled critical value"
                        )
                    half = np.sqrt(wts_quantile) * np.sqrt(variance / summ.n)
                    lower, upper = summ.mean[s] - half, summ.mean[s] + half
                else:
                    ci = t_interval(float(summ.mean[s]), variance, summ.n, alpha)
                    lower, upper = ci.lower, ci.upper
                rows.append(
                    list(cell) + list(comp) + [summ.n, float(summ.mean[s]), lower, upper]
                )
        return header, rows

    mean_labels = (
        [f"Mean {s + 1}" for s in range(layout.d)]
        if layout.mode == "manova-long"
        else list(layout.response_names)
    )
    header = layout.whole_names + ["n"] + mean_labels
    rows = []
    for i, cell in enumerate(layout.cells):
        summ = fit.cells[i]
        rows.append(list(cell) + [summ.n] + [float(m) for m in summ.mean])
    return header, rows
