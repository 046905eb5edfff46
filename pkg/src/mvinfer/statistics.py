"""The three test statistics and their reference distributions.

All three are quadratic forms in the pooled mean vector:

* Wald type: ``N xbar' T (T S T)+ T xbar`` with S the block-diagonal
  covariance of the scaled pooled means; asymptotically chi-square with
  rank(T) degrees of freedom.
* ANOVA type (repeated measures only): ``N xbar' T xbar`` reported in its
  studentized form ``F = N xbar' T xbar / tr(T S)`` and referred to an
  F(f1, f2) approximation.
* Modified ANOVA type (multivariate outcomes): the Wald form with S replaced
  by its diagonal D, which buys invariance under component-wise rescaling and
  tolerance of singular covariance estimates.  Its null distribution is only
  ever approximated by resampling, so no p-value is attached here.

The ``*_value`` functions work on raw arrays and are re-used verbatim by the
resampling engine; the wrappers at the bottom operate on a ``ModelFit``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .design import Hypothesis
from .errors import DesignError
from .linalg import pinv_symmetric_psd

_TINY = 1e-12


@dataclass
class TestResult:
    """One effect's statistic with degrees of freedom and p-values."""

    effect_name: str
    kind: str  # "WTS" | "ATS" | "MATS"
    statistic: float
    df1: float | None = None
    df2: float | None = None  # ATS only; inf for sub-plot effects
    p_asymptotic: float | None = None
    p_resampling: float | None = None


def wts_value(mean_vector: np.ndarray, sigma_n: np.ndarray, t: np.ndarray, n_total: int) -> float:
    projected = t @ mean_vector
    middle = t @ sigma_n @ t
    return float(n_total * projected @ pinv_symmetric_psd(middle) @ projected)


def mats_value(mean_vector: np.ndarray, d_n_diag: np.ndarray, t: np.ndarray, n_total: int) -> float:
    projected = t @ mean_vector
    middle = (t * d_n_diag) @ t  # T @ diag(d) @ T
    return float(n_total * projected @ pinv_symmetric_psd(middle) @ projected)


def ats_value(mean_vector: np.ndarray, sigma_n: np.ndarray, t: np.ndarray, n_total: int) -> float:
    """Studentized ANOVA-type statistic N xbar' T xbar / tr(T S)."""
    quad = float(n_total * mean_vector @ t @ mean_vector)
    denom = float(np.einsum("ij,ji->", t, sigma_n))
    if denom <= _TINY:
        # Degenerate: no variability under the projection.
        return 0.0 if quad <= _TINY else np.inf
    return quad / denom


def ats_degrees(
    sigma_n: np.ndarray,
    t: np.ndarray,
    ns: np.ndarray,
    d: int,
    whole_plot_only: bool,
) -> tuple[float, float]:
    """Box-approximation degrees of freedom (f1, f2) for the studentized ATS.

    f1 = tr(TS)^2 / tr(TSTS).  The denominator degrees f2 use the
    diagonal-of-T form tr(TS)^2 / tr(D_T^2 S^2 Lambda) with
    Lambda = diag(1/(n_i - 1)); they apply only to effects built purely from
    whole-plot factors — any sub-plot involvement gets f2 = inf, i.e. the
    F(f1, inf) = chi2(f1)/f1 reference.
    """
    ts = t @ sigma_n
    trace = float(np.trace(ts))
    trace_sq = float(np.einsum("ij,ji->", ts, ts))
    f1 = trace**2 / trace_sq if trace_sq > _TINY else 1.0
    if not whole_plot_only:
        return f1, np.inf
    t_diag = np.diag(t)
    s2_diag = np.einsum("ij,ji->i", sigma_n, sigma_n)
    lam = np.repeat(1.0 / (np.asarray(ns, dtype=float) - 1.0), d)
    denom = float(np.sum(t_diag**2 * s2_diag * lam))
    f2 = trace**2 / denom if denom > _TINY else np.inf
    return f1, f2


def wts_pvalue_asymptotic(statistic: float, rank: int) -> float:
    """Upper chi-square tail probability at rank(T) degrees of freedom."""
    if rank < 1:
        raise DesignError("hypothesis projection has rank 0; nothing to test")
    return float(scipy.stats.chi2.sf(statistic, rank))


def ats_pvalue(statistic: float, df1: float, df2: float) -> float:
    if not np.isfinite(statistic):
        return 0.0
    if np.isinf(df2):
        return float(scipy.stats.chi2.sf(statistic * df1, df1))
    return float(scipy.stats.f.sf(statistic, df1, df2))


def wts(fit, hyp: Hypothesis) -> float:
    """Wald-type statistic of one effect."""
    _check_dims(fit, hyp)
    return wts_value(fit.mean_vector, fit.sigma_n, hyp.t, fit.n_total)


def mats(fit, hyp: Hypothesis) -> float:
    """Modified ANOVA-type statistic of one effect."""
    _check_dims(fit, hyp)
    return mats_value(fit.mean_vector, fit.d_n_diag, hyp.t, fit.n_total)


def ats(fit, hyp: Hypothesis) -> tuple[float, float, float]:
    """Studentized ANOVA-type statistic with its (f1, f2) degrees of freedom."""
    _check_dims(fit, hyp)
    statistic = ats_value(fit.mean_vector, fit.sigma_n, hyp.t, fit.n_total)
    ns = np.array([c.n for c in fit.cells])
    f1, f2 = ats_degrees(fit.sigma_n, hyp.t, ns, fit.d, hyp.whole_plot_only)
    return statistic, f1, f2


def _check_dims(fit, hyp: Hypothesis) -> None:
    if hyp.t.shape != (fit.mean_vector.size, fit.mean_vector.size):
        raise DesignError(
            f"projection shape {hyp.t.shape} does not match the fitted "
            f"dimension {fit.mean_vector.size}"
        )
