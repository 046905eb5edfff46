"""Component-wise confidence intervals and multivariate confidence ellipsoids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from . import linalg


@dataclass
class ConfidenceInterval:
    estimate: float
    lower: float
    upper: float
    level: float


@dataclass
class ConfidenceEllipsoid:
    """Ellipsoidal confidence region for a contrast of the cell means.

    The region is the set of points ``center + sum_k u_k * scales[k] * axes[:, k]``
    with ``sum u_k^2 <= 1``; ``axes`` holds one orthonormal direction per
    column and ``scales`` is sorted descending.
    """

    center: np.ndarray  # (r,)
    scales: np.ndarray  # (r,)
    axes: np.ndarray  # (r, r), column k pairs with scales[k]

    def contains(self, point, tol: float = 1e-12) -> bool:
        """Membership in the (center, scales, axes) parameterization."""
        delta = self.axes.T @ (np.asarray(point, dtype=float) - self.center)
        total = 0.0
        for u, s in zip(delta, self.scales):
            if s > 0:
                total += (u / s) ** 2
            elif abs(u) > tol:
                return False
        return total <= 1.0 + tol


def t_interval(mean: float, variance: float, n: int, alpha: float) -> ConfidenceInterval:
    """Two-sided t interval: mean +- t_{n-1, 1-alpha/2} * sqrt(variance / n)."""
    if n < 2:
        raise ValueError(f"t interval requires n >= 2, got {n}")
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    half = scipy.stats.t.ppf(1 - alpha / 2, n - 1) * np.sqrt(variance / n)
    return ConfidenceInterval(mean, mean - half, mean + half, 1 - alpha)


def resampling_interval(
    mean: float, variance: float, n: int, wts_quantile: float
) -> ConfidenceInterval:
    """Interval scaled by the root of a resampled critical value.

    ``mean +- sqrt(q) * sqrt(variance / n)`` where q is the resampled
    quantile of the omnibus statistic; with q equal to the squared t quantile
    this coincides with ``t_interval``.  The level is whatever level q was
    taken at, so it is not repeated here.
    """
    if wts_quantile < 0:
        raise ValueError(f"critical value must be nonnegative, got {wts_quantile}")
    half = np.sqrt(wts_quantile) * np.sqrt(variance / n)
    return ConfidenceInterval(mean, mean - half, mean + half, np.nan)


def conf_ellipsoid(
    mean_vector: np.ndarray,
    d_n_diag: np.ndarray,
    n_total: int,
    contrast: np.ndarray,
    critical_value: float,
) -> ConfidenceEllipsoid:
    """Confidence ellipsoid for ``contrast @ mean_vector``.

    The region collects the contrast values ``v`` with
    ``n_total * (c - v)' (H D H')^+ (c - v) <= critical_value`` where
    ``c = contrast @ mean_vector`` and D is the diagonal variance matrix of the
    scaled pooled means.  Axes are the eigenvectors of ``H D H'``; axis k
    extends ``sqrt(eigenvalue_k * critical_value / n_total)`` units.

    Eigenvector signs are normalized so each axis's first nonzero entry is
    positive, purely for reproducible output.
    """
    h = np.atleast_2d(np.asarray(contrast, dtype=float))
    if critical_value < 0:
        raise ValueError(f"critical value must be nonnegative, got {critical_value}")
    center = h @ np.asarray(mean_vector, dtype=float)
    shape = h @ np.diag(np.asarray(d_n_diag, dtype=float)) @ h.T
    eig = linalg.sym_eigen(shape)
    axes = eig.vectors.copy()
    for k in range(axes.shape[1]):
        col = axes[:, k]
        nonzero = np.nonzero(np.abs(col) > 1e-12)[0]
        if nonzero.size and col[nonzero[0]] < 0:
            axes[:, k] = -col
    scales = np.sqrt(np.clip(eig.values, 0.0, None) * critical_value / n_total)
    return ConfidenceEllipsoid(center=center, scales=scales, axes=axes)


def two_sample_difference_contrast(d: int) -> np.ndarray:
    """Contrast picking the mean difference of a two-cell layout: (I_d | -I_d)."""
    return np.hstack([np.eye(d), -np.eye(d)])
