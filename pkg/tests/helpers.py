"""Shared fixtures-in-spirit: independent oracles and data builders.

The oracle implementations here deliberately avoid the package's code paths
(textbook SVD pseudoinverse, explicit loops) so agreement is meaningful.
"""

from __future__ import annotations

import numpy as np

from mvinfer.estimation import Dataset, dataset_from_cell_arrays


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    base = rng.standard_normal((n, rank))
    return base @ base.T


def oracle_pinv(a: np.ndarray) -> np.ndarray:
    """Textbook SVD pseudoinverse, independent of mvinfer.linalg."""
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float), full_matrices=False)
    tol = max(a.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    inv = np.array([1.0 / x if x > tol else 0.0 for x in s])
    return vt.T @ np.diag(inv) @ u.T


def oracle_block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    dim = sum(b.shape[0] for b in blocks)
    out = np.zeros((dim, dim))
    offset = 0
    for b in blocks:
        k = b.shape[0]
        out[offset : offset + k, offset : offset + k] = b
        offset += k
    return out


def oracle_moments(cells: list[np.ndarray]):
    """Means, covariances and pooled quantities via explicit loops."""
    means, covs, ns = [], [], []
    for rows in cells:
        n, d = rows.shape
        mean = np.array([sum(rows[:, j]) / n for j in range(d)])
        cov = np.zeros((d, d))
        for k in range(n):
            delta = rows[k] - mean
            cov += np.outer(delta, delta)
        cov /= n - 1
        means.append(mean)
        covs.append(cov)
        ns.append(n)
    n_total = sum(ns)
    mean_vector = np.concatenate(means)
    sigma = oracle_block_diag([(n_total / n) * c for n, c in zip(ns, covs)])
    return mean_vector, sigma, np.array(ns), n_total


def oracle_wts(cells: list[np.ndarray], t: np.ndarray) -> float:
    mean_vector, sigma, _, n_total = oracle_moments(cells)
    projected = t @ mean_vector
    return float(n_total * projected @ oracle_pinv(t @ sigma @ t) @ projected)


def oracle_mats(cells: list[np.ndarray], t: np.ndarray) -> float:
    mean_vector, sigma, _, n_total = oracle_moments(cells)
    diag = np.diag(np.diag(sigma))
    projected = t @ mean_vector
    return float(n_total * projected @ oracle_pinv(t @ diag @ t) @ projected)


def oracle_ats(cells: list[np.ndarray], t: np.ndarray):
    """Studentized statistic plus (f1, f2) via explicit trace loops."""
    mean_vector, sigma, ns, n_total = oracle_moments(cells)
    d = cells[0].shape[1]
    quad = float(n_total * mean_vector @ t @ mean_vector)
    ts = t @ sigma
    trace = sum(ts[i, i] for i in range(ts.shape[0]))
    trace_sq = sum((ts @ ts)[i, i] for i in range(ts.shape[0]))
    statistic = quad / trace
    f1 = trace**2 / trace_sq
    sigma_sq = sigma @ sigma
    denominator = 0.0
    for i, n in enumerate(ns):
        for s in range(d):
            k = i * d + s
            denominator += t[k, k] ** 2 * sigma_sq[k, k] / (n - 1)
    f2 = trace**2 / denominator
    return statistic, f1, f2


def welch_squared(x: np.ndarray, y: np.ndarray) -> float:
    vx = x.var(ddof=1) / x.size
    vy = y.var(ddof=1) / y.size
    return float((x.mean() - y.mean()) ** 2 / (vx + vy))


def two_cell_dataset(rng: np.random.Generator, ns=(10, 12), d=2, shift=0.0) -> Dataset:
    cells = [rng.standard_normal((n, d)) + (shift if i else 0.0) for i, n in enumerate(ns)]
    return dataset_from_cell_arrays(cells)
