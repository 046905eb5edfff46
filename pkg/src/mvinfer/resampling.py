"""Parametric bootstrap, wild bootstrap and pooled permutation resampling.

Every iteration draws from its own counter-based random stream keyed by
(master seed, iteration index), so results are bit-identical no matter how
iterations are scheduled across workers.  One synthetic sample per iteration
feeds all requested effects and statistic kinds, which keeps the per-effect
p-values comparable.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import Hypothesis
from .errors import DesignError
from .estimation import Dataset, ModelFit
from .statistics import ats_value, mats_value, wts_value

SCHEMES = ("Perm", "paramBS", "WildBS")


def canonical_scheme(name: str) -> str:
    for scheme in SCHEMES:
        if name.lower() == scheme.lower():
            return scheme
    raise DesignError(f"unknown resampling scheme {name!r}; choose from {SCHEMES}")


def resolve_seed(seed: int | None) -> int:
    """A concrete 64-bit master seed; fresh OS entropy when none is given."""
    if seed is None:
        return int(np.random.SeedSequence().entropy % 2**64)
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    return int(seed) % 2**64


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one iteration, keyed (seed, index)."""
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, index]))


@dataclass
class ResamplingConfig:
    scheme: str
    iterations: int = 10_000
    seed: int | None = None
    workers: int | None = None
    alpha: float = 0.05

    def __post_init__(self) -> None:
        self.scheme = canonical_scheme(self.scheme)
        if self.iterations < 1:
            raise ValueError(f"iteration count must be >= 1, got {self.iterations}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"worker count must be >= 1, got {self.workers}")


@dataclass
class ResamplingResult:
    effect_name: str
    statistic_kind: str
    observed: float
    resampled_values: np.ndarray  # (B,)
    p_value: float
    critical_value: float


@dataclass
class _Plan:
    """Everything a worker needs to replay a range of iterations."""

    scheme: str
    seed: int
    ns: np.ndarray  # (a,) subjects per cell
    d: int
    n_total: int
    t_stack: np.ndarray  # (n_targets, a*d, a*d)
    kinds: tuple[str, ...]
    roots: np.ndarray = field(default=None)  # (a, d, d) paramBS covariance roots
    residuals: np.ndarray = field(default=None)  # (N, d) wild bootstrap residuals
    values: np.ndarray = field(default=None)  # (N, d) raw values for permutation
    starts: np.ndarray = field(default=None)  # (a+1,) row offsets per cell


def empirical_quantile(values: np.ndarray, level: float) -> float:
    """The ceil(level * B)-th order statistic (1-indexed ascending)."""
    ordered = np.sort(np.asarray(values, dtype=float))
    k = math.ceil(level * ordered.size)
    k = min(max(k, 1), ordered.size)
    return float(ordered[k - 1])


def _moments(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / (rows.shape[0] - 1)
    return mean, 0.5 * (cov + cov.T)


def _stats_from_cells(plan: _Plan, cells: list[np.ndarray]) -> np.ndarray:
    """Recompute every (target, kind) statistic from per-cell samples."""
    a = plan.ns.size
    d = plan.d
    mean_vector = np.empty(a * d)
    sigma = np.zeros((a * d, a * d))
    for i, rows in enumerate(cells):
        mean, cov = _moments(rows)
        mean_vector[i * d : (i + 1) * d] = mean
        sigma[i * d : (i + 1) * d, i * d : (i + 1) * d] = (plan.n_total / rows.shape[0]) * cov
    dn_diag = np.diag(sigma).copy()
    out = np.empty((plan.t_stack.shape[0], len(plan.kinds)))
    for j, t in enumerate(plan.t_stack):
        for k, kind in enumerate(plan.kinds):
            if kind == "WTS":
                out[j, k] = wts_value(mean_vector, sigma, t, plan.n_total)
            elif kind == "ATS":
                out[j, k] = ats_value(mean_vector, sigma, t, plan.n_total)
            else:
                out[j, k] = mats_value(mean_vector, dn_diag, t, plan.n_total)
    return out


def _draw_cells(plan: _Plan, rng: np.random.Generator) -> list[np.ndarray]:
    if plan.scheme == "paramBS":
        return [
            rng.standard_normal((int(n), plan.d)) @ plan.roots[i]
            for i, n in enumerate(plan.ns)
        ]
    if plan.scheme == "WildBS":
        signs = rng.integers(0, 2, size=plan.n_total) * 2.0 - 1.0
        weighted = plan.residuals * signs[:, None]
        return [weighted[plan.starts[i] : plan.starts[i + 1]] for i in range(plan.ns.size)]
    # Pooled permutation: all N*d scalars shuffled jointly, then reshaped
    # back into the original (subject, component) slots.
    pooled = plan.values.ravel()[rng.permutation(plan.n_total * plan.d)]
    shuffled = pooled.reshape(plan.n_total, plan.d)
    return [shuffled[plan.starts[i] : plan.starts[i + 1]] for i in range(plan.ns.size)]


def _run_range(plan: _Plan, start: int, stop: int) -> np.ndarray:
    out = np.empty((stop - start, plan.t_stack.shape[0], len(plan.kinds)))
    for index in range(start, stop):
        rng = substream(plan.seed, index)
        out[index - start] = _stats_from_cells(plan, _draw_cells(plan, rng))
    return out


def _build_plan(
    data: Dataset,
    fit: ModelFit,
    hypotheses: list[Hypothesis],
    kinds: tuple[str, ...],
    scheme: str,
    seed: int,
) -> _Plan:
    ns = np.array([c.n for c in fit.cells])
    starts = np.concatenate([[0], np.cumsum(ns)])
    plan = _Plan(
        scheme=scheme,
        seed=seed,
        ns=ns,
        d=fit.d,
        n_total=fit.n_total,
        t_stack=np.stack([h.t for h in hypotheses]),
        kinds=kinds,
        starts=starts,
    )
    order = np.argsort(data.cell_of, kind="stable")
    if not np.array_equal(order, np.arange(data.n_subjects)):
        raise DesignError("dataset rows are not in canonical cell order")
    if scheme == "paramBS":
        from .linalg import psd_sqrt

        plan.roots = np.stack([psd_sqrt(c.cov) for c in fit.cells])
    elif scheme == "WildBS":
        means = np.concatenate(
            [np.repeat(c.mean[None, :], c.n, axis=0) for c in fit.cells]
        )
        plan.residuals = data.values - means
    else:
        plan.values = data.values
    return plan


def run_resampling(
    data: Dataset,
    fit: ModelFit,
    hypotheses: list[Hypothesis],
    kinds: list[str],
    config: ResamplingConfig,
    mode: str,
) -> list[ResamplingResult]:
    """Resampled null distributions, p-values and critical values.

    ``kinds`` lists the statistics to recompute per iteration ("WTS", "ATS",
    "MATS").  The permutation scheme is limited to repeated-measures data and
    never covers the ATS; requesting only the ATS under permutation is an
    error, while a joint (WTS, ATS) request silently drops the ATS so the
    caller can report it as not available.
    """
    kinds = list(kinds)
    if config.scheme == "Perm":
        if mode != "rm":
            raise DesignError(
                "the permutation scheme pools incommensurable components; "
                "it is only available for repeated-measures designs"
            )
        if "ATS" in kinds:
            kinds = [k for k in kinds if k != "ATS"]
            if not kinds:
                raise DesignError("the ATS has no permutation distribution")
    if not kinds:
        raise ValueError("no statistic kinds requested")

    plan = _build_plan(data, fit, hypotheses, tuple(kinds), config.scheme, config.seed)

    b = config.iterations
    workers = config.workers or 1
    if workers == 1:
        stacked = _run_range(plan, 0, b)
    else:
        bounds = np.linspace(0, b, workers + 1).astype(int)
        chunks = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_range, [plan] * len(chunks), *zip(*chunks)))
        stacked = np.concatenate(parts, axis=0)

    results = []
    for j, hyp in enumerate(hypotheses):
        for k, kind in enumerate(kinds):
            values = stacked[:, j, k]
            obs = _observed_statistic(fit, hyp, kind)
            results.append(
                ResamplingResult(
                    effect_name=hyp.effect_name,
                    statistic_kind=kind,
                    observed=obs,
                    resampled_values=values,
                    p_value=float(np.count_nonzero(values >= obs) / b),
                    critical_value=empirical_quantile(values, 1 - config.alpha),
                )
            )
    return results


def _observed_statistic(fit: ModelFit, hyp: Hypothesis, kind: str) -> float:
    if kind == "WTS":
        return wts_value(fit.mean_vector, fit.sigma_n, hyp.t, fit.n_total)
    if kind == "ATS":
        return ats_value(fit.mean_vector, fit.sigma_n, hyp.t, fit.n_total)
    return mats_value(fit.mean_vector, fit.d_n_diag, hyp.t, fit.n_total)
