"""Plot-data export for repeated-measures fits: marginal means with intervals.

The selected factors define the plotted margins; all other factors are
collapsed by unweighted averaging of the cell-component means.  Output is a
tidy CSV (series, level, mean, lower, upper) plus an SVG rendering of the
means with error bars.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.stats
from matplotlib.figure import Figure

from .design import DesignLayout
from .errors import DesignError
from .estimation import ModelFit


@dataclass
class MarginalPoint:
    series: str
    level: str
    mean: float
    lower: float
    upper: float


def _marginal_point(fit, layout, constraint: dict[str, str], alpha: float):
    """Mean and t interval for one margin, collapsing unconstrained factors.

    The estimate averages the cell-component means over the collapsed
    combinations; its variance sums the per-cell contributions (cells are
    independent, components within a cell are not), with Satterthwaite
    degrees of freedom across cells.
    """
    whole_pos = {f.name: k for k, f in enumerate(layout.whole_factors)}
    sub_pos = {f.name: k for k, f in enumerate(layout.sub_factors)}
    cells_sel = [
        i
        for i, cell in enumerate(layout.cells)
        if all(cell[whole_pos[n]] == v for n, v in constraint.items() if n in whole_pos)
    ]
    comps_sel = [
        s
        for s, comp in enumerate(layout.components)
        if all(comp[sub_pos[n]] == v for n, v in constraint.items() if n in sub_pos)
    ]
    n_combo = len(cells_sel) * len(comps_sel)
    total = 0.0
    contributions = []  # (variance share u_i, n_i)
    for i in cells_sel:
        summ = fit.cells[i]
        total += summ.mean[comps_sel].sum()
        block = summ.cov[np.ix_(comps_sel, comps_sel)].sum()
        contributions.append((max(block, 0.0) / (summ.n * n_combo**2), summ.n))
    mean = float(total / n_combo)
    variance = sum(u for u, _ in contributions)
    if variance <= 0:
        return mean, mean, mean
    denom = sum(u**2 / (n - 1) for u, n in contributions)
    df = variance**2 / denom if denom > 0 else np.inf
    quantile = (
        scipy.stats.t.ppf(1 - alpha / 2, df)
        if np.isfinite(df)
        else scipy.stats.norm.ppf(1 - alpha / 2)
    )
    half = float(quantile * np.sqrt(variance))
    return mean, mean - half, mean + half


def marginal_table(
    fit: ModelFit,
    layout: DesignLayout,
    selection: str | None,
    alpha: float = 0.05,
) -> list[MarginalPoint]:
    """Marginal means with intervals for the selected factors.

    ``selection`` is a ':'-joined factor list; the last one becomes the level
    axis, any preceding ones define the series.  ``None`` is accepted only
    when the layout has a single factor.
    """
    if layout.mode != "rm":
        raise DesignError("plot data is only defined for repeated-measures fits")
    names = layout.whole_names + layout.sub_names
    if selection is None:
        if len(names) != 1:
            raise DesignError(
                f"specify the factor(s) to plot; choose from: {', '.join(names)}"
            )
        selected = [names[0]]
    else:
        selected = selection.split(":")
        unknown = [n for n in selected if n not in names]
        if unknown or len(set(selected)) != len(selected):
            raise DesignError(
                f"unknown plot factor(s) {':'.join(unknown) or selection!r}; "
                f"choose from: {', '.join(names)}"
            )
    specs = {f.name: f for f in layout.whole_factors + layout.sub_factors}
    axis = selected[-1]
    series_factors = selected[:-1]

    series_combos: list[tuple[str, ...]] = [()]
    for name in series_factors:
        series_combos = [c + (lvl,) for c in series_combos for lvl in specs[name].levels]

    points = []
    for combo in series_combos:
        series = ":".join(combo) if combo else "overall"
        for level in specs[axis].levels:
            constraint = dict(zip(series_factors, combo))
            constraint[axis] = level
            mean, lower, upper = _marginal_point(fit, layout, constraint, alpha)
            points.append(MarginalPoint(series, level, mean, lower, upper))
    return points


def write_plot_csv(points: list[MarginalPoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["series", "level", "mean", "lower", "upper"])
        for p in points:
            writer.writerow([p.series, p.level, repr(p.mean), repr(p.lower), repr(p.upper)])


def write_plot_svg(
    points: list[MarginalPoint],
    path,
    *,
    title: str = "",
    gap: float = 0.1,
    ylabel: str = "mean",
) -> None:
    """Means with error bars; overlapping series are offset by ``gap``."""
    series_names = list(dict.fromkeys(p.series for p in points))
    levels = list(dict.fromkeys(p.level for p in points))
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.add_subplot()
    for k, name in enumerate(series_names):
        own = [p for p in points if p.series == name]
        offset = gap * (k - (len(series_names) - 1) / 2)
        xs = [levels.index(p.level) + offset for p in own]
        means = np.array([p.mean for p in own])
        err = [means - [p.lower for p in own], [p.upper for p in own] - means]
        ax.errorbar(xs, means, yerr=err, marker="o", capsize=3, label=name)
    ax.set_xticks(range(len(levels)))
    ax.set_xticklabels(levels)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series_names) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")


def emit_plot_data(
    fit: ModelFit,
    layout: DesignLayout,
    selection: str | None,
    csv_path,
    svg_path,
    *,
    alpha: float = 0.05,
    gap: float = 0.1,
    title: str = "",
) -> list[MarginalPoint]:
    """Write the tidy CSV and the SVG for one factor selection; returns the rows."""
    points = marginal_table(fit, layout, selection, alpha=alpha)
    write_plot_csv(points, csv_path)
    write_plot_svg(points, svg_path, title=title, gap=gap)
    return points


def write_ellipsoid_svg(ellipsoid, path, *, title: str = "") -> None:
    """Render a two-dimensional confidence ellipse to an SVG file.

    Higher-dimensional regions are still perfectly valid objects, they just
    have no planar rendering, so anything but two dimensions is refused.
    """
    if ellipsoid.center.shape[0] != 2:
        raise DesignError(
            "confidence regions can only be plotted for two-dimensional contrasts"
        )
    angles = np.linspace(0.0, 2 * np.pi, 400)
    circle = np.vstack([np.cos(angles), np.sin(angles)])
    boundary = ellipsoid.center[:, None] + ellipsoid.axes @ (
        ellipsoid.scales[:, None] * circle
    )
    fig = Figure(figsize=(5.5, 5.0))
    ax = fig.add_subplot()
    ax.plot(boundary[0], boundary[1])
    ax.plot([ellipsoid.center[0]], [ellipsoid.center[1]], marker="+", markersize=10)
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
