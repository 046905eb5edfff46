"""Design layouts and hypothesis projection matrices.

A layout fixes the factor structure (whole-plot cells, within-subject
components), the deterministic cell/component ordering, and knows how to
build the contrast matrix H and projection T = H'(HH')+H for every effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DesignError
from .formula import ParsedFormula, full_lattice


def level_sort_key(value: str):
    """Sort key for factor levels: numeric levels sort numerically.

    Purely lexicographic order would put "12" before "6"; time-like levels are
    far more usable in numeric order.  Numeric levels sort before non-numeric
    ones so the key stays comparable on mixed label sets.
    """
    try:
        return (0, float(value), "")
    except ValueError:
        return (1, 0.0, value)


def sorted_levels(values) -> list[str]:
    return sorted(set(values), key=level_sort_key)


@dataclass
class FactorSpec:
    """A named factor with its ordered levels."""

    name: str
    levels: list[str]
    kind: str  # "whole" | "sub"

    def __post_init__(self) -> None:
        if not self.levels:
            raise DesignError(f"factor {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise DesignError(f"factor {self.name!r} has duplicate levels")
        if len(self.levels) < 2:
            raise DesignError(f"factor {self.name!r} has a single level")


@dataclass
class DesignLayout:
    """Factor structure plus the canonical cell and component enumeration."""

    mode: str  # "rm" | "manova-long" | "manova-wide"
    structure: str  # "crossed" | "nested"
    whole_factors: list[FactorSpec]
    sub_factors: list[FactorSpec] = field(default_factory=list)
    response_names: list[str] = field(default_factory=list)  # MANOVA component labels
    effects: list[str] = field(default_factory=list)
    cells: list[tuple[str, ...]] = field(default_factory=list)  # whole-plot label tuples
    components: list[tuple[str, ...]] = field(default_factory=list)  # per-component labels
    nested_counts: tuple[int, ...] = ()  # (a, b[, c]) for nested structures

    @property
    def a(self) -> int:
        return len(self.cells)

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def whole_names(self) -> list[str]:
        return [f.name for f in self.whole_factors]

    @property
    def sub_names(self) -> list[str]:
        return [f.name for f in self.sub_factors]

    def cell_index(self, labels: tuple[str, ...]) -> int:
        return self.cells.index(labels)

    def component_headers(self) -> list[str]:
        """Column labels for the d components in a descriptive table."""
        if self.mode == "rm":
            return [":".join(c) for c in self.components]
        return list(self.response_names)


@dataclass
class Hypothesis:
    """Contrast matrix H with its projection T = H'(HH')+H and rank."""

    effect_name: str
    h: np.ndarray
    t: np.ndarray
    rank: int
    whole_plot_only: bool = True


def enumerate_cells(whole_factors: list[FactorSpec]) -> list[tuple[str, ...]]:
    """Whole-plot cells: lexicographic over factors in formula order.

    Each factor's levels are taken in their canonical (sorted) order.
    """
    cells: list[tuple[str, ...]] = [()]
    for spec in whole_factors:
        cells = [c + (lvl,) for c in cells for lvl in spec.levels]
    return cells


def enumerate_components(sub_factors: list[FactorSpec]) -> list[tuple[str, ...]]:
    """Within-subject components: lexicographic over sub-plot factors."""
    return enumerate_cells(sub_factors)


def build_crossed_layout(
    parsed: ParsedFormula,
    whole_levels: dict[str, list[str]],
    sub_levels: dict[str, list[str]] | None = None,
    response_names: list[str] | None = None,
) -> DesignLayout:
    """Layout for crossed designs from observed factor levels.

    ``whole_levels`` / ``sub_levels`` map factor name to the sorted level
    list; MANOVA layouts pass ``response_names`` instead of sub-plot factors.
    """
    sub_levels = sub_levels or {}
    if parsed.mode == "rm":
        whole_names = [f for f in parsed.factors if f in whole_levels]
        sub_names = [f for f in parsed.factors if f in sub_levels]
        effects = full_lattice(whole_names + sub_names)
    else:
        whole_names = parsed.factors
        sub_names = []
        effects = parsed.effects
    whole = [FactorSpec(n, list(whole_levels[n]), "whole") for n in whole_names]
    sub = [FactorSpec(n, list(sub_levels[n]), "sub") for n in sub_names]
    components: list[tuple[str, ...]]
    if parsed.mode == "rm":
        components = enumerate_components(sub)
        resp = []
    else:
        resp = list(response_names or [])
        components = [(r,) for r in resp]
    if not components:
        raise DesignError("design has no response components")
    return DesignLayout(
        mode=parsed.mode,
        structure="crossed",
        whole_factors=whole,
        sub_factors=sub,
        response_names=resp,
        effects=effects,
        cells=enumerate_cells(whole),
        components=components,
    )


def build_nested_layout(
    parsed: ParsedFormula,
    cells: list[tuple[str, ...]],
    counts: tuple[int, ...],
    factor_levels: dict[str, list[str]],
    response_names: list[str],
) -> DesignLayout:
    """Layout for balanced nested designs.

    ``cells`` is the already-determined cell list (parent level first) and
    ``counts`` the per-stage level counts (a, b[, c]).
    """
    whole = [
        FactorSpec(name, factor_levels[name], "whole") for name in parsed.nested_chain
    ]
    return DesignLayout(
        mode=parsed.mode,
        structure="nested",
        whole_factors=whole,
        response_names=list(response_names),
        effects=parsed.effects,
        cells=cells,
        components=[(r,) for r in response_names],
        nested_counts=counts,
    )


def _projection(h: np.ndarray, effect_name: str, whole_plot_only: bool) -> Hypothesis:
    t = h.T @ linalg.moore_penrose(h @ h.T) @ h
    t = 0.5 * (t + t.T)
    trace = float(np.trace(t))
    rank = round(trace)
    if abs(trace - rank) > 1e-6:
        raise DesignError(
            f"projection for effect {effect_name!r} has non-integer trace {trace}"
        )
    if np.linalg.norm(t @ t - t) > 1e-9 * max(1.0, np.linalg.norm(t)):
        raise DesignError(f"projection for effect {effect_name!r} is not idempotent")
    return Hypothesis(
        effect_name=effect_name, h=h, t=t, rank=rank, whole_plot_only=whole_plot_only
    )


def _crossed_contrast(layout: DesignLayout, members: set[str]) -> np.ndarray:
    """Kronecker composition: centering for in-effect factors, averaging otherwise."""
    h = np.eye(1)
    for spec in layout.whole_factors + layout.sub_factors:
        k = len(spec.levels)
        part = linalg.centering(k) if spec.name in members else np.full((k, k), 1.0 / k)
        h = linalg.kron(h, part)
    if layout.mode != "rm":
        h = linalg.kron(h, np.eye(layout.d))
    return h


def _nested_contrast(layout: DesignLayout, effect_name: str) -> np.ndarray:
    counts = layout.nested_counts
    depth = effect_name.count(":") + 1  # position in the nesting chain
    blocks = 1
    h: np.ndarray | None = None
    for stage, count in enumerate(counts, start=1):
        if stage == depth:
            # Center across this stage's levels within every enclosing block.
            h = linalg.direct_sum([linalg.centering(count)] * blocks)
        elif stage > depth:
            # Stages below the tested one are averaged out.
            assert h is not None
            h = h @ linalg.direct_sum([np.full((1, count), 1.0 / count)] * h.shape[1])
        blocks *= count
    assert h is not None
    return linalg.kron(h, np.eye(layout.d))


def hypothesis_for_effect(layout: DesignLayout, effect_name: str) -> Hypothesis:
    """Contrast and projection matrix for one effect of the layout."""
    if effect_name not in layout.effects:
        raise DesignError(f"unknown effect {effect_name!r}")
    if layout.structure == "nested":
        h = _nested_contrast(layout, effect_name)
        whole_only = True
    else:
        members = set(effect_name.split(":"))
        known = set(layout.whole_names) | set(layout.sub_names)
        if not members <= known:
            raise DesignError(f"unknown factors in effect {effect_name!r}")
        h = _crossed_contrast(layout, members)
        whole_only = not (members & set(layout.sub_names))
    return _projection(h, effect_name, whole_only)


def all_hypotheses(layout: DesignLayout) -> list[Hypothesis]:
    return [hypothesis_for_effect(layout, name) for name in layout.effects]


def rm_profile_matrices(t: int) -> dict[str, np.ndarray]:
    """Two-sample profile contrasts over t occasions.

    Returns the contrast matrices of the identical-profile, parallel-profile
    and flat-profile hypotheses, keyed "identical", "parallel", "flat".
    """
    if t < 2:
        raise ValueError(f"profile contrasts require at least 2 occasions, got {t}")
    eye = np.eye(t)
    t_i = np.hstack([eye, -eye])
    t_p = np.hstack([np.ones((t - 1, 1)), -np.eye(t - 1)]) @ t_i
    t_f = linalg.centering(t) @ np.hstack([eye, eye])
    return {"identical": t_i, "parallel": t_p, "flat": t_f}
