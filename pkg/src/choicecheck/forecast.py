"""Policy scenarios and forecast market-share changes.

A scenario edits raw variables on filtered rows; shares are then predicted
by rebuilding the design matrix from the edited data, so piecewise and
interaction terms respond to the edit. Categories group rows by attribute
predicates (for example size by fuel by body type) and must cover every row.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import ChoiceDataset, DesignSpec, build_design, load_config
from .exceptions import ConfigError, CoverageError, DomainError, ValidationError
from .mnl import FittedModel, probabilities

__all__ = [
    "Category",
    "CategoryForecast",
    "CategoryMap",
    "Condition",
    "ForecastReport",
    "Scenario",
    "Transform",
    "apply_scenario",
    "forecast_shares",
    "load_category_map",
    "load_scenario",
]

_OPS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "in": lambda a, b: np.isin(a, list(b)),
}


@dataclass(frozen=True)
class Condition:
    """Row predicate over one raw variable."""

    variable: str
    value: object
    op: str = "=="

    def __post_init__(self):
        if self.op not in _OPS:
            raise ConfigError(f"unknown condition operator {self.op!r}")

    def mask(self, dataset: ChoiceDataset) -> np.ndarray:
        # alt_id is addressable so category maps can fall back to raw alternatives
        if self.variable == "alt_id":
            values = dataset.alt_ids
        else:
            values = dataset.variable(self.variable)
        return np.asarray(_OPS[self.op](values, self.value), dtype=bool)

    def describe(self) -> str:
        return f"{self.variable} {self.op} {self.value!r}"


def _and_mask(conditions, dataset) -> np.ndarray:
    mask = np.ones(dataset.n_rows, dtype=bool)
    for cond in conditions:
        mask &= cond.mask(dataset)
    return mask


@dataclass(frozen=True)
class Transform:
    """Multiply or shift one variable on the rows matching all conditions."""

    variable: str
    conditions: tuple = ()
    multiplier: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if (self.multiplier is None) == (self.delta is None):
            raise ConfigError("transform needs exactly one of multiplier or delta")
        object.__setattr__(self, "conditions", tuple(self.conditions))


@dataclass(frozen=True)
class Scenario:
    name: str
    transforms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "transforms", tuple(self.transforms))


def apply_scenario(dataset: ChoiceDataset, scenario: Scenario) -> ChoiceDataset:
    """New dataset with the scenario's edits; untouched rows are identical."""
    changed: dict[str, np.ndarray] = {}
    for t in scenario.transforms:
        base = changed.get(t.variable)
        if base is None:
            base = np.array(dataset.numeric_variable(t.variable))
        mask = _and_mask(t.conditions, dataset)
        if not mask.any():
            warnings.warn(
                f"scenario {scenario.name!r}: filter on {t.variable!r} matches no rows"
            )
        if t.multiplier is not None:
            base[mask] = base[mask] * t.multiplier
        else:
            base[mask] = base[mask] + t.delta
        if not np.isfinite(base).all():
            raise ValidationError(
                f"scenario {scenario.name!r} produced non-finite {t.variable!r} values"
            )
        changed[t.variable] = base
    return dataset.with_variables(changed)


def _conditions_from_config(raw) -> tuple:
    out = []
    for c in raw or ():
        out.append(Condition(variable=c["variable"], value=c["value"], op=c.get("op", "==")))
    return tuple(out)


def load_scenario(path) -> Scenario:
    raw = load_config(path)
    try:
        transforms = tuple(
            Transform(
                variable=t["variable"],
                conditions=_conditions_from_config(t.get("conditions")),
                multiplier=t.get("multiplier"),
                delta=t.get("delta"),
            )
            for t in raw["transforms"]
        )
        return Scenario(name=raw.get("name", Path(path).stem), transforms=transforms)
    except KeyError as exc:
        raise ConfigError(f"scenario {path} missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Categories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Category:
    """Named first-match group of rows; conditions are ANDed."""

    name: str
    conditions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))


@dataclass(frozen=True)
class CategoryMap:
    categories: tuple

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        names = [c.name for c in self.categories]
        if len(set(names)) != len(names):
            raise ConfigError("category names must be unique")

    @property
    def names(self) -> list:
        return [c.name for c in self.categories]

    def assign(self, dataset: ChoiceDataset) -> np.ndarray:
        """Category index per row, first match wins; every row must match."""
        assigned = np.full(dataset.n_rows, -1, dtype=np.int64)
        for i, cat in enumerate(self.categories):
            mask = _and_mask(cat.conditions, dataset) & (assigned < 0)
            assigned[mask] = i
        if (assigned < 0).any():
            row = int(np.flatnonzero(assigned < 0)[0])
            raise CoverageError(
                "category map does not cover every alternative; first uncovered "
                f"row has obs_id={dataset.obs_ids[row]}, alt_id={dataset.alt_ids[row]}"
            )
        return assigned


def load_category_map(path) -> CategoryMap:
    raw = load_config(path)
    try:
        cats = tuple(
            Category(name=c["name"], conditions=_conditions_from_config(c.get("conditions")))
            for c in raw["categories"]
        )
    except KeyError as exc:
        raise ConfigError(f"category map {path} missing field {exc}") from exc
    return CategoryMap(categories=cats)


def alternative_category_map(dataset: ChoiceDataset) -> CategoryMap:
    """Fallback map: one category per alternative id."""
    return CategoryMap(
        categories=tuple(
            Category(name=f"alternative {a}", conditions=(Condition("alt_id", a),))
            for a in np.unique(dataset.alt_ids).tolist()
        )
    )


# ---------------------------------------------------------------------------
# Share forecasts
# ---------------------------------------------------------------------------

@dataclass
class CategoryForecast:
    name: str
    baseline_share: float
    scenario_share: float
    relative_change_pct: float
    interval_pct: tuple | None = None


@dataclass
class ForecastReport:
    scenario_name: str
    categories: list
    category_names: list = field(default_factory=list)

    def top_increases(self, n: int = 4) -> list:
        ranked = sorted(
            self.categories, key=lambda c: (-c.relative_change_pct, c.name)
        )
        return ranked[:n]

    def by_name(self, name: str) -> CategoryForecast:
        for c in self.categories:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "categories": [
                {
                    "name": c.name,
                    "baseline_share": c.baseline_share,
                    "scenario_share": c.scenario_share,
                    "relative_change_pct": c.relative_change_pct,
                    **(
                        {"relative_change_pct_5_95": list(c.interval_pct)}
                        if c.interval_pct is not None
                        else {}
                    ),
                }
                for c in self.categories
            ],
        }

    def text_table(self) -> str:
        """All categories sorted by relative change, largest increase first."""
        width = max(len("Category"), max((len(c.name) for c in self.categories), default=0))
        lines = [
            f"Forecast: {self.scenario_name}",
            f"{'Category':<{width}}  {'Baseline %':>10}  {'Scenario %':>10}  {'Change %':>8}",
        ]
        for c in sorted(self.categories, key=lambda c: (-c.relative_change_pct, c.name)):
            line = (
                f"{c.name:<{width}}  {100 * c.baseline_share:>10.3f}  "
                f"{100 * c.scenario_share:>10.3f}  {c.relative_change_pct:>8.2f}"
            )
            if c.interval_pct is not None:
                line += f"  [{c.interval_pct[0]:.2f}, {c.interval_pct[1]:.2f}]"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def write(self, json_path=None, text_path=None):
        if json_path is not None:
            Path(json_path).write_text(
                json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
            )
        if text_path is not None:
            Path(text_path).write_text(self.text_table())


def _category_shares(p: np.ndarray, assigned: np.ndarray, n_cats: int, n_obs: int):
    sums = np.bincount(assigned, weights=p, minlength=n_cats)
    shares = sums / n_obs
    if abs(shares.sum() - 1.0) > 1e-9:
        raise DomainError(
            f"category shares sum to {shares.sum():.12f}, not 1; "
            "the category map or probabilities are inconsistent"
        )
    return shares


def forecast_shares(
    model: FittedModel | None,
    baseline: ChoiceDataset,
    scenario_dataset: ChoiceDataset,
    spec: DesignSpec | None,
    category_map: CategoryMap,
    draws=None,
    scenario_name: str = "scenario",
    external_probs=None,
) -> ForecastReport:
    """Per-category market shares, baseline vs scenario.

    A category's share is the mean over observations of its rows' summed
    choice probabilities at the point estimate. ``draws`` adds a 5th/95th
    percentile interval on the relative change. ``external_probs``
    substitutes externally computed per-row probability tables (baseline,
    scenario), each a vector or an (S, n_rows) array averaged over draws,
    for models this package does not estimate.
    """
    n_cats = len(category_map.categories)
    assigned_base = category_map.assign(baseline)
    assigned_scen = category_map.assign(scenario_dataset)

    if external_probs is not None:
        p_base = np.asarray(external_probs[0], dtype=np.float64)
        p_scen = np.asarray(external_probs[1], dtype=np.float64)
        if p_base.ndim == 2:
            p_base = p_base.mean(axis=0)
        if p_scen.ndim == 2:
            p_scen = p_scen.mean(axis=0)
        design_base = design_scen = None
    else:
        if model is None or spec is None:
            raise ConfigError("need a fitted model and spec, or external probabilities")
        design_base = build_design(baseline, spec)
        design_scen = build_design(scenario_dataset, spec)
        p_base = probabilities(design_base, model.beta_mle)
        p_scen = probabilities(design_scen, model.beta_mle)

    shares_base = _category_shares(p_base, assigned_base, n_cats, baseline.n_obs)
    shares_scen = _category_shares(p_scen, assigned_scen, n_cats, scenario_dataset.n_obs)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(
            shares_base > 0, 100 * (shares_scen - shares_base) / shares_base, 0.0
        )

    intervals = [None] * n_cats
    if draws is not None and design_base is not None:
        rel_draws = np.empty((draws.r_count, n_cats))
        for s in range(draws.r_count):
            beta = draws.draws[s]
            sb = _category_shares(
                probabilities(design_base, beta), assigned_base, n_cats, baseline.n_obs
            )
            ss = _category_shares(
                probabilities(design_scen, beta),
                assigned_scen,
                n_cats,
                scenario_dataset.n_obs,
            )
            with np.errstate(divide="ignore", invalid="ignore"):
                rel_draws[s] = np.where(sb > 0, 100 * (ss - sb) / sb, 0.0)
        lo = np.percentile(rel_draws, 5, axis=0)
        hi = np.percentile(rel_draws, 95, axis=0)
        intervals = [(float(a), float(b)) for a, b in zip(lo, hi)]

    categories = [
        CategoryForecast(
            name=category_map.categories[i].name,
            baseline_share=float(shares_base[i]),
            scenario_share=float(shares_scen[i]),
            relative_change_pct=float(rel[i]),
            interval_pct=intervals[i],
        )
        for i in range(n_cats)
    ]
    return ForecastReport(
        scenario_name=scenario_name,
        categories=categories,
        category_names=category_map.names,
    )
