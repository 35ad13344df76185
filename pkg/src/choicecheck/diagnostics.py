"""Graphical underfitting checks against a simulated reference ensemble.

Each check compares a statistic of the observed choices with the same
statistic computed on every simulated choice vector. Scalar statistics get a
predictive p-value; curve statistics get an envelope of simulated curves.
The semi-automatic suite generator walks alternatives of interest and their
related variables and emits a standard battery of checks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .data import ChoiceDataset, DesignMatrix, DesignSpec
from .exceptions import (
    BinningError,
    CheckError,
    DegenerateResultError,
    DomainError,
    LabelingError,
)
from .mnl import FittedModel, probabilities
from .simulate import ParameterDraws, SimulationEnsemble

__all__ = [
    "BinningSpec",
    "CheckSuite",
    "CurveCheck",
    "FailedCheck",
    "InterestGroup",
    "Labeling",
    "ScalarCheck",
    "auto_check_suite",
    "binned_marginal_model_check",
    "binned_reliability_check",
    "check_to_dict",
    "discrete_vs_continuous",
    "log_pointwise_predictive",
    "log_predictive_check",
    "market_share_check",
    "predictive_p_value",
    "resolve_labeling",
    "simulated_cdf_check",
    "simulated_histogram_check",
    "simulated_kde_check",
    "write_suite",
]

DISCRETE_THRESHOLD = 12


# ---------------------------------------------------------------------------
# Predictive p-values
# ---------------------------------------------------------------------------

def predictive_p_value(observed: float, simulated) -> float:
    """Proportion of simulated values below the observed one, ties half-weighted.

    Identical observed and simulated distributions give 0.5. Infinite observed
    values map to the corresponding extreme.
    """
    sim = np.asarray(simulated, dtype=np.float64)
    if sim.size < 1:
        raise DomainError("p-value needs at least one simulated value")
    if np.isnan(observed):
        raise DomainError("p-value undefined for NaN observed statistic")
    if np.isinf(observed):
        return 0.0 if observed < 0 else 1.0
    below = np.count_nonzero(sim < observed)
    ties = np.count_nonzero(sim == observed)
    return float((below + 0.5 * ties) / sim.size)


# ---------------------------------------------------------------------------
# Check result containers
# ---------------------------------------------------------------------------

@dataclass
class ScalarCheck:
    """A scalar statistic with its simulated reference distribution."""

    check_type: str
    label: str
    observed: float
    simulated: list
    p_value: float
    alt: object = None
    variable: str | None = None
    value: object = None
    skipped_draws: list = field(default_factory=list)
    seed: int | None = None
    r_count: int = 0


@dataclass
class FailedCheck:
    """Placeholder for a check that raised; keeps suites running to the end."""

    check_type: str
    label: str
    error: str
    alt: object = None
    variable: str | None = None
    value: object = None
    skipped_draws: list = field(default_factory=list)
    seed: int | None = None
    r_count: int = 0


@dataclass
class CurveCheck:
    """A curve statistic: observed curve plus one simulated curve per draw.

    ``expected_curves`` carries the per-draw averaged predicted probabilities
    where the check defines them (the marginal-model check); elsewhere None.
    """

    check_type: str
    label: str
    x: np.ndarray
    observed_curve: np.ndarray
    simulated_curves: list
    expected_curves: list | None = None
    alt: object = None
    variable: str | None = None
    bins: "BinningSpec | None" = None
    bin_sizes: list | None = None
    p_value: float | None = None
    skipped_draws: list = field(default_factory=list)
    seed: int | None = None
    r_count: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.observed_curve = np.asarray(self.observed_curve, dtype=np.float64)
        n = self.x.size
        if self.observed_curve.size != n:
            raise CheckError("observed curve and x grid have different lengths")
        for curve in self.simulated_curves:
            if np.asarray(curve).size != n:
                raise CheckError("simulated curve length differs from x grid")
        for curve in self.expected_curves or ():
            if np.asarray(curve).size != n:
                raise CheckError("expected curve length differs from x grid")


def _siminfo(ensemble: SimulationEnsemble) -> dict:
    return {"seed": ensemble.seed, "r_count": ensemble.r_count}


# ---------------------------------------------------------------------------
# Binning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinningSpec:
    """Equal-count binning: rows sorted by a key, split into K runs.

    The first (n mod K) bins take one extra row; ties keep original row
    order. Membership is computed once per check and reused for every curve.
    """

    n_bins: int = 10

    def __post_init__(self):
        if self.n_bins < 1:
            raise BinningError("need at least one bin")

    def assign(self, key: np.ndarray) -> list:
        key = np.asarray(key)
        n = key.size
        if n < self.n_bins:
            raise BinningError(
                f"cannot form {self.n_bins} bins from {n} eligible observations"
            )
        order = np.argsort(key, kind="stable")
        base, extra = divmod(n, self.n_bins)
        sizes = np.full(self.n_bins, base, dtype=np.int64)
        sizes[:extra] += 1
        stops = np.cumsum(sizes)
        return [order[a:b] for a, b in zip(np.concatenate(([0], stops[:-1])), stops)]


def _bin_means(values: np.ndarray, bins: list) -> np.ndarray:
    return np.array([float(np.mean(values[idx])) for idx in bins])


# ---------------------------------------------------------------------------
# The seven checks
# ---------------------------------------------------------------------------

def log_predictive_check(
    model: FittedModel,
    dataset: ChoiceDataset,
    design: DesignMatrix,
    ensemble: SimulationEnsemble,
) -> ScalarCheck:
    """Log-likelihood at the MLE of the observed vs each simulated choice set."""
    p = probabilities(design, model.beta_mle)
    lp = np.log(p)
    observed = float(dataset.choice @ lp)
    simulated = (ensemble.outcomes @ lp).tolist()
    return ScalarCheck(
        check_type="log_predictive",
        label="log-likelihood at MLE",
        observed=observed,
        simulated=simulated,
        p_value=predictive_p_value(observed, simulated),
        **_siminfo(ensemble),
    )


def log_pointwise_predictive(
    dataset: ChoiceDataset, design: DesignMatrix, draws: ParameterDraws
) -> float:
    """Sum over chosen rows of ln(mean over draws of the choice probability)."""
    avg = np.zeros(design.n_rows)
    for s in range(draws.r_count):
        avg += probabilities(design, draws.draws[s])
    avg /= draws.r_count
    chosen = dataset.choice == 1
    if np.any(avg[chosen] <= 0.0):
        raise DomainError("averaged probability of a chosen row is zero")
    return float(np.sum(np.log(avg[chosen])))


def market_share_check(
    dataset: ChoiceDataset,
    ensemble: SimulationEnsemble,
    grouping: dict | None = None,
    groups: list | None = None,
) -> list:
    """Chosen counts per group, observed vs simulated.

    ``grouping`` maps every alternative id to a group label; ``groups`` gives
    explicit (label, row mask) pairs instead. With neither, each alternative
    is its own group.
    """
    if grouping is not None and groups is not None:
        raise CheckError("pass either a grouping map or explicit groups, not both")
    if groups is None:
        alts = np.unique(dataset.alt_ids)
        if grouping is None:
            grouping = {int(a): str(a) for a in alts}
        missing = [a for a in alts.tolist() if a not in grouping]
        if missing:
            raise CheckError(f"grouping does not cover alternative(s) {missing}")
        labels = []
        for a in alts.tolist():
            if grouping[a] not in labels:
                labels.append(grouping[a])
        groups = [
            (
                lab,
                np.isin(dataset.alt_ids, [a for a in alts.tolist() if grouping[a] == lab]),
            )
            for lab in labels
        ]
    checks = []
    for label, mask in groups:
        mask = np.asarray(mask, dtype=bool)
        observed = int(dataset.choice[mask].sum())
        simulated = ensemble.outcomes[:, mask].sum(axis=1).astype(float).tolist()
        alt = None
        in_group = np.unique(dataset.alt_ids[mask])
        if in_group.size == 1:
            alt = int(in_group[0])
        checks.append(
            ScalarCheck(
                check_type="market_share",
                label=str(label),
                observed=float(observed),
                simulated=simulated,
                p_value=predictive_p_value(observed, simulated),
                alt=alt,
                **_siminfo(ensemble),
            )
        )
    return checks


def _eligible_rows(design: DesignMatrix, alt, row_mask) -> np.ndarray:
    if (alt is None) == (row_mask is None):
        raise CheckError("give exactly one of an alternative id or a row mask")
    if alt is not None:
        rows = np.flatnonzero(design.alt_ids == alt)
        if rows.size == 0:
            raise CheckError(f"alternative {alt!r} appears in no choice set")
    else:
        rows = np.flatnonzero(np.asarray(row_mask, dtype=bool))
        if rows.size == 0:
            raise CheckError("row mask selects no rows")
    return rows


def binned_reliability_check(
    model: FittedModel,
    dataset: ChoiceDataset,
    design: DesignMatrix,
    ensemble: SimulationEnsemble,
    alt=None,
    row_mask=None,
    bins: BinningSpec | None = None,
    label: str | None = None,
    binning_probs: np.ndarray | None = None,
) -> CurveCheck:
    """Per-bin observed choice share vs predicted probability.

    Rows are binned once by the point-estimate probabilities (or by
    ``binning_probs``, e.g. a posterior mean from external draws) and the
    same bins are reused for every simulated curve.
    """
    bins = bins or BinningSpec()
    rows = _eligible_rows(design, alt, row_mask)
    if binning_probs is None:
        binning_probs = probabilities(design, model.beta_mle)
    key = np.asarray(binning_probs, dtype=np.float64)[rows]
    membership = bins.assign(key)
    x = _bin_means(key, membership)
    y_obs = dataset.choice[rows].astype(np.float64)
    observed = _bin_means(y_obs, membership)
    simulated = [
        _bin_means(ensemble.outcomes[r, rows].astype(np.float64), membership)
        for r in range(ensemble.r_count)
    ]
    return CurveCheck(
        check_type="reliability",
        label=label or (f"alternative {alt}" if alt is not None else "selection"),
        x=x,
        observed_curve=observed,
        simulated_curves=simulated,
        alt=alt,
        bins=bins,
        bin_sizes=[int(idx.size) for idx in membership],
        **_siminfo(ensemble),
    )


def binned_marginal_model_check(
    model: FittedModel,
    dataset: ChoiceDataset,
    design: DesignMatrix,
    ensemble: SimulationEnsemble,
    alt=None,
    x_var: str = None,
    bins: BinningSpec | None = None,
    label: str | None = None,
    row_mask=None,
) -> CurveCheck:
    """Binned choice share against a continuous variable, with both bands.

    Emits the R simulated-choice curves and, as the tighter expected band,
    the R per-bin averages of each draw's predicted probabilities.
    """
    if x_var is None:
        raise CheckError("marginal-model check needs a variable name")
    bins = bins or BinningSpec()
    rows = _eligible_rows(design, alt, row_mask)
    x_vals = dataset.numeric_variable(x_var)[rows]
    membership = bins.assign(x_vals)
    x = _bin_means(x_vals, membership)
    observed = _bin_means(dataset.choice[rows].astype(np.float64), membership)
    simulated = []
    expected = []
    for r in range(ensemble.r_count):
        simulated.append(
            _bin_means(ensemble.outcomes[r, rows].astype(np.float64), membership)
        )
        expected.append(_bin_means(ensemble.probabilities_for(r)[rows], membership))
    default = f"alternative {alt} vs {x_var}" if alt is not None else f"selection vs {x_var}"
    return CurveCheck(
        check_type="marginal_model",
        label=label or default,
        x=x,
        observed_curve=observed,
        simulated_curves=simulated,
        expected_curves=expected,
        alt=alt,
        variable=x_var,
        bins=bins,
        bin_sizes=[int(idx.size) for idx in membership],
        **_siminfo(ensemble),
    )


def simulated_histogram_check(
    dataset: ChoiceDataset,
    ensemble: SimulationEnsemble,
    alt=None,
    discrete_var: str = None,
    value=None,
    row_mask=None,
    label: str | None = None,
) -> ScalarCheck:
    """Count of choosers whose value of a discrete variable equals ``value``."""
    if discrete_var is None:
        raise CheckError("histogram check needs a discrete variable name")
    rows = _eligible_rows(dataset, alt, row_mask)
    var = dataset.variable(discrete_var)[rows]
    match = var == value
    observed = int(np.count_nonzero(dataset.choice[rows][match]))
    simulated = [
        float(np.count_nonzero(ensemble.outcomes[r, rows][match]))
        for r in range(ensemble.r_count)
    ]
    return ScalarCheck(
        check_type="simulated_histogram",
        label=label or (f"alternative {alt}" if alt is not None else "selection"),
        observed=float(observed),
        simulated=simulated,
        p_value=predictive_p_value(observed, simulated),
        alt=alt,
        variable=discrete_var,
        value=value if isinstance(value, str) else float(value),
        **_siminfo(ensemble),
    )


def _scott_bandwidth(values: np.ndarray) -> float:
    n = values.size
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    h = sd * n ** (-1 / 5)
    floor = 1e-9 * max(1.0, abs(float(np.mean(values))))
    if not np.isfinite(h) or h < floor:
        return floor
    return h


def _gaussian_kde_curve(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    h = _scott_bandwidth(values)
    z = (grid[:, None] - values[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (values.size * h * np.sqrt(2 * np.pi))
    return dens


def _chooser_values(dataset, rows, choices, var_values):
    picked = rows[choices[rows] == 1]
    return var_values[picked]


def simulated_kde_check(
    dataset: ChoiceDataset,
    ensemble: SimulationEnsemble,
    alt=None,
    cont_var: str = None,
    grid: np.ndarray | None = None,
    row_mask=None,
    label: str | None = None,
) -> CurveCheck:
    """Kernel density of a continuous variable among choosers, per dataset.

    Gaussian kernel with Scott's bandwidth computed per curve; all curves
    share one grid. Draws with fewer than two choosers are skipped.
    """
    if cont_var is None:
        raise CheckError("KDE check needs a continuous variable name")
    rows = _eligible_rows(dataset, alt, row_mask)
    var_values = dataset.numeric_variable(cont_var)
    obs = _chooser_values(dataset, rows, dataset.choice, var_values)
    if obs.size == 0:
        raise CheckError(
            f"no observed choosers for KDE of {cont_var!r} ({label or alt})"
        )
    if grid is None:
        h_obs = _scott_bandwidth(obs)
        grid = np.linspace(obs.min() - 3 * h_obs, obs.max() + 3 * h_obs, 256)
    else:
        grid = np.asarray(grid, dtype=np.float64)
    observed = _gaussian_kde_curve(obs, grid)
    simulated = []
    skipped = []
    for r in range(ensemble.r_count):
        vals = _chooser_values(dataset, rows, ensemble.outcomes[r], var_values)
        if vals.size < 2:
            skipped.append(r)
            continue
        simulated.append(_gaussian_kde_curve(vals, grid))
    if not simulated:
        raise DegenerateResultError(
            f"every draw had fewer than two choosers for KDE of {cont_var!r}"
        )
    return CurveCheck(
        check_type="simulated_kde",
        label=label or (f"alternative {alt}" if alt is not None else "selection"),
        x=grid,
        observed_curve=observed,
        simulated_curves=simulated,
        alt=alt,
        variable=cont_var,
        skipped_draws=skipped,
        **_siminfo(ensemble),
    )


def _ecdf_on_grid(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(values), grid, side="right") / values.size


def simulated_cdf_check(
    dataset: ChoiceDataset,
    ensemble: SimulationEnsemble,
    alt=None,
    cont_var: str = None,
    row_mask=None,
    label: str | None = None,
    max_grid: int = 4096,
) -> CurveCheck:
    """Empirical CDF of a continuous variable among choosers, per dataset.

    All step functions are evaluated right-continuously on one merged grid
    of the values seen across the observed data and every draw. Draws with
    no choosers are skipped.
    """
    if cont_var is None:
        raise CheckError("CDF check needs a continuous variable name")
    rows = _eligible_rows(dataset, alt, row_mask)
    var_values = dataset.numeric_variable(cont_var)
    obs = _chooser_values(dataset, rows, dataset.choice, var_values)
    if obs.size == 0:
        raise CheckError(
            f"no observed choosers for CDF of {cont_var!r} ({label or alt})"
        )
    chooser_sets = []
    skipped = []
    for r in range(ensemble.r_count):
        vals = _chooser_values(dataset, rows, ensemble.outcomes[r], var_values)
        if vals.size == 0:
            skipped.append(r)
            continue
        chooser_sets.append(vals)
    if not chooser_sets:
        raise DegenerateResultError(
            f"every draw had zero choosers for CDF of {cont_var!r}"
        )
    grid = np.unique(np.concatenate([obs] + chooser_sets))
    if grid.size > max_grid:
        keep = np.unique(np.round(np.linspace(0, grid.size - 1, max_grid)).astype(int))
        grid = grid[keep]
    observed = _ecdf_on_grid(obs, grid)
    simulated = [_ecdf_on_grid(vals, grid) for vals in chooser_sets]
    return CurveCheck(
        check_type="simulated_cdf",
        label=label or (f"alternative {alt}" if alt is not None else "selection"),
        x=grid,
        observed_curve=observed,
        simulated_curves=simulated,
        alt=alt,
        variable=cont_var,
        skipped_draws=skipped,
        **_siminfo(ensemble),
    )


# ---------------------------------------------------------------------------
# Semi-automatic check suite
# ---------------------------------------------------------------------------

def discrete_vs_continuous(values, threshold: int = DISCRETE_THRESHOLD) -> str:
    """Classify a numeric variable by its distinct-value count."""
    values = np.asarray(values)
    if values.dtype == object:
        return "discrete"
    return "discrete" if np.unique(values).size <= threshold else "continuous"


@dataclass(frozen=True)
class Labeling:
    """How to pick the alternatives of interest.

    mode "labeled": each alternative id is its own group (optionally a
    subset). mode "proxy": group rows by the values of a discrete variable
    standing in for missing labels. mode "chosen_vs_not": a single group
    covering every row.
    """

    mode: str
    alts: tuple = None
    variable: str = None

    def __post_init__(self):
        if self.mode not in ("labeled", "proxy", "chosen_vs_not"):
            raise LabelingError(f"unknown labeling mode {self.mode!r}")
        if self.mode == "proxy" and not self.variable:
            raise LabelingError("proxy labeling needs a variable name")
        if self.alts is not None:
            object.__setattr__(self, "alts", tuple(self.alts))


@dataclass
class InterestGroup:
    label: str
    row_mask: np.ndarray
    alt: object = None


def resolve_labeling(dataset: ChoiceDataset, labeling: Labeling) -> list:
    """Turn a labeling mode into concrete (label, row mask) groups."""
    if labeling.mode == "labeled":
        alts = labeling.alts
        if alts is None:
            alts = np.unique(dataset.alt_ids).tolist()
        groups = []
        for a in alts:
            mask = dataset.alt_ids == a
            if not mask.any():
                raise LabelingError(f"alternative {a!r} not present in the data")
            groups.append(InterestGroup(label=f"alternative {a}", row_mask=mask, alt=int(a)))
        return groups
    if labeling.mode == "proxy":
        values = dataset.variable(labeling.variable)
        if discrete_vs_continuous(values) != "discrete":
            raise LabelingError(
                f"proxy variable {labeling.variable!r} is continuous; "
                "labels need a discrete variable"
            )
        groups = []
        for value in sorted(np.unique(values).tolist(), key=str):
            groups.append(
                InterestGroup(label=str(value), row_mask=values == value)
            )
        return groups
    return [InterestGroup(label="chosen", row_mask=np.ones(dataset.n_rows, dtype=bool))]


def _related_variables(dataset, spec, variable_map, group):
    if variable_map is not None:
        return list(variable_map.get(group.label, []))
    if spec is None:
        raise CheckError("need a variable map or a design spec to derive one")
    names = []
    for a in np.unique(dataset.alt_ids[group.row_mask]).tolist():
        for name in spec.variables_for_alt(a):
            if name not in names and name in dataset.variables:
                names.append(name)
    return sorted(names)


@dataclass
class CheckSuite:
    """Ordered collection of generated checks plus a manifest."""

    checks: list
    labeling_mode: str
    seed: int
    r_count: int

    def manifest(self) -> dict:
        entries = []
        for i, check in enumerate(self.checks):
            entry = {
                "index": i,
                "check_type": check.check_type,
                "label": check.label,
                "file": _check_filename(i, check),
            }
            if check.variable is not None:
                entry["variable"] = check.variable
            if getattr(check, "value", None) is not None:
                entry["value"] = check.value
            if isinstance(check, FailedCheck):
                entry["error"] = check.error
            entries.append(entry)
        return {
            "labeling": self.labeling_mode,
            "seed": self.seed,
            "R": self.r_count,
            "n_checks": len(self.checks),
            "checks": entries,
        }


def _attempt(builder, error_policy, meta):
    if error_policy == "raise":
        return builder()
    try:
        return builder()
    except Exception as exc:
        return FailedCheck(error=str(exc), **meta)


def auto_check_suite(
    dataset: ChoiceDataset,
    design: DesignMatrix,
    model: FittedModel,
    ensemble: SimulationEnsemble,
    labeling: Labeling,
    variable_map: dict | None = None,
    spec: DesignSpec | None = None,
    bins: BinningSpec | None = None,
    error_policy: str = "raise",
) -> CheckSuite:
    """Generate the standard battery of checks for each group of interest.

    Per group: market share and binned reliability. Per related discrete
    variable: one histogram check per distinct value seen in the group's
    rows. Per related continuous variable: one KDE and one CDF check. The
    suite is a deterministic function of its inputs. With
    ``error_policy="record"`` a failing check becomes a FailedCheck entry
    instead of stopping the suite.
    """
    if error_policy not in ("raise", "record"):
        raise CheckError(f"unknown error policy {error_policy!r}")
    info = _siminfo(ensemble)
    groups = resolve_labeling(dataset, labeling)
    checks = list(
        market_share_check(
            dataset, ensemble, groups=[(g.label, g.row_mask) for g in groups]
        )
    )
    for group in groups:
        checks.append(
            _attempt(
                lambda g=group: binned_reliability_check(
                    model,
                    dataset,
                    design,
                    ensemble,
                    row_mask=g.row_mask,
                    bins=bins,
                    label=g.label,
                ),
                error_policy,
                {"check_type": "reliability", "label": group.label, **info},
            )
        )
    for group in groups:
        for name in _related_variables(dataset, spec, variable_map, group):
            values = dataset.variable(name)
            kind = discrete_vs_continuous(values)
            if kind == "discrete":
                for value in sorted(np.unique(values[group.row_mask]).tolist(), key=str):
                    checks.append(
                        _attempt(
                            lambda g=group, n=name, v=value: simulated_histogram_check(
                                dataset,
                                ensemble,
                                discrete_var=n,
                                value=v,
                                row_mask=g.row_mask,
                                label=g.label,
                            ),
                            error_policy,
                            {
                                "check_type": "simulated_histogram",
                                "label": group.label,
                                "variable": name,
                                "value": value,
                                **info,
                            },
                        )
                    )
            else:
                for kind_name, builder in (
                    ("simulated_kde", simulated_kde_check),
                    ("simulated_cdf", simulated_cdf_check),
                ):
                    checks.append(
                        _attempt(
                            lambda g=group, n=name, b=builder: b(
                                dataset,
                                ensemble,
                                cont_var=n,
                                row_mask=g.row_mask,
                                label=g.label,
                            ),
                            error_policy,
                            {
                                "check_type": kind_name,
                                "label": group.label,
                                "variable": name,
                                **info,
                            },
                        )
                    )
    return CheckSuite(
        checks=checks,
        labeling_mode=labeling.mode,
        seed=ensemble.seed,
        r_count=ensemble.r_count,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def check_to_dict(check) -> dict:
    """Portable representation shared by the JSON files and the plot data."""
    out = {
        "check_type": check.check_type,
        "label": check.label,
        "alt": check.alt,
        "skipped_draws": list(check.skipped_draws),
        "seed": check.seed,
        "R": check.r_count,
    }
    if check.variable is not None:
        out["variable"] = check.variable
    if isinstance(check, FailedCheck):
        if check.value is not None:
            out["value"] = check.value
        out["error"] = check.error
    elif isinstance(check, ScalarCheck):
        if check.value is not None:
            out["value"] = check.value
        out["observed"] = check.observed
        out["simulated"] = [float(v) for v in check.simulated]
        out["p_value"] = check.p_value
    else:
        if check.bins is not None:
            out["bins"] = {"n_bins": check.bins.n_bins, "sizes": check.bin_sizes}
        out["x"] = check.x.tolist()
        out["observed"] = check.observed_curve.tolist()
        out["simulated"] = [np.asarray(c).tolist() for c in check.simulated_curves]
        if check.expected_curves is not None:
            out["expected_curve"] = [np.asarray(c).tolist() for c in check.expected_curves]
        if check.p_value is not None:
            out["p_value"] = check.p_value
    return out


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", str(text).lower()).strip("_") or "check"


def _check_filename(index: int, check) -> str:
    parts = [check.check_type, check.label]
    if check.variable is not None:
        parts.append(check.variable)
    if getattr(check, "value", None) is not None:
        parts.append(str(check.value))
    return f"check_{index:03d}_{_slug('_'.join(str(p) for p in parts))}.json"


def write_suite(suite: CheckSuite, directory) -> list:
    """One JSON file per check plus manifest.json; returns the paths written."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, check in enumerate(suite.checks):
        path = directory / _check_filename(i, check)
        path.write_text(json.dumps(check_to_dict(check), indent=2, sort_keys=True) + "\n")
        paths.append(path)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(suite.manifest(), indent=2, sort_keys=True) + "\n")
    paths.append(manifest)
    return paths
