"""Predictive-simulation ensembles.

Parameters are drawn from the asymptotic sampling distribution of the MLE
(multivariate normal around beta with the negative inverse Hessian as
covariance) or ingested from an external file, and a simulated choice vector
is sampled per draw from that draw's choice probabilities.

Randomness uses numpy's Philox counter-based generator with one substream
per purpose, keyed on (master seed, stream tag, draw index). Serial and
threaded runs therefore produce bit-identical ensembles.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .data import ChoiceDataset, DesignMatrix
from .exceptions import (
    CheckError,
    DataParseError,
    DecompositionError,
    DimensionError,
    SkipDraw,
)
from .mnl import FittedModel, probabilities, worker_count

__all__ = [
    "ParameterDraws",
    "RNG_FAMILY",
    "SimulationEnsemble",
    "StatisticResult",
    "draw_parameters",
    "evaluate_statistic",
    "ingest_external_draws",
    "simulate_outcomes",
    "substream",
]

RNG_FAMILY = f"philox4x64 (numpy.random.Philox, numpy {np.__version__})"

_PARAM_STREAM = 1
_OUTCOME_STREAM = 2


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *key); order of use is irrelevant."""
    if seed < 0:
        raise ValueError("master seed must be non-negative")
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key)))
    )


# ---------------------------------------------------------------------------
# Parameter draws
# ---------------------------------------------------------------------------

@dataclass
class ParameterDraws:
    """R parameter vectors, one per simulated dataset."""

    draws: np.ndarray  # (R, K)
    source: str  # "asymptotic" | "external"
    seed: int | None = None

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=np.float64))
        if self.draws.shape[0] < 1:
            raise DimensionError("need at least one parameter draw")
        if not np.isfinite(self.draws).all():
            raise DataParseError("parameter draws contain non-finite entries")
        self.draws.flags.writeable = False

    @property
    def r_count(self) -> int:
        return int(self.draws.shape[0])

    @property
    def n_params(self) -> int:
        return int(self.draws.shape[1])


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    if not np.any(cov):
        # Degenerate zero covariance: every draw equals the point estimate.
        return np.zeros_like(cov)
    jittered = cov
    for attempt in range(4):
        try:
            return np.linalg.cholesky(jittered)
        except np.linalg.LinAlgError:
            if attempt == 3:
                break
            jittered = jittered + 1e-10 * np.eye(cov.shape[0])
    raise DecompositionError(
        "covariance is not positive definite (after 3 jitter attempts)"
    )


def draw_parameters(model: FittedModel, r_count: int, seed: int) -> ParameterDraws:
    """Sample R vectors from MVN(beta_mle, covariance) via its Cholesky factor."""
    if not model.converged:
        raise CheckError("model did not converge; refusing to draw parameters")
    lower = _cholesky_with_jitter(model.covariance)
    gen = substream(seed, _PARAM_STREAM)
    z = gen.standard_normal((int(r_count), model.n_params))
    draws = model.beta_mle + z @ lower.T
    return ParameterDraws(draws=draws, source="asymptotic", seed=int(seed))


def ingest_external_draws(path, expected_k: int) -> ParameterDraws:
    """Read a headerless CSV of parameter draws, one draw per row."""
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64)
    except ValueError as exc:
        raise DataParseError(f"external draws {path}: {exc}") from exc
    draws = np.atleast_2d(frame.to_numpy())
    if draws.shape[1] != expected_k:
        raise DimensionError(
            f"external draws have {draws.shape[1]} columns, model has {expected_k} parameters"
        )
    if not np.isfinite(draws).all():
        raise DataParseError(f"external draws {path}: non-finite entries")
    return ParameterDraws(draws=draws, source="external", seed=None)


# ---------------------------------------------------------------------------
# Outcome simulation
# ---------------------------------------------------------------------------

def _sample_choice_rows(p, starts, sizes, uniforms):
    """Inverse-CDF walk per choice set, in alt order, accumulated in long double."""
    p_ext = p.astype(np.longdouble)
    cum = np.cumsum(p_ext)
    before = np.concatenate((np.zeros(1, dtype=np.longdouble), cum[:-1]))[starts]
    within = cum - np.repeat(before, sizes)
    totals = np.add.reduceat(p_ext, starts)
    thresholds = uniforms.astype(np.longdouble) * totals
    below = (within < np.repeat(thresholds, sizes)).astype(np.int64)
    offsets = np.add.reduceat(below, starts)
    return starts + np.minimum(offsets, sizes - 1)


@dataclass
class SimulationEnsemble:
    """R simulated 0/1 choice vectors aligned with the dataset rows.

    ``outcomes[r]`` has exactly one 1 per choice set. Probability tables are
    kept only when they fit the cell budget; otherwise they are recomputed
    on demand from the stored draws.
    """

    outcomes: np.ndarray  # (R, n_rows) int8
    draws: ParameterDraws
    design: DesignMatrix
    seed: int
    rng_family: str = RNG_FAMILY
    prob_draws: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=np.int8)
        self.outcomes.flags.writeable = False
        if self.prob_draws is not None:
            self.prob_draws.flags.writeable = False

    @property
    def r_count(self) -> int:
        return int(self.outcomes.shape[0])

    @property
    def n_rows(self) -> int:
        return int(self.outcomes.shape[1])

    def probabilities_for(self, r: int) -> np.ndarray:
        if self.prob_draws is not None:
            return self.prob_draws[r]
        return probabilities(self.design, self.draws.draws[r])

    def metadata(self) -> dict:
        return {
            "rng_family": self.rng_family,
            "seed": self.seed,
            "R": self.r_count,
            "draw_source": self.draws.source,
        }


def simulate_outcomes(
    design: DesignMatrix,
    draws: ParameterDraws,
    seed: int,
    n_threads: int | None = None,
    prob_cell_budget: float = 1e8,
) -> SimulationEnsemble:
    """Simulate one choice vector per parameter draw.

    Each draw r uses its own RNG substream keyed by (seed, r), so the
    ensemble is a pure function of (design, draws, seed, R) regardless of
    the worker count.
    """
    if draws.n_params != design.n_cols:
        raise DimensionError(
            f"draws have {draws.n_params} parameters, design has {design.n_cols} columns"
        )
    r_count = draws.r_count
    n_rows = design.n_rows
    starts = design.set_starts
    sizes = design.set_sizes
    keep_probs = r_count * n_rows <= prob_cell_budget

    outcomes = np.zeros((r_count, n_rows), dtype=np.int8)
    probs = np.empty((r_count, n_rows), dtype=np.float64) if keep_probs else None

    def run_draw(r: int):
        p = probabilities(design, draws.draws[r])
        uniforms = substream(seed, _OUTCOME_STREAM, r).random(design.n_obs)
        rows = _sample_choice_rows(p, starts, sizes, uniforms)
        outcomes[r, rows] = 1
        if keep_probs:
            probs[r] = p

    workers = worker_count(n_threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_draw, range(r_count)))
    else:
        for r in range(r_count):
            run_draw(r)

    return SimulationEnsemble(
        outcomes=outcomes,
        draws=draws,
        design=design,
        seed=int(seed),
        prob_draws=probs,
    )


def export_outcomes_csv(ensemble: SimulationEnsemble, path):
    """Audit dump of simulated choices: one (r, obs_id, alt_id) row per choice."""
    records = []
    obs_ids = ensemble.design.obs_ids
    alt_ids = ensemble.design.alt_ids
    for r in range(ensemble.r_count):
        rows = np.flatnonzero(ensemble.outcomes[r])
        records.append(
            pd.DataFrame({"r": r, "obs_id": obs_ids[rows], "alt_id": alt_ids[rows]})
        )
    pd.concat(records, ignore_index=True).to_csv(path, index=False)


# ---------------------------------------------------------------------------
# Statistic evaluation
# ---------------------------------------------------------------------------

@dataclass
class StatisticResult:
    """Observed statistic plus its simulated reference distribution."""

    observed: float | np.ndarray
    simulated: list
    kind: str  # "scalar" | "vector"
    skipped_draws: list[int] = field(default_factory=list)

    @property
    def simulated_array(self) -> np.ndarray:
        return np.asarray(self.simulated)


def evaluate_statistic(
    stat,
    dataset: ChoiceDataset,
    design: DesignMatrix,
    ensemble: SimulationEnsemble,
) -> StatisticResult:
    """Evaluate ``stat(choices)`` on the observed data and every draw.

    ``stat`` receives a 0/1 row vector and may close over the dataset and
    design. A conditional statistic raises :class:`SkipDraw` on draws where
    it is undefined; skips are recorded, never silently dropped. Raising on
    the observed data is an error and propagates.
    """
    try:
        observed = stat(np.asarray(dataset.choice))
    except SkipDraw as exc:
        raise CheckError(f"statistic undefined on the observed data: {exc}") from exc
    except Exception as exc:
        raise CheckError(f"statistic failed on the observed data: {exc}") from exc

    simulated = []
    skipped = []
    for r in range(ensemble.r_count):
        try:
            simulated.append(stat(ensemble.outcomes[r]))
        except SkipDraw:
            skipped.append(r)
    kind = "scalar" if np.isscalar(observed) or np.ndim(observed) == 0 else "vector"
    if kind == "scalar":
        observed = float(observed)
        simulated = [float(v) for v in simulated]
    return StatisticResult(
        observed=observed, simulated=simulated, kind=kind, skipped_draws=skipped
    )
