"""Synthetic choice data for tests and walkthroughs.

Everything here is seeded and pure: the same arguments always give the
same dataset.
"""

from __future__ import annotations

import numpy as np

from .data import (
    ChoiceDataset,
    ConstantTerm,
    DesignMatrix,
    DesignSpec,
    LinearTerm,
    build_design,
)
from .mnl import probabilities
from .simulate import _sample_choice_rows, substream

__all__ = [
    "labeled_toy",
    "random_design",
    "random_valid_choices",
    "resample_choices",
    "toy_two_by_two",
]

_SYNTH_STREAM = 3


def random_design(n_obs: int, n_alts: int, n_cols: int, seed: int) -> DesignMatrix:
    """Fully random design with equal set sizes; for numeric stress tests."""
    gen = substream(seed, _SYNTH_STREAM, 0)
    n_rows = n_obs * n_alts
    return DesignMatrix(
        values=gen.normal(0.0, 1.0, size=(n_rows, n_cols)),
        column_names=tuple(f"x{k}" for k in range(n_cols)),
        obs_ids=np.repeat(np.arange(1, n_obs + 1), n_alts),
        alt_ids=np.tile(np.arange(1, n_alts + 1), n_obs),
        set_starts=np.arange(0, n_rows, n_alts),
    )


def random_valid_choices(n_obs: int, n_alts: int, seed: int) -> np.ndarray:
    """One uniformly chosen row per set, ignoring any model."""
    gen = substream(seed, _SYNTH_STREAM, 1)
    choice = np.zeros(n_obs * n_alts, dtype=np.int64)
    picks = gen.integers(0, n_alts, size=n_obs)
    choice[np.arange(n_obs) * n_alts + picks] = 1
    return choice


def resample_choices(dataset: ChoiceDataset, spec: DesignSpec, beta, seed: int) -> ChoiceDataset:
    """Replace the choices with draws from the model at ``beta``.

    This is the model-true replication step behind calibration tests: the
    returned data really does come from the model being checked.
    """
    design = build_design(dataset, spec)
    p = probabilities(design, np.asarray(beta, dtype=np.float64))
    gen = substream(seed, _SYNTH_STREAM, 2)
    rows = _sample_choice_rows(
        p, design.set_starts, design.set_sizes, gen.random(design.n_obs)
    )
    choice = np.zeros(dataset.n_rows, dtype=np.int64)
    choice[rows] = 1
    return ChoiceDataset(
        obs_ids=dataset.obs_ids.copy(),
        alt_ids=dataset.alt_ids.copy(),
        choice=choice,
        variables={k: v.copy() for k, v in dataset.variables.items()},
    )


def labeled_toy(n_obs: int = 400, seed: int = 7, beta=None):
    """Two labeled alternatives with one continuous and one discrete variable.

    Returns (dataset, spec, beta). The discrete variable takes three values,
    the continuous one is uniform on [0.5, 3.0], and choices are simulated
    from the model at ``beta``.
    """
    gen = substream(seed, _SYNTH_STREAM, 4)
    n_rows = n_obs * 2
    variables = {
        "cost": gen.uniform(0.5, 3.0, size=n_rows),
        "service": gen.integers(0, 3, size=n_rows).astype(np.float64),
    }
    dataset = ChoiceDataset(
        obs_ids=np.repeat(np.arange(1, n_obs + 1), 2),
        alt_ids=np.tile(np.array([1, 2]), n_obs),
        choice=np.tile(np.array([1, 0]), n_obs),
        variables=variables,
    )
    spec = DesignSpec(
        terms=(
            LinearTerm(name="cost", variable="cost"),
            LinearTerm(name="service", variable="service"),
            ConstantTerm(name="asc_2", alternatives=(2,)),
        )
    )
    if beta is None:
        beta = np.array([-1.2, 0.6, 0.3])
    return resample_choices(dataset, spec, beta, seed), spec, np.asarray(beta, dtype=np.float64)


def toy_two_by_two(seed: int = 11, beta=None):
    """Two observations, two alternatives: small enough to enumerate outcomes."""
    gen = substream(seed, _SYNTH_STREAM, 5)
    variables = {"cost": gen.uniform(0.5, 2.0, size=4)}
    dataset = ChoiceDataset(
        obs_ids=np.array([1, 1, 2, 2]),
        alt_ids=np.array([1, 2, 1, 2]),
        choice=np.array([1, 0, 0, 1]),
        variables=variables,
    )
    spec = DesignSpec(
        terms=(
            LinearTerm(name="cost", variable="cost"),
            ConstantTerm(name="asc_2", alternatives=(2,)),
        )
    )
    if beta is None:
        beta = np.array([-0.8, 0.4])
    return dataset, spec, np.asarray(beta, dtype=np.float64)
