"""Multinomial logit estimation.

Probabilities are the softmax of the design-matrix utilities within each
choice set. Fitting is damped Newton-Raphson on the analytic Hessian with a
backtracking line search; the log-likelihood is concave, and the Hessian at
the optimum directly yields the asymptotic covariance -H^-1.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from .data import ChoiceDataset, DesignMatrix, DesignSpec, build_design
from .exceptions import DimensionError, DomainError, SingularDesignError

__all__ = [
    "CrossValidation",
    "FitSummary",
    "FittedModel",
    "cross_validate",
    "estimation_report",
    "estimation_report_text",
    "fit_mle",
    "fit_model",
    "fit_summary",
    "gradient",
    "hessian",
    "log_likelihood",
    "null_log_likelihood",
    "probabilities",
    "worker_count",
]


def worker_count(n_threads: int | None = None) -> int:
    """Resolve a worker count; CHOICE_CHECK_THREADS caps the default of 1."""
    if n_threads is not None:
        return max(1, int(n_threads))
    env = os.environ.get("CHOICE_CHECK_THREADS")
    return max(1, int(env)) if env else 1


def _check_beta(design: DesignMatrix, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.shape[0] != design.n_cols:
        raise DimensionError(
            f"beta has length {beta.shape[0]}, design has {design.n_cols} columns"
        )
    if not np.isfinite(beta).all():
        raise DomainError("beta contains non-finite entries")
    return beta


def _repeat_per_set(values: np.ndarray, design: DesignMatrix) -> np.ndarray:
    return np.repeat(values, design.set_sizes)


def probabilities(design: DesignMatrix, beta) -> np.ndarray:
    """Choice probability of each (obs, alternative) row.

    Utilities are shifted by the per-choice-set maximum before
    exponentiation, so overflow cannot occur; probabilities within each set
    sum to 1.
    """
    beta = _check_beta(design, beta)
    u = design.values @ beta
    u -= _repeat_per_set(np.maximum.reduceat(u, design.set_starts), design)
    e = np.exp(u)
    denom = np.add.reduceat(e, design.set_starts)
    return e / _repeat_per_set(denom, design)


def log_likelihood(design: DesignMatrix, choices, beta) -> float:
    """Sum over chosen rows of the log choice probability."""
    beta = _check_beta(design, beta)
    choices = np.asarray(choices)
    u = design.values @ beta
    u -= _repeat_per_set(np.maximum.reduceat(u, design.set_starts), design)
    log_denom = np.log(np.add.reduceat(np.exp(u), design.set_starts))
    return float(np.sum((u - _repeat_per_set(log_denom, design))[choices == 1]))


def gradient(design: DesignMatrix, choices, beta) -> np.ndarray:
    """Score vector X'(y - p)."""
    p = probabilities(design, beta)
    residual = np.asarray(choices, dtype=np.float64) - p
    return design.values.T @ residual


def hessian(design: DesignMatrix, choices, beta) -> np.ndarray:
    """Analytic Hessian of the log-likelihood; symmetric negative semi-definite."""
    p = probabilities(design, beta)
    weighted = design.values * p[:, None]
    # Per choice set: -(sum_j p_j x_j x_j' - xbar xbar') with xbar = sum_j p_j x_j.
    xbar = np.add.reduceat(weighted, design.set_starts, axis=0)
    h = -(design.values.T @ weighted) + xbar.T @ xbar
    return (h + h.T) / 2.0


def _check_rank(design: DesignMatrix, pivot_rtol: float = 1e-10):
    if design.n_cols == 0:
        return
    xtx = design.values.T @ design.values
    _, r, piv = scipy.linalg.qr(xtx, pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return
    dependent = piv[diag <= pivot_rtol * diag[0]]
    if dependent.size:
        names = [design.column_names[k] for k in sorted(dependent)]
        raise SingularDesignError(
            f"design is rank deficient; dependent columns: {names}"
        )


@dataclass
class FittedModel:
    """MLE coefficients with asymptotic inference quantities."""

    beta_mle: np.ndarray
    loglik: float
    hessian: np.ndarray
    covariance: np.ndarray
    std_errs: np.ndarray
    z_stats: np.ndarray
    p_values: np.ndarray
    n_obs: int
    n_params: int
    converged: bool
    n_iter: int
    grad_norm: float
    column_names: tuple[str, ...]
    design_ref: DesignSpec | None = None


def fit_mle(
    design: DesignMatrix,
    choices,
    tol: float = 1e-6,
    max_iter: int = 100,
    init=None,
    ll_rtol: float = 1e-10,
) -> FittedModel:
    """Maximize the MNL log-likelihood by damped Newton-Raphson.

    Converged means the gradient max-norm fell below ``tol`` and the relative
    log-likelihood change below ``ll_rtol``. If the Hessian is numerically
    singular at an iterate, a BFGS fall-back finishes the climb and the
    analytic Hessian is re-evaluated at its solution.
    """
    _check_rank(design)
    choices = np.asarray(choices, dtype=np.float64)
    beta = (
        np.zeros(design.n_cols)
        if init is None
        else _check_beta(design, init).copy()
    )

    ll = log_likelihood(design, choices, beta)
    converged = False
    n_iter = 0
    g = gradient(design, choices, beta)
    if design.n_cols == 0 or float(np.max(np.abs(g))) < tol:
        converged = True
        max_iter = 0
    for n_iter in range(1, max_iter + 1):
        h = hessian(design, choices, beta)
        try:
            direction = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            direction = None
        if direction is None or float(g @ direction) <= 0.0:
            beta, ll = _bfgs_fallback(design, choices, beta)
            g = gradient(design, choices, beta)
            converged = float(np.max(np.abs(g))) < tol
            break

        slope = float(g @ direction)
        step = 1.0
        for _ in range(40):
            candidate = beta + step * direction
            ll_new = log_likelihood(design, choices, candidate)
            if ll_new >= ll + 1e-4 * step * slope:
                break
            step /= 2.0
        beta = beta + step * direction
        rel_change = abs(ll_new - ll) / max(1.0, abs(ll))
        ll = ll_new
        g = gradient(design, choices, beta)
        if float(np.max(np.abs(g))) < tol and rel_change < ll_rtol:
            converged = True
            break

    h = hessian(design, choices, beta)
    try:
        cov = np.linalg.inv(-h)
        cov = (cov + cov.T) / 2.0
    except np.linalg.LinAlgError:
        cov = np.full_like(h, np.nan)
        converged = False
    diag = np.diag(cov)
    with np.errstate(invalid="ignore"):
        std = np.sqrt(np.where(diag > 0, diag, np.nan))
    z = beta / std
    p = 2.0 * stats.norm.sf(np.abs(z))
    return FittedModel(
        beta_mle=beta,
        loglik=float(ll),
        hessian=h,
        covariance=cov,
        std_errs=std,
        z_stats=z,
        p_values=p,
        n_obs=design.n_obs,
        n_params=design.n_cols,
        converged=converged,
        n_iter=n_iter,
        grad_norm=float(np.max(np.abs(g))) if design.n_cols else 0.0,
        column_names=design.column_names,
    )


def _bfgs_fallback(design, choices, beta0):
    from scipy.optimize import minimize

    res = minimize(
        lambda b: -log_likelihood(design, choices, b),
        beta0,
        jac=lambda b: -gradient(design, choices, b),
        method="BFGS",
        options={"gtol": 1e-8, "maxiter": 500},
    )
    return res.x, -float(res.fun)


def fit_model(dataset: ChoiceDataset, spec: DesignSpec, **fit_options) -> FittedModel:
    """Build the design for ``spec`` and fit; keeps the spec on the result."""
    design = build_design(dataset, spec)
    model = fit_mle(design, dataset.choice, **fit_options)
    model.design_ref = spec
    return model


# ---------------------------------------------------------------------------
# Fit summaries
# ---------------------------------------------------------------------------

def null_log_likelihood(set_sizes) -> float:
    """Log-likelihood of the zero-parameter equal-shares model."""
    return float(-np.sum(np.log(np.asarray(set_sizes, dtype=np.float64))))


@dataclass
class FitSummary:
    loglik: float
    null_loglik: float
    mcfadden_rho_bar_sq: float
    aic: float
    n_params: int


def fit_summary(model: FittedModel, dataset: ChoiceDataset) -> FitSummary:
    """Equal-shares-null McFadden rho-bar-squared and AIC."""
    ll0 = null_log_likelihood(dataset.set_sizes)
    rho = 1.0 - (model.loglik - model.n_params) / ll0
    return FitSummary(
        loglik=model.loglik,
        null_loglik=ll0,
        mcfadden_rho_bar_sq=rho,
        aic=2.0 * model.n_params - 2.0 * model.loglik,
        n_params=model.n_params,
    )


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass
class CrossValidation:
    fold_logliks: list[float]
    mean_loglik: float
    k: int
    seed: int
    fold_assignment: dict[int, int] = field(repr=False, default_factory=dict)


def cross_validate(
    dataset: ChoiceDataset,
    spec: DesignSpec,
    k: int,
    seed: int,
    n_threads: int | None = None,
    **fit_options,
) -> CrossValidation:
    """K-fold out-of-sample log-likelihood; folds never split a choice set.

    Each fold's value is the summed log-likelihood of its held-out choice
    sets under the model fitted on the remaining folds; the mean over folds
    is the headline number. Fold assignment is fixed by ``seed`` before any
    fitting, so results do not depend on scheduling.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    unique_obs = dataset.obs_ids[dataset.set_starts]
    if k > unique_obs.size:
        raise ValueError("more folds than choice sets")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), 0xCF))))
    order = rng.permutation(unique_obs.size)
    fold_of_obs = np.empty(unique_obs.size, dtype=np.int64)
    fold_of_obs[order] = np.arange(unique_obs.size) % k

    obs_to_fold = {int(o): int(f) for o, f in zip(unique_obs, fold_of_obs)}
    row_folds = np.array([obs_to_fold[int(o)] for o in dataset.obs_ids])

    def run_fold(fold: int) -> float:
        test_mask = row_folds == fold
        train = dataset.subset(~test_mask)
        test = dataset.subset(test_mask)
        train_design = build_design(train, spec)
        test_design = build_design(test, spec)

        active = np.flatnonzero(np.any(train_design.values != 0.0, axis=0))
        if active.size < train_design.n_cols:
            dropped = [train_design.column_names[j]
                       for j in range(train_design.n_cols) if j not in active]
            warnings.warn(
                f"fold {fold}: level(s) unseen in training data; "
                f"zeroed columns {dropped}",
                stacklevel=2,
            )
        reduced = DesignMatrix(
            values=train_design.values[:, active],
            column_names=tuple(train_design.column_names[j] for j in active),
            obs_ids=train_design.obs_ids,
            alt_ids=train_design.alt_ids,
            set_starts=train_design.set_starts,
        )
        model = fit_mle(reduced, train.choice, **fit_options)
        beta_full = np.zeros(train_design.n_cols)
        beta_full[active] = model.beta_mle
        return log_likelihood(test_design, test.choice, beta_full)

    workers = worker_count(n_threads)
    folds = list(range(k))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fold_lls = list(pool.map(run_fold, folds))
    else:
        fold_lls = [run_fold(f) for f in folds]
    return CrossValidation(
        fold_logliks=[float(v) for v in fold_lls],
        mean_loglik=float(np.mean(fold_lls)),
        k=k,
        seed=int(seed),
        fold_assignment=obs_to_fold,
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def estimation_report(model: FittedModel, summary: FitSummary | None = None) -> dict:
    """JSON-ready estimation report."""
    report = {
        "terms": list(model.column_names),
        "estimates": [float(b) for b in model.beta_mle],
        "std_errs": [float(s) for s in model.std_errs],
        "z_stats": [float(z) for z in model.z_stats],
        "p_values": [float(p) for p in model.p_values],
        "log_likelihood": model.loglik,
        "n_obs": model.n_obs,
        "n_params": model.n_params,
        "converged": model.converged,
        "n_iter": model.n_iter,
        "gradient_max_norm": model.grad_norm,
    }
    if summary is not None:
        report["null_log_likelihood"] = summary.null_loglik
        report["mcfadden_rho_bar_sq"] = summary.mcfadden_rho_bar_sq
        report["aic"] = summary.aic
    return report


def _stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def estimation_report_text(model: FittedModel, summary: FitSummary | None = None) -> str:
    """Aligned plain-text coefficient table."""
    width = max([len("Variable")] + [len(n) for n in model.column_names])
    lines = [
        f"{'Variable':<{width}}  {'Estimate':>12}  {'Std. err':>10}",
        "-" * (width + 26),
    ]
    for name, b, s, p in zip(
        model.column_names, model.beta_mle, model.std_errs, model.p_values
    ):
        lines.append(f"{name:<{width}}  {b:>10.3f}{_stars(p):<2}  {s:>10.3f}")
    lines.append("-" * (width + 26))
    lines.append(f"{'Log-likelihood':<{width}}  {model.loglik:>12.3f}")
    if summary is not None:
        lines.append(f"{'McFadden rho-bar-sq':<{width}}  {summary.mcfadden_rho_bar_sq:>12.3f}")
        lines.append(f"{'AIC':<{width}}  {summary.aic:>12.1f}")
    lines.append("Note: * p < 0.05, ** p < 0.01 (two-sided normal).")
    return "\n".join(lines)


def write_estimation_report(model, summary, json_path, text_path):
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(estimation_report(model, summary), fh, indent=2)
        fh.write("\n")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(estimation_report_text(model, summary))
        fh.write("\n")
