import numpy as np
import pytest

from choicecheck import (
    ChoiceDataset,
    DesignMatrix,
    DesignSpec,
    DimensionError,
    DomainError,
    LinearTerm,
    SingularDesignError,
    build_design,
    cross_validate,
    estimation_report,
    estimation_report_text,
    fit_mle,
    fit_model,
    fit_summary,
    gradient,
    hessian,
    log_likelihood,
    null_log_likelihood,
    probabilities,
)
from choicecheck.synthetic import random_design, random_valid_choices


def tiny_design():
    # one choice set, two alternatives, one column
    return DesignMatrix(
        values=np.array([[1.0], [3.0]]),
        column_names=("x",),
        obs_ids=np.array([1, 1]),
        alt_ids=np.array([1, 2]),
        set_starts=np.array([0]),
    )


class TestProbabilities:
    def test_two_alternative_hand_value(self):
        # u = (0.5, 1.5); p1 = e^0.5 / (e^0.5 + e^1.5) = 1 / (1 + e^1)
        p = probabilities(tiny_design(), [0.5])
        np.testing.assert_allclose(p[0], 0.2689414213699951, rtol=1e-12)
        np.testing.assert_allclose(p[1], 0.7310585786300049, rtol=1e-12)

    def test_sets_sum_to_one(self, rng):
        design = random_design(n_obs=40, n_alts=5, n_cols=3, seed=5)
        beta = rng.normal(size=3)
        p = probabilities(design, beta)
        sums = np.add.reduceat(p, design.set_starts)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_shift_invariance(self, rng):
        design = random_design(n_obs=30, n_alts=4, n_cols=2, seed=6)
        beta = rng.normal(size=3)
        shifted = DesignMatrix(
            values=np.column_stack([design.values, np.ones(design.n_rows)]),
            column_names=design.column_names + ("shift",),
            obs_ids=design.obs_ids,
            alt_ids=design.alt_ids,
            set_starts=design.set_starts,
        )
        # a coefficient on an all-ones column adds a constant within every set
        base = probabilities(shifted, np.append(beta[:2], 0.0))
        moved = probabilities(shifted, np.append(beta[:2], 57.0))
        np.testing.assert_allclose(moved, base, atol=1e-12)

    def test_extreme_utilities_do_not_overflow(self):
        p = probabilities(tiny_design(), [500.0])
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p.sum(), 1.0)

    def test_beta_length_checked(self):
        with pytest.raises(DimensionError, match="length 2"):
            probabilities(tiny_design(), [0.1, 0.2])

    def test_beta_must_be_finite(self):
        with pytest.raises(DomainError, match="non-finite"):
            probabilities(tiny_design(), [np.nan])


class TestDerivatives:
    def finite_diff(self, design, choices, beta, h=1e-6):
        k = beta.size
        grad = np.empty(k)
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            grad[j] = (
                log_likelihood(design, choices, beta + e)
                - log_likelihood(design, choices, beta - e)
            ) / (2 * h)
        return grad

    def test_gradient_matches_central_differences(self, rng):
        design = random_design(n_obs=25, n_alts=4, n_cols=4, seed=17)
        choices = random_valid_choices(25, 4, seed=18)
        beta = rng.normal(scale=0.5, size=4)
        g = gradient(design, choices, beta)
        fd = self.finite_diff(design, choices, beta)
        np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-8)

    def test_hessian_matches_gradient_differences(self, rng):
        design = random_design(n_obs=25, n_alts=4, n_cols=3, seed=19)
        choices = random_valid_choices(25, 4, seed=20)
        beta = rng.normal(scale=0.5, size=3)
        h = 1e-5
        fd = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[:, j] = (
                gradient(design, choices, beta + e)
                - gradient(design, choices, beta - e)
            ) / (2 * h)
        np.testing.assert_allclose(hessian(design, choices, beta), fd, rtol=1e-5, atol=1e-7)

    def test_hessian_negative_semi_definite(self, rng):
        design = random_design(n_obs=30, n_alts=3, n_cols=4, seed=21)
        choices = random_valid_choices(30, 3, seed=22)
        h = hessian(design, choices, rng.normal(size=4))
        eigvals = np.linalg.eigvalsh(h)
        assert eigvals.max() <= 1e-10


class TestFitMle:
    def test_matches_independent_optimizer(self):
        from scipy.optimize import minimize

        design = random_design(n_obs=120, n_alts=3, n_cols=3, seed=30)
        choices = random_valid_choices(120, 3, seed=31)
        model = fit_mle(design, choices)
        assert model.converged
        # independent climb with numeric gradients only
        res = minimize(
            lambda b: -log_likelihood(design, choices, b),
            np.zeros(3),
            method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 5000},
        )
        assert model.loglik >= -res.fun - 1e-7
        np.testing.assert_allclose(model.beta_mle, res.x, atol=1e-4)

    def test_gradient_small_at_solution(self, toy_model):
        assert toy_model.grad_norm < 1e-6

    def test_init_does_not_change_solution(self):
        design = random_design(n_obs=80, n_alts=3, n_cols=2, seed=33)
        choices = random_valid_choices(80, 3, seed=34)
        a = fit_mle(design, choices)
        b = fit_mle(design, choices, init=[1.5, -2.0])
        np.testing.assert_allclose(a.beta_mle, b.beta_mle, atol=1e-7)

    def test_covariance_is_inverse_information(self, toy_model):
        np.testing.assert_allclose(
            toy_model.covariance @ (-toy_model.hessian),
            np.eye(toy_model.n_params),
            atol=1e-8,
        )
        np.testing.assert_allclose(
            toy_model.std_errs, np.sqrt(np.diag(toy_model.covariance))
        )

    def test_singular_design_names_columns(self):
        design = random_design(n_obs=20, n_alts=3, n_cols=2, seed=35)
        doubled = DesignMatrix(
            values=np.column_stack([design.values, design.values[:, 0]]),
            column_names=("a", "b", "a_copy"),
            obs_ids=design.obs_ids,
            alt_ids=design.alt_ids,
            set_starts=design.set_starts,
        )
        with pytest.raises(SingularDesignError, match="a_copy|'a'"):
            fit_mle(doubled, random_valid_choices(20, 3, seed=36))

    def test_perfect_separation_terminates(self):
        # a dummy equal to the choice indicator has its supremum (LL = 0) at
        # +inf; the climb must still terminate with a finite beta
        design = random_design(n_obs=30, n_alts=2, n_cols=1, seed=37)
        choices = random_valid_choices(30, 2, seed=38)
        sep = DesignMatrix(
            values=choices.astype(float).reshape(-1, 1),
            column_names=("sep",),
            obs_ids=design.obs_ids,
            alt_ids=design.alt_ids,
            set_starts=design.set_starts,
        )
        model = fit_mle(sep, choices, max_iter=60)
        assert np.isfinite(model.beta_mle).all()
        assert -1e-6 < model.loglik <= 0.0


class TestSummaries:
    def test_null_log_likelihood(self):
        # two sets of sizes 2 and 3: -(log 2 + log 3)
        np.testing.assert_allclose(
            null_log_likelihood([2, 3]), -(np.log(2) + np.log(3))
        )

    def test_fit_summary_formulas(self, toy, toy_model):
        dataset, _, _ = toy
        s = fit_summary(toy_model, dataset)
        ll0 = null_log_likelihood(dataset.set_sizes)
        assert s.null_loglik == pytest.approx(ll0)
        assert s.mcfadden_rho_bar_sq == pytest.approx(
            1.0 - (toy_model.loglik - toy_model.n_params) / ll0
        )
        assert s.aic == pytest.approx(2 * toy_model.n_params - 2 * toy_model.loglik)

    def test_report_round_trip(self, toy, toy_model):
        dataset, _, _ = toy
        report = estimation_report(toy_model, fit_summary(toy_model, dataset))
        assert report["terms"] == list(toy_model.column_names)
        assert report["converged"] is True
        assert report["log_likelihood"] == pytest.approx(toy_model.loglik)
        text = estimation_report_text(toy_model)
        for name in toy_model.column_names:
            assert name in text
        assert "Log-likelihood" in text


class TestCrossValidation:
    def test_repeatable_and_partition_valid(self, toy):
        dataset, spec, _ = toy
        a = cross_validate(dataset, spec, k=5, seed=99)
        b = cross_validate(dataset, spec, k=5, seed=99)
        assert a.fold_logliks == b.fold_logliks
        folds = np.array(sorted(a.fold_assignment.values()))
        counts = np.bincount(folds, minlength=5)
        assert counts.sum() == dataset.n_obs
        assert counts.max() - counts.min() <= 1

    def test_mean_is_fold_average(self, toy):
        dataset, spec, _ = toy
        cv = cross_validate(dataset, spec, k=4, seed=7)
        assert cv.mean_loglik == pytest.approx(np.mean(cv.fold_logliks))

    def test_different_seed_moves_folds(self, toy):
        dataset, spec, _ = toy
        a = cross_validate(dataset, spec, k=5, seed=1)
        b = cross_validate(dataset, spec, k=5, seed=2)
        assert a.fold_assignment != b.fold_assignment

    def test_thread_count_does_not_change_result(self, toy):
        dataset, spec, _ = toy
        a = cross_validate(dataset, spec, k=4, seed=12, n_threads=1)
        b = cross_validate(dataset, spec, k=4, seed=12, n_threads=4)
        assert a.fold_logliks == b.fold_logliks

    def test_bad_fold_counts(self, toy):
        dataset, spec, _ = toy
        with pytest.raises(ValueError, match="at least 2"):
            cross_validate(dataset, spec, k=1, seed=0)
        with pytest.raises(ValueError, match="more folds"):
            cross_validate(dataset, spec, k=dataset.n_obs + 1, seed=0)

    def test_unseen_level_warns_and_still_runs(self):
        # a regressor alive in a single choice set is all-zero in training
        # whenever that set is held out
        rng = np.random.default_rng(88)
        n_obs = 6
        rows = n_obs * 2
        rare = np.zeros(rows)
        rare[0] = 1.0
        choice = np.zeros(rows, dtype=int)
        choice[np.arange(n_obs) * 2 + rng.integers(0, 2, n_obs)] = 1
        dataset = ChoiceDataset(
            obs_ids=np.repeat(np.arange(1, n_obs + 1), 2),
            alt_ids=np.tile([1, 2], n_obs),
            choice=choice,
            variables={"x": rng.normal(size=rows), "rare": rare},
        )
        spec = DesignSpec(
            terms=(
                LinearTerm(variable="x", name="x"),
                LinearTerm(variable="rare", name="rare"),
            )
        )
        with pytest.warns(UserWarning, match="unseen"):
            cv = cross_validate(dataset, spec, k=n_obs, seed=3)
        assert len(cv.fold_logliks) == n_obs
        assert np.isfinite(cv.fold_logliks).all()


class TestFitModel:
    def test_keeps_spec_reference(self, toy, toy_model):
        _, spec, _ = toy
        assert toy_model.design_ref == spec

    def test_equivalent_to_manual_pipeline(self, toy):
        dataset, spec, _ = toy
        direct = fit_mle(build_design(dataset, spec), dataset.choice)
        np.testing.assert_allclose(
            fit_model(dataset, spec).beta_mle, direct.beta_mle
        )
