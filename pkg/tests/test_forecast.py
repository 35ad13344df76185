import dataclasses
import json

import numpy as np
import pytest

from choicecheck import (
    Category,
    CategoryMap,
    Condition,
    ConfigError,
    CoverageError,
    Scenario,
    Transform,
    ValidationError,
    apply_scenario,
    build_design,
    draw_parameters,
    forecast_shares,
    load_category_map,
    load_scenario,
    probabilities,
)
from choicecheck.forecast import alternative_category_map


class TestCondition:
    def test_operators(self, toy):
        dataset, _, _ = toy
        cost = dataset.numeric_variable("cost")
        assert (Condition("cost", 1.5, "<").mask(dataset) == (cost < 1.5)).all()
        assert (Condition("cost", 1.5, ">=").mask(dataset) == (cost >= 1.5)).all()
        service = dataset.variable("service")
        got = Condition("service", (0.0, 2.0), "in").mask(dataset)
        assert (got == np.isin(service, [0.0, 2.0])).all()

    def test_alt_id_pseudo_variable(self, toy):
        dataset, _, _ = toy
        assert (Condition("alt_id", 2).mask(dataset) == (dataset.alt_ids == 2)).all()

    def test_unknown_operator(self):
        with pytest.raises(ConfigError, match="operator"):
            Condition("cost", 1.0, "~=")

    def test_describe(self):
        assert Condition("cost", 1.5, "<").describe() == "cost < 1.5"


class TestTransform:
    def test_needs_exactly_one_action(self):
        with pytest.raises(ConfigError, match="exactly one"):
            Transform(variable="cost")
        with pytest.raises(ConfigError, match="exactly one"):
            Transform(variable="cost", multiplier=1.2, delta=0.1)


class TestApplyScenario:
    def test_identity_multiplier_changes_nothing(self, toy):
        dataset, _, _ = toy
        out = apply_scenario(
            dataset, Scenario(name="noop", transforms=(Transform("cost", multiplier=1.0),))
        )
        np.testing.assert_array_equal(
            out.numeric_variable("cost"), dataset.numeric_variable("cost")
        )

    def test_masked_multiplier_touches_only_matches(self, toy):
        dataset, _, _ = toy
        scenario = Scenario(
            name="bump alt 2",
            transforms=(
                Transform(
                    "cost", conditions=(Condition("alt_id", 2),), multiplier=1.2
                ),
            ),
        )
        out = apply_scenario(dataset, scenario)
        before = dataset.numeric_variable("cost")
        after = out.numeric_variable("cost")
        hit = dataset.alt_ids == 2
        np.testing.assert_allclose(after[hit], before[hit] * 1.2)
        np.testing.assert_array_equal(after[~hit], before[~hit])

    def test_delta(self, toy):
        dataset, _, _ = toy
        out = apply_scenario(
            dataset, Scenario(name="shift", transforms=(Transform("cost", delta=0.5),))
        )
        np.testing.assert_allclose(
            out.numeric_variable("cost"), dataset.numeric_variable("cost") + 0.5
        )

    def test_disjoint_transforms_commute(self, toy):
        dataset, _, _ = toy
        t1 = Transform("cost", conditions=(Condition("alt_id", 1),), multiplier=2.0)
        t2 = Transform("cost", conditions=(Condition("alt_id", 2),), delta=1.0)
        a = apply_scenario(dataset, Scenario(name="ab", transforms=(t1, t2)))
        b = apply_scenario(dataset, Scenario(name="ba", transforms=(t2, t1)))
        np.testing.assert_array_equal(
            a.numeric_variable("cost"), b.numeric_variable("cost")
        )

    def test_stacked_transforms_compose(self, toy):
        dataset, _, _ = toy
        scenario = Scenario(
            name="twice",
            transforms=(
                Transform("cost", multiplier=2.0),
                Transform("cost", delta=1.0),
            ),
        )
        out = apply_scenario(dataset, scenario)
        np.testing.assert_allclose(
            out.numeric_variable("cost"), dataset.numeric_variable("cost") * 2.0 + 1.0
        )

    def test_source_untouched(self, toy):
        dataset, _, _ = toy
        before = dataset.numeric_variable("cost").copy()
        apply_scenario(
            dataset, Scenario(name="x", transforms=(Transform("cost", delta=9.0),))
        )
        np.testing.assert_array_equal(dataset.numeric_variable("cost"), before)

    def test_empty_filter_warns(self, toy):
        dataset, _, _ = toy
        scenario = Scenario(
            name="ghost",
            transforms=(
                Transform("cost", conditions=(Condition("alt_id", 77),), delta=1.0),
            ),
        )
        with pytest.warns(UserWarning, match="matches no rows"):
            apply_scenario(dataset, scenario)

    def test_non_finite_result_rejected(self, toy):
        dataset, _, _ = toy
        scenario = Scenario(
            name="inf", transforms=(Transform("cost", multiplier=1e308),)
        )
        big = dataset.with_variables({"cost": np.full(dataset.n_rows, 1e308)})
        with np.errstate(over="ignore"), pytest.raises(ValidationError, match="non-finite"):
            apply_scenario(big, scenario)


class TestScenarioFiles:
    def test_load_json(self, tmp_path):
        path = tmp_path / "scen.json"
        path.write_text(
            json.dumps(
                {
                    "name": "price up",
                    "transforms": [
                        {
                            "variable": "cost",
                            "multiplier": 1.2,
                            "conditions": [
                                {"variable": "alt_id", "value": 1},
                                {"variable": "service", "value": 1.0, "op": ">="},
                            ],
                        }
                    ],
                }
            )
        )
        scenario = load_scenario(path)
        assert scenario.name == "price up"
        assert scenario.transforms[0].multiplier == 1.2
        assert scenario.transforms[0].conditions[1].op == ">="

    def test_name_defaults_to_stem(self, tmp_path):
        path = tmp_path / "quiet.json"
        path.write_text(json.dumps({"transforms": []}))
        assert load_scenario(path).name == "quiet"

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"transforms": [{"multiplier": 2.0}]}))
        with pytest.raises(ConfigError, match="missing field"):
            load_scenario(path)


class TestCategoryMap:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError, match="unique"):
            CategoryMap(categories=(Category(name="a"), Category(name="a")))

    def test_first_match_wins(self, toy):
        dataset, _, _ = toy
        cmap = CategoryMap(
            categories=(
                Category(name="cheap", conditions=(Condition("cost", 1.5, "<"),)),
                Category(name="rest"),
            )
        )
        assigned = cmap.assign(dataset)
        cheap = dataset.numeric_variable("cost") < 1.5
        np.testing.assert_array_equal(assigned, np.where(cheap, 0, 1))

    def test_uncovered_row_named(self, toy):
        dataset, _, _ = toy
        cmap = CategoryMap(
            categories=(Category(name="one", conditions=(Condition("alt_id", 1),)),)
        )
        with pytest.raises(CoverageError, match="obs_id=1, alt_id=2"):
            cmap.assign(dataset)

    def test_alternative_fallback(self, toy):
        dataset, _, _ = toy
        cmap = alternative_category_map(dataset)
        assert cmap.names == ["alternative 1", "alternative 2"]
        assigned = cmap.assign(dataset)
        np.testing.assert_array_equal(assigned, dataset.alt_ids - 1)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cats.json"
        path.write_text(
            json.dumps(
                {
                    "categories": [
                        {"name": "a", "conditions": [{"variable": "alt_id", "value": 1}]},
                        {"name": "b"},
                    ]
                }
            )
        )
        cmap = load_category_map(path)
        assert cmap.names == ["a", "b"]

    def test_load_missing_name(self, tmp_path):
        path = tmp_path / "cats.json"
        path.write_text(json.dumps({"categories": [{"conditions": []}]}))
        with pytest.raises(ConfigError, match="missing field"):
            load_category_map(path)


def price_scenario():
    return Scenario(
        name="alt-1 cost +20%",
        transforms=(
            Transform("cost", conditions=(Condition("alt_id", 1),), multiplier=1.2),
        ),
    )


class TestForecastShares:
    def test_identity_scenario_zero_change(self, toy, toy_model):
        dataset, spec, _ = toy
        report = forecast_shares(
            toy_model, dataset, dataset, spec, alternative_category_map(dataset),
            scenario_name="noop",
        )
        for c in report.categories:
            assert c.scenario_share == pytest.approx(c.baseline_share)
            assert c.relative_change_pct == pytest.approx(0.0)

    def test_shares_sum_to_one(self, toy, toy_model):
        dataset, spec, _ = toy
        scen = apply_scenario(dataset, price_scenario())
        report = forecast_shares(
            toy_model, dataset, scen, spec, alternative_category_map(dataset)
        )
        assert sum(c.baseline_share for c in report.categories) == pytest.approx(1.0, abs=1e-9)
        assert sum(c.scenario_share for c in report.categories) == pytest.approx(1.0, abs=1e-9)

    def test_baseline_share_is_mean_probability(self, toy, toy_model):
        dataset, spec, _ = toy
        report = forecast_shares(
            toy_model, dataset, dataset, spec, alternative_category_map(dataset)
        )
        p = probabilities(build_design(dataset, spec), toy_model.beta_mle)
        want = p[dataset.alt_ids == 1].sum() / dataset.n_obs
        assert report.by_name("alternative 1").baseline_share == pytest.approx(want)

    def test_price_rise_moves_share_away(self, toy, toy_model):
        dataset, spec, _ = toy
        # cost enters negatively, so raising alternative 1's cost must cut
        # its share and raise the other's
        assert toy_model.beta_mle[0] < 0
        scen = apply_scenario(dataset, price_scenario())
        report = forecast_shares(
            toy_model, dataset, scen, spec, alternative_category_map(dataset)
        )
        assert report.by_name("alternative 1").relative_change_pct < 0
        assert report.by_name("alternative 2").relative_change_pct > 0

    def test_zero_coefficient_variable_is_inert(self, toy, toy_model):
        dataset, spec, _ = toy
        # zero out the cost coefficient: editing cost cannot move any share
        silenced = dataclasses.replace(
            toy_model, beta_mle=toy_model.beta_mle * np.array([0.0, 1.0, 1.0])
        )
        scen = apply_scenario(dataset, price_scenario())
        report = forecast_shares(
            silenced, dataset, scen, spec, alternative_category_map(dataset)
        )
        for c in report.categories:
            assert abs(c.relative_change_pct) <= 1e-12

    def test_external_probs_match_model_path(self, toy, toy_model):
        dataset, spec, _ = toy
        scen = apply_scenario(dataset, price_scenario())
        design_base = build_design(dataset, spec)
        design_scen = build_design(scen, spec)
        p_base = probabilities(design_base, toy_model.beta_mle)
        p_scen = probabilities(design_scen, toy_model.beta_mle)
        via_model = forecast_shares(
            toy_model, dataset, scen, spec, alternative_category_map(dataset)
        )
        via_probs = forecast_shares(
            None, dataset, scen, None, alternative_category_map(dataset),
            external_probs=(p_base, p_scen),
        )
        for a, b in zip(via_model.categories, via_probs.categories):
            assert a.baseline_share == pytest.approx(b.baseline_share)
            assert a.relative_change_pct == pytest.approx(b.relative_change_pct)

    def test_external_prob_tables_averaged(self, toy, toy_model):
        dataset, spec, _ = toy
        design = build_design(dataset, spec)
        p = probabilities(design, toy_model.beta_mle)
        stacked = np.tile(p, (5, 1))
        a = forecast_shares(
            None, dataset, dataset, None, alternative_category_map(dataset),
            external_probs=(stacked, stacked),
        )
        b = forecast_shares(
            None, dataset, dataset, None, alternative_category_map(dataset),
            external_probs=(p, p),
        )
        for x, y in zip(a.categories, b.categories):
            assert x.baseline_share == pytest.approx(y.baseline_share)

    def test_missing_model_and_probs(self, toy):
        dataset, _, _ = toy
        with pytest.raises(ConfigError, match="external probabilities"):
            forecast_shares(
                None, dataset, dataset, None, alternative_category_map(dataset)
            )

    def test_intervals_cover_point_change(self, toy, toy_model):
        dataset, spec, _ = toy
        scen = apply_scenario(dataset, price_scenario())
        draws = draw_parameters(toy_model, 200, seed=19)
        report = forecast_shares(
            toy_model, dataset, scen, spec, alternative_category_map(dataset),
            draws=draws,
        )
        for c in report.categories:
            lo, hi = c.interval_pct
            assert lo <= hi
            # point estimate sits inside its own 5th-95th band
            assert lo - 1.0 <= c.relative_change_pct <= hi + 1.0

    def test_no_draws_no_intervals(self, toy, toy_model):
        dataset, spec, _ = toy
        report = forecast_shares(
            toy_model, dataset, dataset, spec, alternative_category_map(dataset)
        )
        assert all(c.interval_pct is None for c in report.categories)


class TestForecastReport:
    def build(self, toy, toy_model):
        dataset, spec, _ = toy
        scen = apply_scenario(dataset, price_scenario())
        return forecast_shares(
            toy_model, dataset, scen, spec, alternative_category_map(dataset),
            scenario_name="demo",
        )

    def test_top_increases_sorted(self, toy, toy_model):
        report = self.build(toy, toy_model)
        top = report.top_increases(2)
        changes = [c.relative_change_pct for c in top]
        assert changes == sorted(changes, reverse=True)
        assert top[0].name == "alternative 2"

    def test_text_table_layout(self, toy, toy_model):
        report = self.build(toy, toy_model)
        text = report.text_table()
        lines = text.splitlines()
        assert lines[0] == "Forecast: demo"
        assert "Category" in lines[1] and "Change %" in lines[1]
        # sorted by change: the gainer is listed first
        assert lines[2].startswith("alternative 2")

    def test_write_files(self, toy, toy_model, tmp_path):
        report = self.build(toy, toy_model)
        jpath = tmp_path / "forecast.json"
        tpath = tmp_path / "forecast.txt"
        report.write(json_path=jpath, text_path=tpath)
        data = json.loads(jpath.read_text())
        assert data["scenario"] == "demo"
        assert {c["name"] for c in data["categories"]} == {
            "alternative 1", "alternative 2",
        }
        assert tpath.read_text() == report.text_table()

    def test_unknown_category(self, toy, toy_model):
        report = self.build(toy, toy_model)
        with pytest.raises(KeyError):
            report.by_name("nope")
