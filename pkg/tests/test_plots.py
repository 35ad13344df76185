import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from choicecheck import (
    ConfigError,
    Labeling,
    PlotStyle,
    auto_check_suite,
    binned_marginal_model_check,
    binned_reliability_check,
    check_to_dict,
    export_plot_data,
    import_plot_data,
    load_plot_style,
    log_predictive_check,
    market_share_check,
    render_check,
    render_market_share_panel,
    simulated_cdf_check,
    simulated_histogram_check,
)
from choicecheck.svg import SvgCanvas, fmt


def svg_root(path):
    return ET.parse(path).getroot()


def local(tag):
    return tag.rsplit("}", 1)[-1]


def by_class(root, name):
    return [el for el in root.iter() if el.get("class") == name]


def children_of_kind(element, kind):
    return [el for el in element.iter() if local(el.tag) == kind]


class TestSvgPrimitives:
    def test_number_format(self):
        assert fmt(1.234) == "1.23"
        assert fmt(-5.678) == "-5.68"
        # negative zero is normalized so output never depends on sign of zero
        assert fmt(-0.001) == "0.00"
        assert fmt(0.0) == "0.00"

    def test_attributes_sorted_and_dashed(self):
        canvas = SvgCanvas(100, 50)
        canvas.rect(1, 2, 3, 4, stroke_width="2", fill="red", class_="observed")
        text = canvas.to_string()
        rect_line = next(line for line in text.splitlines() if "<rect" in line)
        assert rect_line.index("class=") < rect_line.index("fill=")
        assert rect_line.index("fill=") < rect_line.index("stroke-width=")
        assert "stroke_width" not in text

    def test_byte_deterministic(self):
        def build():
            canvas = SvgCanvas(100, 50)
            g = canvas.group(stroke="#000000")
            canvas.line(0, 0, 10, 10, parent=g)
            canvas.text(5, 5, "hi & <bye>", parent=g)
            return canvas.to_string()

        assert build() == build()

    def test_escaping(self):
        canvas = SvgCanvas(10, 10)
        canvas.text(1, 1, "a < b & c")
        assert "a &lt; b &amp; c" in canvas.to_string()


class TestPlotStyle:
    def test_defaults_valid(self):
        PlotStyle()

    def test_bad_dimensions(self):
        with pytest.raises(ConfigError, match="positive"):
            PlotStyle(width=-5)

    def test_bad_alpha(self):
        with pytest.raises(ConfigError, match="alpha"):
            PlotStyle(simulated_alpha=1.5)

    def test_load_json(self, tmp_path):
        path = tmp_path / "style.json"
        path.write_text(json.dumps({"width": 300, "y_limits": [0, 1]}))
        style = load_plot_style(path)
        assert style.width == 300
        assert style.y_limits == (0, 1)

    def test_load_toml(self, tmp_path):
        path = tmp_path / "style.toml"
        path.write_text('observed_color = "#ff0000"\n')
        assert load_plot_style(path).observed_color == "#ff0000"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "style.json"
        path.write_text(json.dumps({"wdith": 300}))
        with pytest.raises(ConfigError, match="bad plot style"):
            load_plot_style(path)


class TestRenderStructure:
    def test_every_check_type_renders_valid_svg(
        self, toy, toy_model, toy_design, toy_ensemble, tmp_path
    ):
        dataset, spec, _ = toy
        suite = auto_check_suite(
            dataset, toy_design, toy_model, toy_ensemble,
            Labeling(mode="labeled"), spec=spec,
        )
        checks = list(suite.checks)
        checks.append(log_predictive_check(toy_model, dataset, toy_design, toy_ensemble))
        checks.append(
            binned_marginal_model_check(
                toy_model, dataset, toy_design, toy_ensemble, alt=1, x_var="cost"
            )
        )
        seen = set()
        for i, check in enumerate(checks):
            path = render_check(check, out_path=tmp_path / f"fig_{i}.svg")
            root = svg_root(path)
            assert local(root.tag) == "svg"
            assert root.get("version") == "1.1"
            # exactly one observed element per figure
            assert len(by_class(root, "observed")) == 1
            seen.add(check.check_type)
        assert seen >= {
            "market_share", "reliability", "simulated_histogram",
            "simulated_kde", "simulated_cdf", "log_predictive", "marginal_model",
        }

    def test_reliability_figure(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_reliability_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1
        )
        path = render_check(check, out_path=tmp_path / "rel.svg")
        root = svg_root(path)
        reference = by_class(root, "reference")
        assert len(reference) == 1
        assert reference[0].get("stroke-dasharray") == "6,4"
        observed = by_class(root, "observed")[0]
        assert len(children_of_kind(observed, "circle")) == 10
        assert len(children_of_kind(observed, "polyline")) == 1
        simulated = by_class(root, "simulated")[0]
        assert len(children_of_kind(simulated, "polyline")) == toy_ensemble.r_count

    def test_marginal_has_both_bands(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_marginal_model_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1, x_var="cost"
        )
        root = svg_root(render_check(check, out_path=tmp_path / "marg.svg"))
        expected = by_class(root, "expected")
        assert len(expected) == 1
        assert len(children_of_kind(expected[0], "polyline")) == toy_ensemble.r_count
        assert len(by_class(root, "reference")) == 0

    def test_histogram_annotation(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = simulated_histogram_check(
            dataset, toy_ensemble, alt=1, discrete_var="service", value=1.0
        )
        path = render_check(check, out_path=tmp_path / "hist.svg")
        text = path.read_text()
        assert f"observed = {check.observed:g}" in text
        assert f"p = {check.p_value:.3f}" in text

    def test_scalar_density_annotation(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = log_predictive_check(toy_model, dataset, toy_design, toy_ensemble)
        path = render_check(check, out_path=tmp_path / "lp.svg")
        assert f"p = {check.p_value:.3f}" in path.read_text()

    def test_cdf_curves_monotone_in_pixels(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = simulated_cdf_check(dataset, toy_ensemble, alt=1, cont_var="cost")
        root = svg_root(render_check(check, out_path=tmp_path / "cdf.svg"))
        for group in by_class(root, "simulated") + by_class(root, "observed"):
            for poly in children_of_kind(group, "polyline"):
                pts = [p.split(",") for p in poly.get("points").split()]
                ys = [float(y) for _, y in pts]
                # cumulative shares rise, so pixel y falls; allow the
                # 2-decimal rounding jitter
                assert all(b <= a + 0.011 for a, b in zip(ys, ys[1:]))

    def test_market_share_panel(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        checks = market_share_check(dataset, toy_ensemble)
        path = render_market_share_panel(checks, out_path=tmp_path / "shares.svg")
        root = svg_root(path)
        observed = by_class(root, "observed")
        assert len(observed) == 1
        assert len(children_of_kind(observed[0], "circle")) == len(checks)

    def test_render_deterministic(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_reliability_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1
        )
        a = render_check(check, out_path=tmp_path / "a.svg")
        b = render_check(check, out_path=tmp_path / "b.svg")
        assert a.read_bytes() == b.read_bytes()

    def test_missing_out_path(self, toy, toy_ensemble):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[0]
        with pytest.raises(ConfigError, match="output path"):
            render_check(check)

    def test_style_dimensions_respected(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[0]
        path = render_check(
            check, style=PlotStyle(width=321, height=234), out_path=tmp_path / "s.svg"
        )
        root = svg_root(path)
        assert root.get("width") == "321.00"
        assert root.get("height") == "234.00"


class TestPlotData:
    def test_json_round_trip(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_reliability_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1
        )
        path = export_plot_data(check, tmp_path / "rel.json")
        assert import_plot_data(path) == check_to_dict(check)

    def test_csv_round_trip_curve(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_marginal_model_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1, x_var="cost"
        )
        path = export_plot_data(check, tmp_path / "marg.csv")
        d = import_plot_data(path)
        want = check_to_dict(check)
        assert d["x"] == want["x"]
        assert d["observed"] == want["observed"]
        assert d["simulated"] == want["simulated"]
        assert d["expected_curve"] == want["expected_curve"]

    def test_csv_reexport_identical_bytes(self, toy, toy_model, toy_design, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = binned_reliability_check(
            toy_model, dataset, toy_design, toy_ensemble, alt=1
        )
        first = export_plot_data(check, tmp_path / "one.csv")
        again = export_plot_data(import_plot_data(first), tmp_path / "two.csv")
        assert first.read_bytes() == again.read_bytes()

    def test_scalar_csv_rows(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[0]
        path = export_plot_data(check, tmp_path / "share.csv")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#meta ")
        assert lines[1] == "series,draw,index,x,value"
        # observed row plus one row per draw
        assert len(lines) == 2 + 1 + toy_ensemble.r_count

    def test_scalar_csv_round_trip(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[1]
        path = export_plot_data(check, tmp_path / "share.csv")
        d = import_plot_data(path)
        want = check_to_dict(check)
        assert d["observed"] == want["observed"]
        assert d["simulated"] == want["simulated"]
        assert d["p_value"] == want["p_value"]

    def test_unsupported_format(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[0]
        with pytest.raises(ConfigError, match="not supported"):
            export_plot_data(check, tmp_path / "share.parquet")

    def test_import_rejects_plain_csv(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigError, match="plot-data"):
            import_plot_data(path)

    def test_float_precision_survives(self, toy, toy_ensemble, tmp_path):
        dataset, _, _ = toy
        check = market_share_check(dataset, toy_ensemble)[0]
        jpath = export_plot_data(check, tmp_path / "a.json")
        cpath = export_plot_data(check, tmp_path / "a.csv")
        a = import_plot_data(jpath)
        b = import_plot_data(cpath)
        np.testing.assert_array_equal(a["simulated"], b["simulated"])
