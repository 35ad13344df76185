"""Command-line driver for the estimate, check, cv, forecast and simulate steps.

Every run writes into a directory named by the command and a hash of its
configuration, so re-running with different settings never overwrites old
results and re-running with the same settings is byte-identical. Seeds are
always explicit; there is no wall-clock default.

Exit codes: 0 success, 1 input or configuration error, 2 the optimizer did
not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import load_config, load_design_spec, load_long_csv
from .diagnostics import (
    BinningSpec,
    CheckSuite,
    FailedCheck,
    Labeling,
    ScalarCheck,
    auto_check_suite,
    binned_marginal_model_check,
    check_to_dict,
    discrete_vs_continuous,
    log_predictive_check,
    resolve_labeling,
    write_suite,
    _attempt,
    _related_variables,
)
from .exceptions import ChoiceCheckError, ConfigError
from .forecast import (
    alternative_category_map,
    apply_scenario,
    forecast_shares,
    load_category_map,
    load_scenario,
)
from .mnl import cross_validate, fit_model, fit_summary, write_estimation_report
from .plots import PlotStyle, export_plot_data, render_check, render_market_share_panel
from .simulate import (
    draw_parameters,
    export_outcomes_csv,
    ingest_external_draws,
    simulate_outcomes,
)

__all__ = ["RunConfig", "main"]


@dataclass(frozen=True)
class RunConfig:
    """Resolved flags for one subcommand run."""

    command: str
    data: str
    spec: str
    out: str
    schema: str | None = None
    r_draws: int = 100
    seed: int | None = None
    bins: int = 10
    labeling: str = "labeled"
    variable_map: str | None = None
    scenario: str | None = None
    categories: str | None = None
    folds: int = 10
    external_draws: str | None = None

    def __post_init__(self):
        if self.r_draws < 1:
            raise ConfigError("--r-draws must be at least 1")
        if self.bins < 1:
            raise ConfigError("--bins must be at least 1")

    def canonical(self) -> dict:
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        payload["version"] = __version__
        return payload

    def run_dir(self) -> Path:
        digest = hashlib.sha256(
            json.dumps(self.canonical(), sort_keys=True).encode()
        ).hexdigest()
        return Path(self.out) / f"{self.command}-{digest[:12]}"


def _prepare_run_dir(config: RunConfig) -> Path:
    run_dir = config.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(
        json.dumps(config.canonical(), indent=2, sort_keys=True) + "\n"
    )
    return run_dir


def _load_inputs(config: RunConfig):
    schema = load_config(config.schema) if config.schema else None
    dataset = load_long_csv(config.data, schema)
    spec = load_design_spec(config.spec)
    return dataset, spec


def _parse_labeling(text: str) -> Labeling:
    mode, _, arg = text.partition(":")
    if mode == "proxy":
        if not arg:
            raise ConfigError("--labeling proxy:<variable> needs a variable name")
        return Labeling(mode="proxy", variable=arg)
    if mode == "labeled":
        alts = tuple(int(a) for a in arg.split(",")) if arg else None
        return Labeling(mode="labeled", alts=alts)
    if mode == "chosen_vs_not":
        return Labeling(mode="chosen_vs_not")
    raise ConfigError(f"unknown labeling {text!r}")


def _draws_for(config: RunConfig, model):
    if config.external_draws:
        return ingest_external_draws(config.external_draws, model.n_params)
    return draw_parameters(model, config.r_draws, config.seed)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_estimate(config: RunConfig) -> int:
    dataset, spec = _load_inputs(config)
    run_dir = _prepare_run_dir(config)
    model = fit_model(dataset, spec)
    summary = fit_summary(model, dataset)
    write_estimation_report(
        model, summary, run_dir / "estimate.json", run_dir / "estimate.txt"
    )
    print((run_dir / "estimate.txt").read_text(), end="")
    print(f"wrote {run_dir}")
    if not model.converged:
        print("warning: optimizer did not converge", file=sys.stderr)
        return 2
    return 0


def _fitted_or_exit(dataset, spec, run_dir):
    model = fit_model(dataset, spec)
    if not model.converged:
        summary = fit_summary(model, dataset)
        write_estimation_report(
            model, summary, run_dir / "estimate.json", run_dir / "estimate.txt"
        )
        print("error: optimizer did not converge; report written", file=sys.stderr)
        return None
    return model


def cmd_check(config: RunConfig) -> int:
    from .data import build_design

    dataset, spec = _load_inputs(config)
    run_dir = _prepare_run_dir(config)
    model = _fitted_or_exit(dataset, spec, run_dir)
    if model is None:
        return 2
    design = build_design(dataset, spec)
    draws = _draws_for(config, model)
    ensemble = simulate_outcomes(design, draws, config.seed)
    labeling = _parse_labeling(config.labeling)
    variable_map = load_config(config.variable_map) if config.variable_map else None
    bins = BinningSpec(config.bins)
    suite = auto_check_suite(
        dataset,
        design,
        model,
        ensemble,
        labeling,
        variable_map=variable_map,
        spec=spec,
        bins=bins,
        error_policy="record",
    )
    # The headline fit statistic and the per-variable marginal curves are
    # worth having in every run even though the walk of groups and related
    # variables does not generate them.
    extras = [log_predictive_check(model, dataset, design, ensemble)]
    for group in resolve_labeling(dataset, labeling):
        for name in _related_variables(dataset, spec, variable_map, group):
            if discrete_vs_continuous(dataset.variable(name)) != "continuous":
                continue
            extras.append(
                _attempt(
                    lambda g=group, n=name: binned_marginal_model_check(
                        model,
                        dataset,
                        design,
                        ensemble,
                        x_var=n,
                        bins=bins,
                        row_mask=g.row_mask,
                        label=f"{g.label} vs {n}",
                    ),
                    "record",
                    {
                        "check_type": "marginal_model",
                        "label": f"{group.label} vs {name}",
                        "variable": name,
                        "seed": ensemble.seed,
                        "r_count": ensemble.r_count,
                    },
                )
            )
    suite = CheckSuite(
        checks=extras[:1] + suite.checks + extras[1:],
        labeling_mode=suite.labeling_mode,
        seed=suite.seed,
        r_count=suite.r_count,
    )
    paths = write_suite(suite, run_dir)
    style = PlotStyle()
    share_checks = []
    for path, check in zip(paths, suite.checks):
        if isinstance(check, FailedCheck):
            continue
        render_check(check, style, path.with_suffix(".svg"))
        export_plot_data(check, path.with_suffix(".csv"))
        if check.check_type == "market_share":
            share_checks.append(check)
    if len(share_checks) > 1:
        render_market_share_panel(share_checks, style, run_dir / "market_shares.svg")

    failed = 0
    for check in suite.checks:
        if isinstance(check, FailedCheck):
            failed += 1
            print(f"  FAILED {check.check_type:<20} {check.label}: {check.error}")
        elif isinstance(check, ScalarCheck):
            print(
                f"  p={check.p_value:5.3f} {check.check_type:<20} {check.label}"
                + (f" [{check.variable} = {check.value}]" if check.variable else "")
            )
        else:
            skipped = f" (skipped {len(check.skipped_draws)})" if check.skipped_draws else ""
            print(f"  curve   {check.check_type:<20} {check.label}{skipped}")
    print(f"{len(suite.checks)} checks ({failed} failed), wrote {run_dir}")
    return 0


def cmd_cv(config: RunConfig) -> int:
    dataset, spec = _load_inputs(config)
    run_dir = _prepare_run_dir(config)
    result = cross_validate(dataset, spec, k=config.folds, seed=config.seed)
    payload = {
        "k": result.k,
        "seed": result.seed,
        "fold_logliks": result.fold_logliks,
        "mean_loglik": result.mean_loglik,
    }
    (run_dir / "cv.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for i, ll in enumerate(result.fold_logliks):
        print(f"  fold {i}: out-of-sample LL = {ll:.3f}")
    print(f"mean out-of-sample LL over {result.k} folds: {result.mean_loglik:.3f}")
    print(f"wrote {run_dir}")
    return 0


def cmd_forecast(config: RunConfig) -> int:
    dataset, spec = _load_inputs(config)
    if not config.scenario:
        raise ConfigError("forecast needs --scenario")
    scenario = load_scenario(config.scenario)
    category_map = (
        load_category_map(config.categories)
        if config.categories
        else alternative_category_map(dataset)
    )
    run_dir = _prepare_run_dir(config)
    model = _fitted_or_exit(dataset, spec, run_dir)
    if model is None:
        return 2
    scenario_dataset = apply_scenario(dataset, scenario)
    draws = None
    if config.seed is not None:
        draws = _draws_for(config, model)
    report = forecast_shares(
        model,
        dataset,
        scenario_dataset,
        spec,
        category_map,
        draws=draws,
        scenario_name=scenario.name,
    )
    report.write(run_dir / "forecast.json", run_dir / "forecast.txt")
    print(report.text_table(), end="")
    print(f"wrote {run_dir}")
    return 0


def cmd_simulate(config: RunConfig) -> int:
    from .data import build_design

    dataset, spec = _load_inputs(config)
    run_dir = _prepare_run_dir(config)
    model = _fitted_or_exit(dataset, spec, run_dir)
    if model is None:
        return 2
    design = build_design(dataset, spec)
    draws = _draws_for(config, model)
    ensemble = simulate_outcomes(design, draws, config.seed)
    np.savetxt(run_dir / "draws.csv", draws.draws, delimiter=",")
    export_outcomes_csv(ensemble, run_dir / "outcomes.csv")
    (run_dir / "ensemble.json").write_text(
        json.dumps(ensemble.metadata(), indent=2, sort_keys=True) + "\n"
    )
    print(f"simulated {ensemble.r_count} datasets of {design.n_obs} choices")
    print(f"wrote {run_dir}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for non-convergence; usage errors are input
    # errors and must exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="choicecheck",
        description="Estimate multinomial logit models and check them for underfitting.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required):
        p.add_argument("--data", required=True, help="long-format CSV of choice data")
        p.add_argument("--spec", required=True, help="design spec (JSON or TOML)")
        p.add_argument("--schema", help="column-name schema (JSON or TOML)")
        p.add_argument("--out", default="runs", help="output directory root")
        if seed_required is not None:
            p.add_argument(
                "--seed",
                type=int,
                required=seed_required,
                help="master RNG seed (explicit; no clock default)",
            )

    p = sub.add_parser("estimate", help="fit the model and write the estimate report")
    common(p, seed_required=None)

    p = sub.add_parser("check", help="run the full battery of underfitting checks")
    common(p, seed_required=True)
    p.add_argument("--r-draws", type=int, default=100, help="simulated datasets R")
    p.add_argument("--bins", type=int, default=10, help="bins K for binned checks")
    p.add_argument(
        "--labeling",
        default="labeled",
        help="labeled[:alt,alt] | proxy:<variable> | chosen_vs_not",
    )
    p.add_argument("--variable-map", help="JSON map of group label to related variables")
    p.add_argument("--external-draws", help="headerless CSV of parameter draws")

    p = sub.add_parser("cv", help="k-fold cross-validated out-of-sample log-likelihood")
    common(p, seed_required=True)
    p.add_argument("--folds", type=int, default=10, help="number of folds")

    p = sub.add_parser("forecast", help="market-share change under a scenario")
    common(p, seed_required=False)
    p.add_argument("--scenario", required=True, help="scenario file (JSON or TOML)")
    p.add_argument("--categories", help="category map file; default one per alternative")
    p.add_argument("--r-draws", type=int, default=100, help="draws for the interval")
    p.add_argument("--external-draws", help="headerless CSV of parameter draws")

    p = sub.add_parser("simulate", help="export the simulated ensemble")
    common(p, seed_required=True)
    p.add_argument("--r-draws", type=int, default=100, help="simulated datasets R")
    p.add_argument("--external-draws", help="headerless CSV of parameter draws")
    return parser


_COMMANDS = {
    "estimate": cmd_estimate,
    "check": cmd_check,
    "cv": cmd_cv,
    "forecast": cmd_forecast,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = (
        "data",
        "spec",
        "schema",
        "out",
        "r_draws",
        "seed",
        "bins",
        "labeling",
        "variable_map",
        "scenario",
        "categories",
        "folds",
        "external_draws",
    )
    kwargs = {f: getattr(args, f) for f in fields if hasattr(args, f)}
    try:
        config = RunConfig(command=args.command, **kwargs)
        return _COMMANDS[args.command](config)
    except ChoiceCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
