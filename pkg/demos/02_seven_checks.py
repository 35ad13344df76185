"""
The seven graphical underfitting checks
=======================================

Simulate a reference ensemble from the fitted model's sampling distribution,
then compare the observed data against it with each of the seven checks:
log-predictive, market shares, binned reliability, binned marginal model,
simulated histograms, simulated KDEs and simulated CDFs. Every check is
rendered to an SVG next to this script.
"""

from pathlib import Path

from choicecheck import (
    binned_marginal_model_check,
    binned_reliability_check,
    build_design,
    draw_parameters,
    fit_model,
    log_predictive_check,
    market_share_check,
    render_check,
    render_market_share_panel,
    simulate_outcomes,
    simulated_cdf_check,
    simulated_histogram_check,
    simulated_kde_check,
)
from choicecheck.synthetic import labeled_toy

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

dataset, spec, _ = labeled_toy(n_obs=400, seed=7)
model = fit_model(dataset, spec)
design = build_design(dataset, spec)

# R parameter vectors from the asymptotic sampling distribution, then one
# simulated choice vector per parameter draw. The ensemble is the yardstick
# that every check measures the observed data against.
draws = draw_parameters(model, r_count=200, seed=42)
ensemble = simulate_outcomes(design, draws, seed=42)

# 1. log-predictive: is the observed log-likelihood typical of data the
# model generates itself? A p-value near 0 or 1 flags trouble.
lp = log_predictive_check(model, dataset, design, ensemble)
print(f"log-predictive: observed {lp.observed:.1f}, p = {lp.p_value:.3f}")
render_check(lp, out_path=out_dir / "check_log_predictive.svg")

# 2. market shares: chosen counts per alternative.
shares = market_share_check(dataset, ensemble)
for share in shares:
    print(f"market share {share.label}: observed {share.observed:.0f}, p = {share.p_value:.3f}")
    render_check(share, out_path=out_dir / f"check_share_alt{share.alt}.svg")
render_market_share_panel(shares, out_path=out_dir / "check_shares_panel.svg")

# 3. binned reliability: do predicted probabilities match observed
# frequencies? Rows are binned by the point-estimate probabilities.
rel = binned_reliability_check(model, dataset, design, ensemble, alt=1)
render_check(rel, out_path=out_dir / "check_reliability_alt1.svg")

# 4. binned marginal model plot: choice share against one variable, with
# the tighter band of per-draw expected probabilities drawn behind the
# simulated shares.
marg = binned_marginal_model_check(model, dataset, design, ensemble, alt=1, x_var="cost")
render_check(marg, out_path=out_dir / "check_marginal_alt1_cost.svg")

# 5. simulated histogram: how many choosers of alternative 1 have
# service level 2? Counts the same thing in every simulated dataset.
hist = simulated_histogram_check(dataset, ensemble, alt=1, discrete_var="service", value=2.0)
print(f"histogram (service == 2): observed {hist.observed:.0f}, p = {hist.p_value:.3f}")
render_check(hist, out_path=out_dir / "check_histogram_alt1_service2.svg")

# 6. simulated KDE: the distribution of cost among choosers of
# alternative 1, observed curve against the simulated band.
kde = simulated_kde_check(dataset, ensemble, alt=1, cont_var="cost")
render_check(kde, out_path=out_dir / "check_kde_alt1_cost.svg")

# 7. simulated CDF: same comparison without bandwidth choices; step
# functions on a shared grid.
cdf = simulated_cdf_check(dataset, ensemble, alt=1, cont_var="cost")
render_check(cdf, out_path=out_dir / "check_cdf_alt1_cost.svg")

print(f"\nSVGs written to {out_dir}")
