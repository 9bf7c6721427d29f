"""
Why detrending strategy matters for inference
=============================================

A Monte Carlo experiment on panels with NO true unemployment effect but
persistent errors and smooth nonlinear state trends. The model with
plain fixed effects finds "significant" effects far more than 5% of the
time; pre-filtering the variables restores the nominal test size.

Takes a minute or two at the default replication count.
"""

from panelmort import ModelSpec, SimConfig, run_monte_carlo
from panelmort.mc import ErrorProcess, TrendProcess

REPS = 300  # bump to 1000 for tighter estimates

cfg = SimConfig(
    n_states=20,
    n_years=27,
    true_beta_u=0.0,  # no effect: every rejection is a false positive
    error_process=ErrorProcess("ar1", sigma=0.01, rho=0.8),
    trend_process=TrendProcess("smooth", scale=0.001),
    unemployment_rho=0.15,
    year_effect_sd=0.01,
    seed=11,
)

print(f"{REPS} replicates, true effect = 0, AR(1) errors + smooth trends\n")
print(f"{'model':6} {'rej@5%':>8} {'cover_ols':>10} {'cover_clust':>12} {'sd(est)':>9}")
for mt in ("B", "L", "D", "HP"):
    out = run_monte_carlo(cfg, ModelSpec(mt, 1), REPS)
    print(f"{mt+'1':6} {out.rejection_rate_at_5pct:8.3f} {out.coverage_ols:10.3f} "
          f"{out.coverage_clustered:12.3f} {100 * out.sd_of_estimates:9.3f}")

# Reading the table: the B1 rejection rate is several times the nominal
# 5% -- the naive standard errors are anti-conservative when trends are
# under-modelled. Clustered intervals help; filtering the trend out of
# every variable before fitting (HP1) brings the test size back near 5%.
