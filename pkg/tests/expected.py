"""Frozen reference values.

Hand-derived values carry their arithmetic; regression values were produced
once by this implementation and pin its numerical behaviour.
"""

# predict_twtoa: w d/c + w T/2
PREDICT_UNIT = 5.0  # w=1, T=0, d=500, c=100
PREDICT_SKEWED = 1.0001 * 1e-6 + 1.0001 * 5e-7  # = 1.50015e-6 s

# residual_l1 single-measurement example: |2*1 - 2/2 - 0.5|
RESIDUAL_SINGLE = 0.5

# regression: benchmark layout (verbatim), N=6, K=2, target (100, -250) m,
# c*sigma = c*gamma = 10 m, w = 1.0001, T = 1 us
CRLB_TARGET_M2 = 20.795228099157804

# regression: simulate() of that scenario with make_rng(42)
SIM_Z00 = 4.712025753686032e-06
SIM_T00 = 1.0022010232520405e-06

# regression: run_experiment(ExperimentSpec(trials=4, all methods, master_seed=7))
BENCH_SMALL = {
    "MLE": 7.109461089388221,
    "AMLE": 7.036711556135383,
    "LLS": 15.991850414383855,
    "SQLS": 15.617794444692981,
    "CCCP": 7.616263569322282,
}
BENCH_SMALL_CRLB = 6.253926062308981
