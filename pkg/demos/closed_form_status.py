r"""
How good are the closed forms?
------------------------------
The validation grid compares the closed-form conditional Fano factor and the
two noise-reduction variants with the exact model, and checks Monte Carlo
estimates against it. Only the difference-variant noise reduction formula and
the Monte Carlo z-scores can fail the run; the conditional Fano deviations
are reported.
"""
import numpy as np

from twinbeam.sweep import DEFAULT_VALIDATION_GRID, validate

#%%
# Theory-only pass over the default grid (add ``mc=True`` for z-scores).
report = validate(DEFAULT_VALIDATION_GRID, mc=False)
print(" M    mu     m2  closed    exact     |dev|    nrf product dev")
for r in report.rows:
    print(f"{r['M']:4.1f} {r['mu']:6.1f}  {r['m2']}  {r['fano_formula']:8.4f} {r['fano_exact']:8.4f} "
          f"{r['fano_deviation']:8.4f}   {r['nrf_product_deviation']:.2e}")
print("failed:", report.failed)

#%%
# The difference variant of the noise reduction formula is exact for the
# model; the product variant carries an extra ``M**3 / (2 mu)`` term.
dev = np.array([r["nrf_difference_deviation"] for r in report.rows])
print("max difference-variant deviation:", dev.max())

#%%
# A small Monte Carlo check at one point.
mc = validate([(1.0, 10.0, 0.15, 1), (1.0, 10.0, 0.15, 2)], shots=200_000, seed=1)
for r in mc.rows:
    print(f"m2={r['m2']}  z(R)={r['mc_nrf_z']:+.2f}  z(F)={r['mc_fano_z']:+.2f}  "
          f"samples={r['mc_samples']}  {r['status']}")
