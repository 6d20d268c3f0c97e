"""Certify a sparse recovery with a handful of extra measurements.

A compressible signal is measured with 800 Bernoulli rows; OMP reconstructs
it, and 30 held-out rows estimate the reconstruction error.  The estimate is
sandwiched between explicit factors of the true error with high probability.
"""
from adq import cs_cv

for r in (10, 30, 60):
    trial = cs_cv.omp_cv_experiment(N=3600, m=800, k=200, d=100, noise_sd=0.05, r=r,
                                    realizations=40, xi=0.01, C=1.0, seed=r)
    print(f"r = {r:2d}: coverage {trial.coverage:.2f}, CV pick no worse than OMP "
          f"{trial.beats_omp:.2f}, best 100-term error {trial.sigma_d:.3f}")
