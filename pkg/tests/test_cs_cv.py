import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adq import cs_cv
from adq._rng import make_rng
from adq.errors import ConfigError


def sparse_spikes(rng, N, s):
    x = np.zeros(N)
    x[rng.choice(N, s, replace=False)] = rng.choice([-1.0, 1.0], s)
    return x


# ---------------------------------------------------------------- ensembles

def test_bernoulli_entries():
    A = cs_cv.draw_matrix("bernoulli", 25, 40, np.random.default_rng(0))
    assert set(np.unique(A)) == {-0.2, 0.2}


@pytest.mark.parametrize("dist", ["gaussian", "bernoulli"])
def test_column_norms_have_unit_mean(dist):
    A = cs_cv.MeasurementEnsemble(dist, 50, 10_000, seed=3).draw()
    assert 0.95 <= np.linalg.norm(A, axis=0).mean() <= 1.05


def test_unit_column_convention():
    A = cs_cv.MeasurementEnsemble("gaussian", 30, 200, "unit-column").draw()
    assert np.allclose(np.linalg.norm(A, axis=0), 1.0)


def test_ensembles_reproducible_and_lineages_distinct():
    e = cs_cv.MeasurementEnsemble("gaussian", 20, 30, seed=7)
    assert np.array_equal(e.draw(), e.draw())
    assert not np.array_equal(e.draw(0), e.draw(1))
    psi = cs_cv.MeasurementEnsemble("gaussian", 20, 30, seed=7, lineage=(cs_cv.LINEAGE_PSI,))
    assert not np.array_equal(e.draw(), psi.draw())


def test_ensemble_validation():
    with pytest.raises(ConfigError):
        cs_cv.MeasurementEnsemble("cauchy", 2, 2)
    with pytest.raises(ConfigError):
        cs_cv.MeasurementEnsemble("gaussian", 2, 2, "other")
    with pytest.raises(ConfigError):
        cs_cv.draw_matrix("cauchy", 2, 2, np.random.default_rng())


# ---------------------------------------------------------------- omp

def test_omp_identity():
    x = np.zeros(12)
    x[5] = 2.0
    run = cs_cv.omp(np.eye(12), x, 3)
    assert run.chosen.tolist() == [5]
    assert np.array_equal(run.final, x) and run.residual_norms[-1] == 0


def test_omp_tie_goes_to_lowest_index():
    run = cs_cv.omp(np.eye(4), np.array([0.0, 1.0, 0.0, 1.0]), 1)
    assert run.chosen.tolist() == [1]


def test_omp_exact_support_recovery():
    hits = 0
    for trial in range(100):
        rng = make_rng(0, 77, trial)
        Phi = cs_cv.draw_matrix("gaussian", 200, 1000, rng)
        x = sparse_spikes(rng, 1000, 10)
        run = cs_cv.omp(Phi, Phi @ x, 10)
        hits += set(run.support(10).tolist()) == set(np.flatnonzero(x).tolist())
    assert hits >= 95


@settings(max_examples=20)
@given(seed=st.integers(0, 10 ** 6), k=st.integers(1, 40))
def test_omp_invariants(seed, k):
    rng = np.random.default_rng(seed)
    Phi = cs_cv.draw_matrix("gaussian", 60, 150, rng)
    y = rng.standard_normal(60)
    run = cs_cv.omp(Phi, y, k)
    assert len(set(run.chosen.tolist())) == len(run.chosen)
    assert np.all(np.diff(run.residual_norms) <= 1e-12)
    for j in range(1, len(run.chosen) + 1):
        est = run.estimates[j - 1]
        assert set(np.flatnonzero(est).tolist()) <= set(run.support(j).tolist())
        # least-squares optimality: the residual is orthogonal to the support
        resid = y - Phi @ est
        assert np.abs(Phi[:, run.support(j)].T @ resid).max() <= 1e-9
        assert np.linalg.norm(resid) == pytest.approx(run.residual_norms[j - 1], abs=1e-10)


def test_omp_skips_dependent_columns():
    rng = np.random.default_rng(2)
    base = rng.standard_normal((8, 3))
    Phi = np.column_stack([base, base[:, 0]])  # column 3 duplicates column 0
    y = base[:, 0] + 0.5 * base[:, 1] + rng.standard_normal(8) * 0.1
    with pytest.warns(RuntimeWarning):
        run = cs_cv.omp(Phi, y, 4)
    assert 0 in run.chosen.tolist() or 3 in run.chosen.tolist()
    assert not {0, 3} <= set(run.chosen.tolist())
    assert run.skipped


def test_omp_validation():
    with pytest.raises(ConfigError):
        cs_cv.omp(np.eye(3), np.ones(2), 1)
    with pytest.raises(ConfigError):
        cs_cv.omp(np.eye(3), np.ones(3), 4)


def test_omp_zero_measurements():
    run = cs_cv.omp(np.eye(3), np.zeros(3), 2)
    assert run.estimates.shape == (0, 3)


# ---------------------------------------------------------------- dimensioning

def test_epsilon_formula():
    for r in (15, 30, 100):
        assert cs_cv.epsilon_of_r(r, 200, 0.01, 1.0) == pytest.approx(3.03 / math.sqrt(r), rel=2e-3)
    assert cs_cv.epsilon_of_r(30, 200, 0.01, 1.0) == pytest.approx(0.5541, abs=1e-4)


def test_quoted_reference_values_imply_larger_log_argument():
    # .8405 at r=15 and .5943 at r=30 both correspond to log(p/(2 xi)) with
    # p/(2 xi) near 4e4 rather than the 1e4 of p = 200, xi = .01
    for r, eps in ((15, 0.8405), (30, 0.5943)):
        arg = math.exp(eps * eps * r)
        assert 3.5e4 < arg < 4.5e4
        assert cs_cv.epsilon_of_r(r, 200, 0.01, 1.0) < eps


@given(r=st.integers(1, 10 ** 6), p=st.integers(1, 1000), xi=st.floats(1e-4, 0.5), C=st.floats(0.5, 10))
def test_dimensioning_round_trip(r, p, xi, C):
    eps = cs_cv.epsilon_of_r(r, p, xi, C)
    if eps == 0:
        return
    back = cs_cv.r_of_epsilon(eps, p, xi, C)
    assert r - 1 <= back <= r + 1


def test_cv_config():
    cfg = cs_cv.CvConfig(r=cs_cv.r_of_epsilon(0.25, 10, 0.01), eps=0.25, p=10)
    assert cfg.certified
    assert not cs_cv.CvConfig(r=10, eps=0.25, p=10).certified
    with pytest.raises(ConfigError):
        cs_cv.CvConfig(r=10, eps=0.6)


# ---------------------------------------------------------------- cross validation

def test_cv_selects_exact_estimate():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(50)
    Psi = cs_cv.draw_matrix("gaussian", 20, 50, rng)
    est = np.stack([x + 1, x, x - 0.1])
    rep = cs_cv.cv_select(Psi, Psi @ x, est, 0.5)
    assert rep.index == 1 and rep.eta_cv == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("eps, lo, hi", [(0.5, 2 / 3, 2.0), (0.25, 4 / 5, 4 / 3)])
def test_interval_factors(eps, lo, hi):
    rep = cs_cv.cv_select(np.eye(2), np.array([1.0, 0.0]), [[0.0, 0.0]], eps)
    assert rep.error_intervals[0] == pytest.approx([lo, hi])
    assert rep.oracle_interval == pytest.approx((lo, hi))
    rel_lo = (1 - 3 * eps) / ((1 + eps) * (1 - eps) ** 2)
    assert rep.relative_intervals[0] == pytest.approx([rel_lo, 1 / (1 - eps) ** 2])


def test_cv_select_validation():
    with pytest.raises(ConfigError):
        cs_cv.cv_select(np.eye(2), np.ones(2), np.zeros((0, 2)), 0.5)


def test_certificates_hold_at_prescribed_rows():
    # with r from the dimensioning rule (C = 8) the ratios rarely leave range
    rng = np.random.default_rng(4)
    N, p, eps, xi = 300, 20, 0.5, 0.05
    r = cs_cv.r_of_epsilon(eps, p, xi)
    x = rng.standard_normal(N)
    est = x + rng.standard_normal((p, N)) * rng.uniform(0.1, 2, (p, 1))
    true = np.linalg.norm(est - x, axis=1)
    misses = 0
    trials = 200
    for _ in range(trials):
        Psi = cs_cv.draw_matrix("gaussian", r, N, rng)
        rep = cs_cv.cv_select(Psi, Psi @ x, est, eps)
        inside = (true >= rep.error_intervals[:, 0]) & (true <= rep.error_intervals[:, 1])
        misses += not inside.all()
        if inside.all():
            # argmin consistency: the oracle error lies in the oracle interval
            assert rep.oracle_interval[0] <= true.min() <= rep.oracle_interval[1]
    assert misses / trials <= xi


def test_reused_rows_bias_the_estimate_low():
    # validating with rows the decoder already fitted hides most of the error
    rng = np.random.default_rng(5)
    N, m, r, k = 400, 160, 40, 60
    x = sparse_spikes(rng, N, 80) + 0.05 * rng.standard_normal(N)
    Phi = cs_cv.draw_matrix("gaussian", m, N, rng)
    run = cs_cv.omp(Phi, Phi @ x, k)
    true = np.linalg.norm(run.estimates - x, axis=1)
    reused = Phi[:r] * math.sqrt(m / r)
    fresh = cs_cv.draw_matrix("gaussian", r, N, rng)
    eta_reused = cs_cv.cv_select(reused, reused @ x, run.estimates, 0.5).eta_hat
    eta_fresh = cs_cv.cv_select(fresh, fresh @ x, run.estimates, 0.5).eta_hat
    late = slice(k // 2, k)
    assert np.median(eta_reused[late] / true[late]) < 0.5
    assert 0.5 < np.median(eta_fresh[late] / true[late]) < 1.5


# ---------------------------------------------------------------- JL

def test_single_point_violation_rate():
    r = cs_cv.r_of_epsilon(0.25, 1, 0.01)
    pts = np.random.default_rng(1).standard_normal((1, 20))
    rates = cs_cv.jl_violation_rate("gaussian", pts, r, 0.25, 2000, np.random.default_rng(2))
    assert rates.wilson_interval()[0] <= 0.01


def test_jl_rates_reject_zero_points():
    with pytest.raises(ConfigError):
        cs_cv.jl_violation_rate("gaussian", np.zeros((1, 3)), 5, 0.5, 3, np.random.default_rng())


def test_wilson_interval_contains_estimate():
    lo, hi = cs_cv.JlRates(0.1, 0.01, 100).wilson_interval()
    assert lo < 0.1 < hi
    lo, hi = cs_cv.JlRates(0.0, 0.0, 200).wilson_interval()
    assert lo == pytest.approx(0.0, abs=1e-15) and 0.0 < hi < 0.02


# ---------------------------------------------------------------- adaptive, bounds

def adaptive_setup(dense):
    rng = np.random.default_rng(8)
    Phi = cs_cv.draw_matrix("gaussian", 400, 1000, rng)
    x = rng.standard_normal(1000) if dense else sparse_spikes(rng, 1000, 10)
    return Phi, Phi @ x, x


def test_adaptive_sparse_stops_first():
    Phi, y, x = adaptive_setup(False)
    res = cs_cv.adaptive_decode(Phi, y, [100, 200, 300], 40, 0.1)
    assert res.stop_index == 1 and not res.too_dense
    assert np.linalg.norm(res.estimate - x) <= 1e-8


def test_adaptive_dense_warns():
    Phi, y, _ = adaptive_setup(True)
    res = cs_cv.adaptive_decode(Phi, y, [100, 200, 300], 40, 0.1)
    assert res.too_dense and res.stop_index is None and len(res.statistics) == 3


def test_adaptive_infinite_threshold():
    Phi, y, _ = adaptive_setup(True)
    assert cs_cv.adaptive_decode(Phi, y, [100, 200, 300], 40, math.inf).stop_index == 1


def test_adaptive_needs_enough_validation_rows():
    Phi, y, _ = adaptive_setup(False)
    with pytest.raises(ConfigError):
        cs_cv.adaptive_decode(Phi, y, [100, 399], 10, 0.1)  # sqrt(1) <= 3 log 2
    with pytest.raises(ConfigError):
        cs_cv.adaptive_decode(Phi, y, [200, 100], 10, 0.1)


def test_k_term_bounds():
    assert cs_cv.k_term_residual_bounds(0.0, 0.3, 2.0, estimate_is_k_sparse=True) == (0.0, 0.0)
    lo, hi = cs_cv.k_term_residual_bounds(1.0, 0.5, 2.0, resparsified=True)
    assert lo == pytest.approx(0.5 / 6) and hi == 1.5
    lo, none = cs_cv.k_term_residual_bounds(1.0, 0.5, 2.0, want_upper=False)
    assert lo == 0.25 and none is None
    with pytest.raises(ConfigError):
        cs_cv.k_term_residual_bounds(1.0, 0.5, 2.0)


def test_k_term_bounds_bracket_noise_floor():
    N, m, k, d, r = 3600, 800, 200, 100, 30
    x = cs_cv.noisy_sparse_signal(N, d, 0.05, make_rng(0, cs_cv.LINEAGE_SIGNAL))
    sigma = cs_cv.best_k_term_error(x, d)
    Phi = cs_cv.draw_matrix("gaussian", m - r, N, make_rng(0, cs_cv.LINEAGE_PHI, r))
    run = cs_cv.omp(Phi, Phi @ x, k)
    eps = cs_cv.epsilon_of_r(r, k, 0.01, 1.0)
    for q in range(5):
        Psi = cs_cv.draw_matrix("gaussian", r, N, make_rng(0, cs_cv.LINEAGE_PSI, r, q))
        eta = cs_cv.cv_select(Psi, Psi @ x, run.estimates, eps).eta_hat
        # estimate d has d terms; c = 1 gives the tightest lower end
        lo, hi = cs_cv.k_term_residual_bounds(eta[d - 1], eps, 1.0, estimate_is_k_sparse=True)
        assert lo <= sigma <= hi


def test_noise_floor_of_test_signal():
    vals = [cs_cv.best_k_term_error(cs_cv.noisy_sparse_signal(3600, 100, 0.05, make_rng(s, 3)), 100)
            for s in range(20)]
    assert 0.25 <= np.mean(vals) <= 0.32
    assert cs_cv.best_k_term_error([3.0, -4.0, 0.0], 1) == 3.0
