import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adq.errors import ConfigError, WindowError
from adq.sampling import (
    PIPELINES,
    PipelineOptions,
    ReconstructionFilter,
    TestSignal,
    distortion_curve,
    pcm_quantize,
    reconstruct,
    sample,
    sample_indices,
)
from adq.sigma_delta import SdConfig, sd_run

TWO_TONE = TestSignal.trig([0.5, 0.3], [0.9 * math.pi, 0.37 * math.pi], [0.3, 1.0])


def run_window(f, lam, g, t0=0.0, t1=5.0):
    n0, n1 = sample_indices(lam, t0, t1, g.radius)
    return n0, sample(f, lam, n1 - n0, n0)


# ---------------------------------------------------------------- signals

def test_zero_signal_samples():
    assert np.all(sample(TestSignal.zero(), 4, 50) == 0)


def test_samples_of_closed_form():
    # any callable can be sampled; sin(2 pi t) at ratio 4 cycles 0, a, 0, -a
    a = 0.9
    s = sample(lambda t: a * np.sin(2 * np.pi * t), 4, 12)
    assert np.allclose(s, np.tile([0, a, 0, -a], 3), atol=1e-15)


def test_signal_validation():
    with pytest.raises(ConfigError):
        TestSignal.trig([1.0], [2 * math.pi])
    with pytest.raises(ConfigError):
        TestSignal("trig", (1.0,), (1.0, 2.0), (0.0,))
    with pytest.raises(ConfigError):
        TestSignal("square", (1.0,))
    with pytest.raises(ConfigError):
        sample(TWO_TONE, 0.5, 3)


def test_normalisation_caps_sup_norm(rng):
    f = TestSignal.random_trig(rng, 6, alpha=0.9)
    assert f.sup_bound == pytest.approx(0.9)
    t = np.linspace(-20, 20, 5001)
    assert np.abs(f(t)).max() <= 0.9 + 1e-12
    s = TestSignal.sinc_sum([2.0, -1.0], [0.0, 3.5], alpha=0.6)
    assert np.abs(s(t)).max() <= 0.6 + 1e-12


# ---------------------------------------------------------------- filter

@pytest.mark.parametrize("profile", ["spline", "raised-cosine"])
@pytest.mark.parametrize("edge", [1.5 * math.pi, 2 * math.pi])
def test_filter_admissibility(profile, edge):
    g = ReconstructionFilter(edge=edge, profile=profile)
    xi = np.linspace(0, 4 * math.pi, 40001)
    G = g.frequency_response(xi)
    assert np.all(np.abs(G[xi <= math.pi] - 1) <= 1e-9)
    assert np.all(np.abs(G[xi >= edge]) <= 1e-9)
    assert np.all(np.abs(G) <= 1 + 1e-9)
    mid = (xi > math.pi) & (xi < edge)
    assert np.all(np.diff(G[mid]) <= 1e-12)


@pytest.mark.parametrize("profile", ["spline", "raised-cosine"])
def test_closed_form_response_matches_quadrature(profile):
    g = ReconstructionFilter(profile=profile, tol=1e-6) if profile == "raised-cosine" else ReconstructionFilter()
    step = 0.005
    t = np.arange(-g.radius, g.radius + step, step)
    vals = g(t)
    for xi in (0.0, 2.0, math.pi, 4.0, 5.5, 2 * math.pi, 8.0):
        numeric = float(np.sum(vals * np.cos(xi * t)) * step)
        tol = 1e-6 if profile == "spline" else 2e-3
        assert numeric == pytest.approx(float(g.frequency_response(xi)), abs=tol)


def test_kernel_at_origin_and_symmetry():
    g = ReconstructionFilter()
    assert float(g(0.0)) == pytest.approx(g.center / math.pi)
    t = np.linspace(0, 10, 101)
    assert np.allclose(g(t), g(-t))


def test_raised_cosine_singular_points_are_finite():
    g = ReconstructionFilter(profile="raised-cosine", tol=1e-6)
    tc = math.pi / (2 * g.half_rolloff)
    near = g(np.array([tc - 1e-6, tc, tc + 1e-6]))
    assert np.all(np.isfinite(near)) and np.ptp(near) < 1e-5


def test_spline_radius_is_much_smaller():
    assert ReconstructionFilter().radius < 40
    assert ReconstructionFilter(profile="raised-cosine").radius > 1000


@pytest.mark.parametrize("kwargs", [dict(edge=3.0), dict(profile="box"), dict(order=1), dict(tol=0.0)])
def test_filter_validation(kwargs):
    with pytest.raises(ConfigError):
        ReconstructionFilter(**kwargs)
    with pytest.raises(ConfigError):
        ReconstructionFilter.for_ratio(1.0)


# ---------------------------------------------------------------- reconstruction

def test_zero_coefficients_reconstruct_zero():
    g = ReconstructionFilter()
    rec = reconstruct(np.zeros(800), g, 4, np.linspace(50, 100, 20), n0=0)
    assert np.all(rec.values == 0) and rec.truncation == 0


def test_window_error():
    g = ReconstructionFilter()
    with pytest.raises(WindowError):
        reconstruct(np.zeros(10), g, 4, [0.0])


@pytest.mark.parametrize("lam", [2.5, 4, 8])
def test_unquantized_samples_reconstruct_exactly(lam):
    f = TestSignal.trig([0.3, 0.2, 0.1], [1.0, 2.0, 3.0], [0.0, 1.0, 2.0])
    g = ReconstructionFilter.for_ratio(lam)
    n0, s = run_window(f, lam, g)
    t = np.linspace(0, 5, 200)
    rec = reconstruct(s, g, lam, t, n0)
    assert np.abs(rec.values - f(t)).max() <= rec.truncation + 1e-12


@settings(max_examples=10)
@given(seed=st.integers(0, 10 ** 6))
def test_random_signals_reconstruct_exactly(seed):
    f = TestSignal.random_trig(np.random.default_rng(seed), 5)
    g = ReconstructionFilter.for_ratio(4)
    n0, s = run_window(f, 4, g, 0, 2)
    t = np.linspace(0, 2, 50)
    rec = reconstruct(s, g, 4, t, n0)
    assert np.abs(rec.values - f(t)).max() <= rec.truncation + 1e-12


@pytest.mark.parametrize("lam", [8, 16, 32])
def test_first_order_bits_error_bound(lam):
    g = ReconstructionFilter.for_ratio(lam)
    n0, s = run_window(TWO_TONE, lam, g)
    tr = sd_run(SdConfig(order=1), s)
    t = np.linspace(0, 5, 300)
    rec = reconstruct(tr.b.astype(float), g, lam, t, n0)
    bound = 2 * g.derivative_l1() * np.abs(tr.u).max() / lam
    assert np.abs(rec.values - TWO_TONE(t)).max() <= bound + rec.truncation


# ---------------------------------------------------------------- distortion

def test_pcm_quantizer():
    x = np.linspace(-1, 1, 1001)
    for bits in (1, 4, 8):
        assert np.abs(pcm_quantize(x, bits) - x).max() <= 2.0 ** -bits + 1e-15


def test_budgets_must_be_sorted():
    with pytest.raises(ConfigError):
        distortion_curve("pcm", TWO_TONE, [8, 4])
    with pytest.raises(ConfigError):
        distortion_curve("flash", TWO_TONE, [4])


SMALL = PipelineOptions(t_range=(0.0, 4.0), points=300)
BUDGETS = {"pcm": [4, 8, 12], "beta": [8, 16, 24], "sd1": [8, 16, 32],
           "sd2-finite": [8, 16, 32], "sd2-asymmetric": [8, 16, 32]}


@pytest.mark.parametrize("pipeline", PIPELINES)
def test_errors_decrease_with_budget(pipeline):
    table = distortion_curve(pipeline, TWO_TONE, BUDGETS[pipeline], SMALL)
    e = table.errors
    assert all(b <= 1.05 * a for a, b in zip(e, e[1:]))
    assert len(table.rows()) == len(e)


def test_beta_pipeline_gains_beta_power_per_byte():
    table = distortion_curve("beta", TWO_TONE, [8, 16, 24], SMALL)
    e = table.errors
    target = 1.8 ** -8
    for a, b in zip(e, e[1:]):
        assert target / 2 <= b / a <= 2 * target


def test_slope_fit():
    from adq.sampling import DistortionTable
    t = DistortionTable("x", [8, 16, 32], [1 / 64, 1 / 256, 1 / 1024], [0, 0, 0])
    assert t.slope() == pytest.approx(-2.0)
