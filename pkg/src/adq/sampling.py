"""Bandlimited test signals, sampling, kernel reconstruction and
rate-distortion curves for the quantization pipelines.

Signals have spectrum inside [-pi, pi].  Samples are taken at ``n/lam`` and
the reconstruction is ``(1/lam) sum_n c_n g(t - n/lam)`` with a kernel whose
frequency response is 1 on the passband and vanishes from ``min(2, lam) pi``
on.

Two kernels are offered.  The default multiplies the ideal low-pass kernel by
a power of a sinc; its frequency response is the passband indicator
convolved with a B-spline, so the roll-off is smooth and the time kernel
decays like ``|t|^-(order+1)``.  The raised-cosine kernel has the classical
cosine roll-off but only cubic decay, which needs a much wider window.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .beta_encoder import BetaEncoderConfig, beta_decode, beta_encode
from .errors import ConfigError, WindowError
from .quantizers import ScalarQuantizerSpec
from .sigma_delta import SdConfig, sd_run

PASSBAND = math.pi


@dataclass(frozen=True)
class TestSignal:
    """Sum of cosines ``a cos(w t + phase)`` or of shifted sincs
    ``a sinc(t - s)`` (bandwidth pi)."""
    __test__ = False  # not a pytest class

    kind: str
    amplitudes: tuple
    frequencies: tuple = ()
    phases: tuple = ()
    shifts: tuple = ()

    def __post_init__(self):
        if self.kind not in ("trig", "sinc"):
            raise ConfigError("kind must be 'trig' or 'sinc'")
        n = len(self.amplitudes)
        if self.kind == "trig":
            if len(self.frequencies) != n or len(self.phases) != n:
                raise ConfigError("need one frequency and phase per amplitude")
            if any(abs(w) > PASSBAND for w in self.frequencies):
                raise ConfigError("frequencies must lie in [-pi, pi]")
        elif len(self.shifts) != n:
            raise ConfigError("need one shift per amplitude")

    @classmethod
    def trig(cls, amplitudes, frequencies, phases=None, alpha=None):
        amplitudes = np.asarray(amplitudes, dtype=float)
        if phases is None:
            phases = np.zeros_like(amplitudes)
        if alpha is not None:
            amplitudes = amplitudes * (alpha / np.abs(amplitudes).sum())
        return cls("trig", tuple(amplitudes), tuple(map(float, frequencies)), tuple(map(float, phases)))

    @classmethod
    def sinc_sum(cls, amplitudes, shifts, alpha=None):
        amplitudes = np.asarray(amplitudes, dtype=float)
        if alpha is not None:
            amplitudes = amplitudes * (alpha / np.abs(amplitudes).sum())
        return cls("sinc", tuple(amplitudes), shifts=tuple(map(float, shifts)))

    @classmethod
    def random_trig(cls, rng, degree, alpha=0.9, top=0.9 * math.pi):
        """Harmonics k*top/degree, k = 1..degree, random amplitudes and phases,
        scaled so the sup norm is at most ``alpha``."""
        k = np.arange(1, degree + 1)
        return cls.trig(rng.uniform(-1, 1, degree), k * top / degree,
                        rng.uniform(0, 2 * math.pi, degree), alpha)

    @classmethod
    def zero(cls):
        return cls("trig", (), (), ())

    @property
    def sup_bound(self):
        return float(np.abs(self.amplitudes).sum())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.kind == "trig":
            for a, w, ph in zip(self.amplitudes, self.frequencies, self.phases):
                out += a * np.cos(w * t + ph)
        else:
            for a, s in zip(self.amplitudes, self.shifts):
                out += a * np.sinc(t - s)
        return out


def _irwin_hall_cdf(y, p):
    """CDF of the sum of p independent uniforms on [0, 1]."""
    y = np.asarray(y, dtype=float)
    flip = y > p / 2
    z = np.clip(np.where(flip, p - y, y), 0.0, p / 2)
    acc = np.zeros_like(z)
    for k in range(p + 1):
        term = math.comb(p, k) * np.clip(z - k, 0.0, None) ** p
        acc += (-1) ** k * term
    acc /= math.factorial(p)
    return np.where(flip, 1.0 - acc, acc)


@dataclass(frozen=True)
class ReconstructionFilter:
    """Low-pass kernel with passband [-pi, pi] and stopband edge ``edge``.

    ``profile`` is ``"spline"`` (default) or ``"raised-cosine"``; ``order``
    is the spline degree of the roll-off.  ``radius`` is the half-width of
    the time window used in reconstruction, chosen so the neglected tail is
    below ``tol`` times the sup norm of the coefficients.
    """
    edge: float = 2.0 * math.pi
    profile: str = "spline"
    order: int = 8
    tol: float = 1e-8
    radius: float = field(init=False)

    def __post_init__(self):
        if self.profile not in ("spline", "raised-cosine"):
            raise ConfigError("profile must be 'spline' or 'raised-cosine'")
        if not self.edge > PASSBAND:
            raise ConfigError("stopband edge must exceed pi")
        if self.order < 2:
            raise ConfigError("order must be at least 2")
        if not 0 < self.tol < 1:
            raise ConfigError("tol must lie in (0, 1)")
        w = self.half_rolloff
        if self.profile == "spline":
            p = self.order
            r = p / w * (2.0 / (math.pi * p * self.tol)) ** (1.0 / p)
        else:
            # |g| <= (1/(pi t)) (pi/(2 w t))^2 for large t; the tail integral
            # on both sides is pi/(4 w^2 R^2)
            r = math.sqrt(math.pi / (4.0 * w * w * self.tol))
        object.__setattr__(self, "radius", float(r))

    @classmethod
    def for_ratio(cls, lam, **kw):
        """Kernel usable at oversampling ratio ``lam`` (edge min(2, lam) pi)."""
        if lam <= 1:
            raise ConfigError("oversampling ratio must exceed 1")
        return cls(edge=min(2.0, lam) * math.pi, **kw)

    @property
    def center(self):
        return 0.5 * (PASSBAND + self.edge)

    @property
    def half_rolloff(self):
        return 0.5 * (self.edge - PASSBAND)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        c = self.center
        w = self.half_rolloff
        lowpass = (c / math.pi) * np.sinc(c * t / math.pi)
        if self.profile == "spline":
            p = self.order
            return lowpass * np.sinc(w * t / (p * math.pi)) ** p
        x = 2.0 * w * t / math.pi
        near = np.abs(np.abs(x) - 1.0) < 1e-8
        safe = np.where(near, 0.0, x)
        taper = np.where(near, math.pi / 4.0, np.cos(w * t) / (1.0 - safe * safe))
        return lowpass * taper

    def frequency_response(self, xi):
        """Closed-form Fourier transform of the kernel."""
        xi = np.abs(np.asarray(xi, dtype=float))
        c = self.center
        w = self.half_rolloff
        if self.profile == "spline":
            p = self.order
            a = w / p  # each factor is uniform on [-a, a]

            def cdf(x):
                return _irwin_hall_cdf((x + p * a) / (2 * a), p)

            return cdf(xi + c) - cdf(xi - c)
        mid = 0.5 * (1.0 + np.cos(math.pi * (xi - PASSBAND) / (self.edge - PASSBAND)))
        return np.where(xi <= PASSBAND, 1.0, np.where(xi >= self.edge, 0.0, mid))

    def derivative_l1(self, step=1e-3):
        """Numerical L1 norm of g' over the evaluation window."""
        t = np.arange(-self.radius, self.radius + step, step)
        return float(np.abs(np.diff(self(t))).sum())

    def l1(self, step=1e-3):
        t = np.arange(-self.radius, self.radius + step, step)
        return float(np.abs(self(t)).sum() * step)

    def tail_bound(self, lam):
        """Bound on the neglected part of (1/lam) sum |g(t - n/lam)| beyond
        the radius, per unit coefficient size."""
        w = self.half_rolloff
        R = self.radius
        if self.profile == "spline":
            p = self.order
            env = (1.0 / (math.pi * R)) * (p / (w * R)) ** p
            integral = 2.0 / (math.pi * p) * (p / (w * R)) ** p
        else:
            env = (1.0 / (math.pi * R)) * (math.pi / (2.0 * w * R)) ** 2 / (1 - (math.pi / (2 * w * R)) ** 2)
            integral = math.pi / (4.0 * w * w * R * R)
        return integral + 2.0 * env / lam


def sample_indices(lam, t0, t1, radius):
    """First and one-past-last sample index needed to reconstruct on [t0, t1]."""
    return math.floor((t0 - radius) * lam) - 1, math.ceil((t1 + radius) * lam) + 2


def sample(f, lam, count, n0=0):
    """Samples f(n/lam) for n = n0 .. n0 + count - 1."""
    if lam < 1:
        raise ConfigError("oversampling ratio must be at least 1")
    return f(np.arange(n0, n0 + count) / lam)


@dataclass(frozen=True)
class Reconstruction:
    values: np.ndarray
    truncation: float  # bound on the neglected tail


def reconstruct(coeffs, g, lam, t, n0=0):
    """(1/lam) sum_n c_n g(t - n/lam) over the indices within the kernel
    radius of each t.  ``coeffs[i]`` belongs to index ``n0 + i``.

    Raises :class:`WindowError` when the coefficients do not cover the
    radius around some t.
    """
    c = np.asarray(coeffs, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo = np.floor((t - g.radius) * lam).astype(np.int64)
    hi = np.ceil((t + g.radius) * lam).astype(np.int64)
    if t.size and (lo.min() < n0 or hi.max() >= n0 + c.size):
        raise WindowError(
            f"coefficients cover indices [{n0}, {n0 + c.size}) but [{lo.min()}, {hi.max()}] are needed")
    out = np.empty(t.size)
    for i, (ti, a, b) in enumerate(zip(t, lo, hi)):
        n = np.arange(a, b + 1)
        out[i] = c[n - n0] @ g(ti - n / lam) / lam
    cmax = float(np.abs(c).max()) if c.size else 0.0
    return Reconstruction(out, cmax * g.tail_bound(lam))


# ---------------------------------------------------------------------------
# rate-distortion

PIPELINES = ("pcm", "beta", "sd1", "sd2-finite", "sd2-asymmetric")


def pcm_quantize(x, bits):
    """Midpoint uniform quantizer with 2^bits cells on [-1, 1]."""
    cells = 2 ** bits
    k = np.clip(np.floor((np.asarray(x) + 1.0) / 2.0 * cells), 0, cells - 1)
    return (k + 0.5) * 2.0 / cells - 1.0


@dataclass(frozen=True)
class PipelineOptions:
    lam: float = 4.0            # ratio for the per-sample pipelines
    beta: float = 1.8
    sd2_gamma: float = 1.0      # linear-rule weight of the finite-memory scheme
    asym_gamma: float = 0.2
    t_range: tuple = (0.0, 10.0)
    points: int = 1000
    filter_order: int = 8
    tol: float = 1e-8


@dataclass
class DistortionTable:
    pipeline: str
    budgets: list
    errors: list
    truncation: list

    def slope(self):
        """Least-squares slope of log2 error against log2 budget."""
        x = np.log2(np.asarray(self.budgets, dtype=float))
        y = np.log2(np.asarray(self.errors, dtype=float))
        return float(np.polyfit(x, y, 1)[0])

    def rows(self):
        return list(zip(self.budgets, self.errors, self.truncation))


def _coefficients(pipeline, samples, budget, opts):
    if pipeline == "pcm":
        return pcm_quantize(samples, int(budget))
    if pipeline == "beta":
        cfg = BetaEncoderConfig(opts.beta, int(budget))
        bits, _ = beta_encode(samples, cfg)
        return beta_decode(bits, 1.0 / opts.beta, int(budget))
    lam = float(budget)
    rho = 1.0 - 1.0 / lam
    if pipeline == "sd1":
        cfg = SdConfig(order=1, scheme="finite-memory", rho=rho)
    elif pipeline == "sd2-finite":
        cfg = SdConfig(order=2, scheme="finite-memory", rho=rho, gamma=opts.sd2_gamma,
                       quantizer=ScalarQuantizerSpec.tri(0.5))
    else:
        cfg = SdConfig(order=2, scheme="asymmetric", rho=rho, gamma=opts.asym_gamma)
    return sd_run(cfg, samples).b.astype(float)


def distortion_curve(pipeline, f, budgets, opts=PipelineOptions()):
    """Sup-norm reconstruction error of a quantization pipeline for each budget.

    For ``pcm`` and ``beta`` the budget is the number of bits per sample at
    ratio ``opts.lam``; for the Sigma-Delta pipelines it is the oversampling
    ratio itself (with memory factor 1 - 1/ratio).  The error is measured on
    ``opts.points`` equispaced times in ``opts.t_range``; samples extend a
    kernel radius beyond both ends so no edge effects enter.
    """
    if pipeline not in PIPELINES:
        raise ConfigError(f"unknown pipeline {pipeline!r}")
    budgets = list(budgets)
    if budgets != sorted(budgets):
        raise ConfigError("budgets must be sorted ascending")
    t0, t1 = opts.t_range
    t = np.linspace(t0, t1, opts.points)
    truth = f(t)
    errors = []
    tails = []
    for budget in budgets:
        lam = opts.lam if pipeline in ("pcm", "beta") else float(budget)
        g = ReconstructionFilter.for_ratio(lam, order=opts.filter_order, tol=opts.tol)
        n0, n1 = sample_indices(lam, t0, t1, g.radius)
        samples = sample(f, lam, n1 - n0, n0)
        coeffs = _coefficients(pipeline, samples, budget, opts)
        rec = reconstruct(coeffs, g, lam, t, n0)
        errors.append(float(np.abs(rec.values - truth).max()))
        tails.append(rec.truncation)
    return DistortionTable(pipeline, budgets, errors, tails)
