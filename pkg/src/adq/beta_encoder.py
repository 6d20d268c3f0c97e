"""Beta-encoder: greedy expansions in a base 1 < beta <= 2 with {-1, 1} digits.

Two start conventions are supported.  The *scaled* start ``u_1 = beta*x``
gives ``x = sum_j b_j beta^-j``; the *unscaled* start ``u_1 = x`` gives
``x = sum_{i>=0} b_{i+1} g^i`` with ``g = 1/(leak*beta)``.  The unscaled start
is the default whenever the integrator leaks (``leak < 1``), because then the
base that can be recovered from the bits is the attenuated ``leak*beta``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, RangeError
from .quantizers import ScalarQuantizerSpec, quantize_scalar


@dataclass(frozen=True)
class BetaEncoderConfig:
    beta: float
    N: int
    leak: float = 1.0
    quantizer: ScalarQuantizerSpec = field(default_factory=ScalarQuantizerSpec.sign)
    scaled_start: bool | None = None  # None: scaled iff leak == 1

    def __post_init__(self):
        if not 1.0 < self.beta <= 2.0:
            raise ConfigError("beta must lie in (1, 2]")
        if not 0.0 < self.leak <= 1.0:
            raise ConfigError("leak must lie in (0, 1]")
        if self.leak * self.beta <= 1.0:
            raise ConfigError("leak*beta must exceed 1")
        if self.N < 1:
            raise ConfigError("bit budget N must be positive")
        if self.quantizer.kind not in ("sign", "flaky"):
            raise ConfigError("beta-encoder needs a sign or flaky-sign quantizer")

    @property
    def effective_beta(self):
        return self.leak * self.beta

    @property
    def uses_scaled_start(self):
        if self.scaled_start is None:
            return self.leak == 1.0
        return self.scaled_start


def beta_encode(x, cfg, rng=None):
    """Run the encoder on x (scalar or 1-D array of inputs).

    Returns ``(bits, states)``; both have a trailing axis of length N holding
    b_1..b_N and u_1..u_N.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 1.0):
        raise DomainError("beta_encode needs |x| <= 1")
    gain = cfg.effective_beta
    u = cfg.beta * x if cfg.uses_scaled_start else x.copy()
    bits = np.empty(x.shape + (cfg.N,), np.int8)
    states = np.empty(x.shape + (cfg.N,))
    for j in range(cfg.N):
        b = quantize_scalar(cfg.quantizer, u, rng)
        bits[..., j] = b
        states[..., j] = u
        u = gain * (u - b)
    return bits, states


def horner_power_sum(bits, g, N, offset=1):
    """sum_{j=1}^{N} b_j g^(j - 1 + offset), evaluated by Horner's rule.

    ``bits`` may carry leading batch axes; ``g`` broadcasts against them.
    """
    bits = np.asarray(bits)
    if N > bits.shape[-1]:
        raise RangeError(f"N={N} exceeds the stream length {bits.shape[-1]}")
    if N < 1:
        raise RangeError("N must be positive")
    g = np.asarray(g, dtype=float)
    acc = np.zeros(np.broadcast_shapes(bits.shape[:-1], g.shape))
    for j in range(N - 1, -1, -1):
        acc = acc * g + bits[..., j]
    out = acc * g ** offset
    return float(out) if out.ndim == 0 else out


def beta_decode(bits, gamma, N):
    """sum_{j=1}^{N} b_j gamma^j: the reconstruction for the scaled start."""
    return horner_power_sum(bits, gamma, N, offset=1)


def beta_decode_unscaled(bits, gamma, N):
    """sum_{i=0}^{N-1} b_{i+1} gamma^i: the reconstruction for the start u_1 = x."""
    return horner_power_sum(bits, gamma, N, offset=0)


def decode_for(cfg, bits, gamma=None, N=None):
    """Decode with the convention matching ``cfg``'s start rule."""
    gamma = 1.0 / cfg.effective_beta if gamma is None else gamma
    N = cfg.N if N is None else N
    if cfg.uses_scaled_start:
        return beta_decode(bits, gamma, N)
    return beta_decode_unscaled(bits, gamma, N)


def admissible_beta_range(eps):
    """Open interval (1, (2+eps)/(1+eps)) of bases tolerating flakiness eps."""
    if eps < 0:
        raise DomainError("tolerance must be nonnegative")
    return 1.0, (2.0 + eps) / (eps + 1.0)


def robust_error_bound(beta, eps, N):
    """(eps + 1) beta^-N, the worst-case N-bit error under tolerance eps."""
    return (eps + 1.0) * beta ** (-N)


def leaky_error_bound(effective_beta, N):
    """C beta~^-N with C = 1/(beta~ - 1), for the unscaled start.

    The bound holds for the N + 1 term sum over b_1..b_{N+1}.
    """
    return effective_beta ** (-N) / (effective_beta - 1.0)


def to_zero_one(bits):
    """Map {-1, 1} digits to {0, 1} digits via (b + 1)/2."""
    bits = np.asarray(bits)
    if np.any((bits != 1) & (bits != -1)):
        raise DomainError("expected a {-1, 1} stream")
    return ((bits + 1) // 2).astype(np.int8)
