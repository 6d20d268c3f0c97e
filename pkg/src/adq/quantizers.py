"""Quantizer elements: sign, flaky sign, tri-level, four-level and the plane rule.

All quantizers accept scalars or numpy arrays.  Scalar input gives Python ints
back, array input gives int8 arrays of the same shape.

Inside a flaky zone the output is not determined by the ideal rule, so every
flaky quantizer carries a :class:`FlakyMode` saying what to do there:

* ``ideal``: behave like the ideal quantizer,
* ``plus`` / ``minus``: always answer +1 / -1 (adversarial),
* ``coin``: +1 with probability ``p``, drawn from the caller's Generator,
* ``offset``: apply the ideal rule to ``z + shift`` with ``|shift| <= nu``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

FLAKY_KINDS = ("ideal", "plus", "minus", "coin", "offset")
SCALAR_KINDS = ("sign", "flaky", "tri", "four")


@dataclass(frozen=True)
class FlakyMode:
    kind: str = "ideal"
    p: float = 0.5
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in FLAKY_KINDS:
            raise ConfigError(f"unknown flaky mode {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("coin probability must lie in [0, 1]")

    @classmethod
    def ideal(cls):
        return cls("ideal")

    @classmethod
    def always_plus(cls):
        return cls("plus")

    @classmethod
    def always_minus(cls):
        return cls("minus")

    @classmethod
    def coin(cls, p=0.5):
        return cls("coin", p=p)

    @classmethod
    def offset(cls, shift):
        return cls("offset", shift=shift)


@dataclass(frozen=True)
class ScalarQuantizerSpec:
    """One-argument quantizer.

    ``kind`` is ``sign``, ``flaky`` (tolerance ``nu``, behaviour ``mode``),
    ``tri`` (dead zone ``[-tau, tau]``) or ``four`` (thresholds -1/2, 0 and
    1/(2 tau)).
    """
    kind: str = "sign"
    nu: float = 0.0
    tau: float = 0.5
    mode: FlakyMode = FlakyMode()

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ConfigError(f"unknown quantizer kind {self.kind!r}")
        if self.nu < 0:
            raise ConfigError("flaky tolerance nu must be nonnegative")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.kind == "flaky" and self.mode.kind == "offset" and abs(self.mode.shift) > self.nu:
            raise ConfigError("offset shift must not exceed the tolerance nu")

    @classmethod
    def sign(cls):
        return cls("sign")

    @classmethod
    def flaky(cls, nu, mode=FlakyMode()):
        return cls("flaky", nu=nu, mode=mode)

    @classmethod
    def tri(cls, tau=0.5):
        return cls("tri", tau=tau)

    @classmethod
    def four(cls, tau=1.0):
        return cls("four", tau=tau)


@dataclass(frozen=True)
class PlaneQuantizerSpec:
    """Two-argument rule acting on ``u + alpha*v`` with flaky strip ``[-nu, nu)``."""
    alpha: float = 2.0
    nu: float = 0.0
    mode: FlakyMode = FlakyMode()

    def __post_init__(self):
        if np.any(np.asarray(self.alpha) <= 0):
            raise ConfigError("alpha must be positive")
        if np.any(np.asarray(self.nu) < 0):
            raise ConfigError("nu must be nonnegative")
        if self.mode.kind == "offset" and np.any(abs(self.mode.shift) > np.asarray(self.nu)):
            raise ConfigError("offset shift must not exceed the tolerance nu")


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("quantizer input must be finite")


def _ideal_sign(z, plus_at_zero):
    if plus_at_zero:
        return np.where(z >= 0, 1, -1).astype(np.int8)
    return np.where(z > 0, 1, -1).astype(np.int8)


def _flaky_values(z, mode, rng, plus_at_zero):
    """Output of ``mode`` for every entry of z, as if all were in the zone."""
    k = mode.kind
    if k == "ideal":
        return _ideal_sign(z, plus_at_zero)
    if k == "plus":
        return np.ones(z.shape, np.int8)
    if k == "minus":
        return -np.ones(z.shape, np.int8)
    if k == "offset":
        return _ideal_sign(z + mode.shift, plus_at_zero)
    if rng is None:
        raise ConfigError("coin mode needs a random Generator")
    # one draw per entry on every call, so the stream position does not
    # depend on how many entries happened to fall in the zone
    return np.where(rng.random(z.shape) < mode.p, 1, -1).astype(np.int8)


def _out(arr, scalar):
    return int(arr) if scalar else arr


def quantize_scalar(spec, u, rng=None):
    """Apply a one-argument quantizer.

    Returns b in {-1, 0, 1} for sign, flaky and tri-level kinds, and a pair
    (b, q) for the four-level kind.
    """
    scalar = np.ndim(u) == 0
    z = np.asarray(u, dtype=float)
    _finite(z)
    if spec.kind == "sign":
        return _out(_ideal_sign(z, plus_at_zero=False), scalar)
    if spec.kind == "flaky":
        ideal = _ideal_sign(z, plus_at_zero=False)
        zone = np.abs(z) <= spec.nu
        out = np.where(zone, _flaky_values(z, spec.mode, rng, False), ideal).astype(np.int8)
        return _out(out, scalar)
    if spec.kind == "tri":
        out = np.where(z > spec.tau, 1, np.where(z < -spec.tau, -1, 0)).astype(np.int8)
        return _out(out, scalar)
    b, q = four_level(z, spec.tau)
    if scalar:
        return int(b), int(q)
    return b, q


def four_level(z, tau):
    """Four-level rule as two int8 arrays (b, q)."""
    z = np.asarray(z, dtype=float)
    upper = 1.0 / (2.0 * tau)
    b = np.where(z <= -0.5, -1, np.where(z > upper, 1, 0)).astype(np.int8)
    q = (z > 0).astype(np.int8)
    return b, q


def quantize_plane(spec, u, v, rng=None):
    """Apply the two-argument rule to (u, v); returns values in {-1, 1}.

    Outside the strip the answer is -1 below ``-nu`` and +1 from ``nu`` up;
    with ``nu = 0`` and ideal mode this is +1 iff ``u + alpha*v >= 0``.
    """
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _finite(u, v)
    z = u + spec.alpha * v
    nu = np.asarray(spec.nu, dtype=float)
    out = np.where(z >= nu, 1, -1).astype(np.int8)
    zone = (z >= -nu) & (z < nu)
    if np.any(zone) or spec.mode.kind == "coin":
        flaky = _flaky_values(z, spec.mode, rng, plus_at_zero=True)
        out = np.where(zone, flaky, out).astype(np.int8)
    return _out(out, scalar)
