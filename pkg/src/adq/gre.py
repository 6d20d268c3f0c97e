"""Golden-ratio encoder with integrator leak, its effective base, and the
invariant-rectangle geometry behind its admissible amplifier range.

The leaky recursion keeps two delay states.  Each clock attenuates them by
``lam1*lam2`` and ``lam1`` respectively, feeds the attenuated pair to the
plane quantizer, and subtracts the output bit::

    b_n     = Q(lam1*lam2*u_n, lam1*u_{n+1})
    u_{n+2} = lam1*lam2*u_n + lam1*u_{n+1} - b_n

With ``lam1 = lam2 = 1`` this is the multiplier-free encoder at base phi.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .beta_encoder import horner_power_sum
from .errors import ConfigError, DomainError
from .quantizers import FlakyMode, PlaneQuantizerSpec, quantize_plane

PHI = (1.0 + math.sqrt(5.0)) / 2.0

# Endpoints of the uniformly admissible amplifier range over leaks in [.9, 1]^2.
# In scaled coordinates (alpha/lam2, nu/(lam1*lam2)) the range reads
# [1.198(1+d), 2.053 - .8568 d] for d <= .4161; converting d = nu/.81 gives
# the same interval in terms of the raw tolerance nu.
ALPHA_LOW0 = 1.198
ALPHA_HIGH0 = 2.053
SCALED_LOW_SLOPE = 1.198
SCALED_HIGH_SLOPE = 0.8568
SCALED_DELTA_MAX = 0.4161
LOW_SLOPE = 1.479
HIGH_SLOPE = 1.058
NU_MAX = 0.337


@dataclass(frozen=True)
class GreConfig:
    alpha: float = 2.0
    nu: float = 0.0
    mode: FlakyMode = field(default_factory=FlakyMode)
    lam1: float = 1.0
    lam2: float = 1.0
    N: int = 40
    start: str = "leaky"  # "leaky": (u0, u1) = (0, x); "ideal": (x, 0)

    def __post_init__(self):
        l1 = np.asarray(self.lam1)
        l2 = np.asarray(self.lam2)
        if np.any(l1 <= 0) or np.any(l1 > 1) or np.any(l2 <= 0) or np.any(l2 > 1):
            raise ConfigError("leaks must lie in (0, 1]")
        if self.N < 0:
            raise ConfigError("N must be nonnegative")
        if self.start not in ("leaky", "ideal"):
            raise ConfigError("start must be 'leaky' or 'ideal'")

    @property
    def quantizer(self):
        return PlaneQuantizerSpec(self.alpha, self.nu, self.mode)


def gre_encode(x, cfg, rng=None, guard=None):
    """Encode x (scalar or array); every config field may be an array
    broadcasting against x.

    Returns ``(bits, trace)`` with ``bits[..., n] = b_n`` for n = 0..N and
    ``trace[..., n] = u_n`` for n = 0..N+2.  With ``guard`` set, states are
    clipped to ``[-guard, guard]`` so that unstable settings saturate instead
    of overflowing; only use this to detect divergence.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 1.0):
        raise DomainError("gre_encode needs |x| <= 1")
    l1 = np.asarray(cfg.lam1, dtype=float)
    l12 = l1 * np.asarray(cfg.lam2, dtype=float)
    shape = np.broadcast_shapes(x.shape, l12.shape, np.shape(cfg.alpha), np.shape(cfg.nu))
    x = np.broadcast_to(x, shape)
    q = cfg.quantizer
    trace = np.empty(shape + (cfg.N + 3,))
    bits = np.empty(shape + (cfg.N + 1,), np.int8)
    if cfg.start == "leaky":
        trace[..., 0], trace[..., 1] = 0.0, x
    else:
        trace[..., 0], trace[..., 1] = x, 0.0
    for n in range(cfg.N + 1):
        a = l12 * trace[..., n]
        c = l1 * trace[..., n + 1]
        b = quantize_plane(q, a, c, rng)
        bits[..., n] = b
        nxt = a + c - b
        if guard is not None:
            nxt = np.clip(nxt, -guard, guard)
        trace[..., n + 2] = nxt
    return bits, trace


def gamma_of_leaks(lam1, lam2):
    """Positive root of 1 - lam1*g - lam1*lam2*g^2: the effective base 1/beta."""
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    if np.any(lam1 <= 0) or np.any(lam2 <= 0):
        raise DomainError("leaks must be positive")
    g = (-lam1 + np.sqrt(lam1 ** 2 + 4.0 * lam1 * lam2)) / (2.0 * lam1 * lam2)
    return float(g) if g.ndim == 0 else g


def gre_decode(bits, gamma, N, start="leaky"):
    """sum_{n=0}^{N} b_n gamma^(n+1); with ``start='ideal'`` the exponent is n."""
    return horner_power_sum(bits, gamma, N + 1, offset=1 if start == "leaky" else 0)


def decode_error_bound(gamma, N):
    """(gamma/(1-gamma)) gamma^N for the leaky start."""
    return gamma / (1.0 - gamma) * gamma ** N


@dataclass(frozen=True)
class AlphaInterval:
    lo: float
    hi: float

    @property
    def is_empty(self):
        return not self.lo <= self.hi

    def __contains__(self, alpha):
        return self.lo <= alpha <= self.hi


def admissible_alpha_range(eps):
    """Amplifier interval giving bounded states for all leaks in [.9, 1]^2,
    for a quantizer tolerance nu <= eps.  Beyond eps = .337 no interval is
    guaranteed and an empty interval is returned."""
    if eps < 0:
        raise DomainError("tolerance must be nonnegative")
    if eps > NU_MAX:
        return AlphaInterval(math.nan, math.nan)
    return AlphaInterval(ALPHA_LOW0 + LOW_SLOPE * eps, ALPHA_HIGH0 - HIGH_SLOPE * eps)


def admissible_alpha_range_scaled(delta):
    """Same range written in the scaled tolerance delta = nu/(lam1*lam2)."""
    if delta < 0:
        raise DomainError("tolerance must be nonnegative")
    if delta > SCALED_DELTA_MAX:
        return AlphaInterval(math.nan, math.nan)
    return AlphaInterval(SCALED_LOW_SLOPE * (1.0 + delta), ALPHA_HIGH0 - SCALED_HIGH_SLOPE * delta)


@dataclass(frozen=True)
class RectangleGeometry:
    """Invariant rectangle of the leaky map for perturbation radius mu.

    ``eps1 > 1 > eps2`` are the roots of x^2 - lam1 x - lam1 lam2 (the
    eigenvalues of the linear part), ``s_i = sqrt(1 + eps_i^2)`` normalise the
    eigenvectors, and h, d, l, r are the side lengths.  ``intercept`` is the
    v-intercept of the upper edge line; it should be at least 1.
    """
    eps1: float
    eps2: float
    s1: float
    s2: float
    h: float
    d: float
    l: float
    r: float
    mu: float
    mu_limit: float
    intercept: float
    status: str

    @property
    def admissible(self):
        return self.status == "ok"


def eigenvalues(lam1, lam2):
    root = math.sqrt(lam1 * lam1 + 4.0 * lam1 * lam2)
    return (lam1 + root) / 2.0, (-lam1 + root) / 2.0


def stability_rectangle(lam1, lam2, mu):
    if mu < 0:
        raise DomainError("mu must be nonnegative")
    e1, e2 = eigenvalues(lam1, lam2)
    s1 = math.sqrt(1.0 + e1 * e1)
    s2 = math.sqrt(1.0 + e2 * e2)
    tot = e1 + e2
    h = 2.0 * mu / (1.0 - e1) + 2.0 * s1 / (e1 * (e1 - 1.0) * tot)
    d = mu / (1.0 - e1) + s1 * (2.0 - e1) / (e1 * (e1 - 1.0) * tot)
    l = mu / (1.0 - e2) + s2 * (2.0 - e2) / (e2 * (1.0 - e2) * tot)
    r = mu / (1.0 - e2) + s2 / ((1.0 - e2) * tot)
    mu_limit = s1 * (2.0 - e1) / (e1 * tot)
    intercept = tot * (h - d) / s1
    status = "ok" if d > 0 else "mu inadmissible"
    return RectangleGeometry(e1, e2, s1, s2, h, d, l, r, mu, mu_limit, intercept, status)


def intercept_mu_limit(lam1, lam2):
    """Largest mu keeping the upper edge intercept >= 1."""
    e1, e2 = eigenvalues(lam1, lam2)
    return math.sqrt(1.0 + e1 * e1) * (2.0 - e1) / (e1 + e2)


def lower_bound_parts(x, y, delta=0.0):
    """Numerator and denominator of L(x, y), kept apart so that each can be
    extremised on its own over a box of eigenvalues."""
    num = x * (x - 1) - (2 - x) * (1 - y) + delta * x * (x - 1) * (x + y) * (1 - y)
    den = x * ((2 - x) * (1 - y) + y * (x - 1))
    return num, den


def _L(x, y, delta):
    num, den = lower_bound_parts(x, y, delta)
    return num / den


def _U(x, y, delta):
    return (2 + x * y - 2 * y - delta * x * y * (x - 1) * (1 - y + x)) / (x * (y - 2))


def alpha_bounds(eps1, eps2, delta):
    """Lower and upper slope bounds (L, U) on the scaled amplifier for one
    leak pair, evaluated as L(eps1, eps2) and U(eps1, eps1 + eps2)."""
    return _L(eps1, eps2, delta), _U(eps1, eps1 + eps2, delta)


def alpha_bound_terms(x, y, delta=0.0):
    """Raw L(x, y) and U(x, y), for mixing eigenvalues of different leak pairs."""
    return _L(x, y, delta), _U(x, y, delta)
