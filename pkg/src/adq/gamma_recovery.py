"""Recovering an unknown encoder base from bitstreams.

A stream that encodes 0 in base gamma makes gamma a root of the power series
with those bits as coefficients.  Power series whose constant term is +-1 and
whose other coefficients lie in {-1, 0, 1} have at most one root in
(0, .6491], so truncating the series and locating the first positive root of
the polynomial recovers gamma to exponential precision in the truncation
degree.  When no encoding of 0 is at hand, the bitwise sum of the encodings
of x and -x plays the same role after a shift and halving.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError, DegeneratePairError, RangeError, SingularStepError

ROOT_CEILING = 0.6491          # transversality regime upper end
TABULATED_DELTA = {0.63: 0.07}  # interval end -> transversality constant
PHI_INV = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RecoveryConfig:
    gamma_low: float = PHI_INV
    gamma_high: float = 0.63
    delta: float = 0.07
    newton_steps: int = 10
    x0: float = 0.618

    def __post_init__(self):
        if not 0.5 < self.gamma_low <= self.gamma_high <= ROOT_CEILING:
            raise ConfigError("need .5 < gamma_low <= gamma_high <= .6491")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.newton_steps < 1:
            raise ConfigError("newton_steps must be positive")


def check_class_b(coeffs):
    c = np.asarray(coeffs)
    if c.ndim != 1 or c.size < 1:
        raise ConfigError("coefficients must be a nonempty 1-D sequence")
    if np.any((c != -1) & (c != 0) & (c != 1)):
        raise ConfigError("coefficients must lie in {-1, 0, 1}")
    if abs(c[0]) != 1:
        raise ConfigError("constant term must be +1 or -1")
    return c


def poly_and_derivative(coeffs, t):
    """P(t) and P'(t) for P = sum_j coeffs[j] t^j, by Horner's rule."""
    p = 0.0
    dp = 0.0
    for a in coeffs[::-1]:
        dp = dp * t + p
        p = p * t + a
    return p, dp


def poly_values(coeffs, t):
    """Vectorised P(t) over an array of t."""
    t = np.asarray(t, dtype=float)
    acc = np.zeros_like(t)
    for a in np.asarray(coeffs, dtype=float)[::-1]:
        acc = acc * t + a
    return acc


def pair_difference_stream(b, c):
    """Halved bitwise sum of a stream pair, shifted to its first nonzero.

    Returns ``(dbar, k)`` where ``k`` is the number of leading zero sums.
    """
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    if b.shape != c.shape or b.ndim != 1:
        raise ConfigError("streams must be 1-D and of equal length")
    d = b + c
    nz = np.flatnonzero(d)
    if nz.size == 0:
        raise DegeneratePairError("the pair sums to zero everywhere; a flaky quantizer is needed")
    k = int(nz[0])
    return (d[k:] // 2).astype(np.int8), k


@dataclass(frozen=True)
class RootResult:
    gamma: float
    residual: float
    status: str  # "newton", "bisection" or "no certified root"
    newton_iterate: float

    @property
    def found(self):
        return self.status != "no certified root"


def _bisect(coeffs, lo, hi, iters=200):
    plo, _ = poly_and_derivative(coeffs, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pm, _ = poly_and_derivative(coeffs, mid)
        if pm == 0.0:
            return mid
        if (pm > 0) == (plo > 0):
            lo, plo = mid, pm
        else:
            hi = mid
        if hi - lo <= 4e-16:
            break
    return 0.5 * (lo + hi)


def newton_first_root(coeffs, cfg=RecoveryConfig(), tol=None):
    """First positive root of a class-B polynomial in [0, .6491].

    Runs ``cfg.newton_steps`` Newton steps from ``cfg.x0``.  If Newton lands
    outside the interval or leaves a residual above ``tol`` (default
    ``gamma_low ** degree``), bisection is tried on the interval when its end
    values bracket a root.  Without a bracket the status is
    ``"no certified root"`` and ``gamma`` holds the raw Newton iterate.
    """
    c = check_class_b(coeffs).astype(float)
    degree = c.size - 1
    if degree < 1:
        raise ConfigError("polynomial must be nonconstant")
    if tol is None:
        tol = cfg.gamma_low ** degree
    t = float(cfg.x0)
    for i in range(cfg.newton_steps):
        p, dp = poly_and_derivative(c, t)
        if p == 0.0:
            break
        if dp == 0.0:
            raise SingularStepError(i, t)
        t = t - p / dp
        if not math.isfinite(t):
            break
    newton_t = t
    if math.isfinite(t) and 0.0 <= t <= ROOT_CEILING:
        res = abs(poly_and_derivative(c, t)[0])
        if res <= tol:
            return RootResult(t, res, "newton", newton_t)
    p_hi = poly_and_derivative(c, ROOT_CEILING)[0]
    if p_hi == 0.0 or (p_hi > 0) != (c[0] > 0):
        root = _bisect(c, 0.0, ROOT_CEILING)
        res = abs(poly_and_derivative(c, root)[0])
        return RootResult(root, res, "bisection", newton_t)
    res = abs(poly_and_derivative(c, t)[0]) if math.isfinite(t) else math.inf
    return RootResult(t, res, "no certified root", newton_t)


def certified_threshold_N(gamma_high, eps, delta):
    """Smallest N with gamma_high^(N+1) <= (1 - gamma_high) eps delta."""
    if not 0 < gamma_high < 1 or eps <= 0 or delta <= 0:
        raise ConfigError("need 0 < gamma_high < 1 and positive eps, delta")
    target = (1.0 - gamma_high) * eps * delta
    n = math.ceil(math.log(target) / math.log(gamma_high)) - 1
    n = max(n, 0)
    # guard the float rounding at the boundary in both directions
    while gamma_high ** (n + 1) > target:
        n += 1
    while n > 0 and gamma_high ** n <= target:
        n -= 1
    return n


@dataclass(frozen=True)
class Certificate:
    gamma: float
    bound: float       # |gamma_true - gamma| <= bound
    constant: float    # 1/(delta (1 - gamma_high))
    N: int


def tabulated_delta(gamma_high):
    for end, delta in sorted(TABULATED_DELTA.items()):
        if gamma_high <= end:
            return delta
    return None


def recover_gamma(b, c=None, cfg=RecoveryConfig(), N=None):
    """Estimate the base from an encoding of 0 (``c`` absent) or a pair.

    The polynomial used has degree N, i.e. N + 1 coefficients.  Returns
    ``(gamma_estimate, certificate_or_None, root_result)``.  A certificate is
    issued only when the root was found, the residual is at most
    ``gamma_low ** N``, the estimate lies in ``[gamma_low, gamma_high]``,
    N reaches the certified threshold, and a transversality constant is
    tabulated for ``gamma_high``.
    """
    if c is None:
        coeffs = np.asarray(b, dtype=np.int8)
    else:
        coeffs, _ = pair_difference_stream(b, c)
    if N is None:
        N = coeffs.size - 1
    if N + 1 > coeffs.size:
        raise RangeError(f"need {N + 1} coefficients, have {coeffs.size}")
    coeffs = coeffs[: N + 1]
    result = newton_first_root(coeffs, cfg, tol=cfg.gamma_low ** N)
    cert = None
    delta = tabulated_delta(cfg.gamma_high)
    if delta is not None and result.found:
        eps = ROOT_CEILING - cfg.gamma_high
        if (N >= certified_threshold_N(cfg.gamma_high, eps, delta)
                and result.residual <= cfg.gamma_low ** N
                and cfg.gamma_low <= result.gamma <= cfg.gamma_high):
            const = 1.0 / (delta * (1.0 - cfg.gamma_high))
            cert = Certificate(result.gamma, const * cfg.gamma_high ** N, const, N)
    return result.gamma, cert, result


@dataclass(frozen=True)
class PhiStructure:
    triples_ok: bool
    min_cofactor: float     # min |R_N| on the grid
    cofactor_floor: float   # 1 - t^3/(1 - t^3) at the grid's right end
    derivative_at_root: float
    ok: bool


def phi_structure_check(bits, grid=2001):
    """Check the period-3 pattern of an encoding of 0 at base 1/phi.

    Complete triples must read (s, -s, -s).  The bits (as polynomial
    coefficients) are then divided by 1 - t - t^2; the cofactor must stay
    above 1 - t^3/(1 - t^3) on [0, 1/phi) and the derivative magnitude at
    1/phi must be at least 1.545.
    """
    b = np.asarray(bits, dtype=float)
    n3 = (b.size // 3) * 3
    tri = b[:n3].reshape(-1, 3)
    triples_ok = bool(np.all(tri[:, 1] == -tri[:, 0]) and np.all(tri[:, 2] == -tri[:, 0]))
    if not triples_ok or n3 == 0:
        return PhiStructure(triples_ok, math.nan, math.nan, math.nan, False)
    # quotient of the triple-pattern polynomial: R(t) = sum_j s_j t^(3j)
    cof = np.zeros(n3 - 2)
    cof[::3] = tri[:, 0]
    t = np.linspace(0.0, PHI_INV, grid, endpoint=False)
    r_vals = np.abs(poly_values(cof, t))
    floor = 1.0 - t ** 3 / (1.0 - t ** 3)
    _, dp = poly_and_derivative(b[:n3], PHI_INV)
    ok = bool(np.all(r_vals >= floor - 1e-12) and abs(dp) >= 1.545)
    return PhiStructure(triples_ok, float(r_vals.min()), float(floor[-1]), abs(dp), ok)
