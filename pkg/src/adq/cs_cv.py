"""Compressed sensing with a held-out cross validation matrix.

A measurement budget is split between an implementation matrix, whose
measurements feed a decoder that yields a sequence of candidate estimates,
and a small independent cross validation matrix.  By a Johnson-Lindenstrauss
argument, ``||y_cv - Psi x_j||`` then tracks the unknown errors ``||x - x_j||``
to within ``1 +- eps`` for all candidates at once, with
``eps = sqrt(C log(p / (2 xi)) / r)``.

The decoder provided here is orthogonal matching pursuit with an
incrementally updated QR factorisation; every intermediate estimate is kept.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.linalg import solve_triangular

from ._rng import make_rng
from .errors import ConfigError

# independent seed lineages, see MeasurementEnsemble
LINEAGE_PHI = 1
LINEAGE_PSI = 2
LINEAGE_SIGNAL = 3
LINEAGE_POINTS = 4


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Random m x N matrix with i.i.d. entries.

    ``normalization="variance"`` gives entries of variance 1/m (columns of
    expected unit norm); ``"unit-column"`` rescales every realised column to
    norm exactly 1.  Realisations are reproducible from ``(seed, lineage)``.
    """
    distribution: str
    m: int
    N: int
    normalization: str = "variance"
    seed: int = 0
    lineage: tuple = (LINEAGE_PHI,)

    def __post_init__(self):
        if self.distribution not in ("gaussian", "bernoulli"):
            raise ConfigError("distribution must be 'gaussian' or 'bernoulli'")
        if self.normalization not in ("variance", "unit-column"):
            raise ConfigError("normalization must be 'variance' or 'unit-column'")
        if self.m < 1 or self.N < 1:
            raise ConfigError("matrix dimensions must be positive")

    def rng(self, *extra):
        return make_rng(self.seed, *self.lineage, *extra)

    def draw(self, *extra):
        """Realise the matrix; ``extra`` integers select an independent copy."""
        return draw_matrix(self.distribution, self.m, self.N, self.rng(*extra), self.normalization)


def draw_matrix(distribution, m, N, rng, normalization="variance"):
    if distribution == "gaussian":
        a = rng.standard_normal((m, N)) / math.sqrt(m)
    elif distribution == "bernoulli":
        a = np.where(rng.random((m, N)) < 0.5, -1.0, 1.0) / math.sqrt(m)
    else:
        raise ConfigError("distribution must be 'gaussian' or 'bernoulli'")
    if normalization == "unit-column":
        a /= np.linalg.norm(a, axis=0)
    return a


# ---------------------------------------------------------------------------
# orthogonal matching pursuit

@dataclass
class OmpRun:
    """Chosen columns in order (``chosen[:j]`` is the support of estimate j),
    the estimates as rows of a p x N array, and the residual norm after each
    iteration.  ``skipped`` lists columns rejected as linearly dependent."""
    chosen: np.ndarray
    estimates: np.ndarray
    residual_norms: np.ndarray
    skipped: list = field(default_factory=list)

    def support(self, j):
        """Index set after iteration j (1-based)."""
        return self.chosen[:j]

    @property
    def final(self):
        return self.estimates[-1]


def omp(Phi, y, k, rel_tol=1e-12, dependence_tol=1e-10):
    """Greedy decoding with k iterations, keeping every estimate.

    Each iteration picks the column most correlated with the residual (ties
    go to the lowest index), orthogonalises it against the chosen columns by
    twice-applied Gram-Schmidt, and solves the least-squares problem on the
    support with the updated triangular factor.  A column whose orthogonal
    part is negligible is skipped with a warning and the next best one is
    taken.  The run stops early when the residual vanishes.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    m, N = Phi.shape
    if y.shape != (m,):
        raise ConfigError("y must have one entry per row of Phi")
    if not 1 <= k <= m:
        raise ConfigError("need 1 <= k <= number of rows")
    Q = np.zeros((m, k))
    R = np.zeros((k, k))
    z = np.zeros(k)
    excluded = np.zeros(N, dtype=bool)
    chosen = []
    skipped = []
    estimates = []
    norms = []
    col_norms = np.linalg.norm(Phi, axis=0)
    resid = y.copy()
    y_norm = float(np.linalg.norm(y))
    t = 0
    while t < k:
        if y_norm == 0.0 or np.linalg.norm(resid) <= rel_tol * y_norm:
            break
        corr = np.abs(Phi.T @ resid)
        corr[excluded] = -1.0
        idx = int(np.argmax(corr))
        if corr[idx] < 0:
            break  # every column used or rejected
        v = Phi[:, idx].copy()
        coef = np.zeros(t)
        for _ in range(2):
            h = Q[:, :t].T @ v
            v -= Q[:, :t] @ h
            coef += h
        nv = float(np.linalg.norm(v))
        excluded[idx] = True
        if nv <= dependence_tol * max(col_norms[idx], 1e-300):
            warnings.warn(f"column {idx} is dependent on the chosen columns; skipped",
                          RuntimeWarning, stacklevel=2)
            skipped.append(idx)
            continue
        Q[:, t] = v / nv
        R[:t, t] = coef
        R[t, t] = nv
        z[t] = Q[:, t] @ y
        resid = resid - z[t] * Q[:, t]
        chosen.append(idx)
        t += 1
        s = solve_triangular(R[:t, :t], z[:t])
        est = np.zeros(N)
        est[chosen] = s
        estimates.append(est)
        norms.append(float(np.linalg.norm(resid)))
    est_arr = np.array(estimates) if estimates else np.zeros((0, N))
    return OmpRun(np.array(chosen, dtype=np.int64), est_arr, np.array(norms), skipped)


# ---------------------------------------------------------------------------
# dimensioning

def epsilon_of_r(r, p, xi, C=8.0):
    """Accuracy reached with r cross validation rows for p estimates."""
    if r <= 0 or p <= 0 or not 0 < xi < 1 or C <= 0:
        raise ConfigError("need positive r, p, C and xi in (0, 1)")
    return math.sqrt(C * math.log(p / (2.0 * xi)) / r)


def r_of_epsilon(eps, p, xi, C=8.0):
    """Rows needed for accuracy eps: ceil(C eps^-2 log(p / (2 xi)))."""
    if eps <= 0 or p <= 0 or not 0 < xi < 1 or C <= 0:
        raise ConfigError("need positive eps, p, C and xi in (0, 1)")
    return math.ceil(C * math.log(p / (2.0 * xi)) / eps ** 2)


@dataclass(frozen=True)
class CvConfig:
    r: int
    eps: float
    xi: float = 0.01
    p: int = 1
    C: float = 8.0

    def __post_init__(self):
        if self.r < 1 or self.p < 1:
            raise ConfigError("r and p must be positive")
        if not 0 < self.eps <= 0.5:
            raise ConfigError("eps must lie in (0, 1/2]")
        if not 0 < self.xi < 1:
            raise ConfigError("xi must lie in (0, 1)")

    @property
    def certified(self):
        return self.r >= r_of_epsilon(self.eps, self.p, self.xi, self.C)


@dataclass
class CvReport:
    """Cross validation errors of all candidates and the certified ranges
    they imply for the true errors (valid on the JL event)."""
    eta_hat: np.ndarray
    index: int
    eta_cv: float
    eps: float
    error_intervals: np.ndarray       # p x 2, range of ||x - x_j||
    relative_intervals: np.ndarray    # p x 2, range of ||x - x_j|| / ||x||
    oracle_interval: tuple            # range of min_j ||x - x_j||

    @property
    def selected(self):
        return self.index


def _interval(value, lo_factor, hi_factor):
    return np.stack([value * lo_factor, value * hi_factor], axis=-1)


def cv_select(Psi, y_psi, estimates, eps):
    """Pick the estimate with the smallest cross validation residual.

    ``estimates`` is a p x N array (or a list of vectors).  For an accuracy
    ``eps < 1`` the report carries the ranges
    ``eta_hat/(1+eps) .. eta_hat/(1-eps)`` for each error, the normalised
    range with factors ``(1-3eps)/((1+eps)(1-eps)^2)`` and ``1/(1-eps)^2``,
    and the same first range for the oracle error around ``eta_cv``.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    if est.shape[0] == 0 or np.asarray(estimates).size == 0:
        raise ConfigError("no estimates to cross validate")
    if not eps > 0:
        raise ConfigError("eps must be positive")
    resid = y_psi[None, :] - est @ Psi.T
    eta = np.linalg.norm(resid, axis=1)
    j = int(np.argmin(eta))
    hi = 1.0 / (1.0 - eps) if eps < 1 else math.inf
    rel_hi = 1.0 / (1.0 - eps) ** 2 if eps < 1 else math.inf
    rel_lo = (1.0 - 3.0 * eps) / ((1.0 + eps) * (1.0 - eps) ** 2) if eps < 1 else -math.inf
    y_norm = float(np.linalg.norm(y_psi))
    ratio = eta / y_norm if y_norm > 0 else np.full_like(eta, math.inf)
    return CvReport(
        eta_hat=eta,
        index=j,
        eta_cv=float(eta[j]),
        eps=float(eps),
        error_intervals=_interval(eta, 1.0 / (1.0 + eps), hi),
        relative_intervals=_interval(ratio, rel_lo, rel_hi),
        oracle_interval=(float(eta[j]) / (1.0 + eps), float(eta[j]) * hi),
    )


# ---------------------------------------------------------------------------
# JL checks

@dataclass(frozen=True)
class JlRates:
    any_violation_rate: float   # fraction of draws where some point violates
    point_violation_rate: float  # fraction of (draw, point) pairs violating
    draws: int

    def wilson_interval(self, z=1.959963984540054):
        """Wilson score interval for the all-points violation probability."""
        n = self.draws
        phat = self.any_violation_rate
        denom = 1 + z * z / n
        centre = (phat + z * z / (2 * n)) / denom
        half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
        return max(0.0, centre - half), min(1.0, centre + half)


def jl_violation_rate(distribution, points, r, eps, draws, rng, normalization="variance"):
    """Monte-Carlo rate at which an r-row random matrix distorts the norm of
    some point by more than a factor 1 +- eps."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0):
        raise ConfigError("points must be nonzero")
    any_bad = 0
    bad_pairs = 0
    for _ in range(draws):
        M = draw_matrix(distribution, r, pts.shape[1], rng, normalization)
        img = np.linalg.norm(pts @ M.T, axis=1)
        bad = (img < (1 - eps) * norms) | (img > (1 + eps) * norms)
        any_bad += bool(bad.any())
        bad_pairs += int(bad.sum())
    return JlRates(any_bad / draws, bad_pairs / (draws * pts.shape[0]), draws)


# ---------------------------------------------------------------------------
# adaptive measurement allocation and residual bounds

@dataclass
class AdaptiveResult:
    estimate: np.ndarray
    stop_index: int | None     # 1-based ladder position, None when exhausted
    too_dense: bool
    statistics: list            # stopping statistic per visited stage


def adaptive_decode(Phi, y, ladder, k, tau, decoder=None):
    """Decode with growing numbers of rows until cross validation on the
    held-out rows certifies a relative error at most ``tau``.

    Stage j decodes with the first ``ladder[j]`` rows and validates with the
    remaining ``r_j`` rows, rescaled by ``sqrt(m / r_j)`` so they act like a
    matrix with entry variance 1/r_j.  The stopping statistic is
    ``sqrt(r_j) eta_j / ||y|| / (sqrt(r_j) - 3 log p)``.  If no stage passes,
    the decode with all rows is returned and ``too_dense`` is set.
    """
    if decoder is None:
        def decoder(A, b):
            return omp(A, b, min(k, A.shape[0])).final
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    m = Phi.shape[0]
    ladder = list(ladder)
    if ladder != sorted(set(ladder)) or not ladder or ladder[0] < 1 or ladder[-1] >= m:
        raise ConfigError("ladder must be strictly increasing inside [1, m)")
    p = len(ladder)
    margin = 3.0 * math.log(p)
    for mj in ladder:
        if not math.sqrt(m - mj) > margin:
            raise ConfigError(f"stage with {mj} rows leaves too few validation rows")
    y_norm = float(np.linalg.norm(y))
    stats = []
    for j, mj in enumerate(ladder):
        est = decoder(Phi[:mj], y[:mj])
        rj = m - mj
        scale = math.sqrt(m / rj)
        eta = float(np.linalg.norm(scale * (y[mj:] - Phi[mj:] @ est)))
        stat = math.sqrt(rj) * eta / y_norm / (math.sqrt(rj) - margin) if y_norm > 0 else 0.0
        stats.append(stat)
        if stat <= tau:
            return AdaptiveResult(est, j + 1, False, stats)
    return AdaptiveResult(decoder(Phi, y), None, True, stats)


def k_term_residual_bounds(eta_hat, eps, c, estimate_is_k_sparse=False, resparsified=False,
                           want_upper=True):
    """Range for the best k-term error of x from a cross validation residual.

    The lower end is ``(1 - eps) eta_hat / c`` (``3c`` for an estimate that
    was cut down to k terms afterwards).  The upper end
    ``(1 + eps) eta_hat`` holds only for k-sparse estimates; asking for it
    otherwise raises :class:`ConfigError`.
    """
    if eta_hat < 0 or not 0 < eps < 1 or c <= 0:
        raise ConfigError("need eta_hat >= 0, eps in (0, 1), c > 0")
    const = 3.0 * c if resparsified else c
    lower = (1.0 - eps) * eta_hat / const
    if not want_upper:
        return lower, None
    if not (estimate_is_k_sparse or resparsified):
        raise ConfigError("the upper bound needs a k-sparse estimate")
    return lower, (1.0 + eps) * eta_hat


# ---------------------------------------------------------------------------
# the noisy-sparse experiment

def noisy_sparse_signal(N, d, noise_sd, rng):
    """d leading ones plus Gaussian noise of standard deviation ``noise_sd``,
    scaled to unit Euclidean norm."""
    x = np.zeros(N)
    x[:d] = 1.0
    x = x + noise_sd * rng.standard_normal(N)
    return x / np.linalg.norm(x)


def best_k_term_error(x, k):
    """l2 distance from x to its best k-term approximation."""
    a = np.sort(np.abs(np.asarray(x)))
    return float(np.sqrt(np.sum(a[: max(a.size - k, 0)] ** 2)))


@dataclass
class OmpCvTrial:
    r: int
    eps: float
    eta_or: float
    eta_omp: float
    sigma_d: float
    eta_cv: np.ndarray      # per cross validation realisation
    cv_true: np.ndarray     # true error of the selected estimate
    selected: np.ndarray

    @property
    def coverage(self):
        lo = (1 - self.eps) * self.eta_or
        hi = (1 + self.eps) * self.eta_or
        return float(np.mean((self.eta_cv >= lo) & (self.eta_cv <= hi)))

    @property
    def beats_omp(self):
        return float(np.mean(self.eta_cv <= self.eta_omp))

    @property
    def selected_beats_omp(self):
        return float(np.mean(self.cv_true <= self.eta_omp))


def omp_cv_experiment(N=3600, m=800, k=200, d=100, noise_sd=0.05, r=30, realizations=100,
                      xi=0.01, C=1.0, seed=0, distribution="gaussian"):
    """One signal, one implementation matrix with m - r rows, one OMP run,
    and ``realizations`` independent cross validation matrices with r rows."""
    x = noisy_sparse_signal(N, d, noise_sd, make_rng(seed, LINEAGE_SIGNAL))
    n = m - r
    Phi = draw_matrix(distribution, n, N, make_rng(seed, LINEAGE_PHI, r))
    run = omp(Phi, Phi @ x, k)
    errs = np.linalg.norm(run.estimates - x[None, :], axis=1)
    eps = epsilon_of_r(r, k, xi, C)
    cv = np.empty(realizations)
    true = np.empty(realizations)
    sel = np.empty(realizations, dtype=np.int64)
    for q in range(realizations):
        Psi = draw_matrix(distribution, r, N, make_rng(seed, LINEAGE_PSI, r, q))
        rep = cv_select(Psi, Psi @ x, run.estimates, eps)
        cv[q] = rep.eta_cv
        sel[q] = rep.index + 1
        true[q] = errs[rep.index]
    return OmpCvTrial(r, eps, float(errs.min()), float(errs[-1]), best_k_term_error(x, d),
                      cv, true, sel)
