"""Experiment definitions.

Each experiment declares typed defaults and a ``run(params, seed)`` function
returning a :class:`Result`: CSV columns, rows and a JSON-able summary.
Randomness comes only from streams derived from ``(seed, experiment id,
trial or cell index)``, so any subset of trials can be recomputed alone.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .._rng import make_rng
from .. import cs_cv, gamma_recovery as gr, gre, sampling, sigma_delta as sd
from ..errors import DegeneratePairError, DivergenceError
from ..quantizers import FlakyMode, ScalarQuantizerSpec


@dataclass
class Result:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    name: str
    ident: int
    defaults: dict
    run: object
    description: str


REGISTRY = {}


def experiment(name, ident, description, **defaults):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, ident, defaults, fn, description)
        return fn
    return wrap


def _fit_slope(x, y):
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


# ---------------------------------------------------------------------------

@experiment("gamma-recovery", 1, "worst-case base recovery error against polynomial degree",
            N_values=(8, 16, 24, 32, 40, 48), trials=100, gamma_low=0.618, gamma_high=0.63,
            nu=0.3, alpha_low=1.7, alpha_high=2.0, length=300)
def run_gamma_recovery(p, seed):
    Ns = list(p["N_values"])
    worst = {N: 0.0 for N in Ns}
    errs = {N: [] for N in Ns}
    certified = {N: 0 for N in Ns}
    statuses = {}
    degenerate = 0
    for trial in range(p["trials"]):
        rng = make_rng(seed, 1, trial)
        gamma = rng.uniform(p["gamma_low"], p["gamma_high"])
        alpha = rng.uniform(p["alpha_low"], p["alpha_high"])
        x = rng.uniform(-1.0, 1.0)
        lam = gr.PHI_INV / gamma
        cfg = gre.GreConfig(alpha=alpha, nu=p["nu"], mode=FlakyMode.coin(0.5),
                            lam1=lam, lam2=lam, N=p["length"])
        b, _ = gre.gre_encode(x, cfg, rng)
        c, _ = gre.gre_encode(-x, cfg, rng)
        for N in Ns:
            try:
                est, cert, res = gr.recover_gamma(b, c, gr.RecoveryConfig(), N)
            except DegeneratePairError:
                degenerate += 1
                continue
            e = abs(est - gamma)
            errs[N].append(e)
            worst[N] = max(worst[N], e)
            certified[N] += cert is not None
            statuses[res.status] = statuses.get(res.status, 0) + 1
    rows = [(N, worst[N], float(np.mean(errs[N])) if errs[N] else math.nan,
             float(np.median(errs[N])) if errs[N] else math.nan, certified[N]) for N in Ns]
    logs = [math.log(max(worst[N], 1e-300)) for N in Ns]
    summary = {
        "log_slope": _fit_slope(Ns, logs),
        "strictly_decreasing": all(worst[a] > worst[b] for a, b in zip(Ns, Ns[1:])),
        "final_worst_error": worst[Ns[-1]],
        "statuses": statuses,
        "degenerate_pairs": degenerate,
    }
    return Result(["N", "worst_error", "mean_error", "median_error", "certified"], rows, summary)


@experiment("gamma-polys", 2, "values of the pair-difference polynomials on [0, 1]",
            N=8, trials=5, grid=101, gamma_low=0.618, gamma_high=0.63, nu=0.3, alpha=1.85,
            length=200)
def run_gamma_polys(p, seed):
    t = np.linspace(0.0, 1.0, p["grid"])
    rows = []
    roots = []
    for trial in range(p["trials"]):
        rng = make_rng(seed, 2, trial)
        gamma = rng.uniform(p["gamma_low"], p["gamma_high"])
        x = rng.uniform(-1.0, 1.0)
        lam = gr.PHI_INV / gamma
        cfg = gre.GreConfig(alpha=p["alpha"], nu=p["nu"], mode=FlakyMode.coin(0.5),
                            lam1=lam, lam2=lam, N=p["length"])
        b, _ = gre.gre_encode(x, cfg, rng)
        c, _ = gre.gre_encode(-x, cfg, rng)
        try:
            d, _ = gr.pair_difference_stream(b, c)
        except DegeneratePairError:
            continue
        coeffs = d[: p["N"] + 1]
        vals = gr.poly_values(coeffs, t)
        rows.extend((trial, gamma, ti, vi) for ti, vi in zip(t, vals))
        res = gr.newton_first_root(coeffs)
        roots.append({"trial": trial, "gamma": gamma, "root": res.gamma, "status": res.status})
    return Result(["trial", "gamma", "t", "value"], rows, {"roots": roots})


@experiment("gre-stability-sweep", 3, "state bounds of the leaky encoder over amplifier and tolerance",
            alpha_min=1.0, alpha_max=2.4, alpha_steps=15, nu_values=(0.0, 0.1, 0.2, 0.3),
            trials=20, steps=2000, bound=10.0)
def run_gre_sweep(p, seed):
    alphas = np.linspace(p["alpha_min"], p["alpha_max"], p["alpha_steps"])
    rows = []
    cell = 0
    for nu in p["nu_values"]:
        rng_range = gre.admissible_alpha_range(nu)
        for alpha in alphas:
            rng = make_rng(seed, 3, cell)
            cell += 1
            T = p["trials"]
            l1 = rng.uniform(0.9, 1.0, T)
            l2 = rng.uniform(0.9, 1.0, T)
            x = rng.uniform(-1.0, 1.0, T)
            cfg = gre.GreConfig(alpha=float(alpha), nu=float(nu), mode=FlakyMode.coin(0.5),
                                lam1=l1, lam2=l2, N=p["steps"])
            _, trace = gre.gre_encode(x, cfg, rng, guard=1e6)
            peak = np.abs(trace).max(axis=1)
            rows.append((float(alpha), float(nu), T, float(peak.max()),
                         float(np.mean(peak <= p["bound"])), int(float(alpha) in rng_range)))
    inside = [r for r in rows if r[5]]
    summary = {"admissible_cells": len(inside),
               "admissible_all_bounded": all(r[4] == 1.0 for r in inside)}
    return Result(["alpha", "nu", "trials", "max_state", "bounded_fraction", "in_admissible_range"],
                  rows, summary)


def _classify_window(b, max_gap):
    nz = np.flatnonzero(b)
    if nz.size == 0:
        return "quiet"
    gaps = np.diff(np.concatenate([[-1], nz, [b.size]]))
    return "oscillatory" if gaps.max() <= max_gap else "irregular"


@experiment("quiet-map", 4, "zero-input fate of the finite-memory scheme over damping and start",
            rho_min=0.96, rho_max=1.0, rho_steps=9, u0_min=-2.0, u0_max=0.0, u0_steps=11,
            gamma=0.2, tau=1.0 / 3.0, burn_in=100000, window=100000, max_gap=100)
def run_quiet_map(p, seed):
    rows = []
    counts = {}
    q = ScalarQuantizerSpec.tri(p["tau"])
    for rho in np.linspace(p["rho_min"], p["rho_max"], p["rho_steps"]):
        cfg = sd.SdConfig(order=2, scheme="finite-memory", rho=float(rho), gamma=p["gamma"], quantizer=q)
        for u0 in np.linspace(p["u0_min"], p["u0_max"], p["u0_steps"]):
            try:
                tr = sd.sd_run(cfg, 0.0, (float(u0), 0.0), steps=p["burn_in"] + p["window"])
            except DivergenceError as exc:
                rows.append((float(rho), float(u0), "diverged", exc.step, math.nan, ""))
                counts["diverged"] = counts.get("diverged", 0) + 1
                continue
            win = tr.b[p["burn_in"]:]
            status = _classify_window(win, p["max_gap"])
            tone = sd.idle_tone_detect(win, p["max_gap"])
            size = float(abs(tr.u[-1]) + abs(tr.v[-1]))
            rows.append((float(rho), float(u0), status, tone.period if tone.periodic else "",
                         size, ""))
            counts[status] = counts.get(status, 0) + 1
    return Result(["rho", "u0", "status", "period", "final_state_size", "note"], rows, {"counts": counts})


def _scheme_config(p):
    qname = p["quantizer"]
    if qname == "default":
        quant = None
    elif qname == "four":
        quant = ScalarQuantizerSpec.four(p["tau"])
    elif qname == "tri":
        quant = ScalarQuantizerSpec.tri(p["tau"])
    else:
        quant = ScalarQuantizerSpec.sign()
    return sd.SdConfig(order=2, scheme=p["scheme"], rho=p["rho"], eps=p["eps"], gamma=p["gamma"],
                       quantizer=quant, symmetric_q4=p["symmetric_q4"])


@experiment("orbit", 5, "a single Sigma-Delta orbit with its bits and trapping-set membership",
            scheme="asymmetric", rho=0.98, eps=0.01, gamma=0.2, u0=-3.4, v0=12.7, f=0.0,
            steps=2000, stride=1, quantizer="default", tau=0.5, symmetric_q4=False)
def run_orbit(p, seed):
    cfg = _scheme_config(p)
    summary = {}
    try:
        tr = sd.sd_run(cfg, p["f"], (p["u0"], p["v0"]), steps=p["steps"], rng=make_rng(seed, 5))
    except DivergenceError as exc:
        tr = exc.partial
        summary["diverged_at"] = exc.step
    u, v = tr.with_initial()
    in_t = sd.region_contains(sd.RegionSpec("T", p["gamma"]), u, v)
    rows = [(0, u[0], v[0], "", "", int(in_t[0]))]
    rows += [(n + 1, tr.u[n], tr.v[n], int(tr.b[n]), int(tr.q[n]), int(in_t[n + 1]))
             for n in range(0, len(tr), p["stride"])]
    quiet = sd.quietness_test(tr, min_tail=min(1000, max(len(tr) // 2, 1)))
    entry = np.flatnonzero(in_t)
    summary.update({"quiet": quiet.status, "settle_index": quiet.settle_index,
                    "settled_value": list(quiet.value) if quiet.value else None,
                    "entry_index": int(entry[0]) if entry.size else None})
    return Result(["n", "u", "v", "b", "q", "in_T"], rows, summary)


@experiment("chaos-compare", 6, "orbit spread and periodicity under small constant input",
            steps=1000000, f=-0.001, gamma=0.2, cell=0.01, max_period=100)
def run_chaos_compare(p, seed):
    variants = [
        ("finite-memory rho=1", sd.SdConfig(scheme="finite-memory", rho=1.0, gamma=p["gamma"])),
        ("finite-memory rho=.995", sd.SdConfig(scheme="finite-memory", rho=0.995, gamma=p["gamma"])),
        ("asymmetric rho=.995", sd.SdConfig(scheme="asymmetric", rho=0.995, gamma=p["gamma"])),
        ("chaotic 1+eps=1.01", sd.SdConfig(scheme="chaotic", eps=0.01, gamma=p["gamma"])),
        ("hybrid eps=.01", sd.SdConfig(scheme="hybrid", eps=0.01, gamma=p["gamma"])),
    ]
    rows = []
    for label, cfg in variants:
        try:
            tr = sd.sd_run(cfg, p["f"], (0.0, 0.0), steps=p["steps"])
        except DivergenceError as exc:
            rows.append((label, cfg.scheme, math.nan, math.nan, 0, "", f"diverged at {exc.step}"))
            continue
        cells = np.unique(np.stack([np.floor(tr.u / p["cell"]), np.floor(tr.v / p["cell"])]), axis=1)
        tone = sd.idle_tone_detect(tr.bits, p["max_period"])
        rows.append((label, cfg.scheme, float(np.abs(tr.u).max()), float(np.abs(tr.v).max()),
                     int(cells.shape[1]), tone.period if tone.periodic else "", tone.status))
    return Result(["variant", "scheme", "max_abs_u", "max_abs_v", "occupied_cells", "period", "tone"],
                  rows, {})


@experiment("sd-accuracy", 7, "reconstruction error against rate for each quantization pipeline",
            sd_ratios=(8, 16, 32, 64), beta_bits=(8, 16, 24), pcm_bits=(4, 8, 12), lam=4.0,
            random_signal=False, degree=4)
def run_sd_accuracy(p, seed):
    if p["random_signal"]:
        f = sampling.TestSignal.random_trig(make_rng(seed, 7), p["degree"])
    else:
        f = sampling.TestSignal.trig([0.5, 0.3], [0.9 * math.pi, 0.37 * math.pi], [0.3, 1.0])
    opts = sampling.PipelineOptions(lam=p["lam"])
    rows = []
    slopes = {}
    plan = [("pcm", p["pcm_bits"]), ("beta", p["beta_bits"]), ("sd1", p["sd_ratios"]),
            ("sd2-finite", p["sd_ratios"]), ("sd2-asymmetric", p["sd_ratios"])]
    for name, budgets in plan:
        table = sampling.distortion_curve(name, f, list(budgets), opts)
        rows.extend((name, b, e, t) for b, e, t in table.rows())
        if name.startswith("sd"):
            slopes[name] = table.slope()
    return Result(["pipeline", "budget", "sup_error", "truncation_bound"], rows, {"log2_slopes": slopes})


@experiment("omp-cv", 8, "cross validated OMP against plain OMP over the validation share",
            N=3600, m=800, k=200, d=100, noise=0.05, r_values=(5, 10, 15, 20, 30, 45, 60, 90),
            realizations=100, xi=0.01, C=1.0, distribution="gaussian")
def run_omp_cv(p, seed):
    rows = []
    for r in p["r_values"]:
        tr = cs_cv.omp_cv_experiment(N=p["N"], m=p["m"], k=p["k"], d=p["d"], noise_sd=p["noise"],
                                     r=r, realizations=p["realizations"], xi=p["xi"], C=p["C"],
                                     seed=seed, distribution=p["distribution"])
        rows.append((r, float(tr.eta_cv.mean()), float(tr.eta_cv.std()), tr.eta_or, tr.eta_omp,
                     tr.sigma_d, tr.eps, tr.coverage, tr.beats_omp, tr.selected_beats_omp,
                     float(np.median(tr.selected))))
    return Result(["r", "mean_eta_cv", "std_eta_cv", "eta_or", "eta_omp", "sigma_d", "eps_theory",
                   "coverage", "cv_below_omp", "selected_beats_omp", "median_selected"], rows, {})


@experiment("jl-check", 9, "all-points distortion rate of random projections at the prescribed rows",
            points=200, N=1000, eps_values=(0.5,), xi=0.01, C=8.0, draws=200, distribution="gaussian")
def run_jl_check(p, seed):
    pts = make_rng(seed, 9, 0).standard_normal((p["points"], p["N"]))
    rows = []
    for i, eps in enumerate(p["eps_values"]):
        r = cs_cv.r_of_epsilon(eps, p["points"], p["xi"], p["C"])
        rates = cs_cv.jl_violation_rate(p["distribution"], pts, r, eps, p["draws"], make_rng(seed, 9, 1, i))
        lo, hi = rates.wilson_interval()
        rows.append((eps, r, rates.any_violation_rate, rates.point_violation_rate, lo, hi,
                     int(lo <= p["xi"])))
    return Result(["eps", "r", "any_violation_rate", "point_violation_rate", "wilson_low",
                   "wilson_high", "consistent_with_xi"], rows, {})


@experiment("adaptive-demo", 10, "adaptive choice of the number of decoding measurements",
            N=1000, m=400, k=40, ladder=(100, 200, 300), tau=0.1, sparse_d=10)
def run_adaptive(p, seed):
    rng = make_rng(seed, 10, 0)
    Phi = cs_cv.draw_matrix("gaussian", p["m"], p["N"], rng)
    sparse = np.zeros(p["N"])
    sparse[rng.choice(p["N"], p["sparse_d"], replace=False)] = rng.choice([-1.0, 1.0], p["sparse_d"])
    dense = rng.standard_normal(p["N"])
    rows = []
    summary = {}
    for name, x in (("sparse", sparse), ("dense", dense)):
        res = cs_cv.adaptive_decode(Phi, Phi @ x, list(p["ladder"]), p["k"], p["tau"])
        rel = float(np.linalg.norm(res.estimate - x) / np.linalg.norm(x))
        for j, stat in enumerate(res.statistics):
            rows.append((name, j + 1, p["ladder"][j], p["m"] - p["ladder"][j], stat,
                         int(res.stop_index == j + 1)))
        summary[name] = {"stop_index": res.stop_index, "too_dense": res.too_dense,
                         "final_relative_error": rel}
    return Result(["signal", "stage", "rows_used", "cv_rows", "statistic", "stopped"], rows, summary)
