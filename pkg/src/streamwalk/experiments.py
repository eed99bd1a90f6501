"""Monte Carlo experiment harness.

Turns the theory into desk-scale measurements: trapping frequency at a
horizon, convergence of the confined local-time profile, growth of the
interior streams, the coupling survival product, and range growth.

Seeding is deterministic and order-free: trial t of an experiment with
master seed S always runs the generator stream seeded by
``rng.trial_seed(S, t)``, so per-trial results are byte-identical no
matter how many worker threads execute them.  The compiled loops
release the GIL, which makes a plain thread pool an effective worker
model.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fastsim
from .kernels import InteractionKernel
from .profiles import (
    ALPHA_INF,
    alpha_threshold,
    boundary_streams,
    limit_profile,
    solve_profile_system,
)
from .rng import trial_seed
from .walk import geometric_checkpoints


@dataclass(frozen=True)
class TrialSeedPolicy:
    """Stable mix of (master seed, trial index) -> per-trial stream seed."""

    master_seed: int

    def seed_for(self, trial_index: int) -> int:
        return trial_seed(self.master_seed, trial_index)


@dataclass
class TrapVerdict:
    """Finite-horizon trapping proxy.

    The walk counts as trapped when (a) the set of edges traversed
    during (H/2, H] equals the set traversed during (H/4, H] and
    consists of consecutive edges, and (b) the visited range stopped
    expanding by H/4 (no first traversals afterwards).  The occupied
    sites are then [x, x + L' + 1] with L' interior sites.  Condition
    (b) is needed because a recurrent walk that re-sweeps its whole
    growing range fast enough satisfies (a) spuriously.  This is an
    operational stand-in for the unobservable event "visits only
    finitely many sites forever".
    """

    trapped: bool
    x: int | None = None
    interior_length: int | None = None
    site_count: int | None = None


@dataclass
class ExperimentSummary:
    name: str
    params: dict
    master_seed: int
    trials: int
    horizon: int
    trial_seeds: list[int]
    rows: list[dict]
    aggregates: dict
    checkpoint_rows: list[dict] = field(default_factory=list)
    wall_clock_s: float = 0.0


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial frequency."""
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def trap_verdict(result: fastsim.FreeRunResult, horizon: int) -> TrapVerdict:
    if horizon < 4:
        return TrapVerdict(False)
    if (
        result.min_position != result.min_at_quarter
        or result.max_position != result.max_at_quarter
    ):
        return TrapVerdict(False)
    lo, hi = result.min_position, result.max_position
    win = result.last_traversal[lo + result.base : hi + 2 + result.base]
    late = np.nonzero(win > horizon // 4)[0]
    later = np.nonzero(win > horizon // 2)[0]
    if late.size == 0 or late.size != later.size:
        return TrapVerdict(False)
    if not np.all(np.diff(late) == 1):
        return TrapVerdict(False)
    first_edge = lo + int(late[0])
    interior = int(late.size) - 1
    return TrapVerdict(
        True, x=first_edge - 1, interior_length=interior, site_count=interior + 2
    )


def trapped_profile_error(
    result: fastsim.FreeRunResult, verdict: TrapVerdict, horizon: int, alpha: float
) -> float:
    """sup_j |ell(H, x+j)/H - u_j| against the length-L' limiting profile,
    recentred to the trapped interval."""
    lp = verdict.interior_length
    if not verdict.trapped or lp is None or lp < 1:
        return math.nan
    u = solve_profile_system(InteractionKernel.default(alpha), lp)
    a = verdict.x + 1 + result.base
    ell = result.counts[a : a + lp + 1].astype(np.float64)
    return float(np.max(np.abs(ell / horizon - u)))


def _map_trials(fn, trials: int, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(trials)))
    return [fn(t) for t in range(trials)]


def _free_trial_row(alpha: float, beta: float, horizon: int, policy: TrialSeedPolicy, trial: int) -> dict:
    seed = policy.seed_for(trial)
    coeffs = InteractionKernel.default(alpha).as_array()
    res = fastsim.run_free_trial(coeffs, beta, horizon, seed, horizon // 10)
    verdict = trap_verdict(res, horizon)
    err = trapped_profile_error(res, verdict, horizon, alpha)
    return {
        "trial": trial,
        "seed": seed,
        "trapped": verdict.trapped,
        "x": verdict.x,
        "interior_length": verdict.interior_length,
        "site_count": verdict.site_count,
        "profile_err": err,
        "range_early": res.range_early,
        "range_final": res.range_final,
    }


def _free_experiment(
    name: str, alpha: float, beta: float, trials: int, horizon: int, seed: int, threads: int
) -> ExperimentSummary:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0 = time.perf_counter()
    policy = TrialSeedPolicy(seed)
    rows = _map_trials(
        lambda t: _free_trial_row(alpha, beta, horizon, policy, t), trials, threads
    )
    params = {
        "alpha": alpha, "beta": beta, "trials": trials, "horizon": horizon,
        "master_seed": seed, "threads": threads,
    }
    return ExperimentSummary(
        name=name,
        params=params,
        master_seed=seed,
        trials=trials,
        horizon=horizon,
        trial_seeds=[policy.seed_for(t) for t in range(trials)],
        rows=rows,
        aggregates={},
        wall_clock_s=time.perf_counter() - t0,
    )


def aggregate_trapping(rows: list[dict], trials: int) -> dict:
    """Trapping aggregates, a pure function of the per-trial rows."""
    trapped_rows = [r for r in rows if r["trapped"]]
    histogram: dict[int, int] = {}
    for r in trapped_rows:
        histogram[r["site_count"]] = histogram.get(r["site_count"], 0) + 1
    errs = [r["profile_err"] for r in trapped_rows if not math.isnan(r["profile_err"])]
    k = len(trapped_rows)
    lo, hi = wilson_interval(k, trials)
    return {
        "trapped_count": k,
        "trap_frequency": k / trials,
        "trap_frequency_wilson95": [lo, hi],
        "site_count_histogram": {str(s): c for s, c in sorted(histogram.items())},
        "site_count_frequency": {
            str(s): c / trials for s, c in sorted(histogram.items())
        },
        "profile_err_max": max(errs) if errs else None,
        "profile_err_median": float(np.median(errs)) if errs else None,
        "profile_err_le_005_fraction": (
            sum(1 for e in errs if e <= 0.05) / len(errs) if errs else None
        ),
    }


def trapping_probability_experiment(
    alpha: float, beta: float, trials: int, horizon: int, seed: int, threads: int = 1
) -> ExperimentSummary:
    """Free-walk trapping frequency at a horizon, by trapped-interval size."""
    summary = _free_experiment("trapping", alpha, beta, trials, horizon, seed, threads)
    summary.aggregates = aggregate_trapping(summary.rows, trials)
    return summary


def aggregate_range(rows: list[dict], trials: int) -> dict:
    grew = sum(1 for r in rows if r["range_final"] > r["range_early"])
    frozen = sum(1 for r in rows if r["range_final"] == r["range_early"])
    lo, hi = wilson_interval(grew, trials)
    return {
        "strict_growth_count": grew,
        "strict_growth_fraction": grew / trials,
        "strict_growth_wilson95": [lo, hi],
        "frozen_range_count": frozen,
        "frozen_range_fraction": frozen / trials,
        "trapped_count": sum(1 for r in rows if r["trapped"]),
    }


def range_growth_experiment(
    alpha: float, beta: float, trials: int, horizon: int, seed: int, threads: int = 1
) -> ExperimentSummary:
    """Fraction of free-walk trials whose visited range strictly grows
    between horizon/10 and the horizon."""
    summary = _free_experiment("range", alpha, beta, trials, horizon, seed, threads)
    summary.aggregates = aggregate_range(summary.rows, trials)
    return summary


def _target_profile(alpha: float, L: int) -> tuple[np.ndarray, str]:
    if ALPHA_INF < alpha < alpha_threshold(L):
        return limit_profile(alpha, L).u, "closed"
    return solve_profile_system(InteractionKernel.default(alpha), L), "linear"


def _delta_from_counts_row(row: np.ndarray, coeffs: np.ndarray, j: int) -> float:
    # row is the confined counts array: edge e at column e + 1
    acc = 0.0
    for i in range(1, coeffs.shape[0] + 1):
        acc += coeffs[i - 1] * float(row[j - i + 1 + 1] - row[j + i + 1])
    return acc


def profile_convergence_experiment(
    alpha: float, L: int, beta: float, horizon: int, checkpoints: int, seed: int
) -> ExperimentSummary:
    """Confined-walk convergence of ell(n, .)/n to the limiting profile.

    Records sup_j |ell(n,j)/n - u_j| and the boundary drifts
    Delta(n,0)/n, Delta(n,L+1)/n at geometric checkpoints.
    """
    t0 = time.perf_counter()
    u, target_kind = _target_profile(alpha, L)
    d0, dL1 = boundary_streams(u, alpha)
    coeffs = InteractionKernel.default(alpha).as_array()
    cks = geometric_checkpoints(horizon, checkpoints)
    res = fastsim.run_confined_trial(coeffs, beta, L, horizon, seed, cks)
    rows = []
    for i, n in enumerate(res.checkpoint_ns):
        row = res.snapshot_counts[i]
        ell = row[2 : L + 3].astype(np.float64)  # edges 1..L+1
        rows.append(
            {
                "n": int(n),
                "sup_err": float(np.max(np.abs(ell / n - u))),
                "d0_hat": _delta_from_counts_row(row, coeffs, 0) / n,
                "dL1_hat": _delta_from_counts_row(row, coeffs, L + 1) / n,
            }
        )
    params = {
        "alpha": alpha, "beta": beta, "L": L, "horizon": horizon,
        "checkpoints": checkpoints, "master_seed": seed,
    }
    aggregates = {
        "target_kind": target_kind,
        "u": [float(v) for v in u],
        "d0": d0,
        "dL1": dL1,
        "final_sup_err": rows[-1]["sup_err"] if rows else None,
        "final_d0_hat": rows[-1]["d0_hat"] if rows else None,
        "final_dL1_hat": rows[-1]["dL1_hat"] if rows else None,
    }
    return ExperimentSummary(
        name="convergence",
        params=params,
        master_seed=seed,
        trials=1,
        horizon=horizon,
        trial_seeds=[seed],
        rows=[],
        checkpoint_rows=rows,
        aggregates=aggregates,
        wall_clock_s=time.perf_counter() - t0,
    )


def stream_growth_experiment(
    alpha: float, L: int, beta: float, horizon: int, seed: int, checkpoints: int = 160
) -> ExperimentSummary:
    """Growth of the interior streams of a confined run.

    Reports max_{j in 1..L} |Delta(n, j)| at geometric checkpoints, its
    ratio to log n, an envelope/least-squares fit of the c*log(n) bound,
    and the boundary drifts against their limits.
    """
    t0 = time.perf_counter()
    u, target_kind = _target_profile(alpha, L)
    d0, dL1 = boundary_streams(u, alpha)
    coeffs = InteractionKernel.default(alpha).as_array()
    cks = geometric_checkpoints(horizon, checkpoints)
    res = fastsim.run_confined_trial(coeffs, beta, L, horizon, seed, cks)
    rows = []
    for i, n in enumerate(res.checkpoint_ns):
        row = res.snapshot_counts[i]
        mx = max(
            abs(_delta_from_counts_row(row, coeffs, j)) for j in range(1, L + 1)
        )
        rows.append(
            {
                "n": int(n),
                "max_stream": mx,
                "ratio_logn": mx / math.log(n) if n >= 2 else math.nan,
                "d0_hat": _delta_from_counts_row(row, coeffs, 0) / n,
                "dL1_hat": _delta_from_counts_row(row, coeffs, L + 1) / n,
            }
        )
    tail = [r for r in rows if r["n"] >= 100]
    c_env = max((r["ratio_logn"] for r in tail), default=math.nan)
    xs = np.array([math.log(r["n"]) for r in tail])
    ys = np.array([r["max_stream"] for r in tail])
    c_lsq = float(xs @ ys / (xs @ xs)) if xs.size else math.nan
    params = {
        "alpha": alpha, "beta": beta, "L": L, "horizon": horizon,
        "checkpoints": checkpoints, "master_seed": seed,
    }
    aggregates = {
        "target_kind": target_kind,
        "d0": d0,
        "dL1": dL1,
        "c_envelope": c_env,
        "c_lsq": c_lsq,
        "final_max_stream": rows[-1]["max_stream"] if rows else None,
        "final_max_over_n": rows[-1]["max_stream"] / horizon if rows else None,
        "final_d0_hat": rows[-1]["d0_hat"] if rows else None,
        "final_dL1_hat": rows[-1]["dL1_hat"] if rows else None,
    }
    return ExperimentSummary(
        name="streams",
        params=params,
        master_seed=seed,
        trials=1,
        horizon=horizon,
        trial_seeds=[seed],
        rows=[],
        checkpoint_rows=rows,
        aggregates=aggregates,
        wall_clock_s=time.perf_counter() - t0,
    )


CONVERGENCE_LOG_TOL = 1e-3  # successive-checkpoint log-survival gap


def aggregate_coupling(rows: list[dict], trials: int) -> dict:
    survs = [r["survival"] for r in rows]
    return {
        "converged_count": sum(1 for r in rows if r["converged"]),
        "survival_lt_1e6_fraction": sum(1 for v in survs if v < 1e-6) / trials,
        "survival_min": min(survs),
        "survival_max": max(survs),
        "mean_final_log_survival": float(np.mean([r["final_log_survival"] for r in rows])),
    }


def coupling_survival_experiment(
    alpha: float,
    L: int,
    beta: float,
    horizon: int,
    trials: int,
    seed: int,
    checkpoints: int = 64,
    threads: int = 1,
) -> ExperimentSummary:
    """Survival estimate of the coupling between the free and confined walks.

    Accumulates S(t) = sum of log p_inward over boundary-visit times of
    the confined walk; exp(S(t)) estimates the probability that the free
    walk has stayed inside the interval up to t, and its limit the
    probability it never leaves.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t0 = time.perf_counter()
    coeffs = InteractionKernel.default(alpha).as_array()
    cks = geometric_checkpoints(horizon, checkpoints)
    policy = TrialSeedPolicy(seed)

    def one(trial: int):
        s = policy.seed_for(trial)
        return trial, s, fastsim.run_confined_trial(coeffs, beta, L, horizon, s, cks)

    results = _map_trials(one, trials, threads)
    rows = []
    checkpoint_rows = []
    for trial, s, res in results:
        logS = res.log_survival
        for n, v in zip(res.checkpoint_ns, logS):
            checkpoint_rows.append(
                {"trial": trial, "n": int(n), "log_survival": float(v),
                 "survival": math.exp(v) if v > -745 else 0.0}
            )
        final = float(logS[-1]) if logS.size else 0.0
        converged = bool(
            logS.size >= 2 and abs(logS[-1] - logS[-2]) < CONVERGENCE_LOG_TOL
        )
        rows.append(
            {
                "trial": trial,
                "seed": s,
                "final_log_survival": final,
                "survival": math.exp(final) if final > -745 else 0.0,
                "converged": converged,
            }
        )
    params = {
        "alpha": alpha, "beta": beta, "L": L, "horizon": horizon,
        "trials": trials, "checkpoints": checkpoints, "master_seed": seed,
        "threads": threads,
    }
    aggregates = aggregate_coupling(rows, trials)
    return ExperimentSummary(
        name="coupling",
        params=params,
        master_seed=seed,
        trials=trials,
        horizon=horizon,
        trial_seeds=[policy.seed_for(t) for t in range(trials)],
        rows=rows,
        checkpoint_rows=checkpoint_rows,
        aggregates=aggregates,
        wall_clock_s=time.perf_counter() - t0,
    )
