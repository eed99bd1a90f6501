"""Compiled hot loops for long runs.

Mirrors the reference engine in ``walk`` operation for operation: the
same xoshiro256++ stream, the same stream evaluation order, the same
logistic branch.  Tests pin bit-identical agreement between the two so
the fast path can be trusted for experiments.

All jitted functions release the GIL; experiment trials can run on a
thread pool without changing results (each trial owns its state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .rng import Xoshiro256PlusPlus
from .walk import LocalTimeField, Snapshot, TrajectoryLog, WalkParameters


def xoshiro_state(seed: int) -> np.ndarray:
    """Generator state for the jitted loops; seeded identically to
    rng.Xoshiro256PlusPlus."""
    g = Xoshiro256PlusPlus(seed)
    return np.array([g.s0, g.s1, g.s2, g.s3], dtype=np.uint64)


@njit(cache=True, nogil=True, inline="always")
def _next_u64(s):
    s0 = s[0]
    s1 = s[1]
    s2 = s[2]
    s3 = s[3]
    tmp = s0 + s3
    result = ((tmp << np.uint64(23)) | (tmp >> np.uint64(41))) + s0
    t = s1 << np.uint64(17)
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return result


@njit(cache=True, nogil=True, inline="always")
def _uniform(s):
    return np.float64(_next_u64(s) >> np.uint64(11)) * 2.0**-53


@njit(cache=True, nogil=True, inline="always")
def _delta_eval(counts, base, j, coeffs):
    acc = 0.0
    for i in range(1, coeffs.shape[0] + 1):
        acc += coeffs[i - 1] * np.float64(
            counts[j - i + 1 + base] - counts[j + i + base]
        )
    return acc


@njit(cache=True, nogil=True, inline="always")
def _prob_right(beta, delta):
    z = 2.0 * beta * delta
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True, nogil=True, inline="always")
def _log_prob(z):
    # log(1/(1+exp(-z))), stable for any z
    if z >= 0.0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


@njit(cache=True, nogil=True)
def _advance_free(
    counts, last, base, coeffs, beta, pos, n0, nsteps, s,
    minp, maxp, rec_pos, rec_delta, rec_dir, rec_on,
):
    for m in range(nsteps):
        d = _delta_eval(counts, base, pos, coeffs)
        p = _prob_right(beta, d)
        u = _uniform(s)
        if u < p:
            direction = 1
            edge = pos + 1
        else:
            direction = -1
            edge = pos
        if rec_on:
            rec_pos[n0 + m] = pos
            rec_delta[n0 + m] = d
            rec_dir[n0 + m] = direction
        counts[edge + base] += 1
        last[edge + base] = n0 + m + 1
        pos += direction
        if pos < minp:
            minp = pos
        elif pos > maxp:
            maxp = pos
    return pos, minp, maxp


@njit(cache=True, nogil=True)
def _advance_confined(
    counts, coeffs, beta, L, pos, n0, nsteps, s, log_surv,
    rec_pos, rec_delta, rec_dir, rec_on,
):
    base = 1
    for m in range(nsteps):
        d = _delta_eval(counts, base, pos, coeffs)
        if pos == 0:
            # forced inward; accumulate the survival term of the free
            # walk that must also have jumped inward here
            log_surv[0] += _log_prob(2.0 * beta * d)
            direction = 1
            edge = pos + 1
        elif pos == L + 1:
            log_surv[0] += _log_prob(-2.0 * beta * d)
            direction = -1
            edge = pos
        else:
            p = _prob_right(beta, d)
            u = _uniform(s)
            if u < p:
                direction = 1
                edge = pos + 1
            else:
                direction = -1
                edge = pos
        if rec_on:
            rec_pos[n0 + m] = pos
            rec_delta[n0 + m] = d
            rec_dir[n0 + m] = direction
        counts[edge + base] += 1
        pos += direction
    return pos


@njit(cache=True, nogil=True)
def _replay(coeffs, start_pos, dirs, counts, base):
    n = dirs.shape[0]
    deltas = np.empty(n, dtype=np.float64)
    pos = start_pos
    for m in range(n):
        deltas[m] = _delta_eval(counts, base, pos, coeffs)
        if dirs[m] > 0:
            edge = pos + 1
        else:
            edge = pos
        counts[edge + base] += 1
        pos += dirs[m]
    return deltas


def replay_deltas(
    coeffs: np.ndarray, start_pos: int, dirs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Recompute per-step drifts along an explicit direction sequence.

    Returns (deltas, final edge counts, base index offset); counts[e + base]
    is the local time of edge e after all steps.
    """
    dirs = np.ascontiguousarray(dirs, dtype=np.int64)
    n = dirs.shape[0]
    base = n + 2 - int(start_pos)
    counts = np.zeros(2 * n + 5, dtype=np.int64)
    deltas = _replay(
        np.ascontiguousarray(coeffs, dtype=np.float64), int(start_pos), dirs, counts, base
    )
    return deltas, counts, base


def _segments(steps: int, checkpoints: list[int]) -> list[int]:
    pts = sorted({int(c) for c in checkpoints if 0 < c <= steps})
    if steps > 0 and (not pts or pts[-1] != steps):
        pts.append(steps)
    return pts


def run_walk_fast(
    params: WalkParameters, steps: int, full: bool, checkpoints: list[int]
) -> TrajectoryLog:
    """Fast-engine implementation behind walk.run_walk."""
    coeffs = params.kernel.as_array()
    beta = params.beta
    s = xoshiro_state(params.seed)
    rec_pos = np.empty(steps if full else 0, dtype=np.int64)
    rec_delta = np.empty(steps if full else 0, dtype=np.float64)
    rec_dir = np.empty(steps if full else 0, dtype=np.int8)
    want = set(checkpoints)
    snapshots: list[Snapshot] = []
    pos = 0
    n = 0
    if params.confined:
        L = params.confinement
        counts = np.zeros(L + 5, dtype=np.int64)
        log_surv = np.zeros(1)
        for ck in _segments(steps, checkpoints):
            pos = _advance_confined(
                counts, coeffs, beta, L, pos, n, ck - n, s, log_surv,
                rec_pos, rec_delta, rec_dir, full,
            )
            n = ck
            if n in want:
                snapshots.append(Snapshot(n, pos, LocalTimeField.from_window(-1, counts)))
        final_field = LocalTimeField.from_window(-1, counts)
    else:
        counts = np.zeros(2 * steps + 5, dtype=np.int64)
        last = np.zeros(2 * steps + 5, dtype=np.int64)
        base = steps + 2
        minp = maxp = 0
        for ck in _segments(steps, checkpoints):
            pos, minp, maxp = _advance_free(
                counts, last, base, coeffs, beta, pos, n, ck - n, s,
                minp, maxp, rec_pos, rec_delta, rec_dir, full,
            )
            n = ck
            if n in want:
                lo = minp - 1
                hi = maxp + 2
                snapshots.append(
                    Snapshot(n, pos, LocalTimeField.from_window(lo, counts[lo + base : hi + base + 1]))
                )
        lo = minp - 1
        hi = maxp + 2
        final_field = LocalTimeField.from_window(lo, counts[lo + base : hi + base + 1])
    return TrajectoryLog(
        params=params,
        n_steps=steps,
        full=full,
        start_position=0,
        positions=rec_pos,
        deltas=rec_delta,
        dirs=rec_dir,
        final_position=int(pos),
        final_local_times=final_field,
        snapshots=snapshots,
    )


@dataclass
class FreeRunResult:
    """State of one free-walk trial used by the experiment harness."""

    counts: np.ndarray
    last_traversal: np.ndarray
    base: int
    final_position: int
    min_position: int
    max_position: int
    min_at_quarter: int
    max_at_quarter: int
    range_early: int
    range_final: int


def run_free_trial(
    coeffs: np.ndarray, beta: float, horizon: int, seed: int, early_n: int
) -> FreeRunResult:
    """Run a free walk to the horizon, noting the visited range at early_n
    and the range extremes at horizon/4 (used by the trapping verdict)."""
    s = xoshiro_state(seed)
    counts = np.zeros(2 * horizon + 5, dtype=np.int64)
    last = np.zeros(2 * horizon + 5, dtype=np.int64)
    base = horizon + 2
    none = np.empty(0, dtype=np.int64)
    nonef = np.empty(0, dtype=np.float64)
    noned = np.empty(0, dtype=np.int8)
    pos, minp, maxp = 0, 0, 0
    early_n = max(0, min(int(early_n), horizon))
    quarter_n = horizon // 4
    range_early = 1
    min_q, max_q = 0, 0
    n = 0
    for stop in sorted({early_n, quarter_n, horizon}):
        pos, minp, maxp = _advance_free(
            counts, last, base, coeffs, beta, pos, n, stop - n, s,
            minp, maxp, none, nonef, noned, False,
        )
        n = stop
        if n == early_n:
            range_early = maxp - minp + 1
        if n == quarter_n:
            min_q, max_q = minp, maxp
    return FreeRunResult(
        counts=counts,
        last_traversal=last,
        base=base,
        final_position=int(pos),
        min_position=int(minp),
        max_position=int(maxp),
        min_at_quarter=int(min_q),
        max_at_quarter=int(max_q),
        range_early=int(range_early),
        range_final=int(maxp - minp + 1),
    )


@dataclass
class ConfinedRunResult:
    """Checkpointed state of one confined-walk trial."""

    checkpoint_ns: np.ndarray
    snapshot_counts: np.ndarray  # (n_checkpoints, L+5); edge e at column e+1
    log_survival: np.ndarray  # coupling survival log-probability at each checkpoint
    final_position: int
    counts: np.ndarray


def run_confined_trial(
    coeffs: np.ndarray,
    beta: float,
    L: int,
    horizon: int,
    seed: int,
    checkpoint_ns,
) -> ConfinedRunResult:
    s = xoshiro_state(seed)
    counts = np.zeros(L + 5, dtype=np.int64)
    log_surv = np.zeros(1)
    none = np.empty(0, dtype=np.int64)
    nonef = np.empty(0, dtype=np.float64)
    noned = np.empty(0, dtype=np.int8)
    cks = [c for c in sorted({int(c) for c in checkpoint_ns}) if 0 < c <= horizon]
    snap = np.zeros((len(cks), L + 5), dtype=np.int64)
    logS = np.zeros(len(cks))
    pos = 0
    n = 0
    for i, ck in enumerate(cks):
        pos = _advance_confined(
            counts, coeffs, beta, L, pos, n, ck - n, s, log_surv,
            none, nonef, noned, False,
        )
        n = ck
        snap[i] = counts
        logS[i] = log_surv[0]
    if n < horizon:
        pos = _advance_confined(
            counts, coeffs, beta, L, pos, n, horizon - n, s, log_surv,
            none, nonef, noned, False,
        )
    return ConfinedRunResult(
        checkpoint_ns=np.asarray(cks, dtype=np.int64),
        snapshot_counts=snap,
        log_survival=logS,
        final_position=int(pos),
        counts=counts,
    )
