"""Deterministic diagnostics over recorded trajectories.

Everything here is a pure function of the log: upstream jumps, first
appearance times of strong streams, interior stream maxima, and
checkers for the deterministic path properties that control the walk -
the stream Lipschitz property and the confinement-by-strong-streams
property - plus the parameterized no-big-stream-without-upstream-jump
implication.

Streams at arbitrary (n, j) are replayed from the recorded directions
with the same integer/float evaluation order as the simulator, so
replayed and recorded drifts match bit for bit on an intact log.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import fastsim
from .kernels import InteractionKernel
from .walk import LocalTimeField, TrajectoryLog


class Verdict(Enum):
    PREMISE_NOT_MET = "premise-not-met"
    HOLDS = "holds"
    VIOLATED = "violated"


@dataclass(frozen=True)
class UpstreamJump:
    """A jump from an interior site against the strict sign of Delta_n."""

    n: int
    position: int
    intensity: float


@dataclass
class StreamReport:
    """Interior stream maxima max_{j in 1..L} |Delta(n, j)| per checkpoint."""

    ns: np.ndarray
    max_abs: np.ndarray
    argmax_edge: np.ndarray
    running_max: np.ndarray


@dataclass
class LipschitzReport:
    ok: bool
    pairs_checked: int
    consistency_ok: bool
    first_violation: tuple[int, int, int, float] | None  # (n1, n2, j, |dDelta|)
    detail: str = ""


@dataclass
class ConfinementCheck:
    verdict: Verdict
    j: int
    M: float
    n1: int
    n2: int
    side: str
    first_bad_n: int | None = None


@dataclass
class PropositionCheck:
    verdict: Verdict
    eps: float
    D: float
    first_exceed_n: int | None  # first n with max interior |Delta| >= D
    sigma_n: int | None  # first upstream jump of intensity > eps*D


def _require_full(log: TrajectoryLog) -> None:
    if not log.full:
        raise ValueError("this diagnostic requires full per-step recording")


def delta_series(log: TrajectoryLog, j: int) -> np.ndarray:
    """Delta(n, j) for n = 0..n_steps, replayed from the recorded path."""
    _require_full(log)
    e = log.edge_sequence()
    out = None
    for i, c in enumerate(log.params.kernel.coefficients, start=1):
        lo = np.cumsum(e == (j - i + 1), dtype=np.int64)
        hi = np.cumsum(e == (j + i), dtype=np.int64)
        diff = np.empty(log.n_steps + 1, dtype=np.int64)
        diff[0] = 0
        np.subtract(lo, hi, out=diff[1:])
        term = c * diff.astype(np.float64)
        out = term if out is None else out + term
    return out


def delta_from_field(field: LocalTimeField, kernel: InteractionKernel, j: int) -> float:
    """Stream at edge j evaluated on a local-time snapshot."""
    acc = 0.0
    for i, c in enumerate(kernel.coefficients, start=1):
        acc += c * (field.get(j - i + 1) - field.get(j + i))
    return acc


def _upstream_mask(log: TrajectoryLog, L: int) -> np.ndarray:
    pos = log.positions
    d = log.deltas
    return (pos >= 1) & (pos <= L) & (d != 0.0) & (np.sign(d) * log.dirs < 0)


def upstream_jumps(log: TrajectoryLog, L: int) -> list[UpstreamJump]:
    """All upstream jumps: interior position, nonzero drift, jump against
    its sign; the intensity is |Delta_n|."""
    _require_full(log)
    mask = _upstream_mask(log, L)
    ns = np.nonzero(mask)[0]
    return [
        UpstreamJump(n=int(n), position=int(log.positions[n]), intensity=float(abs(log.deltas[n])))
        for n in ns
    ]


def first_upstream_exceeding(log: TrajectoryLog, L: int, M: float) -> int | None:
    """sigma(M): least n whose upstream jump has intensity > M; None if none."""
    _require_full(log)
    mask = _upstream_mask(log, L) & (np.abs(log.deltas) > M)
    ns = np.nonzero(mask)[0]
    return int(ns[0]) if ns.size else None


def first_stream_appearance(
    log: TrajectoryLog, L: int, M: float, gamma: float, side: str = "+"
) -> int | None:
    """theta_+/-(M): first n at which a geometrically weighted stream
    threshold is reached.

    side "+": least n with Delta(n, j) >= gamma^(j*L) * M for some
    j in {1..L}; side "-": least n with Delta(n, L+1-j) <= -gamma^(j*L) * M.
    """
    _require_full(log)
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if not M > 0:
        raise ValueError("M must be > 0")
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    best: int | None = None
    for j in range(1, L + 1):
        thr = gamma ** (j * L) * M
        if side == "+":
            hits = np.nonzero(delta_series(log, j) >= thr)[0]
        else:
            hits = np.nonzero(delta_series(log, L + 1 - j) <= -thr)[0]
        if hits.size and (best is None or hits[0] < best):
            best = int(hits[0])
    return best


def max_interior_stream(log: TrajectoryLog, L: int) -> StreamReport:
    """Per-checkpoint max_{j in 1..L} |Delta(n, j)| with its argmax edge.

    Full logs are evaluated at every n; thinned logs at their snapshots.
    """
    if log.full:
        ns = np.arange(log.n_steps + 1, dtype=np.int64)
        best = np.zeros(log.n_steps + 1)
        arg = np.ones(log.n_steps + 1, dtype=np.int64)
        for j in range(1, L + 1):
            cur = np.abs(delta_series(log, j))
            better = cur > best
            best[better] = cur[better]
            arg[better] = j
    else:
        snaps = list(log.snapshots)
        ns = np.array([s.n for s in snaps], dtype=np.int64)
        best = np.zeros(len(snaps))
        arg = np.ones(len(snaps), dtype=np.int64)
        kern = log.params.kernel
        for idx, snap in enumerate(snaps):
            for j in range(1, L + 1):
                v = abs(delta_from_field(snap.local_times, kern, j))
                if v > best[idx]:
                    best[idx] = v
                    arg[idx] = j
    running = np.maximum.accumulate(best) if best.size else best
    return StreamReport(ns=ns, max_abs=best, argmax_edge=arg, running_max=running)


_LIPSCHITZ_SEED = 0x5EED_11B5


def check_stream_lipschitz(
    log: TrajectoryLog,
    L: int,
    extra_pairs: int = 10_000,
    tol: float = 1e-9,
) -> LipschitzReport:
    """Verify |Delta(n2, j) - Delta(n1, j)| <= n2 - n1 on interior edges.

    Pairs checked: every single step plus `extra_pairs` random pairs
    (fixed internal seed, so the check is a pure function of the log).
    The replayed drifts and final field are also cross-checked against
    the recorded ones, so a tampered log is reported even if its numbers
    are individually plausible.  tol absorbs float roundoff; genuine
    violations are O(alpha) or larger.
    """
    _require_full(log)
    n = log.n_steps
    deltas, counts, base = fastsim.replay_deltas(
        log.params.kernel.as_array(), log.start_position, log.dirs.astype(np.int64)
    )
    consistency_ok = bool(np.array_equal(deltas, log.deltas))
    detail = "" if consistency_ok else "recorded drifts disagree with path replay"
    if consistency_ok and not np.array_equal(log.path_positions()[:-1], log.positions):
        consistency_ok = False
        detail = "recorded positions disagree with the direction sequence"
    if consistency_ok:
        replay_field = LocalTimeField.from_window(-base, counts)
        if not replay_field == log.final_local_times:
            consistency_ok = False
            detail = "final local-time field disagrees with path replay"
    rng = np.random.default_rng(_LIPSCHITZ_SEED)
    if n >= 2 and extra_pairs > 0:
        a = rng.integers(0, n + 1, size=extra_pairs)
        b = rng.integers(0, n + 1, size=extra_pairs)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keep = lo < hi
        lo, hi = lo[keep], hi[keep]
    else:
        lo = hi = np.empty(0, dtype=np.int64)
    pairs = 0
    first_violation = None
    for j in range(1, L + 1):
        s = delta_series(log, j)
        gaps = np.abs(np.diff(s))
        bad = np.nonzero(gaps > 1.0 + tol)[0]
        pairs += gaps.size
        if bad.size and first_violation is None:
            b0 = int(bad[0])
            first_violation = (b0, b0 + 1, j, float(gaps[b0]))
        diffs = np.abs(s[hi] - s[lo])
        bad = np.nonzero(diffs > (hi - lo) + tol)[0]
        pairs += lo.size
        if bad.size and first_violation is None:
            b0 = int(bad[0])
            first_violation = (int(lo[b0]), int(hi[b0]), j, float(diffs[b0]))
    ok = consistency_ok and first_violation is None
    return LipschitzReport(
        ok=ok,
        pairs_checked=pairs,
        consistency_ok=consistency_ok,
        first_violation=first_violation,
        detail=detail,
    )


def check_confinement_property(
    log: TrajectoryLog,
    L: int,
    j: int,
    M: float,
    n1: int,
    n2: int,
    side: str = "+",
) -> ConfinementCheck:
    """Check the strong-stream confinement property on a window.

    Premise (side "+"): M > 1, n1 < n2 < sigma(M), and
    min_{n in [n1, n2]} Delta(n, j) > M + 1.  Conclusion: the walk stays
    in {j, ..., L+1} throughout [n1, n2].  Side "-" mirrors both: the
    stream stays below -(M+1) and the walk stays in {0, ..., j}.  (Both
    regions contain site j, the site at which the walker feels edge j's
    stream: the premise forbids jumping across edge j / past site j, not
    standing on it.)
    """
    _require_full(log)
    if not 1 <= j <= L:
        raise ValueError("edge j must be interior: 1 <= j <= L")
    if not 0 <= n1 < n2 <= log.n_steps:
        raise ValueError("need 0 <= n1 < n2 <= n_steps")
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    result = ConfinementCheck(Verdict.PREMISE_NOT_MET, j, float(M), n1, n2, side)
    if not M > 1.0:
        return result
    sigma = first_upstream_exceeding(log, L, M)
    if sigma is not None and not n2 < sigma:
        return result
    window = delta_series(log, j)[n1 : n2 + 1]
    if side == "+":
        if not window.min() > M + 1.0:
            return result
    else:
        if not window.max() < -(M + 1.0):
            return result
    path = log.path_positions()[n1 : n2 + 1]
    inside = path >= j if side == "+" else path <= j
    if np.all(inside):
        result.verdict = Verdict.HOLDS
    else:
        result.verdict = Verdict.VIOLATED
        result.first_bad_n = n1 + int(np.nonzero(~inside)[0][0])
    return result


def check_proposition_instance(
    log: TrajectoryLog, L: int, eps: float, D: float
) -> PropositionCheck:
    """Check, for the whole log, that no interior stream reached D
    without a prior (or simultaneous) upstream jump of intensity > eps*D.

    Equivalently: sigma(eps*D) <= inf{n : max_j |Delta(n, j)| >= D}.
    Holds vacuously if the bound D was never reached.
    """
    _require_full(log)
    if not eps > 0 or not D > 0:
        raise ValueError("eps and D must be > 0")
    report = max_interior_stream(log, L)
    exceed = np.nonzero(report.max_abs >= D)[0]
    first_exceed = int(report.ns[exceed[0]]) if exceed.size else None
    sigma = first_upstream_exceeding(log, L, eps * D)
    if first_exceed is None:
        verdict = Verdict.HOLDS
    elif sigma is not None and sigma <= first_exceed:
        verdict = Verdict.HOLDS
    else:
        verdict = Verdict.VIOLATED
    return PropositionCheck(
        verdict=verdict, eps=float(eps), D=float(D),
        first_exceed_n=first_exceed, sigma_n=sigma,
    )


def _plateau_windows(values: np.ndarray) -> list[tuple[int, int]]:
    """Candidate (n1, n2) windows where `values` stays high: maximal runs
    above a few levels below the global maximum."""
    if values.size < 3:
        return []
    peak = int(np.argmax(values))
    top = float(values[peak])
    windows = []
    for level in (top - 1.0, top / 2.0, 2.0 + 1e-6):
        if not level < top:
            continue
        above = values > level
        a = peak
        while a > 0 and above[a - 1]:
            a -= 1
        b = peak
        while b + 1 < values.size and above[b + 1]:
            b += 1
        if b > a:
            windows.append((a, b))
    return windows


def scan_confinement_instances(
    log: TrajectoryLog, L: int, time_points: int = 24
) -> list[ConfinementCheck]:
    """Find premise-satisfiable confinement instances and check each one.

    Candidate windows come from a geometric time grid plus plateau
    windows around each edge's stream extremes.  For every window the
    largest admissible M is derived from the window's stream extremum
    and the upstream jumps seen so far; when some M > 1 satisfies the
    premise the instance is checked (the conclusion does not depend on
    which admissible M is used).  Both stream signs are scanned.
    """
    _require_full(log)
    n = log.n_steps
    if n < 2:
        return []
    grid = np.unique(np.rint(np.geomspace(1, n, num=time_points)).astype(np.int64))
    grid = np.concatenate([[0], grid])
    pairs = [
        (int(grid[a]), int(grid[b]))
        for a in range(grid.size - 1)
        for b in range(a + 1, grid.size)
    ]
    # running max of upstream intensity by step index
    intensity = np.zeros(n + 1)
    mask = _upstream_mask(log, L)
    intensity[:-1][mask] = np.abs(log.deltas[mask])
    run_intensity = np.maximum.accumulate(intensity)
    out: list[ConfinementCheck] = []
    for j in range(1, L + 1):
        s = delta_series(log, j)
        candidates = set(pairs)
        candidates.update(_plateau_windows(s))
        candidates.update(_plateau_windows(-s))
        for n1, n2 in sorted(candidates):
            window = s[n1 : n2 + 1]
            for side, mstar in (
                ("+", float(window.min()) - 1.0),
                ("-", -float(window.max()) - 1.0),
            ):
                # the 1e-9 margin keeps float roundoff in the stream
                # values from minting hairline premise windows that do
                # not exist in exact arithmetic
                m_pick = max(1.0, float(run_intensity[n2])) + 1e-9
                if mstar > m_pick:
                    out.append(
                        check_confinement_property(log, L, j, m_pick, n1, n2, side=side)
                    )
    return out


def proposition_reference_constants(gamma: float, L: int) -> tuple[float, float]:
    """The reference parameterization eps = gamma^(L(L+1)), D0 = 10/eps.

    These are astronomically demanding for any realistic gamma (they
    exist for the sake of the implication, not for desk-scale checks);
    reported alongside user-chosen (eps, D) by the verify CLI.
    """
    if not 0 < gamma:
        raise ValueError("gamma must be > 0")
    eps = float(gamma) ** (L * (L + 1))
    d0 = 10.0 / eps if eps > 0 else float("inf")
    return eps, d0
