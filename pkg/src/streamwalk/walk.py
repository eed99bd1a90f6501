"""Core state machine for the self-interacting walk.

Two walks share the same jump law: the free walk on all of Z, and the
confined walk that is forced to jump inward at the ends of the interval
{0, ..., L+1}.  Each step reads the stream Delta_n at the walker (a
linear combination of nearby edge local times, see ``kernels``), jumps
right with probability exp(beta*Delta_n)/(exp(beta*Delta_n)+exp(-beta*Delta_n)),
and increments the local time of the traversed edge.

Everything here is the step-by-step reference engine; ``fastsim`` holds
the compiled twin used for long runs.  Both consume the same generator
stream and are tested to agree bit for bit.

A WalkState is single-threaded (synchronize externally if shared);
states and logs can be handed between threads, and concurrent walks
share no mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import InteractionKernel
from .rng import Xoshiro256PlusPlus


@dataclass
class WalkParameters:
    """Static parameters of one walk.

    confinement is the interior length L; None means the free walk.
    The kernel defaults to the standard (1, -alpha) stencil.
    """

    alpha: float = 0.0
    beta: float = 1.0
    kernel: InteractionKernel | None = None
    confinement: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.alpha = float(self.alpha)
        self.beta = float(self.beta)
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.confinement is not None:
            self.confinement = int(self.confinement)
            if self.confinement < 1:
                raise ValueError("confinement interior length L must be >= 1")
        if self.kernel is None:
            self.kernel = InteractionKernel.default(self.alpha)

    @property
    def confined(self) -> bool:
        return self.confinement is not None


class LocalTimeField:
    """Integer local times on unoriented edges, dense over a growable window.

    Edge j is the pair {j-1, j}.  Counts outside the window read as 0.
    Dense storage (rather than a dict) keeps the hot loop cache-friendly;
    the window is at most the visited range plus the kernel reach.
    """

    __slots__ = ("_counts", "_lo", "_total", "_min_seen", "_max_seen")

    def __init__(self, lo: int = -8, size: int = 17):
        self._counts = np.zeros(size, dtype=np.int64)
        self._lo = lo
        self._total = 0
        self._min_seen: int | None = None
        self._max_seen: int | None = None

    @classmethod
    def from_window(cls, lo: int, counts: np.ndarray) -> "LocalTimeField":
        f = cls.__new__(cls)
        f._counts = np.asarray(counts, dtype=np.int64).copy()
        f._lo = int(lo)
        f._total = int(f._counts.sum())
        nz = np.nonzero(f._counts)[0]
        f._min_seen = int(nz[0]) + f._lo if nz.size else None
        f._max_seen = int(nz[-1]) + f._lo if nz.size else None
        return f

    def get(self, j: int) -> int:
        i = j - self._lo
        if 0 <= i < self._counts.size:
            return int(self._counts[i])
        return 0

    def increment(self, j: int) -> None:
        i = j - self._lo
        if not 0 <= i < self._counts.size:
            self._grow(j)
            i = j - self._lo
        self._counts[i] += 1
        self._total += 1
        if self._min_seen is None or j < self._min_seen:
            self._min_seen = j
        if self._max_seen is None or j > self._max_seen:
            self._max_seen = j

    def _grow(self, j: int) -> None:
        lo, hi = self._lo, self._lo + self._counts.size
        new_lo, new_hi = lo, hi
        while j < new_lo:
            new_lo -= max(hi - lo, 8)
        while j >= new_hi:
            new_hi += max(hi - lo, 8)
        counts = np.zeros(new_hi - new_lo, dtype=np.int64)
        counts[lo - new_lo : hi - new_lo] = self._counts
        self._counts = counts
        self._lo = new_lo

    def total(self) -> int:
        return self._total

    def support(self) -> tuple[int, int] | None:
        """(min, max) traversed edge, or None if nothing traversed yet."""
        if self._min_seen is None:
            return None
        return self._min_seen, self._max_seen

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(edges, counts) over the traversed support, increasing edge."""
        if self._min_seen is None:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        edges = np.arange(self._min_seen, self._max_seen + 1, dtype=np.int64)
        counts = self._counts[self._min_seen - self._lo : self._max_seen + 1 - self._lo]
        return edges, counts.copy()

    def copy(self) -> "LocalTimeField":
        f = LocalTimeField.__new__(LocalTimeField)
        f._counts = self._counts.copy()
        f._lo = self._lo
        f._total = self._total
        f._min_seen = self._min_seen
        f._max_seen = self._max_seen
        return f

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalTimeField):
            return NotImplemented
        ea, ca = self.to_arrays()
        eb, cb = other.to_arrays()
        return (
            self._total == other._total
            and np.array_equal(ea, eb)
            and np.array_equal(ca, cb)
        )


class StreamCache:
    """Incremental stream values over the confined window, kept exact.

    Stores, for each kernel slot i, the integer difference
    ell(j-i+1) - ell(j+i) per edge j in {0, ..., L+1}; the stream is then
    assembled as sum_i c_i * diff_i[j] in the same order as a fresh
    recomputation, so cached and recomputed values are bit-identical.
    """

    def __init__(self, kernel: InteractionKernel, L: int):
        self._coeffs = kernel.coefficients
        self._L = L
        self._diffs = np.zeros((kernel.half_width, L + 2), dtype=np.int64)

    def on_traverse(self, e: int) -> None:
        k = len(self._coeffs)
        hi = self._L + 1
        for i in range(1, k + 1):
            j_plus = e + i - 1  # edge j with j-i+1 == e
            if 0 <= j_plus <= hi:
                self._diffs[i - 1, j_plus] += 1
            j_minus = e - i  # edge j with j+i == e
            if 0 <= j_minus <= hi:
                self._diffs[i - 1, j_minus] -= 1

    def delta(self, j: int) -> float:
        acc = 0.0
        for i, c in enumerate(self._coeffs):
            acc += c * int(self._diffs[i, j])
        return acc


@dataclass
class WalkState:
    params: WalkParameters
    position: int = 0
    n: int = 0
    local_times: LocalTimeField = field(default_factory=LocalTimeField)
    stream_cache: StreamCache | None = None


def make_state(params: WalkParameters, position: int = 0) -> WalkState:
    state = WalkState(params=params, position=position)
    if params.confined:
        L = params.confinement
        if not 0 <= position <= L + 1:
            raise ValueError("confined start position outside {0,...,L+1}")
        state.stream_cache = StreamCache(params.kernel, L)
    return state


@dataclass(frozen=True)
class StepRecord:
    """One step: state index n, position before the jump, the drift
    Delta_n that governed it, and the jump direction (+1/-1)."""

    n: int
    position: int
    delta: float
    direction: int


def delta_at(state: WalkState, j: int) -> float:
    """Stream Delta(n, j), recomputed from the local-time field."""
    lt = state.local_times
    acc = 0.0
    for i, c in enumerate(state.params.kernel.coefficients, start=1):
        acc += c * (lt.get(j - i + 1) - lt.get(j + i))
    return acc


def drift_at_walker(state: WalkState) -> float:
    """Delta_n = Delta(n, X_n), the drift entering the jump law."""
    if state.stream_cache is not None:
        return state.stream_cache.delta(state.position)
    return delta_at(state, state.position)


def _prob_right(beta: float, delta: float) -> float:
    # logistic form 1/(1+exp(-2*beta*delta)); branch avoids exp overflow
    z = 2.0 * beta * delta
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def step_probability_right(state: WalkState) -> float:
    """P(jump right) = exp(beta*Delta_n) / (exp(beta*Delta_n) + exp(-beta*Delta_n))."""
    return _prob_right(state.params.beta, drift_at_walker(state))


def _apply_move(state: WalkState, delta: float, direction: int) -> StepRecord:
    pos = state.position
    edge = pos + 1 if direction > 0 else pos
    rec = StepRecord(n=state.n, position=pos, delta=delta, direction=direction)
    state.local_times.increment(edge)
    if state.stream_cache is not None:
        state.stream_cache.on_traverse(edge)
    state.position = pos + direction
    state.n += 1
    return rec


def step_free(state: WalkState, rng) -> StepRecord:
    """One step of the free walk; consumes exactly one uniform draw."""
    delta = drift_at_walker(state)
    p = _prob_right(state.params.beta, delta)
    direction = 1 if rng.uniform() < p else -1
    return _apply_move(state, delta, direction)


def step_confined(state: WalkState, rng) -> StepRecord:
    """One step of the force-confined walk.

    At the ends of {0, ..., L+1} the jump is inward with probability 1
    and consumes no randomness; in the interior it is step_free.
    """
    L = state.params.confinement
    if L is None:
        raise ValueError("state is not confined")
    if state.position == 0:
        return _apply_move(state, drift_at_walker(state), 1)
    if state.position == L + 1:
        return _apply_move(state, drift_at_walker(state), -1)
    return step_free(state, rng)


@dataclass
class Snapshot:
    """Thinned-recording checkpoint: the field after n steps."""

    n: int
    position: int
    local_times: LocalTimeField


@dataclass
class TrajectoryLog:
    """Recorded walk.

    Full recording keeps one row per step: the position before the jump,
    the drift Delta_n, and the direction.  Thinned recording keeps
    local-time snapshots at checkpoints.  The final field is always kept.
    """

    params: WalkParameters
    n_steps: int
    full: bool
    start_position: int
    positions: np.ndarray  # int64[n_steps] position before each step
    deltas: np.ndarray  # float64[n_steps] Delta_n
    dirs: np.ndarray  # int8[n_steps] +-1
    final_position: int
    final_local_times: LocalTimeField
    snapshots: list[Snapshot] = field(default_factory=list)

    def path_positions(self) -> np.ndarray:
        """X_0, ..., X_n (requires full recording)."""
        if not self.full:
            raise ValueError("path reconstruction requires full recording")
        out = np.empty(self.n_steps + 1, dtype=np.int64)
        out[0] = self.start_position
        np.cumsum(self.dirs, out=out[1:])
        out[1:] += self.start_position
        return out

    def edge_sequence(self) -> np.ndarray:
        """Edge traversed at each step (requires full recording)."""
        if not self.full:
            raise ValueError("edge sequence requires full recording")
        return self.positions + (self.dirs > 0)


def geometric_checkpoints(steps: int, points: int = 128) -> list[int]:
    """Geometrically spaced step counts in [1, steps], ending at steps."""
    if steps <= 0:
        return []
    ns = np.unique(np.rint(np.geomspace(1, steps, num=points)).astype(np.int64))
    ns = ns[(ns >= 1) & (ns <= steps)]
    if ns.size == 0 or ns[-1] != steps:
        ns = np.append(ns, steps)
    return [int(v) for v in ns]


def _resolve_checkpoints(steps: int, record_interval: int) -> list[int]:
    if record_interval == 0:
        return geometric_checkpoints(steps)
    if record_interval == 1:
        return [steps] if steps > 0 else []
    ns = list(range(record_interval, steps + 1, record_interval))
    if steps > 0 and (not ns or ns[-1] != steps):
        ns.append(steps)
    return ns


def run_walk(
    params: WalkParameters,
    steps: int,
    record_interval: int = 1,
    engine: str = "fast",
) -> TrajectoryLog:
    """Run the walk for `steps` steps from a fresh state at 0.

    record_interval: 1 records every step (positions, drifts,
    directions); 0 keeps local-time snapshots at geometric checkpoints;
    k > 1 keeps snapshots every k steps.  The final local-time field is
    always recorded.  engine "fast" uses the compiled loop, "python"
    the reference step functions; both produce identical logs for the
    same seed.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if record_interval < 0:
        raise ValueError("record_interval must be >= 0")
    if engine not in ("fast", "python"):
        raise ValueError("engine must be 'fast' or 'python'")
    full = record_interval == 1
    checkpoints = [] if full else _resolve_checkpoints(steps, record_interval)
    if engine == "fast":
        from . import fastsim

        return fastsim.run_walk_fast(params, steps, full, checkpoints)
    return _run_walk_python(params, steps, full, checkpoints)


def _run_walk_python(
    params: WalkParameters, steps: int, full: bool, checkpoints: list[int]
) -> TrajectoryLog:
    state = make_state(params)
    rng = Xoshiro256PlusPlus(params.seed)
    stepper = step_confined if params.confined else step_free
    positions = np.empty(steps if full else 0, dtype=np.int64)
    deltas = np.empty(steps if full else 0, dtype=np.float64)
    dirs = np.empty(steps if full else 0, dtype=np.int8)
    snapshots: list[Snapshot] = []
    ck = set(checkpoints)
    for m in range(steps):
        rec = stepper(state, rng)
        if full:
            positions[m] = rec.position
            deltas[m] = rec.delta
            dirs[m] = rec.direction
        if state.n in ck:
            snapshots.append(
                Snapshot(state.n, state.position, state.local_times.copy())
            )
    return TrajectoryLog(
        params=params,
        n_steps=steps,
        full=full,
        start_position=0,
        positions=positions,
        deltas=deltas,
        dirs=dirs,
        final_position=state.position,
        final_local_times=state.local_times.copy(),
        snapshots=snapshots,
    )


def log_from_path(path, params: WalkParameters) -> TrajectoryLog:
    """Build a full log from an explicit position sequence X_0, X_1, ...

    Used to analyze hand-written or enumerated trajectories; drifts are
    replayed from the path.  Validates nearest-neighbour steps and, for
    confined parameters, the interval constraint.
    """
    path = np.asarray(path, dtype=np.int64)
    if path.size == 0:
        raise ValueError("path must contain at least the starting position")
    dirs = np.diff(path)
    if dirs.size and not np.all(np.abs(dirs) == 1):
        raise ValueError("path is not nearest-neighbour")
    if params.confined:
        L = params.confinement
        if path.min() < 0 or path.max() > L + 1:
            raise ValueError("path leaves the confinement interval")
    state = make_state(params, position=int(path[0]))
    n = dirs.size
    positions = path[:-1].copy()
    deltas = np.empty(n, dtype=np.float64)
    for m in range(n):
        deltas[m] = drift_at_walker(state)
        _apply_move(state, deltas[m], int(dirs[m]))
    return TrajectoryLog(
        params=params,
        n_steps=n,
        full=True,
        start_position=int(path[0]),
        positions=positions,
        deltas=deltas,
        dirs=dirs.astype(np.int8),
        final_position=int(path[-1]),
        final_local_times=state.local_times.copy(),
        snapshots=[],
    )
