"""Exact trapping thresholds, the closed-form limiting local-time
profile, the generic banded solver for the stationary-profile system,
boundary streams, and regime classification.

For interior length L the zero-stream conditions

    d_1 = ... = d_L = 0,   l_1 + ... + l_{L+1} = 1,
    d_j = -alpha*l_{j-1} + l_j - l_{j+1} + alpha*l_{j+2},  l_0 = l_{L+2} = 0

pin the limiting profile.  Above alpha = 1/3 the solution rides a
cosine: with omega given by cos(omega) = (1-alpha)/(2*alpha) and a
phase chosen so the profile vanishes at both ends,

    u_j = (cos(phi) - cos(omega*j + phi)) / Z.

The phase used here is phi = (2*pi - (L+2)*omega)/2: the (L+2) factor
is forced by the end condition u_{L+2} = 0 and by the L = 1 symmetric
case, and is cross-validated against the linear solver, which is kept
as an independent route to the same numbers (and the only route for
alpha <= 1/3 or non-default kernels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import cosdg

from .kernels import InteractionKernel

ALPHA_INF = 1.0 / 3.0  # infimum of the threshold sequence
CRITICAL_TOL = 1e-12


class ProfileSystemError(RuntimeError):
    """The stationary-profile linear system is singular (or numerically
    unusable); carries a condition-number estimate when available."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class CriticalAlpha(ValueError):
    """alpha sits on a threshold (within CRITICAL_TOL); behaviour there
    is outside the classified phase diagram."""

    def __init__(self, index: int, alpha: float):
        super().__init__(
            f"alpha={alpha!r} equals the threshold for interior length {index} "
            f"(within {CRITICAL_TOL:g}); critical behaviour is not classified"
        )
        self.index = index
        self.alpha = alpha


def alpha_threshold(L: int) -> float:
    """Threshold for interior length L: +inf for L=1, else
    1/(1 + 2*cos(2*pi/(L+2))).

    Evaluated through the degree-based cosine so that exactly
    representable values (alpha_2 = 1, alpha_4 = 1/2) come out exact.
    """
    L = int(L)
    if L < 1:
        raise ValueError("interior length L must be >= 1")
    if L == 1:
        return math.inf
    return 1.0 / (1.0 + 2.0 * float(cosdg(360.0 / (L + 2))))


@dataclass(frozen=True)
class Threshold:
    L: int
    value: float


def threshold_table(lmax: int) -> list[Threshold]:
    return [Threshold(L, alpha_threshold(L)) for L in range(1, int(lmax) + 1)]


def omega_of_alpha(alpha: float) -> float:
    """omega in (0, pi) with cos(omega) = (1-alpha)/(2*alpha); needs alpha > 1/3."""
    alpha = float(alpha)
    if not alpha > ALPHA_INF:
        raise ValueError("omega is defined only for alpha > 1/3")
    return math.acos((1.0 - alpha) / (2.0 * alpha))


def phase_of(alpha: float, L: int) -> float:
    """Phase phi = (2*pi - (L+2)*omega)/2 of the cosine profile.

    Requires 1/3 < alpha < alpha_threshold(L) so that phi > 0.
    """
    L = int(L)
    if L < 1:
        raise ValueError("interior length L must be >= 1")
    if not ALPHA_INF < alpha < alpha_threshold(L):
        raise ValueError("phase requires 1/3 < alpha < alpha_threshold(L)")
    w = omega_of_alpha(alpha)
    return 0.5 * (2.0 * math.pi - (L + 2) * w)


@dataclass
class LimitProfile:
    """Closed-form limiting profile and its derived quantities."""

    L: int
    alpha: float
    u: np.ndarray  # (u_1, ..., u_{L+1}), sums to 1
    omega: float
    phi: float
    d0: float
    dL1: float
    ltilde_m1: float  # one-step extension past the left end
    ltilde_L3: float  # one-step extension past the right end
    znorm: float


def limit_profile(alpha: float, L: int) -> LimitProfile:
    """Closed-form profile for 1/3 < alpha < alpha_threshold(L)."""
    w = omega_of_alpha(alpha)
    phi = phase_of(alpha, L)
    j = np.arange(1, L + 2, dtype=np.float64)
    raw = math.cos(phi) - np.cos(w * j + phi)
    z = float(raw.sum())
    u = raw / z
    d0, dL1 = boundary_streams(u, alpha)
    lm1, lL3 = extend_profile(u, alpha)
    return LimitProfile(
        L=int(L), alpha=float(alpha), u=u, omega=w, phi=phi,
        d0=d0, dL1=dL1, ltilde_m1=lm1, ltilde_L3=lL3, znorm=z,
    )


def stream_at(profile, kernel: InteractionKernel, j: int) -> float:
    """d_j of a finite profile (l_1..l_{L+1}), zero outside the interval."""
    l = np.asarray(profile, dtype=np.float64)
    m_max = l.shape[0]

    def ell(m: int) -> float:
        return float(l[m - 1]) if 1 <= m <= m_max else 0.0

    acc = 0.0
    for i, c in enumerate(kernel.coefficients, start=1):
        acc += c * (ell(j - i + 1) - ell(j + i))
    return acc


def residual_streams(profile, kernel: InteractionKernel) -> np.ndarray:
    """Interior residuals (d_1, ..., d_L); all should vanish for a solution."""
    L = len(profile) - 1
    return np.array([stream_at(profile, kernel, j) for j in range(1, L + 1)])


def boundary_streams(profile, alpha: float) -> tuple[float, float]:
    """(d_0, d_{L+1}) of the default kernel at the given profile:
    d_0 = -l_1 + alpha*l_2,  d_{L+1} = -alpha*l_L + l_{L+1}."""
    kern = InteractionKernel.default(alpha)
    L = len(profile) - 1
    return stream_at(profile, kern, 0), stream_at(profile, kern, L + 1)


def extend_profile(profile, alpha: float) -> tuple[float, float]:
    """One-step extension of the profile past each end of the interval.

    The interior conditions make l_0=0, ..., l_{L+2}=0 part of a
    bi-infinite sequence with all streams zero; solving that recurrence
    one step outward gives ltilde_{-1} = (-l_1 + alpha*l_2)/alpha and
    ltilde_{L+3} = (alpha*l_L - l_{L+1})/alpha, whence
    d_0 = alpha*ltilde_{-1} and d_{L+1} = -alpha*ltilde_{L+3}.
    """
    alpha = float(alpha)
    if alpha == 0.0:
        raise ValueError("extension requires alpha != 0")
    l = np.asarray(profile, dtype=np.float64)
    L = l.shape[0] - 1
    lm1 = (-l[0] + alpha * l[1]) / alpha
    lL3 = (alpha * l[L - 1] - l[L]) / alpha
    return float(lm1), float(lL3)


def solve_profile_system(kernel: InteractionKernel, L: int) -> np.ndarray:
    """Solve d_1 = ... = d_L = 0 with sum(l) = 1 for (l_1, ..., l_{L+1}).

    Independent of the closed form; works for any alpha (including
    alpha <= 1/3) and any kernel.  Banded LU with partial pivoting on
    the interior equations (l_{L+1} pinned, then normalized); falls back
    to a dense solve of the bordered system if the reduced system is
    singular, and raises ProfileSystemError with a condition estimate if
    the full system itself is singular.
    """
    L = int(L)
    if L < 1:
        raise ValueError("interior length L must be >= 1")
    c = kernel.as_array()
    k = c.shape[0]
    ab = np.zeros((2 * k, L))  # kl = k-1, ku = k
    rhs = np.zeros(L)
    for j in range(1, L + 1):  # equation d_j = 0
        row = j - 1
        for i in range(1, k + 1):
            m = j - i + 1  # +c_i l_m
            if 1 <= m <= L:
                ab[k + row - (m - 1), m - 1] += c[i - 1]
            m = j + i  # -c_i l_m
            if 1 <= m <= L:
                ab[k + row - (m - 1), m - 1] -= c[i - 1]
            elif m == L + 1:
                rhs[row] += c[i - 1]  # moved to the right-hand side
    sol = None
    try:
        x = solve_banded((k - 1, k), ab, rhs)
        v = np.append(x, 1.0)
        if np.all(np.isfinite(v)):
            resid = float(np.max(np.abs(residual_streams(v, kernel)))) if L else 0.0
            if resid <= 1e-8 * max(1.0, float(np.max(np.abs(v)))):
                sol = v
    except np.linalg.LinAlgError:
        sol = None
    if sol is None:
        sol = _solve_dense(kernel, L)
    total = float(sol.sum())
    if total == 0.0 or not math.isfinite(total):
        raise ProfileSystemError(
            "profile system has no normalizable solution",
            condition=_condition_estimate(kernel, L),
        )
    return sol / total


def _full_matrix(kernel: InteractionKernel, L: int) -> np.ndarray:
    c = kernel.coefficients
    k = len(c)
    a = np.zeros((L + 1, L + 1))
    for j in range(1, L + 1):
        for i in range(1, k + 1):
            m = j - i + 1
            if 1 <= m <= L + 1:
                a[j - 1, m - 1] += c[i - 1]
            m = j + i
            if 1 <= m <= L + 1:
                a[j - 1, m - 1] -= c[i - 1]
    a[L, :] = 1.0
    return a


def _condition_estimate(kernel: InteractionKernel, L: int) -> float:
    try:
        return float(np.linalg.cond(_full_matrix(kernel, L)))
    except np.linalg.LinAlgError:
        return math.inf


def _solve_dense(kernel: InteractionKernel, L: int) -> np.ndarray:
    a = _full_matrix(kernel, L)
    b = np.zeros(L + 1)
    b[L] = 1.0
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise ProfileSystemError(
            f"profile system is singular for L={L}",
            condition=_condition_estimate(kernel, L),
        ) from exc
    if not np.all(np.isfinite(sol)):
        raise ProfileSystemError(
            f"profile system is numerically singular for L={L}",
            condition=_condition_estimate(kernel, L),
        )
    return sol


def trapping_index(alpha: float) -> int | None:
    """The L with alpha in (alpha_{L+1}, alpha_L); None for alpha <= 1/3.

    Raises CriticalAlpha when alpha sits on a threshold to within
    CRITICAL_TOL - the phase diagram is open exactly there.
    """
    alpha = float(alpha)
    if alpha <= ALPHA_INF:
        return None
    x = 2.0 * math.pi / omega_of_alpha(alpha)  # solves alpha_threshold(x-2) = alpha
    near = int(round(x)) - 2
    for cand in (near - 1, near, near + 1):
        if cand >= 2 and abs(alpha_threshold(cand) - alpha) <= CRITICAL_TOL:
            raise CriticalAlpha(cand, alpha)
    L = max(1, int(math.floor(x)) - 2)
    # settle float fuzz at the floor boundary against the real thresholds
    while L > 1 and alpha >= alpha_threshold(L):
        L -= 1
    while alpha <= alpha_threshold(L + 1):
        L += 1
    return L


class Regime(Enum):
    TRAP_POSSIBLE = "trap-possible"
    ESCAPE_CERTAIN = "escape-certain"
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"


@dataclass
class RegimeClassification:
    """Phase-diagram classification of alpha, reported against a given
    interval length L together with the boundary-stream signs of the
    solved L-profile."""

    regime: Regime
    L: int
    alpha: float
    trap_index: int | None
    critical_index: int | None
    d0: float
    dL1: float
    profile: np.ndarray

    @property
    def traps_at_this_length(self) -> bool:
        return self.regime is Regime.TRAP_POSSIBLE and self.trap_index == self.L

    @property
    def escape_certain_at_this_length(self) -> bool:
        """alpha below the (L+1)-threshold: almost surely more than L+2 sites."""
        return self.regime in (Regime.ESCAPE_CERTAIN, Regime.SUBCRITICAL)


def classify_regime(alpha: float, L: int) -> RegimeClassification:
    """Classify alpha and report the boundary-stream signs at the solved
    length-L profile, asserting the sign dichotomy where it applies."""
    L = int(L)
    alpha = float(alpha)
    critical_index = None
    trap_index = None
    try:
        trap_index = trapping_index(alpha)
    except CriticalAlpha as crit:
        critical_index = crit.index
    profile = solve_profile_system(InteractionKernel.default(alpha), L)
    d0, dL1 = boundary_streams(profile, alpha)
    if critical_index is not None:
        regime = Regime.CRITICAL
    elif trap_index is None:
        regime = Regime.SUBCRITICAL
    elif alpha < alpha_threshold(L + 1):
        regime = Regime.ESCAPE_CERTAIN
    else:
        regime = Regime.TRAP_POSSIBLE
    if regime is not Regime.CRITICAL and 0.0 <= alpha < alpha_threshold(L):
        if trap_index == L and not (d0 > 0 and dL1 < 0):
            raise AssertionError(
                f"sign dichotomy violated at alpha={alpha}, L={L}: "
                f"expected (+,-), got ({d0:+.3e}, {dL1:+.3e})"
            )
        if alpha < alpha_threshold(L + 1) and not (d0 < 0 and dL1 > 0):
            raise AssertionError(
                f"sign dichotomy violated at alpha={alpha}, L={L}: "
                f"expected (-,+), got ({d0:+.3e}, {dL1:+.3e})"
            )
    return RegimeClassification(
        regime=regime,
        L=L,
        alpha=alpha,
        trap_index=trap_index,
        critical_index=critical_index,
        d0=d0,
        dL1=dL1,
        profile=profile,
    )


def alpha_grid(L: int, points: int = 50, inset_cap: float = 1e-3) -> np.ndarray:
    """Evenly spaced alphas strictly inside the trap window (alpha_{L+1}, alpha_L).

    The inset from each end is min(inset_cap, 5% of the window), so the
    grid stays non-empty even when consecutive thresholds are closer
    than 2*inset_cap (which happens for L >= 15).  For L = 1 the window
    is unbounded above and is capped at 20.
    """
    lo = alpha_threshold(L + 1)
    hi = alpha_threshold(L) if L > 1 else 20.0
    inset = min(inset_cap, 0.05 * (hi - lo))
    return np.linspace(lo + inset, hi - inset, points)


def subcritical_grid(L: int, points: int = 50, inset_cap: float = 1e-3) -> np.ndarray:
    """Alphas in (1/3, alpha_{L+1}): below the trap window for length L."""
    lo = ALPHA_INF
    hi = alpha_threshold(L + 1)
    inset = min(inset_cap, 0.05 * (hi - lo))
    return np.linspace(lo + inset, hi - inset, points)
