"""User-selection schemes and the offline search for the optimal number of active users."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .core import SystemConfig, UserPlacement
from .rate_approx import approx_rate_lus, approx_rate_rus

DEFAULT_ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))


@dataclass(frozen=True)
class KStarResult:
    scheme: str
    k_star: int
    curve: dict = field(repr=False)
    fingerprint: str = ""

    @property
    def best_rate(self) -> float:
        return self.curve[self.k_star]


@dataclass(frozen=True)
class SelectionDecision:
    scheme: str
    active_indices: np.ndarray
    K: int
    pilot_prelog: float | None = None


@dataclass(frozen=True)
class SusParams:
    alpha_sus: float
    grid: tuple = DEFAULT_ALPHA_GRID

    def __post_init__(self):
        if not 0.0 < self.alpha_sus <= 1.0:
            raise ValueError("alpha_sus must lie in (0, 1]")
        g = np.asarray(self.grid, dtype=float)
        if g.size and (np.any(g <= 0) or np.any(g > 1) or np.any(np.diff(g) <= 0)):
            raise ValueError("alpha grid must be strictly increasing within (0, 1]")


def _search_key(cfg: SystemConfig, scheme: str) -> SystemConfig:
    # Seed, trial count and (for RUS) N do not enter the approximation.
    key = cfg.replace(seed=0, trials=1)
    if scheme == "RUS":
        key = key.replace(num_candidates=key.num_antennas)
    return key


def solve_kstar(cfg: SystemConfig, scheme: str) -> KStarResult:
    """Exhaustive search of the approximate sum rate over K; ties go to the smaller K."""
    scheme = scheme.upper().removeprefix("KSTAR-")
    if scheme not in ("RUS", "LUS"):
        raise ValueError(f"K* is defined for RUS and LUS, not {scheme!r}")
    result = _solve_kstar_cached(_search_key(cfg, scheme), scheme)
    return KStarResult(result.scheme, result.k_star, dict(result.curve), cfg.fingerprint())


@functools.lru_cache(maxsize=256)
def _solve_kstar_cached(cfg: SystemConfig, scheme: str) -> KStarResult:
    k_max = min(cfg.num_antennas - 1, cfg.coherence_symbols - 1)
    if scheme == "LUS":
        k_max = min(k_max, cfg.num_candidates)
    if k_max < 1:
        raise ValueError("no admissible K (need M >= 2 and T >= 2)")
    rate = approx_rate_rus if scheme == "RUS" else approx_rate_lus
    curve = {K: rate(cfg, K).value for K in range(1, k_max + 1)}
    best = max(curve, key=lambda K: (curve[K], -K))
    return KStarResult(scheme, best, curve)


def select_rus(K: int, N: int, rng: np.random.Generator, T: int | None = None) -> SelectionDecision:
    """Uniform K-subset of range(N) by a partial Fisher-Yates shuffle."""
    if not 1 <= K <= N:
        raise ValueError(f"cannot select {K} of {N} users")
    u = rng.random(K)
    perm = list(range(N))
    for i in range(K):
        j = i + int(u[i] * (N - i))
        perm[i], perm[j] = perm[j], perm[i]
    prelog = None if T is None else max(0.0, 1.0 - K / T)
    return SelectionDecision("RUS", np.array(perm[:K]), K, prelog)


def select_lus(K: int, placement: UserPlacement, T: int | None = None) -> SelectionDecision:
    """The K candidates closest to the base station; equal radii keep index order."""
    N = len(placement)
    if not 1 <= K <= N:
        raise ValueError(f"cannot select {K} of {N} users")
    idx = np.argsort(placement.radii, kind="stable")[:K]
    prelog = None if T is None else max(0.0, 1.0 - K / T)
    return SelectionDecision("LUS", idx, K, prelog)


def select_sus(G_hat_all: np.ndarray, params: SusParams | float, max_users: int | None = None,
               T: int | None = None) -> SelectionDecision:
    """Greedy semi-orthogonal user selection on the estimated channels of all candidates.

    At each step the candidate with the largest component orthogonal to the
    already chosen users is added, then the pool keeps only users whose
    normalized correlation with that component is below ``alpha_sus``.
    """
    alpha = params.alpha_sus if isinstance(params, SusParams) else float(params)
    H = np.asarray(G_hat_all)
    N, M = H.shape
    if N < 1:
        raise ValueError("need at least one candidate")
    max_users = M if max_users is None else min(max_users, M)
    h_norm = np.linalg.norm(H, axis=1)
    # Residuals this small are rounding noise of a direction already spanned.
    floor = 1e-10 * h_norm
    g = H.copy()
    pool = np.ones(N, dtype=bool)
    chosen = []
    while pool.any() and len(chosen) < max_users:
        g_norm = np.linalg.norm(g, axis=1)
        pool &= g_norm > floor
        if not pool.any():
            break
        g_norm = np.where(pool, g_norm, -1.0)
        n = int(np.argmax(g_norm))
        q_norm = g_norm[n]
        if q_norm <= 0.0:
            break
        q = g[n].copy()
        chosen.append(n)
        pool[n] = False
        inner = H @ q.conj()
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.abs(inner) / (h_norm * q_norm)
        pool &= corr < alpha
        g -= np.outer(inner / q_norm**2, q)
    prelog = None if T is None else max(0.0, 1.0 - N / T)
    return SelectionDecision("SUS", np.array(chosen, dtype=int), len(chosen), prelog)


def tune_alpha_sus(cfg: SystemConfig, grid=DEFAULT_ALPHA_GRID, n_trials: int = 500,
                   threads: int | None = None) -> SusParams:
    """Pick the semi-orthogonality threshold with the best simulated sum rate.

    Tuning trials use their own random stream, so the chosen value is not
    fitted to the trials later used for reporting.
    """
    from .sim import TUNE_STREAM, ergodic_rate

    grid = tuple(float(a) for a in grid)
    if not grid:
        raise ValueError("empty alpha grid")
    if len(grid) == 1:
        return SusParams(grid[0], grid)
    rates = [ergodic_rate(cfg, "sus", trials=n_trials, sus_alpha=a, threads=threads,
                          stream=TUNE_STREAM).mean for a in grid]
    best = max(range(len(grid)), key=lambda i: (rates[i], -i))
    return SusParams(grid[best], grid)
