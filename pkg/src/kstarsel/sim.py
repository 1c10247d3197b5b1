"""Monte Carlo engines: ergodic sum rate, fairness over coherence windows, parameter sweeps.

Every trial (or fairness window) draws from its own generator keyed by
``(seed, stream, index)``. Trials are processed in fixed-size chunks and
reduced in index order, so the thread count never changes a result.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import SystemConfig, build_correlation, complex_normal, sample_placement, trial_rng
from .errors import ConfigError
from .rate_approx import approx_rate_lus, approx_rate_rus
from .selection import (DEFAULT_ALPHA_GRID, SusParams, select_lus, select_rus, select_sus,
                        solve_kstar, tune_alpha_sus)
from .zf import COND_LIMIT, zf_sinr_batch

log = logging.getLogger(__name__)

SCHEMES = ("kstar-lus", "kstar-rus", "rus", "lus", "sus")
SIM_STREAM = 0
FAIR_STREAM = 1
TUNE_STREAM = 2
CHUNK = 256
DISCARD_WARN = 1e-4
THREADS_ENV = "KSTARSEL_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimulationReport:
    scheme: str
    fingerprint: str
    K: float
    trials: int
    discarded: int
    mean: float
    stderr: float
    alpha_sus: float | None = None
    curve: dict | None = field(default=None, repr=False)

    @property
    def ci95(self) -> float:
        return 1.96 * self.stderr

    @property
    def warning(self) -> bool:
        return self.discarded > DISCARD_WARN * self.trials


@dataclass(frozen=True)
class FairnessReport:
    """Per-window Jain indices plus window-averaged per-candidate diagnostics.

    ``jfi_windows`` scores ``omega_n * R_n`` where ``omega_n`` is the
    probability that the policy serves candidate n in a slot and ``R_n`` its
    mean rate over the slots in which it was served. ``jfi_realized_windows``
    scores the realized window-average rate instead, which also carries the
    binomial noise of the selection counts.
    """

    scheme: str
    windows: int
    slots_per_window: int
    K: float
    avg_rate: np.ndarray = field(repr=False)
    sel_freq: np.ndarray = field(repr=False)
    jfi_windows: np.ndarray = field(repr=False)
    jfi_realized_windows: np.ndarray = field(repr=False)
    discarded: int = 0

    @property
    def jfi(self) -> float:
        return float(np.mean(self.jfi_windows))

    @property
    def jfi_std(self) -> float:
        return float(np.std(self.jfi_windows, ddof=1)) if self.windows > 1 else 0.0

    @property
    def jfi_realized(self) -> float:
        return float(np.mean(self.jfi_realized_windows))

    @property
    def jfi_longrun(self) -> float:
        return jain_index(self.avg_rate)


def jain_index(x) -> float:
    x = np.asarray(x, dtype=float)
    top = float(np.max(np.abs(x))) if x.size else 0.0
    if top == 0.0:
        return float("nan")
    x = x / top
    return float(np.sum(x)) ** 2 / (x.size * float(np.sum(x * x)))


def selection_probability(scheme: str, K: int | None, placement, freq) -> np.ndarray:
    """Per-slot probability that each candidate is served, given the window's positions.

    Random selection serves every candidate with probability K/N and
    nearest-user selection always serves the same K users. SUS depends on
    the fading, so its observed frequency is used.
    """
    N = len(placement)
    base = scheme.removeprefix("kstar-")
    if base == "rus":
        return np.full(N, K / N)
    if base == "lus":
        omega = np.zeros(N)
        omega[select_lus(K, placement).active_indices] = 1.0
        return omega
    return np.asarray(freq, dtype=float)


def resolve_scheme(cfg: SystemConfig, scheme: str, K: int | None = None,
                   sus_alpha: float | None = None, tune_trials: int = 500,
                   threads: int | None = None, alpha_grid=DEFAULT_ALPHA_GRID):
    """Return ``(scheme, K, alpha)`` with defaults filled in.

    SUS without an explicit threshold is tuned over ``alpha_grid``.
    """
    scheme = scheme.lower()
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    M = cfg.num_antennas
    if scheme in ("rus", "lus"):
        K = M if K is None else int(K)
        cfg.check_active(K, allow_full=True)
        return scheme, K, None
    if scheme.startswith("kstar-"):
        if K is not None:
            raise ConfigError(f"{scheme} determines K itself")
        return scheme, solve_kstar(cfg, scheme).k_star, None
    if sus_alpha is None:
        sus_alpha = tune_alpha_sus(cfg, alpha_grid, tune_trials, threads).alpha_sus
    SusParams(sus_alpha)
    return scheme, None, float(sus_alpha)


class _Drawer:
    """Per-trial draws and the stacked channel assembly for one scheme."""

    def __init__(self, cfg: SystemConfig, scheme: str, K: int | None, alpha: float | None):
        self.cfg = cfg
        self.scheme = scheme
        self.K = K
        self.alpha = alpha
        self.corr = build_correlation(cfg.num_antennas, cfg.corr_coef)
        self.beta_of = lambda d: cfg.pathloss_ref * d ** (-cfg.pathloss_exp)

    def select(self, placement, rng, G_hat_all=None):
        cfg = self.cfg
        base = self.scheme.removeprefix("kstar-")
        if base == "rus":
            return select_rus(self.K, cfg.num_candidates, rng).active_indices
        if base == "lus":
            return select_lus(self.K, placement).active_indices
        return select_sus(G_hat_all, self.alpha, cfg.num_antennas).active_indices

    def mix(self, z1, z2, beta):
        """Estimated and error channels from standard Gaussians; works on stacked arrays."""
        cfg = self.cfg
        z1 = np.sqrt(1.0 - cfg.est_error) * z1
        z2 = np.sqrt(cfg.est_error) * z2
        if not self.corr.is_identity:
            z1 = z1 @ self.corr.sqrt
            z2 = z2 @ self.corr.sqrt
        s = np.sqrt(beta)[..., None]
        return s * z1, s * z2

    def prelog(self, k):
        T = self.cfg.coherence_symbols
        n = self.cfg.num_candidates if self.scheme == "sus" else k
        return max(0.0, 1.0 - n / T)

    def fixed_k_chunk(self, rngs, placements, selections):
        """Sum rates and per-user rates for a chunk of trials with a common K."""
        M = self.cfg.num_antennas
        shape = (len(rngs), self.K, M)
        z1 = np.empty(shape, dtype=complex)
        z2 = np.empty(shape, dtype=complex)
        beta = np.empty(shape[:2])
        for i, (rng, pl, idx) in enumerate(zip(rngs, placements, selections)):
            z1[i] = complex_normal(rng, shape[1:])
            z2[i] = complex_normal(rng, shape[1:])
            beta[i] = self.beta_of(pl.radii[idx])
        G_hat, G_tilde = self.mix(z1, z2, beta)
        sinr, _, cond = zf_sinr_batch(G_hat, G_tilde, self.cfg.p_lin, self.cfg.noise_lin)
        per_user = self.prelog(self.K) * np.log2(1.0 + sinr)
        ok = cond <= COND_LIMIT
        return per_user, ok

    def sus_trial(self, rng, placement):
        cfg = self.cfg
        shape = (cfg.num_candidates, cfg.num_antennas)
        z1 = complex_normal(rng, shape)
        z2 = complex_normal(rng, shape)
        G_hat_all, G_tilde_all = self.mix(z1, z2, self.beta_of(placement.radii))
        idx = self.select(placement, rng, G_hat_all)
        sinr, _, cond = zf_sinr_batch(G_hat_all[idx], G_tilde_all[idx], cfg.p_lin, cfg.noise_lin)
        per_user = self.prelog(len(idx)) * np.log2(1.0 + sinr)
        return idx, per_user, bool(cond <= COND_LIMIT)


def _map_chunks(fn, n: int, threads: int | None):
    chunks = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(chunks) == 1:
        return [fn(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def simulate_sum_rates(cfg: SystemConfig, scheme: str, K: int | None, alpha: float | None,
                       trials: int, threads: int | None = None, stream: int = SIM_STREAM):
    """Per-trial sum rates (NaN for discarded trials) and active-user counts."""
    drawer = _Drawer(cfg, scheme, K, alpha)

    def run(lo, hi):
        rates = np.empty(hi - lo)
        counts = np.empty(hi - lo)
        if scheme == "sus":
            for i, t in enumerate(range(lo, hi)):
                rng = trial_rng(cfg.seed, t, stream)
                pl = sample_placement(cfg, rng)
                idx, per_user, ok = drawer.sus_trial(rng, pl)
                rates[i] = per_user.sum() if ok else np.nan
                counts[i] = len(idx)
            return rates, counts
        rngs, pls, sels = [], [], []
        for t in range(lo, hi):
            rng = trial_rng(cfg.seed, t, stream)
            pl = sample_placement(cfg, rng)
            rngs.append(rng)
            pls.append(pl)
            sels.append(drawer.select(pl, rng))
        per_user, ok = drawer.fixed_k_chunk(rngs, pls, sels)
        rates[:] = np.where(ok, per_user.sum(axis=1), np.nan)
        counts[:] = K
        return rates, counts

    parts = _map_chunks(run, trials, threads)
    rates = np.concatenate([p[0] for p in parts])
    counts = np.concatenate([p[1] for p in parts])
    return rates, counts


def summarize(cfg: SystemConfig, scheme: str, rates, counts, alpha=None) -> SimulationReport:
    valid = rates[~np.isnan(rates)]
    discarded = int(rates.size - valid.size)
    if valid.size == 0:
        mean, stderr = float("nan"), float("nan")
    else:
        mean = float(np.mean(valid))
        stderr = float(np.std(valid, ddof=1) / np.sqrt(valid.size)) if valid.size > 1 else float("nan")
    report = SimulationReport(scheme, cfg.fingerprint(), float(np.mean(counts)), int(rates.size),
                              discarded, mean, stderr, alpha)
    if report.warning:
        log.warning("%s: %d of %d trials discarded as ill-conditioned", scheme, discarded, rates.size)
    return report


def ergodic_rate(cfg: SystemConfig, scheme: str, K: int | None = None, trials: int | None = None,
                 threads: int | None = None, sus_alpha: float | None = None,
                 stream: int = SIM_STREAM, tune_trials: int = 500,
                 alpha_grid=DEFAULT_ALPHA_GRID) -> SimulationReport:
    """Monte Carlo ergodic sum rate of one selection scheme.

    Each trial regenerates user positions and small-scale fading, selects
    users, precodes on the estimated channel and evaluates the sum rate.
    """
    trials = cfg.trials if trials is None else int(trials)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    scheme, K, alpha = resolve_scheme(cfg, scheme, K, sus_alpha, tune_trials, threads, alpha_grid)
    rates, counts = simulate_sum_rates(cfg, scheme, K, alpha, trials, threads, stream)
    return summarize(cfg, scheme, rates, counts, alpha)


def rate_curve(cfg: SystemConfig, scheme: str, ks, trials: int | None = None,
               threads: int | None = None) -> dict:
    """Simulated K-RUS / K-LUS mean sum rate for each K in ``ks``."""
    return {K: ergodic_rate(cfg, scheme, K=K, trials=trials, threads=threads) for K in ks}


def fairness(cfg: SystemConfig, scheme: str, windows: int, slots_per_window: int = 100,
             K: int | None = None, sus_alpha: float | None = None, threads: int | None = None,
             tune_trials: int = 500, alpha_grid=DEFAULT_ALPHA_GRID) -> FairnessReport:
    """Jain fairness over windows with fixed positions and per-slot fading.

    Within a window user positions are frozen; each slot redraws the fading,
    reruns the selection and credits every served candidate its rate
    (pre-log included). The per-window index scores ``omega_n * R_n`` (see
    :class:`FairnessReport`); the realized window-average index is kept too.
    """
    if windows < 1 or slots_per_window < 1:
        raise ConfigError("windows and slots_per_window must be >= 1")
    scheme, K, alpha = resolve_scheme(cfg, scheme, K, sus_alpha, tune_trials, threads, alpha_grid)
    drawer = _Drawer(cfg, scheme, K, alpha)
    N = cfg.num_candidates

    def run(lo, hi):
        acc_rate = np.zeros(N)
        acc_sel = np.zeros(N)
        jfis = np.empty(hi - lo)
        realized = np.empty(hi - lo)
        counts = np.empty(hi - lo)
        discarded = 0
        for i, w in enumerate(range(lo, hi)):
            rng = trial_rng(cfg.seed, w, FAIR_STREAM)
            pl = sample_placement(cfg, rng)
            served = np.zeros(N)
            picked = np.zeros(N)
            n_active = 0
            lost = 0
            if scheme == "sus":
                for _ in range(slots_per_window):
                    idx, per_user, ok = drawer.sus_trial(rng, pl)
                    n_active += len(idx)
                    if ok:
                        np.add.at(served, idx, per_user)
                        np.add.at(picked, idx, 1.0)
                    else:
                        lost += 1
            else:
                sels = [drawer.select(pl, rng) for _ in range(slots_per_window)]
                per_user, ok = drawer.fixed_k_chunk([rng] * slots_per_window,
                                                    [pl] * slots_per_window, sels)
                for s, idx in enumerate(sels):
                    if ok[s]:
                        np.add.at(served, idx, per_user[s])
                        np.add.at(picked, idx, 1.0)
                    else:
                        lost += 1
                n_active = K * slots_per_window
            discarded += lost
            freq = picked / max(slots_per_window - lost, 1)
            omega = selection_probability(scheme, K, pl, freq)
            with np.errstate(invalid="ignore", divide="ignore"):
                rate_when_served = np.where(picked > 0, served / picked, 0.0)
            jfis[i] = jain_index(omega * rate_when_served)
            avg = served / slots_per_window
            realized[i] = jain_index(avg)
            acc_rate += avg
            acc_sel += freq
            counts[i] = n_active / slots_per_window
        return acc_rate, acc_sel, jfis, realized, counts, discarded

    parts = _map_chunks(run, windows, threads)
    avg_rate = sum(p[0] for p in parts) / windows
    sel_freq = sum(p[1] for p in parts) / windows
    jfis = np.concatenate([p[2] for p in parts])
    realized = np.concatenate([p[3] for p in parts])
    counts = np.concatenate([p[4] for p in parts])
    return FairnessReport(scheme, windows, slots_per_window, float(np.mean(counts)), avg_rate,
                          sel_freq, jfis, realized, int(sum(p[5] for p in parts)))


SWEEP_AXES = {
    "power_dbm": "tx_power_dbm",
    "candidates_N": "num_candidates",
    "active_K": None,
    "rho": "est_error",
    "delta": "corr_coef",
}


def approx_for(cfg: SystemConfig, scheme: str, K: int | None) -> float:
    """Deterministic approximation matching a simulated scheme, NaN where none applies."""
    base = scheme.removeprefix("kstar-")
    if K is None or base not in ("rus", "lus") or K >= cfg.num_antennas:
        return float("nan")
    fn = approx_rate_rus if base == "rus" else approx_rate_lus
    return fn(cfg, K).value


def sweep(cfg: SystemConfig, axis: str, values, schemes, trials: int | None = None,
          threads: int | None = None, sus_alpha: float | None = None,
          tune_trials: int = 500, alpha_grid=DEFAULT_ALPHA_GRID) -> list[dict]:
    """One row per (axis value, scheme) with approximation and simulation columns.

    Errors at one point are recorded in the row's ``error`` field and the
    sweep continues.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {tuple(SWEEP_AXES)}")
    rows = []
    for value in values:
        for scheme in schemes:
            row = {"axis": axis, "value": value, "scheme": scheme, "K": float("nan"),
                   "k_star": float("nan"), "approx_rate": float("nan"), "mean_rate": float("nan"),
                   "stderr": float("nan"), "ci95": float("nan"), "discarded": 0,
                   "alpha_sus": float("nan"), "error": ""}
            try:
                K = None
                if axis == "active_K":
                    point = cfg
                    K = int(value)
                    if scheme not in ("rus", "lus"):
                        raise ConfigError("active_K sweeps apply to the rus and lus schemes")
                else:
                    field_name = SWEEP_AXES[axis]
                    cast = int if field_name == "num_candidates" else float
                    point = cfg.replace(**{field_name: cast(value)})
                _, K_used, alpha = resolve_scheme(point, scheme, K, sus_alpha, tune_trials, threads,
                                                  alpha_grid)
                rep = ergodic_rate(point, scheme, K=K, trials=trials, threads=threads,
                                   sus_alpha=alpha)
                if scheme.startswith("kstar-"):
                    row["k_star"] = K_used
                row.update(K=rep.K, approx_rate=approx_for(point, scheme, K_used),
                           mean_rate=rep.mean, stderr=rep.stderr, ci95=rep.ci95,
                           discarded=rep.discarded,
                           alpha_sus=float("nan") if alpha is None else alpha)
            except (ConfigError, ArithmeticError, ValueError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
