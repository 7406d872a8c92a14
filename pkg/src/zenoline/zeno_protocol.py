"""Repeated photon-number measurements: evolve for tau, project, repeat.

The ensemble form follows the "photon present" branch and records the
conditional survival q_k of every interval; the Monte-Carlo form samples
measurement outcomes trial by trial from per-trial counter-based streams.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core_model import ExcitationState, HamiltonianMatrix
from .evolution import NumericalError, Propagator
from .qnd_device import QndDeviceModel, apply_qnd

__all__ = [
    "ZenoConfig",
    "MonteCarloTally",
    "ZenoRecord",
    "run_ensemble",
    "run_monte_carlo",
    "run_trial",
    "analytic_survival",
    "effective_decay_rate",
    "trial_generator",
    "write_record_csv",
]

# photon weight below this is a certain loss; renormalizing it only amplifies round-off
LOSS_FLOOR = 1e-24


@dataclass(frozen=True)
class ZenoConfig:
    tau: float
    n: int
    device: QndDeviceModel | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("measurement interval tau must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("number of measurements must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def total_time(self) -> float:
        return self.n * self.tau


@dataclass(frozen=True)
class MonteCarloTally:
    successes: int
    trials: int
    seed: int

    @property
    def fraction(self) -> float:
        return self.successes / self.trials

    def binomial_sigma(self, p: float) -> float:
        return math.sqrt(p * (1 - p) / self.trials)


@dataclass(frozen=True)
class ZenoRecord:
    tau: float
    per_interval: np.ndarray
    cumulative: np.ndarray
    gamma_eff: float = float("nan")
    final_state: ExcitationState | None = None
    trials: MonteCarloTally | None = None

    @property
    def n(self) -> int:
        return self.per_interval.size

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n + 1)

    @property
    def final_survival(self) -> float:
        return float(self.cumulative[-1])


def run_ensemble(state0: ExcitationState, H: HamiltonianMatrix, cfg: ZenoConfig) -> ZenoRecord:
    """Follow the "present" branch through `cfg.n` measurements spaced `cfg.tau` apart.

    With a device attached, q_k is the probability of a "present" herald
    (eta times the photon weight) and each herald applies the device's
    polarization phase.
    """
    if state0.n_photon != H.n_photon or state0.n_phonon != H.n_phonon:
        raise ValueError("state and Hamiltonian dimensions differ")
    if np.vdot(state0.phonon_amplitudes, state0.phonon_amplitudes).real > 1e-12:
        raise ValueError("initial state must lie in the photon branch")
    device = cfg.device
    U = Propagator(H).unitary(cfg.tau)
    n_p = H.n_photon
    q = np.zeros(cfg.n)
    lost = False
    state = state0
    vec = state0.vector
    for k in range(cfg.n):
        vec = U @ vec
        f = vec[:n_p]
        p_s = float(np.vdot(f, f).real)
        if not np.isfinite(p_s):
            raise NumericalError("non-finite survival probability")
        if p_s < LOSS_FLOOR:
            lost = True
            break
        if device is None:
            q[k] = min(p_s, 1.0)
            # projection onto the photon branch, bath back to vacuum
            vec = np.concatenate([f / math.sqrt(p_s), np.zeros(H.n_phonon, dtype=complex)])
        else:
            evolved = ExcitationState.from_vector(vec, n_p, state.polarization)
            _, post, prob = apply_qnd(evolved, device, branch="present")
            q[k] = prob
            if post is None or prob == 0.0:
                lost = True
                break
            state = post
            vec = post.vector
    if lost:
        warnings.warn("photon certainly lost; remaining intervals recorded as zero survival")
    cumulative = np.cumprod(q)
    if device is None:
        final = ExcitationState.from_vector(vec, n_p, state0.polarization) if cumulative[-1] > 0 else None
    else:
        final = state if cumulative[-1] > 0 else None
    rec = ZenoRecord(cfg.tau, q, cumulative, final_state=final)
    if rec.n >= 2 and cumulative[-1] > 0:
        rec = ZenoRecord(cfg.tau, q, cumulative, effective_decay_rate(rec, cfg.tau), final)
    return rec


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent Philox stream for one trial; depends only on (seed, trial)."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def _count_survivors(q: np.ndarray, seed: int, start: int, stop: int) -> int:
    survived = 0
    for t in range(start, stop):
        rng = trial_generator(seed, t)
        # a trial ends at its first "not present" outcome
        u = rng.random(q.size)
        if np.all(u < q):
            survived += 1
    return survived


def run_monte_carlo(
    state0: ExcitationState,
    H: HamiltonianMatrix,
    cfg: ZenoConfig,
    trials: int,
    seed: int,
    workers: int = 1,
) -> ZenoRecord:
    """Sample `trials` independent measurement sequences.

    The state after a "present" outcome is the same in every trial, so trials
    draw against the ensemble's q_k. Each trial owns its stream, so the tally
    does not depend on `workers`.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    ens = run_ensemble(state0, H, cfg)
    workers = max(1, int(workers))
    bounds = np.linspace(0, trials, min(workers, trials) + 1).astype(int)
    chunks = list(zip(bounds[:-1], bounds[1:]))
    if workers == 1:
        survived = sum(_count_survivors(ens.per_interval, seed, a, b) for a, b in chunks)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            survived = sum(pool.map(lambda ab: _count_survivors(ens.per_interval, seed, *ab), chunks))
    tally = MonteCarloTally(int(survived), int(trials), int(seed))
    return ZenoRecord(ens.tau, ens.per_interval, ens.cumulative, ens.gamma_eff, ens.final_state, tally)


def run_trial(state0: ExcitationState, H: HamiltonianMatrix, cfg: ZenoConfig, rng: np.random.Generator):
    """One full stochastic trajectory through `apply_qnd`; returns (outcomes, final_state).

    Slower than `run_monte_carlo` but exercises the device's sampled branches
    directly.
    """
    device = cfg.device or QndDeviceModel()
    U = Propagator(H).unitary(cfg.tau)
    state = state0
    outcomes = []
    for _ in range(cfg.n):
        state = ExcitationState.from_vector(U @ state.vector, H.n_photon, state.polarization)
        outcome, post, _ = apply_qnd(state, device, rng=rng)
        outcomes.append(outcome)
        if outcome != "present":
            return outcomes, post
        state = post
    return outcomes, state


def analytic_survival(gamma: float, tau: float, T: float) -> tuple[float, float]:
    """(exact product (1 - (gamma tau)^2)^(T/tau), large-N limit exp(-gamma^2 tau T))."""
    if not (tau > 0 and T > 0):
        raise ValueError("tau and T must be positive")
    if gamma * tau >= 1:
        raise ValueError("gamma * tau >= 1: the quadratic short-time law does not apply")
    ratio = T / tau
    n = round(ratio)
    if n < 1 or abs(n - ratio) > 1e-9 * max(1.0, ratio):
        n = max(1, n)
        warnings.warn(f"T/tau = {ratio:.6g} is not an integer; using N = {n}")
    exact = (1.0 - (gamma * tau) ** 2) ** n
    approx = math.exp(-(gamma**2) * tau * T)
    return exact, approx


def effective_decay_rate(record: ZenoRecord, tau: float | None = None) -> float:
    """Least-squares slope of -ln(cumulative_k) against k * tau."""
    tau = record.tau if tau is None else tau
    cum = np.asarray(record.cumulative)
    if cum.size < 2:
        raise ValueError("need at least two measurements to fit a rate")
    ok = cum > 0
    if ok.sum() < 2:
        raise ValueError("record has fewer than two non-zero survival values")
    t = tau * np.arange(1, cum.size + 1)[ok]
    y = -np.log(cum[ok])
    slope, _ = np.polyfit(t, y, 1)
    return float(slope)


def write_record_csv(record: ZenoRecord, path: str | os.PathLike, comments=()) -> None:
    """CSV with columns k, t, q_k, cumulative; `comments` become leading '#' lines."""
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "q_k", "cumulative"])
        for k, (t, q, c) in enumerate(zip(record.times, record.per_interval, record.cumulative), start=1):
            w.writerow([k, repr(float(t)), repr(float(q)), repr(float(c))])
