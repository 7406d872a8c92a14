"""Short-time quadratic and long-time exponential decay regimes, and their crossover.

Also emulates the fiber-length sweep that locates the crossover from
transmission data: start at lengths where the loss is exponential, shorten
the fiber, and flag the first length where the exponential stops fitting.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core_model import ExcitationState, HamiltonianMatrix
from .evolution import Propagator, Trajectory

__all__ = [
    "DecayFit",
    "TqTable",
    "fit_decay",
    "detect_departure",
    "tq_experiment",
    "max_device_spacing",
    "golden_rule_rate",
    "read_transmission_csv",
    "write_tq_csv",
]

QUAD_THRESHOLD = 0.99
MIN_WINDOW = 10


@dataclass(frozen=True)
class DecayFit:
    gamma_fit: float
    gamma_exp: float
    prefactor: float
    t_q: float | None
    quadratic_found: bool
    exponential_found: bool
    residuals: dict = field(default_factory=dict)

    def quadratic(self, t) -> np.ndarray:
        return 1.0 - (self.gamma_fit * np.asarray(t, dtype=float)) ** 2

    def exponential(self, t) -> np.ndarray:
        return self.prefactor * np.exp(-self.gamma_exp * np.asarray(t, dtype=float))

    def predict(self, t) -> np.ndarray:
        """Quadratic law before the crossover, exponential after it."""
        t = np.asarray(t, dtype=float)
        if self.t_q is not None:
            return np.where(t < self.t_q, self.quadratic(t), self.exponential(t))
        if self.exponential_found:
            return self.exponential(t)
        return self.quadratic(t)


def golden_rule_rate(g: float, density: float) -> float:
    """Weak-coupling decay rate 2 pi g^2 rho into a flat continuum."""
    return 2 * math.pi * g**2 * density


def _loglog_slope(t: np.ndarray, y: np.ndarray) -> float:
    ok = (t > 0) & (y > 1e-14)
    if ok.sum() < 3:
        return float("nan")
    return float(np.polyfit(np.log(t[ok]), np.log(y[ok]), 1)[0])


def fit_decay(
    traj,
    quad_window: float = 0.1,
    exp_window: float = 0.5,
    tolerance: float = 0.01,
    recurrence_time: float | None = None,
) -> DecayFit:
    """Fit both decay regimes of a survival curve.

    Args:
        traj: a `Trajectory` or a ``(times, survival)`` pair.
        quad_window: fraction of the earliest samples searched for the
            quadratic regime; only samples with P_s > 0.99 are used.
        exp_window: fraction of the latest samples used for the exponential.
        tolerance: relative agreement needed for the exponential fit to count
            as found, and for the two regimes to count as distinguishable.
        recurrence_time: warn if the data extend past this time.

    The quadratic regime is accepted when 1 - P_s grows as t^p with p > 1.5 on
    a log-log fit. T_q is the first sample after the quadratic window from
    which the exponential fit describes the data at least as well as the
    quadratic law at every later sample.
    """
    if isinstance(traj, Trajectory):
        t, p = traj.times, traj.survival
    else:
        t, p = (np.asarray(a, dtype=float) for a in traj)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("times and survival must be 1-D arrays of equal length")
    if quad_window + exp_window > 1:
        raise ValueError("quadratic and exponential windows overlap")
    n = t.size
    n_quad = int(math.floor(quad_window * n))
    n_exp = int(math.ceil(exp_window * n))
    if n_quad < MIN_WINDOW or n_exp < MIN_WINDOW:
        raise ValueError(f"need at least {MIN_WINDOW} samples in each fit window")
    if recurrence_time is not None and t[-1] > recurrence_time:
        warnings.warn("fit extends past the discretization recurrence time")

    # quadratic regime
    qmask = np.zeros(n, dtype=bool)
    qmask[:n_quad] = p[:n_quad] > QUAD_THRESHOLD
    tq_, yq = t[qmask], 1.0 - p[qmask]
    denom = float(np.sum(tq_**4))
    gamma_fit = math.sqrt(max(0.0, float(np.sum(tq_**2 * yq)) / denom)) if denom > 0 else 0.0
    slope = _loglog_slope(tq_, yq)
    quad_found = bool(np.isfinite(slope) and slope > 1.5 and gamma_fit > 0)
    quad_rms = float(np.sqrt(np.mean((yq - (gamma_fit * tq_) ** 2) ** 2))) if tq_.size else float("nan")

    # exponential regime
    te, pe = t[-n_exp:], p[-n_exp:]
    if np.any(pe <= 0):
        raise ValueError("survival reaches zero inside the exponential window")
    b, a = np.polyfit(te, np.log(pe), 1)
    gamma_exp, prefactor = float(-b), float(math.exp(a))
    exp_rms = float(np.sqrt(np.mean((np.log(pe) - (a + b * te)) ** 2)))
    exp_found = gamma_exp > 0 and exp_rms < tolerance
    gamma_exp = max(gamma_exp, 0.0)

    fit = DecayFit(gamma_fit, gamma_exp, prefactor, None, quad_found, exp_found,
                   {"quadratic": quad_rms, "exponential": exp_rms, "loglog_slope": slope})
    if not (quad_found and exp_found):
        return fit

    start = int(np.flatnonzero(qmask)[-1]) if qmask.any() else 0
    ts, ps = t[start:], p[start:]
    quad_pred, exp_pred = fit.quadratic(ts), fit.exponential(ts)
    if np.max(np.abs(quad_pred - exp_pred) / exp_pred) <= tolerance:
        # the two laws never separate on this data
        return fit
    with np.errstate(divide="ignore", invalid="ignore"):
        r_quad = np.abs(ps - quad_pred) / ps
        r_exp = np.abs(ps - exp_pred) / ps
    # differences at round-off level count as ties, so a sample where both laws agree belongs to the tail
    better = r_exp <= r_quad + 64 * np.finfo(float).eps
    # suffix-all: exponential at least as good from index i to the end
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(better)))
    if not suffix_ok.any():
        return fit
    t_q = float(ts[int(np.argmax(suffix_ok))])
    if t_q <= 0:
        return fit
    return DecayFit(gamma_fit, gamma_exp, prefactor, t_q, True, True, fit.residuals)


@dataclass(frozen=True)
class TqTable:
    lengths: np.ndarray
    survival: np.ndarray
    departure: np.ndarray
    t_q_estimate: float | None
    flagged_length: float | None
    gamma_exp: float
    prefactor: float

    def rows(self):
        for L, p, d in zip(self.lengths, self.survival, self.departure):
            est = self.t_q_estimate if (self.flagged_length is not None and L == self.flagged_length) else None
            yield float(L), float(p), bool(d), est


def detect_departure(
    lengths,
    transmission,
    v_f: float,
    tolerance: float = 0.01,
    n_baseline: int | None = None,
) -> TqTable:
    """Flag where short-fiber transmission departs from the long-fiber exponential.

    `lengths` must be sorted longest first. An exponential in transit time
    L / v_f is fitted to the `n_baseline` longest points (default: the longest
    half, at least 3). Scanning toward shorter fibers, the first point whose
    relative deviation from that exponential exceeds `tolerance` is flagged,
    and its transit time is the T_q estimate.
    """
    L = np.asarray(lengths, dtype=float)
    P = np.asarray(transmission, dtype=float)
    if L.shape != P.shape or L.ndim != 1:
        raise ValueError("lengths and transmission must be 1-D arrays of equal length")
    if L.size < 4:
        raise ValueError("need at least 4 lengths to establish the exponential baseline")
    if np.any(np.diff(L) >= 0):
        raise ValueError("lengths must be sorted in strictly descending order")
    if not v_f > 0:
        raise ValueError("pulse velocity must be positive")
    if np.any(P <= 0):
        raise ValueError("transmission must be positive")
    nb = n_baseline if n_baseline is not None else max(3, L.size // 2)
    if not 2 <= nb < L.size:
        raise ValueError("baseline must leave at least one shorter length to test")
    t = L / v_f
    b, a = np.polyfit(t[:nb], np.log(P[:nb]), 1)
    pred = np.exp(a + b * t)
    departure = np.abs(P - pred) / pred > tolerance
    flagged = np.flatnonzero(departure)
    t_q = float(t[flagged[0]]) if flagged.size else None
    flagged_length = float(L[flagged[0]]) if flagged.size else None
    return TqTable(L, P, departure, t_q, flagged_length, float(-b), float(math.exp(a)))


def tq_experiment(
    H: HamiltonianMatrix,
    state0: ExcitationState,
    lengths,
    v_f: float,
    tolerance: float = 0.01,
    n_baseline: int | None = None,
) -> TqTable:
    """Simulate single-photon transmission through each fiber length and run the detector."""
    L = np.asarray(lengths, dtype=float)
    if L.size < 4:
        raise ValueError("need at least 4 lengths to establish the exponential baseline")
    if np.any(np.diff(L) >= 0):
        raise ValueError("lengths must be sorted in strictly descending order")
    if not v_f > 0:
        raise ValueError("pulse velocity must be positive")
    amps = Propagator(H).apply(state0.vector, L / v_f)
    surv = np.sum(np.abs(amps[:, : H.n_photon]) ** 2, axis=1)
    return detect_departure(L, surv, v_f, tolerance, n_baseline)


def max_device_spacing(t_q: float, v_f: float) -> float:
    """Upper bound v_f * T_q on the distance between neighbouring QND devices."""
    if not (t_q > 0 and v_f > 0):
        raise ValueError("T_q and v_f must be positive")
    return v_f * t_q


def read_transmission_csv(path: str | os.PathLike):
    """Read ``length,transmission`` rows ('#' comment lines allowed)."""
    lengths, trans = [], []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.lstrip().startswith("#"))
        header = next(rows)
        if [h.strip() for h in header] != ["length", "transmission"]:
            raise ValueError(f"expected header 'length,transmission', got {header!r}")
        for row in rows:
            if not row:
                continue
            lengths.append(float(row[0]))
            trans.append(float(row[1]))
    return np.array(lengths), np.array(trans)


def write_tq_csv(table: TqTable, path: str | os.PathLike, comments=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["length", "P_s", "departure", "T_q_estimate"])
        for L, p, d, est in table.rows():
            w.writerow([repr(L), repr(p), int(d), "" if est is None else repr(est)])
