"""Survival budgets for QND-instrumented fiber links and fiber-loop memories.

M interior devices split a link of length L into M + 1 equal segments; the
detector at the receiver is not counted. Each segment is short enough for the
quadratic law, so a segment of transit time tau survives with probability
1 - (gamma tau)^2 and each device heralds with efficiency eta.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from .core_model import ExcitationState, HamiltonianMatrix
from .qnd_device import QndDeviceModel, polarization_fidelity
from .zeno_protocol import ZenoConfig, run_ensemble

__all__ = [
    "LinkPlan",
    "MemoryPlan",
    "plan_link",
    "link_survival",
    "scan_device_counts",
    "memory_loop",
    "replay_plan",
    "write_link_csv",
    "write_memory_csv",
]

DIAGONAL = (1 / math.sqrt(2), 1 / math.sqrt(2))


def _phase_fidelity(polarization, phase: float) -> float:
    a, b = (complex(x) for x in polarization)
    return polarization_fidelity((a, b), (a, b * complex(math.cos(phase), math.sin(phase))))


@dataclass(frozen=True)
class LinkPlan:
    L: float
    v_f: float
    M: int
    spacing: float
    tau_seg: float
    survival: float
    fidelity: float
    baseline: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class MemoryPlan:
    loop_time: float
    K: int
    device: QndDeviceModel
    survival: np.ndarray
    fidelity: np.ndarray

    @property
    def trips(self) -> np.ndarray:
        return np.arange(1, self.K + 1)

    def to_dict(self) -> dict:
        return {
            "loop_time": self.loop_time,
            "K": self.K,
            "device": self.device.to_dict(),
            "survival": [float(x) for x in self.survival],
            "fidelity": [float(x) for x in self.fidelity],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def link_survival(L, v_f, gamma, M, eta=1.0, segment_transmission=1.0):
    """Closed-form end-to-end survival for `M` interior devices (vectorized over M)."""
    M = np.asarray(M)
    tau = L / ((M + 1) * v_f)
    return (1.0 - (gamma * tau) ** 2) ** (M + 1) * eta**M * segment_transmission ** (M + 1)


def scan_device_counts(L, v_f, gamma, t_q, eta=1.0, m_max=10_000, segment_transmission=1.0):
    """Admissible device counts in [0, m_max] and their survival.

    A count is admissible when the segment is shorter than v_f * T_q and
    gamma * tau_seg < 1.
    """
    M = np.arange(0, int(m_max) + 1)
    spacing = L / (M + 1)
    ok = (spacing < v_f * t_q) & (gamma * spacing / v_f < 1)
    M = M[ok]
    return M, link_survival(L, v_f, gamma, M, eta, segment_transmission)


def plan_link(
    L: float,
    v_f: float,
    gamma: float,
    t_q: float,
    device: QndDeviceModel | None = None,
    M="optimize",
    *,
    gamma_exp: float | None = None,
    m_max: int = 10_000,
    segment_transmission: float = 1.0,
    polarization=DIAGONAL,
) -> LinkPlan:
    """Budget a link with `M` interior QND devices, or the best `M` if ``"optimize"``.

    The optimizer is an exhaustive scan over admissible M <= `m_max`; ties go
    to the smaller count. `baseline` is exp(-gamma_exp L / v_f) when
    `gamma_exp` is known, else the M = 0 value when that is admissible.
    """
    if not (L > 0 and v_f > 0 and t_q > 0):
        raise ValueError("L, v_f and T_q must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if not 0 < segment_transmission <= 1:
        raise ValueError("segment transmission must lie in (0, 1]")
    device = device or QndDeviceModel()
    eta = device.eta

    if isinstance(M, str):
        if M != "optimize":
            raise ValueError(f"M must be an integer or 'optimize', got {M!r}")
        ms, surv = scan_device_counts(L, v_f, gamma, t_q, eta, m_max, segment_transmission)
        if ms.size == 0:
            raise ValueError(f"no device count up to {m_max} keeps segments below v_f * T_q")
        M = int(ms[int(np.argmax(surv))])
    else:
        if int(M) != M or M < 0:
            raise ValueError("M must be a non-negative integer")
        M = int(M)
    spacing = L / (M + 1)
    if spacing >= v_f * t_q:
        raise ValueError(f"spacing {spacing:.4g} is not below v_f * T_q = {v_f * t_q:.4g}")
    tau_seg = spacing / v_f
    if gamma * tau_seg >= 1:
        raise ValueError("gamma * tau_seg >= 1: the quadratic law does not apply")
    survival = float(link_survival(L, v_f, gamma, M, eta, segment_transmission))

    if gamma_exp is not None:
        baseline = math.exp(-gamma_exp * L / v_f)
    elif L < v_f * t_q and gamma * L / v_f < 1:
        baseline = float(link_survival(L, v_f, gamma, 0, 1.0, segment_transmission))
    else:
        baseline = None
    fidelity = _phase_fidelity(polarization, M * device.delta)
    return LinkPlan(L, v_f, M, spacing, tau_seg, survival, fidelity, baseline)


def memory_loop(
    loop_time: float,
    K: int,
    gamma: float,
    device: QndDeviceModel | None = None,
    polarization=DIAGONAL,
) -> MemoryPlan:
    """Photon stored in a fiber loop with one QND device, measured once per round trip."""
    if not loop_time > 0:
        raise ValueError("loop time must be positive")
    if int(K) != K or K < 1:
        raise ValueError("K must be a positive integer")
    if gamma * loop_time >= 1:
        raise ValueError("gamma * loop_time >= 1: the loop is longer than the quadratic regime")
    device = device or QndDeviceModel()
    k = np.arange(1, int(K) + 1)
    per_trip = (1.0 - (gamma * loop_time) ** 2) * device.eta
    survival = per_trip**k
    fidelity = np.array([_phase_fidelity(polarization, i * device.delta) for i in k])
    return MemoryPlan(loop_time, int(K), device, survival, fidelity)


def replay_plan(plan: LinkPlan, H: HamiltonianMatrix, state0: ExcitationState, eta: float = 1.0) -> float:
    """Cross-check a plan against full dynamics: M + 1 segments through `run_ensemble`.

    The final segment ends at the receiver, so only M heralds carry the
    efficiency factor.
    """
    rec = run_ensemble(state0, H, ZenoConfig(plan.tau_seg, plan.M + 1))
    return rec.final_survival * eta**plan.M


def write_link_csv(plans, path: str | os.PathLike, comments=()) -> None:
    """One row per plan (typically one per device count M)."""
    cols = ["M", "spacing", "tau_seg", "survival", "fidelity", "baseline"]
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for p in plans:
            w.writerow([p.M] + [repr(float(getattr(p, c))) if getattr(p, c) is not None else "" for c in cols[1:]])


def write_memory_csv(plan: MemoryPlan, path: str | os.PathLike, comments=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "t", "survival", "fidelity"])
        for k, s, f in zip(plan.trips, plan.survival, plan.fidelity):
            w.writerow([int(k), repr(float(k * plan.loop_time)), repr(float(s)), repr(float(f))])
