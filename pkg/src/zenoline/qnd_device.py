"""Cross-Kerr QND photon-number detector with homodyne readout.

The device is described only by effective parameters: the Kerr phase
theta = chi * t written onto a coherent probe, the probe amplitude, and three
imperfections (heralding efficiency eta, destruction probability eps, and a
polarization phase asymmetry delta).

Quadrature convention: q_phi = (a e^{-i phi} + a^dag e^{i phi}) / sqrt(2), so a
coherent state |beta> gives a Gaussian with mean sqrt(2) Re(beta e^{-i phi})
and variance 1/2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .core_model import ExcitationState

__all__ = [
    "QndDeviceModel",
    "DiscriminationReport",
    "probe_phase",
    "homodyne_discriminate",
    "optimal_quadrature_angle",
    "outcome_probabilities",
    "apply_qnd",
    "classical_readout",
    "polarization_fidelity",
    "cnot_qnd_success",
    "OUTCOMES",
]

OUTCOMES = ("present", "destroyed", "absent")
QUADRATURE_VARIANCE = 0.5


def _wrap_phase(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    w = math.remainder(theta, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class QndDeviceModel:
    theta: float = math.pi
    alpha_p: complex = 1.0
    eta: float = 1.0
    eps: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", _wrap_phase(float(self.theta)))
        object.__setattr__(self, "alpha_p", complex(self.alpha_p))
        for name in ("eta", "eps"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.eta + self.eps > 1.0 + 1e-15:
            raise ValueError("eta + eps exceeds 1")
        if not (np.isfinite(self.alpha_p) and np.isfinite(self.delta)):
            raise ValueError("device parameters must be finite")

    @property
    def is_ideal(self) -> bool:
        return self.eta == 1.0 and self.eps == 0.0 and self.delta == 0.0

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "alpha_p": [self.alpha_p.real, self.alpha_p.imag],
            "eta": self.eta,
            "eps": self.eps,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QndDeviceModel":
        unknown = set(d) - {"theta", "alpha_p", "eta", "eps", "delta"}
        if unknown:
            raise ValueError(f"unknown device keys: {sorted(unknown)}")
        kw = dict(d)
        if "alpha_p" in kw:
            re, im = kw["alpha_p"]
            kw["alpha_p"] = complex(re, im)
        return cls(**kw)


IDEAL_DEVICE = QndDeviceModel()


@dataclass(frozen=True)
class DiscriminationReport:
    false_negative: float
    false_positive: float
    threshold: float
    phi: float = 0.0
    separation: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "false_negative": self.false_negative,
                "false_positive": self.false_positive,
                "threshold": self.threshold,
            }
        )


def probe_phase(n_s: int, theta: float) -> complex:
    """Factor e^{i n_s theta} picked up by the probe, |alpha_p> -> |alpha_p e^{i n_s theta}>."""
    if n_s not in (0, 1):
        raise ValueError("only photon numbers 0 and 1 are supported")
    if n_s == 0:
        return 1 + 0j
    return complex(math.cos(theta), math.sin(theta))


def optimal_quadrature_angle(alpha_p: complex, theta: float) -> float:
    """Angle maximizing |mean(q | n=1) - mean(q | n=0)|, i.e. arg(alpha_p (e^{i theta} - 1))."""
    d = complex(alpha_p) * (probe_phase(1, theta) - 1)
    if d == 0:
        return 0.0
    return math.atan2(d.imag, d.real)


def quadrature_mean(beta: complex, phi: float) -> float:
    return math.sqrt(2) * (complex(beta) * complex(math.cos(phi), -math.sin(phi))).real


def homodyne_discriminate(alpha_p: complex, theta: float, phi="optimal") -> DiscriminationReport:
    """Decide n_s in {0, 1} from one quadrature sample of the probe.

    The threshold sits midway between the two conditional means, so both error
    probabilities equal the Gaussian tail beyond half the separation.
    ``phi="optimal"`` picks the angle of maximum separation; ``phi=pi/2`` is the
    momentum quadrature.
    """
    alpha_p = complex(alpha_p)
    if not np.isfinite(alpha_p):
        raise ValueError("probe amplitude must be finite")
    if isinstance(phi, str):
        if phi != "optimal":
            raise ValueError(f"unknown quadrature angle {phi!r}")
        phi = optimal_quadrature_angle(alpha_p, theta)
    phi = float(phi)
    mu0 = quadrature_mean(alpha_p, phi)
    mu1 = quadrature_mean(alpha_p * probe_phase(1, theta), phi)
    sep = abs(mu1 - mu0)
    sigma = math.sqrt(QUADRATURE_VARIANCE)
    err = 0.5 * float(erfc(sep / 2 / (sigma * math.sqrt(2))))
    return DiscriminationReport(err, err, 0.5 * (mu0 + mu1), phi, sep)


def outcome_probabilities(state: ExcitationState, device: QndDeviceModel) -> dict[str, float]:
    p_s = float(np.vdot(state.photon_amplitudes, state.photon_amplitudes).real)
    present = device.eta * p_s
    destroyed = device.eps * p_s
    return {"present": present, "destroyed": destroyed, "absent": 1.0 - present - destroyed}


def _post_state(state: ExcitationState, device: QndDeviceModel, outcome: str):
    if outcome == "destroyed":
        return None
    if outcome == "present":
        f = state.photon_amplitudes
        nf = np.linalg.norm(f)
        if nf == 0:
            return None
        a, b = state.polarization
        if device.delta != 0.0:
            b = b * complex(math.cos(device.delta), math.sin(device.delta))
        return ExcitationState(f / nf, np.zeros_like(state.phonon_amplitudes), (a, b))
    # absent: the photon is treated as lost; keep the absorbed branch if any
    c = state.phonon_amplitudes
    nc = np.linalg.norm(c)
    if nc == 0:
        return None
    return ExcitationState(np.zeros_like(state.photon_amplitudes), c / nc, state.polarization)


def apply_qnd(
    state: ExcitationState,
    device: QndDeviceModel,
    rng: np.random.Generator | None = None,
    branch: str | None = None,
):
    """One photon-number measurement. Returns (outcome, post_state, probability).

    Exactly one of `rng` (sample the outcome) or `branch` (force it) is used.
    "present" projects onto the photon branch, renormalizes and adds the phase
    e^{i delta} to the V amplitude. "destroyed" and a photon-free "absent"
    return ``None`` as post-state.
    """
    probs = outcome_probabilities(state, device)
    if branch is None:
        if rng is None:
            raise ValueError("apply_qnd needs either an rng or a branch")
        u = rng.random()
        if u < probs["present"]:
            branch = "present"
        elif u < probs["present"] + probs["destroyed"]:
            branch = "destroyed"
        else:
            branch = "absent"
    elif branch not in OUTCOMES:
        raise ValueError(f"unknown branch {branch!r}")
    return branch, _post_state(state, device, branch), probs[branch]


def classical_readout(outcome: str, report: DiscriminationReport, rng: np.random.Generator) -> str:
    """Flip the recorded present/absent bit with the homodyne error rates."""
    u = rng.random()
    if outcome == "present":
        return "absent" if u < report.false_negative else "present"
    return "present" if u < report.false_positive else "absent"


def polarization_fidelity(p_in, p_out) -> float:
    a = np.asarray(p_in, dtype=complex)
    b = np.asarray(p_out, dtype=complex)
    return float(abs(np.vdot(a, b)) ** 2)


def cnot_qnd_success(m: int, model: str = "klm", p1: float | None = None) -> float:
    """Success probability of an ancilla-assisted CNOT QND with `m` ancillas.

    ``klm`` uses m^2/(m+1)^2; ``geometric`` uses 1 - (1 - p1)^m for independent
    attempts of success probability p1.
    """
    if int(m) != m or m < 1:
        raise ValueError("ancilla count must be a positive integer")
    if model == "klm":
        return m**2 / (m + 1) ** 2
    if model == "geometric":
        if p1 is None or not 0.0 < p1 <= 1.0:
            raise ValueError("geometric model needs p1 in (0, 1]")
        return 1.0 - (1.0 - p1) ** m
    raise ValueError(f"unknown success model {model!r}")
