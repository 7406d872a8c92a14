"""Time evolution in the single-excitation sector and the photon survival probability."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core_model import ExcitationState, HamiltonianMatrix

__all__ = [
    "NumericalError",
    "Propagator",
    "Trajectory",
    "evolve",
    "survival_probability",
    "compute_gamma",
]


class NumericalError(RuntimeError):
    """Raised when a computation produces non-finite or unphysical numbers."""


class Propagator:
    """Exact propagator exp(-iHt) built from one eigendecomposition of H."""

    def __init__(self, H: HamiltonianMatrix):
        self.H = H
        self.energies, self.eigvecs = np.linalg.eigh(H.matrix)

    def unitary(self, t: float) -> np.ndarray:
        return (self.eigvecs * np.exp(-1j * self.energies * t)) @ self.eigvecs.conj().T

    def apply(self, vec: np.ndarray, times) -> np.ndarray:
        """Evolve `vec` to each of `times`; returns shape (len(times), dim)."""
        coeffs = self.eigvecs.conj().T @ vec
        phases = np.exp(-1j * np.outer(np.atleast_1d(times), self.energies))
        return (phases * coeffs) @ self.eigvecs.T


def _rk4(H: np.ndarray, vec: np.ndarray, times: np.ndarray, substeps: int) -> np.ndarray:
    out = np.empty((times.size, vec.size), dtype=complex)
    out[0] = vec
    psi = vec.copy()
    for n in range(1, times.size):
        dt = (times[n] - times[n - 1]) / substeps
        for _ in range(substeps):
            k1 = -1j * (H @ psi)
            k2 = -1j * (H @ (psi + 0.5 * dt * k1))
            k3 = -1j * (H @ (psi + 0.5 * dt * k2))
            k4 = -1j * (H @ (psi + dt * k3))
            psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[n] = psi
    return out


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution. `amplitudes[n]` is the full state vector at `times[n]`."""

    times: np.ndarray
    amplitudes: np.ndarray
    n_photon: int
    polarization: tuple[complex, complex]

    def __post_init__(self):
        if self.times.shape[0] != self.amplitudes.shape[0]:
            raise ValueError("times and amplitudes differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        for arr in (self.times, self.amplitudes):
            arr.setflags(write=False)

    @cached_property
    def survival(self) -> np.ndarray:
        f = self.amplitudes[:, : self.n_photon]
        s = np.clip(np.sum(np.abs(f) ** 2, axis=1), 0.0, 1.0)
        s.setflags(write=False)
        return s

    @property
    def states(self) -> list[ExcitationState]:
        return [self.state(i) for i in range(len(self))]

    def state(self, i: int) -> ExcitationState:
        return ExcitationState.from_vector(self.amplitudes[i], self.n_photon, self.polarization)

    def __len__(self) -> int:
        return self.times.size


def evolve(
    state: ExcitationState,
    H: HamiltonianMatrix,
    t_final: float,
    n_steps: int,
    method: str = "eig",
    substeps: int = 10,
) -> Trajectory:
    """Propagate `state` under `H`, sampling at t = n * t_final / n_steps, n = 0..n_steps.

    ``method="eig"`` (default) is exact up to round-off. ``method="rk4"`` is a
    fixed-step fourth-order integrator with `substeps` steps per sample, kept
    for step-refinement cross-checks.
    """
    if state.n_photon != H.n_photon or state.n_phonon != H.n_phonon:
        raise ValueError("state and Hamiltonian dimensions differ")
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("n_steps must be a positive integer")
    times = np.linspace(0.0, t_final, int(n_steps) + 1)
    if method == "eig":
        amps = Propagator(H).apply(state.vector, times)
    elif method == "rk4":
        amps = _rk4(H.matrix, state.vector, times, substeps)
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    if not np.all(np.isfinite(amps)):
        raise NumericalError("evolution produced non-finite amplitudes; reduce the step size")
    return Trajectory(times, amps, H.n_photon, state.polarization)


def survival_probability(state: ExcitationState) -> float:
    """Weight left in the photon branch, sum_k |f(k, t)|^2."""
    f = state.photon_amplitudes
    return float(min(1.0, np.vdot(f, f).real))


def compute_gamma(H: HamiltonianMatrix, state: ExcitationState, tol: float = 1e-12) -> float:
    """Short-time decay constant: P_s(t) = 1 - (gamma t)^2 + O(t^3).

    For a state entirely in the photon branch, 1 - P_s = t^2 ||H_bp f||^2 to
    second order, where H_bp is the phonon x photon block of H.
    """
    if state.n_photon != H.n_photon or state.n_phonon != H.n_phonon:
        raise ValueError("state and Hamiltonian dimensions differ")
    if np.vdot(state.phonon_amplitudes, state.phonon_amplitudes).real > tol:
        raise ValueError("gamma is defined only for states with no phonon weight")
    return float(np.linalg.norm(H.coupling_block @ state.photon_amplitudes))
