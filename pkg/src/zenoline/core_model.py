"""Single-excitation photon/phonon model: mode grids, couplings, Hamiltonian, pulses.

Units are hbar = 1; frequencies, couplings and rates share one dimensionless
scale. The basis of every vector and matrix is ordered photon modes first,
then phonon modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ModeGrid",
    "CouplingSpectrum",
    "HamiltonianMatrix",
    "ExcitationState",
    "build_mode_grid",
    "build_coupling",
    "assemble_hamiltonian",
    "initial_pulse",
    "normalize_polarization",
]

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12
COUPLING_KINDS = ("flat", "ohmic", "lorentzian", "custom")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModeGrid:
    frequencies: np.ndarray
    label: str

    def __post_init__(self):
        freqs = _frozen(np.atleast_1d(self.frequencies))
        if freqs.ndim != 1 or freqs.size < 1:
            raise ValueError("a mode grid needs at least one frequency")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("mode frequencies must be strictly increasing")
        if self.label not in ("photon", "phonon"):
            raise ValueError(f"unknown grid label {self.label!r}")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def count(self) -> int:
        return int(self.frequencies.size)

    @property
    def spacing(self) -> float:
        if self.count == 1:
            return 0.0
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def bandwidth(self) -> float:
        return float(self.frequencies[-1] - self.frequencies[0])

    @property
    def density(self) -> float:
        """Modes per unit frequency, (count - 1) / bandwidth."""
        if self.count == 1:
            return float("inf")
        return (self.count - 1) / self.bandwidth

    @property
    def recurrence_time(self) -> float:
        """Time 2*pi/spacing after which a discrete bath revives the photon."""
        if self.count == 1:
            return float("inf")
        return 2 * np.pi / self.spacing


@dataclass(frozen=True)
class CouplingSpectrum:
    """Couplings g[k, i] between photon mode k and phonon mode i."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in COUPLING_KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        vals = _frozen(np.atleast_2d(self.values), dtype=complex)
        if vals.ndim != 2:
            raise ValueError("coupling values must be a 2-D matrix")
        if not np.all(np.isfinite(vals)):
            raise ValueError("coupling values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class HamiltonianMatrix:
    matrix: np.ndarray
    n_photon: int
    n_phonon: int

    def __post_init__(self):
        m = _frozen(self.matrix, dtype=complex)
        dim = self.n_photon + self.n_phonon
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match {dim} modes")
        if np.max(np.abs(m - m.conj().T), initial=0.0) >= HERMITIAN_TOL:
            raise ValueError("Hamiltonian is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.n_photon + self.n_phonon

    @property
    def coupling_block(self) -> np.ndarray:
        """Phonon x photon block, the part of H that moves weight out of the photon."""
        return self.matrix[self.n_photon:, : self.n_photon]


def normalize_polarization(alpha: complex, beta: complex, tol: float = 1e-6) -> tuple[complex, complex]:
    """Return (alpha, beta) scaled to unit norm; reject pairs further than `tol` from it."""
    alpha, beta = complex(alpha), complex(beta)
    norm2 = abs(alpha) ** 2 + abs(beta) ** 2
    if norm2 == 0:
        raise ValueError("polarization has zero norm")
    if abs(norm2 - 1) > tol:
        raise ValueError(f"polarization norm^2 {norm2:.3g} is not 1")
    if norm2 != 1:
        s = np.sqrt(norm2)
        alpha, beta = alpha / s, beta / s
    return alpha, beta


@dataclass(frozen=True)
class ExcitationState:
    """One excitation shared between photon modes and phonon modes.

    The polarization pair multiplies every photon amplitude and is stored
    once; nothing in the dynamics touches it.
    """

    photon_amplitudes: np.ndarray
    phonon_amplitudes: np.ndarray
    polarization: tuple[complex, complex] = (1 + 0j, 0j)

    def __post_init__(self):
        f = _frozen(np.atleast_1d(self.photon_amplitudes), dtype=complex)
        c = _frozen(np.atleast_1d(self.phonon_amplitudes), dtype=complex)
        object.__setattr__(self, "photon_amplitudes", f)
        object.__setattr__(self, "phonon_amplitudes", c)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(c))):
            raise FloatingPointError("state amplitudes are not finite")
        norm2 = float(np.vdot(f, f).real + np.vdot(c, c).real)
        if abs(norm2 - 1) > NORM_TOL:
            raise ValueError(f"state norm^2 {norm2!r} deviates from 1")
        a, b = self.polarization
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > HERMITIAN_TOL:
            raise ValueError("polarization pair is not normalized")

    @property
    def n_photon(self) -> int:
        return self.photon_amplitudes.size

    @property
    def n_phonon(self) -> int:
        return self.phonon_amplitudes.size

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.photon_amplitudes, self.phonon_amplitudes])

    @classmethod
    def from_vector(cls, vec, n_photon: int, polarization) -> "ExcitationState":
        vec = np.asarray(vec, dtype=complex)
        return cls(vec[:n_photon], vec[n_photon:], polarization)

    def with_polarization(self, polarization) -> "ExcitationState":
        return ExcitationState(self.photon_amplitudes, self.phonon_amplitudes, polarization)


def build_mode_grid(count: int, omega_min: float, omega_max: float, label: str) -> ModeGrid:
    """Uniform grid of `count` frequencies spanning [omega_min, omega_max].

    >>> build_mode_grid(3, 0.0, 1.0, "phonon").frequencies
    array([0. , 0.5, 1. ])
    """
    if int(count) != count or count < 1:
        raise ValueError(f"mode count must be a positive integer, got {count!r}")
    count = int(count)
    if not (np.isfinite(omega_min) and np.isfinite(omega_max)):
        raise ValueError("grid edges must be finite")
    if omega_min > omega_max:
        raise ValueError("omega_min exceeds omega_max")
    if count == 1:
        # a single mode sits at the band centre
        return ModeGrid(np.array([0.5 * (omega_min + omega_max)]), label)
    if omega_min == omega_max:
        raise ValueError("several modes need omega_min < omega_max")
    return ModeGrid(np.linspace(omega_min, omega_max, count), label)


def lorentzian_envelope(omega, center: float, width: float) -> np.ndarray:
    return width**2 / ((np.asarray(omega) - center) ** 2 + width**2)


def ohmic_envelope(omega, cutoff: float) -> np.ndarray:
    # amplitude envelope for J(w) ~ w exp(-w/wc)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("ohmic coupling needs non-negative phonon frequencies")
    return np.sqrt(omega / cutoff) * np.exp(-omega / (2 * cutoff))


def build_coupling(
    kind: str,
    g: float,
    photon_grid: ModeGrid,
    phonon_grid: ModeGrid,
    *,
    center: float | None = None,
    width: float | None = None,
    cutoff: float | None = None,
    values=None,
) -> CouplingSpectrum:
    """Photon x phonon coupling matrix.

    Args:
        kind: ``flat`` (constant g), ``lorentzian`` (g times a unit-height
            Lorentzian in the phonon frequency), ``ohmic`` (g times
            sqrt(w/wc) exp(-w/2wc)) or ``custom`` (explicit `values`).
        g: overall coupling strength.
        center, width: Lorentzian parameters; `center` defaults to the mean
            photon frequency.
        cutoff: ohmic cutoff frequency.
        values: explicit matrix for ``custom``; scaled by `g`.
    """
    if not np.isfinite(g):
        raise ValueError("coupling strength must be finite")
    shape = (photon_grid.count, phonon_grid.count)
    w = phonon_grid.frequencies
    if kind == "flat":
        mat = np.full(shape, g, dtype=complex)
    elif kind == "lorentzian":
        if width is None or width <= 0:
            raise ValueError("lorentzian coupling needs a positive width")
        if center is None:
            center = float(np.mean(photon_grid.frequencies))
        mat = np.broadcast_to(g * lorentzian_envelope(w, center, width), shape).astype(complex)
    elif kind == "ohmic":
        if cutoff is None or cutoff <= 0:
            raise ValueError("ohmic coupling needs a positive cutoff")
        mat = np.broadcast_to(g * ohmic_envelope(w, cutoff), shape).astype(complex)
    elif kind == "custom":
        if values is None:
            raise ValueError("custom coupling needs explicit values")
        mat = g * np.atleast_2d(np.asarray(values, dtype=complex))
        if mat.shape != shape:
            raise ValueError(f"custom coupling shape {mat.shape} != grids {shape}")
    else:
        raise ValueError(f"unknown coupling kind {kind!r}")
    return CouplingSpectrum(kind, mat)


def assemble_hamiltonian(
    photon_grid: ModeGrid, phonon_grid: ModeGrid, coupling: CouplingSpectrum
) -> HamiltonianMatrix:
    n_p, n_b = photon_grid.count, phonon_grid.count
    if coupling.shape != (n_p, n_b):
        raise ValueError(f"coupling shape {coupling.shape} != grids {(n_p, n_b)}")
    h = np.zeros((n_p + n_b, n_p + n_b), dtype=complex)
    h[np.arange(n_p), np.arange(n_p)] = photon_grid.frequencies
    h[n_p + np.arange(n_b), n_p + np.arange(n_b)] = phonon_grid.frequencies
    # <phonon i|H|photon k> = g[k, i]
    h[n_p:, :n_p] = coupling.values.T
    h[:n_p, n_p:] = coupling.values.conj()
    return HamiltonianMatrix(h, n_p, n_b)


def initial_pulse(
    photon_grid: ModeGrid,
    n_phonon: int,
    shape: str = "gaussian",
    *,
    alpha: complex = 1.0,
    beta: complex = 0.0,
    mode: int = 0,
    center: float | None = None,
    width: float | None = None,
    envelope: Sequence[complex] | None = None,
) -> ExcitationState:
    """Single photon in the photon branch, bath empty.

    ``single_mode`` puts the photon in grid index `mode`; ``gaussian`` uses the
    envelope exp(-(w - center)^2 / (2 width^2)) over the photon grid (center
    defaults to mid-grid, width to a quarter of the bandwidth); ``custom``
    takes an explicit `envelope`.
    """
    pol = normalize_polarization(alpha, beta)
    n = photon_grid.count
    if shape == "single_mode":
        if not 0 <= mode < n:
            raise ValueError(f"mode index {mode} outside photon grid of {n}")
        amps = np.zeros(n, dtype=complex)
        amps[mode] = 1.0
    elif shape == "gaussian":
        w = photon_grid.frequencies
        if center is None:
            center = 0.5 * (w[0] + w[-1])
        if width is None:
            width = photon_grid.bandwidth / 4 if n > 1 else 1.0
        if width <= 0:
            raise ValueError("gaussian width must be positive")
        amps = np.exp(-((w - center) ** 2) / (2 * width**2)).astype(complex)
    elif shape == "custom":
        if envelope is None:
            raise ValueError("custom pulse needs an envelope")
        amps = np.asarray(envelope, dtype=complex)
        if amps.shape != (n,):
            raise ValueError("envelope length does not match the photon grid")
    else:
        raise ValueError(f"unknown pulse shape {shape!r}")
    norm = np.linalg.norm(amps)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("pulse envelope has zero norm")
    return ExcitationState(amps / norm, np.zeros(n_phonon, dtype=complex), pol)
