"""Quantum-Zeno suppression of single-photon absorption in fibers.

Single-excitation photon/phonon dynamics, repeated QND photon-number
projections, decay-regime analysis, a cross-Kerr QND device model and
link/memory planning.
"""
__version__ = "0.1.0"

from .core_model import (
    CouplingSpectrum,
    ExcitationState,
    HamiltonianMatrix,
    ModeGrid,
    assemble_hamiltonian,
    build_coupling,
    build_mode_grid,
    initial_pulse,
)
from .evolution import NumericalError, Trajectory, compute_gamma, evolve, survival_probability
from .link_planner import LinkPlan, MemoryPlan, memory_loop, plan_link, scan_device_counts
from .qnd_device import (
    DiscriminationReport,
    QndDeviceModel,
    apply_qnd,
    cnot_qnd_success,
    homodyne_discriminate,
    polarization_fidelity,
    probe_phase,
)
from .regime_analysis import DecayFit, fit_decay, golden_rule_rate, max_device_spacing, tq_experiment
from .zeno_protocol import (
    ZenoConfig,
    ZenoRecord,
    analytic_survival,
    effective_decay_rate,
    run_ensemble,
    run_monte_carlo,
)
