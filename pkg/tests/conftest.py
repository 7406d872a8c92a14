import math

import numpy as np
import pytest

from zenoline.core_model import (
    assemble_hamiltonian,
    build_coupling,
    build_mode_grid,
    initial_pulse,
)

DIAG = (1 / math.sqrt(2), 1 / math.sqrt(2))


def two_level(g=1.0, omega=1.0, polarization=(1.0, 0.0)):
    pg = build_mode_grid(1, omega, omega, "photon")
    bg = build_mode_grid(1, omega, omega, "phonon")
    H = assemble_hamiltonian(pg, bg, build_coupling("flat", g, pg, bg))
    state = initial_pulse(pg, 1, "single_mode", alpha=polarization[0], beta=polarization[1])
    return H, state


def wideband(n_phonon=201, bandwidth=2.0, g=0.01, omega=0.0):
    pg = build_mode_grid(1, omega, omega, "photon")
    bg = build_mode_grid(n_phonon, omega - bandwidth / 2, omega + bandwidth / 2, "phonon")
    H = assemble_hamiltonian(pg, bg, build_coupling("flat", g, pg, bg))
    return H, initial_pulse(pg, n_phonon, "single_mode"), bg


def test_baths():
    """Every bath the suite treats as representative: (name, H, state)."""
    baths = []
    H, s = two_level()
    baths.append(("two_level", H, s))
    H, s = two_level(g=0.3, omega=2.0)
    baths.append(("two_level_weak", H, s))
    pg = build_mode_grid(1, 1.0, 1.0, "photon")
    bg = build_mode_grid(2, 1.0, 1.5, "phonon")
    H = assemble_hamiltonian(pg, bg, build_coupling("custom", 1.0, pg, bg, values=[[0.3, 0.4]]))
    baths.append(("two_phonon", H, initial_pulse(pg, 2, "single_mode")))
    H, s, _ = wideband()
    baths.append(("wideband_flat", H, s))
    pg = build_mode_grid(1, 1.0, 1.0, "photon")
    bg = build_mode_grid(151, 0.0, 2.0, "phonon")
    H = assemble_hamiltonian(pg, bg, build_coupling("lorentzian", 0.02, pg, bg, width=0.3))
    baths.append(("lorentzian", H, initial_pulse(pg, 151, "single_mode")))
    bg = build_mode_grid(151, 0.0, 4.0, "phonon")
    H = assemble_hamiltonian(pg, bg, build_coupling("ohmic", 0.02, pg, bg, cutoff=1.0))
    baths.append(("ohmic", H, initial_pulse(pg, 151, "single_mode")))
    pg = build_mode_grid(7, 0.8, 1.2, "photon")
    bg = build_mode_grid(60, 0.0, 2.0, "phonon")
    rng = np.random.default_rng(7)
    vals = 0.01 * (rng.normal(size=(7, 60)) + 1j * rng.normal(size=(7, 60)))
    H = assemble_hamiltonian(pg, bg, build_coupling("custom", 1.0, pg, bg, values=vals))
    baths.append(("multimode_random", H, initial_pulse(pg, 60, "gaussian", alpha=DIAG[0], beta=DIAG[1])))
    return baths


test_baths.__test__ = False


@pytest.fixture
def two_level_model():
    return two_level()


@pytest.fixture(scope="session")
def wideband_model():
    return wideband()


_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0] if marker.args else item.name
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _ACCEPTANCE.get(label, "PASS")
        _ACCEPTANCE[label] = "PASS" if (rep.outcome == "passed" and prev == "PASS") else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(f"{_ACCEPTANCE[label]}  {label}")
