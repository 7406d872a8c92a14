import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import test_baths, two_level
from zenoline.core_model import (
    ExcitationState,
    assemble_hamiltonian,
    build_coupling,
    build_mode_grid,
    initial_pulse,
)
from zenoline.evolution import compute_gamma, evolve, survival_probability


def random_model(seed, n_p=3, n_b=8, scale=10.0):
    rng = np.random.default_rng(seed)
    pg = build_mode_grid(n_p, -1.0, 1.0, "photon")
    bg = build_mode_grid(n_b, -2.0, 2.0, "phonon")
    vals = rng.normal(size=(n_p, n_b)) + 1j * rng.normal(size=(n_p, n_b))
    H = assemble_hamiltonian(pg, bg, build_coupling("custom", 1.0, pg, bg, values=vals))
    # rescale so the spectral norm stays within `scale`
    norm = np.linalg.norm(H.matrix, 2)
    if norm > scale:
        H = assemble_hamiltonian(
            build_mode_grid(n_p, -1.0 * scale / norm, 1.0 * scale / norm, "photon"),
            build_mode_grid(n_b, -2.0 * scale / norm, 2.0 * scale / norm, "phonon"),
            build_coupling("custom", scale / norm, pg, bg, values=vals),
        )
    env = rng.normal(size=n_p) + 1j * rng.normal(size=n_p)
    state = initial_pulse(pg, n_b, "custom", envelope=env, alpha=0.6, beta=0.8j)
    return H, state


class TestEvolve:
    def test_decoupled_survival_is_one(self):
        H, s = two_level(g=0.0)
        traj = evolve(s, H, 10.0, 200)
        assert np.max(np.abs(traj.survival - 1)) < 1e-12

    def test_rabi_oscillation(self):
        H, s = two_level(g=1.0)
        traj = evolve(s, H, math.pi, 400)
        np.testing.assert_allclose(traj.survival, np.cos(traj.times) ** 2, atol=1e-12)
        i = np.argmin(np.abs(traj.times - math.pi / 2))
        assert traj.times[i] == pytest.approx(math.pi / 2)
        assert traj.survival[i] < 1e-8

    def test_sampling_grid(self):
        H, s = two_level()
        traj = evolve(s, H, 2.0, 8)
        np.testing.assert_allclose(traj.times, np.arange(9) * 0.25)
        assert len(traj.states) == 9

    def test_survival_matches_states(self):
        H, s = random_model(3)
        traj = evolve(s, H, 5.0, 50)
        for st_, p in zip(traj.states, traj.survival):
            assert abs(survival_probability(st_) - p) < 1e-12
            assert 0.0 <= p <= 1.0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_unitarity(self, seed):
        H, s = random_model(seed)
        traj = evolve(s, H, 10.0, 100)
        norms = np.linalg.norm(traj.amplitudes, axis=1)
        assert np.max(np.abs(norms - 1)) < 1e-10

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_polarization_untouched(self, seed):
        H, s = random_model(seed)
        traj = evolve(s, H, 3.0, 10)
        assert traj.polarization is s.polarization
        assert all(x.polarization == s.polarization for x in traj.states)

    def test_rk4_step_refinement(self):
        H, s = random_model(11, scale=3.0)
        coarse = evolve(s, H, 2.0, 20, method="rk4", substeps=20)
        fine = evolve(s, H, 2.0, 20, method="rk4", substeps=40)
        exact = evolve(s, H, 2.0, 20)
        # claimed local tolerance ~ (||H|| dt)^5 per step
        dt = 2.0 / (20 * 20)
        claimed = (3.0 * dt) ** 5 * 400
        assert np.max(np.abs(coarse.amplitudes - fine.amplitudes)) < 10 * claimed
        assert np.max(np.abs(fine.amplitudes - exact.amplitudes)) < 1e-7

    def test_dimension_mismatch(self):
        H, _ = two_level()
        pg = build_mode_grid(2, 0.0, 1.0, "photon")
        s = initial_pulse(pg, 1, "single_mode")
        with pytest.raises(ValueError):
            evolve(s, H, 1.0, 10)

    @pytest.mark.parametrize("t_final,n", [(0.0, 10), (-1.0, 10), (1.0, 0)])
    def test_bad_arguments(self, t_final, n):
        H, s = two_level()
        with pytest.raises(ValueError):
            evolve(s, H, t_final, n)


class TestSurvival:
    def test_branches(self):
        photon = ExcitationState(np.array([1.0]), np.array([0.0]))
        phonon = ExcitationState(np.array([0.0]), np.array([1.0]))
        half = ExcitationState(np.array([1 / math.sqrt(2)]), np.array([1 / math.sqrt(2)]))
        assert survival_probability(photon) == 1.0
        assert survival_probability(phonon) == 0.0
        assert survival_probability(half) == pytest.approx(0.5, abs=1e-15)


class TestGamma:
    def test_decoupled(self):
        H, s = two_level(g=0.0)
        assert compute_gamma(H, s) == 0.0

    @pytest.mark.parametrize("g", [0.1, 1.0, 2.5])
    def test_two_level_equals_g(self, g):
        H, s = two_level(g=g)
        assert compute_gamma(H, s) == pytest.approx(g, rel=1e-14)

    def test_two_phonon_against_fit(self):
        pg = build_mode_grid(1, 1.0, 1.0, "photon")
        bg = build_mode_grid(2, 0.7, 1.3, "phonon")
        H = assemble_hamiltonian(pg, bg, build_coupling("custom", 1.0, pg, bg, values=[[0.3, 0.4]]))
        s = initial_pulse(pg, 2, "single_mode")
        # oracle: fit 1 - P_s = gamma^2 t^2 on a fine, short run
        traj = evolve(s, H, 0.01, 100)
        t, y = traj.times[1:], 1 - traj.survival[1:]
        gamma_fit = math.sqrt(np.sum(t**2 * y) / np.sum(t**4))
        assert gamma_fit == pytest.approx(0.5, rel=1e-4)
        assert compute_gamma(H, s) == pytest.approx(0.5, rel=1e-14)

    def test_rejects_phonon_weight(self):
        H, _ = two_level()
        s = ExcitationState(np.array([math.sqrt(0.5)]), np.array([math.sqrt(0.5)]))
        with pytest.raises(ValueError):
            compute_gamma(H, s)

    @pytest.mark.parametrize("name,H,state", test_baths(), ids=[b[0] for b in test_baths()])
    def test_quadratic_law(self, name, H, state):
        gamma = compute_gamma(H, state)
        t = np.linspace(0, 0.05 / gamma, 200)[1:]
        traj = evolve(state, H, t[-1], 199)
        assert np.max(np.abs(traj.survival - (1 - (gamma * traj.times) ** 2))) < 1e-3
