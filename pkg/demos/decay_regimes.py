# A photon coupled to a broad band of phonon modes: quadratic loss at first,
# exponential loss afterwards. Find the crossover time two ways.
import numpy as np

from zenoline import compute_gamma, evolve, fit_decay, golden_rule_rate, max_device_spacing, tq_experiment
from zenoline.core_model import assemble_hamiltonian, build_coupling, build_mode_grid, initial_pulse

g = 0.01
photon = build_mode_grid(1, 0.0, 0.0, "photon")
phonon = build_mode_grid(201, -1.0, 1.0, "phonon")
H = assemble_hamiltonian(photon, phonon, build_coupling("flat", g, photon, phonon))
state = initial_pulse(photon, phonon.count, "single_mode")

print(f"band: {phonon.count} modes, spacing {phonon.spacing:.4f}, recurrence at t = {phonon.recurrence_time:.1f}")
print(f"gamma = {compute_gamma(H, state):.5f}")

traj = evolve(state, H, 60.0, 3000)
fit = fit_decay(traj, recurrence_time=phonon.recurrence_time)
rho = phonon.count / phonon.bandwidth
print(f"fitted exponential rate {fit.gamma_exp:.5f} vs golden rule {golden_rule_rate(g, rho):.5f}")
print(f"quadratic coefficient {fit.gamma_fit:.5f}, crossover T_q = {fit.t_q:.3f}")

for t in (0.5, 1.0, 2.0, 5.0, 20.0):
    i = np.searchsorted(traj.times, t)
    print(f"  t = {t:5.1f}  P_s = {traj.survival[i]:.5f}  quadratic {fit.quadratic(t):.5f}  exponential {fit.exponential(t):.5f}")

# the lab version: transmission through fibers of decreasing length
lengths = np.geomspace(60, 0.2, 25)
table = tq_experiment(H, state, lengths, v_f=1.0)
print(f"\nfiber-length scan flags departure at L = {table.flagged_length:.3f} -> T_q estimate {table.t_q_estimate:.3f}")
for L, P, dep, _ in list(table.rows())[-8:]:
    print(f"  L = {L:7.3f}  P = {P:.5f}  {'departs' if dep else ''}")

v_f = 2e8
print(f"\nwith v_f = 2e8 m/s and T_q = 1 ns, devices must sit closer than {max_device_spacing(1e-9, v_f):.2f} m")
