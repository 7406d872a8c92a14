# How well a homodyne measurement of the probe tells "photon present" from "absent",
# and what an imperfect device does to polarization.
import math

import numpy as np

from zenoline import QndDeviceModel, apply_qnd, homodyne_discriminate, polarization_fidelity
from zenoline.core_model import ExcitationState

print("error vs probe amplitude and cross-phase, optimal quadrature")
print(f"{'alpha_p':>8}" + "".join(f"{f'theta={th:.2f}':>14}" for th in (0.1, 0.5, math.pi / 2, math.pi)))
for a in (0.5, 1.0, 2.0, 4.0):
    errs = [homodyne_discriminate(a, th).false_negative for th in (0.1, 0.5, math.pi / 2, math.pi)]
    print(f"{a:8.2f}" + "".join(f"{e:14.3e}" for e in errs))

r_opt = homodyne_discriminate(2.0, math.pi / 2)
r_p = homodyne_discriminate(2.0, math.pi / 2, phi=math.pi / 2)
print(f"\nalpha_p = 2, theta = pi/2: momentum quadrature {r_p.false_negative:.4f}, "
      f"best angle phi = {r_opt.phi:.4f} gives {r_opt.false_negative:.5f}")

# polarization through 100 ideal devices, then through devices with a small H/V phase asymmetry
diag = (1 / math.sqrt(2), 1 / math.sqrt(2))
photon = ExcitationState(np.array([1.0 + 0j]), np.array([0j]), diag)
for delta in (0.0, 0.01, 0.05):
    s = photon
    for _ in range(100):
        _, s, _ = apply_qnd(s, QndDeviceModel(delta=delta), branch="present")
    f = polarization_fidelity(diag, s.polarization)
    print(f"delta = {delta:.2f}: fidelity after 100 devices {f:.6f} (cos^2(50 delta) = {math.cos(50 * delta) ** 2:.6f})")
