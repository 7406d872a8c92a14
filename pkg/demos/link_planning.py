# How many QND devices to put along a fiber, and how long a loop memory holds a photon.
import numpy as np

from zenoline import QndDeviceModel, memory_loop, plan_link, scan_device_counts

L, v_f, gamma, t_q = 1.0, 1.0, 1.0, 100.0

print("ideal devices: more is always better")
for m in (1, 3, 9, 99, 999):
    p = plan_link(L, v_f, gamma, t_q, QndDeviceModel(), m)
    print(f"  M = {m:4d}  spacing {p.spacing:.4f}  survival {p.survival:.5f}")

print("\nlossy devices: an optimum appears")
for eta in (0.999, 0.99, 0.95, 0.9):
    p = plan_link(L, v_f, gamma, t_q, QndDeviceModel(eta=eta), "optimize", m_max=2000)
    print(f"  eta = {eta:5.3f}  best M = {p.M:3d}  survival {p.survival:.5f}")

ms, surv = scan_device_counts(L, v_f, gamma, t_q, 0.99, 60)
print("\neta = 0.99 trade-off, every 10th M:", np.round(surv[::10], 4))

print("\nloop memory, gamma * loop_time = 0.1")
for eta in (1.0, 0.999, 0.99):
    mem = memory_loop(0.1, 100, gamma, QndDeviceModel(eta=eta))
    print(f"  eta = {eta:5.3f}  survival after 10, 50, 100 trips: "
          + ", ".join(f"{mem.survival[k - 1]:.4f}" for k in (10, 50, 100)))
