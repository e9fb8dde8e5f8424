"""Flat reservoir density: the analytic engine against its closed form.

A very wide Gaussian density with v chosen so that A = pi nu0(0) v^2 is
fixed approaches the flat regime.  Populations relax at Gamma = 4A towards
diag(1/2, 1/2); the coherence has a slow rate 2(A - sqrt(A^2 - s^2)).
"""

import numpy as np

from rmrelax.dos import ScaledFlat
from rmrelax.dynamics import evolve_analytic, flat_offdiagonal_rate, flat_regime_closed_form
from rmrelax.resolvent import Model

A, s, a = 0.1, 0.05, 200.0
dos = ScaledFlat("gaussian", a)
v = np.sqrt(A / (np.pi * dos.pdf(0.0)))
rho0 = np.array([[0.8, 0.3], [0.3, 0.2]])
t = np.linspace(0, 5 / (4 * A), 11)

ev = evolve_analytic(Model(dos, s, v), 0.0, rho0, t)
cf = flat_regime_closed_form(A, s, rho0, t)
print("   t    rho_pp(analytic)  rho_pp(closed)   |rho_pm| analytic  closed")
for i in range(t.size):
    print(f"{t[i]:5.2f}  {ev.rho[i, 0, 0].real:16.6f}  {cf.rho[i, 0, 0].real:13.6f}"
          f"  {abs(ev.rho[i, 0, 1]):17.6f}  {abs(cf.rho[i, 0, 1]):7.6f}")
print(f"slow coherence rate {flat_offdiagonal_rate(A, s):.5f}, population rate {4 * A}")
