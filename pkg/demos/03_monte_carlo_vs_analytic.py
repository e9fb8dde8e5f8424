"""Finite-n ensemble average against the n -> infinity prediction.

A modest ensemble (n = 128, R = 60) already follows the analytic curve
within a few standard errors.  The acceptance suite uses n = 256, R = 200.
"""

import numpy as np

from rmrelax.dos import GaussianConvolution
from rmrelax.dynamics import evolve_analytic
from rmrelax.ensemble import InteractionSpec, MCConfig, mc_average
from rmrelax.resolvent import Model

dos = GaussianConvolution(J=1, a=1.0)
t = np.linspace(0, 12, 13)
rho0 = np.diag([1.0, 0.0])
mc = mc_average(MCConfig(dos, 128, 0.5, InteractionSpec(v=0.5), rho0, t, E=0.0), 60, master_seed=7)
an = evolve_analytic(Model(dos, 0.5, 0.5), mc.level, rho0, t)

print("   t   mc rho_pp   stderr   analytic")
for i in range(t.size):
    print(f"{t[i]:4.1f}  {mc.rho_re.mean[i, 0, 0]:9.4f}  {mc.rho_re.stderr[i, 0, 0]:7.4f}  {an.rho[i, 0, 0].real:9.4f}")
