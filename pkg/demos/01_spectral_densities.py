"""Spectral densities of the coupled system.

With a near-delta reservoir density, s = 0 and v = 1 the one-point
equations reduce to the semicircle law.  For a Gaussian reservoir and
s > 0 the two densities differ, and their ratio sets the equilibrium state.
"""

import numpy as np

from rmrelax.dos import GaussianConvolution
from rmrelax.resolvent import Canonical, Microcanonical, Model, equilibrium_reduced, spectral_density

lam = np.linspace(-1.9, 1.9, 381)
sd = spectral_density(Model(GaussianConvolution(J=1, a=1e-3), 0.0, 1.0), lam)
exact = np.sqrt(4 - lam**2) / (2 * np.pi)
print(f"semicircle: sup error {np.max(abs(sd.nu_plus - exact)):.2e}")

model = Model(GaussianConvolution(J=1, a=1.0), 0.5, 0.6)
lam = np.linspace(-6, 6, 2401)
sd = spectral_density(model, lam, h=1e-6)
print(f"normalization: {np.trapezoid(sd.nu, lam, axis=1)}")
print(f"peak of nu_+ at {lam[np.argmax(sd.nu_plus)]:+.3f}, of nu_- at {lam[np.argmax(sd.nu_minus)]:+.3f}")

# equivalence of ensembles at large J: microcanonical at J e vs canonical at beta(e)
for J in (8, 16, 32):
    m = Model(GaussianConvolution(J=1, a=1.0).with_J(J), 0.5, 1.0)
    micro = np.diag(equilibrium_reduced(m, Microcanonical(-J))).real
    canon = np.diag(equilibrium_reduced(m, Canonical(1.0))).real
    print(f"J={J:2d}  microcanonical {micro.round(5)}  canonical {canon.round(5)}")
print(f"Gibbs limit {np.exp(-0.5) / (2 * np.cosh(0.5)):.5f}")
