"""Weak coupling: three modes for the full coupling, two for the band model.

The full random matrix coupling gives populations with a constant and two
exponentials, so no single two-state master equation describes them.  The
band model with a locally exponential density gives one exponential and a
Gibbs stationary state.
"""

import numpy as np

from rmrelax.dos import GaussianConvolution
from rmrelax.vanhove import VanHoveParams, lorentzian_form_factor, two_state_residual, vanhove_band, vanhove_reduced

full = VanHoveParams(GaussianConvolution(J=1, a=1.0), E=0.3, s=0.5)
basis = [vanhove_reduced(full, np.diag(p), [0.0]) for p in ([1.0, 0.0], [0.0, 1.0])]
print(f"full coupling rates {basis[0].rates.round(4)}")
T = 3.0 / basis[0].rates.max()
both = lambda tau: np.column_stack([b.at(tau)[:, 0] for b in basis])  # noqa: E731
print(f"common two-state law residual (full coupling): {two_state_residual(both, T):.3e}")

band = VanHoveParams(E=0.0, s=0.5, w=lorentzian_form_factor(1.0), beta=1.0)
runs = [vanhove_band(band, np.diag(p), [0.0]) for p in ([1.0, 0.0], [0.0, 1.0])]
both = lambda tau: np.column_stack([r.at(tau)[:, 0] for r in runs])  # noqa: E731
print(f"common two-state law residual (band model):    {two_state_residual(both, T):.3e}")
print(f"band stationary state {runs[0].stationary.round(6)}, master rates {np.round(runs[0].master.k, 4)}")
