"""Two-level reduced states.

Index 0 labels the upper level (alpha = +, energy +s), index 1 the lower
level (alpha = -, energy -s).  All 2x2 arrays in the package follow this
ordering.
"""

import numpy as np

ALPHAS = (1, -1)


def reduced_state(rho, name="rho0", atol=1e-10):
    """Validate and return a 2x2 density matrix as a complex array.

    Raises ``ValueError`` mentioning `name` if the matrix is not Hermitian,
    not of unit trace, or has a negative eigenvalue beyond `atol`.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"{name}: expected a 2x2 matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError(f"{name}: matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"{name}: trace is {tr:.12g}, expected 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -atol:
        raise ValueError(f"{name}: negative eigenvalue {evals.min():.3g}")
    return rho


def diag_state(p_plus):
    """Diagonal state with upper-level population `p_plus`."""
    return np.diag([p_plus, 1.0 - p_plus]).astype(complex)


def basis_state(alpha):
    """Projector on level `alpha` (+1 or -1)."""
    return diag_state(1.0 if alpha == 1 else 0.0)


def gibbs_populations(beta, s):
    """Populations e^{-beta s alpha} / (2 cosh beta s) for alpha = +, -."""
    x = beta * s
    # stable for large |x|
    p_plus = 0.5 * (1.0 - np.tanh(x))
    return np.array([p_plus, 1.0 - p_plus])
