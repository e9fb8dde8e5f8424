"""Weak-coupling (van Hove) limit and two-state master equations.

In the limit ``v -> 0`` with ``tau = t v**2`` fixed the reduced matrix is
diagonal and its entries are sums of exponentials in ``tau``.  For the full
random matrix interaction there are three modes (a constant and two
exponentials with rates ``Gamma_+`` and ``Gamma_-``); for the band model with
form factor ``w(E - E') / sqrt(nu0(E) nu0(E'))`` and a locally exponential
density there are only two and the occupations obey a master equation.
"""

from dataclasses import dataclass, field

import numpy as np

from .state import gibbs_populations, reduced_state

__all__ = [
    "VanHoveParams",
    "VanHoveTrajectory",
    "MasterSystem",
    "RescaledRate",
    "vanhove_reduced",
    "vanhove_band",
    "master_solve",
    "master_rk4",
    "rescaled_rate",
    "band_regime_rates",
    "two_state_residual",
    "lorentzian_form_factor",
]


@dataclass(frozen=True)
class VanHoveParams:
    """Parameters of a van Hove run.

    Parameters
    ----------
    dos : DensityOfStates
    E : float
        Energy of the initially occupied reservoir level.
    s : float
    v2 : float
        Optional second coupling factor; rates are multiplied by ``v2**2``.
    w : callable, optional
        Symmetric band weight for :func:`vanhove_band`.
    beta : float, optional
        Inverse temperature of the locally exponential density, band model only.
    """

    dos: object = None
    E: float = 0.0
    s: float = 0.5
    v2: float = 1.0
    w: object = None
    beta: float = None

    def __post_init__(self):
        if self.v2 < 0:
            raise ValueError("v2: must be non-negative")


@dataclass(frozen=True, eq=False)
class VanHoveTrajectory:
    """Diagonal van Hove trajectory with its mode decomposition.

    ``rho[t, a, a] = stationary[a] + amp[a, 0] exp(-tau rates[0]) + amp[a, 1] exp(-tau rates[1])``
    """

    tau: np.ndarray
    rho: np.ndarray  # (nt, 2, 2)
    stationary: np.ndarray  # (2,)
    rates: np.ndarray  # (2,)
    amp: np.ndarray  # (2, 2)
    master: object = None
    meta: dict = field(default_factory=dict)

    def at(self, tau):
        """Diagonal occupations at arbitrary rescaled times, shape (len(tau), 2)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        e = np.exp(-np.outer(tau, self.rates))
        return self.stationary[None, :] + e @ self.amp.T

    def derivative(self, tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        e = np.exp(-np.outer(tau, self.rates)) * (-self.rates)[None, :]
        return e @ self.amp.T

    def modes(self):
        """Per-time contributions to rho_++ of the three modes, shape (nt, 3)."""
        e = np.exp(-np.outer(self.tau, self.rates))
        return np.column_stack([np.full(self.tau.size, self.stationary[0]), self.amp[0, 0] * e[:, 0],
                                self.amp[0, 1] * e[:, 1]])

    def trace(self):
        return np.trace(self.rho, axis1=1, axis2=2).real


def _trajectory(tau, stat, rates, amp, master=None, meta=None):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    tr = VanHoveTrajectory(tau, None, np.asarray(stat, float), np.asarray(rates, float),
                           np.asarray(amp, float), master, meta or {})
    occ = tr.at(tau)
    rho = np.zeros((tau.size, 2, 2), dtype=complex)
    rho[:, 0, 0], rho[:, 1, 1] = occ[:, 0], occ[:, 1]
    object.__setattr__(tr, "rho", rho)
    return tr


def vanhove_reduced(params, rho0, tau):
    """Van Hove limit of the reduced matrix for the full random matrix coupling.

    With ``n(x) = nu0(x)`` and ``G_a = 2 pi v2^2 (n(E) + n(E + 2 s a))``,

        rho_aa(tau) = n(E)/(n(E)+n(E+2sa)) rho_aa(0) + n(E-2sa)/(n(E-2sa)+n(E)) rho_-a-a(0)
                    + n(E+2sa)/(n(E)+n(E+2sa)) rho_aa(0) e^{-tau G_a}
                    - n(E-2sa)/(n(E-2sa)+n(E)) rho_-a-a(0) e^{-tau G_-a},

    and off-diagonal entries vanish.

    Returns
    -------
    VanHoveTrajectory
        ``amp[:, 0]`` multiplies ``exp(-tau G_+)``, ``amp[:, 1]`` ``exp(-tau G_-)``.
    """
    rho0 = reduced_state(rho0)
    p = np.diag(rho0).real
    dos, E, s = params.dos, params.E, params.s
    n0 = float(dos.pdf(E))
    nP, nM = float(dos.pdf(E + 2 * s)), float(dos.pdf(E - 2 * s))
    for name, val in (("nu0(E)", n0), ("nu0(E+2s)", nP), ("nu0(E-2s)", nM)):
        if not np.isfinite(val) or val < 0:
            raise ValueError(f"{name} = {val} is not a finite non-negative density")
    if n0 + nP <= 0 or n0 + nM <= 0:
        raise ValueError("nu0 vanishes at E and E +- 2s; no transitions are possible")
    k = params.v2**2
    rates = 2 * np.pi * k * np.array([n0 + nP, n0 + nM])
    cP = nP / (n0 + nP)  # weight of the + level decaying at rate G_+
    cM = nM / (n0 + nM)
    stat = np.array([(1 - cP) * p[0] + cM * p[1], (1 - cM) * p[1] + cP * p[0]])
    amp = np.array([[cP * p[0], -cM * p[1]], [-cP * p[0], cM * p[1]]])
    return _trajectory(tau, stat, rates, amp, meta={"convention": "2pi (nu0(E) + nu0(E + 2 s a))"})


@dataclass(frozen=True)
class MasterSystem:
    """``d rho_a / d tau = -k_a rho_a + k_{-a} rho_{-a}`` with ``k = (k_+, k_-)``."""

    k: tuple

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        if k.shape != (2,) or not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValueError("k: need two finite non-negative rates")

    @property
    def relaxation_rate(self):
        return float(self.k[0] + self.k[1])

    @property
    def stationary(self):
        kp, km = self.k
        tot = kp + km
        if tot == 0:
            return None
        return np.array([km / tot, kp / tot])

    def rhs(self, p):
        kp, km = self.k
        d = -kp * p[..., 0] + km * p[..., 1]
        return np.stack([d, -d], axis=-1)


def master_solve(system, p0, tau):
    """Closed-form solution, shape (len(tau), 2)."""
    p0 = np.asarray(p0, dtype=float)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    G = system.relaxation_rate
    if G == 0:
        return np.tile(p0, (tau.size, 1))
    st = system.stationary
    return st[None, :] + (p0 - st)[None, :] * np.exp(-G * tau)[:, None]


def master_rk4(system, p0, tau, substeps=200):
    """Classical fourth-order Runge-Kutta integration, used as a test oracle."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.empty((tau.size, 2))
    p = np.asarray(p0, dtype=float).copy()
    t = 0.0
    for i, target in enumerate(tau):
        h = (target - t) / substeps
        for _ in range(substeps if target > t else 0):
            k1 = system.rhs(p)
            k2 = system.rhs(p + 0.5 * h * k1)
            k3 = system.rhs(p + 0.5 * h * k2)
            k4 = system.rhs(p + h * k3)
            p = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out[i] = p
    return out


def lorentzian_form_factor(b):
    """``w(x) = 1 / (1 + (x/b)^2)``."""
    return lambda x: 1.0 / (1.0 + (np.asarray(x) / b) ** 2)


def vanhove_band(params, rho0, tau):
    """Band-model van Hove dynamics with a locally exponential density.

    ``Gamma = 4 pi v2^2 w(2s) cosh(beta s)`` and

        rho_aa(tau) = e^{-beta s a}/(2 cosh beta s)
                      + (e^{beta s a} rho_aa(0) - e^{-beta s a} rho_-a-a(0)) e^{-tau Gamma} / (2 cosh beta s),

    the exact solution of the master equation with
    ``k_a = 2 pi v2^2 w(2s) e^{beta s a}``.

    Returns
    -------
    VanHoveTrajectory
        With ``master`` set to the :class:`MasterSystem`.
    """
    if params.w is None or params.beta is None:
        raise ValueError("vanhove_band needs a band weight w and beta")
    rho0 = reduced_state(rho0)
    p = np.diag(rho0).real
    s, beta = params.s, params.beta
    w2s = float(params.w(2 * s))
    if not w2s > 0:
        raise ValueError(f"w(2s) = {w2s} must be positive")
    k = 2 * np.pi * params.v2**2 * w2s * np.exp(beta * s * np.array([1.0, -1.0]))
    system = MasterSystem(tuple(k))
    G = system.relaxation_rate
    stat = gibbs_populations(beta, s)
    ch = 2 * np.cosh(beta * s)
    a0 = (np.exp(beta * s) * p[0] - np.exp(-beta * s) * p[1]) / ch
    amp = np.array([[a0, 0.0], [-a0, 0.0]])
    return _trajectory(tau, stat, [G, G], amp, master=system,
                       meta={"Gamma": G, "w(2s)": w2s})


@dataclass(frozen=True)
class RescaledRate:
    """Van Hove rates ``Gamma_a(E)`` in the two conventions, each shape (2,).

    ``printed``: ``4 pi v2^2 (nu0(E) + nu0(E + s a))``.
    ``consistent``: ``2 pi v2^2 (nu0(E) + nu0(E + 2 s a))``, the rates entering
    :func:`vanhove_reduced`.
    """

    printed: np.ndarray
    consistent: np.ndarray


def rescaled_rate(dos, E, s, v2):
    a = np.array([1.0, -1.0])
    n0 = float(dos.pdf(E))
    printed = 4 * np.pi * v2**2 * (n0 + np.asarray(dos.pdf(E + s * a), float))
    consistent = 2 * np.pi * v2**2 * (n0 + np.asarray(dos.pdf(E + 2 * s * a), float))
    return RescaledRate(printed, consistent)


def band_regime_rates(A, s, b):
    """``(Gamma, Gamma_1) = (4 A, 4 A b^2 / (s^2 + b^2))``."""
    if not (A > 0 and b > 0):
        raise ValueError("A and b must be positive")
    G = 4.0 * A
    return G, G * b * b / (s * s + b * b)


def two_state_residual(fn, T, n=48):
    """How far ``p(tau) = fn(tau)`` is from any first-order linear two-state law.

    Samples on Chebyshev points of ``[0, T]``, differentiates spectrally and
    fits ``p' = a p + c`` by least squares.  `fn` may return several columns
    (trajectories from different initial states); they then share one
    ``(a, c)``, as they would under a single master equation.  Returns the
    largest residual relative to ``max |p'|``.
    """
    from numpy.polynomial import chebyshev as C

    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    tau = 0.5 * T * (x + 1)
    p = np.asarray(fn(tau), dtype=float).reshape(n, -1)
    coef = C.chebfit(x, p, n - 1)
    dp = (C.chebval(x, C.chebder(coef)) * 2.0 / T).reshape(p.shape[1], n).T
    M = np.column_stack([p.T.ravel(), np.ones(p.size)])
    d = dp.T.ravel()
    sol, *_ = np.linalg.lstsq(M, d, rcond=None)
    res = d - M @ sol
    scale = max(np.max(abs(d)), 1e-300)
    return float(np.max(abs(res)) / scale)
