"""Reservoir densities of states.

A density of states ``nu0`` is a normalized, non-negative function of the
reservoir energy.  Besides pointwise evaluation each model knows its
cumulative distribution, quantiles, and its Stieltjes transform

    G0(w) = int nu0(E) dE / (E - w),

which is what the self-consistent resolvent equations consume.  Closed forms
are used wherever they exist so that boundary values close to the real axis
stay accurate.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

__all__ = [
    "DensityOfStates",
    "DomainError",
    "GaussianConvolution",
    "Lattice",
    "ScaledFlat",
    "Tabulated",
    "DiscreteLevels",
    "ThermoPoint",
    "eval_dos",
    "rate_function",
    "local_gibbs_ratio",
    "quantile_levels",
    "PROFILES",
]

_SQRT2 = np.sqrt(2.0)
_SQRTPI = np.sqrt(np.pi)


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


def _upper(w):
    """Map `w` to the closed upper half-plane; return mapped value and mask."""
    w = np.asarray(w, dtype=complex)
    lower = w.imag < 0
    return np.where(lower, w.conj(), w), lower


def _reflect(val, lower):
    return np.where(lower, np.conj(val), val)


def _gauss_stieltjes(w, mu, sigma):
    wu, lower = _upper(w)
    zeta = (wu - mu) / (sigma * _SQRT2)
    f = special.wofz(zeta)
    pref = 1j * _SQRTPI / (sigma * _SQRT2)
    g = pref * f
    dg = pref * (-2.0 * zeta * f + 2j / _SQRTPI) / (sigma * _SQRT2)
    return _reflect(g, lower), _reflect(dg, lower)


class DensityOfStates:
    """Base class.  Subclasses are frozen dataclasses."""

    #: finite support edges (lo, hi); infinite for unbounded models
    def support(self):
        raise NotImplementedError

    def pdf(self, E):
        raise NotImplementedError

    def cdf(self, E):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def stieltjes(self, w):
        """Return ``(G0(w), G0'(w))`` for complex `w` off the support."""
        raise NotImplementedError

    def scale(self):
        """(center, width) used to lay out grids."""
        raise NotImplementedError

    def singular_points(self):
        """Energies where nu0 is not smooth (band edges)."""
        lo, hi = self.support()
        return [x for x in (lo, hi) if np.isfinite(x)]

    def __call__(self, E):
        return self.pdf(E)


@dataclass(frozen=True)
class GaussianConvolution(DensityOfStates):
    """J-fold convolution of a Gaussian subsystem density.

    The result is a normal density with mean ``J*e0`` and variance
    ``J*a**2``.
    """

    J: int = 1
    a: float = 1.0
    e0: float = 0.0

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise ValueError(f"J must be a positive integer, got {self.J}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")

    @property
    def mean(self):
        return self.J * self.e0

    @property
    def sigma(self):
        return np.sqrt(self.J) * self.a

    def with_J(self, J):
        return GaussianConvolution(J=J, a=self.a, e0=self.e0)

    def support(self):
        return (-np.inf, np.inf)

    def pdf(self, E):
        x = (np.asarray(E, dtype=float) - self.mean) / self.sigma
        return np.exp(-0.5 * x * x) / (np.sqrt(2 * np.pi) * self.sigma)

    def logpdf(self, E):
        x = (np.asarray(E, dtype=float) - self.mean) / self.sigma
        return -0.5 * x * x - np.log(np.sqrt(2 * np.pi) * self.sigma)

    def cdf(self, E):
        return special.ndtr((np.asarray(E, dtype=float) - self.mean) / self.sigma)

    def quantile(self, u):
        return self.mean + self.sigma * special.ndtri(u)

    def stieltjes(self, w):
        return _gauss_stieltjes(w, self.mean, self.sigma)

    def scale(self):
        return self.mean, self.sigma

    def singular_points(self):
        return []


@dataclass(frozen=True)
class Lattice(DensityOfStates):
    """Band density of a particle hopping on a periodic chain.

    ``nu0(E) = 1 / (pi sqrt(E (W - E)))`` on ``0 < E < W`` with
    ``W = 4 / delta**2``.
    """

    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def width(self):
        return 4.0 / self.delta**2

    def support(self):
        return (0.0, self.width)

    def pdf(self, E):
        E = np.asarray(E, dtype=float)
        W = self.width
        inside = (E > 0) & (E < W)
        Ei = np.where(inside, E, 0.5 * W)
        return np.where(inside, 1.0 / (np.pi * np.sqrt(Ei * (W - Ei))), 0.0)

    def cdf(self, E):
        x = np.clip(np.asarray(E, dtype=float) / self.width, 0.0, 1.0)
        return 2.0 / np.pi * np.arcsin(np.sqrt(x))

    def quantile(self, u):
        return self.width * np.sin(0.5 * np.pi * np.asarray(u, dtype=float)) ** 2

    def stieltjes(self, w):
        wu, lower = _upper(w)
        W = self.width
        g = -1.0 / (np.sqrt(wu) * np.sqrt(wu - W))
        dg = -0.5 * g**3 * (2.0 * wu - W)
        return _reflect(g, lower), _reflect(dg, lower)

    def scale(self):
        return 0.5 * self.width, 0.5 * self.width


# unit-integral shapes phi(x) for the scaled family nu0(E) = phi(E/a)/a
PROFILES = {
    "gaussian": 1.0 / np.sqrt(2 * np.pi),
    "box": 1.0,
    "lorentzian": 1.0 / np.pi,
}


@dataclass(frozen=True)
class ScaledFlat(DensityOfStates):
    """``nu0(E) = phi(E/a)/a`` for a named unit-integral profile ``phi``.

    With ``a`` much larger than every other energy this is the "almost flat"
    reservoir; ``phi0`` is ``phi(0)``.
    """

    profile: str = "gaussian"
    a: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")

    @property
    def phi0(self):
        return PROFILES[self.profile]

    def support(self):
        if self.profile == "box":
            return (-0.5 * self.a, 0.5 * self.a)
        return (-np.inf, np.inf)

    def pdf(self, E):
        x = np.asarray(E, dtype=float) / self.a
        if self.profile == "gaussian":
            p = np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
        elif self.profile == "box":
            p = np.where(np.abs(x) < 0.5, 1.0, 0.0)
        else:
            p = 1.0 / (np.pi * (1.0 + x * x))
        return p / self.a

    def cdf(self, E):
        x = np.asarray(E, dtype=float) / self.a
        if self.profile == "gaussian":
            return special.ndtr(x)
        if self.profile == "box":
            return np.clip(x + 0.5, 0.0, 1.0)
        return 0.5 + np.arctan(x) / np.pi

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.profile == "gaussian":
            return self.a * special.ndtri(u)
        if self.profile == "box":
            return self.a * (u - 0.5)
        return self.a * np.tan(np.pi * (u - 0.5))

    def stieltjes(self, w):
        if self.profile == "gaussian":
            return _gauss_stieltjes(w, 0.0, self.a)
        wu, lower = _upper(w)
        a = self.a
        if self.profile == "box":
            g = (np.log(0.5 * a - wu) - np.log(-0.5 * a - wu)) / a
            dg = (1.0 / (wu - 0.5 * a) - 1.0 / (wu + 0.5 * a)) / a
        else:
            g = -1.0 / (wu + 1j * a)
            dg = 1.0 / (wu + 1j * a) ** 2
        return _reflect(g, lower), _reflect(dg, lower)

    def scale(self):
        return 0.0, self.a

    def singular_points(self):
        if self.profile == "box":
            return [-0.5 * self.a, 0.5 * self.a]
        return []


@dataclass(frozen=True, eq=False)
class Tabulated(DensityOfStates):
    """Piecewise-linear density on a strictly increasing grid, zero outside.

    Values are rescaled so that the (exact) trapezoid integral is one.
    """

    grid: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    values: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0]))

    def __post_init__(self):
        x = np.asarray(self.grid, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0):
            raise ValueError("Tabulated grid must be strictly increasing")
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise ValueError("Tabulated values must be finite and non-negative")
        mass = np.trapezoid(y, x)
        if not mass > 0:
            raise ValueError("Tabulated density has zero mass")
        object.__setattr__(self, "grid", x)
        object.__setattr__(self, "values", y / mass)
        seg = 0.5 * (y[1:] + y[:-1]) * np.diff(x) / mass
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))

    @classmethod
    def from_csv(cls, path):
        """Load a two-column (energy, density) CSV; a header row is optional."""
        rows = []
        with open(Path(path), newline="", encoding="utf-8") as fh:
            for rec in csv.reader(fh):
                if not rec or not "".join(rec).strip():
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except ValueError:
                    if rows:
                        raise
                    continue  # header
        arr = np.array(rows)
        return cls(grid=arr[:, 0], values=arr[:, 1])

    def support(self):
        return (self.grid[0], self.grid[-1])

    def pdf(self, E):
        E = np.asarray(E, dtype=float)
        out = np.interp(E, self.grid, self.values)
        return np.where((E < self.grid[0]) | (E > self.grid[-1]), 0.0, out)

    def cdf(self, E):
        E = np.clip(np.asarray(E, dtype=float), self.grid[0], self.grid[-1])
        x, y = self.grid, self.values
        i = np.clip(np.searchsorted(x, E, side="right") - 1, 0, x.size - 2)
        dx = E - x[i]
        slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i])
        return self._cum[i] + y[i] * dx + 0.5 * slope * dx * dx

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        lo = np.full(u.shape, self.grid[0])
        hi = np.full(u.shape, self.grid[-1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo, initial=0.0) < 1e-13 * max(1.0, np.abs(self.grid).max()):
                break
        return 0.5 * (lo + hi)

    def stieltjes(self, w):
        w = np.asarray(w, dtype=complex)
        x, y = self.grid, self.values
        ww = w[..., None]
        x0, x1 = x[:-1], x[1:]
        c0 = y[:-1]
        c1 = (y[1:] - y[:-1]) / (x1 - x0)
        logr = np.log(x1 - ww) - np.log(x0 - ww)
        alpha = c0 + c1 * (ww - x0)
        g = np.sum(alpha * logr + c1 * (x1 - x0), axis=-1)
        dg = np.sum(alpha * (1.0 / (x0 - ww) - 1.0 / (x1 - ww)) + c1 * logr, axis=-1)
        return g, dg

    def scale(self):
        mean = np.sum(self.values * self.grid) / np.sum(self.values)
        return mean, 0.5 * (self.grid[-1] - self.grid[0])

    def singular_points(self):
        return list(self.grid)


@dataclass(frozen=True, eq=False)
class DiscreteLevels(DensityOfStates):
    """Weighted point measure ``sum_j weights[j] delta(E - nodes[j])``.

    Not a density in the strict sense; it is the quadrature measure shared by
    the Nystrom solvers and the finite-n engine.
    """

    nodes: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    weights: np.ndarray = None

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        wts = np.full(x.size, 1.0 / x.size) if self.weights is None else np.asarray(self.weights, float)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", wts)

    def support(self):
        return (self.nodes.min(), self.nodes.max())

    def pdf(self, E):
        raise DomainError("a discrete measure has no pointwise density")

    def stieltjes(self, w):
        w = np.asarray(w, dtype=complex)
        d = 1.0 / (self.nodes - w[..., None])
        return d @ self.weights, (d * d) @ self.weights

    def scale(self):
        mean = self.weights @ self.nodes
        return mean, np.sqrt(self.weights @ (self.nodes - mean) ** 2) + 1e-300


@dataclass(frozen=True)
class ThermoPoint:
    """Energy per subsystem, local inverse temperature and rate function value."""

    e: float
    beta: float
    sJ: float


def eval_dos(dos, E):
    """Evaluate ``nu0(E)``."""
    return dos.pdf(E)


def rate_function(dos, J, e, h=1e-5):
    """Rate function ``s_J(e) = log(nu0(J e)) / J`` and ``beta = s_J'(e)``.

    For :class:`GaussianConvolution` the J-fold density is rebuilt with the
    requested `J` and everything is closed form.  For :class:`Tabulated` the
    table is taken as ``nu0`` itself and the derivative is a central finite
    difference of ``log nu0``.
    """
    if isinstance(dos, GaussianConvolution):
        g = dos.with_J(J)
        return ThermoPoint(e=e, beta=(dos.e0 - e) / dos.a**2, sJ=float(g.logpdf(J * e)) / J)
    if isinstance(dos, Tabulated):
        E = J * e
        lo, hi = dos.support()
        if not (lo < E - h and E + h < hi) or dos.pdf(E) <= 0:
            raise DomainError(f"J*e = {E} is outside the support of the tabulated density")
        lp, lm = np.log(dos.pdf(E + h)), np.log(dos.pdf(E - h))
        return ThermoPoint(e=e, beta=float((lp - lm) / (2 * h)), sJ=float(np.log(dos.pdf(E))) / J)
    raise TypeError(f"rate_function needs a GaussianConvolution or Tabulated density, got {type(dos).__name__}")


def local_gibbs_ratio(dos, J, e, eps):
    """``nu0(J e + eps) / nu0(J e)``; tends to ``exp(beta eps)`` as J grows."""
    if isinstance(dos, GaussianConvolution):
        g = dos.with_J(J)
        return float(np.exp(g.logpdf(J * e + eps) - g.logpdf(J * e)))
    den = dos.pdf(J * e)
    if den <= 0:
        raise DomainError("nu0(J e) vanishes")
    return float(dos.pdf(J * e + eps) / den)


def quantile_levels(dos, n):
    """Mid-quantile level placement ``E_j = F^{-1}((j - 1/2) / n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = (np.arange(1, n + 1) - 0.5) / n
    return np.asarray(dos.quantile(u), dtype=float)
