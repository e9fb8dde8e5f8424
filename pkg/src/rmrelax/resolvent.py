"""Self-consistent one-point functions in the large-n limit.

For the composite Hamiltonian with coupling strength `v` the averaged
one-point functions ``r_+(z), r_-(z)`` solve

    r_a(z) = G0(z - s a + v**2 r_{-a}(z)),

with ``G0`` the Stieltjes transform of the reservoir density.  The shifted
argument ``w_a(z) = z - s a + v**2 r_{-a}(z)`` plays the role of a dressed
spectral parameter: the conditional one-point function is
``g_a(E, z) = 1 / (E - w_a(z))``.

Boundary values on the real axis are obtained from a short ladder of
imaginary parts and Richardson extrapolation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _quad
from .dos import DiscreteLevels, DomainError, GaussianConvolution, quantile_levels
from .state import ALPHAS

__all__ = [
    "Model",
    "SolverError",
    "ResolventField",
    "SpectralDensities",
    "SelfEnergyField",
    "Microcanonical",
    "Canonical",
    "TailRatio",
    "solve_one_point",
    "boundary_values",
    "spectral_density",
    "window_average",
    "conditional_density",
    "equilibrium_reduced",
    "tail_ratio",
    "solve_self_energy",
    "constant_kernel",
    "lorentzian_kernel",
    "box_kernel",
    "lorentzian_self_energy",
]

SINGULAR_TOL = 1e-4


class SolverError(RuntimeError):
    """Fixed-point iteration did not converge."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Model:
    """Two-level system with splitting 2s coupled with strength v to a reservoir."""

    dos: object
    s: float
    v: float

    def __post_init__(self):
        if not np.isfinite(self.s) or not np.isfinite(self.v):
            raise ValueError("s and v must be finite")
        if self.v < 0:
            raise ValueError("v must be non-negative")


# ---------------------------------------------------------------- one point


def _g0(dos, w):
    g, dg = dos.stieltjes(w)
    return np.asarray(g, dtype=complex), np.asarray(dg, dtype=complex)


def _residual(dos, s, v2, z, r):
    gp, dgp = _g0(dos, z - s + v2 * r[1])
    gm, dgm = _g0(dos, z + s + v2 * r[0])
    F = np.stack([r[0] - gp, r[1] - gm])
    return F, np.max(abs(F), axis=0), dgp, dgm


def _fixed_point(model, z, theta=0.5, tol=1e-10, max_iter=5000, newton=True, r0=None, strict=True):
    """Damped fixed point for r_a(z); returns (r, residual, iterations).

    Each sweep first tries a Newton step built from the analytic derivative
    of G0.  It is kept only if it lowers the residual and stays in the
    Herglotz class; otherwise the damped update ``r - theta * (r - G(r))``
    is taken.
    """
    dos, s, v = model.dos, model.s, model.v
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    sgn = np.sign(z.imag)
    if np.any(sgn == 0):
        raise DomainError("grid points must have Im z != 0")
    v2 = v * v
    if r0 is None or v == 0:
        r = np.stack([_g0(dos, z - s)[0], _g0(dos, z + s)[0]])
    else:
        r = np.array(r0, dtype=complex).reshape(2, -1)
    if v == 0:
        return r.reshape((2,) + shape), np.zeros(shape), 0
    res = np.full(z.size, np.inf)
    th = np.full(z.size, float(theta))
    active = np.arange(z.size)
    it = 0
    while active.size and it < max_iter:
        it += 1
        za, ra = z[active], r[:, active]
        F, new_res, dgp, dgm = _residual(dos, s, v2, za, ra)
        grew = new_res > res[active]
        th[active[grew]] *= 0.5
        th[active[~grew]] = np.minimum(th[active[~grew]] * 1.25, theta)
        res[active] = new_res
        done = new_res < tol
        keep = ~done
        za, ra, F, new_res = za[keep], ra[:, keep], F[:, keep], new_res[keep]
        act = active[keep]
        nxt = ra - th[act] * F
        if newton and act.size:
            a, b = v2 * dgp[keep], v2 * dgm[keep]
            with np.errstate(all="ignore"):
                x = -(F[0] + a * F[1]) / (1.0 - a * b)
                y = -F[1] + b * x
                cand = ra + np.stack([x, y])
                ok = np.all(np.isfinite(cand), axis=0) & np.all(cand.imag * sgn[act] > 0, axis=0)
            if np.any(ok):
                _, cres, _, _ = _residual(dos, s, v2, za[ok], cand[:, ok])
                good = np.flatnonzero(ok)[cres < new_res[ok]]
                nxt[:, good] = cand[:, good]
        r[:, act] = nxt
        active = act
    if active.size and strict:
        raise SolverError(f"one-point equations did not converge in {max_iter} iterations", float(res.max()))
    return r.reshape((2,) + shape), res.reshape(shape), it


def _solve(model, z, theta=0.5, tol=1e-10, max_iter=5000, newton=True):
    """Fixed point from the free resolvent, with continuation in Im z as fallback.

    Points that do not converge directly are re-solved along
    ``Re z + i * max(|Im z|, top / 4**k)``, warm-starting each stage from the
    previous one.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    r, res, it = _fixed_point(model, z, theta, tol, max_iter=min(200, max_iter), newton=newton, strict=False)
    bad = ~(res < tol)
    if np.any(bad):
        zb = z[bad]
        sg = np.sign(zb.imag)
        eta = abs(zb.imag)
        _, width = model.dos.scale()
        top = max(width, model.v, abs(model.s), 1e-3, eta.max())
        k = int(np.ceil(np.log(top / eta.min()) / np.log(4.0)))
        rb = None
        for j in range(k + 1):
            e = np.maximum(eta, top / 4.0**j)
            last = j == k
            rb, rs, itb = _fixed_point(model, zb.real + 1j * sg * e, theta, tol if last else 1e-8,
                                       max_iter=max_iter, newton=newton, r0=rb)
            it += itb
        r[:, bad] = rb
        res[bad] = rs
    return r.reshape((2,) + shape), res.reshape(shape), it


@dataclass(frozen=True, eq=False)
class ResolventField:
    """Solved one-point functions on a set of complex arguments.

    Attributes
    ----------
    model : Model
    grid : ndarray of complex
    values : ndarray, shape (2,) + grid.shape
        ``values[0] = r_+``, ``values[1] = r_-``.
    residual : ndarray
        Final fixed-point residual per grid point.
    """

    model: Model
    grid: np.ndarray
    values: np.ndarray
    residual: np.ndarray
    iterations: int = 0

    @property
    def s(self):
        return self.model.s

    @property
    def v(self):
        return self.model.v

    @property
    def dos(self):
        return self.model.dos

    @property
    def r_plus(self):
        return self.values[0]

    @property
    def r_minus(self):
        return self.values[1]

    def shifted(self):
        """Dressed arguments ``w_a(z) = z - s a + v^2 r_{-a}(z)``, shape like `values`."""
        v2 = self.v**2
        z = self.grid
        return np.stack([z - self.s + v2 * self.values[1], z + self.s + v2 * self.values[0]])

    def conditional(self, E):
        """``g_a(E, z) = 1/(E - w_a(z))`` with E broadcast against the grid."""
        w = self.shifted()
        return 1.0 / (np.asarray(E)[..., None] - w[:, None, ...]) if np.ndim(E) else 1.0 / (E - w)

    def herglotz_ok(self):
        return bool(np.all(self.values.imag * np.sign(self.grid.imag) > 0))

    def resolve(self, z, **kw):
        """Solve the same model on new arguments."""
        return solve_one_point(self.dos, self.s, self.v, z, **kw)


def solve_one_point(dos, s, v, grid, theta=0.5, tol=1e-10, max_iter=5000, newton=True):
    """Solve the coupled one-point equations on `grid`.

    Parameters
    ----------
    dos : DensityOfStates
    s, v : float
    grid : array_like of complex
        Arguments with ``Im z > 0``; lower half-plane points are accepted and
        solved by conjugation symmetry.
    theta : float
        Initial damping; halved at a point whenever its residual grows.

    Returns
    -------
    ResolventField

    Raises
    ------
    SolverError
        If some point has not converged after `max_iter` sweeps.
    """
    model = Model(dos, float(s), float(v))
    z = np.asarray(grid, dtype=complex)
    r, res, it = _solve(model, z, theta=theta, tol=tol, max_iter=max_iter, newton=newton)
    fld = ResolventField(model, z, r, res, it)
    if not fld.herglotz_ok():
        raise SolverError("solution left the Herglotz class", float(res.max()))
    return fld


def _as_model(obj):
    if isinstance(obj, Model):
        return obj
    if isinstance(obj, ResolventField):
        return obj.model
    raise TypeError(f"expected Model or ResolventField, got {type(obj).__name__}")


def boundary_values(field_or_model, lam, h=1e-4, tol=1e-13):
    """Richardson-extrapolated ``r_a(lam + i0)`` and a near-singular flag.

    Uses ``eta in {4h, 2h, h}``; the second-order estimate ``2 r(h) - r(2h)``
    is compared with the third-order one and points where they differ by more
    than ``pi * 1e-4`` are flagged.
    """
    model = _as_model(field_or_model)
    lam = np.asarray(lam, dtype=float)
    r4, _, _ = _solve(model, lam + 4j * h, tol=tol)
    r2, _, _ = _fixed_point(model, lam + 2j * h, tol=tol, r0=r4)
    r1, _, _ = _fixed_point(model, lam + 1j * h, tol=tol, r0=r2)
    best = (8.0 * r1 - 6.0 * r2 + r4) / 3.0
    second = 2.0 * r1 - r2
    flag = np.any(abs((best - second).imag) / np.pi > SINGULAR_TOL, axis=0)
    return best, flag


@dataclass(frozen=True, eq=False)
class SpectralDensities:
    """Boundary spectral densities ``nu_a(lam) = Im r_a(lam + i0) / pi``."""

    model: Model
    lam: np.ndarray
    nu: np.ndarray  # (2, N)
    boundary: np.ndarray  # (2, N) complex r_a(lam + i0)
    flag_singular: np.ndarray
    h: float

    @property
    def nu_plus(self):
        return self.nu[0]

    @property
    def nu_minus(self):
        return self.nu[1]

    def omega(self):
        """Microcanonical weights ``nu_a / (nu_+ + nu_-)`` (nan where both vanish)."""
        tot = self.nu.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, self.nu / tot, np.nan)

    def conditional(self, E):
        """``nu_a(E, lam)`` on an (E, lam) grid, shape (2, len(E), len(lam))."""
        return _conditional_from_boundary(self.model, np.atleast_1d(E), self.lam, self.boundary)


def spectral_density(field, lam, h=None, tol=1e-13):
    """Spectral densities on a real grid.

    Parameters
    ----------
    field : ResolventField or Model
    lam : array_like
    h : float, optional
        Smallest regulator of the ladder ``h, 2h, 4h``.  Defaults to
        ``max(1e-4, spacing / 4)`` with the median spacing of `lam`, so on
        coarse grids the ladder is coarse too and more points get flagged.
    """
    model = _as_model(field)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if h is None:
        sp = np.median(np.diff(np.sort(lam))) if lam.size > 1 else 0.0
        h = max(1e-4, sp / 4.0)
    rb, flag = boundary_values(model, lam, h=h, tol=tol)
    nu = np.maximum(rb.imag / np.pi, 0.0)
    return SpectralDensities(model, lam, nu, rb, flag, h)


def window_average(field, lam, eps, m=24):
    """``(2 eps)^-1 int_{lam-eps}^{lam+eps} nu_a`` by Gauss-Legendre, shape (2, N)."""
    model = _as_model(field)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    x, w = _quad.gauss_legendre(m)
    pts = lam[:, None] + eps * x[None, :]
    sd = spectral_density(model, pts.ravel(), h=max(1e-6, eps / 1000))
    nu = sd.nu.reshape(2, lam.size, m)
    return 0.5 * nu @ w


def _conditional_from_boundary(model, E, lam, rb):
    s, v2 = model.s, model.v**2
    out = np.empty((2, E.size, lam.size))
    for i, a in enumerate(ALPHAS):
        rm = rb[1 - i]
        x = E[:, None] + s * a - lam[None, :] - v2 * rm.real[None, :]
        y = v2 * np.maximum(rm.imag, 0.0)[None, :]  # drop negative round-off
        with np.errstate(invalid="ignore", divide="ignore"):
            out[i] = y / (x * x + y * y) / np.pi
    return out


def conditional_density(field, E, lam, h=1e-7):
    """``nu_a(E, lam) = Im g_a(E, lam + i0) / pi``, shape (2, len(E), len(lam)).

    This is a Lorentzian in E + s a - lam of half-width ``pi v^2 nu_{-a}(lam)``
    shifted by ``v^2 Re r_{-a}(lam + i0)``.
    """
    model = _as_model(field)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    E = np.atleast_1d(np.asarray(E, dtype=float))
    rb, _ = boundary_values(model, lam, h=h)
    return _conditional_from_boundary(model, E, lam, rb)


# -------------------------------------------------------------- equilibrium


@dataclass(frozen=True)
class Microcanonical:
    lam: float


@dataclass(frozen=True)
class Canonical:
    beta: float


def _spectral_window(model, beta=0.0):
    """Real interval carrying essentially all of ``exp(-beta lam) nu_a(lam)``."""
    c, w = model.dos.scale()
    lo, hi = model.dos.support()
    pad = abs(model.s) + 4.0 * model.v + 1e-9
    if np.isfinite(lo) and np.isfinite(hi):
        return lo - pad, hi + pad
    shift = -beta * w * w
    span = 14.0 * w + pad
    return min(c, c + shift) - span, max(c, c + shift) + span


def _boundary_direct(model, lam, sweeps=80):
    """``nu_a(lam)`` solved directly at ``lam + i0``, relatively accurate in tails.

    The ladder extrapolation is accurate in absolute terms only, which is not
    enough once the canonical weight ``exp(-beta lam)`` amplifies far tails.
    Here the equations are solved at an infinitesimal imaginary part and then
    swept with the undamped map, which contracts the relative error of the
    imaginary part wherever the density is small.
    """
    lam = np.asarray(lam, dtype=float)
    tiny = 1e-300
    r, _, _ = _solve(model, lam + 1j * tiny, tol=1e-13)
    dos, s, v2 = model.dos, model.s, model.v**2
    for _ in range(sweeps):
        rp = _g0(dos, lam + 1j * tiny - s + v2 * r[1])[0]
        rm = _g0(dos, lam + 1j * tiny + s + v2 * rp)[0]
        r = np.stack([rp, rm])
    return np.maximum(r.imag / np.pi, 0.0)


def _canonical_quadrature(model, beta, npts=4001):
    lo, hi = _spectral_window(model, beta)
    lam = np.linspace(lo, hi, npts)
    nu = _boundary_direct(model, lam)
    with np.errstate(divide="ignore"):
        logw = np.log(nu.sum(axis=0)) - beta * lam
    peak = np.max(logw)
    if not np.isfinite(peak):
        raise DomainError(f"canonical weights lost all mass at beta={beta}")
    keep = np.flatnonzero(logw > peak + np.log(1e-16))
    a, b = lam[max(keep[0] - 1, 0)], lam[min(keep[-1] + 1, npts - 1)]
    # refine on the truncated domain
    lam = np.linspace(a, b, npts)
    nu = _boundary_direct(model, lam)
    logb = -beta * lam
    wts = np.exp(logb - np.max(logb + np.log(nu.sum(axis=0) + 1e-300)))
    from scipy.integrate import simpson

    num = simpson(wts * nu, x=lam, axis=-1)
    tot = num.sum()
    if not tot > 0 or not np.isfinite(tot):
        raise DomainError(f"canonical weights lost all mass at beta={beta}")
    return num / tot


def equilibrium_reduced(densities, mode):
    """Diagonal equilibrium reduced matrix of the two-level system.

    Parameters
    ----------
    densities : Model, ResolventField or SpectralDensities
    mode : Microcanonical or Canonical

    Returns
    -------
    ndarray, shape (2, 2), complex, with zero off-diagonal entries.
    """
    model = densities.model if isinstance(densities, (SpectralDensities, ResolventField)) else densities
    if isinstance(mode, Microcanonical):
        nu = spectral_density(model, [mode.lam], h=1e-7).nu[:, 0]
        tot = nu.sum()
        if not tot > 0:
            raise DomainError(f"no spectral weight at lambda={mode.lam}")
        p = nu / tot
    elif isinstance(mode, Canonical):
        if mode.beta == 0:
            p = np.array([0.5, 0.5])
        else:
            p = _canonical_quadrature(model, mode.beta)
    else:
        raise TypeError(f"unknown equilibrium mode {mode!r}")
    return np.diag(p).astype(complex)


# ---------------------------------------------------------------- tails


@dataclass(frozen=True)
class TailRatio:
    """Measured ``nu_a(Je)/nu0(Je)`` next to its large-J limit ``exp(-beta s a)``."""

    ratio: np.ndarray  # (2,)
    limit: np.ndarray  # (2,)
    beta: float
    r_abs: np.ndarray  # |r_a(Je + i0)|
    bound: float

    @property
    def error(self):
        return abs(self.ratio - self.limit)


def tail_ratio(dos, s, v, J, e):
    """Ratio of the dressed to the bare density deep in the reservoir tail.

    `dos` supplies ``a`` and ``e0``; the J-fold density is rebuilt with the
    requested `J`.  The bound ``|r_a(E + i0)| <= sqrt(pi / (2 J a^2))`` is
    checked on the solved values.
    """
    if not isinstance(dos, GaussianConvolution):
        raise TypeError("tail_ratio needs a GaussianConvolution density")
    g = dos.with_J(J)
    E = J * e
    nu0 = float(g.pdf(E))
    if not nu0 > 1e-300:
        raise DomainError(f"nu0(Je) = {nu0:.3g} underflows; use a smaller J")
    model = Model(g, float(s), float(v))
    # the density varies on the scale sqrt(J) a, so a small regulator is exact enough
    rb, _ = boundary_values(model, [E], h=1e-6 * g.sigma)
    nu = rb[:, 0].imag / np.pi
    beta = (dos.e0 - e) / dos.a**2
    bound = float(np.sqrt(np.pi / (2.0 * J * dos.a**2)))
    r_abs = abs(rb[:, 0])
    if np.any(r_abs > bound * (1 + 1e-9)):
        raise AssertionError(f"|r(E+i0)| = {r_abs.max():.6g} exceeds the bound {bound:.6g}")
    lim = np.exp(-beta * s * np.array(ALPHAS, dtype=float))
    return TailRatio(nu / nu0, lim, beta, r_abs, bound)


# ---------------------------------------------------------------- band model


def constant_kernel():
    """``f(E, E') = 1``, the full random matrix."""
    return lambda E, Ep: np.ones(np.broadcast_shapes(np.shape(E), np.shape(Ep)))


def lorentzian_kernel(b):
    """``f(E, E') = 1 / (1 + ((E - E')/b)^2)``."""
    return lambda E, Ep: 1.0 / (1.0 + ((np.asarray(E) - np.asarray(Ep)) / b) ** 2)


def box_kernel(b):
    """``f(E, E') = 1`` for ``|E - E'| <= b``, else 0."""
    return lambda E, Ep: (abs(np.asarray(E) - np.asarray(Ep)) <= b).astype(float)


@dataclass(frozen=True, eq=False)
class SelfEnergyField:
    """Band-model self-energies ``Delta_a(E_i, z)`` on Nystrom nodes.

    Attributes
    ----------
    delta : ndarray, shape (2, len(grid), len(nodes))
    """

    model: Model
    kernel: object
    nodes: np.ndarray
    weights: np.ndarray
    grid: np.ndarray
    delta: np.ndarray
    residual: np.ndarray
    K: np.ndarray = field(repr=False, default=None)

    def conditional(self):
        """``g_a(E_j, z) = 1/(E_j + s a - z - Delta_{-a}(E_j, z))``, shape like `delta`."""
        s = self.model.s
        z = self.grid[:, None]
        E = self.nodes[None, :]
        return np.stack([1.0 / (E + s - z - self.delta[1]), 1.0 / (E - s - z - self.delta[0])])

    def at(self, E):
        """Nystrom interpolation of Delta_a at arbitrary energies, shape (2, nz, len(E))."""
        E = np.atleast_1d(np.asarray(E, dtype=float))
        Kx = self.kernel(E[:, None], self.nodes[None, :]) * self.weights[None, :]
        g = self.conditional()
        return self.model.v**2 * np.einsum("ej,azj->aze", Kx, g)


def solve_self_energy(dos, s, v, kernel, grid, n=400, nodes=None, weights=None,
                      theta=0.5, tol=1e-10, max_iter=5000, newton=True):
    """Solve the band-model self-energy equations by Nystrom discretization.

    ``Delta_a(E, z) = v^2 int f(E, E') nu0(E') dE' / (E' + s a - z - Delta_{-a}(E', z))``

    The E' integral runs over `nodes` with `weights` (a quadrature for the
    measure ``nu0(E') dE'``); by default the ``n`` mid-quantile levels of
    `dos` with equal weights.

    Raises
    ------
    ValueError
        If the kernel is not symmetric and non-negative on the nodes.
    SolverError
        On non-convergence.
    """
    model = Model(dos, float(s), float(v))
    if nodes is None:
        nodes = quantile_levels(dos, n)
        weights = np.full(nodes.size, 1.0 / nodes.size)
    nodes = np.asarray(nodes, dtype=float)
    weights = np.full(nodes.size, 1.0 / nodes.size) if weights is None else np.asarray(weights, float)
    K = np.asarray(kernel(nodes[:, None], nodes[None, :]), dtype=float)
    if not np.allclose(K, K.T, atol=1e-12) or K.min() < 0:
        raise ValueError("kernel: must be symmetric and non-negative")
    z = np.atleast_1d(np.asarray(grid, dtype=complex))
    if np.any(z.imag == 0):
        raise DomainError("grid points must have Im z != 0")
    v2 = v * v
    Kq = K * weights[None, :]
    E = nodes[None, :]
    zz = z[:, None]
    sgn = np.sign(z.imag)[:, None]

    def rhs(d):
        gp = 1.0 / (E + s - zz - d[1])
        gm = 1.0 / (E - s - zz - d[0])
        return np.stack([v2 * gp @ Kq.T, v2 * gm @ Kq.T]), gp, gm

    d = rhs(np.zeros((2, z.size, nodes.size), complex))[0]
    res = np.full(z.size, np.inf)
    th = np.full(z.size, float(theta))
    nn = nodes.size
    for it in range(max_iter):
        G, gp, gm = rhs(d)
        F = d - G
        new = np.max(abs(F), axis=(0, 2))
        th[new > res] *= 0.5
        res = new
        if np.all(res < tol):
            break
        step = -th[None, :, None] * F
        if newton and nn <= 800:
            for k in np.flatnonzero((res < 1e-3) & (res >= tol)):
                Bp = v2 * Kq * (gp[k] ** 2)[None, :]
                Bm = v2 * Kq * (gm[k] ** 2)[None, :]
                Jm = np.block([[np.eye(nn), -Bp], [-Bm, np.eye(nn)]])
                dx = np.linalg.solve(Jm, -np.concatenate([F[0, k], F[1, k]]))
                step[0, k], step[1, k] = dx[:nn], dx[nn:]
        d = d + step
    else:
        raise SolverError("self-energy equations did not converge", float(res.max()))
    if np.any(d.imag * sgn[None] < -1e-14):
        raise SolverError("self-energy left the Herglotz class", float(res.max()))
    return SelfEnergyField(model, kernel, nodes, weights, z, d, res, K)


def lorentzian_self_energy(A, b, s, E, z, first_order=False):
    """Closed-form self-energies of the Lorentzian band in the flat regime.

    Here ``A = pi v^2 nu0`` with ``nu0`` the (locally flat) reservoir density
    and ``b`` the band width of the kernel.  The full form solves

        Delta_a = A b / (E + s a - z - i b sgn(Im z) - Delta_{-a}),

    a quadratic; ``first_order=True`` returns ``A b / (s a - i b sgn(Im z))``.
    The full form drops the shift ``z -> z + i b`` inside ``Delta_{-a}``
    (the exact flat-band answer is a continued fraction), so it is accurate
    to relative order ``A / b``.

    Returns
    -------
    ndarray, shape (2,) + broadcast shape of E and z.
    """
    E = np.asarray(E, dtype=float)
    z = np.asarray(z, dtype=complex)
    sg = np.sign(z.imag)
    c = A * b
    if first_order:
        return np.stack(np.broadcast_arrays(c / (s - 1j * b * sg) + 0 * E * z, c / (-s - 1j * b * sg) + 0 * E * z))
    cp = E + s - z - 1j * b * sg
    cm = E - s - z - 1j * b * sg
    # cp * D^2 - cp cm D + c cm = 0 for D = Delta_+
    disc = np.sqrt((cp * cm) ** 2 - 4.0 * cp * c * cm)
    r1 = (cp * cm + disc) / (2.0 * cp)
    r2 = (cp * cm - disc) / (2.0 * cp)
    dp = np.where(abs(r1) < abs(r2), r1, r2)
    dm = c / (cm - dp)
    return np.stack([dp, dm])
