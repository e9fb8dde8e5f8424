"""Large-n time evolution of the reduced density matrix.

The reservoir starts in a single level of energy E and the two-level system
in ``rho0``.  Averaged over the ensemble, the Laplace transform of the
reduced matrix is a single real integral of the two-point function

    rho~_{ad}(p) = (2 pi)^-1 int dL Phi_{ad}(L + i p/2, L - i p/2),

    Phi_{ad}(z1, z2) = [g_a(E,z1) g_d(E,z2) rho_{ad}(0)
                        + v^2 r_{ad}(z1,z2) g_{-a}(E,z1) g_{-d}(E,z2) rho_{-a,-d}(0)]
                       / (1 - v^4 r_{ad}(z1,z2) r_{-a,-d}(z1,z2)),

with ``r_{ad}(z1,z2) = int nu0(E) g_a(E,z1) g_d(E,z2) dE``, available in
closed form from the one-point functions.  The time dependence is recovered
by a Bromwich integral along ``Re p = c``.  Before inverting, the pole at
``p = 0`` (the stationary state) and a simple relaxing reference term are
subtracted.  The remainder is smooth on the Bromwich line and is integrated
panel-wise with exact oscillatory weights.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _quad
from .dos import DomainError
from .resolvent import (
    Model,
    ResolventField,
    SolverError,
    _fixed_point,
    _solve,
    _spectral_window,
    boundary_values,
    solve_self_energy,
    spectral_density,
)
from .state import ALPHAS, reduced_state

__all__ = [
    "EvolutionResult",
    "TwoPointKernel",
    "Stationary",
    "evolve_analytic",
    "transfer_analytic",
    "stationary_reduced",
    "stationary_rin",
    "rho0_dependence_diagnostic",
    "flat_regime_closed_form",
    "flat_offdiagonal_rate",
    "two_point",
    "band_two_point",
]

# channel k couples rho_{a d}(t) to rho_{b g}(0); (a, d, b, g) as level indices
CHANNELS = ((0, 0, 0, 0), (0, 0, 1, 1), (1, 1, 0, 0), (1, 1, 1, 1), (0, 1, 0, 1), (0, 1, 1, 0))


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Reduced-matrix trajectory.

    Attributes
    ----------
    times : ndarray, shape (nt,)
    rho : ndarray, shape (nt, 2, 2), complex
    stationary : ndarray, shape (2, 2)
        The ``t -> infinity`` limit.
    transfer : ndarray, shape (nt, 2, 2, 2, 2) or None
        ``rho_{ad}(t) = sum_{bg} transfer[t, a, d, b, g] rho_{bg}(0)``.
    parts : dict
        ``stationary`` and ``regular`` contributions, each (nt, 2, 2).
    rho_stderr : ndarray or None
        Standard errors, for Monte Carlo estimates.
    """

    times: np.ndarray
    rho: np.ndarray
    stationary: np.ndarray
    transfer: np.ndarray = None
    parts: dict = field(default_factory=dict)
    rho_stderr: np.ndarray = None
    p_stderr: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def trace(self):
        return np.trace(self.rho, axis1=1, axis2=2).real

    def probabilities(self):
        """``p[t, a, g]``: probability of level a at t when started in level g."""
        if self.transfer is None:
            raise ValueError("no transfer tensor stored")
        return np.einsum("taagg->tag", self.transfer).real


# ------------------------------------------------------------ two point


@dataclass(frozen=True, eq=False)
class TwoPointKernel:
    """Averaged products of resolvent entries at (z1, z2) for reservoir level E.

    ``r2[a, d] = r_{ad}(z1, z2)``, ``D[a, d] = 1 - v^4 r_{ad} r_{-a,-d}`` and
    ``r4[a, b, g, d] = avg sum_j R_{aj,bk}(z1) R_{dj,gk}(z2)``, so that
    ``Phi_{ad} = sum_{bg} r4[a, b, g, d] rho_{bg}(0)``.
    """

    r2: np.ndarray
    D: np.ndarray
    r4: np.ndarray
    flagged: np.ndarray
    S: tuple = None
    s_vec: np.ndarray = None

    def phi(self, rho0):
        return np.einsum("abgd...,bg->ad...", self.r4, np.asarray(rho0))


def _pair_terms(model, E, r1, r2, z1, z2):
    """g's, r_{ad}, D from one-point values at z1 (r1) and z2 (r2), shape (2,) + shape."""
    s, v2 = model.s, model.v**2
    w1 = np.stack([z1 - s + v2 * r1[1], z1 + s + v2 * r1[0]])
    w2 = np.stack([z2 - s + v2 * r2[1], z2 + s + v2 * r2[0]])
    g1 = 1.0 / (E - w1)
    g2 = 1.0 / (E - w2)
    rr = (r1[:, None] - r2[None, :]) / (w1[:, None] - w2[None, :])  # rr[a, d]
    D = 1.0 - v2 * v2 * rr * rr[::-1, ::-1]
    return g1, g2, rr, D


def two_point(field, E, z1, z2):
    """Scalar-model two-point kernel at arbitrary (z1, z2) off the real axis."""
    model = field.model if isinstance(field, ResolventField) else field
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    z1, z2 = np.broadcast_arrays(z1, z2)
    r1, _, _ = _solve(model, z1, tol=1e-13)
    r2, _, _ = _solve(model, z2, tol=1e-13)
    g1, g2, rr, D = _pair_terms(model, E, r1, r2, z1, z2)
    v2 = model.v**2
    r4 = np.zeros((2, 2, 2, 2) + z1.shape, dtype=complex)
    for a in range(2):
        for d in range(2):
            r4[a, a, d, d] += g1[a] * g2[d] / D[a, d]
            r4[a, 1 - a, 1 - d, d] += v2 * rr[a, d] * g1[1 - a] * g2[1 - d] / D[a, d]
    return TwoPointKernel(rr, D, r4, abs(D) < 1e-8)


def band_two_point(selfenergy, E, z1, z2):
    """Band-model two-point kernel by Nystrom discretization.

    With ``S_{ad}`` the matrix ``v^2 f(E_i, E_j) q_j g_a(E_j, z1) g_d(E_j, z2)``
    the ladder sum for a source ``c_{ad}`` at the level E reads

        u_{ad} = (1 - S_{-a,-d} S_{ad})^-1 (b_{ad} + S_{-a,-d} b_{-a,-d}),
        Y_{ad} = c_{ad} + sum_j q_j g_a(E_j,z1) g_d(E_j,z2) u_{ad}(E_j),

    with ``b_{ad}(E_i) = v^2 f(E_i, E) c_{-a,-d}``.  For ``f = 1`` this is
    the scalar kernel returned by :func:`two_point`.
    """
    se = selfenergy
    model = se.model
    s, v2 = model.s, model.v**2
    z = np.array([z1, z2], dtype=complex)
    sol = solve_self_energy(model.dos, s, model.v, se.kernel, z, nodes=se.nodes, weights=se.weights)
    gn = sol.conditional()  # (2, 2, n): [alpha, which z, node]
    dE = sol.at([E])[:, :, 0]  # Delta_a(E, z)
    gE = np.stack([1.0 / (E + s - z - dE[1]), 1.0 / (E - s - z - dE[0])])  # (alpha, which z)
    q = se.weights
    fE = se.kernel(se.nodes, E) * np.ones_like(se.nodes)
    n = se.nodes.size
    S = np.empty((2, 2, n, n), dtype=complex)
    for a in range(2):
        for d in range(2):
            S[a, d] = v2 * sol.K * (q * gn[a, 0] * gn[d, 1])[None, :]
    svec = S.sum(axis=-1)
    r2 = np.einsum("j,aj,dj->ad", q, gn[:, 0], gn[:, 1])
    D = 1.0 - v2 * v2 * r2 * r2[::-1, ::-1]
    r4 = np.zeros((2, 2, 2, 2), dtype=complex)
    flagged = np.zeros((2, 2), bool)
    eye = np.eye(n)
    for a in range(2):
        for d in range(2):
            M = eye - S[1 - a, 1 - d] @ S[a, d]
            flagged[a, d] = np.linalg.svd(M, compute_uv=False).min() < 1e-10
            for b in range(2):
                for g in range(2):
                    c = np.zeros((2, 2), dtype=complex)
                    c[b, g] = gE[b, 0] * gE[g, 1]
                    bad = v2 * fE * c[1 - a, 1 - d]
                    bmad = v2 * fE * c[a, d]
                    u = np.linalg.solve(M, bad + S[1 - a, 1 - d] @ bmad)
                    r4[a, b, g, d] = c[a, d] + np.sum(q * gn[a, 0] * gn[d, 1] * u)
    return TwoPointKernel(r2, D, r4, flagged, S=S, s_vec=svec)


# ------------------------------------------------------------ line function


class _Line:
    """``r_a(x + i y0)`` for real x, piecewise Chebyshev on adaptive panels.

    Outside ``[lo, hi]`` values are solved directly.
    """

    m = 16

    def __init__(self, model, y0, lo, hi, centers, widths, tol=1e-11, max_panel=None):
        self.model, self.y0, self.lo, self.hi = model, y0, lo, hi
        j = np.arange(self.m)
        self.t = np.cos((2 * j + 1) * np.pi / (2 * self.m))
        self.bw = (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * self.m))
        br = _quad.graded_breaks(centers, widths, lo, hi, ratio=2.0, max_panel=max_panel)
        probe = np.array([-0.83, -0.31, 0.17, 0.67])
        todo = [(a, b) for a, b in zip(br[:-1], br[1:])]
        done_p, done_v = [], []
        for _ in range(60):
            if not todo:
                break
            ab = np.array(todo)
            mid, half = ab.mean(axis=1), 0.5 * (ab[:, 1] - ab[:, 0])
            xs = mid[:, None] + half[:, None] * np.concatenate([self.t, probe])[None, :]
            vals = self.direct(xs.ravel()).reshape(2, len(todo), -1)
            nodes_v, probe_v = vals[..., : self.m], vals[..., self.m :]
            interp = self._bary(probe, nodes_v)
            err = np.max(abs(interp - probe_v), axis=(0, 2))
            scale = 1.0 + np.max(abs(nodes_v), axis=(0, 2))
            ok = (err <= tol * scale) | (half < 1e-13 * (1 + abs(mid)))
            nxt = []
            for i in range(len(todo)):
                if ok[i]:
                    done_p.append(todo[i])
                    done_v.append(nodes_v[:, i])
                else:
                    a, b = todo[i]
                    nxt += [(a, 0.5 * (a + b)), (0.5 * (a + b), b)]
            todo = nxt
        if todo:
            raise SolverError("line interpolation did not resolve", float(err.max()))
        order = np.argsort([p[0] for p in done_p])
        pan = np.array(done_p)[order]
        self.breaks = np.concatenate([pan[:, 0], pan[-1:, 1]])
        self.vals = np.stack([done_v[i] for i in order], axis=1)  # (2, npan, m)

    def direct(self, x):
        r, _, _ = _solve(self.model, np.asarray(x) + 1j * self.y0, tol=1e-13)
        return r

    def _bary(self, tq, vals):
        # tq: (k,) local points shared by all panels; vals (2, npan, m)
        d = tq[:, None] - self.t[None, :]
        wgt = self.bw[None, :] / d
        return np.einsum("km,apm->apk", wgt, vals) / wgt.sum(axis=1)[None, None, :]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty((2,) + x.shape, dtype=complex)
        inside = (x >= self.lo) & (x <= self.hi)
        if np.any(~inside):
            out[:, ~inside] = self.direct(x[~inside])
        xi = x[inside]
        if xi.size:
            k = np.clip(np.searchsorted(self.breaks, xi, side="right") - 1, 0, self.breaks.size - 2)
            a, b = self.breaks[k], self.breaks[k + 1]
            tl = (2.0 * xi - a - b) / (b - a)
            d = tl[:, None] - self.t[None, :]
            d = np.where(d == 0, 1e-300, d)
            wgt = self.bw[None, :] / d
            num = np.einsum("km,akm->ak", wgt, self.vals[:, k, :])
            out[:, inside] = num / wgt.sum(axis=1)[None, :]
        return out


# ------------------------------------------------------------ stationary


@dataclass(frozen=True)
class Stationary:
    """``t -> infinity`` diagonal and transition probabilities ``p[a, g]``."""

    rho: np.ndarray  # (2,)
    p: np.ndarray  # (2, 2), columns sum to 1
    norm: np.ndarray  # int nu_g(E, lam) dlam per g


def _level_positions(model, E, y0=1e-12, iters=60):
    """Approximate centers ``x_a`` of ``g_a(E, x + i y0)`` and their widths."""
    s, v2 = model.s, model.v**2
    x = np.array([E + s, E - s], dtype=float)
    r = None
    for _ in range(iters):
        r, _, _ = _solve(model, x + 1j * max(y0, 1e-12), tol=1e-12)
        xn = E + np.array([s, -s]) - v2 * np.array([r[1, 0].real, r[0, 1].real])
        if np.all(abs(xn - x) < 1e-12 * (1 + abs(x))):
            x = xn
            break
        x = 0.5 * (x + xn)
    r, _, _ = _solve(model, x + 1j * max(y0, 1e-12), tol=1e-12)
    width = y0 + v2 * np.array([r[1, 0].imag, r[0, 1].imag])
    return x, width


def _features(model, E, y0):
    """Real positions where the line functions vary quickly, with widths."""
    x, w = _level_positions(model, E, y0)
    centers = list(x)
    widths = list(np.maximum(w, y0) / 2.0)
    lo, hi = model.dos.support()
    for e in (lo, hi):
        if np.isfinite(e):
            for a in ALPHAS:
                centers.append(e + model.s * a)
                widths.append(max(y0, 1e-9) / 2.0)
    return np.array(centers), np.array(widths), x, w


def stationary_reduced(field, E, rho0=None, m=12):
    """Long-time diagonal and transition probabilities for reservoir level E.

    ``rho_aa(E, inf) = int omega_a(lam) sum_g nu_g(E, lam) rho_gg(0) dlam`` and
    ``p_ag = int omega_a(lam) nu_g(E, lam) dlam``.

    Returns
    -------
    Stationary
    """
    model = field.model if isinstance(field, ResolventField) else field
    rho0 = np.diag([0.5, 0.5]) if rho0 is None else reduced_state(rho0)
    if model.v == 0:
        p = np.eye(2)
        return Stationary(np.diag(rho0).real.copy(), p, np.ones(2))
    if not model.dos.pdf(E) > 0:
        raise DomainError(f"nu0(E) vanishes at E={E}")
    s, v2 = model.s, model.v**2
    x, w = _level_positions(model, E)
    lo, hi = _spectral_window(model)
    lo, hi = min(lo, x.min() - 10 * w.max()), max(hi, x.max() + 10 * w.max())
    cent = list(x)
    wid = list(np.maximum(w, 1e-12) / 4.0)
    for e in model.dos.singular_points()[:8]:
        for a in ALPHAS:
            cent.append(e + s * a)
            wid.append(1e-7)
    _, scale = model.dos.scale()
    nodes, wts = _quad.line_nodes(cent, wid, lo, hi, tail_scale=max(scale, hi - lo), m=m,
                                  max_panel=(hi - lo) / 40)
    rb, _ = boundary_values(model, nodes, h=1e-9 * max(scale, 1.0))
    nu = np.maximum(rb.imag / np.pi, 0.0)
    tot = nu.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        om = np.where(tot > 0, nu / np.where(tot > 0, tot, 1.0), 0.5)
    # nu_g(E, lam): Lorentzian from r_{-g}(lam + i0)
    cond = np.empty((2, nodes.size))
    for i, a in enumerate(ALPHAS):
        rm = rb[1 - i]
        X = E + s * a - nodes - v2 * rm.real
        Y = v2 * np.maximum(rm.imag, 0.0)
        cond[i] = Y / (X * X + Y * Y) / np.pi
    p = np.einsum("ak,gk,k->ag", om, cond, wts)
    norm = cond @ wts
    rho_inf = p @ np.diag(rho0).real
    return Stationary(rho_inf, p, norm)


def stationary_rin(field, E, m=12):
    """The rho0-independent candidate ``1/2 int (nu_+(E,l) + nu_-(E,l)) nu_a(l) / (nu_+ + nu_-) dl``."""
    st = stationary_reduced(field, E, np.diag([0.5, 0.5]), m=m)
    return 0.5 * st.p.sum(axis=1)


def rho0_dependence_diagnostic(field, npts=20001):
    """``int (nu_+ - nu_-)^2 / (nu_+ + nu_-) dlam``; zero iff the long-time state forgets rho0."""
    model = field.model if isinstance(field, ResolventField) else field
    lo, hi = _spectral_window(model)
    lam = np.linspace(lo, hi, npts)
    nu = spectral_density(model, lam, h=1e-9).nu
    tot = nu.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(tot > 1e-300, (nu[0] - nu[1]) ** 2 / np.where(tot > 1e-300, tot, 1.0), 0.0)
    from scipy.integrate import simpson

    return float(simpson(f, x=lam))


# ------------------------------------------------------------ evolution


def _laplace_channels(model, E, line, omega, m=8, chunk=64):
    """Laplace-domain transfer channels at ``p = 2 y0 + i omega``, shape (len(omega), 6)."""
    y0, v2 = line.y0, model.v**2
    _, scale = model.dos.scale()
    tail = max(scale, line.hi - line.lo)
    out = np.empty((omega.size, 6), dtype=complex)
    for start in range(0, omega.size, chunk):
        om = omega[start : start + chunk]
        Ls, Ws, seg = [], [], []
        for k, w in enumerate(om):
            br = np.union1d(line.breaks + 0.5 * w, line.breaks - 0.5 * w)
            br = _quad.balance(_quad._merge_close(br, frac=0.05))
            x, wt = _quad.panel_nodes(br, m)
            xl, wl = _quad.tail_nodes(br[0], tail, -1, m=2 * m)
            xr, wr = _quad.tail_nodes(br[-1], tail, +1, m=2 * m)
            x = np.concatenate([xl, x, xr])
            Ls.append(x)
            Ws.append(np.concatenate([wl, wt, wr]))
            seg.append(np.full(x.size, k))
        L, W, seg = np.concatenate(Ls), np.concatenate(Ws), np.concatenate(seg)
        half = 0.5 * om[seg]
        x1, x2 = L - half, L + half
        r1 = line(x1)
        r2 = line(x2).conj()
        z1, z2 = x1 + 1j * y0, x2 - 1j * y0
        g1, g2, rr, D = _pair_terms(model, E, r1, r2, z1, z2)
        ch = np.stack([
            g1[0] * g2[0] / D[0, 0],
            v2 * rr[0, 0] * g1[1] * g2[1] / D[0, 0],
            v2 * rr[1, 1] * g1[0] * g2[0] / D[1, 1],
            g1[1] * g2[1] / D[1, 1],
            g1[0] * g2[1] / D[0, 1],
            v2 * rr[0, 1] * g1[1] * g2[0] / D[0, 1],
        ])
        for j in range(6):
            out[start : start + om.size, j] = (
                np.bincount(seg, weights=(W * ch[j]).real, minlength=om.size)
                + 1j * np.bincount(seg, weights=(W * ch[j]).imag, minlength=om.size)
            ) / (2.0 * np.pi)
    return out


def _coef_tail(vals, m):
    """Size of the two highest Legendre coefficients per panel, (n_panels,)."""
    x, w = _quad.gauss_legendre(m)
    from scipy.special import eval_legendre

    P = np.array([eval_legendre(k, x) for k in (m - 2, m - 1)])
    proj = (2 * np.array([m - 2, m - 1])[:, None] + 1) / 2.0 * P * w[None, :]
    c = np.einsum("kj,pjc->pkc", proj, vals)
    return np.max(np.sum(abs(c), axis=1), axis=1)


def transfer_analytic(field, E, times, tol=1e-6, m_omega=12, m_lambda=8, max_rounds=40):
    """Large-n transfer tensor ``T[t, a, d, b, g]`` for reservoir level E.

    Parameters
    ----------
    field : ResolventField or Model
    E : float
        Energy of the initially occupied reservoir level.
    times : array_like
        Non-negative times.
    tol : float
        Target absolute error of the regular part.

    Returns
    -------
    EvolutionResult
        With ``rho`` left as the evolution of ``diag(1, 0)``.
    """
    model = field.model if isinstance(field, ResolventField) else field
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times: must be non-negative")
    if not model.dos.pdf(E) > 0:
        raise DomainError(f"nu0(E) vanishes at E={E}")
    tmax = max(times.max(), 1e-3)
    lo, hi = _spectral_window(model)
    c = 1.0 / tmax
    c = min(c, 0.5 * (hi - lo))
    y0 = 0.5 * c
    st = stationary_reduced(model, E, m=12) if model.v > 0 else Stationary(None, np.eye(2), np.ones(2))
    cent, wid, pos, pw = _features(model, E, y0)
    width = hi - lo
    line = _Line(model, y0, lo - 2 * width, hi + 2 * width, cent, wid, max_panel=width / 8)

    T0 = np.array([1, 0, 0, 1, 1, 0], dtype=complex)
    Tinf = np.array([st.p[0, 0], st.p[0, 1], st.p[1, 0], st.p[1, 1], 0, 0], dtype=complex)
    delta = np.array([0, 0, 0, 0, 1, 1]) * (pos[0] - pos[1])
    nu0E = float(model.dos.pdf(E))
    gam = max(2.0 * np.pi * model.v**2 * nu0E, 2.0 * c)

    def regular(om):
        p = c + 1j * om
        lt = _laplace_channels(model, E, line, om, m=m_lambda)
        q = p[:, None] + 1j * delta[None, :]
        ref = (T0 - Tinf)[None, :] * (q + 2 * gam) / (q + gam) ** 2
        return lt - Tinf[None, :] / p[:, None] - ref

    # frequencies where the transform has structure
    fw = np.concatenate([[0.0], pos - pos[::-1]])
    Omega = 4.0 * width
    br = _quad.graded_breaks(fw, np.full(fw.size, 0.5 * c), -Omega, Omega, ratio=2.0, max_panel=width / 4)
    panels = {}
    todo = list(zip(br[:-1], br[1:]))
    xg, _ = _quad.gauss_legendre(m_omega)
    for _ in range(max_rounds):
        if not todo:
            break
        ab = np.array(todo)
        mid, half = ab.mean(axis=1), 0.5 * (ab[:, 1] - ab[:, 0])
        om = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        vals = regular(om).reshape(len(todo), m_omega, 6)
        err = _coef_tail(vals, m_omega)
        nxt = []
        for i, (a, b) in enumerate(todo):
            if err[i] <= tol * c:
                panels[(a, b)] = vals[i]
            else:
                nxt += [(a, 0.5 * (a + b)), (0.5 * (a + b), b)]
        todo = nxt
        # extend the window while the remainder is not negligible at its ends
        ends = sorted(panels)
        if not todo and ends:
            lo_p, hi_p = ends[0], ends[-1]
            edge = max(np.max(abs(panels[lo_p])), np.max(abs(panels[hi_p])))
            # with R ~ omega^-3 the neglected tails contribute about edge * Omega / 2,
            # times e^{ct} / (2 pi) < 1/2
            if 0.25 * edge * Omega > tol and Omega < 64 * width:
                todo = [(-2 * Omega, -Omega), (Omega, 2 * Omega)]
                Omega *= 2
    if todo:
        raise SolverError("Bromwich integration did not resolve", float(np.max(err)))
    keys = sorted(panels)
    brk = np.array([k[0] for k in keys] + [keys[-1][1]])
    vals = np.stack([panels[k] for k in keys])
    reg = _quad.filon_legendre(brk, vals, times, m_omega) * (np.exp(c * times) / (2 * np.pi))[:, None]
    refT = (T0 - Tinf)[None, :] * np.exp(-1j * delta[None, :] * times[:, None]) * (
        (1 + gam * times) * np.exp(-gam * times))[:, None]
    ch = Tinf[None, :] + refT + reg

    nt = times.size
    T = np.zeros((nt, 2, 2, 2, 2), dtype=complex)
    Ts = np.zeros_like(T)
    for j, (a, d, b, g) in enumerate(CHANNELS):
        T[:, a, d, b, g] = ch[:, j]
        Ts[:, a, d, b, g] = Tinf[j]
        if a != d:
            T[:, d, a, g, b] = ch[:, j].conj()
            Ts[:, d, a, g, b] = np.conj(Tinf[j])
    rho_init = np.diag([1.0, 0.0]).astype(complex)
    meta = {"c": c, "gamma_ref": gam, "omega_max": Omega, "n_omega_panels": len(keys),
            "level_positions": pos.tolist(), "line_panels": int(line.breaks.size - 1)}
    return EvolutionResult(times, np.einsum("tadbg,bg->tad", T, rho_init),
                           np.einsum("adbg,bg->ad", Ts[0], rho_init), transfer=T,
                           parts={"stationary": Ts, "regular": T - Ts}, meta=meta)


def evolve_analytic(field, E, rho0, times, **kw):
    """Large-n reduced matrix ``rho(E, t)`` for the initial state ``rho0 (x) |E><E|``.

    The diagonal splits into the stationary part (the long-time limit, also
    returned by :func:`stationary_reduced`) and a regular part that decays.

    Returns
    -------
    EvolutionResult
    """
    rho0 = reduced_state(rho0)
    tr = transfer_analytic(field, E, times, **kw)
    T = tr.transfer
    rho = np.einsum("tadbg,bg->tad", T, rho0)
    stat = np.einsum("tadbg,bg->tad", tr.parts["stationary"], rho0)
    return EvolutionResult(tr.times, rho, stat[0], transfer=T,
                           parts={"stationary": stat, "regular": rho - stat}, meta=tr.meta)


# ------------------------------------------------------------ flat regime


def flat_offdiagonal_rate(A, s):
    """Decay rate of the off-diagonal entry in the flat regime.

    ``2 (A - sqrt(A^2 - s^2))`` for ``|s| <= A`` and ``2 A`` beyond.
    """
    s = abs(s)
    return 2.0 * (A - np.sqrt(A * A - s * s)) if s <= A else 2.0 * A


def flat_regime_closed_form(A, s, rho0, times):
    """Flat-density evolution with ``Gamma = 4 A``.

    Diagonals ``1/2 + a (rho_++(0) - rho_--(0)) e^{-Gamma t} / 2``.  The
    off-diagonal entry follows from the exact Laplace transform in this
    regime,

        rho~_{+-}(p) = [rho_{+-}(0) (p + 2A - 2is) + 2A rho_{-+}(0)] / ((p + 2A)^2 + 4 s^2 - 4 A^2),

    whose slowest pole gives the rate of :func:`flat_offdiagonal_rate`.
    """
    if not A > 0:
        raise ValueError("A: must be positive")
    rho0 = reduced_state(rho0)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    G = 4.0 * A
    e = np.exp(-G * times)
    nt = times.size
    T = np.zeros((nt, 2, 2, 2, 2), dtype=complex)
    for a in range(2):
        for g in range(2):
            T[:, a, a, g, g] = 0.5 + (0.5 if a == g else -0.5) * e
    # off-diagonal: roots p = -2A +- sqrt(4A^2 - 4s^2)
    disc = np.sqrt(complex(4 * A * A - 4 * s * s))
    p1, p2 = -2 * A + disc, -2 * A - disc
    t = times.astype(complex)
    if abs(p1 - p2) > 1e-12:
        def inv(num0, num1):  # inverse transform of (num1 p + num0)/((p-p1)(p-p2))
            return ((num1 * p1 + num0) * np.exp(p1 * t) - (num1 * p2 + num0) * np.exp(p2 * t)) / (p1 - p2)
    else:
        def inv(num0, num1):
            return np.exp(p1 * t) * (num1 + (num1 * p1 + num0) * t)
    T[:, 0, 1, 0, 1] = inv(2 * A - 2j * s, 1.0)
    T[:, 0, 1, 1, 0] = inv(2 * A, 0.0)
    T[:, 1, 0, 1, 0] = T[:, 0, 1, 0, 1].conj()
    T[:, 1, 0, 0, 1] = T[:, 0, 1, 1, 0].conj()
    rho = np.einsum("tadbg,bg->tad", T, rho0)
    stat = np.diag([0.5, 0.5]).astype(complex)
    return EvolutionResult(times, rho, stat, transfer=T,
                           parts={"stationary": np.broadcast_to(stat, rho.shape).copy(),
                                  "regular": rho - stat},
                           meta={"Gamma": G, "offdiag_rate": flat_offdiagonal_rate(A, s)})
