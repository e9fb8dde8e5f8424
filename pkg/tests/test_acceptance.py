"""Acceptance criteria 1-10, each printing one PASS/FAIL line (9 is split into 9a-9c)."""

import math

import numpy as np
import pytest
from scipy.optimize import least_squares

from rmrelax import _quad
from rmrelax.dos import DiscreteLevels, GaussianConvolution, Lattice, ScaledFlat, quantile_levels
from rmrelax.dynamics import evolve_analytic, flat_offdiagonal_rate, flat_regime_closed_form
from rmrelax.ensemble import (
    GOE,
    Banded,
    InitialState,
    InteractionSpec,
    MCConfig,
    PureLevel,
    assemble_hamiltonian,
    evolve_reduced,
    mc_average,
    sample_interaction,
    transfer_and_probabilities,
)
from rmrelax.resolvent import (
    Canonical,
    Microcanonical,
    Model,
    constant_kernel,
    equilibrium_reduced,
    lorentzian_kernel,
    lorentzian_self_energy,
    solve_one_point,
    solve_self_energy,
    spectral_density,
    tail_ratio,
)
from rmrelax.vanhove import (
    MasterSystem,
    VanHoveParams,
    band_regime_rates,
    lorentzian_form_factor,
    master_solve,
    two_state_residual,
    vanhove_band,
    vanhove_reduced,
)

pytestmark = pytest.mark.slow
G1 = GaussianConvolution(J=1, a=1.0)


def _random_state(rng):
    p = rng.uniform()
    c = rng.uniform() * math.sqrt(p * (1 - p)) * np.exp(2j * np.pi * rng.uniform())
    return np.array([[p, c], [np.conj(c), 1 - p]])


def test_c1_sum_rules(criterion):
    rng = np.random.default_rng(20240601)
    doses = [G1, GaussianConvolution(J=4, a=0.7, e0=0.2), Lattice(1.0), ScaledFlat("box", 3.0)]
    worst = 0.0
    for i in range(20):
        dos = doses[i % len(doses)]
        n = int(rng.integers(16, 129))
        s, v = rng.uniform(0, 1.5), rng.uniform(0, 1.5)
        kind = GOE() if i % 3 else Banded(lorentzian_kernel(rng.uniform(0.3, 2.0)))
        spec = InteractionSpec(kind, v)
        levels = quantile_levels(dos, n)
        H = assemble_hamiltonian(s, spec, levels, sample_interaction(spec, levels, int(rng.integers(2**31))))
        times = np.sort(rng.uniform(0, 50, 12))
        k = int(rng.integers(n))
        eig = H.eigh()
        rho = evolve_reduced(H, InitialState(_random_state(rng), PureLevel(k)), times, eig=eig)
        _, p = transfer_and_probabilities(H, k, times, eig=eig)
        worst = max(worst, np.max(abs(np.trace(rho, axis1=1, axis2=2) - 1)), np.max(abs(p.sum(axis=1) - 1)))
    ok = worst <= 1e-12
    criterion("1", ok, f"max sum-rule violation {worst:.2e} over 20 configs (limit 1e-12)")
    assert ok


def test_c2_semicircle(criterion):
    lam = np.linspace(-1.9, 1.9, 381)
    sd = spectral_density(Model(GaussianConvolution(J=1, a=1e-3), 0.0, 1.0), lam)
    err = np.max(abs(sd.nu_plus - np.sqrt(4 - lam**2) / (2 * np.pi)))
    ok = err <= 1e-3
    criterion("2", ok, f"sup error {err:.2e} (limit 1e-3)")
    assert ok


def _flat_model(A, s, a):
    dos = ScaledFlat("gaussian", a)
    return Model(dos, s, math.sqrt(A / (math.pi * dos.pdf(0.0))))


def _slow_rate(t, y, k_guess, A):
    """Fit complex y(t) = c1 exp(-k1 t) + c2 exp(-k2 t); return the smaller k."""

    def f(x):
        c1, c2 = x[0] + 1j * x[1], x[3] + 1j * x[4]
        r = c1 * np.exp(-x[2] * t) + c2 * np.exp(-x[5] * t) - y
        return np.concatenate([r.real, r.imag])

    x0 = [y[0].real, y[0].imag, k_guess, 0.0, 0.0, 4 * A]
    sol = least_squares(f, x0, bounds=([-2, -2, -1, -2, -2, 0], [2, 2, 10, 2, 2, 10]), xtol=1e-14, ftol=1e-14)
    return min(sol.x[2], sol.x[5])


def test_c3_flat_regime(criterion):
    A, s = 0.1, 0.3
    G = 4 * A
    t = np.linspace(0, 5 / G, 26)
    rho0 = np.diag([1.0, 0.0])
    ev = evolve_analytic(_flat_model(A, s, 200.0), 0.0, rho0, t)
    cf = flat_regime_closed_form(A, s, rho0, t)
    diag_err = max(np.max(abs(ev.rho[:, a, a] - cf.rho[:, a, a])) for a in range(2))
    rates = []
    rho0 = np.full((2, 2), 0.5)
    for ratio in (0.0, 0.5, 0.9):
        k = flat_offdiagonal_rate(A, ratio * A)
        tt = np.linspace(0, 8 / max(k, 0.05), 81)
        ev = evolve_analytic(_flat_model(A, ratio * A, 400.0), 0.0, rho0, tt)
        rates.append((ratio, k, _slow_rate(tt, ev.rho[:, 0, 1], max(k, 1e-3), A)))
    rate_ok = all(abs(fit - k) <= 0.05 * k + 1e-6 for _, k, fit in rates)
    ok = diag_err <= 1e-3 and rate_ok
    txt = ", ".join(f"s/A={r}: {fit:.4g} vs {k:.4g}" for r, k, fit in rates)
    criterion("3", ok, f"diagonal error {diag_err:.2e} (limit 1e-3); off-diagonal rates {txt}")
    assert ok


@pytest.mark.parametrize("name, dos, E", [
    ("gaussian J=1", G1, 0.0),
    ("gaussian J=4", GaussianConvolution(J=4, a=1.0), 0.0),
    ("lattice", Lattice(1.0), 2.0),
])
def test_c4_cross_engine(criterion, name, dos, E):
    t = np.linspace(0, 15, 31)
    rho0 = np.diag([1.0, 0.0])
    mc = mc_average(MCConfig(dos, 256, 0.5, InteractionSpec(GOE(), 0.5), rho0, t, E=E), 200, 12345)
    an = evolve_analytic(Model(dos, 0.5, 0.5), mc.level, rho0, t)
    excess = max(np.max(abs(mc.rho_re.mean[:, a, a] - an.rho[:, a, a].real) - 3 * mc.rho_re.stderr[:, a, a])
                 for a in range(2))
    dev = max(np.max(abs(mc.rho_re.mean[:, a, a] - an.rho[:, a, a].real)) for a in range(2))
    ok = excess <= 0.02
    criterion(f"4 ({name})", ok, f"max deviation {dev:.4f}, worst excess over 3 stderr {excess:.4f} (limit 0.02)")
    assert ok


def test_c5_vanhove_consistency(criterion):
    v, s, E = 0.05, 0.5, 0.0
    rho0 = np.diag([0.8, 0.2])
    P = VanHoveParams(G1, E, s)
    G = vanhove_reduced(P, rho0, [0.0]).rates.min()
    tau = np.linspace(0, 3 / G, 31)
    vh = vanhove_reduced(P, rho0, tau)
    ev = evolve_analytic(Model(G1, s, v), E, rho0, tau / v**2)
    err = max(np.max(abs(ev.rho[:, a, a] - vh.rho[:, a, a])) for a in range(2))
    ok = err <= 0.02
    criterion("5", ok, f"max diagonal deviation {err:.2e} (limit 0.02)")
    assert ok


def test_c6_gibbs_stationarity(criterion):
    worst_st = worst_db = 0.0
    for beta in (0.0, 0.5, 1.0):
        for s in (0.25, 0.5):
            gibbs = np.exp(-beta * s * np.array([1.0, -1.0])) / (2 * math.cosh(beta * s))
            tr = vanhove_band(VanHoveParams(None, 0.0, s, w=lorentzian_form_factor(1.0), beta=beta),
                              np.diag([0.9, 0.1]), [0.0, 1e4])
            worst_st = max(worst_st, np.max(abs(tr.stationary - gibbs)), np.max(abs(tr.at([1e4])[0] - gibbs)))
            sys = MasterSystem(tr.master.k)
            p = master_solve(sys, [0.9, 0.1], [1e4])[0]
            worst_db = max(worst_db, abs(p[0] / p[1] - math.exp(-2 * beta * s)))
    ok = worst_st <= 1e-12 and worst_db <= 1e-12
    criterion("6", ok, f"stationary error {worst_st:.1e}, detailed-balance error {worst_db:.1e} (limit 1e-12)")
    assert ok


def test_c7_tail_asymptotics(criterion):
    Js = (8, 16, 32)
    errs = np.array([tail_ratio(G1, 0.5, 1.0, J, -1.0).error for J in Js])  # (3, 2)
    J = np.array(Js[:2], float)
    # least-squares fit of err = C / J on J = 8, 16
    C = (errs[:2] / J[:, None]).sum(axis=0) / (1 / J**2).sum()
    pred = C / 32
    decreasing = np.all(errs[0] > errs[1]) and np.all(errs[1] > errs[2])
    ok = bool(decreasing and np.all(errs[2] <= 2 * pred))
    criterion("7", ok, f"errors J=8,16,32: {np.round(errs.max(axis=1), 4).tolist()}; "
                       f"J=32 vs 2x extrapolation {np.round(errs[2], 4).tolist()} <= {np.round(2 * pred, 4).tolist()}")
    assert ok


def test_c8_ensemble_equivalence(criterion):
    beta, s, e = 1.0, 0.5, -1.0
    gaps = []
    for J in (8, 16, 32):
        m = Model(G1.with_J(J), s, 1.0)
        micro = np.diag(equilibrium_reduced(m, Microcanonical(J * e))).real
        canon = np.diag(equilibrium_reduced(m, Canonical(beta))).real
        gaps.append(float(np.max(abs(micro - canon) / canon)))
    ok = gaps[2] <= 0.05 and gaps[0] > gaps[1] > gaps[2]
    criterion("8", ok, f"relative disagreement J=8,16,32: {[f'{g:.1e}' for g in gaps]} (J=32 limit 5%)")
    assert ok


def test_c9a_flat_kernel_self_energy(criterion):
    z = np.array([0.3 + 0.05j, -1 + 0.2j, 2 + 0.01j])
    v = 0.8
    se = solve_self_energy(G1, 0.4, v, constant_kernel(), z, n=300)
    ref = solve_one_point(DiscreteLevels(nodes=se.nodes, weights=se.weights), 0.4, v, z, tol=1e-13)
    err = np.max(abs(se.delta - v * v * ref.values[:, :, None]))
    ok = err <= 1e-8
    criterion("9a", ok, f"max |Delta - v^2 r| {err:.1e} (limit 1e-8)")
    assert ok


def _flat_band(A, z, s=0.3, a=400.0, b=1.0):
    dos = ScaledFlat("gaussian", a)
    v = math.sqrt(A / (math.pi * dos.pdf(0.0)))
    br = _quad.graded_breaks([z.real - s, z.real + s], [z.imag / 4] * 2, -8 * a, 8 * a, ratio=1.4)
    x, w = _quad.panel_nodes(br, 12)
    return solve_self_energy(dos, s, v, lorentzian_kernel(b), np.array([z]), nodes=x, weights=w * dos.pdf(x))


def test_c9b_lorentzian_closed_forms(criterion):
    s, b = 0.3, 1.0
    errs = []
    for z in (0.2 + 0.01j, -0.4 + 0.05j):
        se = _flat_band(0.01, z, s=s, b=b)
        E = np.array([-0.5, 0.0, 0.5])
        cf = lorentzian_self_energy(0.01, b, s, E[None, :], np.array([z])[:, None])
        errs.append(np.max(abs(se.at(E) - cf)))
    z = 0.2 + 0.005j
    se = _flat_band(0.001, z, s=s, b=b)
    cf1 = lorentzian_self_energy(0.001, b, s, np.array([[z.real]]), np.array([[z]]), first_order=True)
    errs.append(np.max(abs(se.at([z.real]) - cf1)))
    ok = max(errs) <= 1e-4
    criterion("9b", ok, f"closed-form errors {[f'{e:.1e}' for e in errs]} (limit 1e-4)")
    assert ok


def _fitted_rate(tr, T):
    tau = np.linspace(0, T, 41)
    y = tr.at(tau)[:, 0] - tr.stationary[0]
    slope = np.polyfit(tau, np.log(abs(y)), 1)[0]
    return -slope


def test_c9c_band_rate_ratio(criterion):
    A, b = 0.1, 1.0
    rows = []
    for s in (0.25, 0.5, 1.0):
        G, G1_ = band_regime_rates(A, s, b)
        # van Hove band runs at beta = 0 with and without the form factor
        wide = vanhove_band(VanHoveParams(None, 0.0, s, w=lambda x: np.ones_like(np.asarray(x, float)), beta=0.0),
                            np.diag([1.0, 0.0]), [0.0])
        band = vanhove_band(VanHoveParams(None, 0.0, s, w=lorentzian_form_factor(b), beta=0.0),
                            np.diag([1.0, 0.0]), [0.0])
        T = 3.0 / band.rates[0]
        numeric = _fitted_rate(band, T) / _fitted_rate(wide, T)
        rows.append((s, G1_ / G, numeric))
    rel = [abs(n / r - 1) for _, r, n in rows]
    ok = max(rel) <= 0.02
    txt = ", ".join(f"s={s}: {r:.4f} vs {n:.4f}" for s, r, n in rows)
    criterion("9c", ok, f"Gamma1/Gamma closed form vs band run: {txt}; worst relative gap {max(rel):.1%} (limit 2%)")
    assert ok


def test_c10_mode_count(criterion):
    gen = vanhove_reduced(VanHoveParams(G1, 0.3, 0.5), np.diag([0.7, 0.3]), [0.0])
    T = 3.0 / gen.rates.max()
    three = two_state_residual(lambda t: gen.at(t)[:, 0], T)
    two = 0.0
    for beta in (0.0, 0.5, 1.0):
        for s in (0.25, 0.5):
            for p in ([1.0, 0.0], [0.7, 0.3], [0.0, 1.0]):
                tr = vanhove_band(VanHoveParams(None, 0.0, s, w=lorentzian_form_factor(1.0), beta=beta),
                                  np.diag(p), [0.0])
                two = max(two, two_state_residual(lambda t, tr=tr: tr.at(t)[:, 0], 3.0 / tr.master.relaxation_rate))
    ok = three >= 1e-3 and two <= 1e-10
    criterion("10", ok, f"three-mode residual {three:.2e} (>= 1e-3), worst two-mode residual {two:.1e} (<= 1e-10)")
    assert ok
