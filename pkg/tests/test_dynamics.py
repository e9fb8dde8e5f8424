import math

import numpy as np
import pytest

from rmrelax import _quad
from rmrelax.dos import DiscreteLevels, DomainError, GaussianConvolution
from rmrelax.dynamics import (
    band_two_point,
    evolve_analytic,
    flat_offdiagonal_rate,
    flat_regime_closed_form,
    rho0_dependence_diagnostic,
    stationary_reduced,
    stationary_rin,
    two_point,
)
from rmrelax.resolvent import Model, constant_kernel, lorentzian_kernel, solve_self_energy
from rmrelax.vanhove import rescaled_rate

G1 = GaussianConvolution(J=1, a=1.0)
M = Model(G1, 0.5, 0.5)
RHO_A = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
RHO_B = np.array([[0.2, -0.3j], [0.3j, 0.8]])


@pytest.fixture(scope="module")
def gauss_run():
    return evolve_analytic(M, 0.0, RHO_A, np.linspace(0.0, 40.0, 41))


def test_identity_at_t0(gauss_run):
    assert np.max(abs(gauss_run.rho[0] - RHO_A)) < 1e-3


def test_trace_and_stationary_bounds(gauss_run):
    assert np.max(abs(gauss_run.trace() - 1)) < 1e-6
    d = np.diag(gauss_run.stationary).real
    assert np.all((d >= 0) & (d <= 1))


def test_linearity(gauss_run):
    mix = 0.5 * RHO_A + 0.5 * RHO_B
    rb = evolve_analytic(M, 0.0, RHO_B, gauss_run.times)
    direct = evolve_analytic(M, 0.0, mix, gauss_run.times)
    assert np.max(abs(direct.rho - 0.5 * gauss_run.rho - 0.5 * rb.rho)) < 1e-9


def test_regular_part_decays(gauss_run):
    gam = rescaled_rate(G1, 0.0, 0.5, 0.5).consistent.max()
    late = gauss_run.times >= 10 / gam
    assert late.any()
    reg = gauss_run.parts["regular"][late]
    assert np.max(abs(reg[:, 0, 0])) < 1e-3 and np.max(abs(reg[:, 1, 1])) < 1e-3
    st = stationary_reduced(M, 0.0, RHO_A)
    assert np.diag(gauss_run.stationary).real == pytest.approx(st.rho, abs=1e-12)


def test_requires_positive_density():
    from rmrelax.dos import Lattice

    with pytest.raises(DomainError):
        evolve_analytic(Model(Lattice(1.0), 0.5, 0.5), 10.0, RHO_A, [0.0, 1.0])
    with pytest.raises(ValueError):
        evolve_analytic(M, 0.0, RHO_A, [-1.0, 1.0])


@pytest.mark.parametrize("E", [-1.0, 0.0, 0.8])
def test_stationary_normalization(E):
    st = stationary_reduced(M, E, np.diag([0.9, 0.1]))
    assert st.rho.sum() == pytest.approx(1.0, abs=1e-6)
    assert st.p.sum(axis=0) == pytest.approx([1.0, 1.0], abs=1e-6)


def test_stationary_rin_matches_half_half():
    st = stationary_reduced(M, 0.3, np.diag([0.5, 0.5]))
    assert np.max(abs(st.rho - stationary_rin(M, 0.3))) < 1e-6


def test_stationary_gibbs_at_large_J():
    beta, s, J = 1.0, 0.5, 32
    st = stationary_reduced(Model(G1.with_J(J), s, 1.0), -J * beta, np.diag([1.0, 0.0]))
    gibbs = np.exp(-beta * s * np.array([1, -1])) / (2 * math.cosh(beta * s))
    assert np.max(abs(st.rho - gibbs) / gibbs) < 0.05


def test_rho0_dependence_diagnostic():
    assert abs(rho0_dependence_diagnostic(Model(G1, 0.0, 0.6))) < 1e-8
    assert abs(rho0_dependence_diagnostic(Model(G1, 0.0, 1.3))) < 1e-8
    assert rho0_dependence_diagnostic(Model(G1, 0.5, 0.6)) > 1e-3


def test_flat_closed_form_examples():
    t = np.array([0.0, math.log(2) / 4, 50.0])
    r = flat_regime_closed_form(1.0, 0.0, np.diag([1.0, 0.0]), t)
    assert r.rho[1, 0, 0].real == pytest.approx(0.75, abs=1e-14)
    assert r.rho[0, 0, 0].real == 1.0
    assert np.max(abs(r.rho[2] - np.diag([0.5, 0.5]))) < 1e-12
    for rho0 in (RHO_A, RHO_B):
        assert np.max(abs(flat_regime_closed_form(0.3, 0.2, rho0, [200.0]).rho[0] - np.diag([0.5, 0.5]))) < 1e-12
    p = r.probabilities()
    G = 4.0
    for a, sa in enumerate((1, -1)):
        for g, sg in enumerate((1, -1)):
            assert np.allclose(p[:, a, g], 0.5 + sa * sg * 0.5 * np.exp(-G * t), atol=1e-15)
    assert np.array_equal(p.sum(axis=1), np.ones((3, 2)))
    with pytest.raises(ValueError):
        flat_regime_closed_form(0.0, 0.1, RHO_A, t)


def test_flat_telegraph_equation():
    A = 0.3
    h = 1e-3
    t = np.arange(0, 5 / (4 * A), h)
    rho = flat_regime_closed_form(A, 0.2, RHO_A, t).rho
    pp, mm = rho[:, 0, 0].real, rho[:, 1, 1].real
    d = np.gradient(pp, h, edge_order=2)
    res = d - 2 * A * (mm - pp)
    assert np.max(abs(res[1:-1])) < 1e-6


@pytest.mark.parametrize("ratio", [0.0, 0.5, 0.9, 1.5])
def test_flat_offdiagonal_rate_of_closed_form(ratio):
    A = 0.4
    s = ratio * A
    k = flat_offdiagonal_rate(A, s)
    rate = max(k, 1e-3)
    t = np.linspace(20 / rate, 30 / rate, 3)
    r = flat_regime_closed_form(A, s, RHO_A, t)
    env = abs(r.rho[:, 0, 1])
    if ratio == 0.0:
        # sigma_x commutes with H: the real part is conserved
        assert np.allclose(r.rho[:, 0, 1].real, RHO_A[0, 1].real, atol=1e-12)
        assert k == 0.0
        return
    if ratio < 1:
        fit = -np.diff(np.log(env)) / np.diff(t)
        assert fit == pytest.approx([k, k], rel=1e-6)
    else:
        # beyond s = A the envelope decays at 2A with an oscillating factor
        assert np.all(env * np.exp(k * t) < 2.0)
        assert k == 2 * A


def test_band_two_point_flat_kernel_matches_scalar():
    se = solve_self_energy(G1, 0.5, 0.7, constant_kernel(), np.array([0.3 + 0.2j]), n=200)
    disc = DiscreteLevels(nodes=se.nodes, weights=se.weights)
    rng = np.random.default_rng(3)
    for _ in range(3):
        z1 = complex(rng.uniform(-2, 2), rng.uniform(0.05, 0.5))
        z2 = complex(rng.uniform(-2, 2), -rng.uniform(0.05, 0.5))
        E = rng.uniform(-1, 1)
        band = band_two_point(se, E, z1, z2)
        ref = two_point(Model(disc, 0.5, 0.7), E, z1, z2)
        assert np.max(abs(band.r4 - ref.r4)) < 1e-8
        assert np.max(abs(band.r2 - ref.r2)) < 1e-8
        assert not band.flagged.any()


def test_band_two_point_conjugate_pair_is_positive():
    se = solve_self_energy(G1, 0.5, 0.7, constant_kernel(), np.array([0.3 + 0.2j]), n=200)
    z = 0.3 + 0.2j
    k = band_two_point(se, 0.1, z, z.conjugate())
    d = np.diag(k.r2)
    assert np.all(abs(d.imag) < 1e-12 * abs(d.real))
    assert np.all(d.real > 0)


def _nystrom_r4(n=None, panels=None):
    z1, z2 = 0.3 + 0.2j, -0.2 - 0.3j
    kw = dict(n=n)
    if panels is not None:
        x, w = _quad.panel_nodes(np.linspace(-9, 9, panels + 1), 8)
        kw = dict(nodes=x, weights=w * G1.pdf(x))
    se = solve_self_energy(G1, 0.5, 0.7, lorentzian_kernel(1.0), np.array([z1]), **kw)
    return band_two_point(se, 0.1, z1, z2).r4


def test_band_two_point_nystrom_refinement():
    # composite Gauss nodes: doubling the node count changes nothing visible
    assert np.max(abs(_nystrom_r4(panels=80) - _nystrom_r4(panels=40))) < 1e-6
    # mid-quantile nodes converge too, but only about like n^-1.5 (Gaussian tails)
    r = [_nystrom_r4(n=n) for n in (200, 400, 800)]
    d1, d2 = np.max(abs(r[1] - r[0])), np.max(abs(r[2] - r[1]))
    assert d2 < d1 / 2 and d2 < 1e-5


@pytest.mark.slow
def test_against_monte_carlo_n512():
    from rmrelax.ensemble import InteractionSpec, MCConfig, mc_average

    t = np.linspace(0, 12, 13)
    rho0 = np.diag([1.0, 0.0])
    cfg = MCConfig(G1, 512, 0.5, InteractionSpec(v=0.5), rho0, t, E=0.0)
    mc = mc_average(cfg, 200, 11)
    an = evolve_analytic(M, mc.level, rho0, t)
    for a in range(2):
        dev = abs(mc.rho_re.mean[:, a, a] - an.rho[:, a, a].real)
        assert np.all(dev <= 3 * mc.rho_re.stderr[:, a, a] + 0.02)
