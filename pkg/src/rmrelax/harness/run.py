"""Run one configured experiment and write its CSV and manifest."""

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..state import basis_state
from .config import ConfigError, _get, _grid, build_dos, parse_config
from .io import write_manifest, write_table, write_trajectory

__all__ = ["RunOutput", "run", "run_dos", "run_spectral", "DEFAULT_OUT"]

DEFAULT_OUT = "rmrelax-out"


@dataclass(frozen=True, eq=False)
class RunOutput:
    csv: Path
    manifest: Path
    result: object = None
    meta: dict = field(default_factory=dict)


def _outdir(cfg_out, out):
    return Path(out or cfg_out or DEFAULT_OUT)


def _mc(cfg, workers):
    from ..ensemble import GOE, Banded, InteractionSpec, MCConfig, mc_average

    kind = GOE() if cfg.kernel is None else Banded(cfg.kernel)
    use_beta = cfg.beta if (cfg.E is None and cfg.k is None) else None
    mcc = MCConfig(cfg.dos, cfg.n, cfg.s, InteractionSpec(kind, cfg.v), cfg.rho0, cfg.grid,
                   E=cfg.E, k=cfg.k, beta=use_beta)
    res = mc_average(mcc, cfg.R, cfg.master_seed, workers=workers)
    rho_err = res.rho_re.stderr + 1j * res.rho_im.stderr
    cols = dict(rho=res.rho, p=res.p.mean, rho_stderr=rho_err, p_stderr=res.p.stderr)
    meta = {"master_seed": cfg.master_seed, "R": cfg.R, "n": cfg.n, "level_index": res.k,
            "level_energy": res.level, "workers": workers}
    return res, cols, meta


def _analytic(cfg):
    from ..dynamics import evolve_analytic
    from ..resolvent import Model

    if cfg.kernel is not None:
        raise ConfigError("model.interaction.kind", "the analytic engine supports the goe interaction only")
    res = evolve_analytic(Model(cfg.dos, cfg.s, cfg.v), cfg.E, cfg.rho0, cfg.grid)
    return res, dict(rho=res.rho, p=res.probabilities()), {"stationary": res.stationary}


def _decomposition(res):
    cols = {"t": res.times}
    for part in ("stationary", "regular"):
        x = res.parts.get(part)
        if x is None:
            continue
        cols[f"{part}_pp"] = x[:, 0, 0].real
        cols[f"{part}_mm"] = x[:, 1, 1].real
        cols[f"{part}_pm_re"] = x[:, 0, 1].real
        cols[f"{part}_pm_im"] = x[:, 0, 1].imag
    return cols


def _vanhove(cfg):
    from ..vanhove import VanHoveParams, vanhove_band, vanhove_reduced

    if cfg.engine == "band":
        params = VanHoveParams(cfg.dos, cfg.E if cfg.E is not None else 0.0, cfg.s, cfg.v,
                               w=cfg.form_factor, beta=cfg.beta)
        fn = vanhove_band
    else:
        params = VanHoveParams(cfg.dos, cfg.E, cfg.s, cfg.v)
        fn = vanhove_reduced
    res = fn(params, cfg.rho0, cfg.grid)
    p = np.empty((cfg.grid.size, 2, 2))
    for g, alpha in enumerate((1, -1)):
        b = fn(params, basis_state(alpha), cfg.grid).rho
        p[:, :, g] = np.stack([b[:, 0, 0].real, b[:, 1, 1].real], axis=1)
    meta = {"time_variable": "tau = t v^2", "rates": res.rates, "stationary": res.stationary}
    modes = res.modes()
    extra = {"mode_stationary": modes[:, 0], "mode_gamma_p": modes[:, 1], "mode_gamma_m": modes[:, 2]}
    return res, dict(rho=res.rho, p=p, extra=extra), meta


def run(config, out=None, workers=1):
    """Execute a validated :class:`ExperimentConfig` (or a raw dict).

    Writes ``trajectory.csv`` and ``manifest.json`` into the output directory,
    plus ``decomposition.csv`` (stationary and regular parts) for the analytic
    engine.  Van Hove trajectories carry the mode columns ``mode_stationary``,
    ``mode_gamma_p`` and ``mode_gamma_m`` (contributions to rho_pp).
    """
    if isinstance(config, dict):
        config = parse_config(config)
    outdir = _outdir(config.out, out)
    t0 = time.perf_counter()
    if config.engine == "mc":
        res, cols, meta = _mc(config, workers)
    elif config.engine == "analytic":
        res, cols, meta = _analytic(config)
    else:
        res, cols, meta = _vanhove(config)
    wall = time.perf_counter() - t0
    csv_path = write_trajectory(outdir / "trajectory.csv", config.grid, **cols)
    outputs = ["trajectory.csv"]
    if config.engine == "analytic":
        write_table(outdir / "decomposition.csv", _decomposition(res))
        outputs.append("decomposition.csv")
    man = write_manifest(outdir / "manifest.json", config.raw, engine=config.engine, wall_clock_s=wall,
                         outputs=outputs, **meta)
    return RunOutput(csv_path, man, res, meta)


def run_dos(raw, out=None):
    """Tabulate nu0 on ``grid.E``; adds the rate function when ``model.J`` is set."""
    from ..dos import GaussianConvolution, rate_function

    t0 = time.perf_counter()
    dos = build_dos(_get(raw, "model.dos"))
    E = _grid(raw, "grid.E")
    if E is None:
        raise ConfigError("grid.E", "missing required field")
    cols = {"E": E, "nu0": np.asarray(dos.pdf(E), float), "cdf": np.asarray(dos.cdf(E), float)}
    J = _get(raw, "model.J", int, required=False)
    if J is not None:
        if J < 1:
            raise ConfigError("model.J", "must be >= 1")
        base = dos
        if isinstance(dos, GaussianConvolution):
            base = dos.with_J(J)
            cols["nu0"] = np.asarray(base.pdf(E), float)
            cols["cdf"] = np.asarray(base.cdf(E), float)
        pts = [rate_function(dos, J, x / J) for x in E]
        cols["e"] = E / J
        cols["sJ"] = np.array([p.sJ for p in pts])
        cols["beta"] = np.array([p.beta for p in pts])
    outdir = _outdir(_get(raw, "out", str, required=False), out)
    csv_path = write_table(outdir / "dos.csv", cols)
    man = write_manifest(outdir / "manifest.json", raw, engine="dos", wall_clock_s=time.perf_counter() - t0,
                         outputs=["dos.csv"])
    return RunOutput(csv_path, man, cols)


def run_spectral(raw, out=None):
    """Spectral densities nu_+, nu_- on ``grid.lam`` and the equilibrium state.

    ``spectral.h`` overrides the default regulator ladder.  The equilibrium uses ``model.beta`` (canonical) or ``model.lam``
    (microcanonical) when present.
    """
    from ..resolvent import Canonical, Microcanonical, Model, equilibrium_reduced, spectral_density

    dos = build_dos(_get(raw, "model.dos"))
    s = _get(raw, "model.s", float)
    v = _get(raw, "model.v", float)
    lam = _grid(raw, "grid.lam")
    if lam is None:
        raise ConfigError("grid.lam", "missing required field")
    model = Model(dos, s, v)
    t0 = time.perf_counter()
    h = _get(raw, "spectral.h", float, required=False)
    if h is not None and not h > 0:
        raise ConfigError("spectral.h", "must be positive")
    dens = spectral_density(model, lam, h=h)
    tot = dens.nu_plus + dens.nu_minus
    with np.errstate(invalid="ignore", divide="ignore"):
        omega = np.where(tot > 0, dens.nu_plus / tot, np.nan)
    cols = {"lambda": lam, "nu_plus": dens.nu_plus, "nu_minus": dens.nu_minus, "omega_plus": omega,
            "flag_singular": np.asarray(dens.flag_singular, float)}
    meta = {}
    beta = _get(raw, "model.beta", float, required=False)
    lam0 = _get(raw, "model.lam", float, required=False)
    if beta is not None:
        meta["equilibrium_canonical"] = np.diag(equilibrium_reduced(model, Canonical(beta))).real
    if lam0 is not None:
        meta["equilibrium_microcanonical"] = np.diag(equilibrium_reduced(model, Microcanonical(lam0))).real
    outdir = _outdir(_get(raw, "out", str, required=False), out)
    csv_path = write_table(outdir / "spectral.csv", cols)
    man = write_manifest(outdir / "manifest.json", raw, engine="spectral", wall_clock_s=time.perf_counter() - t0,
                         outputs=["spectral.csv"], **meta)
    return RunOutput(csv_path, man, dens, meta)
