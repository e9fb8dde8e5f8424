"""Experiment configuration: TOML with dotted keys, validated with field paths.

Example::

    model.s = 0.5
    model.v = 0.5
    model.E = 0.0
    model.dos.kind = "gaussian_convolution"
    model.dos.J = 1
    model.dos.a = 1.0
    engine.kind = "mc"
    engine.n = 256
    engine.R = 200
    engine.master_seed = 1
    grid.t = { start = 0.0, stop = 10.0, num = 21 }
    rho0.diag = [1.0, 0.0]
    out = "runs/gauss"

The README lists every key.
"""

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..dos import GaussianConvolution, Lattice, ScaledFlat, Tabulated
from ..state import reduced_state

__all__ = ["ConfigError", "ExperimentConfig", "ENGINES", "load_config", "parse_config", "build_dos",
           "build_kernel", "read_raw"]

ENGINES = ("mc", "analytic", "vanhove", "band")


class ConfigError(ValueError):
    """Invalid configuration; `path` is the dotted field path at fault."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


def _get(d, path, kind=None, required=True, default=None):
    cur = d
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            if required:
                raise ConfigError(path, "missing required field")
            return default
        cur = cur[part]
    if kind is None:
        return cur
    try:
        if kind is int:
            if isinstance(cur, bool) or float(cur) != int(cur):
                raise ValueError
            return int(cur)
        if kind is float:
            if isinstance(cur, bool):
                raise ValueError
            val = float(cur)
            if not np.isfinite(val):
                raise ValueError
            return val
        if kind is str:
            if not isinstance(cur, str):
                raise ValueError
            return cur
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {kind.__name__}, got {cur!r}") from None
    return cur


def build_dos(raw, path="model.dos"):
    """Construct a density of states from its config table."""
    kind = _get(raw, "kind", str).lower()
    try:
        if kind == "gaussian_convolution":
            return GaussianConvolution(J=_get(raw, "J", int), a=_get(raw, "a", float, False, 1.0),
                                       e0=_get(raw, "e0", float, False, 0.0))
        if kind == "lattice":
            return Lattice(delta=_get(raw, "delta", float))
        if kind == "scaled_flat":
            return ScaledFlat(profile=_get(raw, "profile", str, False, "gaussian"), a=_get(raw, "a", float))
        if kind == "tabulated":
            if "file" in raw:
                return Tabulated.from_csv(_get(raw, "file", str))
            return Tabulated(grid=np.asarray(_get(raw, "grid"), float), values=np.asarray(_get(raw, "values"), float))
    except ConfigError as exc:
        raise ConfigError(f"{path}.{exc.path}", str(exc).split(": ", 1)[1]) from None
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown density {kind!r}")


def build_kernel(raw, path="model.interaction"):
    """Kernel ``f(E, E')`` and form factor ``w(x)`` of the interaction, or None for GOE."""
    from ..resolvent import box_kernel, lorentzian_kernel

    kind = _get(raw, "kind", str, False, "goe").lower()
    if kind == "goe":
        return None, None
    if kind not in ("lorentzian", "box"):
        raise ConfigError(f"{path}.kind", f"unknown interaction {kind!r}")
    b = _get(raw, "b", float, True) if "b" in raw else None
    if b is None or not b > 0:
        raise ConfigError(f"{path}.b", "band width must be a positive number")
    if kind == "lorentzian":
        return lorentzian_kernel(b), lambda x: 1.0 / (1.0 + (np.asarray(x) / b) ** 2)
    return box_kernel(b), lambda x: (abs(np.asarray(x)) <= b).astype(float)


def _grid(raw, path):
    g = _get(raw, path, required=False)
    if g is None:
        return None
    if isinstance(g, dict):
        start = _get(g, "start", float, False, 0.0)
        stop = _get(g, "stop", float)
        num = _get(g, "num", int)
        if num < 1:
            raise ConfigError(f"{path}.num", "must be >= 1")
        arr = np.linspace(start, stop, num)
    else:
        try:
            arr = np.asarray(g, dtype=float).ravel()
        except (TypeError, ValueError):
            raise ConfigError(path, "expected a list of numbers or {start, stop, num}") from None
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(path, "grid must be non-empty and finite")
    if np.any(np.diff(arr) <= 0):
        raise ConfigError(path, "grid must be strictly increasing")
    return arr


def _rho0(raw):
    r = _get(raw, "rho0", required=False)
    if r is None:
        return None
    if not isinstance(r, dict):
        raise ConfigError("rho0", "expected a table with diag or re/im")
    if "diag" in r:
        d = np.asarray(r["diag"], dtype=float)
        if d.shape != (2,):
            raise ConfigError("rho0.diag", "expected two numbers")
        m = np.diag(d).astype(complex)
    else:
        re = np.asarray(_get(r, "re"), dtype=float) if "re" in r else None
        if re is None:
            raise ConfigError("rho0", "give diag or re (and optionally im)")
        im = np.asarray(r.get("im", np.zeros((2, 2))), dtype=float)
        if re.shape != (2, 2) or im.shape != (2, 2):
            raise ConfigError("rho0", "re and im must be 2x2")
        m = re + 1j * im
    try:
        return reduced_state(m, name="rho0")
    except ValueError as exc:
        raise ConfigError("rho0", str(exc).split(": ", 1)[-1]) from None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated run description; `raw` is the dictionary it was parsed from."""

    raw: dict
    engine: str
    dos: object
    s: float
    v: float
    E: float
    beta: float
    kernel: object
    form_factor: object
    grid: np.ndarray
    rho0: np.ndarray
    n: int = None
    R: int = None
    master_seed: int = None
    out: str = None
    k: int = None


def parse_config(raw, engine=None):
    """Validate a configuration dictionary.

    Parameters
    ----------
    raw : dict
        Parsed TOML or a manifest's ``config`` echo.
    engine : str, optional
        Engine implied by the CLI subcommand; fills ``engine.kind`` when
        absent and must agree with it otherwise.
    """
    raw = copy.deepcopy(raw)
    kind = _get(raw, "engine.kind", str, required=engine is None, default=engine)
    if engine is not None and kind != engine and not (engine == "vanhove" and kind == "band"):
        raise ConfigError("engine.kind", f"{kind!r} conflicts with the {engine!r} subcommand")
    if kind not in ENGINES:
        raise ConfigError("engine.kind", f"choose one of {ENGINES}")
    raw.setdefault("engine", {})["kind"] = kind

    s = _get(raw, "model.s", float)
    v = _get(raw, "model.v", float)
    if v < 0:
        raise ConfigError("model.v", "must be non-negative")
    kernel, form = build_kernel(_get(raw, "model.interaction", required=False, default={}) or {})
    dos = None
    if kind != "band" or "dos" in raw.get("model", {}):
        dos = build_dos(_get(raw, "model.dos"))

    E = _get(raw, "model.E", float, required=False)
    J = _get(raw, "model.J", int, required=False)
    e = _get(raw, "model.e", float, required=False)
    beta = _get(raw, "model.beta", float, required=False)
    k = _get(raw, "model.k", int, required=False)
    if E is None and J is not None and e is not None:
        E = J * e
    if E is not None and J is not None and e is not None and not np.isclose(E, J * e):
        raise ConfigError("model.E", "disagrees with model.J * model.e")

    if kind in ("analytic", "vanhove") and E is None:
        raise ConfigError("model.E", "required (or model.J and model.e)")
    if kind == "mc" and E is None and beta is None and k is None:
        raise ConfigError("model.E", "required: give E, (J, e), k or beta")
    if kind == "band":
        if form is None:
            raise ConfigError("model.interaction.kind", "band engine needs a banded interaction")
        if beta is None:
            raise ConfigError("model.beta", "required by the band engine")

    grid_key = "grid.tau" if kind in ("vanhove", "band") else "grid.t"
    grid = _grid(raw, grid_key)
    if grid is None:
        raise ConfigError(grid_key, "missing required field")
    if grid[0] < 0:
        raise ConfigError(grid_key, "times must be non-negative")
    rho0 = _rho0(raw)
    if rho0 is None:
        raise ConfigError("rho0", "missing required field")

    n = R = seed = None
    if kind == "mc":
        n = _get(raw, "engine.n", int)
        R = _get(raw, "engine.R", int)
        seed = _get(raw, "engine.master_seed", int, False, 0)
        if n < 1:
            raise ConfigError("engine.n", "must be >= 1")
        if R < 2:
            raise ConfigError("engine.R", "must be >= 2")
        if seed < 0:
            raise ConfigError("engine.master_seed", "must be non-negative")
    out = _get(raw, "out", str, required=False)
    return ExperimentConfig(raw, kind, dos, s, v, E, beta, kernel, form, grid, rho0, n, R, seed, out, k)


def read_raw(path):
    """Parse a TOML config, or the ``config`` entry of a JSON manifest, into a dict."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            import json

            raw = json.loads(path.read_text(encoding="utf-8"))
            return raw.get("config", raw)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    except ValueError as exc:
        raise ConfigError("--config", f"parse error: {exc}") from None


def load_config(path, engine=None, overrides=None):
    """Read and validate a config file (see :func:`read_raw`).

    `overrides` maps dotted paths to values and is applied before validation.
    """
    raw = read_raw(path)
    for key, val in (overrides or {}).items():
        cur = raw
        parts = key.split(".")
        for part in parts[:-1]:
            cur = cur.setdefault(part, {})
        cur[parts[-1]] = val
    return parse_config(raw, engine=engine)
