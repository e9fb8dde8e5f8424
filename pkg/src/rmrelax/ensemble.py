"""Finite-n composite Hamiltonians and Monte Carlo averages.

The composite Hamiltonian on C^2 (x) C^n is

    H = s sigma_z (x) 1 + 1 (x) diag(E) + v sigma_x (x) w / sqrt(n),

with ``w`` a random real symmetric matrix.  Index ``a * n + j`` labels level
``a`` (0 for +, 1 for -) of the two-level system and reservoir level ``j``.
Each realization is diagonalized once and then propagated to all requested
times.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dos import quantile_levels
from .dynamics import EvolutionResult
from .state import reduced_state

__all__ = [
    "GOE",
    "Banded",
    "InteractionSpec",
    "CompositeHamiltonian",
    "PureLevel",
    "Canonical",
    "InitialState",
    "EnsembleEstimate",
    "MCConfig",
    "MCResult",
    "RealizationError",
    "sample_interaction",
    "assemble_hamiltonian",
    "evolve_reduced",
    "transfer_and_probabilities",
    "mc_average",
    "realization_seed",
    "nearest_level",
]


class RealizationError(FloatingPointError):
    """A realization produced non-finite numbers."""


@dataclass(frozen=True)
class GOE:
    """Independent entries with ``<w_jk^2> = 1 + delta_jk``."""


@dataclass(frozen=True)
class Banded:
    """Covariance ``<w_jk w_lm> = f(E_j, E_k) (d_jl d_km + d_jm d_kl)``.

    `kernel` is a vectorized callable ``f(E, E')``.
    """

    kernel: object


@dataclass(frozen=True)
class InteractionSpec:
    kind: object = GOE()
    v: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.v) and self.v >= 0):
            raise ValueError("interaction.v: must be a finite non-negative number")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_interaction(spec, levels, seed):
    """Draw the symmetric matrix ``w``.

    Entries with ``j <= k`` are independent Gaussians; the lower triangle is
    mirrored.  `seed` is anything accepted by ``numpy.random.default_rng``.
    """
    levels = np.asarray(levels, dtype=float)
    n = levels.size
    if n < 1:
        raise ValueError("levels: need at least one level")
    z = _rng(seed).standard_normal((n, n))
    if isinstance(spec.kind, GOE):
        var = np.ones((n, n))
    elif isinstance(spec.kind, Banded):
        var = np.asarray(spec.kind.kernel(levels[:, None], levels[None, :]), dtype=float)
        var = np.broadcast_to(var, (n, n))
        if np.any(var < 0) or not np.all(np.isfinite(var)):
            raise ValueError("interaction.kernel: values must be finite and non-negative")
    else:
        raise TypeError(f"unknown interaction kind {spec.kind!r}")
    up = np.triu(z * np.sqrt(var), 1)
    return up + up.T + np.diag(np.sqrt(2.0 * np.diag(var)) * np.diag(z))


@dataclass(frozen=True, eq=False)
class CompositeHamiltonian:
    n: int
    levels: np.ndarray
    s: float
    v: float
    matrix: np.ndarray

    def eigh(self, check=True):
        """Eigenpairs; with `check`, verifies ``||H x - l x|| / ||H|| <= 1e-10``."""
        lam, V = np.linalg.eigh(self.matrix)
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(V))):
            raise RealizationError("non-finite eigenpairs")
        if check:
            res = np.linalg.norm(self.matrix @ V - V * lam, axis=0).max()
            nrm = max(np.linalg.norm(self.matrix, 2), 1e-300)
            if res / nrm > 1e-10:
                raise RealizationError(f"eigenpair residual {res / nrm:.3e} exceeds 1e-10")
        return lam, V


def assemble_hamiltonian(s, spec, levels, w):
    """Block matrix ``[[diag(E) + s, v w / sqrt(n)], [v w / sqrt(n), diag(E) - s]]``."""
    levels = np.asarray(levels, dtype=float)
    n = levels.size
    w = np.asarray(w, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"w: expected shape {(n, n)}, got {w.shape}")
    c = spec.v / np.sqrt(n)
    H = np.zeros((2 * n, 2 * n))
    H[:n, :n] = np.diag(levels + s)
    H[n:, n:] = np.diag(levels - s)
    H[:n, n:] = c * w
    H[n:, :n] = c * w.T
    H = 0.5 * (H + H.T)
    return CompositeHamiltonian(n, levels, float(s), float(spec.v), H)


@dataclass(frozen=True)
class PureLevel:
    k: int


@dataclass(frozen=True)
class Canonical:
    beta: float


@dataclass(frozen=True, eq=False)
class InitialState:
    rho0: np.ndarray
    reservoir: object = PureLevel(0)

    def __post_init__(self):
        object.__setattr__(self, "rho0", reduced_state(self.rho0))

    def weights(self, levels):
        """Reservoir occupation weights c_k."""
        levels = np.asarray(levels, dtype=float)
        if isinstance(self.reservoir, PureLevel):
            k = self.reservoir.k
            if not 0 <= k < levels.size:
                raise IndexError(f"reservoir.k = {k} out of range for n = {levels.size}")
            c = np.zeros(levels.size)
            c[k] = 1.0
            return c
        x = -self.reservoir.beta * levels
        x -= x.max()
        c = np.exp(x)
        return c / c.sum()


def _columns(lam, V, n, k, times):
    """``X[t, a, j, b] = exp(-i H t)_{a j, b k}``."""
    Vk = V[[k, n + k], :]  # (2, 2n)
    ph = np.exp(-1j * np.outer(times, lam))  # (nt, 2n)
    X = V @ (ph[:, :, None] * Vk.T[None])  # (nt, 2n, 2)
    return X.reshape(times.size, 2, n, 2)


def transfer_and_probabilities(H, k, times, eig=None):
    """Transfer tensor and transition probabilities for one realization.

    Returns
    -------
    T : ndarray, shape (nt, 2, 2, 2, 2)
        ``rho_{ad}(t) = sum_{bg} T[t, a, d, b, g] rho_{bg}(0)`` for the
        reservoir started in level k.
    p : ndarray, shape (nt, 2, 2)
        ``p[t, a, g] = T[t, a, a, g, g]``: probability of level a at time t
        having started in level g.  ``p[t].sum(axis=0) == 1``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not 0 <= k < H.n:
        raise IndexError(f"k = {k} out of range for n = {H.n}")
    lam, V = eig if eig is not None else H.eigh()
    X = _columns(lam, V, H.n, k, times)
    T = np.einsum("tajb,tdjg->tadbg", X, X.conj())
    p = np.einsum("taaii->tai", T).real
    return T, p


def evolve_reduced(H, init, times, eig=None):
    """Reduced matrix trajectory, shape (nt, 2, 2)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times: must be non-negative")
    lam, V = eig if eig is not None else H.eigh()
    n = H.n
    rho0 = init.rho0
    if isinstance(init.reservoir, PureLevel):
        X = _columns(lam, V, n, init.reservoir.k, times)
        return np.einsum("tajb,bg,tdjg->tad", X, rho0, X.conj())
    c = init.weights(H.levels)
    Va = V.reshape(2, n, 2 * n)
    # M = V^T (rho0 (x) diag c) V in the eigenbasis
    M = np.einsum("bja,bg,j,gjc->ac", Va, rho0, c, Va)
    ph = np.exp(-1j * np.outer(times, lam))
    out = np.empty((times.size, 2, 2), dtype=complex)
    for a in range(2):
        for d in range(2):
            K = Va[a].T @ Va[d]  # (2n, 2n)
            out[:, a, d] = np.einsum("ta,ab,tb->t", ph, M * K, ph.conj())
    return out


# ------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True, eq=False)
class EnsembleEstimate:
    """Mean and standard error of an observable over R realizations."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: int


class _Welford:
    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.n += 1
        if self.mean is None:
            self.mean = x.copy()
            self.m2 = np.zeros_like(x)
            return
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    def result(self, times):
        var = self.m2 / (self.n - 1) if self.n > 1 else np.full_like(self.mean, np.nan)
        return EnsembleEstimate(times, self.mean, np.sqrt(var / self.n), self.n)


@dataclass(frozen=True, eq=False)
class MCConfig:
    """Everything that defines a Monte Carlo run.

    Exactly one of `E` (target reservoir energy, nearest quantile level is
    used) or `k` (level index) selects a pure reservoir level, unless `beta`
    is given, in which case the reservoir starts canonical.
    """

    dos: object
    n: int
    s: float
    interaction: InteractionSpec
    rho0: np.ndarray
    times: np.ndarray
    E: float = None
    k: int = None
    beta: float = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n: must be >= 1")
        object.__setattr__(self, "rho0", reduced_state(self.rho0))
        object.__setattr__(self, "times", np.atleast_1d(np.asarray(self.times, dtype=float)))

    def levels(self):
        return quantile_levels(self.dos, self.n)

    def level_index(self, levels=None):
        levels = self.levels() if levels is None else levels
        if self.k is not None:
            return int(self.k)
        if self.E is None:
            raise ValueError("config: give E or k")
        return nearest_level(levels, self.E)


def nearest_level(levels, E):
    return int(np.argmin(abs(np.asarray(levels) - E)))


def realization_seed(master_seed, i):
    """Independent stream for realization i, a pure function of (master_seed, i)."""
    return np.random.SeedSequence(master_seed, spawn_key=(i,))


@dataclass(frozen=True, eq=False)
class MCResult:
    config: MCConfig
    rho_re: EnsembleEstimate
    rho_im: EnsembleEstimate
    p: EnsembleEstimate
    level: float
    k: int
    meta: dict = field(default_factory=dict)

    @property
    def rho(self):
        return self.rho_re.mean + 1j * self.rho_im.mean

    def to_evolution(self):
        T = None
        err = self.rho_re.stderr + 1j * self.rho_im.stderr
        return EvolutionResult(self.config.times, self.rho, None, transfer=T, rho_stderr=err,
                               p_stderr=self.p.stderr, meta={"p": self.p.mean, **self.meta})


def _one(cfg, levels, k, master_seed, i):
    seed = realization_seed(master_seed, i)
    w = sample_interaction(cfg.interaction, levels, seed)
    H = assemble_hamiltonian(cfg.s, cfg.interaction, levels, w)
    eig = H.eigh()
    if cfg.beta is None:
        init = InitialState(cfg.rho0, PureLevel(k))
    else:
        init = InitialState(cfg.rho0, Canonical(cfg.beta))
    rho = evolve_reduced(H, init, cfg.times, eig=eig)
    if cfg.beta is None:
        _, p = transfer_and_probabilities(H, k, cfg.times, eig=eig)
    else:
        p = np.full((cfg.times.size, 2, 2), np.nan)
    if not (np.all(np.isfinite(rho)) and (cfg.beta is not None or np.all(np.isfinite(p)))):
        raise RealizationError(f"realization {i} (master seed {master_seed}) produced non-finite values")
    return rho, p


def mc_average(config, R, master_seed, workers=1):
    """Average the reduced dynamics over R interaction draws.

    Realization i draws from ``SeedSequence(master_seed, spawn_key=(i,))`` and
    results are folded in index order, so the output does not depend on
    `workers`.

    Returns
    -------
    MCResult
    """
    if R < 2:
        raise ValueError("R: need at least 2 realizations")
    levels = config.levels()
    k = config.level_index(levels) if config.beta is None else None
    acc_re, acc_im, acc_p = _Welford(), _Welford(), _Welford()

    def job(i):
        return _one(config, levels, k, master_seed, i)

    if workers <= 1:
        results = map(job, range(R))
        ex = None
    else:
        ex = ThreadPoolExecutor(max_workers=workers)
        results = ex.map(job, range(R))
    try:
        for rho, p in results:
            acc_re.add(rho.real)
            acc_im.add(rho.imag)
            acc_p.add(p)
    finally:
        if ex is not None:
            ex.shutdown(cancel_futures=True)
    t = config.times
    level = float(levels[k]) if k is not None else float("nan")
    return MCResult(config, acc_re.result(t), acc_im.result(t), acc_p.result(t), level, k,
                    meta={"R": R, "master_seed": master_seed, "n": config.n})
