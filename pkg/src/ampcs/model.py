"""Problem instances, random generators and experiment configuration.

Random streams
--------------
Every instance is a pure function of ``(cfg.seed, trial_index)``.  A
:class:`numpy.random.SeedSequence` is built from ``entropy=cfg.seed`` and
``spawn_key=(trial_index,)``; its three spawned children seed independent
PCG64 generators for, in order, the sensing matrix, the signal and the
measurement noise.  SeedSequence hashing and PCG64 are specified bit-exactly
by numpy, so instances are stable across platforms.
"""
import json
from dataclasses import dataclass, field, asdict, replace
from enum import Enum

import numpy as np

from ._io import dumps_json
from .exceptions import ConfigurationError


class Ensemble(str, Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"


class Amplitude(str, Enum):
    PLUS_MINUS_ONE = "pm1"
    GAUSSIAN = "gaussian"


class Solver(str, Enum):
    AMP_BP = "amp-bp"
    AMP_LASSO = "amp-lasso"
    AMP_BAYES = "amp-bayes"
    ISTA = "ista"
    FISTA = "fista"
    EDGE_MP = "edge-mp"


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Sensing matrix ``A`` (n x N), measurements ``y = A s_o + w``.

    ``s_o`` is ``None`` when the ground truth is unknown (e.g. instances
    built from user data by the estimators).
    """

    A: np.ndarray
    y: np.ndarray
    s_o: np.ndarray = None
    sigma: float = 0.0
    ensemble: Ensemble = Ensemble.RADEMACHER
    amplitude: Amplitude = Amplitude.PLUS_MINUS_ONE
    seed: int = None
    trial_index: int = None

    def __post_init__(self):
        A = _readonly(self.A)
        y = _readonly(self.y)
        if A.ndim != 2 or y.ndim != 1 or A.shape[0] != y.shape[0]:
            raise ConfigurationError(
                f"shape mismatch: A {A.shape}, y {y.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        if self.s_o is not None:
            s = _readonly(self.s_o)
            if s.shape != (A.shape[1],):
                raise ConfigurationError(f"s_o has shape {s.shape}, expected ({A.shape[1]},)")
            object.__setattr__(self, "s_o", s)
        if self.sigma < 0:
            raise ConfigurationError("noise level must be nonnegative")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def N(self):
        return self.A.shape[1]

    @property
    def k(self):
        return None if self.s_o is None else int(np.count_nonzero(self.s_o))

    @property
    def delta(self):
        return undersampling_ratio(self)

    def to_dict(self):
        return {
            "N": self.N,
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "trial_index": self.trial_index,
            "ensemble": Ensemble(self.ensemble).value,
            "amplitude": Amplitude(self.amplitude).value,
            "sigma": float(self.sigma),
            "A": self.A.ravel(order="C"),
            "s_o": self.s_o,
            "y": self.y,
        }

    @classmethod
    def from_dict(cls, d):
        n, N = int(d["n"]), int(d["N"])
        A = np.asarray(d["A"], dtype=np.float64).reshape(n, N)
        s_o = None if d.get("s_o") is None else np.asarray(d["s_o"], dtype=np.float64)
        return cls(A=A, y=np.asarray(d["y"], dtype=np.float64), s_o=s_o,
                   sigma=float(d.get("sigma", 0.0)),
                   ensemble=Ensemble(d.get("ensemble", "rademacher")),
                   amplitude=Amplitude(d.get("amplitude", "pm1")),
                   seed=d.get("seed"), trial_index=d.get("trial_index"))


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 500
    n: int = 250
    k: int = 25
    ensemble: Ensemble = Ensemble.RADEMACHER
    amplitude: Amplitude = Amplitude.PLUS_MINUS_ONE
    sigma: float = 0.0
    lam: float = 0.0
    solver: Solver = Solver.AMP_BP
    max_iters: int = 200
    tol: float = 1e-8
    seed: int = 0
    trials: int = 1
    tau0: float = None
    prior_eps: float = None
    prior_var: float = 1.0
    noise_var: float = None

    def __post_init__(self):
        for name, enum in (("ensemble", Ensemble), ("amplitude", Amplitude), ("solver", Solver)):
            try:
                object.__setattr__(self, name, enum(getattr(self, name)))
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
        if self.n < 1 or self.N < 1:
            raise ConfigurationError("n and N must be positive")
        if self.n >= self.N:
            raise ConfigurationError(f"need n < N, got n={self.n}, N={self.N}")
        if not 0 <= self.k <= self.n:
            raise ConfigurationError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.sigma < 0 or self.lam < 0:
            raise ConfigurationError("sigma and lambda must be nonnegative")
        if self.trials < 0:
            raise ConfigurationError("trials must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        for key in ("ensemble", "amplitude", "solver"):
            d[key] = d[key].value
        return d


@dataclass
class TrialRecord:
    seed: int
    trial_index: int
    iterations_used: int
    per_iteration_mse: list = field(default_factory=list)
    final_rel_error: float = float("nan")
    final_objective: float = float("nan")
    threshold_trajectory: list = field(default_factory=list)
    converged: bool = False
    status: str = "ok"
    estimate: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("estimate")
        return d

    def to_json(self):
        return dumps_json(self.to_dict())


def trial_streams(seed, trial_index, n_streams=3):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(n_streams)]


def derive_seed(seed, *key):
    """64-bit seed for a sub-experiment (e.g. one sweep cell)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sensing_matrix(n, N, ensemble, rng):
    ensemble = Ensemble(ensemble)
    if ensemble is Ensemble.RADEMACHER:
        signs = rng.integers(0, 2, size=(n, N), dtype=np.int8) * 2 - 1
        return signs.astype(np.float64) / np.sqrt(n)
    return rng.standard_normal((n, N)) / np.sqrt(n)


def sparse_signal(N, k, amplitude, rng):
    s = np.zeros(N)
    if k == 0:
        return s
    support = rng.permutation(N)[:k]
    if Amplitude(amplitude) is Amplitude.PLUS_MINUS_ONE:
        s[support] = rng.integers(0, 2, size=k) * 2.0 - 1.0
    else:
        vals = rng.standard_normal(k)
        # a zero draw would break the exact-k contract
        vals[vals == 0.0] = 1.0
        s[support] = vals
    return s


def generate_instance(cfg, trial_index=0):
    """Draw the instance for ``(cfg.seed, trial_index)``."""
    rng_a, rng_s, rng_w = trial_streams(cfg.seed, trial_index)
    A = sensing_matrix(cfg.n, cfg.N, cfg.ensemble, rng_a)
    s_o = sparse_signal(cfg.N, cfg.k, cfg.amplitude, rng_s)
    y = A @ s_o
    if cfg.sigma > 0:
        y = y + cfg.sigma * rng_w.standard_normal(cfg.n)
    return ProblemInstance(A=A, y=y, s_o=s_o, sigma=cfg.sigma, ensemble=cfg.ensemble,
                           amplitude=cfg.amplitude, seed=int(cfg.seed),
                           trial_index=int(trial_index))


def undersampling_ratio(inst):
    return inst.n / inst.N


def dump_instance(inst, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(inst.to_dict()))


def load_instance(path):
    with open(path, encoding="utf-8") as fh:
        return ProblemInstance.from_dict(json.load(fh))
