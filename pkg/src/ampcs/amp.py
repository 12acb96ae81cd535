"""Vectorized AMP solvers: basis pursuit, Lasso and Bayesian variants.

One iteration, for pseudo-data ``u = A^T z + x``::

    x_new = denoise(u; threshold)
    d     = mean(denoise'(u; threshold))
    z_new = y - A x_new + z * d / delta        # Onsager correction

and a scalar threshold recursion that depends on the variant:

* basis pursuit: ``tau_new = tau * d / delta``
* Lasso:        ``gamma_new = (lam + gamma) * d / delta``, threshold ``lam + gamma``
* Bayes:        ``gamma_new = mean(G(u; gamma + noise_var)) / delta``, where the
  denoiser is the posterior mean at noise variance ``gamma + noise_var``.
"""
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .denoisers import soft_threshold, soft_threshold_deriv
from .exceptions import ConfigurationError, DegenerateNoiseError, DegenerateThresholdError
from .model import TrialRecord

THRESHOLD_FLOOR = np.finfo(np.float64).tiny
REL_CHANGE_FLOOR = 1e-12
# an iterate this many times larger than ||A^T y|| + ||y|| counts as diverged
DIVERGENCE_RATIO = 1e10


class Variant(str, Enum):
    BASIS_PURSUIT = "bp"
    LASSO = "lasso"
    BAYES = "bayes"


@dataclass(frozen=True, eq=False)
class AmpState:
    x: np.ndarray
    z: np.ndarray
    threshold: float
    t: int = 0
    last_mean_deriv: float = 0.0

    @classmethod
    def initial(cls, inst, threshold):
        return cls(x=np.zeros(inst.N), z=np.array(inst.y, dtype=np.float64),
                   threshold=float(threshold))


@dataclass(frozen=True)
class SolverOptions:
    """Run configuration for :func:`run_solver`.

    ``lam`` is the Lasso weight; ``noise_var`` the measurement-noise
    variance added to ``gamma`` by the Bayesian variant.  ``tau0=None``
    picks a scale-matched default from ``y``.  ``threshold_schedule``
    (sequence indexed by iteration) replaces the threshold recursion.
    ``onsager=False`` drops the correction term (plain iterative soft
    thresholding); ``lagged_derivative=True`` uses the previous iteration's
    mean derivative in the correction.
    """

    variant: Variant = Variant.BASIS_PURSUIT
    lam: float = 0.0
    prior: object = None
    noise_var: float = 0.0
    max_iters: int = 200
    tol: float = 1e-8
    tau0: float = None
    record_trajectory: bool = True
    onsager: bool = True
    lagged_derivative: bool = False
    threshold_schedule: tuple = field(default=None, compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.lam < 0 or self.noise_var < 0:
            raise ConfigurationError("lam and noise_var must be nonnegative")
        if self.variant is Variant.BAYES and self.prior is None:
            raise ConfigurationError("Bayesian variant needs a prior")


def _correction(state, mean_deriv, delta, onsager, lagged):
    if not onsager:
        return 0.0
    d = state.last_mean_deriv if lagged else mean_deriv
    return state.z * (d / delta)


def amp_bp_step(state, inst, onsager=True, lagged_derivative=False):
    """One basis-pursuit AMP iteration with the ``tau`` recursion."""
    delta = inst.n / inst.N
    u = inst.A.T @ state.z + state.x
    tau = state.threshold
    x_new = soft_threshold(u, tau)
    d = float(np.mean(soft_threshold_deriv(u, tau)))
    tau_new = tau / delta * d
    z_new = inst.y - inst.A @ x_new + _correction(state, d, delta, onsager, lagged_derivative)
    new = AmpState(x=x_new, z=z_new, threshold=tau_new, t=state.t + 1, last_mean_deriv=d)
    if not tau_new > THRESHOLD_FLOOR:
        raise DegenerateThresholdError(
            f"threshold collapsed to {tau_new:g} at t={new.t}", state=state, next_state=new)
    return new


def amp_lasso_step(state, inst, lam, onsager=True, lagged_derivative=False):
    """One AMP-Lasso iteration; the threshold is ``lam + gamma``."""
    if lam < 0:
        raise ConfigurationError("lambda must be nonnegative")
    delta = inst.n / inst.N
    u = inst.A.T @ state.z + state.x
    b = lam + state.threshold
    x_new = soft_threshold(u, b)
    d = float(np.mean(soft_threshold_deriv(u, b)))
    gamma_new = b / delta * d
    z_new = inst.y - inst.A @ x_new + _correction(state, d, delta, onsager, lagged_derivative)
    new = AmpState(x=x_new, z=z_new, threshold=gamma_new, t=state.t + 1, last_mean_deriv=d)
    if not lam + gamma_new > THRESHOLD_FLOOR:
        raise DegenerateThresholdError(
            f"threshold lam + gamma collapsed at t={new.t}", state=state, next_state=new)
    return new


def amp_bayes_step(state, inst, prior, noise_var=0.0, onsager=True, lagged_derivative=False):
    """One Bayesian AMP iteration with posterior-mean denoiser."""
    v = state.threshold + noise_var
    if not v > THRESHOLD_FLOOR:
        raise DegenerateNoiseError("effective noise variance is zero", state=state)
    delta = inst.n / inst.N
    u = inst.A.T @ state.z + state.x
    x_new, G = prior.posterior_moments(u, v)
    mean_G = float(np.mean(G))
    d = mean_G / v
    gamma_new = mean_G / delta
    z_new = inst.y - inst.A @ x_new + _correction(state, d, delta, onsager, lagged_derivative)
    new = AmpState(x=x_new, z=z_new, threshold=gamma_new, t=state.t + 1, last_mean_deriv=d)
    if not gamma_new + noise_var > THRESHOLD_FLOOR:
        raise DegenerateNoiseError(
            f"effective noise variance collapsed at t={new.t}", state=state, next_state=new)
    return new


def default_threshold(inst, variant):
    """``||y|| / sqrt(n)`` (a threshold) or ``||y||^2 / n`` (a variance, Bayes)."""
    rms = float(np.linalg.norm(inst.y) / np.sqrt(inst.n))
    if rms == 0.0:
        return 1.0
    return rms * rms if Variant(variant) is Variant.BAYES else rms


def _step(state, inst, opts):
    if opts.variant is Variant.BASIS_PURSUIT:
        return amp_bp_step(state, inst, opts.onsager, opts.lagged_derivative)
    if opts.variant is Variant.LASSO:
        return amp_lasso_step(state, inst, opts.lam, opts.onsager, opts.lagged_derivative)
    return amp_bayes_step(state, inst, opts.prior, opts.noise_var, opts.onsager,
                          opts.lagged_derivative)


def objective(inst, x, opts):
    r = inst.y - inst.A @ x
    if opts.variant is Variant.BASIS_PURSUIT:
        return float(np.abs(x).sum())
    if opts.variant is Variant.LASSO:
        return float(opts.lam * np.abs(x).sum() + 0.5 * (r @ r))
    return float(0.5 * (r @ r))


def relative_error(x, s_o):
    ref = float(np.linalg.norm(s_o))
    err = float(np.linalg.norm(x - s_o))
    return err / ref if ref > 0 else err


def run(inst, opts):
    """Iterate from ``x = 0, z = y``; return the final state and a TrialRecord."""
    tau0 = default_threshold(inst, opts.variant) if opts.tau0 is None else float(opts.tau0)
    state = AmpState.initial(inst, tau0)
    mse, thresholds = [], []
    converged = False
    status = "max-iters"
    schedule = opts.threshold_schedule
    blowup = DIVERGENCE_RATIO * max(float(np.linalg.norm(inst.A.T @ inst.y)
                                          + np.linalg.norm(inst.y)), THRESHOLD_FLOOR)

    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(opts.max_iters):
            if schedule is not None:
                state = replace(state, threshold=float(schedule[min(t, len(schedule) - 1)]))
            used = state.threshold
            degenerate = None
            try:
                new = _step(state, inst, opts)
            except DegenerateThresholdError as exc:
                if exc.next_state is None:
                    status = "degenerate"
                    break
                new, degenerate = exc.next_state, exc
            if opts.record_trajectory:
                thresholds.append(used)
                if inst.s_o is not None:
                    diff = new.x - inst.s_o
                    mse.append(float(diff @ diff) / inst.N)
            if not (np.all(np.isfinite(new.x)) and np.all(np.isfinite(new.z))
                    and np.linalg.norm(new.x) <= blowup):
                state = new
                status = "diverged"
                break
            change = np.linalg.norm(new.x - state.x) / max(np.linalg.norm(state.x),
                                                           REL_CHANGE_FLOOR)
            state = new
            if degenerate is not None:
                converged = bool(change <= opts.tol)
                prior = getattr(opts, "prior", None)
                if isinstance(degenerate, DegenerateNoiseError) and prior is not None \
                        and prior.is_degenerate:
                    status = "degenerate-prior"
                else:
                    status = "degenerate-threshold"
                break
            if change <= opts.tol:
                converged = True
                status = "ok"
                break

    if inst.s_o is not None:
        rel = relative_error(state.x, inst.s_o) if np.all(np.isfinite(state.x)) else float("inf")
    else:
        rel = float("nan")
    with np.errstate(over="ignore", invalid="ignore"):
        obj = objective(inst, state.x, opts)
    record = TrialRecord(
        seed=inst.seed, trial_index=inst.trial_index, iterations_used=state.t,
        per_iteration_mse=mse, final_rel_error=rel, final_objective=obj,
        threshold_trajectory=thresholds, converged=converged, status=status,
        estimate=state.x)
    return state, record


def run_solver(inst, opts):
    """Run AMP to convergence (or ``max_iters``) and summarize it."""
    return run(inst, opts)[1]
