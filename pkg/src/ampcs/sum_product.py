"""Edge-level message passing on the complete bipartite factor graph.

This is the reference algorithm AMP approximates: it keeps one scalar per
directed edge (``2 n N`` numbers) instead of one per node.  Tables are
stored as ``n x N`` arrays indexed ``[a, i]``::

    x_msgs[a, i] = x_{i -> a}      (variable i to factor a)
    z_msgs[a, i] = z_{a -> i}      (factor a to variable i)

Updates are synchronous.  Cavity sums are formed as the full sum minus the
excluded term, so a sweep costs O(nN).
"""
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .denoisers import f_beta_moments, soft_threshold, soft_threshold_deriv
from .exceptions import ConfigurationError, DegenerateThresholdError

THRESHOLD_FLOOR = np.finfo(np.float64).tiny


@dataclass(frozen=True, eq=False)
class EdgeMessages:
    x_msgs: np.ndarray
    z_msgs: np.ndarray
    tau_hat: float
    t: int = 0

    def __post_init__(self):
        for name in ("x_msgs", "z_msgs"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x_msgs.shape != self.z_msgs.shape:
            raise ConfigurationError("message tables must have the same shape")


def default_tau0(inst):
    rms = float(np.linalg.norm(inst.y) / np.sqrt(inst.n))
    return rms if rms > 0 else 1.0


def mp_init(inst, tau0=None):
    """All ``x_{i->a} = 0``, ``z_{a->i} = y_a``, ``tau_hat = tau0``."""
    tau0 = default_tau0(inst) if tau0 is None else float(tau0)
    if not tau0 > 0:
        raise ConfigurationError("tau0 must be positive")
    n, N = inst.A.shape
    return EdgeMessages(x_msgs=np.zeros((n, N)),
                        z_msgs=np.repeat(np.asarray(inst.y, dtype=np.float64)[:, None], N, axis=1),
                        tau_hat=tau0, t=0)


def _check(msgs, inst):
    if msgs.x_msgs.shape != inst.A.shape:
        raise ConfigurationError(
            f"messages have shape {msgs.x_msgs.shape}, instance is {inst.A.shape}")


def _factor_update(inst, X):
    # z_{a->i} = y_a - sum_{j != i} A_aj x_{j->a}
    AX = inst.A * X
    return inst.y[:, None] - (AX.sum(axis=1)[:, None] - AX)


def variable_sums(msgs, inst):
    """Full sums ``sum_b A_bi z_{b->i}`` and cavity sums (excluding ``b = a``)."""
    AZ = inst.A * msgs.z_msgs
    full = AZ.sum(axis=0)
    return full, full[None, :] - AZ


def mp_step(msgs, inst):
    """One synchronous sweep of the large-beta message-passing rules."""
    _check(msgs, inst)
    tau = msgs.tau_hat
    full, cavity = variable_sums(msgs, inst)
    X = soft_threshold(cavity, tau)
    # the threshold recursion uses the full sum over factors
    tau_new = tau / inst.n * float(np.sum(soft_threshold_deriv(full, tau)))
    new = EdgeMessages(x_msgs=X, z_msgs=_factor_update(inst, X), tau_hat=tau_new, t=msgs.t + 1)
    if not tau_new > THRESHOLD_FLOOR:
        raise DegenerateThresholdError(
            f"tau_hat collapsed to {tau_new:g} at t={new.t}", state=msgs, next_state=new)
    return new


def mp_finite_beta_step(msgs, inst, beta):
    """Same sweep with ``eta`` replaced by the finite-beta mean ``F_beta``.

    Edge variances ``tau_{i->a} = beta G_beta(cavity; tau_hat)`` are collapsed
    into ``tau_hat_new = (1/n) sum_a sum_j A_aj^2 tau_{j->a}``.
    """
    if not beta > 0 or not np.isfinite(beta):
        raise ConfigurationError("beta must be finite and positive")
    _check(msgs, inst)
    _, cavity = variable_sums(msgs, inst)
    X, G = f_beta_moments(cavity, msgs.tau_hat, beta)
    tau_edges = beta * G
    tau_new = float(np.sum(inst.A ** 2 * tau_edges)) / inst.n
    new = EdgeMessages(x_msgs=X, z_msgs=_factor_update(inst, X), tau_hat=tau_new, t=msgs.t + 1)
    if not tau_new > THRESHOLD_FLOOR:
        raise DegenerateThresholdError(
            f"tau_hat collapsed to {tau_new:g} at t={new.t}", state=msgs, next_state=new)
    return new


def mp_estimate(msgs, inst, beta=None):
    """Node beliefs from all incoming messages: ``eta(sum_b A_bi z_{b->i}; tau_hat)``.

    With a finite ``beta`` the belief mean ``F_beta`` is returned instead.
    """
    _check(msgs, inst)
    full, _ = variable_sums(msgs, inst)
    if beta is None or np.isinf(beta):
        return soft_threshold(full, msgs.tau_hat)
    return f_beta_moments(full, msgs.tau_hat, beta)[0]


def edge_spread(msgs):
    """Per-variable spread ``max_a x_{i->a} - min_a x_{i->a}``."""
    return msgs.x_msgs.max(axis=0) - msgs.x_msgs.min(axis=0)


def kolmogorov_distance(samples, cdf):
    """Sup-distance between the empirical CDF of ``samples`` and ``cdf``.

    ``cdf`` is either a callable (evaluated at the sorted samples, using the
    one-sample jump-point formula) or a second sample, in which case the
    two-sample distance is computed exactly on the merged jump points.
    """
    a = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if a.size == 0:
        raise ConfigurationError("empty sample set")
    if callable(cdf):
        n = a.size
        F = np.asarray(cdf(a), dtype=np.float64)
        upper = np.arange(1, n + 1) / n - F
        lower = F - np.arange(0, n) / n
        return float(min(1.0, max(upper.max(), lower.max(), 0.0)))
    b = np.sort(np.asarray(cdf, dtype=np.float64).ravel())
    if b.size == 0:
        raise ConfigurationError("empty sample set")
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(Fa - Fb).max())


def gaussian_fit_distance(samples):
    """Kolmogorov distance of ``samples`` to the Gaussian with matched moments."""
    s = np.asarray(samples, dtype=np.float64).ravel()
    sd = s.std()
    if sd == 0:
        raise ConfigurationError("samples have zero spread; no Gaussian fit")
    return kolmogorov_distance((s - s.mean()) / sd, norm.cdf)
