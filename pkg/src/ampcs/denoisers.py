"""Scalar nonlinearities used by the message-passing solvers.

* soft thresholding ``eta(x; b) = sign(x) (|x| - b)_+`` and its derivative,
* mean/variance of the Laplace-times-Gaussian density
  ``f_beta(s; x, b) ~ exp(-beta |s| - beta/(2b) (s - x)^2)``,
* posterior mean/variance of a prior observed in Gaussian noise.

All functions broadcast over numpy arrays.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, expit, log_ndtr, logsumexp
from scipy.stats import truncnorm

from .exceptions import ConfigurationError, PrecisionLossError

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

# below this standardized offset the truncated-normal moments switch from the
# inverse Mills ratio to a continued fraction (the direct formula cancels)
_CF_SWITCH = -8.0
_CF_DEPTH = 80

BETA_B_LIMIT = 1e12


def soft_threshold(x, b):
    """``sign(x) * max(|x| - b, 0)``; the prox of ``b |.|``."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - b, 0.0)


def soft_threshold_deriv(x, b):
    """Indicator ``|x| > b``; the kink ``|x| == b`` maps to 0."""
    return (np.abs(np.asarray(x, dtype=np.float64)) > b).astype(np.float64)


def _log_mills(alpha):
    """``log(Phi(alpha) / phi(alpha))`` without overflow or cancellation."""
    alpha = np.asarray(alpha, dtype=np.float64)
    out = np.empty_like(alpha)
    neg = alpha <= 0
    out[neg] = np.log(np.sqrt(np.pi / 2.0) * erfcx(-alpha[neg] / np.sqrt(2.0)))
    a = alpha[~neg]
    out[~neg] = log_ndtr(a) + 0.5 * a * a + _HALF_LOG_2PI
    return out


def _positive_truncated_moments(alpha):
    """Mean and variance of ``T ~ N(alpha, 1)`` conditioned on ``T > 0``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    mean = np.empty_like(alpha)
    var = np.empty_like(alpha)

    direct = alpha >= _CF_SWITCH
    a = alpha[direct]
    m = a + _SQRT_2_OVER_PI / erfcx(-a / np.sqrt(2.0))
    mean[direct] = m
    var[direct] = 1.0 + a * m - m * m

    # For u = -alpha large, E[T] = 1/(u + K) with
    # K = 2/(u + 3/(u + 4/(u + ...))) and Var[T] = E[T] (K - E[T]).
    u = -alpha[~direct]
    K = np.zeros_like(u)
    for j in range(_CF_DEPTH, 1, -1):
        K = j / (u + K)
    m = 1.0 / (u + K)
    mean[~direct] = m
    var[~direct] = m * (K - m)
    return mean, var


def f_beta_moments(x, b, beta):
    """Mean ``F_beta(x; b)`` and variance ``G_beta(x; b)`` of ``f_beta(.; x, b)``.

    The density splits at ``s = 0`` into two Gaussians of variance ``b/beta``
    centred at ``x - b`` (right half-line) and ``x + b`` (left half-line).
    Each piece contributes a truncated-normal moment; the log ratio of the
    piece masses reduces exactly to a difference of log Mills ratios, so no
    ``beta * x``-sized terms are ever formed.

    Raises
    ------
    PrecisionLossError
        If ``beta * max(b, 1/b)`` exceeds ``BETA_B_LIMIT``.
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(b <= 0) or np.any(beta <= 0):
        raise ConfigurationError("f_beta needs beta > 0 and b > 0")
    if np.any(beta * np.maximum(b, 1.0 / b) > BETA_B_LIMIT):
        raise PrecisionLossError(
            f"beta*max(b, 1/b) exceeds {BETA_B_LIMIT:g}; closed form unreliable")
    x, b, beta = np.broadcast_arrays(x, b, beta)
    scale = np.sqrt(b / beta)
    alpha_pos = (x - b) / scale
    alpha_neg = -(x + b) / scale

    log_ratio = _log_mills(alpha_pos) - _log_mills(alpha_neg)
    p_pos = expit(log_ratio)
    p_neg = expit(-log_ratio)

    m_pos, v_pos = _positive_truncated_moments(alpha_pos)
    m_neg, v_neg = _positive_truncated_moments(alpha_neg)
    mean_pos = scale * m_pos
    mean_neg = -scale * m_neg

    F = p_pos * mean_pos + p_neg * mean_neg
    G = (p_pos * v_pos + p_neg * v_neg) * scale * scale \
        + p_pos * p_neg * (mean_pos - mean_neg) ** 2
    if F.ndim == 0:
        return float(F), float(G)
    return F, G


def sample_f_beta(x, b, beta, rng, size=None):
    """Draw from ``f_beta(.; x, b)`` (broadcast over ``x``).

    Picks the half-line piece with its exact mass, then samples the
    corresponding truncated Gaussian.
    """
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape if size is None else tuple(np.atleast_1d(size))
    x = np.broadcast_to(x, shape)
    scale = np.sqrt(b / beta)
    alpha_pos = (x - b) / scale
    alpha_neg = -(x + b) / scale
    p_pos = expit(_log_mills(alpha_pos) - _log_mills(alpha_neg))
    right = rng.random(shape) < p_pos
    pos = truncnorm.rvs(-alpha_pos, np.inf, loc=x - b, scale=scale, size=shape,
                        random_state=rng)
    neg = truncnorm.rvs(-np.inf, alpha_neg, loc=x + b, scale=scale, size=shape,
                        random_state=rng)
    return np.where(right, pos, neg)


@dataclass(frozen=True)
class LaplaceGaussianFamily:
    beta: float
    x: float
    b: float

    def __post_init__(self):
        if not (self.beta > 0 and self.b > 0):
            raise ConfigurationError("need beta > 0 and b > 0")

    def log_density(self, s):
        """Unnormalized log density."""
        return -self.beta * np.abs(s) - self.beta / (2.0 * self.b) * (s - self.x) ** 2

    def mode(self):
        return float(soft_threshold(self.x, self.b))

    def scale(self):
        return float(np.sqrt(self.b / self.beta))

    def moments(self):
        return f_beta_moments(self.x, self.b, self.beta)


class Prior:
    """Distribution of one signal coordinate (shared by all coordinates)."""

    def posterior_moments(self, x, v):
        raise NotImplementedError

    @property
    def is_degenerate(self):
        return False


class PointMassMixture(Prior):
    """Finite mixture of point masses ``sum_k w_k delta_{a_k}``."""

    def __init__(self, weights, atoms):
        w = np.asarray(weights, dtype=np.float64).ravel()
        a = np.asarray(atoms, dtype=np.float64).ravel()
        if w.shape != a.shape or w.size == 0:
            raise ConfigurationError("weights and atoms must be nonempty and aligned")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("mixture weights must be >= 0 and sum to 1")
        self.weights = w
        self.atoms = a

    def __repr__(self):
        return f"PointMassMixture(weights={self.weights.tolist()}, atoms={self.atoms.tolist()})"

    @property
    def is_degenerate(self):
        return bool(np.count_nonzero(self.weights) == 1)

    def posterior_moments(self, x, v):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        logits = logw - (x[..., None] - self.atoms) ** 2 / (2.0 * v)
        post = np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))
        F = post @ self.atoms
        G = np.sum(post * (self.atoms - F[..., None]) ** 2, axis=-1)
        return F, G


class BernoulliGaussian(Prior):
    """``(1 - eps) delta_0 + eps N(0, var)``."""

    def __init__(self, eps, var=1.0):
        if not 0.0 <= eps <= 1.0:
            raise ConfigurationError("eps must lie in [0, 1]")
        if not var > 0:
            raise ConfigurationError("var must be positive")
        self.eps = float(eps)
        self.var = float(var)

    def __repr__(self):
        return f"BernoulliGaussian(eps={self.eps}, var={self.var})"

    @property
    def is_degenerate(self):
        return self.eps == 0.0

    def posterior_moments(self, x, v):
        x = np.asarray(x, dtype=np.float64)
        if self.eps == 0.0:
            return np.zeros_like(x), np.zeros_like(x)
        total = self.var + v
        shrink = self.var / total
        mu = shrink * x
        s2 = self.var * v / total
        if self.eps == 1.0:
            return mu, np.full_like(x, s2)
        # log odds of the slab against the spike at observation x
        log_odds = (np.log(self.eps) - np.log1p(-self.eps)
                    + 0.5 * np.log(v / total)
                    + 0.5 * x * x * (1.0 / v - 1.0 / total))
        pi = expit(log_odds)
        F = pi * mu
        G = pi * s2 + pi * (1.0 - pi) * mu * mu
        return F, G

    def sample(self, size, rng):
        slab = rng.random(size) < self.eps
        return np.where(slab, np.sqrt(self.var) * rng.standard_normal(size), 0.0)


def posterior_moments(prior, x, v):
    """``E[X | X + W = x]`` and ``Var[X | X + W = x]`` with ``W ~ N(0, v)``."""
    if not v > 0:
        raise ConfigurationError("noise variance must be positive")
    F, G = prior.posterior_moments(x, v)
    if np.ndim(F) == 0:
        return float(F), float(G)
    return F, G


class SoftThreshold:
    """Soft-threshold denoiser handle, ``b`` is the threshold."""

    def __call__(self, v, b):
        return soft_threshold(v, b)

    def derivative(self, v, b):
        return soft_threshold_deriv(v, b)

    def __repr__(self):
        return "SoftThreshold()"


class PosteriorMean:
    """Posterior-mean denoiser handle, ``b`` is the noise variance.

    The derivative uses ``dF/dx = G / b`` (Gaussian noise), so it needs no
    numerical differentiation.
    """

    def __init__(self, prior):
        self.prior = prior

    def __call__(self, v, b):
        return self.prior.posterior_moments(np.asarray(v, dtype=np.float64), b)[0]

    def moments(self, v, b):
        return self.prior.posterior_moments(np.asarray(v, dtype=np.float64), b)

    def derivative(self, v, b):
        return self.prior.posterior_moments(np.asarray(v, dtype=np.float64), b)[1] / b

    def __repr__(self):
        return f"PosteriorMean({self.prior!r})"


def apply_denoiser_vec(den, v, b):
    """Apply ``den`` coordinatewise; return outputs and the mean derivative."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ConfigurationError("empty input vector")
    return den(v, b), float(np.mean(den.derivative(v, b)))
