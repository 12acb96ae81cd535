"""scikit-learn style estimators wrapping the solvers.

The sensing matrix plays the role of the design matrix: ``fit(A, y)``
recovers the signal into ``coef_`` and ``predict(A)`` returns ``A @ coef_``.
Estimators follow the usual conventions (constructor arguments stored
verbatim, learned attributes end in ``_``) so they work with
``clone``, ``get_params`` and pipelines.
"""
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted, validate_data

from . import amp, oracle
from .denoisers import BernoulliGaussian
from .model import ProblemInstance


def _as_instance(A, y):
    return ProblemInstance(A=np.asarray(A, dtype=np.float64), y=np.asarray(y, dtype=np.float64))


class _AMPBase(RegressorMixin, BaseEstimator):
    def _options(self):
        raise NotImplementedError

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        # the threshold recursion assumes a random design with unit-norm
        # columns; generic regression data gives arbitrary scores
        tags.regressor_tags.poor_score = True
        return tags

    def fit(self, A, y):
        """Recover ``coef_`` from measurements ``y = A @ coef``.

        Parameters
        ----------
        A : array-like of shape (n_measurements, n_coefficients)
        y : array-like of shape (n_measurements,)

        Returns
        -------
        self
        """
        A, y = validate_data(self, A, y, y_numeric=True, dtype=np.float64)
        state, record = amp.run(_as_instance(A, y), self._options())
        self.coef_ = state.x
        self.residual_ = state.z
        self.threshold_ = state.threshold
        self.threshold_path_ = np.asarray(record.threshold_trajectory)
        self.n_iter_ = record.iterations_used
        self.converged_ = record.converged
        self.status_ = record.status
        self.objective_ = record.final_objective
        if not record.converged and record.status in ("max-iters", "diverged"):
            warnings.warn(f"{type(self).__name__} stopped with status {record.status!r} "
                          f"after {record.iterations_used} iterations", ConvergenceWarning)
        return self

    def predict(self, A):
        check_is_fitted(self, "coef_")
        A = validate_data(self, A, reset=False, dtype=np.float64)
        return A @ self.coef_


class AMPBasisPursuit(_AMPBase):
    """Basis pursuit (min ||x||_1 s.t. Ax = y) by parameter-free AMP.

    Parameters
    ----------
    max_iter : int, default=200
    tol : float, default=1e-8
        Stop when ``||x^{t+1} - x^t|| / ||x^t||`` falls below this.
    tau0 : float or None
        Initial threshold; ``None`` uses ``||y|| / sqrt(n)``.
    onsager : bool, default=True
        ``False`` gives plain iterative soft thresholding with the same
        threshold recursion (for comparisons only).
    """

    def __init__(self, max_iter=200, tol=1e-8, tau0=None, onsager=True):
        self.max_iter = max_iter
        self.tol = tol
        self.tau0 = tau0
        self.onsager = onsager

    def _options(self):
        return amp.SolverOptions(variant=amp.Variant.BASIS_PURSUIT, max_iters=self.max_iter,
                                 tol=self.tol, tau0=self.tau0, onsager=self.onsager)


class AMPLasso(_AMPBase):
    """Lasso ``lam ||x||_1 + 0.5 ||y - Ax||^2`` by AMP.

    Note the objective is not scaled by ``1/n`` as in
    :class:`sklearn.linear_model.Lasso`; ``lam`` here corresponds to
    ``n_samples * alpha`` there.
    """

    def __init__(self, lam=0.1, max_iter=200, tol=1e-8, tau0=None):
        self.lam = lam
        self.max_iter = max_iter
        self.tol = tol
        self.tau0 = tau0

    def _options(self):
        return amp.SolverOptions(variant=amp.Variant.LASSO, lam=self.lam,
                                 max_iters=self.max_iter, tol=self.tol, tau0=self.tau0)


class AMPBayes(_AMPBase):
    """Posterior-mean AMP under a Bernoulli-Gaussian prior.

    Parameters
    ----------
    prior_eps, prior_var : float
        Prior ``(1 - eps) delta_0 + eps N(0, var)``.  Ignored if ``prior``
        is given.
    prior : Prior or None
        Any prior object exposing ``posterior_moments(x, v)``.
    noise_var : float, default=0.0
        Measurement noise variance.
    """

    def __init__(self, prior_eps=0.1, prior_var=1.0, prior=None, noise_var=0.0,
                 max_iter=200, tol=1e-8, tau0=None):
        self.prior_eps = prior_eps
        self.prior_var = prior_var
        self.prior = prior
        self.noise_var = noise_var
        self.max_iter = max_iter
        self.tol = tol
        self.tau0 = tau0

    def _options(self):
        prior = self.prior if self.prior is not None else \
            BernoulliGaussian(self.prior_eps, self.prior_var)
        return amp.SolverOptions(variant=amp.Variant.BAYES, prior=prior,
                                 noise_var=self.noise_var, max_iters=self.max_iter,
                                 tol=self.tol, tau0=self.tau0)


class _LassoOracleBase(RegressorMixin, BaseEstimator):
    _solver = None

    def fit(self, A, y):
        A, y = validate_data(self, A, y, y_numeric=True, dtype=np.float64)
        sol = type(self)._solver(_as_instance(A, y), self.lam, tol=self.tol,
                                 max_iters=self.max_iter)
        self.coef_ = sol.x
        self.objective_ = sol.objective
        self.kkt_residual_ = sol.kkt_residual
        self.n_iter_ = sol.iterations
        return self

    def predict(self, A):
        check_is_fitted(self, "coef_")
        A = validate_data(self, A, reset=False, dtype=np.float64)
        return A @ self.coef_


class FISTALasso(_LassoOracleBase):
    """Reference Lasso solver: accelerated proximal gradient with restart."""

    _solver = staticmethod(oracle.fista_lasso)

    def __init__(self, lam=0.1, tol=1e-10, max_iter=200000):
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter


class CoordinateDescentLasso(_LassoOracleBase):
    """Reference Lasso solver: cyclic coordinate descent."""

    _solver = staticmethod(oracle.coordinate_descent_lasso)

    def __init__(self, lam=0.1, tol=1e-10, max_iter=100000):
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter
