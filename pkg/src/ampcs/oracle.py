"""Reference solvers and numeric oracles used to validate the AMP code.

Nothing here is used by the AMP solvers themselves.  The module imports
only numpy/scipy so that a bug in :mod:`ampcs.denoisers` or
:mod:`ampcs.amp` cannot leak into the checks.
"""
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .exceptions import (ConfigurationError, InfeasibleError, PowerIterationError,
                         QuadratureError)


def _shrink(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lasso_objective(A, y, x, lam):
    r = y - A @ x
    return float(lam * np.abs(x).sum() + 0.5 * (r @ r))


def lasso_kkt_residual(A, y, x, lam):
    """Largest violation of the Lasso subgradient conditions at ``x``."""
    g = A.T @ (y - A @ x)
    active = x != 0
    viol = np.where(active, np.abs(g - lam * np.sign(x)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


@dataclass
class LassoSolution:
    x: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float

    @classmethod
    def certify(cls, A, y, x, lam, iterations):
        # objective and KKT recomputed from x alone, outside the solver loop
        return cls(x=x, objective=lasso_objective(A, y, x, lam), iterations=int(iterations),
                   kkt_residual=lasso_kkt_residual(A, y, x, lam))


def spectral_norm_sq(A, tol=1e-12, max_iters=10000):
    """Largest eigenvalue of ``A^T A`` by power iteration."""
    v = np.random.default_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise PowerIterationError("power iteration collapsed; is A zero?")
        v = w / nrm
        if abs(nrm - est) <= tol * nrm:
            return nrm
        est = nrm
    return est


def _fista(A, y, lam, L, x, tol, max_iters, check_every=10):
    v = x.copy()
    t = 1.0
    Aty = A.T @ y
    it = 0
    for it in range(1, max_iters + 1):
        x_new = _shrink(v + (Aty - A.T @ (A @ v)) / L, lam / L)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.dot(v - x_new, x_new - x) > 0:
            # gradient-based adaptive restart
            t_new = 1.0
            v = x_new.copy()
        else:
            v = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if it % check_every == 0 and lasso_kkt_residual(A, y, x, lam) <= tol:
            break
    return x, it


def fista_lasso(inst, lam, tol=1e-10, max_iters=200000, x0=None, continuation=True):
    """Minimize ``lam ||x||_1 + 0.5 ||y - A x||^2`` by accelerated proximal gradient.

    Step ``1/L`` with ``L`` the power-iteration estimate of ``||A||_2^2``;
    momentum restarts whenever it opposes the proximal step.  With
    ``continuation`` the problem is solved along a geometric sequence of
    decreasing ``lam`` values with warm starts, which is what makes tiny
    ``lam`` (near the basis pursuit limit) tractable.
    """
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    A, y = inst.A, inst.y
    L = spectral_norm_sq(A) * (1.0 + 1e-9)
    x = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=np.float64)
    lam_max = float(np.abs(A.T @ y).max())
    if lam >= lam_max and x0 is None:
        return LassoSolution.certify(A, y, np.zeros(A.shape[1]), lam, 0)

    stages = [lam]
    if continuation and lam < lam_max:
        stages = []
        cur = lam_max
        while cur * 0.1 > lam:
            cur *= 0.1
            stages.append(cur)
        stages.append(lam)
    total = 0
    for stage in stages:
        stage_tol = tol if stage == lam else max(tol, 1e-3 * stage)
        x, used = _fista(A, y, stage, L, x, stage_tol, max_iters - total)
        total += used
        if total >= max_iters:
            break
    return LassoSolution.certify(A, y, x, lam, total)


def coordinate_descent_lasso(inst, lam, tol=1e-10, max_iters=100000):
    """Cyclic coordinate descent with exact per-coordinate soft-threshold updates.

    ``max_iters`` bounds the number of full sweeps.  Between full sweeps the
    current nonzero set is cycled until its own KKT conditions hold.  The
    gradient ``A^T r`` is maintained through the Gram matrix.
    """
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    A, y = inst.A, inst.y
    N = A.shape[1]
    G = A.T @ A
    diag = G.diagonal().tolist()
    c = A.T @ y
    x = np.zeros(N)

    def sweep(coords):
        for j in coords:
            d = diag[j]
            if d == 0.0:
                continue
            old = x[j]
            z = old + c[j] / d
            mag = abs(z) - lam / d
            new = (mag if z > 0 else -mag) if mag > 0 else 0.0
            if new != old:
                c[:] -= G[j] * (new - old)
                x[j] = new

    sweeps = 0
    all_coords = range(N)
    while sweeps < max_iters:
        sweep(all_coords)
        sweeps += 1
        active = np.flatnonzero(x)
        for _ in range(100 * N):
            xa, ca = x[active], c[active]
            viol = np.where(xa != 0, np.abs(ca - lam * np.sign(xa)),
                            np.maximum(np.abs(ca) - lam, 0.0))
            if viol.size == 0 or viol.max() <= 0.1 * tol:
                break
            sweep(active)
        c = A.T @ (y - A @ x)  # drop rounding drift in the maintained gradient
        if lasso_kkt_residual(A, y, x, lam) <= tol:
            break
    return LassoSolution.certify(A, y, x.copy(), lam, sweeps)


def exhaustive_l1(inst, rcond=1e-10, max_N=12, max_n=6):
    """Exact basis pursuit on tiny instances by enumerating basic solutions.

    Every size-n column subset whose submatrix is well conditioned yields a
    feasible basic solution; a linear program attains its optimum at one of
    them.  Ties keep the lexicographically first support.
    """
    A, y = inst.A, inst.y
    n, N = A.shape
    if N > max_N or n > max_n:
        raise ConfigurationError(f"exhaustive_l1 supports N <= {max_N}, n <= {max_n}")
    if not np.any(y):
        return np.zeros(N)
    best, best_l1 = None, np.inf
    scale = max(1.0, float(np.linalg.norm(y)))
    for subset in itertools.combinations(range(N), n):
        B = A[:, subset]
        if 1.0 / np.linalg.cond(B) < rcond:
            continue
        xs = np.linalg.solve(B, y)
        if np.linalg.norm(B @ xs - y) > 1e-9 * scale:
            continue
        l1 = float(np.abs(xs).sum())
        if best is None or l1 < best_l1 - 1e-12 * max(1.0, best_l1):
            best_l1 = l1
            best = np.zeros(N)
            best[list(subset)] = xs
    if best is None:
        raise InfeasibleError("no nonsingular column subset reproduces y")
    return best


def quadrature_moments(log_density, bounds, points=(0.0,), atoms=(), epsrel=1e-12,
                       epsabs=1e-10, limit=500):
    """Mean and variance of ``exp(log_density)`` on ``bounds`` by adaptive quadrature.

    The interval is split at every entry of ``points`` inside ``bounds``
    (by default the origin, where Laplace-type densities have a kink).
    ``atoms`` is a sequence of ``(location, log_weight)`` point masses added
    to the continuous part.  The variance is integrated in a second pass
    around the mean.  ``epsabs`` is relative to the peak of the density,
    which is rescaled to 1 before integrating.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not hi > lo:
        raise ConfigurationError("empty integration range")
    cuts = sorted({lo, hi, *[float(p) for p in points if lo < p < hi]})
    segments = list(zip(cuts[:-1], cuts[1:]))

    grid = np.linspace(lo, hi, 2001)
    try:
        peak = np.asarray(log_density(grid), dtype=np.float64)
        if peak.shape != grid.shape:
            raise ValueError
    except (TypeError, ValueError):
        peak = np.array([log_density(s) for s in grid])
    shift = max(float(np.max(peak)),
                max((lw for _, lw in atoms), default=-np.inf))

    def integrate(fn):
        total, err = 0.0, 0.0
        for a, b in segments:
            # quad's warnings are judged through its error estimate below
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegrationWarning)
                val, e = quad(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
            total += val
            err += e
        return total, err

    dens = lambda s: np.exp(log_density(s) - shift)
    z, ez = integrate(dens)
    m1, em = integrate(lambda s: s * dens(s))
    atom_w = [(float(loc), float(np.exp(lw - shift))) for loc, lw in atoms]
    z += sum(w for _, w in atom_w)
    m1 += sum(w * loc for loc, w in atom_w)
    if not z > 0:
        raise QuadratureError("density integrates to zero on bounds", achieved=ez)
    mean = m1 / z
    m2, ev = integrate(lambda s: (s - mean) ** 2 * dens(s))
    m2 += sum(w * (loc - mean) ** 2 for loc, w in atom_w)
    achieved = max(ez, em, ev) / z
    if achieved > max(1e3 * epsabs, 1e-6):
        raise QuadratureError(f"quadrature error estimate {achieved:.3g} too large",
                              achieved=achieved)
    return mean, m2 / z


def f_beta_quadrature(x, b, beta, width=60.0):
    """Quadrature mean/variance of ``exp(-beta|s| - beta/(2b)(s-x)^2)``."""
    logd = lambda s: -beta * abs(s) - beta / (2.0 * b) * (s - x) ** 2
    centre = np.sign(x) * max(abs(x) - b, 0.0)
    w = width * np.sqrt(b / beta)
    return quadrature_moments(logd, (centre - w, centre + w),
                              points=(0.0, x - b, x + b), epsabs=0.0, epsrel=1e-13)


def bernoulli_gaussian_quadrature(eps, var, x, v, width=40.0):
    """Posterior mean/variance under ``(1-eps) delta_0 + eps N(0, var)`` by quadrature."""
    post_sd = np.sqrt(var * v / (var + v))
    centre = x * var / (var + v)
    logd = lambda s: (np.log(eps) - 0.5 * np.log(2 * np.pi * var) - s * s / (2 * var)
                      - (x - s) ** 2 / (2 * v)) if eps > 0 else -np.inf
    atoms = [(0.0, np.log1p(-eps) - x * x / (2 * v))] if eps < 1 else []
    lo, hi = min(centre - width * post_sd, -width * post_sd), max(centre + width * post_sd,
                                                                    width * post_sd)
    return quadrature_moments(logd, (lo, hi), points=(0.0, centre), atoms=atoms,
                              epsabs=0.0, epsrel=1e-13)
