"""Trial runner, phase-plane sweeps and the edge-MP vs AMP comparison.

Sweep cells are seeded with ``derive_seed(seed, cell_index)`` where cells
are enumerated in sorted ``(delta, rho)`` order; trial ``j`` of a cell uses
``trial_index = j``.  Any single trial can therefore be regenerated with
:func:`ampcs.model.generate_instance` alone.
"""
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import amp, oracle, sum_product
from .denoisers import BernoulliGaussian
from .exceptions import ConfigurationError, DegenerateThresholdError
from .model import ExperimentConfig, Solver, TrialRecord, derive_seed, generate_instance

SUCCESS_REL_ERROR = 1e-3

SWEEP_COLUMNS = ["delta", "rho", "trials", "success_rate", "median_iters", "median_rel_err",
                 "failures"]
COMPARE_COLUMNS = ["N", "seed", "t", "max_discrepancy", "median_edge_spread"]


def default_jobs():
    try:
        return max(1, int(os.environ.get("AMPCS_JOBS", "1")))
    except ValueError:
        return 1


def solver_options(cfg):
    """Map an :class:`ExperimentConfig` onto AMP :class:`~ampcs.amp.SolverOptions`."""
    common = dict(max_iters=cfg.max_iters, tol=cfg.tol, tau0=cfg.tau0)
    if cfg.solver is Solver.AMP_BP:
        return amp.SolverOptions(variant=amp.Variant.BASIS_PURSUIT, **common)
    if cfg.solver is Solver.ISTA:
        return amp.SolverOptions(variant=amp.Variant.BASIS_PURSUIT, onsager=False, **common)
    if cfg.solver is Solver.AMP_LASSO:
        return amp.SolverOptions(variant=amp.Variant.LASSO, lam=cfg.lam, **common)
    if cfg.solver is Solver.AMP_BAYES:
        eps = cfg.prior_eps if cfg.prior_eps is not None else cfg.k / cfg.N
        noise_var = cfg.noise_var if cfg.noise_var is not None else cfg.sigma ** 2
        return amp.SolverOptions(variant=amp.Variant.BAYES,
                                 prior=BernoulliGaussian(eps, cfg.prior_var),
                                 noise_var=noise_var, **common)
    raise ConfigurationError(f"{cfg.solver.value} is not an AMP solver")


def _mse(x, s_o):
    d = x - s_o
    return float(d @ d) / x.size


def _fista_record(inst, cfg):
    if not cfg.lam > 0:
        raise ConfigurationError("fista needs lambda > 0")
    sol = oracle.fista_lasso(inst, cfg.lam, tol=cfg.tol, max_iters=max(cfg.max_iters, 1))
    return TrialRecord(seed=inst.seed, trial_index=inst.trial_index,
                       iterations_used=sol.iterations,
                       final_rel_error=amp.relative_error(sol.x, inst.s_o),
                       final_objective=sol.objective, converged=sol.kkt_residual <= cfg.tol,
                       status="ok" if sol.kkt_residual <= cfg.tol else "max-iters",
                       estimate=sol.x)


def run_edge_mp(inst, max_iters=200, tol=1e-8, tau0=None, beta=None):
    """Iterate the edge-level algorithm; the estimate is the node belief."""
    msgs = sum_product.mp_init(inst, tau0)
    x = np.zeros(inst.N)
    mse, thresholds = [], []
    status, converged = "max-iters", False
    step_fn = sum_product.mp_step if beta is None else \
        (lambda m, i: sum_product.mp_finite_beta_step(m, i, beta))
    for t in range(max_iters):
        x_new = sum_product.mp_estimate(msgs, inst, beta)
        thresholds.append(msgs.tau_hat)
        if inst.s_o is not None:
            mse.append(_mse(x_new, inst.s_o))
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), amp.REL_CHANGE_FLOOR)
        x = x_new
        if change <= tol:
            converged, status = True, "ok"
            break
        try:
            msgs = step_fn(msgs, inst)
        except DegenerateThresholdError:
            status = "degenerate-threshold"
            break
    rel = amp.relative_error(x, inst.s_o) if inst.s_o is not None else float("nan")
    return TrialRecord(seed=inst.seed, trial_index=inst.trial_index,
                       iterations_used=len(thresholds),
                       per_iteration_mse=mse, final_rel_error=rel,
                       final_objective=float(np.abs(x).sum()),
                       threshold_trajectory=thresholds, converged=converged, status=status,
                       estimate=x)


def solve_instance(inst, cfg):
    if cfg.solver is Solver.FISTA:
        return _fista_record(inst, cfg)
    if cfg.solver is Solver.EDGE_MP:
        return run_edge_mp(inst, cfg.max_iters, cfg.tol, cfg.tau0)
    return amp.run_solver(inst, solver_options(cfg))


def run_trial(cfg, trial_index):
    return solve_instance(generate_instance(cfg, trial_index), cfg)


def _cell_config(base, delta, rho, N, cell_index):
    n = int(round(delta * N))
    k = int(round(rho * n))
    return base.replace(N=N, n=n, k=k, seed=derive_seed(base.seed, cell_index))


def _sweep_task(args):
    cfg, trial_index = args
    try:
        rec = run_trial(cfg, trial_index)
        return rec.final_rel_error, rec.iterations_used, None
    except Exception as exc:  # recorded per row, sweep continues
        return float("nan"), 0, f"{type(exc).__name__}: {exc}"


def sweep(deltas, rhos, N, trials, base_cfg, jobs=1):
    """Success rate over a ``(delta, rho)`` grid; one row per cell, sorted."""
    deltas, rhos = sorted(set(deltas)), sorted(set(rhos))
    if not deltas or not rhos:
        raise ConfigurationError("sweep grid is empty")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    cells = []
    for delta in deltas:
        for rho in rhos:
            cfg = _cell_config(base_cfg, delta, rho, N, len(cells))
            cells.append((delta, rho, cfg))
    tasks = [(cfg, j) for _, _, cfg in cells for j in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]

    rows = []
    for c, (delta, rho, _) in enumerate(cells):
        chunk = results[c * trials:(c + 1) * trials]
        errs = np.array([r[0] for r in chunk])
        iters = np.array([r[1] for r in chunk])
        failed = sum(r[2] is not None for r in chunk)
        ok = ~np.isnan(errs)
        success = float(np.mean(errs[ok] <= SUCCESS_REL_ERROR)) if ok.any() else 0.0
        rows.append([float(delta), float(rho), trials,
                     success * ok.sum() / trials,
                     float(np.median(iters[ok])) if ok.any() else float("nan"),
                     float(np.median(errs[ok])) if ok.any() else float("nan"),
                     failed])
    return rows


def compare_mp(N, delta=0.5, rho=0.1, iters=10, seed=0, beta=None, tau0=None,
               ensemble="rademacher", amplitude="pm1"):
    """Edge-MP vs AMP on one instance, from matched initialization.

    Row ``t`` (1-based) compares the MP node belief computed from the
    messages after ``t - 1`` sweeps with the AMP iterate ``x^t``; both use
    the same pseudo-data up to the cavity corrections.  ``median_edge_spread``
    summarizes the outgoing ``x_{i->a}`` messages after sweep ``t``.
    """
    n = int(round(delta * N))
    k = int(round(rho * n))
    cfg = ExperimentConfig(N=N, n=n, k=k, seed=seed, ensemble=ensemble, amplitude=amplitude)
    inst = generate_instance(cfg, 0)
    msgs = sum_product.mp_init(inst, tau0)
    state = amp.AmpState.initial(inst, msgs.tau_hat)
    rows, spreads = [], []
    for t in range(1, iters + 1):
        belief = sum_product.mp_estimate(msgs, inst, beta)
        try:
            state = amp.amp_bp_step(state, inst)
        except DegenerateThresholdError as exc:
            state = exc.next_state
        try:
            if beta is None:
                msgs = sum_product.mp_step(msgs, inst)
            else:
                msgs = sum_product.mp_finite_beta_step(msgs, inst, beta)
        except DegenerateThresholdError as exc:
            msgs = exc.next_state
        spread = sum_product.edge_spread(msgs)
        spreads.append(spread)
        rows.append([N, seed, t, float(np.abs(belief - state.x).max()),
                     float(np.median(spread))])
        if not (msgs.tau_hat > 0 and state.threshold > 0):
            break
    return rows, spreads


def max_discrepancy(rows):
    return max((r[3] for r in rows), default=0.0)
