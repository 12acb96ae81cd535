import numpy as np
import pytest
from scipy.stats import ortho_group

from ampcs import oracle
from ampcs.exceptions import ConfigurationError, InfeasibleError, PowerIterationError, \
    QuadratureError
from ampcs.model import ExperimentConfig, ProblemInstance, generate_instance


def _orthonormal_instance(N=8, seed=0):
    rng = np.random.default_rng(seed)
    A = ortho_group.rvs(N, random_state=seed)
    return ProblemInstance(A=A, y=rng.normal(size=N))


@pytest.mark.parametrize("solver", [oracle.fista_lasso, oracle.coordinate_descent_lasso])
def test_orthonormal_design_is_soft_threshold(solver):
    inst = _orthonormal_instance()
    lam = 0.4
    expected = np.sign(inst.A.T @ inst.y) * np.maximum(np.abs(inst.A.T @ inst.y) - lam, 0)
    sol = solver(inst, lam)
    assert np.max(np.abs(sol.x - expected)) <= 1e-9


@pytest.mark.parametrize("solver", [oracle.fista_lasso, oracle.coordinate_descent_lasso])
def test_large_lambda_gives_zero(solver, small_instance):
    lam = float(np.max(np.abs(small_instance.A.T @ small_instance.y)))
    sol = solver(small_instance, lam)
    assert not np.any(sol.x)
    assert sol.kkt_residual == 0.0


@pytest.mark.parametrize("solver", [oracle.fista_lasso, oracle.coordinate_descent_lasso])
def test_solution_is_certified(solver, small_instance):
    sol = solver(small_instance, 0.05)
    A, y = small_instance.A, small_instance.y
    r = y - A @ sol.x
    assert sol.objective == pytest.approx(0.05 * np.abs(sol.x).sum() + 0.5 * r @ r, rel=1e-12)
    assert sol.kkt_residual == oracle.lasso_kkt_residual(A, y, sol.x, 0.05)
    assert sol.kkt_residual <= 1e-10
    assert sol.objective <= 0.5 * y @ y


@pytest.mark.slow
def test_fista_and_cd_agree():
    worst = 0.0
    for seed in range(50):
        inst = generate_instance(ExperimentConfig(N=256, n=128, k=16, sigma=0.05, seed=seed), 0)
        for lam in (0.01, 0.1, 1.0):
            a = oracle.fista_lasso(inst, lam)
            b = oracle.coordinate_descent_lasso(inst, lam)
            worst = max(worst, abs(a.objective - b.objective) / b.objective)
    assert worst <= 1e-6


def test_lasso_needs_positive_lambda(small_instance):
    with pytest.raises(ConfigurationError):
        oracle.fista_lasso(small_instance, 0.0)
    with pytest.raises(ConfigurationError):
        oracle.coordinate_descent_lasso(small_instance, -1.0)


def test_power_iteration_fails_on_zero_matrix():
    with pytest.raises(PowerIterationError):
        oracle.fista_lasso(ProblemInstance(A=np.zeros((2, 4)), y=np.ones(2)), 0.1)


def test_spectral_norm():
    A = np.diag([3.0, 1.0, 0.5])[:2]
    assert oracle.spectral_norm_sq(A) == pytest.approx(9.0, rel=1e-10)


def test_exhaustive_zero_measurements():
    inst = ProblemInstance(A=np.ones((2, 4)), y=np.zeros(2))
    assert np.array_equal(oracle.exhaustive_l1(inst), np.zeros(4))


def test_exhaustive_square_invertible():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    y = rng.normal(size=4)
    x = oracle.exhaustive_l1(ProblemInstance(A=A, y=y))
    assert np.allclose(x, np.linalg.solve(A, y), atol=1e-12)


def test_exhaustive_tie_breaks_lexicographically():
    # columns 0 and 1 are identical: both supports give l1 norm 1
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    x = oracle.exhaustive_l1(ProblemInstance(A=A, y=np.array([1.0, 0.0])))
    assert x.tolist() == [1.0, 0.0, 0.0]


def test_exhaustive_errors():
    with pytest.raises(ConfigurationError):
        oracle.exhaustive_l1(ProblemInstance(A=np.ones((2, 13)), y=np.ones(2)))
    with pytest.raises(InfeasibleError):
        oracle.exhaustive_l1(ProblemInstance(A=np.ones((2, 4)), y=np.array([1.0, 0.0])))


def test_exhaustive_beats_random_feasible_points():
    rng = np.random.default_rng(0)
    for t in range(20):
        inst = generate_instance(ExperimentConfig(N=6, n=3, k=2, ensemble="gaussian", seed=42), t)
        x = oracle.exhaustive_l1(inst)
        best = np.abs(x).sum()
        _, _, Vt = np.linalg.svd(inst.A)
        null = Vt[inst.n:]
        xp = np.linalg.lstsq(inst.A, inst.y, rcond=None)[0]
        pts = xp + rng.normal(scale=2.0, size=(1000, null.shape[0])) @ null
        assert np.max(np.abs(pts @ inst.A.T - inst.y)) < 1e-9
        assert np.all(np.abs(pts).sum(axis=1) >= best - 1e-12)


def test_quadrature_known_moments():
    m, v = oracle.quadrature_moments(lambda s: -0.5 * s * s, (-40, 40))
    assert abs(m) <= 1e-9 and abs(v - 1) <= 1e-9
    m, v = oracle.quadrature_moments(lambda s: -abs(s), (-80, 80))
    assert abs(m) <= 1e-9 and abs(v - 2) <= 1e-9


def test_quadrature_with_atoms():
    # half point mass at 2, half standard normal: mean 1, variance 0.5 + 1
    logd = lambda s: -0.5 * s * s - 0.5 * np.log(2 * np.pi) + np.log(0.5)
    m, v = oracle.quadrature_moments(logd, (-40, 40), atoms=[(2.0, np.log(0.5))])
    assert m == pytest.approx(1.0, abs=1e-10)
    assert v == pytest.approx(1.5, abs=1e-10)


def test_quadrature_errors():
    with pytest.raises(ConfigurationError):
        oracle.quadrature_moments(lambda s: 0.0, (1.0, 1.0))
    with pytest.raises(QuadratureError):
        oracle.quadrature_moments(lambda s: -np.inf, (0.0, 1.0))
