import numpy as np
import pytest
from scipy.stats import norm

from ampcs import oracle
from ampcs.denoisers import f_beta_moments, sample_f_beta, soft_threshold
from ampcs.exceptions import ConfigurationError, DegenerateThresholdError
from ampcs.model import ExperimentConfig, ProblemInstance, generate_instance
from ampcs.sum_product import (EdgeMessages, edge_spread, gaussian_fit_distance,
                               kolmogorov_distance, mp_estimate, mp_finite_beta_step,
                               mp_init, mp_step, variable_sums)

from conftest import hand_instance

# one sweep on the hand instance from zero init, tau0 = 0.5, evaluated by
# an independent double loop over edges
HAND_X = [[0.0, 0.0, 0.0, 0.0],
          [0.13639610306789274, -0.13639610306789274, 0.13639610306789274,
           0.13639610306789274]]
HAND_Z = [[0.9, 0.9, 0.9, 0.9],
          [-0.20355339059327376, -0.3964466094067262, -0.3964466094067262,
           -0.20355339059327376]]
HAND_TAU = 0.5


def naive_step(A, y, X, Z, tau, denoise):
    n, N = A.shape
    Xn = np.zeros((n, N))
    for a in range(n):
        for i in range(N):
            Xn[a, i] = denoise(sum(A[b, i] * Z[b, i] for b in range(n) if b != a), tau)
    Zn = np.zeros((n, N))
    for a in range(n):
        for i in range(N):
            Zn[a, i] = y[a] - sum(A[a, j] * Xn[a, j] for j in range(N) if j != i)
    full = [sum(A[b, i] * Z[b, i] for b in range(n)) for i in range(N)]
    tau_new = tau / n * sum(abs(f) > tau for f in full)
    return Xn, Zn, tau_new


def test_init_contract():
    inst = hand_instance()
    msgs = mp_init(inst, 1.0)
    assert msgs.x_msgs.shape == (2, 4) and not np.any(msgs.x_msgs)
    assert np.array_equal(msgs.z_msgs, np.repeat(inst.y[:, None], 4, axis=1))
    assert msgs.tau_hat == 1.0 and msgs.t == 0
    zero = ProblemInstance(A=inst.A, y=np.zeros(2))
    assert not np.any(mp_init(zero, 1.0).z_msgs)
    with pytest.raises(ConfigurationError):
        mp_init(inst, 0.0)


def test_default_tau0_is_rms_of_y():
    inst = hand_instance()
    assert mp_init(inst).tau_hat == pytest.approx(np.linalg.norm(inst.y) / np.sqrt(2))


def test_hand_evaluated_step():
    out = mp_step(mp_init(hand_instance(), 0.5), hand_instance())
    assert np.max(np.abs(out.x_msgs - HAND_X)) <= 1e-15
    assert np.max(np.abs(out.z_msgs - HAND_Z)) <= 1e-15
    assert out.tau_hat == HAND_TAU and out.t == 1


def test_matches_naive_double_loop():
    for seed in range(5):
        inst = generate_instance(ExperimentConfig(N=7, n=4, k=2, sigma=0.1, seed=seed,
                                                  ensemble="gaussian"), 0)
        msgs = mp_init(inst)
        X, Z, tau = msgs.x_msgs, msgs.z_msgs, msgs.tau_hat
        for _ in range(4):
            try:
                msgs = mp_step(msgs, inst)
            except DegenerateThresholdError:
                break
            X, Z, tau = naive_step(inst.A, inst.y, X, Z, tau, soft_threshold)
            assert np.max(np.abs(msgs.x_msgs - X)) <= 1e-12
            assert np.max(np.abs(msgs.z_msgs - Z)) <= 1e-12
            assert msgs.tau_hat == pytest.approx(tau, rel=1e-12)


def test_zero_measurements_hit_degenerate_threshold():
    inst = ProblemInstance(A=hand_instance().A, y=np.zeros(2))
    msgs = mp_init(inst, 1.0)
    with pytest.raises(DegenerateThresholdError) as info:
        mp_step(msgs, inst)
    nxt = info.value.next_state
    assert not np.any(nxt.x_msgs) and not np.any(nxt.z_msgs) and nxt.tau_hat == 0.0
    assert info.value.state is msgs


def test_estimate_cases():
    inst = hand_instance()
    assert not np.any(mp_estimate(mp_init(ProblemInstance(A=inst.A, y=np.zeros(2)), 1.0),
                                  ProblemInstance(A=inst.A, y=np.zeros(2))))
    A1 = np.array([[0.5, -2.0, 1.0]])
    single = ProblemInstance(A=A1, y=np.array([1.5]))
    msgs = mp_init(single, 0.4)
    assert np.allclose(mp_estimate(msgs, single), soft_threshold(A1[0] * 1.5, 0.4), atol=0)


def test_shape_mismatch_is_rejected():
    with pytest.raises(ConfigurationError):
        mp_step(mp_init(hand_instance()), ProblemInstance(A=np.ones((2, 5)), y=np.ones(2)))
    with pytest.raises(ConfigurationError):
        EdgeMessages(np.zeros((2, 3)), np.zeros((3, 2)), 1.0)


def test_finite_beta_close_to_large_beta_step():
    inst = generate_instance(ExperimentConfig(N=60, n=30, k=3, seed=4), 0)
    msgs = mp_init(inst)
    for _ in range(3):
        a = mp_step(msgs, inst)
        b = mp_finite_beta_step(msgs, inst, 1e4)
        assert np.max(np.abs(a.x_msgs - b.x_msgs)) <= 1e-2
        assert np.max(np.abs(a.z_msgs - b.z_msgs)) <= 1e-2
        msgs = a


def test_finite_beta_zero_inputs_stay_zero():
    inst = ProblemInstance(A=hand_instance().A, y=np.zeros(2))
    msgs = mp_finite_beta_step(mp_init(inst, 1.0), inst, 10.0)
    assert not np.any(msgs.x_msgs)
    assert msgs.tau_hat > 0


def test_finite_beta_matches_quadrature_per_edge():
    inst = hand_instance()
    msgs = mp_init(inst, 0.5)
    out = mp_finite_beta_step(msgs, inst, 20.0)
    _, cavity = variable_sums(msgs, inst)
    var_sum = 0.0
    for a in range(2):
        for i in range(4):
            m, v = oracle.f_beta_quadrature(cavity[a, i], 0.5, 20.0)
            assert out.x_msgs[a, i] == pytest.approx(m, rel=1e-8, abs=1e-15)
            var_sum += inst.A[a, i] ** 2 * 20.0 * v
    assert out.tau_hat == pytest.approx(var_sum / 2, rel=1e-8)


def test_finite_beta_estimate_uses_mean():
    inst = hand_instance()
    msgs = mp_init(inst, 0.5)
    full, _ = variable_sums(msgs, inst)
    assert np.allclose(mp_estimate(msgs, inst, beta=20.0), f_beta_moments(full, 0.5, 20.0)[0])
    with pytest.raises(ConfigurationError):
        mp_finite_beta_step(msgs, inst, np.inf)


def test_messages_are_immutable():
    msgs = mp_init(hand_instance())
    with pytest.raises(ValueError):
        msgs.x_msgs[0, 0] = 1.0


def test_edge_spread():
    msgs = EdgeMessages(np.array([[0.0, 1.0], [2.0, 1.0]]), np.zeros((2, 2)), 1.0)
    assert edge_spread(msgs).tolist() == [2.0, 0.0]


def test_kolmogorov_examples():
    s = np.random.default_rng(0).normal(size=300)
    assert kolmogorov_distance(s, s) == 0.0
    assert kolmogorov_distance([0.0], [1.0]) == 1.0
    big = np.random.default_rng(1).normal(size=10000)
    assert kolmogorov_distance(big, norm.cdf) <= 0.03
    assert kolmogorov_distance(np.zeros(5), norm.cdf) == pytest.approx(0.5)
    with pytest.raises(ConfigurationError):
        kolmogorov_distance([], norm.cdf)
    with pytest.raises(ConfigurationError):
        kolmogorov_distance([1.0], [])
    with pytest.raises(ConfigurationError):
        gaussian_fit_distance(np.ones(4))


def test_kolmogorov_matches_scipy():
    from scipy.stats import kstest, ks_2samp
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=500), rng.normal(0.1, 1.2, size=700)
    assert kolmogorov_distance(a, norm.cdf) == pytest.approx(kstest(a, "norm").statistic)
    assert kolmogorov_distance(a, b) == pytest.approx(ks_2samp(a, b).statistic)


def _messages_after(N, iters=3, seed=0):
    inst = generate_instance(ExperimentConfig(N=N, n=N // 2, k=N // 20, seed=seed), 0)
    msgs = mp_init(inst)
    for _ in range(iters):
        msgs = mp_step(msgs, inst)
    return inst, msgs


def test_edge_messages_concentrate():
    # spread of x_{i->a} over a among variables with nonzero messages
    rms = []
    for N in (200, 800):
        vals = []
        for seed in range(3):
            _, msgs = _messages_after(N, seed=seed)
            spread = edge_spread(msgs)
            vals.append(np.median(spread[spread > 0]))
        rms.append(np.median(vals))
    assert rms[1] < rms[0]


def test_gaussian_message_premise():
    # the summands A_aj S_j with S_j drawn from the finite-beta messages
    # add up to a nearly Gaussian factor-to-variable sum
    inst, msgs = _messages_after(1600, iters=2, seed=0)
    full, cavity = variable_sums(msgs, inst)
    rng = np.random.default_rng(0)
    a = 0
    beta = 5.0
    draws = sample_f_beta(cavity[a], msgs.tau_hat, beta, rng, size=(4000, inst.N))
    sums = draws @ inst.A[a]
    assert gaussian_fit_distance(sums) <= 0.05
