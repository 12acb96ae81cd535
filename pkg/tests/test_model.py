import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ampcs.exceptions import ConfigurationError
from ampcs.model import (ExperimentConfig, ProblemInstance, TrialRecord, derive_seed,
                         dump_instance, generate_instance, load_instance,
                         undersampling_ratio)


def test_zero_signal_gives_zero_measurements():
    inst = generate_instance(ExperimentConfig(N=4, n=2, k=0), 0)
    assert np.array_equal(inst.y, np.zeros(2))


def test_rademacher_columns_have_unit_norm():
    inst = generate_instance(ExperimentConfig(N=500, n=250, k=25, seed=3), 0)
    assert np.max(np.abs(np.linalg.norm(inst.A, axis=0) - 1.0)) <= 1e-12
    assert set(np.unique(inst.A * np.sqrt(250)).round(12)) == {-1.0, 1.0}


def test_gaussian_ensemble_variance():
    inst = generate_instance(ExperimentConfig(N=400, n=200, k=5, ensemble="gaussian"), 0)
    assert abs(inst.A.var() * 200 - 1.0) < 0.02


def test_generation_is_deterministic():
    cfg = ExperimentConfig(N=60, n=30, k=4, sigma=0.1, seed=99)
    a, b = generate_instance(cfg, 5), generate_instance(cfg, 5)
    for name in ("A", "y", "s_o"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = generate_instance(cfg, 6)
    assert c.A.tobytes() != a.A.tobytes()


def test_frozen_instance_values():
    # pinned so a change in stream derivation is caught
    inst = generate_instance(ExperimentConfig(N=6, n=3, k=2, seed=2024), 0)
    digest = hashlib.sha256(inst.A.tobytes() + inst.s_o.tobytes()).hexdigest()
    assert digest == FROZEN_DIGEST


FROZEN_DIGEST = "b1e2f4feea3e789990f3eeb352e5a00b0ac58ae5677f274e2c69b8cea3ddabe2"


@pytest.mark.parametrize("amplitude", ["pm1", "gaussian"])
@given(seed=st.integers(0, 2**64 - 1), k=st.integers(0, 20), trial=st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_signal_has_exactly_k_nonzeros(amplitude, seed, k, trial):
    inst = generate_instance(ExperimentConfig(N=50, n=20, k=k, seed=seed,
                                              amplitude=amplitude), trial)
    assert np.count_nonzero(inst.s_o) == k
    if amplitude == "pm1":
        assert set(np.abs(inst.s_o[inst.s_o != 0])) <= {1.0}
    assert np.allclose(inst.y, inst.A @ inst.s_o)


def test_noise_calibration():
    cfg = ExperimentConfig(N=10001, n=10000, k=10, sigma=0.3, seed=5, ensemble="gaussian")
    inst = generate_instance(cfg, 0)
    w = inst.y - inst.A @ inst.s_o
    assert abs(w.std() / 0.3 - 1.0) < 0.05


def test_support_is_uniform():
    cfg = ExperimentConfig(N=5, n=4, k=1, seed=1)
    counts = np.zeros(5)
    for t in range(2000):
        counts += generate_instance(cfg, t).s_o != 0
    assert np.all(np.abs(counts / 2000 - 0.2) < 0.04)


@pytest.mark.parametrize("n,N", [(250, 500), (128, 256), (1, 2)])
def test_undersampling_ratio(n, N):
    inst = ProblemInstance(A=np.zeros((n, N)), y=np.zeros(n))
    assert undersampling_ratio(inst) == 0.5


@pytest.mark.parametrize("kw", [dict(N=6, n=3, k=4), dict(N=4, n=4, k=1), dict(N=4, n=5, k=1),
                                dict(max_iters=0), dict(tol=0.0), dict(seed=-1),
                                dict(seed=2**64), dict(sigma=-1.0), dict(solver="nope"),
                                dict(ensemble="bernoulli")])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**kw)


def test_instance_validation():
    with pytest.raises(ConfigurationError):
        ProblemInstance(A=np.zeros((2, 3)), y=np.zeros(3))
    with pytest.raises(ConfigurationError):
        ProblemInstance(A=np.zeros((2, 3)), y=np.zeros(2), s_o=np.zeros(2))


def test_instance_arrays_are_read_only(small_instance):
    with pytest.raises(ValueError):
        small_instance.A[0, 0] = 1.0


def test_dump_load_round_trip(tmp_path, small_instance):
    path = tmp_path / "inst.json"
    dump_instance(small_instance, path)
    back = load_instance(path)
    assert back.A.tobytes() == small_instance.A.tobytes()
    assert back.y.tobytes() == small_instance.y.tobytes()
    assert back.s_o.tobytes() == small_instance.s_o.tobytes()
    assert (back.seed, back.trial_index, back.ensemble) == (11, 0, small_instance.ensemble)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(0, c) for c in range(100)}) == 100
    assert 0 <= derive_seed(2**64 - 1, 3) < 2**64


def test_trial_record_json_drops_estimate():
    rec = TrialRecord(seed=1, trial_index=0, iterations_used=1, per_iteration_mse=[0.1],
                      estimate=np.ones(3))
    assert "estimate" not in rec.to_json()
    assert '"per_iteration_mse": [0.10000000000000001]' in rec.to_json()
