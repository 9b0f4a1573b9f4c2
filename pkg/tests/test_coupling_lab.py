import numpy as np
import pytest

from vicsek_mf.coupling_lab import (
    CouplingResult,
    CouplingSetup,
    ReplicaFailure,
    chaos_distance,
    fit_convergence_rate,
    measure_coupling_error,
    run_coupling_experiment,
)
from vicsek_mf.kernels import InteractionKernel
from vicsek_mf.sde_stepper import StepParams

FAST = CouplingSetup(kernel=InteractionKernel("gaussian", 2.0, 1.0), params=StepParams(2e-2), T=0.2)


def synthetic(N, errors):
    return CouplingResult(list(N), 1.0, np.asarray(errors, float), np.zeros(len(N)), 8)


def test_fit_recovers_power_law():
    N = [16, 32, 64, 128, 256]
    fit = fit_convergence_rate(synthetic(N, [3.0 / n for n in N]))
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_flat_and_noisy():
    N = [16, 32, 64, 128]
    flat = fit_convergence_rate(synthetic(N, [0.2] * 4))
    assert flat.slope == pytest.approx(0.0, abs=1e-12) and flat.r_squared == 1.0
    noisy = fit_convergence_rate(synthetic(N, [1.0, 0.2, 0.6, 0.1]))
    assert 0.0 <= noisy.r_squared < 0.9


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_convergence_rate(synthetic([16, 32, 64, 128], [0.1, 0.0, 0.1, 0.1]))
    with pytest.raises(ValueError):
        fit_convergence_rate(synthetic([16, 32, 64], [0.3, 0.2, 0.1]))


def test_zero_kernel_error_exactly_zero():
    setup = CouplingSetup(kernel=InteractionKernel("gaussian", 0.0), params=StepParams(2e-2), T=0.2)
    mean, se, vals = measure_coupling_error(16, 0.2, 8, setup)
    assert mean == 0.0 and se == 0.0 and np.all(vals == 0.0)


def test_zero_horizon_error_exactly_zero():
    mean, _, _ = measure_coupling_error(16, 0.0, 8, FAST)
    assert mean == 0.0


def test_errors_positive_and_reproducible():
    a = measure_coupling_error(16, 0.2, 8, FAST)
    b = measure_coupling_error(16, 0.2, 8, FAST, workers=2)
    assert a[0] > 0
    assert np.array_equal(a[2], b[2]) and a[0] == b[0]


def test_experiment_shape():
    res = run_coupling_experiment([8, 16], 8, FAST)
    assert res.errors.shape == (2,) and np.all(res.errors > 0)
    assert len(res.per_replica) == 2


def test_argument_validation():
    with pytest.raises(ValueError):
        measure_coupling_error(1, 0.2, 8, FAST)
    with pytest.raises(ValueError):
        measure_coupling_error(16, 0.2, 4, FAST)


def test_failed_replica_is_identified():
    bad = CouplingSetup(kernel=FAST.kernel, params=FAST.params, T=0.21)  # not a multiple of dt
    with pytest.raises(ReplicaFailure) as info:
        measure_coupling_error(16, 0.21, 8, bad)
    assert isinstance(info.value.seed, int)
    assert str(info.value.seed) in str(info.value)


@pytest.mark.slow
def test_propagation_of_chaos_trend():
    setup = CouplingSetup(kernel=InteractionKernel("constant", 4.0), params=StepParams(1e-2), T=1.0)
    dist = [chaos_distance(N, setup, 512, velocities_only=True) for N in (2, 8, 32)]
    assert dist[0] > dist[1] > dist[2]
