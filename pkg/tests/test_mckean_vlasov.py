import numpy as np
import pytest

from vicsek_mf.errors import StreamAliasingError
from vicsek_mf.kernels import InteractionKernel, kernel_eval
from vicsek_mf.mckean_vlasov import (
    CoupledPairState,
    ReferenceEnsemble,
    advance_coupled,
    advance_reference,
    coupling_gap,
    init_coupled_pair,
    nonlinear_drift,
)
from vicsek_mf.particle_system import (
    ParticleState,
    advance_system,
    empirical_mean_field_drift,
    initial_state,
)
from vicsek_mf.rng import SystemTag
from vicsek_mf.sde_stepper import StepParams

GAUSS = InteractionKernel("gaussian", 2.0, 1.0)


def test_drift_vanishes_for_aligned_ensemble():
    ens = ReferenceEnsemble(ParticleState(np.random.default_rng(0).normal(size=(50, 2)),
                                          np.tile([0.0, 1.0], (50, 1))))
    np.testing.assert_allclose(nonlinear_drift([3.0, 1.0], [0.0, 1.0], ens, GAUSS), 0.0, atol=0.0)


def test_constant_kernel_drift_closed_form():
    # -kappa P(v)(v - mean V) = kappa P(v) mean V
    ens = ReferenceEnsemble(initial_state(500, 3, 4))
    v = np.array([0.0, 0.6, 0.8])
    k = InteractionKernel("constant", 1.5)
    m = ens.state.velocities.mean(axis=0)
    expected = 1.5 * (m - (m @ v) * v)
    np.testing.assert_allclose(nonlinear_drift(np.zeros(3), v, ens, k), expected, atol=1e-15)


def test_drift_matches_direct_sum():
    ens = ReferenceEnsemble(initial_state(64, 2, 1))
    x, v = np.array([0.3, -0.2]), np.array([0.6, -0.8])
    X, V = ens.state.positions, ens.state.velocities
    s = sum(float(kernel_eval(GAUSS, x - X[j])) * (v - V[j]) for j in range(64)) / 64
    expected = -(s - (s @ v) * v)
    np.testing.assert_allclose(nonlinear_drift(x, v, ens, GAUSS), expected, atol=1e-15)
    batch = nonlinear_drift(np.array([x, x]), np.array([v, v]), ens, GAUSS)
    np.testing.assert_array_equal(batch[0], batch[1])


def test_drift_against_own_law_equals_particle_drift():
    s = initial_state(30, 2, 2)
    for i in (0, 11, 29):
        np.testing.assert_array_equal(
            nonlinear_drift(s.positions[i], s.velocities[i], s, GAUSS),
            empirical_mean_field_drift(s, GAUSS, i))


def test_empty_ensemble_rejected():
    empty = ReferenceEnsemble(ParticleState(np.zeros((0, 2)), np.zeros((0, 2))))
    with pytest.raises(ValueError):
        nonlinear_drift([0.0, 0.0], [1.0, 0.0], empty, GAUSS)


def test_zero_kernel_halves_bit_identical():
    pair = init_coupled_pair(64, 512, 2, 5)
    k = InteractionKernel("gaussian", 0.0)
    for _ in range(50):
        pair = advance_coupled(pair, k, StepParams(1e-2), 5)
    assert np.array_equal(pair.interacting.velocities, pair.nonlinear.velocities)
    assert np.array_equal(pair.interacting.positions, pair.nonlinear.positions)
    assert np.array_equal(coupling_gap(pair), np.zeros(64))


def test_self_coupling_reproduces_interacting_system():
    pair = init_coupled_pair(40, 320, 2, 6)
    for _ in range(30):
        pair = advance_coupled(pair, GAUSS, StepParams(1e-2), 6, reference_override=pair.interacting)
    assert np.array_equal(pair.interacting.velocities, pair.nonlinear.velocities)


def test_nonlinear_consumes_interacting_increments():
    pair = init_coupled_pair(16, 128, 3, 7)
    new = advance_coupled(pair, GAUSS, StepParams(1e-2, d=3), 7)
    solo = advance_system(pair.interacting, GAUSS, StepParams(1e-2, d=3), 7)
    assert np.array_equal(new.interacting.velocities, solo.velocities)
    np.testing.assert_allclose(np.linalg.norm(new.nonlinear.velocities, axis=1), 1.0, atol=1e-15)


def test_reference_uses_own_streams():
    pair = init_coupled_pair(16, 16, 2, 7)
    assert not np.array_equal(pair.reference.state.velocities, pair.interacting.velocities)
    ref = advance_reference(pair.reference, GAUSS, StepParams(1e-2), 7)
    manual = advance_system(pair.reference.state, GAUSS, StepParams(1e-2), 7, tag=SystemTag.REFERENCE)
    assert np.array_equal(ref.state.velocities, manual.velocities)


def test_misaligned_pair_rejected():
    pair = init_coupled_pair(8, 64, 2, 1)
    bad = CoupledPairState(pair.interacting, pair.nonlinear.permuted(np.arange(8)[::-1]), pair.reference)
    with pytest.raises(StreamAliasingError):
        advance_coupled(bad, GAUSS, StepParams(1e-2), 1)
    stepped = advance_system(pair.nonlinear, GAUSS, StepParams(1e-2), 1)
    with pytest.raises(StreamAliasingError):
        CoupledPairState(pair.interacting, stepped, pair.reference).check_aliasing()
    with pytest.raises(StreamAliasingError):
        CoupledPairState(pair.interacting, pair.nonlinear, pair.reference, coupled=False).check_aliasing()


def test_reference_free_diffusion():
    ens = ReferenceEnsemble(initial_state(20_000, 2, 3))
    v0 = ens.state.velocities
    for _ in range(50):
        ens = advance_reference(ens, InteractionKernel("gaussian", 0.0), StepParams(1e-2), 3)
    assert np.mean(np.sum(ens.state.velocities * v0, axis=1)) == pytest.approx(np.exp(-0.5), rel=0.05)


def test_nonlinear_particles_conditionally_independent():
    pair = init_coupled_pair(4000, 2000, 2, 8, orientation="vmf", vmf_kappa=1.0)
    k = InteractionKernel("constant", 3.0)
    for _ in range(50):
        pair = advance_coupled(pair, k, StepParams(1e-2), 8)
    v = pair.nonlinear.velocities
    for c in range(2):
        assert abs(np.corrcoef(v[0::2, c], v[1::2, c])[0, 1]) < 4 / np.sqrt(2000)


@pytest.mark.slow
def test_reference_size_refinement():
    # the nonlinear trajectory converges as the reference ensemble grows
    k = InteractionKernel("constant", 3.0)
    p = StepParams(1e-2)
    N, steps, replicas = 200, 50, 16

    def run(M, seed):
        pair = init_coupled_pair(N, M, 2, seed, orientation="vmf", vmf_kappa=0.5)
        for _ in range(steps):
            pair = advance_coupled(pair, k, p, seed)
        return pair.nonlinear

    gaps = []
    for M in (1024, 2048, 4096):
        g = []
        for r in range(replicas):
            a, b = run(M, 100 + r), run(2 * M, 100 + r)
            g.append(np.mean(np.sum((a.velocities - b.velocities) ** 2, axis=1)
                             + np.sum((a.positions - b.positions) ** 2, axis=1)))
        gaps.append(np.mean(g))
    assert gaps[0] > gaps[1] > gaps[2]
