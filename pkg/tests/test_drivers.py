import numpy as np
import pytest

from oovqd import fci
from oovqd.checks import random_symmetric_integrals
from oovqd.drivers import (
    ActiveSpaceModel,
    DeflationConfig,
    OptimizerConfig,
    SAWeights,
    check_deflation_validity,
    optimize_orbitals,
    optimize_theta,
    solve_savqd,
    solve_ssvqd,
    solve_state_ssvqd,
    vqd_objective,
    weighted_sum_report,
)
from oovqd.orbopt import PartialUnitary, measure_rdms, rotated_energy


@pytest.fixture(scope="module")
def h2_model(h2_ints):
    return ActiveSpaceModel(h2_ints, n_active_spin=4, n_alpha=1, n_beta=1)


def test_sa_weights_invariant():
    with pytest.raises(ValueError):
        SAWeights(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        SAWeights(np.array([]))
    assert list(SAWeights.descending(3).w) == [3, 2, 1]


def test_weighted_sum_report():
    w = SAWeights(np.array([2.0, 1.0]))
    assert weighted_sum_report([-1.0, -2.0], w) == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        weighted_sum_report([-1.0], w)


def test_deflation_config():
    d = DeflationConfig(15.0)
    assert d.beta(0) == 15.0
    assert d.beta(3) == 15.0
    d = DeflationConfig([1.0, 2.0])
    assert d.beta(1) == 2.0
    with pytest.raises(ValueError):
        DeflationConfig(-1.0).beta(0)


def test_optimizer_config_invariants():
    with pytest.raises(ValueError):
        OptimizerConfig(eta=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(inner_cap=0)
    with pytest.raises(ValueError):
        OptimizerConfig(outer_tol=0.0)


def test_vqd_objective_ground_state_is_plain_energy(h2_model):
    u = PartialUnitary.padded_identity(4, 2)
    theta = np.zeros(h2_model.circuit.n_params)
    f = vqd_objective(theta, u, [], DeflationConfig(15.0), h2_model)
    hmat = h2_model.hamiltonian_matrix(u)
    p = h2_model.sector_amps(h2_model.prepare(theta))
    assert f == pytest.approx(float(p @ hmat @ p), abs=1e-12)


def test_vqd_objective_penalty_saturates(h2_model):
    from oovqd.drivers import StateSolution

    u = PartialUnitary.padded_identity(4, 2)
    cfg = OptimizerConfig(theta_budget=1500)
    res = optimize_theta(u, [], DeflationConfig(15.0), cfg, h2_model,
                         np.zeros(h2_model.circuit.n_params))
    lower = StateSolution(index=1, theta=res.theta, u=u, psi=res.psi,
                          energy=res.energy, trace=[], converged=True)
    # evaluating the deflated objective at the lower solution itself: the
    # overlap penalty saturates at its full weight
    f = vqd_objective(res.theta, u, [lower], DeflationConfig(15.0), h2_model)
    assert f >= res.energy + 15.0 - 1e-6


def test_optimize_theta_reaches_active_fci(h2_model):
    """DFO phase lands within 1 mHa of the truncated-Hamiltonian ground state."""
    u = PartialUnitary.padded_identity(4, 2)
    hmat = h2_model.hamiltonian_matrix(u)
    exact = np.linalg.eigvalsh(hmat)[0]
    cfg = OptimizerConfig(theta_budget=2000)
    res = optimize_theta(u, [], DeflationConfig(15.0), cfg, h2_model,
                         np.zeros(h2_model.circuit.n_params))
    assert res.energy == pytest.approx(exact, abs=1e-3)
    assert res.n_evals <= 2000


def test_optimize_theta_deterministic(h2_model):
    u = PartialUnitary.padded_identity(4, 2)
    cfg = OptimizerConfig(theta_budget=500)
    args = (u, [], DeflationConfig(15.0), cfg, h2_model,
            np.zeros(h2_model.circuit.n_params))
    r1 = optimize_theta(*args)
    r2 = optimize_theta(*args)
    np.testing.assert_array_equal(r1.theta, r2.theta)
    assert r1.objective == r2.objective
    assert r1.n_evals == r2.n_evals


def test_exact_theta_optimizer(h2_model):
    u = PartialUnitary.padded_identity(4, 2)
    cfg = OptimizerConfig(theta_method="exact")
    res = optimize_theta(u, [], DeflationConfig(15.0), cfg, h2_model,
                         np.zeros(h2_model.circuit.n_params))
    exact = np.linalg.eigvalsh(h2_model.hamiltonian_matrix(u))[0]
    assert res.energy == pytest.approx(exact, abs=1e-12)


def test_orbital_phase_monotone_for_ground_state(h2_ints, h2_model):
    """k=1 has no overlap terms: pure projected GD, energy non-increasing."""
    cfg = OptimizerConfig(theta_method="exact", max_orbital_cycles=30,
                          inner_cap=20)
    u0 = PartialUnitary.padded_identity(4, 2)
    res = optimize_theta(u0, [], DeflationConfig(15.0), cfg, h2_model,
                         np.zeros(h2_model.circuit.n_params))
    rdms = measure_rdms(res.psi)
    energies = [rotated_energy(u0, rdms, h2_ints)]
    u = u0
    for _ in range(10):
        u, info = optimize_orbitals(res.psi, u, [], DeflationConfig(15.0),
                                    OptimizerConfig(theta_method="exact",
                                                    max_orbital_cycles=1,
                                                    inner_cap=20),
                                    h2_ints, rdms=rdms)
        energies.append(rotated_energy(u, rdms, h2_ints))
    for a, b in zip(energies, energies[1:]):
        assert b <= a + 1e-10
    assert u.is_orthonormal()


def test_freeze_consistency_l1_vs_l100(h2_ints, h2_model):
    """Refreshing the overlap gradient every step or every 100 steps must
    land on the same optimum."""
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(theta_method="exact", outer_tol=1e-6, max_outer=30)
    inits = [PartialUnitary.padded_identity(4, 2)] * 2
    ground = solve_state_ssvqd(1, [], inits[0], np.zeros(h2_model.circuit.n_params),
                               defl, cfg, h2_model)
    res = optimize_theta(ground.u, [ground], defl, cfg, h2_model,
                         np.zeros(h2_model.circuit.n_params))
    finals = {}
    for cap in (1, 100):
        # same total step budget, no early stop: isolates the freezing effect
        cfg_cap = OptimizerConfig(theta_method="exact", inner_cap=cap,
                                  max_orbital_cycles=3000 // cap,
                                  orbital_inner_tol=0.0)
        u, info = optimize_orbitals(res.psi, ground.u, [ground], defl, cfg_cap,
                                    h2_ints)
        finals[cap] = info.objective
    assert finals[1] == pytest.approx(finals[100], abs=1e-6)


def test_fixed_point_terminates_immediately(h2_model):
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(outer_tol=1e-4, max_outer=40, theta_budget=1200)
    u0 = PartialUnitary.padded_identity(4, 2)
    first = solve_state_ssvqd(1, [], u0, np.zeros(h2_model.circuit.n_params),
                              defl, cfg, h2_model)
    assert first.converged
    again = solve_state_ssvqd(1, [], first.u, first.theta, defl, cfg, h2_model)
    assert again.converged
    assert len(again.trace) == 1


def test_deflation_oracle_smoke():
    """Three random Hamiltonians: exact-theta SSVQD reproduces the lowest
    three sector eigenvalues (full sweep lives in the acceptance suite)."""
    rng = np.random.default_rng(0)
    for trial in range(3):
        ints = random_symmetric_integrals(np.random.default_rng(100 + trial), 4)
        model = ActiveSpaceModel(ints, 8, 2, 2)
        dense = model.hamiltonian_matrix(PartialUnitary.padded_identity(4, 4))
        ref = np.linalg.eigvalsh(dense)[:3]
        cfg = OptimizerConfig(theta_method="exact", outer_tol=1e-9, max_outer=30,
                              eta=1e-3, max_orbital_cycles=5, inner_cap=10)
        sols = solve_ssvqd(3, [PartialUnitary.padded_identity(4, 4)] * 3,
                           DeflationConfig(15.0), cfg, model)
        got = [s.energy for s in sols]
        np.testing.assert_allclose(got, ref, atol=1e-6)


def test_savqd_k1_below_hf(h2_ints, h2_model, h2_meta):
    cfg = OptimizerConfig(theta_method="exact", outer_tol=1e-6, max_outer=40)
    sol = solve_savqd(1, PartialUnitary.padded_identity(4, 2),
                      SAWeights(np.array([1.0])), DeflationConfig(15.0), cfg,
                      h2_model)
    assert sol.converged
    assert sol.states[0].energy <= h2_meta["hf_electronic_energy"] + 1e-10


def test_check_deflation_validity(h2_model):
    defl = DeflationConfig(0.01)
    cfg = OptimizerConfig(theta_method="exact", outer_tol=1e-5, max_outer=20)
    sols = solve_ssvqd(2, [PartialUnitary.padded_identity(4, 2)] * 2,
                       DeflationConfig(15.0), cfg, h2_model)
    assert check_deflation_validity(sols, DeflationConfig(15.0)) == []
    assert check_deflation_validity(sols, defl)  # tiny beta must be flagged
