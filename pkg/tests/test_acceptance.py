"""Acceptance suite: every criterion at its stated tolerance, one line each.

Heavy reference solves (LiH and H4 FCI, the LiH solver runs) are module-scoped
fixtures so several criteria can share them. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import time
from math import comb

import numpy as np
import pytest

from oovqd import checks, fci
from oovqd.checks import random_symmetric_integrals
from oovqd.drivers import (
    ActiveSpaceModel,
    DeflationConfig,
    OptimizerConfig,
    SAWeights,
    solve_savqd,
    solve_ssvqd,
    solve_state_ssvqd,
    weighted_sum_report,
)
from oovqd.orbopt import PartialUnitary

from tests.conftest import fixture_path


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


# ----------------------------------------------------------------------
# shared reference solves
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def lih_fci(lih_ints):
    basis = fci.build_basis(38, 2, 2)
    t0 = time.perf_counter()
    res = fci.lowest_eigenpairs(lih_ints, basis, k=6)
    return res, basis, time.perf_counter() - t0


@pytest.fixture(scope="module")
def h4_fci(h4_ints):
    basis = fci.build_basis(40, 2, 2)
    t0 = time.perf_counter()
    res = fci.lowest_eigenpairs(h4_ints, basis, k=5)
    return res, basis, time.perf_counter() - t0


# ----------------------------------------------------------------------
# criterion 1: H2 FCI reproduction
# ----------------------------------------------------------------------

def test_criterion_1_h2_fci(h2_ints):
    t0 = time.perf_counter()
    basis = fci.build_basis(8, 1, 1)
    res = fci.lowest_eigenpairs(h2_ints, basis, k=2)
    elapsed = time.perf_counter() - t0
    e = res.electronic_energies
    ok = (abs(e[0] - (-1.872)) < 2e-3 and abs(e[1] - (-1.474)) < 2e-3
          and elapsed < 1.0)
    report("criterion 1 (H2 FCI)",
           ok, f"E = {e[0]:.4f}, {e[1]:.4f} (target -1.872, -1.474), {elapsed:.2f}s")
    assert abs(e[0] - (-1.872)) < 2e-3
    assert abs(e[1] - (-1.474)) < 2e-3
    assert elapsed < 1.0


# ----------------------------------------------------------------------
# criterion 2: LiH FCI reproduction with degenerate pair
# ----------------------------------------------------------------------

def test_criterion_2_lih_fci(lih_fci):
    res, basis, elapsed = lih_fci
    e = res.electronic_energies
    targets = [-9.010, -8.896, -8.882, -8.858]
    ok_vals = all(abs(e[i] - t) < 2e-3 for i, t in enumerate(targets))
    degenerate = abs(e[4] - e[3]) < 1e-3
    wsum = weighted_sum_report(e[:4], SAWeights.descending(4))
    ok = ok_vals and degenerate and elapsed < 300.0 and abs(wsum - (-89.352)) < 1e-2
    report("criterion 2 (LiH FCI)", ok,
           f"E[:4] = {[round(x, 4) for x in e[:4]]}, |E5-E4| = {abs(e[4]-e[3]):.2e}, "
           f"weighted(4..1) {wsum:.3f}, {elapsed:.0f}s")
    assert ok_vals
    assert degenerate
    assert abs(wsum - (-89.352)) < 1e-2
    assert elapsed < 300.0


# ----------------------------------------------------------------------
# criterion 3: H4 FCI reproduction and weighted sum
# ----------------------------------------------------------------------

def test_criterion_3_h4_fci(h4_fci):
    res, basis, elapsed = h4_fci
    e = res.electronic_energies
    targets = [-4.430, -4.427, -4.349, -4.334, -4.221]
    ok_vals = all(abs(e[i] - t) < 2e-3 for i, t in enumerate(targets))
    wsum = weighted_sum_report(e, SAWeights.descending(5))
    ok_w = abs(wsum - (-65.793)) < 1e-2
    ok = ok_vals and ok_w and elapsed < 600.0
    report("criterion 3 (H4 FCI)", ok,
           f"E = {[round(x, 4) for x in e]}, weighted {wsum:.4f} "
           f"(target -65.793), {elapsed:.0f}s")
    assert ok_vals
    assert ok_w
    assert elapsed < 600.0


# ----------------------------------------------------------------------
# criterion 4: SSVQD beats SAVQD on H2
# ----------------------------------------------------------------------

def test_criterion_4_h2_ssvqd_vs_savqd(h2_ints):
    t0 = time.perf_counter()
    basis = fci.build_basis(8, 1, 1)
    e_fci = fci.lowest_eigenpairs(h2_ints, basis, k=2).electronic_energies
    model = ActiveSpaceModel(h2_ints, n_active_spin=4, n_alpha=1, n_beta=1)
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(outer_tol=1e-4, max_outer=60, theta_budget=2000)
    inits = [PartialUnitary.padded_identity(4, 2)] * 2
    ss = solve_ssvqd(2, inits, defl, cfg, model)
    weights = SAWeights(np.array([2.0, 1.0]))
    sa = solve_savqd(2, inits[0], weights, defl, cfg, model)
    elapsed = time.perf_counter() - t0

    rel = [(s.energy - e_fci[i]) / abs(e_fci[i]) for i, s in enumerate(ss)]
    w_fci = weighted_sum_report(e_fci, weights)
    w_ss = weighted_sum_report([s.energy for s in ss], weights)
    w_sa = sa.weighted_sum
    err_ss = abs(w_ss - w_fci) / abs(w_fci)
    err_sa = abs(w_sa - w_fci) / abs(w_fci)
    overlaps_ok = all(o < 1e-8 for s in ss for o in s.overlaps_sq)

    ok = (rel[0] <= 4.5e-3 and rel[1] <= 2e-3 and err_ss < err_sa
          and overlaps_ok and elapsed < 600.0)
    report("criterion 4 (H2 SSVQD vs SAVQD)", ok,
           f"rel = {rel[0]:.2e}, {rel[1]:.2e}; weighted err SS {err_ss:.2e} "
           f"vs SA {err_sa:.2e}; overlaps < 1e-8: {overlaps_ok}; {elapsed:.0f}s")
    assert rel[0] <= 4.5e-3
    assert rel[1] <= 2e-3
    assert err_ss < err_sa
    assert overlaps_ok
    assert elapsed < 600.0


# ----------------------------------------------------------------------
# criterion 5: LiH fifth state (state-specific success, state-averaged miss)
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def lih_model(lih_ints):
    return ActiveSpaceModel(lih_ints, n_active_spin=8, n_alpha=2, n_beta=2)


@pytest.fixture(scope="module")
def lih_ssvqd(lih_model):
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(outer_tol=2e-5, max_outer=80, theta_budget=4000,
                          max_orbital_cycles=200)
    cols = [[1, 2, 3, 4]] * 4 + [[1, 2, 3, 5]]
    inits = [PartialUnitary.from_columns(19, [c - 1 for c in cc]) for cc in cols]
    t0 = time.perf_counter()
    sols = solve_ssvqd(5, inits, defl, cfg, lih_model)
    return sols, time.perf_counter() - t0


@pytest.fixture(scope="module")
def lih_savqd(lih_model):
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(outer_tol=2e-5, max_outer=80, theta_budget=4000,
                          max_orbital_cycles=200)
    t0 = time.perf_counter()
    sol = solve_savqd(5, PartialUnitary.from_columns(19, [0, 1, 2, 3]),
                      SAWeights.descending(5), defl, cfg, lih_model)
    return sol, time.perf_counter() - t0


def test_criterion_5_lih_fifth_state(lih_fci, lih_ssvqd, lih_savqd):
    ref, basis, _ = lih_fci
    sols, t_ss = lih_ssvqd
    sa, t_sa = lih_savqd

    gap_45 = abs(sols[4].energy - sols[3].energy)
    ovl_ss5 = fci.fci_overlap_with_active(
        ref.vectors[:, 4], basis, sols[4].u, sols[4].psi) ** 2
    ovl_sa5_fci5 = fci.fci_overlap_with_active(
        ref.vectors[:, 4], basis, sa.u, sa.states[4].psi) ** 2
    ovl_sa5_fci6 = fci.fci_overlap_with_active(
        ref.vectors[:, 5], basis, sa.u, sa.states[4].psi) ** 2

    # the headline comparison holds on this experiment too
    weights = SAWeights.descending(5)
    w_ss = weighted_sum_report([s.energy for s in sols], weights)
    w_sa = weighted_sum_report([s.energy for s in sa.states], weights)

    ok = (gap_45 < 1e-3 and ovl_ss5 > 0.95
          and ovl_sa5_fci5 < 0.1 and ovl_sa5_fci6 > 0.9
          and w_ss <= w_sa + 1e-3)
    report("criterion 5 (LiH fifth state)", ok,
           f"SSVQD |E5-E4| = {gap_45:.2e}, |<SSVQD5|FCI5>|^2 = {ovl_ss5:.3f}; "
           f"SAVQD fifth root: |.|FCI5|^2 = {ovl_sa5_fci5:.3f}, "
           f"|.|FCI6|^2 = {ovl_sa5_fci6:.3f}; weighted SS {w_ss:.3f} vs "
           f"SA {w_sa:.3f} (t = {t_ss:.0f}s + {t_sa:.0f}s)")
    assert gap_45 < 1e-3
    assert ovl_ss5 > 0.95
    assert ovl_sa5_fci5 < 0.1
    assert ovl_sa5_fci6 > 0.9
    assert w_ss <= w_sa + 1e-3


# ----------------------------------------------------------------------
# criterion 6: gradient suite
# ----------------------------------------------------------------------

def test_criterion_6_gradient_suite():
    t0 = time.perf_counter()
    results = [
        checks.check_energy_gradient(seed=0, n_instances=100),
        checks.check_overlap_gradient(seed=1, n_instances=100),
        checks.check_derivative_identity(seed=3, n_instances=50),
    ]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in results) and elapsed < 30.0
    report("criterion 6 (gradient suite)", ok,
           "; ".join(r.line() for r in results) + f"; {elapsed:.1f}s")
    for r in results:
        assert r.passed, r.line()
    assert elapsed < 30.0


# ----------------------------------------------------------------------
# criterion 7: exterior-algebra suite
# ----------------------------------------------------------------------

def test_criterion_7_exterior_algebra_suite():
    t0 = time.perf_counter()
    results = [
        checks.check_anticommutation(n_max=6),
        checks.check_functoriality(seed=4, n_instances=200),
        checks.check_minor_matrix_elements(seed=5, n_instances=200),
        checks.check_overlap_embedding(seed=6, n_instances=50),
    ]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in results) and elapsed < 30.0
    report("criterion 7 (exterior algebra suite)", ok,
           "; ".join(r.line() for r in results) + f"; {elapsed:.1f}s")
    for r in results:
        assert r.passed, r.line()
    assert elapsed < 30.0


# ----------------------------------------------------------------------
# criterion 8: deflation oracle on random Hamiltonians
# ----------------------------------------------------------------------

def test_criterion_8_deflation_oracle():
    worst = 0.0
    for trial in range(20):
        ints = random_symmetric_integrals(np.random.default_rng(1000 + trial), 4)
        model = ActiveSpaceModel(ints, 8, 2, 2)
        dense = model.hamiltonian_matrix(PartialUnitary.padded_identity(4, 4))
        ref = np.linalg.eigvalsh(dense)[:3]
        cfg = OptimizerConfig(theta_method="exact", outer_tol=1e-9, max_outer=40,
                              max_orbital_cycles=5, inner_cap=10)
        sols = solve_ssvqd(3, [PartialUnitary.padded_identity(4, 4)] * 3,
                           DeflationConfig(15.0), cfg, model)
        got = np.array([s.energy for s in sols])
        worst = max(worst, np.abs(got - ref).max())
    ok = worst < 1e-6
    report("criterion 8 (deflation oracle)", ok,
           f"20 random Hamiltonians, max |E - eig| = {worst:.2e}")
    assert worst < 1e-6


# criterion 9 is the fixture generator's acceptance gate and lives in that
# component's own suite (fixturegen/tests/test_acceptance.py); the committed
# fixtures keep criteria 1-8 above runnable without it.
