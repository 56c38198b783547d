"""Opt-in replication of the H4 experiment (pytest -m slow).

Convergence-curve replication is not a hard gate (it depends on optimizer
budgets); the runs must terminate, emit complete traces, and land within
twice the reference per-state gaps."""

import numpy as np
import pytest

from oovqd import fci
from oovqd.drivers import (
    ActiveSpaceModel,
    DeflationConfig,
    OptimizerConfig,
    SAWeights,
    solve_savqd,
    solve_ssvqd,
    weighted_sum_report,
)
from oovqd.orbopt import PartialUnitary

# reference per-state |E_method - E_FCI| from the published H4 table
H4_SSVQD_GAPS = [0.028, 0.035, 0.043, 0.066, 0.028]
H4_SAVQD_GAPS = [0.032, 0.035, 0.044, 0.078, 0.042]


@pytest.mark.slow
def test_h4_experiment_terminates_within_twice_table_gaps(h4_ints):
    basis = fci.build_basis(40, 2, 2)
    e_fci = fci.lowest_eigenpairs(h4_ints, basis, k=5).electronic_energies
    model = ActiveSpaceModel(h4_ints, 8, 2, 2)
    defl = DeflationConfig(15.0)
    cfg = OptimizerConfig(outer_tol=3e-5, max_outer=80, theta_budget=2000,
                          max_orbital_cycles=200)
    inits = [PartialUnitary.from_columns(20, [0, 1, 2, 3])] * 5

    ss = solve_ssvqd(5, inits, defl, cfg, model)
    for sol, gap in zip(ss, H4_SSVQD_GAPS):
        err = abs(sol.energy - e_fci[sol.index - 1])
        assert sol.trace, "trace must be emitted"
        assert err <= 2.0 * gap, f"state {sol.index}: {err:.4f} > 2x{gap}"
    # beta |o|^2 pressure dies off once it falls below the outer tolerance,
    # so outer_tol / beta = 2e-6 is the supportable overlap floor here
    assert all(o < 2e-6 for s in ss for o in s.overlaps_sq)

    sa = solve_savqd(5, inits[0], SAWeights.descending(5), defl, cfg, model)
    assert sa.trace
    for sol, gap in zip(sa.states, H4_SAVQD_GAPS):
        err = abs(sol.energy - e_fci[sol.index - 1])
        assert err <= 2.0 * gap, f"SA state {sol.index}: {err:.4f} > 2x{gap}"

    w = SAWeights.descending(5)
    w_fci = weighted_sum_report(e_fci, w)
    w_ss = weighted_sum_report([s.energy for s in ss], w)
    # the state-specific weighted sum must not lose to the shared-orbital one
    assert w_ss <= sa.weighted_sum + 1e-3
    print(f"\nH4: SSVQD {[round(s.energy, 4) for s in ss]}")
    print(f"H4: SAVQD {[round(s.energy, 4) for s in sa.states]}")
    print(f"H4: weighted SS {w_ss:.4f} SA {sa.weighted_sum:.4f} FCI {w_fci:.4f}")
