import numpy as np
import pytest
import scipy.linalg

from oovqd.ansatz import AnsatzCircuit, ExcitationOp, apply_ansatz, build_uccsd
from oovqd.fockspace import basis_state, hf_reference, sector_indices


def test_minimal_uccsd_count():
    circ = build_uccsd(4, 1, 1, reps=1)
    kinds = [op.kind for op in circ.ops]
    assert kinds.count("single") == 2
    assert kinds.count("double") == 1
    assert circ.n_params == 3


def test_h4_active_uccsd_count():
    circ = build_uccsd(8, 2, 2, reps=2)
    singles = [op for op in circ.ops if op.kind == "single"]
    doubles = [op for op in circ.ops if op.kind == "double"]
    assert len(singles) == 8          # 2 occ x 2 virt per spin
    assert len(doubles) == 1 + 1 + 16  # aa, bb, and mixed
    assert circ.n_params == 2 * (8 + 18)


def test_reps_zero_rejected():
    with pytest.raises(ValueError):
        build_uccsd(4, 1, 1, reps=0)


def test_no_virtuals_rejected():
    with pytest.raises(ValueError):
        build_uccsd(4, 2, 2, reps=1)


def test_invalid_excitation_op():
    with pytest.raises(ValueError):
        ExcitationOp("single", (0,), (0,))
    with pytest.raises(ValueError):
        ExcitationOp("double", (0,), (1,))


def test_zero_theta_is_identity():
    circ = build_uccsd(8, 2, 2, reps=2)
    ref = hf_reference(8, 2, 2)
    out = apply_ansatz(circ, np.zeros(circ.n_params), ref)
    np.testing.assert_array_equal(out.amps, ref.amps)


def test_quarter_turn_single_transfers_occupation():
    circ = AnsatzCircuit(n_orbitals=4, ops=[ExcitationOp("single", (0,), (1,))], reps=1)
    ref = basis_state(4, 0b0001)
    out = apply_ansatz(circ, np.array([np.pi / 2]), ref)
    assert abs(out.amps[0b0010]) == pytest.approx(1.0, abs=1e-12)
    assert abs(out.amps[0b0001]) == pytest.approx(0.0, abs=1e-12)


def dense_generator(circ, op, dim):
    """Oracle: assemble K = G - G^T columnwise from the table-free definition."""
    from oovqd.fockspace import apply_annihilator, apply_creator, zero_vector

    g = np.zeros((dim, dim))
    n = circ.n_orbitals
    for b in range(dim):
        v = zero_vector(n)
        v.amps[b] = 1.0
        for o in reversed(op.occupied):
            v = apply_annihilator(o, v)
        for vi in reversed(op.virtual):
            v = apply_creator(vi, v)
        g[:, b] = v.amps
    return g - g.T


@pytest.mark.parametrize("op", [
    ExcitationOp("single", (0,), (2,)),
    ExcitationOp("single", (4,), (6,)),
    ExcitationOp("double", (0, 1), (2, 3)),
    ExcitationOp("double", (0, 4), (2, 6)),
])
def test_factor_matches_matrix_exponential(op):
    """Closed-form factor equals scipy's expm of the dense generator."""
    circ = AnsatzCircuit(n_orbitals=8, ops=[op], reps=1)
    dim = 1 << 8
    k = dense_generator(circ, op, dim)
    t = 0.731
    expk = scipy.linalg.expm(t * k)
    rng = np.random.default_rng(0)
    amps = rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    from oovqd.fockspace import FockVector

    out = apply_ansatz(circ, np.array([t]), FockVector(8, amps))
    np.testing.assert_allclose(out.amps, expk @ amps, atol=1e-12)


def test_norm_and_sector_preserved_random_sweep():
    circ = build_uccsd(8, 2, 2, reps=2)
    ref = hf_reference(8, 2, 2)
    sec = set(sector_indices(8, 2, 2).tolist())
    outside = np.array([b for b in range(1 << 8) if b not in sec])
    rng = np.random.default_rng(42)
    for _ in range(1000):
        theta = rng.uniform(-np.pi, np.pi, size=circ.n_params)
        out = apply_ansatz(circ, theta, ref)
        assert abs(out.norm() - 1.0) < 1e-12
        assert np.abs(out.amps[outside]).max() == 0.0


def test_determinism():
    circ = build_uccsd(8, 2, 2, reps=2)
    ref = hf_reference(8, 2, 2)
    theta = np.linspace(-1, 1, circ.n_params)
    a = apply_ansatz(circ, theta, ref).amps
    b = apply_ansatz(circ, theta, ref).amps
    np.testing.assert_array_equal(a, b)


def test_factor_order_is_deterministic():
    c1 = build_uccsd(8, 2, 2, reps=2)
    c2 = build_uccsd(8, 2, 2, reps=2)
    assert c1.ops == c2.ops
    assert c1.factors == c2.factors
