import numpy as np
import pytest

from oovqd.hamio import (
    FcidumpConsistencyError,
    FcidumpParseError,
    FcidumpRangeError,
    load_fcidump,
    parse_fcidump,
    spin_orbital_count,
    write_fcidump,
)

HEADER = " &FCI NORB=2,NELEC=2,MS2=0,\n  ORBSYM=1,1,\n  ISYM=1,\n &END\n"


def test_core_energy_only():
    ints = parse_fcidump(HEADER + "0.7137539936 0 0 0 0\n")
    assert ints.e_core == pytest.approx(0.7137539936, abs=0)
    assert not ints.h.any()
    assert not ints.v.any()


def test_eightfold_population():
    ints = parse_fcidump(HEADER + "0.25 1 2 1 1\n")
    v = ints.v
    expected = [(0, 1, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0),
                (0, 0, 0, 1), (0, 0, 1, 0)]
    for idx in expected:
        assert v[idx] == 0.25
    assert np.count_nonzero(v) == 4  # distinct images of (1 2|1 1)


def test_one_electron_symmetrized():
    ints = parse_fcidump(HEADER + "-1.25 2 1 0 0\n")
    assert ints.h[1, 0] == ints.h[0, 1] == -1.25


def test_h2_fixture_hf_energy(h2_ints, h2_meta):
    assert h2_ints.m_spatial == 4
    assert h2_ints.n_electrons == 2
    # closed-shell determinant energy: doubly occupy the lowest orbital
    e_hf = 2.0 * h2_ints.h[0, 0] + h2_ints.v[0, 0, 0, 0]
    assert e_hf == pytest.approx(h2_meta["hf_electronic_energy"], abs=1e-8)


def test_lih_h4_fixture_hf_energy(lih_ints, lih_meta, h4_ints, h4_meta):
    for ints, meta in [(lih_ints, lih_meta), (h4_ints, h4_meta)]:
        occ = list(range(ints.n_electrons // 2))
        e = 2.0 * sum(ints.h[i, i] for i in occ)
        e += sum(2.0 * ints.v[i, i, j, j] - ints.v[i, j, j, i]
                 for i in occ for j in occ)
        assert e == pytest.approx(meta["hf_electronic_energy"], abs=1e-8)


@pytest.mark.parametrize("m,expected", [(4, 8), (19, 38), (20, 40)])
def test_spin_orbital_count(m, expected):
    header = f" &FCI NORB={m},NELEC=2,MS2=0,\n &END\n"
    ints = parse_fcidump(header + "0.0 0 0 0 0\n")
    assert spin_orbital_count(ints) == expected


def test_symmetries_validated_after_parse(h2_ints):
    h2_ints.validate_symmetries(tol=1e-14)
    v = h2_ints.v
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
                 (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]:
        np.testing.assert_array_equal(v, v.transpose(perm))
    np.testing.assert_array_equal(h2_ints.h, h2_ints.h.T)


def test_roundtrip(tmp_path, h2_ints):
    path = tmp_path / "roundtrip.fcidump"
    write_fcidump(h2_ints, path)
    back = load_fcidump(path)
    assert back.m_spatial == h2_ints.m_spatial
    assert back.n_electrons == h2_ints.n_electrons
    np.testing.assert_allclose(back.h, h2_ints.h, atol=1e-14)
    np.testing.assert_allclose(back.v, h2_ints.v, atol=1e-14)
    assert back.e_core == pytest.approx(h2_ints.e_core, abs=1e-14)


def test_missing_header_key():
    with pytest.raises(FcidumpParseError, match="NELEC"):
        parse_fcidump(" &FCI NORB=2,MS2=0,\n &END\n0.0 0 0 0 0\n")


def test_index_out_of_range_names_line():
    with pytest.raises(FcidumpRangeError, match="line 5"):
        parse_fcidump(HEADER + "1.0 3 1 0 0\n")


def test_conflicting_duplicates():
    with pytest.raises(FcidumpConsistencyError):
        parse_fcidump(HEADER + "1.0 1 2 1 1\n2.0 2 1 1 1\n")


def test_consistent_duplicates_accepted():
    ints = parse_fcidump(HEADER + "1.0 1 2 1 1\n1.0 2 1 1 1\n")
    assert ints.v[0, 1, 0, 0] == 1.0


def test_no_header_terminator():
    with pytest.raises(FcidumpParseError, match="&END"):
        parse_fcidump(" &FCI NORB=2,NELEC=2,MS2=0,\n0.0 0 0 0 0\n")
