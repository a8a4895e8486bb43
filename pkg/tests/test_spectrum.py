import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpstates.errors import (
    EmptySpectrum,
    IndexOutOfRange,
    InvalidParams,
    MassGapViolation,
    NotSorted,
    SpectrumMismatch,
)
from fpstates.spectrum import (
    GAMMA0,
    GAMMA5,
    ModelParams,
    build_eigenspinor_basis,
    check_counting_bound,
    counting_function,
    dirac_symbol,
    expected_pairing,
    pairing_table_deviation,
    pairing_value,
    partner_spinors,
    positive_spinors,
    read_spectrum,
    synthetic_spectrum,
    torus_spectrum,
    write_spectrum,
)

TWO_PI = 2 * math.pi


def symbol_eigenvalues(params, lattice):
    """Independent route: eigvalsh of the 4x4 symbol for every lattice vector."""
    out = []
    for k in lattice:
        out.extend(np.linalg.eigvalsh(dirac_symbol(params.momentum(k), params.mass)))
    return np.sort(out)


def test_cutoff_below_first_shell(params):
    spec = torus_spectrum(params, 1.2)
    np.testing.assert_array_equal(spec.positive, [1.0, 1.0])
    assert [lam for _, lam in spec.entries()] == [-1.0, -1.0, 1.0, 1.0]
    np.testing.assert_allclose(symbol_eigenvalues(params, [(0, 0, 0)]), [-1, -1, 1, 1], atol=1e-14)


def test_first_shell_multiplicity(params):
    spec = torus_spectrum(params, 1.5)
    assert len(spec) == 14
    np.testing.assert_allclose(spec.positive[2:], math.sqrt(2), rtol=0, atol=1e-15)
    lattice = {tuple(k) for k in spec.lattice}
    want = symbol_eigenvalues(params, sorted(lattice))
    got = np.sort(np.concatenate([spec.positive, -spec.positive]))
    np.testing.assert_allclose(got, want, atol=1e-13)


def test_mass_gap_cutoff():
    with pytest.raises(EmptySpectrum):
        torus_spectrum(ModelParams(1.0), 0.5)


def test_invalid_model():
    with pytest.raises(InvalidParams):
        ModelParams(0.0)
    with pytest.raises(InvalidParams):
        ModelParams(1.0, (1.0, 1.0))
    with pytest.raises(InvalidParams):
        torus_spectrum("not params", 3.0)


def test_synthetic():
    spec = synthetic_spectrum(1, [1, 2, 3])
    assert [spec.eigenvalue(z) for z in (-3, -2, -1, 1, 2, 3)] == [-3, -2, -1, 1, 2, 3]
    assert len(synthetic_spectrum(2, [2, 2])) == 2
    with pytest.raises(MassGapViolation):
        synthetic_spectrum(1, [0.5])
    with pytest.raises(NotSorted):
        synthetic_spectrum(1, [2, 1.5])
    with pytest.raises(EmptySpectrum):
        synthetic_spectrum(1, [])
    with pytest.raises(IndexOutOfRange):
        spec.eigenvalue(0)
    with pytest.raises(IndexOutOfRange):
        spec.eigenvalue(4)


def test_degenerate_ordering_is_lexicographic(small_spectrum):
    lam = small_spectrum.positive
    for start in np.unique(lam):
        sel = np.nonzero(lam == start)[0]
        keys = [tuple(small_spectrum.lattice[i]) + (int(small_spectrum.spin[i]),) for i in sel]
        assert keys == sorted(keys)


def test_spectrum_reproducible(params):
    a, b = torus_spectrum(params, 5.0), torus_spectrum(params, 5.0)
    np.testing.assert_array_equal(a.positive, b.positive)
    np.testing.assert_array_equal(a.lattice, b.lattice)


def test_multiplicity_tags():
    spec = synthetic_spectrum(1, [1, 2, 2, 2, 3])
    assert spec.multiplicity_tags() == ["1/1", "1/3", "2/3", "3/3", "1/1"]


def test_truncate(small_spectrum):
    t = small_spectrum.truncate(2.0)
    assert t.positive[-1] <= 2.0 < small_spectrum.positive[len(t)]
    with pytest.raises(EmptySpectrum):
        small_spectrum.truncate(0.9)


def test_roundtrip(tmp_path, small_spectrum):
    path = tmp_path / "spec.txt"
    write_spectrum(small_spectrum, path, ["note"])
    back = read_spectrum(path)
    assert back.mass == small_spectrum.mass
    np.testing.assert_array_equal(back.positive, small_spectrum.positive)
    text = path.read_text().splitlines()
    assert text[0] == "# mass=1.0"
    assert text[2].split() == ["1", "1.0", "1/2"]


def test_read_rejects_gaps(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# mass=1\n1 1.0\n3 2.0\n")
    with pytest.raises(InvalidParams):
        read_spectrum(path)


# ---------------------------------------------------------------------------
# eigenspinors
# ---------------------------------------------------------------------------

def test_rest_frame_partner(small_basis):
    u = small_basis.u_pos[0]
    np.testing.assert_allclose(GAMMA0 @ u, u, atol=0)
    np.testing.assert_allclose(small_basis.u_neg[0], GAMMA5 @ u, atol=0)
    h = dirac_symbol(np.zeros(3), 1.0)
    np.testing.assert_allclose(h @ small_basis.u_neg[0], -small_basis.u_neg[0], atol=1e-15)


def test_partner_two_ways(params):
    spec = torus_spectrum(params, 1.5)
    basis = build_eigenspinor_basis(params, spec)
    idx = [i for i, k in enumerate(basis.k) if tuple(k) == (1, 0, 0)]
    assert len(idx) == 2
    h = dirac_symbol(basis.kphys[idx[0]], 1.0)
    w, v = np.linalg.eigh(h)
    neg = v[:, w < 0]
    proj = neg @ neg.conj().T
    for i in idx:
        target = proj @ (GAMMA0 @ basis.u_pos[i])
        target /= np.linalg.norm(target)
        np.testing.assert_allclose(basis.u_neg[i], target, atol=1e-12)


def test_residuals_and_norms(small_basis):
    rp, rn = small_basis.residuals()
    assert max(rp.max(), rn.max()) < 1e-12
    np.testing.assert_allclose(np.linalg.norm(small_basis.u_neg, axis=1), 1, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(small_basis.u_pos, axis=1), 1, atol=1e-14)


def test_pairing_examples(small_basis):
    z = 3  # first sqrt(2) mode
    assert pairing_value(small_basis, z, z) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert abs(pairing_value(small_basis, -z, z)) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    far = next(w for w in range(1, len(small_basis) + 1)
               if tuple(small_basis.k[w - 1]) != tuple(small_basis.k[z - 1]))
    assert pairing_value(small_basis, far, z) == 0
    assert expected_pairing(1.0, 2.0, 2.0, 5, 7) == 0.0


def test_pairing_table(small_basis):
    worst, checked = pairing_table_deviation(small_basis)
    assert worst < 1e-12
    assert checked == 8 * len(small_basis)  # 16 pairs per lattice vector, two modes each


def test_basis_requires_matching_params(small_spectrum):
    with pytest.raises(SpectrumMismatch):
        build_eigenspinor_basis(ModelParams(1.0, (1.0,) * 3), small_spectrum)
    with pytest.raises(SpectrumMismatch):
        build_eigenspinor_basis(ModelParams(1.0), synthetic_spectrum(1, [1, 2]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-30, 30, allow_nan=False, allow_subnormal=False), min_size=3, max_size=3),
       st.floats(0.05, 20))
def test_spinors_diagonalise_symbol(k, mass):
    k = np.array(k)
    h = dirac_symbol(k, mass)
    energy = math.sqrt(mass * mass + k @ k)
    u = positive_spinors(k, mass)[0]
    eta = partner_spinors(u, np.full(2, energy), mass, np.array([k, k]))
    scale = max(1.0, energy)
    for s in range(2):
        assert np.linalg.norm(h @ u[s] - energy * u[s]) < 1e-12 * scale
        assert np.linalg.norm(h @ eta[s] + energy * eta[s]) < 1e-12 * scale
        assert abs(np.vdot(u[s], eta[s])) < 1e-14
    np.testing.assert_allclose(np.linalg.norm(eta, axis=1), 1, atol=1e-14)


def test_partner_routes_agree(small_basis):
    lam = np.asarray(small_basis.spectrum.positive[: len(small_basis)])
    plain = partner_spinors(small_basis.u_pos, lam, 1.0)
    np.testing.assert_allclose(plain, small_basis.u_neg, atol=1e-13)


# ---------------------------------------------------------------------------
# counting
# ---------------------------------------------------------------------------

def test_counting_examples(params):
    spec = torus_spectrum(params, 1.2)
    assert counting_function(spec, 1.2) == 4
    assert counting_function(spec, 0.5) == 0


def test_weyl_growth(params):
    ratios = []
    for cutoff in (5.0, 10.0, 20.0):
        spec = torus_spectrum(params, cutoff)
        ratios.append(counting_function(spec, cutoff) / cutoff ** 3)
    # flat-torus Weyl constant for both signs and two spins: 4 * (4/3) pi / (2 pi)^3 * V
    weyl = 4 * 4 / 3 * math.pi
    assert all(abs(r - weyl) / weyl < 0.2 for r in ratios)
    ok, c, k, margin = check_counting_bound(spec)
    assert ok and c > 0 and k > 0 and margin >= 0
