import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from rydladder.basis import enumerate_basis, named_state, parse_state
from rydladder.lattice import build_lattice
from rydladder.operators import (
    LONGRANGE_MODES,
    DetuningProfile,
    anticommutator_norm,
    build_longrange,
    build_pxp_z,
    chirality,
    commutator_norm,
    disordered_hamiltonian,
    h_x,
    h_z,
    hamiltonian,
    observable,
    parse_observable,
    read_triplets,
    translation_operator,
    write_triplets,
)

from conftest import cached_basis


def expval(op, v):
    return complex(np.vdot(v, op @ v))


def hermiticity_gap(op):
    d = sp.csr_matrix(op - op.conj().T)
    return float(abs(d).max()) if d.nnz else 0.0


def test_vacuum_couples_to_every_single_excitation():
    b = cached_basis(2)
    h = hamiltonian(b, 0.0).toarray()
    vac = b.index(0)
    singles = [b.index(1 << i) for i in range(4)]
    np.testing.assert_array_equal(h[vac, singles], 1.0)


def test_neel_diagonal():
    b = cached_basis(4)
    lat = b.lattice
    s = named_state("Z2", lat)
    h = hamiltonian(b, 1.0)
    k = b.index(s)
    sz = np.array([1.0 if (s >> i) & 1 else -1.0 for i in range(lat.n_sites)])
    assert h[k, k] == pytest.approx(-np.sum(lat.stagger * sz))


def test_three_leg_1p_energy():
    b = cached_basis(6, 3)
    h = build_pxp_z(b, 1.0, DetuningProfile.staggered(b.lattice, 1.7))
    # the quench-panel 1P sits on an even column
    assert expval(h, b.state_vector("oooooo/oooxoo/oooooo")).real == pytest.approx(-2 * 1.7)
    assert expval(h, b.state_vector("1P")).real == pytest.approx(2 * 1.7)


@pytest.mark.parametrize("delta", [0.0, 1.0, 2.5])
def test_z4_energy(delta):
    b = cached_basis(8)
    v = b.state_vector("Z4_1")
    assert expval(hamiltonian(b, delta), v).real == pytest.approx(-8 * delta)


@pytest.mark.parametrize("cols, legs", [(4, 2), (6, 2), (6, 3), (8, 1), (4, 4)])
@pytest.mark.parametrize("delta", [0.0, 0.8])
def test_hermitian_and_translation_invariant(cols, legs, delta):
    b = cached_basis(cols, legs)
    h = hamiltonian(b, delta)
    assert hermiticity_gap(h) == 0.0
    assert commutator_norm(h, translation_operator(b, "x", 2)) <= 1e-12
    if legs > 1:
        assert commutator_norm(h, translation_operator(b, "y")) <= 1e-12


def test_full_translation_only_at_zero_detuning():
    b = cached_basis(6)
    tx = translation_operator(b, "x")
    assert commutator_norm(hamiltonian(b, 0.0), tx) <= 1e-12
    assert commutator_norm(hamiltonian(b, 1.0), tx) > 0.1


@given(st.floats(-3, 3, allow_nan=False))
def test_spectral_reflection(delta):
    b = cached_basis(4)
    e = np.linalg.eigvalsh(hamiltonian(b, delta).toarray())
    np.testing.assert_allclose(e, -e[::-1], atol=1e-10)


def test_chirality_algebra():
    b = cached_basis(6)
    c = chirality(b, "C")
    hx, hz = h_x(b), h_z(b, 1.0)
    assert anticommutator_norm(c, hx) <= 1e-12
    assert commutator_norm(c, hz) <= 1e-12
    assert anticommutator_norm(c, hamiltonian(b, 0.0)) <= 1e-12
    assert anticommutator_norm(c, hamiltonian(b, 1.0)) > 0.1
    for which in ("C1", "C2"):
        assert anticommutator_norm(chirality(b, which), hamiltonian(b, 1.0)) <= 1e-12


def test_chirality_on_states():
    b = cached_basis(4)
    lat = b.lattice
    c, c1 = chirality(b, "C"), chirality(b, "C1")
    np.testing.assert_allclose(c @ b.state_vector("vac"), b.state_vector("vac"))
    sign = (-1) ** (lat.n_sites - lat.n_cols)
    np.testing.assert_allclose(c1 @ b.state_vector("Z2"), sign * b.state_vector("Z2bar"))
    eye = np.eye(b.dim)
    np.testing.assert_allclose((c @ c).toarray(), eye)
    np.testing.assert_allclose((c1 @ c1.conj().T).toarray(), eye)


def test_observables_on_named_states():
    b = cached_basis(4)
    vac, z2 = b.state_vector("vac"), b.state_vector("Z2")
    assert expval(observable(b, "Mz"), vac).real == -1.0
    assert expval(observable(b, "Zpi"), vac).real == 0.0
    for j in range(1, 5):
        assert expval(observable(b, "Q", j), z2).real == -1.0
    assert expval(observable(b, "N"), z2).real == 4.0
    dh = observable(b, "dH").toarray()
    h1, h0 = hamiltonian(b, 1.0).toarray(), hamiltonian(b, 0.0).toarray()
    np.testing.assert_allclose(dh, h1 - h0)


def test_local_h_operator():
    b = cached_basis(3)
    op = observable(b, "h", 1, 1)
    assert hermiticity_gap(op) == 0.0
    assert expval(op, b.state_vector("vac")).real == -1.0
    assert parse_observable(b, "h1_1").nnz == op.nnz


@pytest.mark.parametrize("bad", ["foo", "Q", "hx_1"])
def test_unknown_observable(bad):
    with pytest.raises(ValueError):
        parse_observable(cached_basis(2), bad)


def test_site_range_checked():
    with pytest.raises(IndexError):
        observable(cached_basis(2), "sz", 3, 1)


def test_disorder_is_columnwise_and_reproducible():
    lat = build_lattice(6, 2)
    p = DetuningProfile.disordered(lat, 1.0, 0.5, 11)
    vals = p.values.reshape(6, 2)
    np.testing.assert_array_equal(vals[:, 0], vals[:, 1])
    np.testing.assert_array_equal(p.values, DetuningProfile.disordered(lat, 1.0, 0.5, 11).values)
    b = cached_basis(6)
    h = disordered_hamiltonian(b, 1.0, 0.5, 11)
    assert commutator_norm(h, translation_operator(b, "y")) <= 1e-12


def test_longrange_pair_energies():
    chain = build_lattice(8, 1)
    h, b = build_longrange(chain, 1.0, DetuningProfile.uniform(chain, 0.0), 64.0, "full_unconstrained")
    k = b.index(parse_state("xxoooooo", chain, check=False))
    assert h[k, k] == pytest.approx(64.0)
    k = b.index(parse_state("xoxooooo", chain, check=False))
    assert h[k, k] == pytest.approx(1.0, rel=1e-12)
    lad = build_lattice(4, 2)
    h, b = build_longrange(lad, 1.0, DetuningProfile.uniform(lad, 0.0), 8.0, "NN2_only")
    k = b.index(parse_state("xooo/oxoo", lad))
    assert h[k, k] == pytest.approx(1.0)


def test_blockaded_mode_matches_pxp():
    lat = build_lattice(4, 2)
    prof = DetuningProfile.staggered(lat, 0.7)
    h, b = build_longrange(lat, 1.0, prof, 10.0, "blockaded_pxp")
    assert (h != build_pxp_z(b, 1.0, prof)).nnz == 0


@pytest.mark.parametrize("mode", LONGRANGE_MODES)
def test_longrange_modes_hermitian(mode):
    lat = build_lattice(3, 2)
    h, b = build_longrange(lat, 1.0, DetuningProfile.staggered(lat, 1.0), 5.0, mode)
    assert h.shape == (b.dim, b.dim)
    assert hermiticity_gap(h) == 0.0


def test_longrange_cap():
    with pytest.raises(MemoryError):
        build_longrange(build_lattice(9, 2), 1.0, DetuningProfile.uniform(build_lattice(9, 2), 0.0), 1.0, "full_unconstrained")
    with pytest.raises(ValueError):
        build_longrange(build_lattice(3, 2), 1.0, DetuningProfile.uniform(build_lattice(3, 2), 0.0), 1.0, "bogus")


def test_triplet_roundtrip(tmp_path):
    b = cached_basis(3)
    h = hamiltonian(b, 0.3)
    p = tmp_path / "h.txt"
    write_triplets(h, p)
    rows = [tuple(map(int, line.split()[:2])) for line in p.read_text().splitlines()]
    assert rows == sorted(rows)
    back = read_triplets(p, h.shape)
    assert abs(back - h).max() == 0.0
