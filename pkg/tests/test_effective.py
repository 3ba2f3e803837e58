import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from rydladder.basis import format_state, is_legal
from rydladder.dynamics import Propagator
from rydladder.effective import (
    decode_bits,
    dressed_sz_diagonal,
    encode_bits,
    enumerate_heff2_eigenstates,
    heff2_analytic,
    heff_numeric,
    rung_charges,
    sw_generator,
    sw_rotation,
    write_eigenstate_dump,
)
from rydladder.entanglement import Cut, vn_entropy
from rydladder.lattice import ladder
from rydladder.operators import h_x, h_z, hamiltonian, observable

from conftest import cached_basis


def maxabs(m):
    m = sp.csr_matrix(m)
    return float(abs(m).max()) if m.nnz else 0.0


def test_generator_cancels_drive():
    b = cached_basis(4)
    a = sw_generator(b, 1.0, 3.0)
    hz, hx = h_z(b, 3.0), h_x(b, 1.0)
    assert maxabs(a @ hz - hz @ a + hx) <= 1e-12
    assert maxabs(a + a.T) == 0.0
    assert a[b.index(0), b.index(0)] == 0.0


def test_generator_scales_inverse_delta():
    b = cached_basis(4)
    a1, a2 = sw_generator(b, 1.0, 1.5), sw_generator(b, 1.0, 3.0)
    assert maxabs(a1 - 2 * a2) <= 1e-15


def test_zero_detuning_rejected():
    b = cached_basis(2)
    for fn in (sw_generator, heff2_analytic):
        with pytest.raises(ValueError):
            fn(b, 1.0, 0.0)


def test_rotation_is_orthogonal():
    b = cached_basis(3)
    r = sw_rotation(b, 1.0, 4.0)
    np.testing.assert_allclose(r @ r.T, np.eye(b.dim), atol=1e-12)


def test_vacuum_annihilated():
    b = cached_basis(6)
    h2 = heff2_analytic(b, 1.0, 3.0)
    assert np.linalg.norm(h2 @ b.state_vector("vac")) == 0.0


def test_rung_charges_conserved():
    b = cached_basis(6)
    h2 = heff2_analytic(b, 1.0, 3.0)
    for j in range(1, 7):
        q = observable(b, "Q", j)
        assert maxabs(h2 @ q - q @ h2) <= 1e-12


@pytest.mark.parametrize("method", ["canonical", "single"])
def test_numeric_order_two_matches_closed_form(method):
    b = cached_basis(6)
    ex = heff_numeric(b, 1.0, 3.0, method=method)
    assert maxabs(ex.upto(2) - heff2_analytic(b, 1.0, 3.0)) <= 1e-10
    assert maxabs(ex.terms[1]) == 0.0
    assert maxabs(ex.terms[3]) <= 1e-12


def test_methods_agree_at_fourth_order():
    b = cached_basis(4)
    a = heff_numeric(b, 1.0, 2.0, method="canonical").terms[4]
    c = heff_numeric(b, 1.0, 2.0, method="single").terms[4]
    assert maxabs(a - c) <= 1e-12


def test_terms_hermitian_and_block_diagonal():
    b = cached_basis(4)
    ex = heff_numeric(b, 1.0, 2.0)
    for t in ex.terms:
        assert maxabs(t - t.conj().T) <= 1e-12
    hz = h_z(b, 2.0)
    assert maxabs(ex.terms[4] @ hz - hz @ ex.terms[4]) <= 1e-12


def test_numeric_order_validation():
    b = cached_basis(2)
    with pytest.raises(ValueError):
        heff_numeric(b, 1.0, 1.0, max_order=5)
    with pytest.raises(ValueError):
        heff_numeric(b, 1.0, 1.0, method="other")
    with pytest.raises(ValueError):
        heff_numeric(b, 1.0, 1.0, max_order=2).upto(4)


def test_three_leg_second_order_elements():
    b = cached_basis(6, 3)
    delta = 4.0
    t2 = heff_numeric(b, 1.0, delta, max_order=2).terms[2]
    i = b.index("xooooo/oooooo/oooooo")
    # blockaded rung hop: -(Omega^2 / 4 Delta)(-1)^j (xx + yy) gives -(-1)^j Omega^2 / 2 Delta
    for target in ("oooooo/xooooo/oooooo", "oooooo/oooooo/xooooo"):
        assert t2[b.index(target), i] == pytest.approx(1.0 / (2 * delta))
    np.testing.assert_allclose(t2.diagonal(), -dressed_sz_diagonal(b) / (2 * delta), atol=1e-12)


def test_fourth_order_scaling():
    b = cached_basis(4)
    deltas = np.array([2.0, 4.0, 8.0, 16.0])
    m4 = np.array([maxabs(heff_numeric(b, 1.0, d).terms[4]) for d in deltas])
    slope, _ = np.polyfit(np.log(deltas), np.log(m4), 1)
    omegas = np.array([0.5, 1.0, 2.0])
    m4o = np.array([maxabs(heff_numeric(b, o, 8.0).terms[4]) for o in omegas])
    oslope, _ = np.polyfit(np.log(omegas), np.log(m4o), 1)
    print(f"order-4 strength ~ Omega^{oslope:.3f} / Delta^{-slope:.3f}")
    # measured, not assumed: a clean power law in both parameters
    assert np.allclose(np.log(m4), np.polyval(np.polyfit(np.log(deltas), np.log(m4), 1), np.log(deltas)), atol=1e-6)
    assert slope == pytest.approx(-3.0, abs=1e-6)
    assert oslope == pytest.approx(4.0, abs=1e-6)


@pytest.fixture(scope="module")
def labeled8():
    b = cached_basis(4)
    return b, enumerate_heff2_eigenstates(b, 1.0, 3.0)


def test_labeled_states_complete(labeled8):
    b, states = labeled8
    assert len(states) == b.dim == 35
    m = np.stack([s.vector for s in states], axis=1)
    assert np.linalg.matrix_rank(m) == b.dim


def test_labeled_states_complete_n12():
    b = cached_basis(6)
    states = enumerate_heff2_eigenstates(b, 1.0, 2.0)
    m = np.stack([s.vector for s in states], axis=1)
    assert np.linalg.matrix_rank(m) == b.dim == 199


def test_labeled_states_are_eigenstates(labeled8):
    b, states = labeled8
    h2 = heff2_analytic(b, 1.0, 3.0)
    for s in states:
        assert np.linalg.norm(h2 @ s.vector - s.energy * s.vector) <= 1e-10
        for j, qj in enumerate(s.charges[1:], start=1):
            q = observable(b, "Q", j)
            assert s.vector @ (q @ s.vector) == pytest.approx(qj, abs=1e-12)


def test_tag_counts(labeled8):
    _, states = labeled8
    tags = {}
    for s in states:
        tags[s.tag] = tags.get(s.tag, 0) + 1
    assert tags == {"vacuum": 1, "frozen": 18, "bell-1": 8, "dressed-2": 8}


def test_single_excitation_bell_states(labeled8):
    b, states = labeled8
    omega, delta = 1.0, 3.0
    ones = [s for s in states if s.tag == "bell-1" and sum(q < 0 for q in s.charges[1:]) == 1]
    assert len(ones) == 2 * b.lattice.n_cols
    # hand evaluation on an odd column: diagonal 2 Delta + Omega^2 / 2 Delta,
    # rung hop +- Omega^2 / 2 Delta; even columns mirror the sign
    energies = sorted({round(s.energy, 10) for s in ones})
    top = 2 * delta + omega**2 / delta
    assert energies == pytest.approx([-top, -2 * delta, 2 * delta, top])


def test_two_particle_zero_modes():
    b = cached_basis(8)
    h2 = heff2_analytic(b, 1.0, 3.0)
    for text in ("ooxooooo/oooxoooo", "oooxoooo/ooxooooo"):
        assert np.linalg.norm(h2 @ b.state_vector(text)) == 0.0


def test_bell_entanglement(labeled8):
    b, states = labeled8
    lr, ud = Cut.lr(b.lattice), Cut.ud(b.lattice)
    for s in states:
        if s.tag.startswith("bell") or s.tag in ("vacuum", "frozen"):
            assert vn_entropy(b, s.vector, lr) == pytest.approx(0.0, abs=1e-10)
            assert vn_entropy(b, s.vector, ud) == pytest.approx(s.n_bell * np.log(2), abs=1e-10)


def test_dressed_states_carry_lr_entanglement(labeled8):
    b, states = labeled8
    lr = Cut.lr(b.lattice)
    s_lr = [vn_entropy(b, s.vector, lr) for s in states if s.tag.startswith("dressed")]
    assert max(s_lr) > 0.1


def test_eigenstate_dump(tmp_path, labeled8):
    _, states = labeled8
    p = tmp_path / "dump.txt"
    write_eigenstate_dump(states, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 35
    assert lines[0].split()[-1] in ("vacuum", "frozen", "bell-1", "dressed-2")


def test_encode_examples():
    lat = ladder(7)
    assert encode_bits([1] * 7, lat) == 0
    s = encode_bits([1, 1, 1, -1, 1, -1, 1], lat)
    assert format_state(s, lat) == "oooxoxo/ooooooo"
    with pytest.raises(ValueError):
        encode_bits([1, 2, 1, 1, 1, 1, 1], lat)
    with pytest.raises(ValueError):
        decode_bits([0.5, 1e-9])


@given(st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=10))
def test_encode_decode_roundtrip(bits):
    lat = ladder(len(bits))
    try:
        s = encode_bits(bits, lat)
    except ValueError:
        # only a fully excited odd ring cannot alternate legs
        assert all(b == -1 for b in bits) and len(bits) % 2 == 1
        return
    assert is_legal(s, lat)
    b = cached_basis(len(bits)) if len(bits) <= 8 else None
    occ = [[(s >> lat.site(c, a)) & 1 for a in range(2)] for c in range(lat.n_cols)]
    charges = [1 if sum(o) % 2 == 0 else -1 for o in occ]
    assert decode_bits(charges) == list(bits)
    if b is not None:
        assert decode_bits(rung_charges(b, b.basis_vector(s))) == list(bits)


def test_bits_survive_quench():
    b = cached_basis(6)
    bits = [1, -1, 1, 1, -1, 1]
    psi0 = b.basis_vector(encode_bits(bits, b.lattice))
    psi = Propagator(hamiltonian(b, 5.0)).apply(psi0, 100.0)
    assert decode_bits(rung_charges(b, psi)) == bits
