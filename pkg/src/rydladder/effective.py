"""Schrieffer-Wolff effective Hamiltonians for large staggered detuning.

The unperturbed part is ``H_z = -Delta Z_pi``; its eigenspaces are the
``Z_pi`` blocks. Every dressed flip changes ``Z_pi`` by two, so odd orders
vanish after projecting onto the blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ConstrainedBasis, format_state, is_legal
from .operators import flip_triplets, h_x, h_z, observable, sigma_z

SW_METHODS = ("canonical", "single")


def _csr(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.data[np.abs(m.data) < 1e-14] = 0.0
    m.eliminate_zeros()
    m.sort_indices()
    return m


def _check_delta(delta: float) -> None:
    if delta == 0:
        raise ValueError("Schrieffer-Wolff expansion needs Delta != 0")


def zpi_values(basis: ConstrainedBasis) -> np.ndarray:
    """Eigenvalue of ``Z_pi`` for every basis state."""
    return sigma_z(basis) @ basis.lattice.stagger


def project_zpi(op, zpi: np.ndarray) -> sp.csr_matrix:
    """Zero every matrix element between different ``Z_pi`` blocks."""
    m = sp.coo_matrix(op)
    keep = np.isclose(zpi[m.row], zpi[m.col])
    return _csr(sp.coo_matrix((m.data[keep], (m.row[keep], m.col[keep])), shape=m.shape))


def sw_generator(basis: ConstrainedBasis, omega: float, delta: float) -> sp.csr_matrix:
    """First-order generator ``iS`` with ``[iS, H_z] = -H_x``.

    ``iS = (Omega / 2 i Delta) sum (-1)^j sigma~^y`` in the convention
    ``sigma^y |ground> = -i |excited>``. The operator is real and
    antisymmetric: creating an excitation on a site with stagger ``s`` has
    amplitude ``-s Omega / 2 Delta``.
    """
    _check_delta(delta)
    rows, cols, sites = flip_triplets(basis)
    stag = basis.lattice.stagger[sites]
    creating = ((basis.states[cols] >> sites) & 1) == 0
    amp = np.where(creating, -1.0, 1.0) * stag * float(omega) / (2.0 * float(delta))
    return _csr(sp.coo_matrix((amp, (rows, cols)), shape=(basis.dim, basis.dim)))


def sw_rotation(basis: ConstrainedBasis, omega: float, delta: float) -> np.ndarray:
    """Dense orthogonal ``exp(iS)`` mapping lab states into the dressed frame.

    ``exp(iS) H exp(-iS)`` equals ``H_eff`` up to the truncation order.
    """
    from scipy.linalg import expm

    return expm(sw_generator(basis, omega, delta).toarray())


def dressed_sz_diagonal(basis: ConstrainedBasis) -> np.ndarray:
    """``sum (-1)^j sigma~^z`` where the dressing requires empty neighbours."""
    st = basis.states
    free = np.stack([(st & m) == 0 for m in basis.lattice.neighbor_masks()], axis=1)
    return (sigma_z(basis) * free) @ basis.lattice.stagger


def heff2_analytic(basis: ConstrainedBasis, omega: float, delta: float, include_h0: bool = True) -> sp.csr_matrix:
    """Closed-form second-order effective Hamiltonian of the 2-leg ladder.

    The diagonal part is ``-(Omega^2 / 2 Delta) sum (-1)^j sigma~^z``. The
    flip part moves an excitation across rung ``j`` with amplitude
    ``-(-1)^j Omega^2 / 2 Delta`` when rungs ``j-1`` and ``j+1`` are empty.
    With ``include_h0`` the zeroth-order ``H_z`` is added, giving ``H^[2]``.
    """
    _check_delta(delta)
    lat = basis.lattice
    if lat.n_legs != 2:
        raise ValueError("closed form is written for the 2-leg ladder; use heff_numeric")
    w2 = float(omega) ** 2 / float(delta)
    diag = -0.5 * w2 * dressed_sz_diagonal(basis)
    L = lat.n_cols
    st = basis.states
    rows, cols, vals = [], [], []
    for c in range(L):
        i0, i1 = lat.site(c, 0), lat.site(c, 1)
        block = 0
        for cc in {(c - 1) % L, (c + 1) % L} if lat.pbc_x else {x for x in (c - 1, c + 1) if 0 <= x < L}:
            block |= (1 << lat.site(cc, 0)) | (1 << lat.site(cc, 1))
        one = (((st >> i0) & 1) ^ ((st >> i1) & 1)) == 1
        ok = np.flatnonzero(one & ((st & block) == 0))
        target = basis.indices(st[ok] ^ ((1 << i0) | (1 << i1)))
        rows.append(target)
        cols.append(ok)
        vals.append(np.full(ok.size, -0.5 * w2 * lat.stagger[i0]))
    hop = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(basis.dim, basis.dim))
    out = _csr(hop + sp.diags(diag))
    if include_h0:
        out = _csr(out + h_z(basis, delta))
    return out


@dataclass
class SWExpansion:
    """Per-order effective Hamiltonian terms.

    ``terms[k]`` is the order-``k`` contribution (``k = 0..max_order``),
    each projected onto the ``Z_pi`` blocks. ``terms[1]`` is identically 0.
    """

    omega: float
    delta: float
    method: str
    generator: sp.csr_matrix = field(repr=False)
    terms: list = field(repr=False)

    def upto(self, order: int) -> sp.csr_matrix:
        """``H^[order]``, the sum of terms ``0..order``."""
        if order >= len(self.terms):
            raise ValueError(f"expansion only computed to order {len(self.terms) - 1}")
        out = self.terms[0]
        for t in self.terms[1 : order + 1]:
            out = out + t
        return _csr(out)


def _series_comm(s_series, a_series, order):
    """Order-``order`` coefficient of ``[S(l), A(l)]`` for truncated series."""
    out = None
    for i in range(1, order + 1):
        si = s_series[i] if i < len(s_series) else None
        j = order - i
        if si is None or j >= len(a_series) or a_series[j] is None:
            continue
        term = si @ a_series[j] - a_series[j] @ si
        out = term if out is None else out + term
    return out


def _transformed_order(s_series, h_series, order):
    """Order-``order`` coefficient of ``exp(ad_S) H`` for series S, H."""
    total = h_series[order] if order < len(h_series) else None
    cur = list(h_series) + [None] * (order + 1 - len(h_series))
    for k in range(1, order + 1):
        nxt = [None] * (order + 1)
        for m in range(order + 1):
            c = _series_comm(s_series, cur, m)
            if c is not None:
                nxt[m] = c / k
        cur = nxt
        if cur[order] is not None:
            total = cur[order] if total is None else total + cur[order]
    return total


def heff_numeric(
    basis: ConstrainedBasis,
    omega: float,
    delta: float,
    max_order: int = 4,
    method: str = "canonical",
) -> SWExpansion:
    """Order-by-order effective Hamiltonian on any geometry.

    Parameters
    ----------
    method : {"canonical", "single"}
        ``canonical`` solves for generators ``S_1..S_n`` so that every order
        of ``exp(S) H exp(-S)`` is block diagonal in ``Z_pi`` (the standard
        SW series). ``single`` keeps only the first-order generator and
        projects ``exp(iS) H exp(-iS)`` onto the blocks, which gives the
        order-``k`` term ``(k-1)/k! * P ad_{iS}^{k-1}(H_x) P``.
    """
    _check_delta(delta)
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in 0..4")
    if method not in SW_METHODS:
        raise ValueError(f"method must be one of {SW_METHODS}")
    zpi = zpi_values(basis)
    h0 = _csr(h_z(basis, delta))
    v = _csr(h_x(basis, omega))
    gen = sw_generator(basis, omega, delta)
    d = basis.dim
    zero = sp.csr_matrix((d, d))
    terms = [h0]
    if method == "single":
        ad = v
        for k in range(1, max_order + 1):
            if k == 1:
                terms.append(zero.copy())
                continue
            ad = _csr(gen @ ad - ad @ gen)
            terms.append(project_zpi(ad * ((k - 1) / math.factorial(k)), zpi))
        return SWExpansion(float(omega), float(delta), method, gen, terms)

    e0 = h0.diagonal()
    s_series = [None]
    h_series = [h0, v]
    for n in range(1, max_order + 1):
        r = _transformed_order(s_series + [None], h_series, n)
        r = _csr(r) if r is not None else zero.copy()
        m = sp.coo_matrix(r)
        off = ~np.isclose(zpi[m.row], zpi[m.col])
        denom = e0[m.row[off]] - e0[m.col[off]]
        s_n = _csr(sp.coo_matrix((m.data[off] / denom, (m.row[off], m.col[off])), shape=(d, d)))
        s_series.append(s_n)
        terms.append(project_zpi(r, zpi))
    return SWExpansion(float(omega), float(delta), method, gen, terms)


# ---------------------------------------------------------------- eigenstates of H^[2]


@dataclass
class LabeledEigenstate:
    """Eigenvector of ``H^[2]`` with its conserved-charge label.

    ``charges`` is ``(z_pi, q_1, ..., q_L)``. ``tag`` is ``vacuum``,
    ``frozen`` (a Fock eigenstate such as a contiguous nP block),
    ``bell-k`` (product of ``k`` rung Bell pairs on a frozen background) or
    ``dressed-k`` (``k`` mobile rungs whose two leg choices are not
    degenerate, so the eigenvector is not an equal-weight Bell product).
    """

    charges: tuple
    tag: str
    energy: float
    vector: np.ndarray = field(repr=False)
    n_bell: int = 0
    signs: tuple = ()


def _mobile_rungs(state: int, lattice) -> list[int]:
    L = lattice.n_cols
    rung = [((state >> lattice.site(c, 0)) & 1) + ((state >> lattice.site(c, 1)) & 1) for c in range(L)]
    out = []
    for c in range(L):
        nb = [(c - 1) % L, (c + 1) % L] if lattice.pbc_x else [x for x in (c - 1, c + 1) if 0 <= x < L]
        if rung[c] == 1 and all(rung[x] == 0 for x in nb):
            out.append(c)
    return out


def enumerate_heff2_eigenstates(basis: ConstrainedBasis, omega: float, delta: float, tol: float = 1e-12) -> list:
    """All eigenstates of ``H^[2]`` built rung by rung.

    The flip term only moves an isolated single-excitation rung (both
    neighbouring rungs empty) between its legs, so ``H^[2]`` splits into
    components of ``2**m`` Fock states sharing all charges. Components with
    a leg-independent diagonal energy give products of rung Bell pairs
    ``(|top> +- |bottom>)/sqrt(2)`` with energy ``E_0 + sum +-t_j``.
    """
    lat = basis.lattice
    if lat.n_legs != 2:
        raise ValueError("enumeration is written for the 2-leg ladder")
    h2 = heff2_analytic(basis, omega, delta)
    diag = h2.diagonal()
    sz = sigma_z(basis)
    zpi = sz @ lat.stagger
    q = np.stack([sz[:, lat.site(c, 0)] * sz[:, lat.site(c, 1)] for c in range(lat.n_cols)], axis=1)
    seen = np.zeros(basis.dim, dtype=bool)
    out = []
    w2 = float(omega) ** 2 / float(delta)
    for k in range(basis.dim):
        if seen[k]:
            continue
        s0 = int(basis.states[k])
        mobile = _mobile_rungs(s0, lat)
        m = len(mobile)
        swaps = [(1 << lat.site(c, 0)) | (1 << lat.site(c, 1)) for c in mobile]
        configs = []
        for bits in range(1 << m):
            s = s0
            for r in range(m):
                if (bits >> r) & 1:
                    s ^= swaps[r]
            configs.append(s)
        # canonical orientation: mobile excitation on the top leg
        top = [bool((s0 >> lat.site(c, 0)) & 1) for c in mobile]
        order = []
        for bits in range(1 << m):
            s = s0
            for r in range(m):
                want_top = not ((bits >> r) & 1)
                if want_top != top[r]:
                    s ^= swaps[r]
            order.append(s)
        idx = basis.indices(np.array(order, dtype=np.int64))
        seen[idx] = True
        charges = (float(zpi[idx[0]]), *[int(x) for x in q[idx[0]]])
        if m == 0:
            vec = np.zeros(basis.dim)
            vec[idx[0]] = 1.0
            out.append(LabeledEigenstate(charges, "vacuum" if s0 == 0 else "frozen", float(diag[idx[0]]), vec))
            continue
        ediag = diag[idx]
        hops = [-0.5 * w2 * lat.stagger[lat.site(c, 0)] for c in mobile]
        if np.ptp(ediag) <= tol * max(1.0, abs(ediag).max()):
            for sgn in range(1 << m):
                signs = tuple(-1 if (sgn >> r) & 1 else 1 for r in range(m))
                amp = np.ones(1 << m)
                for bits in range(1 << m):
                    for r in range(m):
                        if (bits >> r) & 1:
                            amp[bits] *= signs[r]
                vec = np.zeros(basis.dim)
                vec[idx] = amp / np.sqrt(1 << m)
                energy = float(ediag[0] + sum(sg * t for sg, t in zip(signs, hops)))
                out.append(LabeledEigenstate(charges, f"bell-{m}", energy, vec, n_bell=m, signs=signs))
        else:
            block = h2[idx][:, idx].toarray()
            evals, evecs = np.linalg.eigh(block)
            for e, u in zip(evals, evecs.T):
                vec = np.zeros(basis.dim)
                vec[idx] = u
                out.append(LabeledEigenstate(charges, f"dressed-{m}", float(e), vec))
    return out


def write_eigenstate_dump(states, path, lattice=None) -> None:
    """One line per state: charges, energy, tag."""
    with open(path, "w") as fh:
        for st in states:
            ch = " ".join(f"{c:+g}" for c in st.charges)
            fh.write(f"{ch} {st.energy:.12g} {st.tag}\n")


# ---------------------------------------------------------------- classical bits


def encode_bits(bits, lattice) -> int:
    """Fock state whose rung charges equal ``bits``.

    A ``-1`` bit places one excitation on that rung. The top leg is used
    unless the previous excited rung sits on the top leg next door, in which
    case the bottom leg is used. A periodic wrap conflict that cannot be
    resolved raises ``ValueError``.
    """
    bits = [int(b) for b in bits]
    if any(b not in (-1, 1) for b in bits):
        raise ValueError("bits must be +1 or -1")
    if lattice.n_legs != 2 or len(bits) != lattice.n_cols:
        raise ValueError("need a 2-leg lattice with one bit per rung")
    L = lattice.n_cols
    leg = [None] * L
    for c in range(L):
        if bits[c] == 1:
            continue
        prev = leg[c - 1] if c > 0 else None
        leg[c] = 1 if prev == 0 else 0
    if lattice.pbc_x and L > 2 and leg[0] is not None and leg[-1] is not None and leg[0] == leg[-1]:
        # try flipping the trailing run of adjacent excited rungs
        c = L - 1
        while c >= 0 and leg[c] is not None:
            leg[c] ^= 1
            c -= 1
        if c < 0 or leg[0] == leg[-1]:
            raise ValueError("bit string cannot be encoded without violating the blockade")
    state = 0
    for c, a in enumerate(leg):
        if a is not None:
            state |= 1 << lattice.site(c, a)
    if not is_legal(state, lattice):  # pragma: no cover - guarded above
        raise ValueError("encoding violates the blockade")
    return state


def rung_charges(basis: ConstrainedBasis, psi: np.ndarray) -> np.ndarray:
    """``<Q_j>`` for every rung."""
    p = np.abs(psi) ** 2
    return np.array([float(p @ observable(basis, "Q", j).diagonal()) for j in range(1, basis.lattice.n_cols + 1)])


def decode_bits(charges, tol: float = 1e-6) -> list[int]:
    """Signs of the rung charges; ``ValueError`` if any is indeterminate."""
    charges = np.asarray(charges, dtype=float)
    if np.any(np.abs(charges) < tol):
        raise ValueError("indeterminate bit: |<Q_j>| below tolerance")
    return [int(x) for x in np.sign(charges)]


def describe(states, lattice) -> list[str]:
    """Human-readable summary lines for labeled eigenstates (Fock support)."""
    lines = []
    for st in states:
        lines.append(f"{st.tag} E={st.energy:.6f} q={st.charges}")
    return lines


__all__ = [
    "SWExpansion",
    "LabeledEigenstate",
    "sw_generator",
    "heff2_analytic",
    "heff_numeric",
    "enumerate_heff2_eigenstates",
    "encode_bits",
    "decode_bits",
    "rung_charges",
    "zpi_values",
    "project_zpi",
    "format_state",
]
