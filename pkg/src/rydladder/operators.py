"""Hamiltonians, chirality operators and observables as sparse matrices.

Public site arguments use the physics convention: column ``j`` in
``1..L`` and leg ``a`` in ``1..n_legs``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import ConstrainedBasis, enumerate_basis, translation_indices
from .lattice import Lattice

LONGRANGE_MODES = ("full_unconstrained", "eff_beyond_NN1", "NN2_only", "NN12", "blockaded_pxp")


@dataclass(frozen=True)
class DetuningProfile:
    """Per-site detuning ``Delta_{j,a}`` in units of Omega."""

    values: np.ndarray
    kind: str = "custom"

    @classmethod
    def staggered(cls, lattice: Lattice, delta: float) -> "DetuningProfile":
        """``(-1)^j * delta``."""
        return cls(lattice.stagger * float(delta), "staggered")

    @classmethod
    def staggered_flipped(cls, lattice: Lattice, delta0: float) -> "DetuningProfile":
        """``-(-1)^j * delta0``."""
        return cls(-lattice.stagger * float(delta0), "staggered_flipped")

    @classmethod
    def disordered(cls, lattice: Lattice, delta: float, eta: float, seed) -> "DetuningProfile":
        """``(-1)^j (delta + eta R_j)`` with one uniform ``R_j`` per column."""
        r = np.random.default_rng(seed).random(lattice.n_cols)
        return cls(lattice.stagger * (float(delta) + float(eta) * r[lattice.columns]), "disordered")

    @classmethod
    def uniform(cls, lattice: Lattice, delta: float) -> "DetuningProfile":
        return cls(np.full(lattice.n_sites, float(delta)), "uniform")


def _csr(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return m


def sigma_z(basis: ConstrainedBasis) -> np.ndarray:
    """``(D, N)`` array of sigma^z eigenvalues (+1 excited, -1 ground)."""
    return 2.0 * basis.occupations() - 1.0


def _flip_masks(basis: ConstrainedBasis) -> np.ndarray:
    if basis.constrained:
        return basis.lattice.neighbor_masks()
    return np.zeros(basis.n_sites, dtype=np.int64)


def flip_triplets(basis: ConstrainedBasis):
    """Rows, cols and site of every dressed single-site flip in the basis."""
    return kernels.flip_connections(basis.states, _flip_masks(basis))


def h_x(basis: ConstrainedBasis, omega: float = 1.0) -> sp.csr_matrix:
    """``Omega * sum sigma~^x``: flip a site iff all its neighbours are ground."""
    rows, cols, _ = flip_triplets(basis)
    return _csr(sp.coo_matrix((np.full(rows.size, float(omega)), (rows, cols)), shape=(basis.dim, basis.dim)))


def diagonal_z(basis: ConstrainedBasis, profile: DetuningProfile) -> sp.csr_matrix:
    """``-sum Delta_i sigma^z_i``."""
    values = np.asarray(profile.values, dtype=float)
    if values.shape != (basis.n_sites,):
        raise ValueError("detuning profile does not match the basis")
    return _csr(sp.diags(-(sigma_z(basis) @ values)))


def h_z(basis: ConstrainedBasis, delta: float) -> sp.csr_matrix:
    """Staggered detuning part ``-Delta sum (-1)^j sigma^z``."""
    return diagonal_z(basis, DetuningProfile.staggered(basis.lattice, delta))


def build_pxp_z(basis: ConstrainedBasis, omega: float, profile: DetuningProfile) -> sp.csr_matrix:
    """Projector-dressed drive plus site detuning.

    Examples
    --------
    >>> from rydladder.lattice import ladder
    >>> from rydladder.basis import enumerate_basis
    >>> b = enumerate_basis(ladder(2))
    >>> h = build_pxp_z(b, 1.0, DetuningProfile.staggered(b.lattice, 0.0))
    >>> h[0].toarray().ravel().tolist()
    [0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0]
    """
    return _csr(h_x(basis, omega) + diagonal_z(basis, profile))


def hamiltonian(basis: ConstrainedBasis, delta: float, omega: float = 1.0) -> sp.csr_matrix:
    """The staggered ladder Hamiltonian ``H = H_x + H_z``."""
    return build_pxp_z(basis, omega, DetuningProfile.staggered(basis.lattice, delta))


def disordered_hamiltonian(basis: ConstrainedBasis, delta: float, eta: float, seed, omega: float = 1.0) -> sp.csr_matrix:
    return build_pxp_z(basis, omega, DetuningProfile.disordered(basis.lattice, delta, eta, seed))


# ---------------------------------------------------------------- long range


def distance_shells(lattice: Lattice, tol: float = 1e-9) -> np.ndarray:
    """Sorted distinct pair distances on the lattice."""
    n = lattice.n_sites
    d = [lattice.distance(i, j) for i in range(n) for j in range(i + 1, n)]
    d = np.sort(np.array(d))
    keep = np.concatenate([[True], np.diff(d) > tol])
    return d[keep]


def vdw_diagonal(basis: ConstrainedBasis, v0: float, shells=None) -> np.ndarray:
    """``V0 * sum_{pairs} n_i n_j / d^6`` over the selected distance shells.

    ``shells`` is an iterable of shell numbers (0 = nearest neighbour) or
    ``None`` for all pairs.
    """
    lat = basis.lattice
    radii = distance_shells(lat)
    occ = basis.occupations().astype(float)
    out = np.zeros(basis.dim)
    n = lat.n_sites
    for i in range(n):
        for j in range(i + 1, n):
            d = lat.distance(i, j)
            shell = int(np.argmin(np.abs(radii - d)))
            if shells is not None and shell not in shells:
                continue
            out += occ[:, i] * occ[:, j] / d**6
    return float(v0) * out


def build_longrange(
    lattice: Lattice,
    omega: float,
    profile: DetuningProfile,
    v0: float,
    mode: str,
    max_full_sites: int = 16,
) -> tuple[sp.csr_matrix, ConstrainedBasis]:
    """Rydberg Hamiltonian with van der Waals tails in one of five truncations.

    Returns the operator and the basis it acts on. ``full_unconstrained``
    and ``NN12`` use the full ``2**N`` space with a bare ``sigma^x`` drive.
    The other modes use the blockaded basis and the dressed drive.
    """
    if mode not in LONGRANGE_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {LONGRANGE_MODES}")
    if mode in ("full_unconstrained", "NN12"):
        basis = enumerate_basis(lattice, constrained=False, max_full_sites=max_full_sites)
    else:
        basis = enumerate_basis(lattice)
    shells = {
        "full_unconstrained": None,
        "eff_beyond_NN1": None,
        "NN2_only": (1,),
        "NN12": (0, 1),
        "blockaded_pxp": (),
    }[mode]
    h = build_pxp_z(basis, omega, profile)
    if shells != ():
        # blockade already removes nearest-neighbour pairs in the constrained modes
        h = _csr(h + sp.diags(vdw_diagonal(basis, v0, shells)))
    return h, basis


# ---------------------------------------------------------------- symmetries


def translation_operator(basis: ConstrainedBasis, axis: str, shift: int = 1) -> sp.csr_matrix:
    """Permutation matrix with ``T|s> = |t(s)>``."""
    img = translation_indices(basis, axis, shift)
    d = basis.dim
    return _csr(sp.coo_matrix((np.ones(d), (img, np.arange(d))), shape=(d, d)))


def chirality(basis: ConstrainedBasis, which: str = "C") -> sp.csr_matrix:
    """``C = prod sigma^z``, ``C1 = T_x C`` or ``C2 = T_x T_y C``."""
    n_exc = basis.occupations().sum(axis=1)
    c = sp.diags(np.where((basis.n_sites - n_exc) % 2 == 0, 1.0, -1.0))
    if which == "C":
        return _csr(c)
    if which == "C1":
        return _csr(translation_operator(basis, "x") @ c)
    if which == "C2":
        return _csr(translation_operator(basis, "x") @ translation_operator(basis, "y") @ c)
    raise ValueError(f"unknown chirality operator {which!r}")


# ---------------------------------------------------------------- observables


def _site(basis: ConstrainedBasis, j: int, a: int) -> int:
    lat = basis.lattice
    if not (1 <= j <= lat.n_cols and 1 <= a <= lat.n_legs):
        raise IndexError(f"site ({j}, {a}) out of range")
    return lat.site(j - 1, a - 1)


def dressed_flip(basis: ConstrainedBasis, site: int) -> sp.csr_matrix:
    """``sigma~^x`` of one 0-based site."""
    rows, cols, sites = flip_triplets(basis)
    k = sites == site
    return _csr(sp.coo_matrix((np.ones(k.sum()), (rows[k], cols[k])), shape=(basis.dim, basis.dim)))


def observable(basis: ConstrainedBasis, kind: str, *site_args) -> sp.csr_matrix:
    """Diagonal or dressed-flip observable.

    Parameters
    ----------
    kind : str
        ``Mz`` (mean sigma^z), ``N`` (excitation number), ``Zpi``, ``dH``
        (derivative of H with respect to Delta), ``sz j a``, ``n j a``,
        ``Q j`` (product of sigma^z over column ``j``), ``h j a``
        (``sigma^z - sigma~^x`` on site ``(j, a)``).
    """
    sz = sigma_z(basis)
    stag = basis.lattice.stagger
    if kind == "Mz":
        return _csr(sp.diags(sz.mean(axis=1)))
    if kind == "N":
        return _csr(sp.diags(basis.occupations().sum(axis=1).astype(float)))
    if kind == "Zpi":
        return _csr(sp.diags(sz @ stag))
    if kind == "dH":
        return _csr(sp.diags(-(sz @ stag)))
    if kind in ("sz", "n", "h"):
        if len(site_args) != 2:
            raise TypeError(f"{kind} needs (j, a)")
        i = _site(basis, *site_args)
        if kind == "sz":
            return _csr(sp.diags(sz[:, i]))
        if kind == "n":
            return _csr(sp.diags((sz[:, i] + 1) / 2))
        return _csr(sp.diags(sz[:, i]) - dressed_flip(basis, i))
    if kind == "Q":
        if len(site_args) != 1:
            raise TypeError("Q needs a column j")
        j = int(site_args[0])
        cols = [_site(basis, j, a) for a in range(1, basis.lattice.n_legs + 1)]
        return _csr(sp.diags(np.prod(sz[:, cols], axis=1)))
    raise ValueError(f"unknown observable kind {kind!r}")


def parse_observable(basis: ConstrainedBasis, name: str) -> sp.csr_matrix:
    """Observable from a compact name: ``Mz``, ``N``, ``Zpi``, ``Q3``, ``h1_2``, ``sz2_1``, ``n1_1``."""
    import re

    if name in ("Mz", "N", "Zpi", "dH"):
        return observable(basis, name)
    m = re.fullmatch(r"Q(\d+)", name)
    if m:
        return observable(basis, "Q", int(m.group(1)))
    m = re.fullmatch(r"(h|sz|n)(\d+)_(\d+)", name)
    if m:
        return observable(basis, m.group(1), int(m.group(2)), int(m.group(3)))
    raise ValueError(f"unknown observable {name!r}")


def anticommutator_norm(a, b) -> float:
    """Max-abs entry of ``AB + BA``."""
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    m = sp.csr_matrix(a @ b + b @ a)
    return float(abs(m).max()) if m.nnz else 0.0


def commutator_norm(a, b) -> float:
    """Max-abs entry of ``AB - BA``."""
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    m = sp.csr_matrix(a @ b - b @ a)
    m.eliminate_zeros()
    return float(abs(m).max()) if m.nnz else 0.0


def write_triplets(op, path) -> None:
    """Write ``row col re im`` lines in canonical row-major order."""
    m = sp.coo_matrix(_csr(op))
    order = np.lexsort((m.col, m.row))
    data = np.asarray(m.data, dtype=complex)
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{m.row[k]} {m.col[k]} {data[k].real:.17g} {data[k].imag:.17g}\n")


def read_triplets(path, shape) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            r, c, re_, im = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re_), float(im)))
    return _csr(sp.coo_matrix((vals, (rows, cols)), shape=shape))
