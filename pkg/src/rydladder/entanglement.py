"""Bipartite entanglement in the constrained space.

The constrained space is not a tensor product. A state is embedded into the
product of the two open-boundary subsystem bases, with zero amplitude on
every joint pattern that violates the blockade.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import ConstrainedBasis
from .lattice import Lattice

SV_CUTOFF = 1e-14


@dataclass(frozen=True)
class Cut:
    """Bipartition ``X | X^c`` of the sites (0-based indices)."""

    kind: str
    sites: tuple
    complement: tuple

    @classmethod
    def custom(cls, lattice: Lattice, sites, kind: str = "custom") -> "Cut":
        x = tuple(sorted({int(s) for s in sites}))
        if not x or x[0] < 0 or x[-1] >= lattice.n_sites:
            raise ValueError("cut sites must be a non-empty subset of the lattice")
        rest = tuple(i for i in range(lattice.n_sites) if i not in set(x))
        return cls(kind, x, rest)

    @classmethod
    def lr(cls, lattice: Lattice) -> "Cut":
        """Left half of the columns against the right half."""
        half = lattice.n_cols // 2
        return cls.custom(lattice, [i for i in range(lattice.n_sites) if lattice.coords(i)[0] < half], "LR")

    @classmethod
    def ud(cls, lattice: Lattice) -> "Cut":
        """Upper legs against lower legs."""
        if lattice.n_legs < 2:
            raise ValueError("UD cut needs at least two legs")
        top = lattice.n_legs // 2
        return cls.custom(lattice, [i for i in range(lattice.n_sites) if lattice.coords(i)[1] < top], "UD")

    @classmethod
    def from_name(cls, lattice: Lattice, name: str) -> "Cut":
        name = name.upper()
        if name == "LR":
            return cls.lr(lattice)
        if name == "UD":
            return cls.ud(lattice)
        raise ValueError(f"unknown cut {name!r}")


def _compress(states: np.ndarray, sites) -> np.ndarray:
    out = np.zeros(states.shape, dtype=np.int64)
    for k, s in enumerate(sites):
        out |= ((states >> s) & 1) << k
    return out


@lru_cache(maxsize=64)
def _open_subsystem_states(bonds: tuple, sites: tuple) -> np.ndarray:
    pos = {s: k for k, s in enumerate(sites)}
    upper = np.zeros(len(sites), dtype=np.int64)
    for a, b in bonds:
        if a in pos and b in pos:
            lo, hi = sorted((pos[a], pos[b]))
            upper[lo] |= np.int64(1 << hi)
    return np.asarray(kernels.enumerate_states(upper, len(sites)), dtype=np.int64)


def _open_bonds(lattice: Lattice) -> tuple:
    """Bonds that do not wrap around a periodic boundary."""
    out = []
    for a, b in lattice.bonds:
        (ca, la), (cb, lb) = lattice.coords(a), lattice.coords(b)
        if abs(ca - cb) <= 1 and abs(la - lb) <= 1:
            out.append((a, b))
    return tuple(out)


def subsystem_basis(lattice: Lattice, sites) -> np.ndarray:
    """Blockade-legal patterns on ``sites`` with open boundaries (sorted).

    Only internal bonds that do not wrap around a periodic boundary are
    enforced. Patterns forbidden by a wrap bond never carry weight in
    :func:`embed`, so entropies are unaffected.
    """
    return _open_subsystem_states(_open_bonds(lattice), tuple(sites))


def _check_cut(basis: ConstrainedBasis, cut: Cut) -> None:
    n = basis.lattice.n_sites
    if set(cut.sites) & set(cut.complement) or len(cut.sites) + len(cut.complement) != n:
        raise ValueError("cut does not partition the lattice")
    if min(cut.sites + cut.complement) < 0 or max(cut.sites + cut.complement) >= n:
        raise ValueError("cut sites out of range")


def embed(basis: ConstrainedBasis, psi: np.ndarray, cut: Cut) -> np.ndarray:
    """Coefficient matrix ``psi[alpha, beta]`` over the subsystem bases."""
    _check_cut(basis, cut)
    lat = basis.lattice
    sa = subsystem_basis(lat, cut.sites)
    sb = subsystem_basis(lat, cut.complement)
    ia = np.searchsorted(sa, _compress(basis.states, cut.sites))
    ib = np.searchsorted(sb, _compress(basis.states, cut.complement))
    out = np.zeros((sa.size, sb.size), dtype=np.result_type(psi, float))
    out[ia, ib] = psi
    return out


def entropy_from_schmidt(sv: np.ndarray) -> float:
    """Natural-log entropy of squared singular values."""
    p = sv[sv > SV_CUTOFF] ** 2
    p = p / p.sum()
    return max(0.0, float(-np.sum(p * np.log(p))))


def vn_entropy(basis: ConstrainedBasis, psi: np.ndarray, cut: Cut) -> float:
    """Von Neumann entanglement entropy (natural log) of a pure state."""
    m = embed(basis, np.asarray(psi), cut)
    return entropy_from_schmidt(np.linalg.svd(m, compute_uv=False))


def mutual_information(basis: ConstrainedBasis, psi: np.ndarray, x, y) -> float:
    """``I(X:Y) = S(X) + S(Y) - S(X u Y)`` for disjoint site sets."""
    x, y = set(int(i) for i in x), set(int(i) for i in y)
    if x & y:
        raise ValueError("site sets overlap")
    lat = basis.lattice

    def s(sites):
        if len(sites) == lat.n_sites:
            return 0.0
        return vn_entropy(basis, psi, Cut.custom(lat, sites))

    return s(x) + s(y) - s(x | y)


def bond_sites(lattice: Lattice, kind: str, j: int = 1, a: int = 1) -> tuple[list[int], list[int]]:
    """Two single-site sets of a horizontal (``h``) or vertical (``v``) bond at ``(j, a)`` (1-based)."""
    i0 = lattice.site(j - 1, a - 1)
    if kind == "h":
        return [i0], [lattice.site(j % lattice.n_cols, a - 1)]
    if kind == "v":
        return [i0], [lattice.site(j - 1, a % lattice.n_legs)]
    raise ValueError("bond kind must be 'h' or 'v'")


def eigenstate_entropy_scan(basis: ConstrainedBasis, H, cut: Cut, sector=None) -> np.ndarray:
    """``(E, S)`` of every eigenvector, sorted by energy.

    Parameters
    ----------
    sector : SymmetrySector, optional
        Diagonalise only this block; vectors are lifted before the cut.
    """
    h = sector.reduce(H) if sector is not None else H
    h = h.toarray() if sp.issparse(h) else np.asarray(h)
    evals, evecs = np.linalg.eigh(h)
    if sector is not None:
        evecs = np.asarray(sector.lift(evecs))
    ent = np.array([vn_entropy(basis, evecs[:, k], cut) for k in range(evals.size)])
    return np.column_stack([evals, ent])


def max_entropy(basis: ConstrainedBasis, cut: Cut) -> float:
    """``log`` of the smaller subsystem dimension."""
    lat = basis.lattice
    return float(np.log(min(subsystem_basis(lat, cut.sites).size, subsystem_basis(lat, cut.complement).size)))
