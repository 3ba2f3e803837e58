"""Momentum sectors of the translation group generated by T_x^2 (or T_x) and T_y."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import ConstrainedBasis


@dataclass(frozen=True, eq=False)
class SymmetrySector:
    """Block of symmetric states with fixed momentum indices.

    Attributes
    ----------
    parent : ConstrainedBasis
    kx_index, ky_index : int
        Momentum labels; ``kx`` counts in units of ``2*pi/order_x`` of the
        x generator (``T_x^2`` unless ``use_full_Tx``).
    representatives : ndarray
        Parent indices of the orbit representatives kept in this sector.
    norms : ndarray
        Norm of the unnormalised projected representative.
    projector : scipy.sparse.csr_matrix
        ``(D, d)`` isometry whose columns are the normalised symmetric states.
    """

    parent: ConstrainedBasis
    kx_index: int
    ky_index: int
    use_full_Tx: bool
    order_x: int
    order_y: int
    representatives: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)
    projector: sp.csr_matrix = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.representatives.size)

    def reduce(self, op) -> sp.csr_matrix:
        """Project a parent-space operator into the sector: ``V^dag A V``."""
        v = self.projector
        return (v.conj().T @ sp.csr_matrix(op) @ v).tocsr()

    def lift(self, vec: np.ndarray) -> np.ndarray:
        """Map sector amplitudes (vector or column stack) to the parent basis."""
        return self.projector @ vec


def group_orders(basis: ConstrainedBasis, use_full_Tx: bool = False) -> tuple[int, int]:
    """Orders of the x generator and of T_y."""
    lat = basis.lattice
    L = lat.n_cols
    ox = L if (use_full_Tx or L % 2) else L // 2
    oy = lat.n_legs if (lat.pbc_y or lat.n_legs == 2) else 1
    return ox, oy


def orbit_images(basis: ConstrainedBasis, use_full_Tx: bool = False) -> np.ndarray:
    """``images[m, n, k]`` = index of ``T_x^(s*m) T_y^n`` applied to state ``k``."""
    lat = basis.lattice
    ox, oy = group_orders(basis, use_full_Tx)
    step = 1 if (use_full_Tx or lat.n_cols % 2) else 2
    px = lat.permutation("x", step)
    py = lat.permutation("y", 1) if oy > 1 else np.arange(lat.n_sites)
    out = np.empty((ox, oy, basis.dim), dtype=np.int64)
    row = basis.states
    for m in range(ox):
        cur = row
        for n in range(oy):
            out[m, n] = basis.indices(cur)
            cur = kernels.permute_states(cur, py)
        row = kernels.permute_states(row, px)
    return out


def build_sector(
    basis: ConstrainedBasis,
    kx_index: int,
    ky_index: int = 0,
    use_full_Tx: bool = False,
    images: np.ndarray | None = None,
    use_x: bool = True,
) -> SymmetrySector:
    """Symmetric-state sector of the translation group.

    The symmetric state of representative ``r`` is
    ``sum_g chi(g)^* g|r>`` normalised, with character
    ``chi(T_x^m T_y^n) = exp(2 pi i (m kx / ox + n ky / oy))``. Orbits whose
    projection vanishes are excluded. ``use_x=False`` drops the x generator,
    for Hamiltonians that keep only ``T_y`` such as column disorder.

    Examples
    --------
    >>> from rydladder.lattice import ladder
    >>> from rydladder.basis import enumerate_basis
    >>> build_sector(enumerate_basis(ladder(4)), 0, 1).dim
    9
    """
    ox, oy = group_orders(basis, use_full_Tx)
    if images is None:
        images = orbit_images(basis, use_full_Tx)
    if not use_x:
        ox = 1
        images = images[:1]
    if not (0 <= kx_index < ox):
        raise ValueError(f"kx_index must be in [0, {ox})")
    if not (0 <= ky_index < oy):
        raise ValueError(f"ky_index must be in [0, {oy})")
    flat = images.reshape(ox * oy, basis.dim)
    reps = np.flatnonzero(flat.min(axis=0) == np.arange(basis.dim))
    m, n = np.meshgrid(np.arange(ox), np.arange(oy), indexing="ij")
    chi = np.exp(2j * np.pi * (m * kx_index / ox + n * ky_index / oy)).ravel()
    g = flat.shape[0]
    rows = flat[:, reps].ravel()
    cols = np.tile(np.arange(reps.size), g)
    data = np.repeat(chi.conj(), reps.size)
    v = sp.coo_matrix((data, (rows, cols)), shape=(basis.dim, reps.size)).tocsc()
    v.sum_duplicates()
    v.data[np.abs(v.data) < 1e-12] = 0.0
    v.eliminate_zeros()
    norms = np.sqrt(np.asarray(abs(v).power(2).sum(axis=0)).ravel())
    keep = norms > 1e-8
    v = v[:, keep] @ sp.diags(1.0 / norms[keep])
    return SymmetrySector(
        parent=basis,
        kx_index=int(kx_index),
        ky_index=int(ky_index),
        use_full_Tx=bool(use_full_Tx),
        order_x=ox,
        order_y=oy,
        representatives=reps[keep],
        norms=norms[keep],
        projector=v.tocsr(),
    )


def sector_dimensions(basis: ConstrainedBasis, use_full_Tx: bool = False) -> dict[tuple[int, int], int]:
    """Dimension of every ``(kx, ky)`` sector."""
    images = orbit_images(basis, use_full_Tx)
    ox, oy = group_orders(basis, use_full_Tx)
    return {
        (kx, ky): build_sector(basis, kx, ky, use_full_Tx, images=images).dim for kx in range(ox) for ky in range(oy)
    }


def kx_only_dimension(basis: ConstrainedBasis, kx_index: int = 0, use_full_Tx: bool = False) -> int:
    """Dimension of a momentum sector of the x generator alone (all ky summed)."""
    _, oy = group_orders(basis, use_full_Tx)
    images = orbit_images(basis, use_full_Tx)
    return sum(build_sector(basis, kx_index, ky, use_full_Tx, images=images).dim for ky in range(oy))


def table_row(basis: ConstrainedBasis) -> dict[str, int]:
    """The five Hilbert-space dimensions tabulated for a 2-leg ladder.

    The column labelled ``pi`` uses momentum index 1 of each generator,
    which is the labelling that reproduces the published table.
    """
    dims = sector_dimensions(basis)
    ox, oy = group_orders(basis)
    return {
        "none": basis.dim,
        "kx0": sum(dims[(0, ky)] for ky in range(oy)),
        "kx0_ky0": dims[(0, 0)],
        "kx0_ky1": dims.get((0, 1), 0),
        "kx1_ky1": dims.get((1, 1), 0),
    }
