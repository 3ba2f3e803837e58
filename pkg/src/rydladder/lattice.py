"""Lattice geometry for ladders, chains and small 2D grids.

Sites are labelled column-major and leg-minor: site ``i = c * n_legs + a``
for 0-based column ``c`` and leg ``a``. The physical column index used in
the staggered detuning is ``j = c + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_SITES = 62


@dataclass(frozen=True)
class Lattice:
    """Rectangular lattice with optional periodic wrapping.

    Parameters
    ----------
    n_cols : int
        Number of columns ``L`` along the long (staggered) direction.
    n_legs : int
        Number of legs. 1 is a chain, 2 a square ladder.
    pbc_x, pbc_y : bool
        Periodic wrapping along columns and legs.
    bonds : tuple of (int, int)
        Nearest-neighbour pairs ``(i, j)`` with ``i < j``, each listed once.
    """

    n_cols: int
    n_legs: int
    pbc_x: bool = True
    pbc_y: bool = True
    bonds: tuple = field(default=(), compare=False, repr=False)

    @property
    def n_sites(self) -> int:
        return self.n_cols * self.n_legs

    def site(self, col: int, leg: int) -> int:
        """Linear index of 0-based ``(col, leg)``, wrapping periodic axes."""
        if self.pbc_x:
            col %= self.n_cols
        if self.pbc_y:
            leg %= self.n_legs
        if not (0 <= col < self.n_cols and 0 <= leg < self.n_legs):
            raise IndexError(f"site ({col}, {leg}) outside open lattice")
        return col * self.n_legs + leg

    def coords(self, i: int) -> tuple[int, int]:
        """0-based ``(col, leg)`` of site ``i``."""
        return divmod(int(i), self.n_legs)

    @property
    def positions(self) -> np.ndarray:
        """``(N, 2)`` array of site coordinates in lattice units."""
        idx = np.arange(self.n_sites)
        return np.stack([idx // self.n_legs, idx % self.n_legs], axis=1).astype(float)

    @property
    def columns(self) -> np.ndarray:
        """0-based column of each site."""
        return np.arange(self.n_sites) // self.n_legs

    @property
    def legs(self) -> np.ndarray:
        """0-based leg of each site."""
        return np.arange(self.n_sites) % self.n_legs

    @property
    def stagger(self) -> np.ndarray:
        """Per-site sign ``(-1)^j`` with 1-based column ``j``."""
        return np.where((self.columns + 1) % 2 == 0, 1.0, -1.0)

    def neighbors(self, i: int) -> list[int]:
        out = [b for a, b in self.bonds if a == i] + [a for a, b in self.bonds if b == i]
        return sorted(out)

    def neighbor_masks(self) -> np.ndarray:
        """Bitmask of all neighbours of each site."""
        masks = np.zeros(self.n_sites, dtype=np.int64)
        for a, b in self.bonds:
            masks[a] |= np.int64(1 << b)
            masks[b] |= np.int64(1 << a)
        return masks

    def upper_masks(self) -> np.ndarray:
        """Bitmask of the neighbours with larger index of each site."""
        masks = np.zeros(self.n_sites, dtype=np.int64)
        for a, b in self.bonds:
            masks[a] |= np.int64(1 << b)
        return masks

    def distance(self, i: int, j: int) -> float:
        """Euclidean distance with minimum image along periodic axes."""
        ci, ai = self.coords(i)
        cj, aj = self.coords(j)
        dx = abs(ci - cj)
        dy = abs(ai - aj)
        if self.pbc_x:
            dx = min(dx, self.n_cols - dx)
        if self.pbc_y and self.n_legs > 2:
            dy = min(dy, self.n_legs - dy)
        return float(np.hypot(dx, dy))

    def permutation(self, axis: str, shift: int = 1) -> np.ndarray:
        """Site permutation of a translation by ``shift`` along ``axis``.

        ``perm[i]`` is the image of site ``i``. Translations along an open
        axis are rejected.
        """
        idx = np.arange(self.n_sites)
        col, leg = idx // self.n_legs, idx % self.n_legs
        if axis == "x":
            if not self.pbc_x:
                raise ValueError("x translation needs pbc_x")
            col = (col + shift) % self.n_cols
        elif axis == "y":
            if not self.pbc_y and self.n_legs > 2:
                raise ValueError("y translation needs pbc_y")
            leg = (leg + shift) % self.n_legs
        else:
            raise ValueError(f"unknown axis {axis!r}")
        return col * self.n_legs + leg


def build_lattice(n_cols: int, n_legs: int = 2, pbc_x: bool = True, pbc_y: bool = True) -> Lattice:
    """Build a lattice with deduplicated nearest-neighbour bonds.

    A 2-leg ladder always has a single rung bond per column, so ``pbc_y``
    has no effect there. Translations along legs are still defined for
    ``n_legs == 2`` (they swap the legs).

    Examples
    --------
    >>> build_lattice(2, 2).bonds
    ((0, 1), (0, 2), (1, 3), (2, 3))
    """
    n_cols, n_legs = int(n_cols), int(n_legs)
    if n_cols < 2:
        raise ValueError("n_cols must be >= 2")
    if n_legs < 1:
        raise ValueError("n_legs must be >= 1")
    if n_cols * n_legs > MAX_SITES:
        raise ValueError(f"N = {n_cols * n_legs} exceeds the {MAX_SITES}-bit state word")
    if n_legs <= 2:
        pbc_y_eff = n_legs == 2
    else:
        pbc_y_eff = bool(pbc_y)

    def idx(c, a):
        return c * n_legs + a

    bonds = set()
    for c in range(n_cols):
        for a in range(n_legs):
            i = idx(c, a)
            if c + 1 < n_cols or pbc_x:
                j = idx((c + 1) % n_cols, a)
                if i != j:
                    bonds.add((min(i, j), max(i, j)))
            if a + 1 < n_legs or (pbc_y_eff and n_legs > 2):
                j = idx(c, (a + 1) % n_legs)
                if i != j:
                    bonds.add((min(i, j), max(i, j)))
    return Lattice(n_cols, n_legs, bool(pbc_x), bool(pbc_y_eff), tuple(sorted(bonds)))


def ladder(n_cols: int) -> Lattice:
    """Periodic 2-leg ladder with ``2 * n_cols`` sites."""
    return build_lattice(n_cols, 2, True, True)
