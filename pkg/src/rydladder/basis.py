"""Blockade-constrained Fock bases, state text format and named states."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lattice import Lattice

FULL_SPACE_CAP = 16
MAX_BASIS_DIM = 50_000_000


@dataclass(frozen=True, eq=False)
class ConstrainedBasis:
    """Sorted Fock states of a lattice.

    Parameters
    ----------
    lattice : Lattice
    states : ndarray of int64
        Bitmasks in ascending order; bit ``i`` set means site ``i`` excited.
    constrained : bool
        False for the full ``2**N`` space used by unconstrained models.
    """

    lattice: Lattice
    states: np.ndarray = field(repr=False)
    constrained: bool = True

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def __len__(self) -> int:
        return self.dim

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def index(self, state) -> int:
        """Position of ``state`` (bitmask or text) in the basis."""
        if isinstance(state, str):
            state = parse_state(state, self.lattice, check=self.constrained)
        k = int(kernels.lookup(self.states, np.array([state], dtype=np.int64))[0])
        if k < 0:
            raise KeyError(f"state {state} not in basis")
        return k

    def indices(self, states) -> np.ndarray:
        """Vectorised lookup; -1 marks states outside the basis."""
        return kernels.lookup(self.states, np.asarray(states, dtype=np.int64))

    def occupations(self) -> np.ndarray:
        """``(D, N)`` 0/1 array of site occupations."""
        n = self.n_sites
        return ((self.states[:, None] >> np.arange(n)) & 1).astype(np.int8)

    def basis_vector(self, state) -> np.ndarray:
        """Normalised complex vector for a single Fock state."""
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(state)] = 1.0
        return v

    def state_vector(self, spec) -> np.ndarray:
        """Vector for a named state, state text or bitmask."""
        if isinstance(spec, str) and spec in NAMED_STATES:
            spec = named_state(spec, self.lattice)
        return self.basis_vector(spec)

    def dump(self, path) -> None:
        """Write one state per line as ``index bits text``."""
        with open(path, "w") as fh:
            for k, s in enumerate(self.states):
                fh.write(f"{k} {int(s)} {format_state(int(s), self.lattice)}\n")


def is_legal(state: int, lattice: Lattice) -> bool:
    """True if no bond of ``lattice`` has both ends excited."""
    return all(not ((state >> a) & 1 and (state >> b) & 1) for a, b in lattice.bonds)


def basis_dimension(lattice: Lattice) -> int:
    """Constrained dimension from a column transfer matrix, without enumeration."""
    return _transfer_count(lattice)


def _transfer_count(lattice: Lattice) -> int:
    legs = lattice.n_legs
    cols = []
    for m in range(1 << legs):
        ok = True
        for a in range(legs):
            b = a + 1
            if b < legs or (lattice.pbc_y and legs > 2):
                b %= legs
                if b != a and (m >> a) & 1 and (m >> b) & 1:
                    ok = False
        if ok:
            cols.append(m)
    t = np.array([[1 if (x & y) == 0 else 0 for y in cols] for x in cols], dtype=object)
    if lattice.pbc_x:
        acc = np.identity(len(cols), dtype=object)
        for _ in range(lattice.n_cols):
            acc = acc.dot(t)
        return int(np.trace(acc))
    v = np.ones(len(cols), dtype=object)
    for _ in range(lattice.n_cols - 1):
        v = t.dot(v)
    return int(v.sum())


def enumerate_basis(lattice: Lattice, constrained: bool = True, max_full_sites: int = FULL_SPACE_CAP) -> ConstrainedBasis:
    """Enumerate all blockade-legal Fock states in ascending order.

    With ``constrained=False`` the full ``2**N`` space is returned, capped at
    ``max_full_sites`` sites.
    """
    n = lattice.n_sites
    if not constrained:
        if n > max_full_sites:
            raise MemoryError(f"full space needs 2**{n} = {2**n} states (cap N <= {max_full_sites})")
        return ConstrainedBasis(lattice, np.arange(1 << n, dtype=np.int64), constrained=False)
    need = basis_dimension(lattice)
    if need > MAX_BASIS_DIM:
        raise MemoryError(f"constrained basis needs {need} states (cap {MAX_BASIS_DIM})")
    states = kernels.enumerate_states(lattice.upper_masks(), n)
    return ConstrainedBasis(lattice, np.ascontiguousarray(states, dtype=np.int64), constrained=True)


def translate(basis: ConstrainedBasis, axis: str, state, shift: int = 1) -> int:
    """Image of a Fock state under a lattice translation."""
    if isinstance(state, str):
        state = parse_state(state, basis.lattice)
    state = int(state)
    basis.index(state)
    perm = basis.lattice.permutation(axis, shift)
    return int(kernels.permute_states(np.array([state], dtype=np.int64), perm)[0])


def translation_indices(basis: ConstrainedBasis, axis: str, shift: int = 1) -> np.ndarray:
    """``out[k]`` is the basis index of the translate of state ``k``."""
    perm = basis.lattice.permutation(axis, shift)
    idx = basis.indices(kernels.permute_states(basis.states, perm))
    if np.any(idx < 0):  # pragma: no cover - closure is a lattice invariant
        raise RuntimeError("basis not closed under translation")
    return idx


# ---------------------------------------------------------------- text format

_ROW = re.compile(r"^[xo]+$")


def format_state(state: int, lattice: Lattice) -> str:
    """Legs as rows top to bottom joined by '/', 'x' excited, 'o' ground."""
    rows = []
    for a in range(lattice.n_legs):
        rows.append("".join("x" if (int(state) >> lattice.site(c, a)) & 1 else "o" for c in range(lattice.n_cols)))
    return "/".join(rows)


def parse_state(text: str, lattice: Lattice, check: bool = True) -> int:
    """Inverse of :func:`format_state`.

    Raises
    ------
    ValueError
        Malformed text, wrong shape, or (when ``check``) a blockade violation.
    """
    rows = text.strip().split("/")
    if len(rows) != lattice.n_legs or any(not _ROW.match(r) for r in rows):
        raise ValueError(f"malformed state text {text!r} for {lattice.n_legs} legs")
    if any(len(r) != lattice.n_cols for r in rows):
        raise ValueError(f"state text {text!r} does not have {lattice.n_cols} columns")
    state = 0
    for a, row in enumerate(rows):
        for c, ch in enumerate(row):
            if ch == "x":
                state |= 1 << lattice.site(c, a)
    if check and not is_legal(state, lattice):
        raise ValueError(f"state {text!r} violates the blockade")
    return state


# ---------------------------------------------------------------- named states

NAMED_STATES = ("vac", "Z2", "Z2bar", "1P", "2P", "4P", "Z4_1", "Z4_2", "AR")

# Patterns printed for the 8-column ladder. Shorter or longer ladders tile
# periodic patterns and pad the others with empty columns.
_LADDER_PATTERNS = {
    "1P": ("x", "o"),
    "2P": ("ooxo", "ooox"),
    "4P": ("xooxoxoo", "ooooxooo"),
    "AR": ("xooxoxoo", "ooooxooo"),
}
_PERIODIC = {
    "Z2": ("ox", "xo"),
    "Z2bar": ("xo", "ox"),
    "Z4_1": ("oxoo", "ooox"),
    "Z4_2": ("ooox", "xooo"),
}


def named_state(name: str, lattice: Lattice) -> int:
    """Bitmask of one of :data:`NAMED_STATES` on ``lattice``.

    Ladder patterns are defined for two legs. ``vac`` and ``1P`` work on
    any geometry; ``Z2``/``Z2bar`` also work on chains and even-leg grids.
    """
    L, legs = lattice.n_cols, lattice.n_legs
    if name == "vac":
        return 0
    if name == "1P":
        return 1 << lattice.site(0, 0)
    if legs != 2 and name in ("Z2", "Z2bar"):
        shift = 0 if name == "Z2" else 1
        state = 0
        for c in range(L):
            for a in range(legs):
                if (c + a + shift) % 2 == 1:
                    state |= 1 << lattice.site(c, a)
        if not is_legal(state, lattice):
            raise ValueError(f"{name} is not blockade-legal on this lattice")
        return state
    if legs != 2:
        raise ValueError(f"named state {name!r} is defined for 2-leg ladders")
    if name in _PERIODIC:
        top, bottom = _PERIODIC[name]
        p = len(top)
        if L % p:
            raise ValueError(f"{name} needs a multiple of {p} columns")
        rows = (top * (L // p), bottom * (L // p))
    elif name in _LADDER_PATTERNS:
        top, bottom = _LADDER_PATTERNS[name]
        if L < len(top):
            raise ValueError(f"{name} needs at least {len(top)} columns")
        rows = (top.ljust(L, "o"), bottom.ljust(L, "o"))
    else:
        raise ValueError(f"unknown named state {name!r}")
    return parse_state("/".join(rows), lattice)


def resolve_state(spec: str, lattice: Lattice) -> int:
    """Named state or literal state text."""
    if spec in NAMED_STATES:
        return named_state(spec, lattice)
    return parse_state(spec, lattice)
