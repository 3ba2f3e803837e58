"""Level statistics, zero modes, spectral reflection, AGP norm and Page values."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ConstrainedBasis
from .entanglement import Cut, vn_entropy
from .operators import disordered_hamiltonian
from .symmetry import SymmetrySector, build_sector

POISSON_R = 2 * np.log(2) - 1
GOE_R = 0.5295
DEGENERACY_TOL = 1e-10


class SectorMixingError(ValueError):
    """Operator connects a symmetry sector to its complement."""


@dataclass
class SpectrumReport:
    """Level statistics of one resolved sector."""

    label: str
    energies: np.ndarray = field(repr=False)
    r_values: np.ndarray = field(repr=False)
    mean_r: float
    bin_edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    zero_mode_count: int
    reflection_residual: float

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("energies", "r_values", "bin_edges", "density"):
            d[k] = np.asarray(d[k]).tolist()
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def write_histogram_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "density"])
            for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.density):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])


def distinct_levels(energies: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Sorted levels with exact degeneracies (gap below ``tol``) collapsed."""
    e = np.sort(np.asarray(energies, dtype=float))
    if tol is None:
        tol = DEGENERACY_TOL * max(float(e[-1] - e[0]), 1e-300) if e.size else 0.0
    keep = np.concatenate([[True], np.diff(e) > tol])
    return e[keep]


def r_values(energies: np.ndarray, tol: float | None = None) -> np.ndarray:
    """``min(s_n, s_{n-1}) / max(s_n, s_{n-1})`` over distinct levels."""
    e = distinct_levels(energies, tol)
    if e.size < 4:
        raise ValueError("need at least 4 distinct levels")
    s = np.diff(e)
    return np.minimum(s[1:], s[:-1]) / np.maximum(s[1:], s[:-1])


def reflection_residual(energies: np.ndarray) -> float:
    """``max_k |E_k + E_{D-1-k}|`` of the sorted spectrum."""
    e = np.sort(np.asarray(energies))
    return float(np.abs(e + e[::-1]).max()) if e.size else 0.0


def level_spacing_stats(
    energies: np.ndarray,
    degeneracy_tol: float | None = None,
    bins: int = 50,
    label: str = "",
    zero_tol: float = 1e-8,
) -> SpectrumReport:
    """Spacing-ratio statistics of one sector's spectrum."""
    e = np.sort(np.asarray(energies, dtype=float))
    r = r_values(e, degeneracy_tol)
    density, edges = np.histogram(r, bins=bins, range=(0.0, 1.0), density=True)
    return SpectrumReport(
        label,
        e,
        r,
        float(r.mean()),
        edges,
        density,
        int(np.sum(np.abs(e) < zero_tol)),
        reflection_residual(e),
    )


def sector_leak(H, sector: SymmetrySector) -> float:
    """``max |(1 - V V^dag) H V|``; zero when ``H`` respects the sector."""
    v = sector.projector
    hv = sp.csr_matrix(H) @ v
    res = hv - v @ (v.conj().T @ hv)
    return float(abs(res).max()) if res.nnz else 0.0


def sector_energies(H, sector: SymmetrySector, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of ``H`` in a sector; raises if the sector is not resolved."""
    leak = sector_leak(H, sector)
    if leak > tol:
        raise SectorMixingError(f"operator mixes the sector (leak {leak:.2e}); statistics would combine sectors")
    h = sector.reduce(H).toarray()
    return np.linalg.eigvalsh(h)


def realization_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Per-realisation seed derived from ``(master_seed, index)``."""
    return np.random.SeedSequence([int(master_seed), int(index)])


def _realization_r(args) -> float:
    basis, sector, delta, eta, master_seed, k, omega = args
    H = disordered_hamiltonian(basis, delta, eta, realization_seed(master_seed, k), omega)
    return float(r_values(sector_energies(H, sector)).mean())


def disorder_averaged_r(
    basis: ConstrainedBasis,
    delta: float,
    eta: float,
    n_realizations: int,
    master_seed: int = 0,
    omega: float = 1.0,
    ky_index: int = 0,
    n_jobs: int = 1,
) -> tuple[float, float, np.ndarray]:
    """Mean ``<r>`` over disorder realisations in a ``T_y`` sector.

    Realisations run on ``n_jobs`` worker processes; results are reduced in
    index order, so the output does not depend on ``n_jobs``.

    Returns
    -------
    mean, stderr, per_realization
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    sector = build_sector(basis, 0, ky_index, use_x=False)
    tasks = [(basis, sector, delta, eta, master_seed, k, omega) for k in range(n_realizations)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            vals = np.array(list(pool.map(_realization_r, tasks)))
    else:
        vals = np.array([_realization_r(t) for t in tasks])
    err = float(vals.std(ddof=1) / np.sqrt(n_realizations)) if n_realizations > 1 else 0.0
    return float(vals.mean()), err, vals


def zero_mode_count(H, tol: float = 1e-8, evals: np.ndarray | None = None) -> int:
    """Number of eigenvalues with ``|E| < tol``."""
    if evals is None:
        h = H.toarray() if sp.issparse(H) else np.asarray(H)
        evals = np.linalg.eigvalsh(h)
    return int(np.sum(np.abs(evals) < tol))


def default_zeta(n_sites: int, dim: int) -> float:
    """Regulator ``N ln N / D``."""
    return n_sites * np.log(n_sites) / dim


def agp_norm(H, dH, zeta: float, eig=None, tol: float = 1e-10) -> float:
    """Regularised adiabatic-gauge-potential norm.

    ``(1/D) sum_{mu != nu} w^2 / (w^2 + zeta^2)^2 |<mu|dH|nu>|^2`` with
    ``w = E_mu - E_nu``. Degenerate eigenvectors are first rotated to
    diagonalise ``dH`` inside each block.
    """
    if eig is None:
        h = H.toarray() if sp.issparse(H) else np.asarray(H)
        eig = np.linalg.eigh(h)
    evals, evecs = eig
    d = dH.toarray() if sp.issparse(dH) else np.asarray(dH)
    m = evecs.conj().T @ d @ evecs
    scale = max(1.0, float(np.abs(evals).max()))
    cuts = np.flatnonzero(np.diff(evals) > tol * scale) + 1
    for g in np.split(np.arange(evals.size), cuts):
        if g.size > 1:
            _, u = np.linalg.eigh(m[np.ix_(g, g)])
            m[:, g] = m[:, g] @ u
            m[g, :] = u.conj().T @ m[g, :]
    w = evals[:, None] - evals[None, :]
    weight = w**2 / (w**2 + zeta**2) ** 2
    np.fill_diagonal(weight, 0.0)
    return float(np.sum(weight * np.abs(m) ** 2) / evals.size)


def page_value_estimate(
    basis: ConstrainedBasis,
    cut: Cut,
    n_samples: int,
    seed=0,
    sector: SymmetrySector | None = None,
) -> tuple[float, float]:
    """Mean and standard error of the entropy of random normalised states.

    States are complex Gaussian vectors in the sector (or full basis).
    """
    rng = np.random.default_rng(seed)
    dim = sector.dim if sector is not None else basis.dim
    vals = np.empty(n_samples)
    for k in range(n_samples):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        if sector is not None:
            v = sector.lift(v)
        vals[k] = vn_entropy(basis, v / np.linalg.norm(v), cut)
    err = float(vals.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return float(vals.mean()), err
