"""Lindblad master equation and Monte Carlo wave-function trajectories.

All solvers take a Hamiltonian matrix and a list of jump operators, so they
work on any basis (including raw two-level toys). ``JumpChannelSet``
builds the dephasing and emission channels over a constrained basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .basis import ConstrainedBasis
from .dynamics import NumericalDriftError, ResourceCapError
from .operators import sigma_z
from .timeseries import TimeSeries

DENSE_CAP = 1500
MCWF_DENSE_CAP = 4096
CHECK_EVERY = 100
TRACE_RENORM_TOL = 1e-6
DEFAULT_OPEN_DT = 1e-2


@dataclass(frozen=True)
class JumpChannelSet:
    """Dephasing ``sqrt(gamma_d) sigma^z`` and emission ``sqrt(gamma_e) sigma^-`` on every site."""

    gamma_d: float = 0.0
    gamma_e: float = 0.0

    def __post_init__(self):
        if self.gamma_d < 0 or self.gamma_e < 0:
            raise ValueError("rates must be non-negative")

    def operators(self, basis: ConstrainedBasis) -> list:
        """Sparse jump operators over ``basis`` (zero-rate channels omitted)."""
        out = []
        if self.gamma_d > 0:
            sz = sigma_z(basis)
            for i in range(basis.n_sites):
                out.append(sp.diags(np.sqrt(self.gamma_d) * sz[:, i]).tocsr())
        if self.gamma_e > 0:
            for i in range(basis.n_sites):
                src = np.flatnonzero((basis.states >> i) & 1)
                dst = basis.indices(basis.states[src] & ~np.int64(1 << i))
                op = sp.coo_matrix((np.full(src.size, np.sqrt(self.gamma_e)), (dst, src)), shape=(basis.dim, basis.dim))
                out.append(op.tocsr())
        return out


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def _is_diagonal(j) -> bool:
    j = sp.csr_matrix(j)
    return j.nnz == 0 or bool(np.all(j.tocoo().row == j.tocoo().col))


class _Liouvillian:
    """Precomputed pieces of ``L[rho]``."""

    def __init__(self, H, jumps):
        self.h = _dense(H).astype(complex)
        dim = self.h.shape[0]
        k = sp.csr_matrix((dim, dim), dtype=complex)
        diag_w = np.zeros((dim, dim), dtype=complex)
        self.general = []
        for j in jumps:
            js = sp.csr_matrix(j, dtype=complex)
            k = k + js.conj().T @ js
            if _is_diagonal(js):
                d = js.diagonal()
                diag_w += np.outer(d, d.conj())
            else:
                self.general.append(js)
        self.diag_w = diag_w
        self.has_diag = bool(np.any(diag_w))
        self.k_half = 0.5 * _dense(k)
        self.heff = self.h - 1j * self.k_half

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        a = self.heff @ rho
        out = -1j * (a - a.conj().T)
        if self.has_diag:
            out += self.diag_w * rho
        for j in self.general:
            out += j @ (j @ rho.conj().T).conj().T
        return out


def lindblad_rhs(H, jumps, rho: np.ndarray) -> np.ndarray:
    """``-i[H, rho] + sum_k (J rho J^dag - {J^dag J, rho}/2)``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != H.shape:
        raise ValueError("rho and H shapes differ")
    return _Liouvillian(H, jumps)(rho)


def _sample_steps(t_max: float, dt: float, n_samples: int | None, sample_dt: float | None) -> tuple[int, np.ndarray]:
    n_steps = int(round(t_max / dt))
    if n_steps <= 0 or abs(n_steps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError("t_max must be a positive multiple of dt")
    if sample_dt is not None:
        every = int(round(sample_dt / dt))
        if every <= 0 or abs(every * dt - sample_dt) > 1e-9:
            raise ValueError("sample_dt must be a positive multiple of dt")
        steps = np.arange(0, n_steps + 1, every)
    else:
        steps = np.unique(np.linspace(0, n_steps, (n_samples or 101)).round().astype(int))
    return n_steps, steps


def evolve_lindblad(
    H,
    jumps,
    rho0: np.ndarray,
    t_max: float,
    dt: float = DEFAULT_OPEN_DT,
    observables: dict | None = None,
    sample_dt: float | None = None,
    n_samples: int | None = None,
    cap: int = DENSE_CAP,
) -> TimeSeries:
    """RK4 integration of the master equation for a dense ``rho``.

    Every ``CHECK_EVERY`` steps the trace, hermiticity and smallest
    eigenvalue are checked; a trace drift above ``1e-6`` aborts, smaller
    drifts are renormalised. Extremes are stored in ``meta``.
    """
    rho = np.array(rho0, dtype=complex)
    dim = rho.shape[0]
    if dim > cap:
        raise ResourceCapError(f"dense rho needs D <= {cap} (D = {dim}); use trajectory_average instead")
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    lv = _Liouvillian(H, jumps)
    n_steps, steps = _sample_steps(t_max, dt, n_samples, sample_dt)
    obs = {k: _dense(v) for k, v in (observables or {}).items()}
    rows = {k: [] for k in obs}
    rows["trace"] = []
    rows["purity"] = []
    meta = {"solver": "lindblad-rk4", "dt": dt, "dim": dim, "max_trace_drift": 0.0, "min_eigenvalue": 1.0, "max_hermiticity": 0.0}
    samples = set(int(s) for s in steps)

    def record(r):
        for k, o in obs.items():
            rows[k].append(float(np.real(np.sum(o.T * r))))
        rows["trace"].append(float(np.real(np.trace(r))))
        rows["purity"].append(float(np.real(np.vdot(r, r))))

    def check(r):
        tr = np.real(np.trace(r))
        drift = abs(tr - 1.0)
        meta["max_trace_drift"] = max(meta["max_trace_drift"], drift)
        meta["max_hermiticity"] = max(meta["max_hermiticity"], float(np.abs(r - r.conj().T).max()))
        meta["min_eigenvalue"] = min(meta["min_eigenvalue"], float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0]))
        if drift > TRACE_RENORM_TOL:
            raise NumericalDriftError(f"trace drift {drift:.2e} exceeds {TRACE_RENORM_TOL}")
        return r / tr

    check(rho)
    record(rho)
    for n in range(1, n_steps + 1):
        k1 = lv(rho)
        k2 = lv(rho + 0.5 * dt * k1)
        k3 = lv(rho + 0.5 * dt * k2)
        k4 = lv(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if n % CHECK_EVERY == 0 or n == n_steps:
            rho = check(rho)
        if n in samples:
            record(rho)
    ts = TimeSeries(steps * dt, rows, meta)
    ts.final_rho = rho
    return ts


# ---------------------------------------------------------------- trajectories


def trajectory_seed(master_seed: int, index: int) -> np.random.Generator:
    """Generator of trajectory ``index`` derived from ``master_seed``."""
    return np.random.default_rng([int(master_seed), int(index)])


def _step_propagator(H, jumps, dt: float, cap: int = MCWF_DENSE_CAP) -> np.ndarray:
    dim = H.shape[0]
    if dim > cap:
        raise ResourceCapError(f"dense step propagator needs D <= {cap} (D = {dim})")
    k = np.zeros((dim, dim), dtype=complex)
    for j in jumps:
        jd = _dense(j)
        k += jd.conj().T @ jd
    return expm(-1j * dt * (_dense(H) - 0.5j * k))


def _mcwf_batch(u, jumps, psi0, n_steps, samples, rngs, obs, warn_tag):
    """Norm-threshold trajectories evolved column-wise in one matrix."""
    n_traj = len(rngs)
    dim = psi0.size
    psi = np.tile(np.asarray(psi0, dtype=complex)[:, None], (1, n_traj))
    thresholds = np.array([g.random() for g in rngs])
    jumps = [sp.csr_matrix(j, dtype=complex) for j in jumps]
    out = {k: np.empty((len(samples), n_traj)) for k in obs}
    n_jumps = np.zeros(n_traj, dtype=np.int64)
    max_p = 0.0
    srow = {int(s): r for r, s in enumerate(samples)}

    def record(row, p):
        nrm = np.real(np.einsum("ij,ij->j", p.conj(), p))
        for k, o in obs.items():
            out[k][row] = np.real(np.einsum("ij,ij->j", p.conj(), o @ p)) / nrm

    if 0 in srow:
        record(srow[0], psi)
    for n in range(1, n_steps + 1):
        before = np.real(np.einsum("ij,ij->j", psi.conj(), psi))
        psi = u @ psi
        after = np.real(np.einsum("ij,ij->j", psi.conj(), psi))
        if jumps:
            max_p = max(max_p, float(np.max(1.0 - after / before)))
        for t in np.flatnonzero(after < thresholds):
            col = psi[:, t]
            w = np.array([np.real(np.vdot(j @ col, j @ col)) for j in jumps])
            if w.sum() <= 0:
                thresholds[t] = 0.0
                continue
            k = int(np.searchsorted(np.cumsum(w) / w.sum(), rngs[t].random(), side="right"))
            k = min(k, len(jumps) - 1)
            new = jumps[k] @ col
            psi[:, t] = new / np.linalg.norm(new)
            thresholds[t] = rngs[t].random()
            n_jumps[t] += 1
        if n in srow:
            record(srow[n], psi)
    if max_p > 0.1:
        warnings.warn(f"{warn_tag}: jump probability per step reached {max_p:.3f}; reduce dt")
    return out, n_jumps, max_p


def _obs_dense(observables):
    return {k: (sp.csr_matrix(v) if sp.issparse(v) else np.asarray(v)) for k, v in (observables or {}).items()}


def mcwf_trajectory(
    H,
    jumps,
    psi0: np.ndarray,
    t_max: float,
    dt: float = DEFAULT_OPEN_DT,
    seed=0,
    observables: dict | None = None,
    sample_dt: float | None = None,
    n_samples: int | None = None,
) -> TimeSeries:
    """One Monte Carlo wave-function trajectory (norm-threshold jumps).

    The state evolves with the exact step propagator of
    ``H - (i/2) sum J^dag J``; when its squared norm falls below a uniform
    threshold a jump ``J_k`` is drawn with weight ``|J_k psi|^2``.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalised")
    n_steps, steps = _sample_steps(t_max, dt, n_samples, sample_dt)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = _step_propagator(H, jumps, dt)
    out, n_jumps, max_p = _mcwf_batch(u, jumps, psi0, n_steps, steps, [rng], _obs_dense(observables), "mcwf")
    cols = {k: v[:, 0] for k, v in out.items()}
    meta = {"solver": "mcwf", "dt": dt, "dim": psi0.size, "n_jumps": int(n_jumps[0]), "max_step_jump_probability": max_p}
    return TimeSeries(steps * dt, cols, meta)


def trajectory_average(
    H,
    jumps,
    psi0: np.ndarray,
    t_max: float,
    n_traj: int,
    master_seed: int = 0,
    dt: float = DEFAULT_OPEN_DT,
    observables: dict | None = None,
    sample_dt: float | None = None,
    n_samples: int | None = None,
    batch: int = 64,
    keep_trajectories: bool = False,
) -> TimeSeries:
    """Mean and standard error over trajectories seeded by ``(master_seed, index)``.

    Columns are ``<name>`` and ``<name>_stderr``. Trajectory ``i`` is
    identical to ``mcwf_trajectory(..., seed=trajectory_seed(master_seed, i))``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalised")
    n_steps, steps = _sample_steps(t_max, dt, n_samples, sample_dt)
    u = _step_propagator(H, jumps, dt)
    obs = _obs_dense(observables)
    per = {k: np.empty((steps.size, n_traj)) for k in obs}
    jumps_total = 0
    max_p = 0.0
    for start in range(0, n_traj, batch):
        idx = range(start, min(n_traj, start + batch))
        rngs = [trajectory_seed(master_seed, i) for i in idx]
        out, nj, mp = _mcwf_batch(u, jumps, psi0, n_steps, steps, rngs, obs, "trajectory_average")
        for k in obs:
            per[k][:, idx.start : idx.stop] = out[k]
        jumps_total += int(nj.sum())
        max_p = max(max_p, mp)
    cols = {}
    for k, v in per.items():
        cols[k] = v.mean(axis=1)
        cols[f"{k}_stderr"] = v.std(axis=1, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else np.zeros(steps.size)
    meta = {
        "solver": "mcwf-average",
        "dt": dt,
        "dim": psi0.size,
        "n_traj": n_traj,
        "master_seed": master_seed,
        "n_jumps": jumps_total,
        "max_step_jump_probability": max_p,
    }
    ts = TimeSeries(steps * dt, cols, meta)
    if keep_trajectories:
        ts.trajectories = per
    return ts
