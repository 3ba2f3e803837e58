"""Closed-system propagation and Floquet protocols."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ConstrainedBasis
from .operators import DetuningProfile, build_pxp_z, observable, translation_operator
from .timeseries import TimeSeries

ED_CAP = 8192
DEFAULT_DT = 1e-3
NORM_TOL = 1e-6


class NumericalDriftError(RuntimeError):
    """Norm or trace drifted beyond tolerance during integration."""


class ResourceCapError(MemoryError):
    """Requested run exceeds a configured size cap."""


@dataclass
class Propagator:
    """Time evolution under a fixed Hamiltonian.

    Parameters
    ----------
    H : sparse or dense matrix
    method : {"ED", "RK4"}
        ``ED`` diagonalises once and evolves exactly. It falls back to RK4
        above ``ed_cap`` states and records a note.
    dt : float
        RK4 step in units of ``1/Omega``.
    """

    H: object
    method: str = "ED"
    dt: float = DEFAULT_DT
    ed_cap: int = ED_CAP
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in ("ED", "RK4"):
            raise ValueError("method must be 'ED' or 'RK4'")
        self.dim = self.H.shape[0]
        if self.method == "ED" and self.dim > self.ed_cap:
            self.method = "RK4"
            self.notes.append(f"D={self.dim} above ED cap {self.ed_cap}; using RK4 dt={self.dt}")
        self._evals = None
        self._evecs = None
        self._hs = sp.csr_matrix(self.H) if sp.issparse(self.H) else np.asarray(self.H)

    def _eig(self):
        if self._evals is None:
            dense = self.H.toarray() if sp.issparse(self.H) else np.asarray(self.H)
            self._evals, self._evecs = np.linalg.eigh(dense)
        return self._evals, self._evecs

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eig()[0]

    def _rk4(self, psi: np.ndarray, duration: float) -> np.ndarray:
        if duration <= 0:
            return psi
        n = max(1, int(np.ceil(duration / self.dt - 1e-9)))
        h = duration / n
        H = self._hs
        norm0 = np.linalg.norm(psi)
        for k in range(n):
            k1 = -1j * (H @ psi)
            k2 = -1j * (H @ (psi + 0.5 * h * k1))
            k3 = -1j * (H @ (psi + 0.5 * h * k2))
            k4 = -1j * (H @ (psi + h * k3))
            psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if (k + 1) % 1000 == 0 or k == n - 1:
                drift = abs(np.linalg.norm(psi) - norm0)
                # negated comparison so NaN also aborts
                if not drift <= NORM_TOL:
                    raise NumericalDriftError(f"RK4 norm drift {drift:.2e} exceeds {NORM_TOL}")
        return psi

    def apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        """``exp(-i H t) psi``."""
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[0] != self.dim:
            raise ValueError("state dimension does not match the Hamiltonian")
        if self.method == "ED":
            e, v = self._eig()
            phase = np.exp(-1j * e * t)
            coeff = v.conj().T @ psi
            return v @ (phase * coeff if psi.ndim == 1 else phase[:, None] * coeff)
        return self._rk4(psi, t)

    def trajectory(self, psi0: np.ndarray, times) -> np.ndarray:
        """``(T, D)`` array of states at the requested times (from ``t=0``)."""
        times = np.asarray(times, dtype=float)
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape != (self.dim,):
            raise ValueError("state dimension does not match the Hamiltonian")
        if self.method == "ED":
            e, v = self._eig()
            c = v.conj().T @ psi0
            return (v @ (np.exp(-1j * np.outer(e, times)) * c[:, None])).T
        out = np.empty((times.size, self.dim), dtype=complex)
        psi, t = psi0, 0.0
        for k, tk in enumerate(times):
            psi = self._rk4(psi, tk - t)
            t = tk
            out[k] = psi
        return out


def expectation(op, states: np.ndarray) -> np.ndarray:
    """``<psi|O|psi>`` for each row of ``states`` (real part)."""
    states = np.atleast_2d(states)
    return np.real(np.einsum("ij,ij->i", states.conj(), (op @ states.T).T))


def evolve(prop: Propagator, psi0: np.ndarray, times, observables: dict | None = None, keep_states: bool = False) -> TimeSeries:
    """Evolve and record observables and the return probability.

    Parameters
    ----------
    observables : dict of name -> operator, optional
    keep_states : bool
        Store the snapshots in ``TimeSeries.states``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalised")
    times = np.asarray(times, dtype=float)
    states = prop.trajectory(psi0, times)
    cols = {"fidelity": np.abs(states @ psi0.conj()) ** 2}
    for name, op in (observables or {}).items():
        cols[name] = expectation(op, states)
    meta = {"method": prop.method, "dt": prop.dt if prop.method == "RK4" else None, "dim": prop.dim, "notes": list(prop.notes)}
    return TimeSeries(times, cols, meta, states if keep_states else None)


def fidelity_series(psi0: np.ndarray, trajectory: np.ndarray, times=None) -> TimeSeries:
    """``|<psi0|psi(t)>|^2`` for each snapshot."""
    trajectory = np.atleast_2d(trajectory)
    if times is None:
        times = np.arange(trajectory.shape[0], dtype=float)
    f = np.abs(trajectory @ np.conj(psi0)) ** 2
    return TimeSeries(times, {"fidelity": np.clip(f, 0.0, 1.0)})


# ---------------------------------------------------------------- Floquet


@dataclass
class FloquetSpec:
    """One Floquet protocol.

    ``protocol`` is ``"0"``, ``"I"`` or ``"II"``. ``delta`` is the staggered
    detuning (protocols 0 and I) or ``Delta_0`` (protocol II). ``epsilon``
    detunes the pulse angle from pi.
    """

    protocol: str
    tau: float
    delta: float
    epsilon: float = 0.0
    variant: str = "C1"
    n_cycles: int = 10
    substeps: int = 20
    omega: float = 1.0

    def __post_init__(self):
        self.protocol = str(self.protocol)
        if self.protocol not in ("0", "I", "II"):
            raise ValueError("protocol must be '0', 'I' or 'II'")
        if self.variant not in ("C1", "C2"):
            raise ValueError("variant must be 'C1' or 'C2'")
        if self.tau <= 0 or self.n_cycles < 0 or self.substeps < 1:
            raise ValueError("tau > 0, n_cycles >= 0 and substeps >= 1 required")
        if self.protocol == "II" and self.substeps % 2:
            raise ValueError("protocol II needs an even number of substeps")


def pulse_operator(basis: ConstrainedBasis, epsilon: float = 0.0) -> sp.csr_matrix:
    """Diagonal ``exp(-i (pi - eps) n_excited)``."""
    n = basis.occupations().sum(axis=1)
    return sp.diags(np.exp(-1j * (np.pi - float(epsilon)) * n)).tocsr()


def _floquet_stages(spec: FloquetSpec, basis: ConstrainedBasis):
    """List of (Hamiltonian, duration, kick) stages making up one cycle."""
    lat = basis.lattice
    kick = pulse_operator(basis, spec.epsilon)
    if spec.protocol == "II":
        hp = build_pxp_z(basis, spec.omega, DetuningProfile.staggered(lat, spec.delta))
        hm = build_pxp_z(basis, spec.omega, DetuningProfile.staggered_flipped(lat, spec.delta))
        return [(hp, spec.tau / 2, kick), (hm, spec.tau / 2, kick)]
    h = build_pxp_z(basis, spec.omega, DetuningProfile.staggered(lat, spec.delta))
    if spec.protocol == "0":
        return [(h, spec.tau, kick)]
    t = translation_operator(basis, "x")
    if spec.variant == "C2":
        t = t @ translation_operator(basis, "y")
    return [(h, spec.tau, (t @ kick).tocsr())]


def floquet_unitary(spec: FloquetSpec, basis: ConstrainedBasis) -> np.ndarray:
    """Dense one-cycle unitary (exact exponentials)."""
    u = np.identity(basis.dim, dtype=complex)
    for h, dur, kick in _floquet_stages(spec, basis):
        e, v = np.linalg.eigh(h.toarray())
        step = (v * np.exp(-1j * e * dur)) @ v.conj().T
        u = kick @ (step @ u)
    return np.asarray(u)


def run_floquet(
    spec: FloquetSpec,
    basis: ConstrainedBasis,
    psi0: np.ndarray,
    method: str = "ED",
    dt: float = DEFAULT_DT,
    observables: dict | None = None,
) -> TimeSeries:
    """Micromotion and stroboscopic return probability and magnetisation.

    Rows at ``t = n tau`` hold the state after all pulses of cycle ``n``
    (column ``stroboscopic`` = 1). Intermediate rows sample the continuous
    evolution; in protocol II the mid-cycle row is taken after the first
    pulse.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalised")
    meta = {"spec": asdict(spec), "method": method, "dim": basis.dim}
    if spec.protocol == "0" and spec.delta != 0:
        meta["warning"] = "protocol 0 identity U^2 = 1 only holds at Delta = 0"
        warnings.warn(meta["warning"])
    stages = [(Propagator(h, method, dt), dur, kick) for h, dur, kick in _floquet_stages(spec, basis)]
    for p, _, _ in stages:
        meta.setdefault("notes", []).extend(p.notes)
    obs = {"Mz": observable(basis, "Mz")}
    obs.update(observables or {})
    sub = spec.substeps // len(stages)
    times, snaps, strobe, cycle = [0.0], [psi0], [1.0], [0]
    psi = psi0
    t0 = 0.0
    for n in range(spec.n_cycles):
        for s, (prop, dur, kick) in enumerate(stages):
            grid = dur * np.arange(1, sub) / sub
            if grid.size:
                inner = prop.trajectory(psi, grid)
                for tk, st in zip(grid, inner):
                    times.append(t0 + tk)
                    snaps.append(st)
                    strobe.append(0.0)
                    cycle.append(n)
            psi = kick @ prop.apply(psi, dur)
            t0 += dur
            last = s == len(stages) - 1
            times.append(t0 if not last else (n + 1) * spec.tau)
            snaps.append(psi)
            strobe.append(1.0 if last else 0.0)
            cycle.append(n + 1 if last else n)
    snaps = np.array(snaps)
    cols = {
        "fidelity": np.abs(snaps @ psi0.conj()) ** 2,
        "stroboscopic": np.array(strobe),
        "cycle": np.array(cycle, dtype=float),
    }
    for name, op in obs.items():
        cols[name] = expectation(op, snaps)
    return TimeSeries(np.array(times), cols, meta)


def translation_period(basis: ConstrainedBasis, state: int, step: int = 2, axes: str = "x") -> int:
    """Smallest ``m >= 1`` with ``(T^step)^m |state> = |state>``.

    ``axes="xy"`` uses the combined translation ``T_x T_y``.
    """
    from . import kernels

    lat = basis.lattice
    perm = lat.permutation("x", 1)
    if axes == "xy":
        perm = lat.permutation("y", 1)[perm]
    s = np.array([state], dtype=np.int64)
    cur = s.copy()
    for m in range(1, 4 * lat.n_sites + 1):
        for _ in range(step):
            cur = kernels.permute_states(cur, perm)
        if cur[0] == s[0]:
            return m
    raise RuntimeError("translation period not found")  # pragma: no cover
