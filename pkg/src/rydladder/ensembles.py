"""Diagonal-ensemble averages and Gibbs / generalised Gibbs ensembles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize
from scipy.special import logsumexp

BETA_BOUND = 50.0
DEGENERACY_TOL = 1e-10
FIT_TOL = 1e-10


def _dense(op) -> np.ndarray:
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def _expect(op, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, op @ psi)))


def degenerate_groups(evals: np.ndarray, tol: float = DEGENERACY_TOL) -> list[np.ndarray]:
    """Index groups of sorted eigenvalues closer than ``tol * max|E|``."""
    scale = max(1.0, float(np.abs(evals).max())) if evals.size else 1.0
    cuts = np.flatnonzero(np.diff(evals) > tol * scale) + 1
    return np.split(np.arange(evals.size), cuts)


def diagonal_ensemble_average(H, psi0: np.ndarray, O, eig=None, tol: float = DEGENERACY_TOL) -> float:
    """Infinite-time average of ``<O(t)>``.

    Parameters
    ----------
    eig : tuple, optional
        Precomputed ``(evals, evecs)`` of ``H`` with ascending ``evals``.

    Returns
    -------
    float
        ``sum_g <psi0|P_g O P_g|psi0>`` over degenerate eigenspaces ``g``.
    """
    evals, evecs = eig if eig is not None else np.linalg.eigh(_dense(H))
    c = evecs.conj().T @ np.asarray(psi0)
    total = 0.0
    for g in degenerate_groups(evals, tol):
        phi = evecs[:, g] @ c[g]
        total += _expect(O, phi)
    return total


@dataclass
class EnsembleFit:
    """Fitted (generalised) Gibbs ensemble.

    The density matrix is diagonal in the orthonormal ``eigvecs`` basis with
    weights ``probs``. ``boundary`` marks multipliers clamped at the bound.
    """

    kind: str
    multipliers: dict
    residual: float
    converged: bool
    boundary: bool
    targets: dict
    achieved: dict
    probs: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)
    expectations: dict = field(default_factory=dict)

    @property
    def rho(self) -> np.ndarray:
        """Dense ensemble density matrix."""
        v = self.eigvecs
        return (v * self.probs) @ v.conj().T

    def expect(self, O) -> float:
        """Ensemble expectation ``Tr(rho O)``."""
        ov = O @ self.eigvecs
        diag = np.real(np.einsum("ij,ij->j", self.eigvecs.conj(), ov))
        return float(self.probs @ diag)

    def report(self, observables: dict | None = None) -> dict:
        """JSON-ready summary; evaluates any requested observables."""
        for name, op in (observables or {}).items():
            self.expectations[name] = self.expect(op)
        return {
            "kind": self.kind,
            "multipliers": self.multipliers,
            "residual": self.residual,
            "converged": self.converged,
            "boundary": self.boundary,
            "targets": self.targets,
            "achieved": self.achieved,
            "expectations": dict(self.expectations),
        }

    def write_json(self, path, observables: dict | None = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.report(observables), fh, indent=2, sort_keys=True)


def _gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    logw = -beta * energies
    return np.exp(logw - logsumexp(logw))


def fit_ge(H, psi0: np.ndarray, eig=None, bound: float = BETA_BOUND) -> EnsembleFit:
    """Gibbs ensemble whose mean energy equals ``<psi0|H|psi0>``.

    The inverse temperature is found by bracketing root search in
    ``[-bound, bound]``; a target outside that bracket is clamped and
    flagged as a boundary fit.
    """
    evals, evecs = eig if eig is not None else np.linalg.eigh(_dense(H))
    target = _expect(H, np.asarray(psi0))
    width = float(evals[-1] - evals[0])
    tol = 1e-12 * max(1.0, width)
    if target < evals[0] - tol or target > evals[-1] + tol:
        raise ValueError(f"target energy {target} outside spectrum [{evals[0]}, {evals[-1]}]")

    def mismatch(beta):
        return float(_gibbs_weights(evals, beta) @ evals) - target

    lo, hi = mismatch(-bound), mismatch(bound)
    boundary = False
    if lo * hi > 0:
        beta = bound if abs(hi) < abs(lo) else -bound
        boundary = True
    elif lo == 0:
        beta = -bound
    elif hi == 0:
        beta = bound
    else:
        beta = brentq(mismatch, -bound, bound, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    p = _gibbs_weights(evals, beta)
    achieved = float(p @ evals)
    residual = (achieved - target) ** 2
    return EnsembleFit(
        "GE",
        {"beta": float(beta)},
        residual,
        residual <= max(FIT_TOL, (1e-8 * width) ** 2),
        boundary,
        {"H": target},
        {"H": achieved},
        p,
        evecs,
    )


def _charge_blocks(charge_diags: np.ndarray) -> list[np.ndarray]:
    """Basis indices grouped by the tuple of diagonal charge values."""
    keys = np.round(charge_diags, 9)
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.asarray(inv).ravel()
    order = np.argsort(inv, kind="stable")
    cuts = np.flatnonzero(np.diff(inv[order])) + 1
    return np.split(order, cuts)


def fit_gge(
    H,
    charges: dict,
    psi0: np.ndarray,
    bound: float = BETA_BOUND,
    max_iter: int = 10_000,
    frame: np.ndarray | None = None,
) -> EnsembleFit:
    """Generalised Gibbs ensemble ``exp(-beta H - sum lambda_k C_k) / Z``.

    Parameters
    ----------
    H : operator
        Hamiltonian block-diagonal in the joint eigenspaces of ``charges``.
    charges : dict of name -> diagonal operator
        Commuting diagonal charges (``Z_pi``, ``Q_j``).
    psi0 : ndarray
        Initial state fixing the targets.
    frame : ndarray, optional
        Orthogonal rotation ``R`` into the frame where ``H`` and the charges
        act (for example ``exp(iS)`` of a Schrieffer-Wolff expansion). Targets
        use ``R psi0`` and the returned ensemble is rotated back, so
        ``expect`` takes lab-frame observables.

    Notes
    -----
    The multipliers minimise the convex dual ``log Z + theta . targets``,
    whose gradient is the charge mismatch. The reported ``residual`` is the
    summed squared mismatch. A target at the edge of a charge's spectrum
    restricts the support to the matching states; its multiplier is clamped
    at ``bound`` and the fit is flagged as a boundary fit.
    """
    psi0 = np.asarray(psi0)
    if frame is not None:
        psi0 = frame @ psi0
    names = ["H", *charges]
    ops = [H, *charges.values()]
    diags = np.stack([np.real(_dense(sp.csr_matrix(c).diagonal())) for c in charges.values()], axis=1)
    for name, c in charges.items():
        m = sp.csr_matrix(c)
        if abs(m - sp.diags(m.diagonal())).max() > 0:
            raise ValueError(f"charge {name} is not diagonal")
    Hs = sp.csr_matrix(H)
    dim = Hs.shape[0]
    blocks = _charge_blocks(diags)
    leak = 0.0
    lab = np.empty(dim, dtype=np.int64)
    for b, idx in enumerate(blocks):
        lab[idx] = b
    coo = Hs.tocoo()
    off = lab[coo.row] != lab[coo.col]
    if off.any():
        leak = float(np.abs(coo.data[off]).max())
    if leak > 1e-10:
        raise ValueError(f"H does not commute with the charges (leak {leak:.2e})")
    evals = np.empty(dim)
    evecs = np.zeros((dim, dim))
    cols = 0
    qvals = np.empty((dim, diags.shape[1]))
    for idx in blocks:
        blk = Hs[idx][:, idx].toarray()
        e, v = np.linalg.eigh(blk)
        sl = slice(cols, cols + idx.size)
        evals[sl] = e
        evecs[np.ix_(idx, np.arange(cols, cols + idx.size))] = v
        qvals[sl] = diags[idx[0]]
        cols += idx.size
    feats = np.column_stack([evals, qvals])
    targets = np.array([_expect(o, psi0) for o in ops])
    support = np.ones(dim, dtype=bool)
    clamped = {}
    for k in range(1, len(names)):
        lo, hi = feats[:, k].min(), feats[:, k].max()
        if hi - lo < 1e-12:
            continue
        if abs(targets[k] - hi) <= 1e-12 * max(1.0, abs(hi)):
            support &= np.isclose(feats[:, k], hi)
            clamped[k] = -bound
        elif abs(targets[k] - lo) <= 1e-12 * max(1.0, abs(lo)):
            support &= np.isclose(feats[:, k], lo)
            clamped[k] = bound
    free = [k for k in range(len(names)) if k not in clamped]
    fs = feats[support][:, free]
    ts = targets[free]
    scale = np.maximum(np.ptp(fs, axis=0), 1e-12)
    shift = fs.mean(axis=0)
    f = (fs - shift) / scale
    t = (ts - shift) / scale
    lim = bound * scale

    def dual(theta):
        logw = -f @ theta
        lz = logsumexp(logw)
        p = np.exp(logw - lz)
        return lz + theta @ t, t - p @ f

    res = minimize(
        dual,
        np.zeros(len(free)),
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(-lim, lim)),
        options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-13},
    )
    theta = np.empty(len(names))
    theta[free] = res.x / scale
    for k, v in clamped.items():
        theta[k] = v
    p = np.zeros(dim)
    logw = -f @ res.x
    p[support] = np.exp(logw - logsumexp(logw))
    achieved = p @ feats
    residual = float(np.sum((achieved - targets) ** 2))
    boundary = bool(clamped) or bool(np.any(np.isclose(np.abs(res.x), lim, rtol=1e-6)))
    mults = {("beta" if n == "H" else f"lambda_{n}"): float(v) for n, v in zip(names, theta)}
    if frame is not None:
        evecs = frame.conj().T @ evecs
    return EnsembleFit(
        "GGE",
        mults,
        residual,
        residual <= FIT_TOL,
        boundary,
        dict(zip(names, map(float, targets))),
        dict(zip(names, map(float, achieved))),
        p,
        evecs,
    )


def time_average(series: np.ndarray, times: np.ndarray, t_min: float, t_max: float) -> float:
    """Trapezoidal time average of ``series`` on ``[t_min, t_max]``."""
    m = (times >= t_min - 1e-12) & (times <= t_max + 1e-12)
    if m.sum() < 2:
        raise ValueError("window holds fewer than two samples")
    return float(trapezoid(series[m], times[m]) / (times[m][-1] - times[m][0]))
