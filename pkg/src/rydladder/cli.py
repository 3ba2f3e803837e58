"""Command-line driver: every pipeline as a reproducible experiment.

Each run writes ``<out>/<command>.csv`` (or ``.json``) plus
``<out>/<command>.meta.json`` holding the full :class:`ExperimentSpec`.
``rydladder replay <meta.json>`` re-runs a recorded spec.

Exit codes: 0 ok, 2 validation error, 3 numerical abort, 4 resource cap.
Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .basis import NAMED_STATES, enumerate_basis, format_state, resolve_state
from .dynamics import FloquetSpec, NumericalDriftError, Propagator, ResourceCapError, evolve, run_floquet
from .lattice import build_lattice
from .operators import LONGRANGE_MODES, DetuningProfile, build_longrange, build_pxp_z, observable, parse_observable
from .timeseries import TimeSeries, _json_default

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_RESOURCE = 0, 2, 3, 4
COMMANDS = ("basis", "quench", "floquet", "spectrum", "sw", "ensemble", "entropy", "lindblad", "mcwf", "agp")
PROFILES = ("staggered", "flipped", "disordered", "uniform")


class ValidationError(ValueError):
    """Invalid command-line input."""


@dataclass
class ExperimentSpec:
    """Serializable description of one CLI run; one field per flag."""

    command: str
    geometry: str = "8x2"
    obc_x: bool = False
    obc_y: bool = False
    omega: float = 1.0
    delta: float = 0.0
    delta0: float = 0.5
    eta: float = 0.0
    profile: str = "staggered"
    v0: float = 0.0
    mode: str = "blockaded_pxp"
    state: str = "Z2"
    tmax: float = 10.0
    dt: float = 1e-3
    samples: int = 201
    obs: list = field(default_factory=list)
    method: str = "ED"
    protocol: str = "I"
    tau: float = 1.0
    cycles: int = 10
    epsilon: float = 0.0
    variant: str = "C1"
    substeps: int = 20
    gamma_d: float = 0.0
    gamma_e: float = 0.0
    n_traj: int = 100
    seed: int = 0
    realizations: int = 10
    kx: int = 0
    ky: int = 0
    bins: int = 50
    cut: str = "LR"
    order: int = 4
    sw_method: str = "canonical"
    frame: str = "sw"
    zeta: float | None = None
    sectors: bool = False
    dump: bool = False
    jobs: int = 1
    out: str = "rydladder_out"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**data)

    def lattice(self):
        try:
            cols, legs = (int(x) for x in self.geometry.lower().split("x"))
        except ValueError as exc:
            raise ValidationError(f"geometry must look like '8x2', got {self.geometry!r}") from exc
        try:
            return build_lattice(cols, legs, pbc_x=not self.obc_x, pbc_y=not self.obc_y)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.profile not in PROFILES:
            raise ValidationError(f"profile must be one of {PROFILES}")
        if self.mode not in LONGRANGE_MODES:
            raise ValidationError(f"mode must be one of {LONGRANGE_MODES}")
        if self.method not in ("ED", "RK4"):
            raise ValidationError("method must be ED or RK4")
        for name in ("tmax", "dt", "tau"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("samples", "cycles", "substeps", "n_traj", "realizations", "bins", "jobs"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.gamma_d < 0 or self.gamma_e < 0 or self.eta < 0:
            raise ValidationError("rates and eta must be non-negative")
        if self.profile == "disordered" and self.eta <= 0:
            raise ValidationError("disordered profile needs eta > 0")
        lat = self.lattice()
        if self.command in ("quench", "floquet", "ensemble", "lindblad", "mcwf"):
            try:
                resolve_state(self.state, lat)
            except ValueError as exc:
                raise ValidationError(f"state {self.state!r}: {exc}") from exc


# ---------------------------------------------------------------- helpers


def _profile(spec: ExperimentSpec, lat, seed_offset: int = 0) -> DetuningProfile:
    if spec.profile == "staggered":
        return DetuningProfile.staggered(lat, spec.delta)
    if spec.profile == "flipped":
        return DetuningProfile.staggered_flipped(lat, spec.delta)
    if spec.profile == "uniform":
        return DetuningProfile.uniform(lat, spec.delta)
    return DetuningProfile.disordered(lat, spec.delta, spec.eta, np.random.SeedSequence([spec.seed, seed_offset]))


def _hamiltonian(spec: ExperimentSpec):
    lat = spec.lattice()
    prof = _profile(spec, lat)
    if spec.v0 != 0 or spec.mode != "blockaded_pxp":
        return build_longrange(lat, spec.omega, prof, spec.v0, spec.mode)
    basis = enumerate_basis(lat)
    return build_pxp_z(basis, spec.omega, prof), basis


def _initial(spec: ExperimentSpec, basis) -> np.ndarray:
    return basis.basis_vector(resolve_state(spec.state, basis.lattice)).astype(complex)


def _observables(spec: ExperimentSpec, basis) -> dict:
    out = {}
    for name in spec.obs:
        if name in ("S_LR", "S_UD", "MI_h", "MI_v", "E"):
            continue
        try:
            out[name] = parse_observable(basis, name)
        except (ValueError, IndexError, TypeError) as exc:
            raise ValidationError(f"observable {name!r}: {exc}") from exc
    return out


def _state_columns(spec: ExperimentSpec, basis, states: np.ndarray, H) -> dict:
    from .entanglement import Cut, bond_sites, mutual_information, vn_entropy

    lat = basis.lattice
    cols = {}
    for name in spec.obs:
        if name in ("S_LR", "S_UD"):
            if not basis.constrained:
                raise ValidationError("entropies are implemented for the blockaded basis")
            cut = Cut.from_name(lat, name[2:])
            cols[name] = np.array([vn_entropy(basis, s, cut) for s in states])
        elif name in ("MI_h", "MI_v"):
            x, y = bond_sites(lat, name[-1])
            cols[name] = np.array([mutual_information(basis, s, x, y) for s in states])
        elif name == "E":
            cols[name] = np.real(np.einsum("ij,ij->i", states.conj(), (H @ states.T).T))
    return cols


def _meta(spec: ExperimentSpec, **extra) -> dict:
    from . import kernels

    return {"spec": asdict(spec), "version": __version__, "backend": kernels.BACKEND, "seed": spec.seed, **extra}


def _write_json(path: Path, data: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
    return path


def _write_series(spec: ExperimentSpec, ts: TimeSeries, extra: dict) -> list[Path]:
    out = Path(spec.out)
    csv_path = ts.to_csv(out / f"{spec.command}.csv", sidecar=False)
    meta = _meta(spec, run=ts.meta, **extra)
    return [csv_path, _write_json(out / f"{spec.command}.meta.json", meta)]


# ---------------------------------------------------------------- commands


def cmd_basis(spec: ExperimentSpec) -> tuple[list[Path], list[str]]:
    from .symmetry import sector_dimensions, table_row

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    data = {"n_sites": lat.n_sites, "dim": basis.dim}
    lines = [f"N={lat.n_sites} dim={basis.dim}"]
    if spec.sectors:
        if lat.n_legs == 2 and lat.pbc_x:
            row = table_row(basis)
            data["table_row"] = row
            lines = [f"N={lat.n_sites}: " + " / ".join(str(row[k]) for k in ("none", "kx0", "kx0_ky0", "kx0_ky1", "kx1_ky1"))]
        if lat.pbc_x:
            data["sectors"] = {f"{kx},{ky}": d for (kx, ky), d in sector_dimensions(basis).items()}
    out = Path(spec.out)
    paths = [_write_json(out / "basis.json", {**data, "meta": _meta(spec)})]
    if spec.dump:
        p = out / "basis.txt"
        basis.dump(p)
        paths.append(p)
    return paths, lines


def cmd_quench(spec: ExperimentSpec):
    H, basis = _hamiltonian(spec)
    psi0 = _initial(spec, basis)
    obs = _observables(spec, basis)
    times = np.linspace(0.0, spec.tmax, spec.samples)
    prop = Propagator(H, spec.method, spec.dt)
    ts = evolve(prop, psi0, times, obs, keep_states=True)
    ts.columns.update(_state_columns(spec, basis, ts.states, H))
    ts.states = None
    paths = _write_series(spec, ts, {"basis_dim": basis.dim})
    return paths, [f"quench: {len(times)} samples, D={basis.dim}, min F={ts['fidelity'].min():.6g}"]


def cmd_floquet(spec: ExperimentSpec):
    lat = spec.lattice()
    basis = enumerate_basis(lat)
    d = spec.delta0 if spec.protocol == "II" else spec.delta
    fs = FloquetSpec(spec.protocol, spec.tau, d, spec.epsilon, spec.variant, spec.cycles, spec.substeps, spec.omega)
    ts = run_floquet(fs, basis, _initial(spec, basis), spec.method, spec.dt, _observables(spec, basis))
    strobe = ts["fidelity"][ts["stroboscopic"] == 1]
    paths = _write_series(spec, ts, {"basis_dim": basis.dim})
    return paths, [f"floquet {spec.protocol}: stroboscopic F min={strobe.min():.12f} over {spec.cycles} cycles"]


def cmd_spectrum(spec: ExperimentSpec):
    from .spectral import disorder_averaged_r, level_spacing_stats, sector_energies, zero_mode_count
    from .symmetry import build_sector

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    out = Path(spec.out)
    if spec.eta > 0:
        mean, err, per = disorder_averaged_r(basis, spec.delta, spec.eta, spec.realizations, spec.seed, spec.omega, spec.ky, n_jobs=spec.jobs)
        data = {"mean_r": mean, "stderr": err, "per_realization": per, "sector": {"ky": spec.ky}}
        paths = [_write_json(out / "spectrum.json", {**data, "meta": _meta(spec, basis_dim=basis.dim)})]
        return paths, [f"spectrum: <r> = {mean:.4f} +- {err:.4f} over {spec.realizations} realizations"]
    H = build_pxp_z(basis, spec.omega, _profile(spec, lat))
    sector = build_sector(basis, spec.kx, spec.ky)
    rep = level_spacing_stats(sector_energies(H, sector), bins=spec.bins, label=f"kx={spec.kx},ky={spec.ky}")
    full = np.linalg.eigvalsh(H.toarray())
    rep.zero_mode_count = zero_mode_count(H, evals=full)
    from .spectral import reflection_residual

    rep.reflection_residual = reflection_residual(full)
    paths = [_write_json(out / "spectrum.json", {**rep.to_dict(), "meta": _meta(spec, basis_dim=basis.dim)})]
    hist = out / "spectrum_hist.csv"
    rep.write_histogram_csv(hist)
    return paths + [hist], [f"spectrum {rep.label}: <r> = {rep.mean_r:.4f}, zero modes = {rep.zero_mode_count}"]


def cmd_sw(spec: ExperimentSpec):
    from .effective import enumerate_heff2_eigenstates, heff_numeric, write_eigenstate_dump

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    from .operators import hamiltonian

    exact = np.linalg.eigvalsh(hamiltonian(basis, spec.delta, spec.omega).toarray())
    exp = heff_numeric(basis, spec.omega, spec.delta, spec.order, spec.sw_method)
    d = basis.dim
    mid = slice(d // 4, d - d // 4)
    dev = {}
    for k in range(2, spec.order + 1):
        e = np.linalg.eigvalsh(exp.upto(k).toarray())
        dev[f"H{k}"] = float(np.abs(e[mid] - exact[mid]).max())
    out = Path(spec.out)
    paths = [_write_json(out / "sw.json", {"middle_deviation": dev, "meta": _meta(spec, basis_dim=d)})]
    if spec.dump and lat.n_legs == 2:
        p = out / "heff2_eigenstates.txt"
        write_eigenstate_dump(enumerate_heff2_eigenstates(basis, spec.omega, spec.delta), p)
        paths.append(p)
    return paths, ["sw: " + ", ".join(f"{k} dev={v:.4g}" for k, v in dev.items())]


def cmd_ensemble(spec: ExperimentSpec):
    from .effective import heff2_analytic, sw_rotation
    from .ensembles import diagonal_ensemble_average, fit_ge, fit_gge
    from .operators import hamiltonian

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    psi0 = _initial(spec, basis)
    H = hamiltonian(basis, spec.delta, spec.omega)
    eig = np.linalg.eigh(H.toarray())
    obs = _observables(spec, basis)
    ge = fit_ge(H, psi0, eig)
    report = {"GE": ge.report(obs), "diagonal": {k: diagonal_ensemble_average(H, psi0, o, eig) for k, o in obs.items()}}
    lines = [f"GE beta={ge.multipliers['beta']:.6g}"]
    if spec.delta != 0 and lat.n_legs == 2:
        charges = {"Zpi": observable(basis, "Zpi"), **{f"Q{j}": observable(basis, "Q", j) for j in range(1, lat.n_cols + 1)}}
        frame = sw_rotation(basis, spec.omega, spec.delta) if spec.frame == "sw" else None
        gge = fit_gge(heff2_analytic(basis, spec.omega, spec.delta), charges, psi0, frame=frame)
        report["GGE"] = gge.report(obs)
        report["GGE"]["frame"] = spec.frame
        lines.append(f"GGE residual={gge.residual:.3g} boundary={gge.boundary}")
    path = _write_json(Path(spec.out) / "ensemble.json", {**report, "meta": _meta(spec, basis_dim=basis.dim)})
    return [path], lines


def cmd_entropy(spec: ExperimentSpec):
    from .entanglement import Cut, eigenstate_entropy_scan
    from .spectral import page_value_estimate
    from .symmetry import build_sector

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    H = build_pxp_z(basis, spec.omega, _profile(spec, lat))
    cut = Cut.from_name(lat, spec.cut)
    sector = build_sector(basis, spec.kx, spec.ky) if spec.sectors else None
    scan = eigenstate_entropy_scan(basis, H, cut, sector)
    page, err = page_value_estimate(basis, cut, 20, spec.seed, sector)
    ts = TimeSeries(np.arange(scan.shape[0], dtype=float), {"E": scan[:, 0], "S": scan[:, 1]})
    out = Path(spec.out)
    p = ts.to_csv(out / "entropy.csv", sidecar=False)
    m = _write_json(out / "entropy.meta.json", _meta(spec, basis_dim=basis.dim, page=page, page_stderr=err, index_column="eigenstate index"))
    return [p, m], [f"entropy {spec.cut}: {scan.shape[0]} states, max S={scan[:, 1].max():.4f}, Page~{page:.4f}"]


def _open_setup(spec: ExperimentSpec):
    from .open_system import JumpChannelSet

    H, basis = _hamiltonian(spec)
    jumps = JumpChannelSet(spec.gamma_d, spec.gamma_e).operators(basis)
    obs = _observables(spec, basis) or {"Mz": observable(basis, "Mz")}
    return H, basis, jumps, obs


def cmd_lindblad(spec: ExperimentSpec):
    from .open_system import evolve_lindblad

    H, basis, jumps, obs = _open_setup(spec)
    ts = evolve_lindblad(H, jumps, _initial(spec, basis), spec.tmax, spec.dt, obs, n_samples=spec.samples)
    paths = _write_series(spec, ts, {"basis_dim": basis.dim})
    return paths, [f"lindblad: trace drift {ts.meta['max_trace_drift']:.2e}, min eig {ts.meta['min_eigenvalue']:.2e}"]


def cmd_mcwf(spec: ExperimentSpec):
    from .open_system import trajectory_average

    H, basis, jumps, obs = _open_setup(spec)
    ts = trajectory_average(
        H, jumps, _initial(spec, basis), spec.tmax, spec.n_traj, spec.seed, spec.dt, obs,
        n_samples=spec.samples, keep_trajectories=spec.dump,
    )
    paths = _write_series(spec, ts, {"basis_dim": basis.dim})
    if spec.dump:
        out = Path(spec.out) / "trajectories"
        for i in range(spec.n_traj):
            cols = {k: v[:, i] for k, v in ts.trajectories.items()}
            paths.append(TimeSeries(ts.times, cols).to_csv(out / f"traj_{i:05d}.csv", sidecar=False))
    return paths, [f"mcwf: {spec.n_traj} trajectories, {ts.meta['n_jumps']} jumps"]


def cmd_agp(spec: ExperimentSpec):
    from .spectral import agp_norm, default_zeta

    lat = spec.lattice()
    basis = enumerate_basis(lat)
    H = build_pxp_z(basis, spec.omega, _profile(spec, lat))
    zeta = spec.zeta if spec.zeta is not None else default_zeta(lat.n_sites, basis.dim)
    val = agp_norm(H, observable(basis, "dH"), zeta)
    data = {"agp_norm": val, "agp_norm_per_site": val / lat.n_sites, "zeta": zeta}
    path = _write_json(Path(spec.out) / "agp.json", {**data, "meta": _meta(spec, basis_dim=basis.dim)})
    return [path], [f"agp: |A|^2/N = {val / lat.n_sites:.6g} (zeta={zeta:.4g})"]


HANDLERS = {
    "basis": cmd_basis,
    "quench": cmd_quench,
    "floquet": cmd_floquet,
    "spectrum": cmd_spectrum,
    "sw": cmd_sw,
    "ensemble": cmd_ensemble,
    "entropy": cmd_entropy,
    "lindblad": cmd_lindblad,
    "mcwf": cmd_mcwf,
    "agp": cmd_agp,
}


def run(spec: ExperimentSpec) -> tuple[list[Path], list[str]]:
    """Validate and execute a spec; returns written paths and summary lines."""
    spec.validate()
    return HANDLERS[spec.command](spec)


# ---------------------------------------------------------------- figure cookbook

FIGURES = {
    "fig1": "N/A: lattice schematic",
    "fig1-phases": "N/A: schematic of dynamical regimes versus detuning",
    "fig2": "sw --geometry 8x2 --delta 1 --order 4 ; sw --geometry 8x2 --delta 3 --order 4",
    "fig3-top": "spectrum --geometry 8x2 --delta 1 --kx 1 --ky 1 ; spectrum --geometry 8x2 --delta 2 --kx 1 --ky 1",
    "fig3-bottom": "spectrum --geometry 8x2 --eta 0.1 --realizations 100 --delta D  (sweep D over 0.5..5)",
    "fig4": "quench --geometry 8x2 --delta 2 --state xooxoxoo/ooooxooo --tmax 100 --obs Q1",
    "fig5": "ensemble --geometry 8x2 --delta 5 --state 1P --obs h1_1 ; quench --geometry 8x2 --delta 5 --state 1P --tmax 150 --obs h1_1",
    "fig6": "ensemble --geometry 8x2 --delta D --state Z4_1 --obs Q1  (sweep D)",
    "fig7": "quench --geometry 8x2 --delta 4 --state 1P --tmax 50 --obs MI_h MI_v",
    "fig8": "entropy --geometry 8x2 --delta D --cut LR --sectors ; entropy --geometry 8x2 --delta D --cut UD --sectors",
    "fig9": "floquet --protocol I --delta 1 --tau 1 --cycles 20 --state Z2 (also vac, AR)",
    "fig10": "floquet --protocol I --delta 1 --tau 1 --cycles 20 --epsilon 0.1 --state Z2",
    "fig11": "quench --geometry 6x2 --v0 10 --mode full_unconstrained --state Z2 --tmax 20 ; same with --mode blockaded_pxp",
    "fig12": "quench --geometry 12x1 --v0 10 --mode full_unconstrained --state Z2 --tmax 20 ; same with --mode blockaded_pxp",
    "fig13": "quench --geometry 6x2 --delta 1 --v0 12 --mode NN2_only --state Z2 --method RK4 ; also NN12, full_unconstrained",
    "fig14": "floquet --protocol II --delta0 0.5 --tau 1 --cycles 10 --state vac",
    "fig15": "lindblad --geometry 4x2 --delta 0 --state Z2 --gamma-d 0.2 --tmax 50 --obs Mz",
    "fig16": "lindblad --geometry 4x2 --delta 1 --state Z2 --gamma-e 0.1 --tmax 50 --obs Mz",
    "fig17": "lindblad --geometry 4x2 --delta 4 --state Z2 --gamma-d 0.1 --tmax 20 --obs Q1 ; same with --gamma-e 0.1 ; also --state vac",
    "fig18": "mcwf --geometry 4x2 --delta 5 --state 1P --gamma-d 0.1 --tmax 20 --n-traj 20 --dump --obs Q1 Q2 Q3 Q4",
    "fig19": "agp --geometry Lx2 --delta D  (sweep L in 4,6,8 and D in 0.5,5)",
    "fig-3leg": "quench --geometry 6x3 --delta 1 --state 1P --tmax 20",
    "fig-2d": "quench --geometry 4x4 --v0 10 --mode full_unconstrained --state Z2 --method RK4 --tmax 10",
}


def list_figures() -> str:
    """Cookbook text: one line per figure key."""
    width = max(len(k) for k in FIGURES)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in FIGURES.items())


# ---------------------------------------------------------------- argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _geometry_args(p):
    p.add_argument("--geometry", default="8x2", help="COLSxLEGS, e.g. 8x2 (ladder), 12x1 (chain)")
    p.add_argument("--obc-x", action="store_true", dest="obc_x")
    p.add_argument("--obc-y", action="store_true", dest="obc_y")
    p.add_argument("--out", default="rydladder_out")
    p.add_argument("--jobs", type=int, default=1)


def _model_args(p):
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--profile", choices=PROFILES, default="staggered")
    p.add_argument("--seed", type=int, default=0)


def _state_args(p, default="Z2"):
    p.add_argument("--state", default=default, help=f"named ({', '.join(NAMED_STATES)}) or text like oxox/xoxo")
    p.add_argument("--obs", nargs="*", default=[], help="Mz N Zpi Q<j> h<j>_<a> sz<j>_<a> n<j>_<a> E S_LR S_UD MI_h MI_v")


def _time_args(p, dt=1e-3):
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=dt)
    p.add_argument("--samples", type=int, default=201)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rydladder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("basis", help="Hilbert-space and sector dimensions")
    _geometry_args(p)
    p.add_argument("--sectors", action="store_true")
    p.add_argument("--dump", action="store_true", help="write basis.txt, one state per line")

    p = sub.add_parser("quench", help="closed-system quench")
    _geometry_args(p)
    _model_args(p)
    _state_args(p)
    _time_args(p)
    p.add_argument("--method", choices=("ED", "RK4"), default="ED")
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--mode", choices=LONGRANGE_MODES, default="blockaded_pxp")

    p = sub.add_parser("floquet", help="Floquet protocols 0, I, II")
    _geometry_args(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--delta0", type=float, default=0.5)
    _state_args(p)
    p.add_argument("--protocol", choices=("0", "I", "II"), default="I")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--cycles", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--variant", choices=("C1", "C2"), default="C1")
    p.add_argument("--substeps", type=int, default=20)
    p.add_argument("--method", choices=("ED", "RK4"), default="ED")
    p.add_argument("--dt", type=float, default=1e-3)

    p = sub.add_parser("spectrum", help="level statistics (disorder-averaged when --eta > 0)")
    _geometry_args(p)
    _model_args(p)
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--kx", type=int, default=0)
    p.add_argument("--ky", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)

    p = sub.add_parser("sw", help="Schrieffer-Wolff spectra versus exact")
    _geometry_args(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=3.0)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--sw-method", dest="sw_method", choices=("canonical", "single"), default="canonical")
    p.add_argument("--dump", action="store_true", help="write the labelled eigenstates of the second-order model")

    p = sub.add_parser("ensemble", help="GE / GGE fits and diagonal-ensemble values")
    _geometry_args(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=5.0)
    _state_args(p, "1P")
    p.add_argument("--frame", choices=("sw", "lab"), default="sw")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("entropy", help="eigenstate entanglement scan")
    _geometry_args(p)
    _model_args(p)
    p.add_argument("--cut", choices=("LR", "UD"), default="LR")
    p.add_argument("--sectors", action="store_true", help="restrict to the (kx, ky) sector")
    p.add_argument("--kx", type=int, default=0)
    p.add_argument("--ky", type=int, default=0)

    for name, helptext in (("lindblad", "Lindblad master equation"), ("mcwf", "quantum trajectories")):
        p = sub.add_parser(name, help=helptext)
        _geometry_args(p)
        _model_args(p)
        _state_args(p)
        _time_args(p, dt=1e-2)
        p.add_argument("--gamma-d", dest="gamma_d", type=float, default=0.0)
        p.add_argument("--gamma-e", dest="gamma_e", type=float, default=0.0)
        if name == "mcwf":
            p.add_argument("--n-traj", dest="n_traj", type=int, default=100)
            p.add_argument("--dump", action="store_true", help="write one CSV per trajectory")

    p = sub.add_parser("agp", help="regularised AGP norm")
    _geometry_args(p)
    _model_args(p)
    p.add_argument("--zeta", type=float, default=None)

    p = sub.add_parser("figures", help="list the figure cookbook")
    p.add_argument("name", nargs="?")

    p = sub.add_parser("replay", help="re-run a recorded spec")
    p.add_argument("meta", help="path to a *.meta.json or basis.json file")
    p.add_argument("--out", default=None)
    return parser


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        data = vars(args)
        if args.command == "figures":
            if args.name:
                if args.name not in FIGURES:
                    raise ValidationError(f"unknown figure {args.name!r}")
                print(f"{args.name}  {FIGURES[args.name]}")
            else:
                print(list_figures())
            return EXIT_OK
        if args.command == "replay":
            meta = json.loads(Path(args.meta).read_text())
            stored = meta.get("spec") or meta.get("meta", {}).get("spec")
            if stored is None:
                raise ValidationError("no spec found in metadata")
            spec = ExperimentSpec.from_dict(stored)
            if args.out:
                spec.out = args.out
        else:
            spec = ExperimentSpec.from_dict(data)
        paths, lines = run(spec)
        for line in lines:
            print(line)
        for p in paths:
            print(f"wrote {p}")
        return EXIT_OK
    except ValidationError as exc:
        return _error("validation", str(exc), EXIT_VALIDATION)
    except NumericalDriftError as exc:
        return _error("numerical", str(exc), EXIT_NUMERIC)
    except (ResourceCapError, MemoryError) as exc:
        return _error("resource", str(exc), EXIT_RESOURCE)
    except (ValueError, KeyError, IndexError) as exc:
        return _error("validation", str(exc), EXIT_VALIDATION)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
