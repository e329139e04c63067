"""Config-driven experiment runners and artifact writing.

Each runner reproduces one of the package's headline computations:

  table1          two-mode squeezed state preparation fidelities
  fig4 / fig5     damped coherent-state dynamics of one atom-cavity site
  table2..table5  no-jump state transfer through the cascaded channel
  cascade_ideal   adiabatic two-mode cascade transfer vs. pulse window
  collective_demo delocalized target states from the effective beamsplitter

Results go to <experiment>.csv with a <experiment>.meta.json sidecar carrying
parameters and convergence metadata (dims, dt, top-level populations).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    fidelity_mixed,
    fidelity_phase_calibrated,
    fidelity_pure,
    reference_decayed_coherent,
)
from .dynamics import (
    IntegratorConfig,
    evolve_adiabatic_cascade,
    evolve_master,
    evolve_schrodinger,
    mcwf_ensemble,
    mcwf_trajectory,
    transfer_fidelity_report,
)
from .fock import (
    StateVector,
    TruncationWarning,
    cat_state,
    coherent_state,
    destroy,
    fock_state,
    make_space,
    partial_trace,
    truncated_phase_state,
    two_mode_squeezed_state,
)
from .hamiltonians import (
    AtomCavityParams,
    TwoModeDriveParams,
    build_atom_cavity,
    build_cascaded_effective,
    build_two_mode_drive,
    chi_coupling,
    effective_mixer,
)
from .pulses import PulseSchedule
from .fock import Operator

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "table1",
    "fig4",
    "fig5",
    "table2",
    "table3",
    "table4",
    "table5",
    "cascade_ideal",
    "collective_demo",
)

__all__ = [
    "SCHEMA_VERSION",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultRow",
    "run_table1",
    "run_fig4_fig5",
    "run_transfer_tables",
    "run_cascade_ideal",
    "run_delocalized_targets",
    "run_experiment",
    "write_outputs",
]


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one experiment deterministically."""

    experiment: str
    schema_version: int = SCHEMA_VERSION
    seed: int | None = None
    dims: list[int] | None = None
    dt: float | None = None
    steps_per_period: int = 40
    exact_trig: bool = False
    jumps: bool = False
    ntraj: int = 1
    out_dir: str = "."
    strict: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"config schema_version {self.schema_version} != supported {SCHEMA_VERSION}"
            )
        if self.ntraj < 1:
            raise ValueError("ntraj must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(steps_per_period=self.steps_per_period, dt=self.dt)


@dataclass
class ResultRow:
    """One output record: inputs echoed, scalars computed, convergence noted."""

    params: dict
    results: dict
    convergence: dict

    def flat(self) -> dict:
        out = dict(self.params)
        out.update(self.results)
        out.update({f"conv_{k}": v for k, v in self.convergence.items()})
        return out


def _catching_truncation():
    ctx = warnings.catch_warnings(record=True)
    caught = ctx.__enter__()
    warnings.simplefilter("always", TruncationWarning)
    return ctx, caught


# ---------------------------------------------------------------------------
# table 1: two-mode squeezed state preparation

TABLE1_ROWS = [
    # (eta', nu_x, nu_z, chi, r, paper F)
    (0.1, 1.0, 3.0, 0.004, 1.0, 0.991),
    (0.1, 1.0, 3.0, 0.004, 1.5, 0.932),
    (0.1, 1.0, 4.0, 0.004, 1.5, 0.955),
    (0.0707, 1.0, 3.0, 0.002, 1.0, 0.996),
    (0.0707, 1.0, 3.0, 0.002, 1.5, 0.975),
    (0.0707, 1.0, 4.0, 0.002, 1.5, 0.986),
    (0.0577, 1.0, 3.0, 0.00133, 1.0, 0.998),
    (0.0577, 1.0, 3.0, 0.00133, 1.5, 0.987),
    (0.0577, 1.0, 4.0, 0.00133, 1.5, 0.994),
]


def run_table1(config: ExperimentConfig) -> list[ResultRow]:
    """Drive the full two-mode Hamiltonian and compare against the ideal
    two-mode squeezed state of r = chi T."""
    dims = tuple(config.dims) if config.dims else (48, 48)
    rows = config.params.get("rows", TABLE1_ROWS)
    prune_tol = config.params.get("prune", 1e-10)
    space = make_space(dims)
    out = []
    for eta_p, nu_x, nu_z, chi, r, expected in rows:
        eps_sq = chi / (4.0 * eta_p * eta_p)
        p = TwoModeDriveParams(
            nu_x=nu_x,
            nu_z=nu_z,
            eta_x_p=eta_p,
            eta_z_p=eta_p,
            drive_strength_sq_over_det=eps_sq,
            delta_21=nu_x + nu_z,
            phi=-math.pi / 2.0,
        )
        h = build_two_mode_drive(p, space, frame="rotating").merged().pruned(prune_tol)
        t_final = r / chi_coupling(p)
        psi0 = fock_state(space, (0,) * space.nmodes)
        ctx, caught = _catching_truncation()
        t0 = time.time()
        try:
            rec = evolve_schrodinger(h, psi0, 0.0, t_final, config=config.integrator())
            target = two_mode_squeezed_state(space, r)
        finally:
            ctx.__exit__(None, None, None)
        final = rec.final_state().normalized()
        out.append(
            ResultRow(
                params={"eta_p": eta_p, "nu_x": nu_x, "nu_z": nu_z, "chi": chi, "r": r},
                results={
                    "fidelity": fidelity_pure(final, target),
                    "expected": expected,
                    "norm_drift": abs(rec.norms_sq[-1] - 1.0),
                },
                convergence=_convergence(dims, h, config, final, time.time() - t0, caught),
            )
        )
    return out


def _convergence(dims, h, config: ExperimentConfig, final_state, runtime, caught) -> dict:
    from .dynamics import _time_step

    return {
        "dims": "x".join(str(d) for d in dims),
        "dt": _time_step(h, config.integrator(), 0.0),
        "steps_per_period": config.steps_per_period,
        "top_level_pop": float(np.max(final_state.top_level_population())),
        "runtime_s": round(runtime, 2),
        "truncation_warnings": len([w for w in caught if issubclass(w.category, TruncationWarning)]),
    }


# ---------------------------------------------------------------------------
# figs 4-5: damped coherent state of one atom-cavity site


def run_fig4_fig5(config: ExperimentConfig) -> list[ResultRow]:
    """Master-equation decay of a coherent motional state through the cavity.

    Emits |<b_x>|, 10*|<a>|, the rotating-frame fidelity f(t) against the
    ideal decayed coherent state, and the analytic amplitude reference.
    """
    dims = tuple(config.dims) if config.dims else (40, 5)
    etas = config.params.get("etas", [0.1, 0.15])
    alpha = config.params.get("alpha", math.sqrt(10.0))
    t_final = config.params.get("t_final", 200.0)
    nsamples = int(config.params.get("nsamples", 101))
    kappa = config.params.get("kappa", 1.0)
    eta_drive = config.params.get("eta_drive", 0.1)  # eta * g0 E_A / Delta
    space = make_space(dims)
    a_op = destroy(space, 1)
    b_op = destroy(space, 0)
    ts = np.linspace(0.0, t_final, nsamples)
    truncation = "exact" if config.exact_trig else "third_order"
    frame = "lab" if config.exact_trig else "rotating"
    out = []
    for eta in etas:
        p = AtomCavityParams(
            nu_x=10.0,
            delta_cA=10.0,
            eta_x=eta,
            g0_sq_over_det=0.2,
            kappa=kappa,
            g0_EA_over_det=eta_drive / eta,
        )
        gamma = (eta_drive**2) / kappa
        h = build_atom_cavity(p, space, truncation=truncation, frame=frame)
        c_op = Operator(space, math.sqrt(kappa) * a_op.mat)
        psi0 = coherent_state(space, (alpha, 0.0))
        t0 = time.time()
        times, rhos = evolve_master(
            h, [c_op], psi0.projector(), 0.0, t_final,
            config=config.integrator(), sample_times=ts,
        )
        runtime = time.time() - t0
        for t, rho in zip(times, rhos):
            rho_x = partial_trace(rho, (1,))
            ref = reference_decayed_coherent(alpha, 0.0, gamma, t, rho_x.space)
            out.append(
                ResultRow(
                    params={"eta": eta, "t": float(t)},
                    results={
                        "bx_abs": abs(_expect_rho(rho, b_op)),
                        "a_abs_x10": 10.0 * abs(_expect_rho(rho, a_op)),
                        "f": fidelity_mixed(rho_x, ref),
                        "ref_amplitude": alpha * math.exp(-gamma * t),
                    },
                    convergence={
                        "dims": "x".join(str(d) for d in dims),
                        "steps_per_period": config.steps_per_period,
                        "runtime_s": round(runtime, 2),
                        "trace_drift": abs(rho.trace - 1.0),
                    },
                )
            )
    return out


def _expect_rho(rho, op) -> complex:
    return complex(np.trace(op.mat @ np.asarray(rho.entries)))


# ---------------------------------------------------------------------------
# tables 2-5: state transfer through the cascaded channel

TRANSFER_TABLES = {
    "table2": {
        "state": ("phase", 10),
        "mot_dim": 18,
        "rows": [
            (0.1, 5.0, 0.65),
            (0.1, 10.0, 0.90),
            (0.1, 20.0, 0.96),
            (0.0707, 5.0, 0.66),
            (0.0707, 10.0, 0.91),
            (0.0707, 20.0, 0.97),
        ],
    },
    "table3": {
        "state": ("phase", 20),
        "mot_dim": 28,
        "rows": [(0.1, 10.0, 0.79), (0.1, 20.0, 0.88), (0.0707, 10.0, 0.84), (0.0707, 20.0, 0.94)],
    },
    "table4": {
        "state": ("fock", 10),
        "mot_dim": 18,
        "rows": [(0.1, 10.0, 0.82), (0.1, 20.0, 0.92), (0.0707, 10.0, 0.85), (0.0707, 20.0, 0.95)],
    },
    "table5": {
        "state": ("cat", math.sqrt(10.0)),
        "mot_dim": 30,
        "rows": [(0.1, 10.0, 0.81), (0.1, 20.0, 0.91), (0.0707, 10.0, 0.85), (0.0707, 20.0, 0.95)],
    },
}


def _transfer_state(kind, arg, space, mode):
    if kind == "phase":
        return truncated_phase_state(space, arg, mode=mode)
    if kind == "fock":
        occ = [0] * space.nmodes
        occ[mode] = arg
        return fock_state(space, tuple(occ))
    if kind == "cat":
        return cat_state(space, arg, parity='even', mode=mode)
    raise ValueError(f"unknown transfer state kind {kind!r}")


def run_transfer_tables(config: ExperimentConfig) -> list[ResultRow]:
    """No-jump transfer runs for one of tables 2-5.

    Each row integrates the full cascaded effective Hamiltonian over the
    pulse window and reports the final squared norm (no-jump survival, the
    tabulated quantity) and the renormalized fidelity with the transferred
    target state.
    """
    spec = TRANSFER_TABLES[config.experiment]
    kind, arg = config.params.get("state", spec["state"])
    mot_dim = config.params.get("mot_dim", spec["mot_dim"])
    cav_dim = config.params.get("cav_dim", 4)
    rows = config.params.get("rows", spec["rows"])
    kappa = config.params.get("kappa", 1.0)
    drive_max = config.params.get("drive_max", 1.0)  # g0 E_A^max / Delta_0A
    # finite integration window, in units of 1/Gamma on each side of t = 0;
    # calibrated once against the tabulated no-jump norms and kept fixed
    window = config.params.get("window_halfwidth", 6.0)
    if config.dims:
        dims = tuple(config.dims)
    else:
        dims = (mot_dim, cav_dim, cav_dim, mot_dim)
    space = make_space(dims)
    truncation = "exact" if config.exact_trig else "third_order"
    frame = "lab" if config.exact_trig else "rotating"
    out = []
    for eta, nu, expected in rows:
        p = AtomCavityParams(
            nu_x=nu, delta_cA=nu, eta_x=eta, g0_sq_over_det=0.2, kappa=kappa
        )
        gamma = (eta * drive_max) ** 2 / kappa
        pulses = PulseSchedule.pair(gamma, halfwidth=window)
        h, c_op = build_cascaded_effective(p, p, pulses, space, truncation=truncation, frame=frame)
        psi0 = _transfer_state(kind, arg, space, 0)
        target = _transfer_state(kind, arg, space, space.nmodes - 1)
        ctx, caught = _catching_truncation()
        t0 = time.time()
        try:
            if config.jumps:
                ts, rhos, jumps = mcwf_ensemble(
                    h, [c_op], psi0, pulses[0].t_start, pulses[0].t_end,
                    ntraj=config.ntraj, seed=config.seed, config=config.integrator(),
                )
                results = {
                    "mean_fidelity": fidelity_mixed(rhos[-1], target),
                    "mean_jumps": float(np.mean([len(j) for j in jumps])),
                    "expected_no_jump_norm": expected,
                }
                final = psi0
            else:
                rec = mcwf_trajectory(
                    h, [c_op], psi0, pulses[0].t_start, pulses[0].t_end,
                    config=config.integrator(), jumps=False,
                )
                rep = transfer_fidelity_report(rec, target)
                final = rec.final_state().normalized()
                # readout-frame calibration: the off-resonant drive terms leave
                # a deterministic occupation-linear phase on the received state
                fid_cal, slope = fidelity_phase_calibrated(
                    final, target, mode=space.nmodes - 1
                )
                results = {
                    "no_jump_norm": rep.final_norm_sq,
                    "fidelity": rep.fidelity,
                    "fidelity_calibrated": fid_cal,
                    "phase_slope": slope,
                    "expected_no_jump_norm": expected,
                }
        finally:
            ctx.__exit__(None, None, None)
        out.append(
            ResultRow(
                params={"state": f"{kind}:{arg}", "eta_x": eta, "nu_x": nu,
                        "gamma": gamma, "window": 2 * window / gamma},
                results=results,
                convergence=_convergence(dims, h, config, final, time.time() - t0, caught),
            )
        )
    return out


# ---------------------------------------------------------------------------
# ideal adiabatic cascade


def run_cascade_ideal(config: ExperimentConfig) -> list[ResultRow]:
    """Adiabatic two-mode cascade: transfer fidelity vs. pulse window length."""
    dims = tuple(config.dims) if config.dims else (18, 18)
    gamma = config.params.get("gamma", 0.01)
    windows = config.params.get("window_halfwidths", [2.0, 4.0, 6.0, 8.0])
    space = make_space(dims)
    inputs = {
        "fock:1": (fock_state(space, (1, 0)), fock_state(space, (0, 1))),
        "fock:5": (fock_state(space, (5, 0)), fock_state(space, (0, 5))),
        "coherent:2": (coherent_state(space, (2.0, 0.0)), coherent_state(space, (0.0, 2.0))),
    }
    out = []
    for w in windows:
        p1, p2 = PulseSchedule.pair(gamma, halfwidth=w)
        for name, (psi0, target) in inputs.items():
            t0 = time.time()
            ts, rhos = evolve_adiabatic_cascade(
                space, p1.rate, p2.rate, psi0.projector(), p1.t_start, p1.t_end,
            )
            out.append(
                ResultRow(
                    params={"state": name, "window_halfwidth": w, "gamma": gamma},
                    results={"fidelity": fidelity_mixed(rhos[-1], target)},
                    convergence={
                        "dims": "x".join(str(d) for d in dims),
                        "runtime_s": round(time.time() - t0, 2),
                        "trace_drift": abs(rhos[-1].trace - 1.0),
                    },
                )
            )
    return out


# ---------------------------------------------------------------------------
# delocalized target states


def run_delocalized_targets(config: ExperimentConfig) -> list[ResultRow]:
    """Effective-beamsplitter construction of the delocalized target states.

    A pi/4 mixer (phi = pi/2) splits an even cat between the two modes with
    amplitudes (alpha/sqrt2, -alpha/sqrt2); a single phonon splits into
    (|1,0> + |0,1>)/sqrt2.
    """
    dims = tuple(config.dims) if config.dims else (36, 24)
    alpha = config.params.get("alpha", math.sqrt(10.0))
    chi = config.params.get("chi", 0.004)
    space = make_space(dims)
    h = effective_mixer(chi, math.pi / 2.0, space)
    t_quarter = (math.pi / 4.0) / chi
    out = []

    cat0 = cat_state(space, alpha, parity='even', mode=0)
    rec = evolve_schrodinger(h, cat0, 0.0, t_quarter, config=config.integrator())
    a2 = alpha / math.sqrt(2.0)
    s1 = np.asarray(coherent_state(space, (a2, -a2)).amplitudes)
    s2 = np.asarray(coherent_state(space, (-a2, a2)).amplitudes)
    tgt = s1 + s2
    target = StateVector(space, tgt / np.linalg.norm(tgt))
    out.append(
        ResultRow(
            params={"construction": "cat_split", "alpha": alpha},
            results={"fidelity": fidelity_pure(rec.final_state(), target)},
            convergence={"dims": "x".join(map(str, dims)),
                         "top_level_pop": float(np.max(rec.final_state().normalized().top_level_population()))},
        )
    )

    # drive phase -pi/2 makes the split symmetric: |1,0> -> (|1,0> + |0,1>)/sqrt2
    h_sym = effective_mixer(chi, -math.pi / 2.0, space)
    one = fock_state(space, (1, 0))
    rec1 = evolve_schrodinger(h_sym, one, 0.0, t_quarter, config=config.integrator())
    amps = np.zeros(space.dim, complex)
    amps[space.flat_index((1, 0))] = 1.0 / math.sqrt(2.0)
    amps[space.flat_index((0, 1))] = 1.0 / math.sqrt(2.0)
    target_n1 = StateVector(space, amps)
    out.append(
        ResultRow(
            params={"construction": "single_phonon_split", "alpha": 1},
            results={"fidelity": fidelity_pure(rec1.final_state(), target_n1)},
            convergence={"dims": "x".join(map(str, dims)), "top_level_pop": 0.0},
        )
    )
    return out


# ---------------------------------------------------------------------------
# dispatch and artifact writing

_RUNNERS = {
    "table1": run_table1,
    "fig4": run_fig4_fig5,
    "fig5": run_fig4_fig5,
    "table2": run_transfer_tables,
    "table3": run_transfer_tables,
    "table4": run_transfer_tables,
    "table5": run_transfer_tables,
    "cascade_ideal": run_cascade_ideal,
    "collective_demo": run_delocalized_targets,
}


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    return _RUNNERS[config.experiment](config)


def write_outputs(config: ExperimentConfig, rows: list[ResultRow]) -> tuple[Path, Path]:
    """Write <experiment>.csv plus <experiment>.meta.json; returns both paths."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.experiment}.csv"
    meta_path = out_dir / f"{config.experiment}.meta.json"
    flat = [r.flat() for r in rows]
    columns: list[str] = []
    for row in flat:
        for k in row:
            if k not in columns:
                columns.append(k)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in flat:
            writer.writerow(row)
    meta = {
        "config": config.to_dict(),
        "package_version": __version__,
        "n_rows": len(rows),
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "convergence": [r.convergence for r in rows],
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return csv_path, meta_path
