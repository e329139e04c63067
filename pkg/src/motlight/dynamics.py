"""Time evolution: fixed-step RK4, master equations, and quantum trajectories.

The unravelling convention matches a master equation with dissipator
D[C]rho = 2 C rho C† - C†C rho - rho C†C (so a cavity amplitude decays as
e^{-kappa t} and the photon number as e^{-2 kappa t} for C = sqrt(kappa) a).
The effective Hamiltonian then carries the anti-Hermitian part -i C†C, the
squared norm of an unnormalized trajectory decays as d|psi|^2/dt =
-2 <C†C>, and jumps occur with probability density 2 <C†C>.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import IntegrationError
from .fock import DensityMatrix, FockSpace, Operator, StateVector
from .timedep import TimeDependentOperator

__all__ = [
    "IntegratorConfig",
    "TrajectoryRecord",
    "evolve_schrodinger",
    "evolve_master",
    "evolve_adiabatic_cascade",
    "mcwf_trajectory",
    "mcwf_ensemble",
    "transfer_fidelity_report",
    "TransferReport",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    The step is set from the fastest retained oscillation: dt = T_min /
    steps_per_period with T_min = 2 pi / omega_max.  For a static generator
    omega_max is replaced by an estimate of the spectral norm.
    """

    steps_per_period: int = 40
    dt: float | None = None  # explicit override; bypasses the period rule

    def __post_init__(self):
        if self.dt is None and self.steps_per_period < 20:
            raise ValueError("steps_per_period below 20 under-resolves the fastest phase")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")


def _time_step(h: TimeDependentOperator, config: IntegratorConfig, t_ref: float) -> float:
    if config.dt is not None:
        return config.dt
    scale = h.max_frequency
    if scale == 0.0:
        scale = float(sp.linalg.onenormest(h.matrix(t_ref)))
    if scale == 0.0:
        raise ValueError("cannot infer a time step for a zero generator; pass dt")
    return 2.0 * math.pi / scale / config.steps_per_period


def _as_timedep(h) -> TimeDependentOperator:
    if isinstance(h, Operator):
        return TimeDependentOperator.static(h)
    return h


@dataclass
class TrajectoryRecord:
    """Sampled states of a single evolution (normalization left as produced)."""

    space: FockSpace
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    jump_times: list = field(default_factory=list)

    @property
    def norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.states.conj(), self.states).real

    def state(self, i: int) -> StateVector:
        return StateVector(self.space, self.states[i])

    def final_state(self) -> StateVector:
        return self.state(len(self.times) - 1)


def _rk4_step(deriv, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = deriv(t, y)
    k2 = deriv(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = deriv(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = deriv(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _sample_grid(t0: float, t1: float, sample_times) -> np.ndarray:
    if sample_times is None:
        return np.array([t0, t1], dtype=float)
    ts = np.asarray(sample_times, dtype=float)
    if ts.size == 0 or ts[0] < t0 - 1e-12 or ts[-1] > t1 + 1e-12:
        raise ValueError("sample_times must lie within [t0, t1]")
    if not np.all(np.diff(ts) > 0):
        raise ValueError("sample_times must be strictly increasing")
    if abs(ts[0] - t0) > 1e-12:
        ts = np.concatenate(([t0], ts))
    return ts


def _integrate_segment(deriv, t0: float, t1: float, y: np.ndarray, dt: float) -> np.ndarray:
    span = t1 - t0
    if span <= 0:
        return y
    n = max(1, int(math.ceil(span / dt)))
    h = span / n
    t = t0
    for _ in range(n):
        y = _rk4_step(deriv, t, y, h)
        t += h
    return y


def evolve_schrodinger(
    h,
    psi0: StateVector,
    t0: float,
    t1: float,
    config: IntegratorConfig = IntegratorConfig(),
    sample_times=None,
) -> TrajectoryRecord:
    """Integrate i d psi/dt = H(t) psi; H may be non-Hermitian (no-jump runs)."""
    h = _as_timedep(h)
    if h.space != psi0.space:
        raise ValueError("state and Hamiltonian live on different spaces")
    compiled = h.compiled()
    deriv = lambda t, y: -1j * compiled.apply(t, y)  # noqa: E731
    dt = _time_step(h, config, t0)
    ts = _sample_grid(t0, t1, sample_times)
    out = np.empty((len(ts), psi0.space.dim), dtype=complex)
    y = np.array(psi0.amplitudes, dtype=complex)
    out[0] = y
    for i in range(1, len(ts)):
        y = _integrate_segment(deriv, ts[i - 1], ts[i], y, dt)
        out[i] = y
    return TrajectoryRecord(psi0.space, ts, out)


# ---------------------------------------------------------------------------
# master equations (dense; intended for modest dimensions)


def evolve_master(
    h,
    collapse_ops,
    rho0: DensityMatrix,
    t0: float,
    t1: float,
    config: IntegratorConfig = IntegratorConfig(),
    sample_times=None,
):
    """Integrate the Lindblad-form master equation with dissipator
    D[C]rho = 2 C rho C† - C†C rho - rho C†C.

    Returns (times, list of DensityMatrix).

    The density matrix is dense but the Hamiltonian terms and collapse
    operators stay sparse, so the cost per step scales with nnz(H) * dim.
    """
    h = _as_timedep(h)
    dim = h.space.dim
    if dim > 1200:
        warnings.warn(f"master equation at dim {dim}; memory is dim^2 complex")
    compiled = h.compiled()
    mats = [t.matrix for t in h.merged().terms]
    cs = [c.mat.tocsr() for c in collapse_ops]
    cdags = [c.getH().tocsr() for c in cs]
    cdcs = [(cd @ c).tocsr() for cd, c in zip(cdags, cs)]

    def deriv(t, r):
        r = r.reshape(dim, dim)
        coeffs = compiled.coefficients(t)
        hm = mats[0] * coeffs[0]
        for c, m in zip(coeffs[1:], mats[1:]):
            hm = hm + c * m
        hdag = hm.getH().tocsr()
        # rho @ M computed as (M^T @ rho^T)^T to keep sparse on the left
        dr = -1j * ((hm @ r) - (hdag.T @ r.T).T)
        for c, cd, cdc in zip(cs, cdags, cdcs):
            dr += 2.0 * (cd.T @ (c @ r).T).T - cdc @ r - (cdc.T @ r.T).T
        return dr.reshape(-1)

    dt = _time_step(h, config, t0)
    ts = _sample_grid(t0, t1, sample_times)
    y = np.asarray(rho0.entries, dtype=complex).reshape(-1)
    out = [DensityMatrix(h.space, y.reshape(dim, dim).copy())]
    for i in range(1, len(ts)):
        y = _integrate_segment(deriv, ts[i - 1], ts[i], y, dt)
        out.append(DensityMatrix(h.space, y.reshape(dim, dim).copy()))
    return ts, out


def evolve_adiabatic_cascade(
    space: FockSpace,
    rate1,
    rate2,
    rho0: DensityMatrix,
    t0: float,
    t1: float,
    config: IntegratorConfig = IntegratorConfig(dt=None, steps_per_period=40),
    delta_phi: float = 0.0,
    sample_times=None,
    dt: float | None = None,
):
    """Two-motional-mode master equation after adiabatic cavity elimination.

    Mode 0 is the emitting motional mode (time-dependent decay rate
    rate1(t)), mode 1 the receiving one (rate2(t)).  The one-way coupling
    enters as

        2 sqrt(G1 G2) ( [b2†, b1 rho] e^{-i dphi} + [rho b1†, b2] e^{+i dphi} )

    with dphi the difference of the two drive phases; with matched sigmoid
    pulses this transfers an arbitrary mode-0 state onto mode 1 exactly.
    """
    if space.nmodes != 2:
        raise ValueError("adiabatic cascade needs a two-mode space")
    from .fock import destroy

    dim = space.dim
    b1 = destroy(space, 0).mat.tocsr()
    b2 = destroy(space, 1).mat.tocsr()
    b1d, b2d = b1.getH().tocsr(), b2.getH().tocsr()
    n1, n2 = (b1d @ b1).tocsr(), (b2d @ b2).tocsr()
    ph = np.exp(1j * delta_phi)

    def right(m, r):
        # r @ m with the sparse factor kept on the left
        return (m.T @ r.T).T

    def deriv(t, r):
        r = r.reshape(dim, dim)
        g1, g2 = max(float(rate1(t)), 0.0), max(float(rate2(t)), 0.0)
        b1r = b1 @ r
        dr = g1 * (2.0 * right(b1d, b1r) - n1 @ r - right(n1, r))
        dr += g2 * (2.0 * right(b2d, b2 @ r) - n2 @ r - right(n2, r))
        g12 = 2.0 * math.sqrt(g1 * g2)
        if g12:
            rb1d = right(b1d, r)
            dr += g12 * np.conj(ph) * (b2d @ b1r - right(b2d, b1r))
            dr += g12 * ph * (right(b2, rb1d) - b2 @ rb1d)
        return dr.reshape(-1)

    if dt is None:
        if config.dt is not None:
            dt = config.dt
        else:
            # rates are monotone over the window: rate1 peaks at t1, rate2 at t0
            peak = max(abs(float(rate1(t1))), abs(float(rate2(t0))),
                       abs(float(rate1(t0))), abs(float(rate2(t1))), 1e-12)
            dt = 0.05 / peak
    ts = _sample_grid(t0, t1, sample_times)
    y = np.asarray(rho0.entries, dtype=complex).reshape(-1)
    out = [DensityMatrix(space, y.reshape(dim, dim).copy())]
    for i in range(1, len(ts)):
        y = _integrate_segment(deriv, ts[i - 1], ts[i], y, dt)
        out.append(DensityMatrix(space, y.reshape(dim, dim).copy()))
    return ts, out


# ---------------------------------------------------------------------------
# Monte Carlo wave function trajectories


def mcwf_trajectory(
    h_eff,
    jump_ops,
    psi0: StateVector,
    t0: float,
    t1: float,
    config: IntegratorConfig = IntegratorConfig(),
    rng: np.random.Generator | None = None,
    jumps: bool = True,
    sample_times=None,
) -> TrajectoryRecord:
    """One quantum trajectory under the non-Hermitian h_eff.

    With jumps=False this is a deterministic no-jump run: the returned states
    are unnormalized and norms_sq gives the no-jump survival probability.
    With jumps=True the waiting-time algorithm is used (draw u uniform, jump
    when |psi|^2 <= u, jump time localized by bisection to dt/100) and the
    recorded states are renormalized at each jump.
    """
    h_eff = _as_timedep(h_eff)
    compiled = h_eff.compiled()
    deriv = lambda t, y: -1j * compiled.apply(t, y)  # noqa: E731
    dt = _time_step(h_eff, config, t0)
    ts = _sample_grid(t0, t1, sample_times)
    y = np.array(psi0.amplitudes, dtype=complex)
    out = np.empty((len(ts), psi0.space.dim), dtype=complex)
    out[0] = y
    jump_mats = [op.mat for op in jump_ops]
    record = TrajectoryRecord(psi0.space, ts, out)

    if not jumps:
        for i in range(1, len(ts)):
            y = _integrate_segment(deriv, ts[i - 1], ts[i], y, dt)
            _check_norm(y)
            out[i] = y
        return record

    if rng is None:
        rng = np.random.default_rng()
    u = rng.random()
    i_next = 1
    t = ts[0]
    while i_next < len(ts):
        t_stop = ts[i_next]
        while t < t_stop - 1e-12 * max(1.0, abs(t_stop)):
            step = min(dt, t_stop - t)
            y_new = _rk4_step(deriv, t, y, step)
            if _norm_sq(y_new) <= u:
                t_jump, y = _locate_jump(deriv, t, y, step, u, dt / 100.0)
                y = _apply_jump(jump_mats, y, rng)
                record.jump_times.append(t_jump)
                t = t_jump
                u = rng.random()
            else:
                y = y_new
                t += step
        _check_norm(y)
        out[i_next] = y
        i_next += 1
    return record


def _norm_sq(y: np.ndarray) -> float:
    return float(np.vdot(y, y).real)


def _check_norm(y: np.ndarray):
    n = _norm_sq(y)
    if n < 1e-14:
        raise IntegrationError(
            "trajectory norm underflow (survival probability < 1e-14); "
            "the no-jump branch is numerically exhausted"
        )


def _locate_jump(deriv, t: float, y: np.ndarray, step: float, u: float, tol: float):
    """Bisection for the time within [t, t+step] where |psi|^2 crosses u."""
    lo, hi = 0.0, step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        y_mid = _rk4_step(deriv, t, y, mid)
        if _norm_sq(y_mid) <= u:
            hi = mid
        else:
            lo = mid
    y_jump = _rk4_step(deriv, t, y, hi) if hi > 0 else y
    return t + hi, y_jump


def _apply_jump(jump_mats, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    candidates = [m @ y for m in jump_mats]
    weights = np.array([_norm_sq(c) for c in candidates])
    total = weights.sum()
    if total <= 0:
        raise IntegrationError("jump triggered but all jump channels annihilate the state")
    k = int(rng.choice(len(candidates), p=weights / total))
    c = candidates[k]
    return c / math.sqrt(_norm_sq(c))


def mcwf_ensemble(
    h_eff,
    jump_ops,
    psi0: StateVector,
    t0: float,
    t1: float,
    ntraj: int,
    seed=None,
    config: IntegratorConfig = IntegratorConfig(),
    sample_times=None,
):
    """Average ntraj trajectories into density matrices at the sample times.

    Seeding uses numpy SeedSequence spawning, so results are reproducible for
    a given (seed, ntraj) and independent across trajectories.
    """
    if ntraj < 1:
        raise ValueError("ntraj must be at least 1")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(ntraj)
    ts = _sample_grid(t0, t1, sample_times)
    dim = psi0.space.dim
    acc = np.zeros((len(ts), dim, dim), dtype=complex)
    all_jumps = []
    for child in children:
        rec = mcwf_trajectory(
            h_eff,
            jump_ops,
            psi0,
            t0,
            t1,
            config=config,
            rng=np.random.default_rng(child),
            jumps=True,
            sample_times=sample_times,
        )
        all_jumps.append(rec.jump_times)
        for i in range(len(ts)):
            y = rec.states[i]
            n = _norm_sq(y)
            if n > 0:
                acc[i] += np.outer(y, y.conj()) / n
    acc /= ntraj
    rhos = [DensityMatrix(psi0.space, acc[i]) for i in range(len(ts))]
    return ts, rhos, all_jumps


# ---------------------------------------------------------------------------
# transfer bookkeeping


@dataclass(frozen=True)
class TransferReport:
    """Outcome of a no-jump state-transfer run."""

    final_norm_sq: float  # no-jump survival probability
    fidelity: float  # overlap of the renormalized final state with the target
    duration: float


def transfer_fidelity_report(record: TrajectoryRecord, target: StateVector) -> TransferReport:
    y = record.states[-1]
    n = _norm_sq(y)
    if n <= 0:
        raise ValueError("final state has zero norm")
    tgt = np.asarray(target.normalized().amplitudes)
    fid = abs(np.vdot(tgt, y)) ** 2 / n
    return TransferReport(
        final_norm_sq=n,
        fidelity=float(fid),
        duration=float(record.times[-1] - record.times[0]),
    )
