"""Builders for the drive, atom-cavity, and cascaded Hamiltonians and jump operators.

Conventions:
  * hbar = 1; all rates in units of the chosen base rate (kappa = 1 in the
    transfer problems, the trap frequency scale in the two-mode problems).
  * Constant energy shifts (zero-point energies, -E^2/Delta terms) are dropped.
  * "rotating" frame = interaction picture of the free mode energies; every
    residual oscillating term is retained with an explicit phase factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConsistencyError
from .fock import (
    FockSpace,
    Operator,
    destroy,
    number,
    position_exponential,
    position_quadrature,
)
from .timedep import Term, TimeDependentOperator

__all__ = [
    "TwoModeDriveParams",
    "AtomCavityParams",
    "CollectiveIonParams",
    "build_two_mode_drive",
    "effective_mixer",
    "effective_squeezer",
    "chi_coupling",
    "build_atom_cavity",
    "build_cascaded_effective",
    "build_collective_ion",
    "collective_mode_map",
    "adiabatic_collective_rate",
]


# ---------------------------------------------------------------------------
# parameter records


@dataclass(frozen=True)
class TwoModeDriveParams:
    """Counterpropagating-beam drive of two orthogonal motional modes."""

    nu_x: float
    nu_z: float
    eta_x_p: float  # projected Lamb-Dicke parameter alpha * eta_x
    eta_z_p: float  # projected Lamb-Dicke parameter beta * eta_z
    drive_strength_sq_over_det: float  # E^2 / Delta_01
    delta_21: float  # laser-laser detuning
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.eta_x_p < 0.5 and 0.0 < self.eta_z_p < 0.5):
            raise ValueError("projected Lamb-Dicke parameters must lie in (0, 0.5)")
        if self.nu_x <= 0 or self.nu_z <= 0:
            raise ValueError("trap frequencies must be positive")


@dataclass(frozen=True)
class AtomCavityParams:
    """Single trapped atom coupled to one cavity mode via a far-detuned drive."""

    nu_x: float
    delta_cA: float
    eta_x: float
    g0_sq_over_det: float  # g0^2 / Delta_0A
    kappa: float
    phi_A: float = 0.0
    g0_EA_over_det: float | Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.nu_x <= 0:
            raise ValueError("nu_x must be positive")
        if not (0.0 < self.eta_x < 0.5):
            raise ValueError("eta_x must lie in (0, 0.5)")

    @property
    def rwa_ratio(self) -> float:
        """nu_x / kappa; the rotating-wave regime needs this to be large."""
        return self.nu_x / self.kappa


_COLLECTIVE_CASES = ("mix0", "sq0", "mixR", "sqR")


@dataclass(frozen=True)
class CollectiveIonParams:
    """Laser coupling of a single-ion x mode to a two-ion collective z mode."""

    nu_x: float
    nu_z: float
    eta_x: float
    eta_z: float
    alpha: float  # beam-geometry projection onto x
    beta: float  # beam-geometry projection onto z
    drive_strength_sq_over_det: float
    case: str  # mix0 | sq0 | mixR | sqR
    phi: float = 0.0

    def __post_init__(self):
        if self.case not in _COLLECTIVE_CASES:
            raise ValueError(f"case must be one of {_COLLECTIVE_CASES}")

    @property
    def eta_0z(self) -> float:
        return self.eta_z / math.sqrt(2.0)

    @property
    def eta_Rz(self) -> float:
        return self.eta_z / math.sqrt(2.0 * math.sqrt(3.0))

    @property
    def nu_0z(self) -> float:
        return self.nu_z

    @property
    def nu_Rz(self) -> float:
        return math.sqrt(3.0) * self.nu_z

    @property
    def delta_21(self) -> float:
        nu_c = self.nu_0z if self.case.endswith("0") else self.nu_Rz
        return self.nu_x - nu_c if self.case.startswith("mix") else self.nu_x + nu_c


# ---------------------------------------------------------------------------
# two-mode laser drive


def _drive_exponential(space: FockSpace, eta_x_p: float, eta_z_p: float) -> sp.csr_matrix:
    """exp(+2i (eta_x' X_x + eta_z' X_z)); the two mode factors commute."""
    ux = position_exponential(space, 0, 2j * eta_x_p).mat
    uz = position_exponential(space, 1, 2j * eta_z_p).mat
    return (ux @ uz).tocsr()


def build_two_mode_drive(
    params: TwoModeDriveParams, space: FockSpace, frame: str = "rotating"
) -> TimeDependentOperator:
    """Adiabatic drive Hamiltonian for the two-mode mixing/squeezing scheme.

    The |E_L|^2 cross term cos(2k(alpha x + beta z) - delta_21 t + phi) is built
    from the fixed unitary U+ = exp(2ik(alpha x + beta z)) and its adjoint,
    each carrying a scalar phase per evaluation time.
    """
    if space.nmodes != 2:
        raise ValueError("two-mode drive needs a two-mode space")
    if frame not in ("lab", "rotating"):
        raise ValueError("frame must be 'lab' or 'rotating'")
    eps = params.drive_strength_sq_over_det
    uplus = _drive_exponential(space, params.eta_x_p, params.eta_z_p)
    c = -eps * np.exp(1j * params.phi)
    terms = [
        Term(c * uplus, omega=-params.delta_21),
        Term(np.conj(c) * uplus.getH().tocsr(), omega=+params.delta_21),
    ]
    drive = TimeDependentOperator(space, terms)
    if frame == "lab":
        h0 = params.nu_x * number(space, 0) + params.nu_z * number(space, 1)
        return TimeDependentOperator.static(h0) + drive
    return drive.rotated((params.nu_x, params.nu_z))


def effective_mixer(chi: float, phi: float, space: FockSpace) -> Operator:
    """Beamsplitter interaction chi (b_x† b_z e^{i phi} + h.c.)."""
    if space.nmodes != 2:
        raise ValueError("mixer needs a two-mode space")
    bx, bz = destroy(space, 0), destroy(space, 1)
    m = chi * (np.exp(1j * phi) * (bx.dag().mat @ bz.mat))
    return Operator(space, m + m.getH(), hermitian=True)


def effective_squeezer(chi: float, phi: float, space: FockSpace) -> Operator:
    """Nondegenerate parametric interaction chi (b_x† b_z† e^{i phi} + h.c.)."""
    if space.nmodes != 2:
        raise ValueError("squeezer needs a two-mode space")
    bx, bz = destroy(space, 0), destroy(space, 1)
    m = chi * (np.exp(1j * phi) * (bx.dag().mat @ bz.dag().mat))
    return Operator(space, m + m.getH(), hermitian=True)


def chi_coupling(params: TwoModeDriveParams) -> float:
    """Effective two-mode coupling rate 4 eta_x' eta_z' E^2 / Delta_01."""
    return 4.0 * params.eta_x_p * params.eta_z_p * params.drive_strength_sq_over_det


# ---------------------------------------------------------------------------
# atom-cavity system


def _sine_matrices(space: FockSpace, mode: int, eta: float, truncation: str):
    """sin(k x) and sin^2(k x) on the motional mode, exact or Lamb-Dicke truncated.

    Third-order truncation: sin = eta X - eta^3 X^3 / 6; sin^2 keeps eta^2 X^2.
    """
    x = position_quadrature(space, mode).mat
    if truncation == "exact":
        u = position_exponential(space, mode, 1j * eta).mat
        s = ((u - u.getH()) / 2j).tocsr()
        s2 = (s @ s).tocsr()
    elif truncation == "third_order":
        x3 = (x @ x @ x).tocsr()
        s = (eta * x - (eta**3 / 6.0) * x3).tocsr()
        s2 = (eta**2 * (x @ x)).tocsr()
    else:
        raise ValueError("truncation must be 'exact' or 'third_order'")
    return s, s2


def _atom_cavity_terms(
    params: AtomCavityParams,
    space: FockSpace,
    mot: int,
    cav: int,
    envelope,
    truncation: str,
    include_free: bool,
) -> list[Term]:
    """Lab-frame terms of one atom-cavity site, on arbitrary mode positions."""
    s, s2 = _sine_matrices(space, mot, params.eta_x, truncation)
    n_cav = number(space, cav).mat
    a = destroy(space, cav).mat
    adag = a.getH().tocsr()
    quad = (np.exp(-1j * params.phi_A) * adag + np.exp(1j * params.phi_A) * a).tocsr()
    terms = []
    if include_free:
        terms.append(Term(params.nu_x * number(space, mot).mat + params.delta_cA * n_cav))
    terms.append(Term(-params.g0_sq_over_det * (s2 @ n_cav)))
    coupling = -(s @ quad)
    if callable(envelope):
        terms.append(Term(coupling, envelope=envelope))
    else:
        terms.append(Term(float(envelope) * coupling))
    return terms


def build_atom_cavity(
    params: AtomCavityParams,
    space: FockSpace,
    envelope=None,
    truncation: str = "third_order",
    frame: str = "rotating",
) -> TimeDependentOperator:
    """Hamiltonian of one atom-cavity site on a (motion, cavity) space.

    `envelope` is the drive amplitude factor g0 E_A(t) / Delta_0A, a constant
    or a callable; defaults to params.g0_EA_over_det.
    """
    if space.nmodes != 2:
        raise ValueError("atom-cavity space must be (motion, cavity)")
    if frame not in ("lab", "rotating"):
        raise ValueError("frame must be 'lab' or 'rotating'")
    if frame == "rotating" and truncation == "exact":
        raise ValueError("the rotating frame is defined for the truncated form only")
    if envelope is None:
        envelope = params.g0_EA_over_det
    if envelope is None:
        raise ValueError("drive amplitude g0 E_A / Delta_0A not specified")
    terms = _atom_cavity_terms(
        params, space, 0, 1, envelope, truncation, include_free=(frame == "lab")
    )
    h = TimeDependentOperator(space, terms)
    if frame == "rotating":
        h = h.rotated((params.nu_x, params.delta_cA))
    return h.merged()


def build_cascaded_effective(
    params1: AtomCavityParams,
    params2: AtomCavityParams,
    pulses,
    space: FockSpace,
    truncation: str = "third_order",
    frame: str = "rotating",
) -> tuple[TimeDependentOperator, Operator]:
    """Non-Hermitian effective Hamiltonian and jump operator of the cascade.

    Space layout: (motion 1, cavity 1, cavity 2, motion 2).  `pulses` is the
    (emitter, receiver) PulseSchedule pair.  The anti-Hermitian part satisfies
    H_eff(t) - H_eff(t)† = -2i C†C at all times (checked at build).
    """
    if space.nmodes != 4:
        raise ValueError("cascade space must be (mot1, cav1, cav2, mot2)")
    if frame == "rotating" and params1.delta_cA != params2.delta_cA:
        raise ValueError("rotating cascade frame requires equal cavity detunings")
    p1, p2 = pulses
    env1 = lambda t: p1.amplitude(t, params1.kappa, params1.eta_x)  # noqa: E731
    env2 = lambda t: p2.amplitude(t, params2.kappa, params2.eta_x)  # noqa: E731
    lab = frame == "lab"
    terms = _atom_cavity_terms(params1, space, 0, 1, env1, truncation, include_free=lab)
    terms += _atom_cavity_terms(params2, space, 3, 2, env2, truncation, include_free=lab)
    k1, k2 = params1.kappa, params2.kappa
    a1 = destroy(space, 1).mat
    a2 = destroy(space, 2).mat
    cascade = (
        -1j * k1 * number(space, 1).mat
        - 1j * k2 * number(space, 2).mat
        - 2j * math.sqrt(k1 * k2) * (a2.getH() @ a1).tocsr()
    )
    terms.append(Term(cascade))
    h = TimeDependentOperator(space, terms)
    if frame == "rotating":
        freqs = (params1.nu_x, params1.delta_cA, params2.delta_cA, params2.nu_x)
        h = h.rotated(freqs)
    h = h.merged()
    jump = Operator(space, math.sqrt(k1) * a1 + math.sqrt(k2) * a2)
    _verify_cascade_identity(h, jump)
    return h, jump


def _verify_cascade_identity(h: TimeDependentOperator, jump: Operator, tol: float = 1e-12):
    cdc = (jump.mat.getH() @ jump.mat).tocsr()
    for t in (0.0, 0.37, -2.1):
        m = h.matrix(t)
        defect = abs(m - m.getH() + 2j * cdc)
        worst = float(defect.max()) if defect.nnz else 0.0
        if worst > tol:
            raise ConsistencyError(
                f"cascade identity H - H† = -2i C†C violated by {worst:.3e} at t={t}"
            )


# ---------------------------------------------------------------------------
# collective ion and many-atom modes


def build_collective_ion(params: CollectiveIonParams, space: FockSpace) -> Operator:
    """Effective mixer/squeezer between the single-ion x mode and a collective z mode."""
    eta_x_p = params.alpha * params.eta_x
    if params.case.endswith("0"):
        eta_c_p = params.beta * params.eta_0z
    else:
        eta_c_p = params.beta * params.eta_Rz
    chi = 4.0 * eta_x_p * eta_c_p * params.drive_strength_sq_over_det
    if params.case.startswith("mix"):
        return effective_mixer(chi, params.phi, space)
    return effective_squeezer(chi, params.phi, space)


def collective_mode_map(thetas) -> tuple[np.ndarray, float]:
    """Weights cos(theta_k)/sqrt(N_eff) of the cavity-coupled collective mode."""
    thetas = np.asarray(list(thetas), dtype=float)
    if thetas.size == 0:
        raise ValueError("need at least one atom")
    c = np.cos(thetas)
    n_eff = float(np.sum(c**2))
    if n_eff <= 1e-12:
        raise ValueError("all atoms sit at field nodes: N_eff = 0, mode undefined")
    return c / math.sqrt(n_eff), n_eff


def adiabatic_collective_rate(params: AtomCavityParams, thetas) -> float:
    """Collective-mode damping rate N_eff * Gamma, Gamma = (eta_x g0 E_A / Delta)^2 / kappa."""
    amp = params.g0_EA_over_det
    if amp is None or callable(amp):
        raise ValueError("adiabatic_collective_rate needs a constant drive amplitude")
    _, n_eff = collective_mode_map(thetas)
    gamma = (params.eta_x * float(amp)) ** 2 / params.kappa
    return n_eff * gamma
