"""Truncated Fock-space representation: spaces, sparse operators, canonical states.

All operators are sparse complex matrices on a tensor product of truncated
harmonic-oscillator mode spaces.  Truncation is hard: the creation operator
annihilates the top Fock level of each mode.  Canonical analytic states
(coherent, squeezed, cat) are renormalized on the truncated space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg
import scipy.special

from .errors import ResourceLimitError

DEFAULT_DIM_CAP = 1_000_000
SOFT_LEAKAGE_TOL = 1e-6
HARD_LEAKAGE_CAP = 1e-3

__all__ = [
    "FockSpace",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "make_space",
    "identity",
    "destroy",
    "annihilation",
    "create",
    "number",
    "position_quadrature",
    "embed",
    "operator_exp",
    "fock_state",
    "coherent_state",
    "cat_state",
    "two_mode_squeezed_state",
    "truncated_phase_state",
    "tensor_states",
    "inner_product",
    "expectation",
    "partial_trace",
    "coherent_leakage",
]


class TruncationWarning(UserWarning):
    """Analytic state leaks non-negligibly out of the truncated basis."""


@dataclass(frozen=True)
class FockSpace:
    """Ordered list of per-mode truncation dimensions (tensor-product space)."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def nmodes(self) -> int:
        return len(self.dims)

    def occupations(self) -> np.ndarray:
        """(dim, nmodes) array mapping a flat basis index to mode occupations."""
        idx = np.arange(self.dim)
        occ = np.empty((self.dim, self.nmodes), dtype=np.int64)
        for j, n in enumerate(np.unravel_index(idx, self.dims)):
            occ[:, j] = n
        return occ

    def flat_index(self, occupations) -> int:
        return int(np.ravel_multi_index(tuple(occupations), self.dims))


def make_space(dims, labels=None, cap: int = DEFAULT_DIM_CAP) -> FockSpace:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("need at least one mode")
    if any(d < 2 for d in dims):
        raise ValueError(f"every mode dimension must be >= 2, got {dims}")
    total = 1
    for d in dims:
        total *= d
    if total > cap:
        raise ResourceLimitError(
            f"total dimension {total} exceeds cap {cap}; raise the cap explicitly if intended"
        )
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != len(dims):
            raise ValueError("labels length must match dims")
    return FockSpace(dims, labels)


class Operator:
    """Sparse complex matrix on a FockSpace, optionally flagged Hermitian."""

    __slots__ = ("space", "mat", "hermitian")

    def __init__(self, space: FockSpace, mat, hermitian: bool = False):
        mat = sp.csr_matrix(mat, dtype=complex)
        if mat.shape != (space.dim, space.dim):
            raise ValueError(f"matrix shape {mat.shape} does not match space dim {space.dim}")
        if hermitian:
            dev = abs(mat - mat.getH())
            if dev.nnz and dev.max() >= 1e-12:
                raise ValueError(f"operator flagged Hermitian deviates by {dev.max():.3e}")
        self.space = space
        self.mat = mat
        self.hermitian = bool(hermitian)

    def dag(self) -> "Operator":
        return Operator(self.space, self.mat.getH().tocsr(), self.hermitian)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.mat + other.mat, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.mat - other.mat, self.hermitian and other.hermitian)

    def __mul__(self, scale) -> "Operator":
        scale = complex(scale)
        herm = self.hermitian and scale.imag == 0.0
        return Operator(self.space, self.mat * scale, herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, (self.mat @ other.mat).tocsr(), False)
        if isinstance(other, StateVector):
            if other.space != self.space:
                raise ValueError("space mismatch")
            return StateVector(self.space, self.mat @ other.amplitudes, _normcheck=False)
        return NotImplemented

    def _check(self, other: "Operator"):
        if self.space != other.space:
            raise ValueError("operators live on different spaces")

    @property
    def nnz(self) -> int:
        return self.mat.nnz


class StateVector:
    """Pure state on a FockSpace; the 2-norm is cached at construction."""

    __slots__ = ("space", "amplitudes", "norm")

    def __init__(self, space: FockSpace, amplitudes, _normcheck: bool = True):
        amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
        if amplitudes.size != space.dim:
            raise ValueError("amplitude vector does not match space dimension")
        self.space = space
        self.amplitudes = amplitudes
        self.norm = float(np.linalg.norm(amplitudes))

    def normalized(self) -> "StateVector":
        if self.norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / self.norm)

    def projector(self) -> "DensityMatrix":
        psi = self.amplitudes
        return DensityMatrix(self.space, np.outer(psi, psi.conj()))

    def mode_population(self, mode: int) -> np.ndarray:
        """Marginal occupation distribution of one mode."""
        p = np.abs(self.amplitudes.reshape(self.space.dims)) ** 2
        axes = tuple(j for j in range(self.space.nmodes) if j != mode)
        return p.sum(axis=axes)

    def top_level_population(self) -> float:
        """Max over modes of the population in the top Fock level (truncation diagnostic)."""
        return max(float(self.mode_population(j)[-1]) for j in range(self.space.nmodes))


class DensityMatrix:
    """Trace-one positive matrix on a FockSpace (validity enforced where cheap)."""

    __slots__ = ("space", "entries")

    def __init__(self, space: FockSpace, entries):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (space.dim, space.dim):
            raise ValueError("density matrix shape does not match space")
        self.space = space
        self.entries = entries

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def mode_population(self, mode: int) -> np.ndarray:
        others = [j for j in range(self.space.nmodes) if j != mode]
        reduced = partial_trace(self, others) if others else self
        return np.real(np.diagonal(reduced.entries).copy())

    def top_level_population(self) -> float:
        return max(float(self.mode_population(j)[-1]) for j in range(self.space.nmodes))


# ---------------------------------------------------------------------------
# elementary operators


def _single_mode_destroy(d: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, format="csr", dtype=complex)


def embed(space: FockSpace, mode: int, small) -> sp.csr_matrix:
    """Tensor-embed a single-mode matrix at position `mode` (identity elsewhere)."""
    if not 0 <= mode < space.nmodes:
        raise ValueError(f"mode index {mode} out of range for {space.nmodes} modes")
    small = sp.csr_matrix(small, dtype=complex)
    if small.shape != (space.dims[mode], space.dims[mode]):
        raise ValueError("single-mode matrix does not match the mode dimension")
    out = sp.identity(1, format="csr", dtype=complex)
    for j, d in enumerate(space.dims):
        blk = small if j == mode else sp.identity(d, format="csr", dtype=complex)
        out = sp.kron(out, blk, format="csr")
    return out


def identity(space: FockSpace) -> Operator:
    return Operator(space, sp.identity(space.dim, format="csr", dtype=complex), hermitian=True)


def destroy(space: FockSpace, mode: int) -> Operator:
    """Annihilation operator b for one mode; b|n> = sqrt(n)|n-1>, hard truncation."""
    return Operator(space, embed(space, mode, _single_mode_destroy(space.dims[mode])))


annihilation = destroy


def create(space: FockSpace, mode: int) -> Operator:
    return destroy(space, mode).dag()


def number(space: FockSpace, mode: int) -> Operator:
    d = space.dims[mode]
    n = sp.diags(np.arange(d, dtype=float), 0, format="csr", dtype=complex)
    return Operator(space, embed(space, mode, n), hermitian=True)


def position_quadrature(space: FockSpace, mode: int) -> Operator:
    """Dimensionless b + b† on one mode."""
    d = space.dims[mode]
    b = _single_mode_destroy(d)
    return Operator(space, embed(space, mode, b + b.getH()), hermitian=True)


def operator_exp(a: Operator, scale: complex = 1.0, drop_tol: float = 1e-14) -> Operator:
    """Matrix exponential exp(scale * A), with small entries dropped from the result.

    Dense scaling-and-squaring is used up to moderate dimensions, sparse Pade above.
    """
    m = a.mat * complex(scale)
    if a.space.dim <= 4096:
        result = scipy.linalg.expm(m.toarray())
        if not np.all(np.isfinite(result)):
            raise ArithmeticError("matrix exponential did not converge (non-finite entries)")
        out = sp.csr_matrix(result)
    else:
        out = sp.csr_matrix(scipy.sparse.linalg.expm(m.tocsc()))
        if not np.all(np.isfinite(out.data)):
            raise ArithmeticError("matrix exponential did not converge (non-finite entries)")
    if drop_tol:
        scale_ref = np.abs(out.data).max() if out.nnz else 1.0
        out.data[np.abs(out.data) < drop_tol * scale_ref] = 0.0
        out.eliminate_zeros()
    return Operator(a.space, out)


# ---------------------------------------------------------------------------
# canonical states


def position_exponential(
    space: FockSpace, mode: int, scale: complex, drop_tol: float = 1e-14
) -> Operator:
    """exp(scale * X_mode), computed on the single mode and tensor-embedded.

    Much cheaper than exponentiating on the full space: the matrix
    exponential runs at the single-mode dimension.
    """
    sub = make_space((space.dims[mode],))
    u = operator_exp(position_quadrature(sub, 0), scale, drop_tol)
    return Operator(space, embed(space, mode, u.mat))


def fock_state(space: FockSpace, occupations) -> StateVector:
    occupations = tuple(int(n) for n in occupations)
    if len(occupations) != space.nmodes:
        raise ValueError("need one occupation per mode")
    for n, d in zip(occupations, space.dims):
        if not 0 <= n < d:
            raise ValueError(f"occupation {n} out of range for mode dimension {d}")
    amp = np.zeros(space.dim, dtype=complex)
    amp[space.flat_index(occupations)] = 1.0
    return StateVector(space, amp)


def coherent_leakage(alpha: complex, dim: int) -> float:
    """Poisson tail sum_{n >= dim} |alpha|^(2n) e^{-|alpha|^2} / n!."""
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    # complement of the regularized lower incomplete gamma = Poisson sf(dim-1)
    return float(scipy.special.gammainc(dim, lam))


def _coherent_column(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    logmag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) if alpha != 0 else None
    if alpha == 0:
        col = np.zeros(dim, dtype=complex)
        col[0] = 1.0
        return col
    phase = np.angle(complex(alpha))
    logfact = scipy.special.gammaln(n + 1)
    col = np.exp(logmag - 0.5 * logfact + 1j * n * phase)
    return col.astype(complex)


def _check_leakage(alpha: complex, dim: int, what: str):
    leak = coherent_leakage(alpha, dim)
    if leak > HARD_LEAKAGE_CAP:
        raise ValueError(
            f"{what}: truncation leakage {leak:.2e} for |alpha|={abs(alpha):.3f} at dim {dim} "
            f"exceeds hard cap {HARD_LEAKAGE_CAP}"
        )
    if leak > SOFT_LEAKAGE_TOL:
        warnings.warn(
            f"{what}: truncation leakage {leak:.2e} above tolerance {SOFT_LEAKAGE_TOL}",
            TruncationWarning,
            stacklevel=3,
        )


def coherent_state(space: FockSpace, mode_amplitudes) -> StateVector:
    """Product of coherent states, one amplitude per mode, renormalized on truncation."""
    amps = list(mode_amplitudes)
    if len(amps) != space.nmodes:
        raise ValueError("need one coherent amplitude per mode")
    total = np.ones(1, dtype=complex)
    for alpha, d in zip(amps, space.dims):
        _check_leakage(alpha, d, "coherent_state")
        total = np.kron(total, _coherent_column(alpha, d))
    return StateVector(space, total).normalized()


def cat_state(space: FockSpace, alpha: complex, parity: str = "even", mode: int = 0) -> StateVector:
    """Even or odd superposition of |alpha> and |-alpha> on one mode (vacuum elsewhere)."""
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    d = space.dims[mode]
    _check_leakage(alpha, d, "cat_state")
    sign = 1.0 if parity == "even" else -1.0
    col = _coherent_column(alpha, d) + sign * _coherent_column(-alpha, d)
    if np.linalg.norm(col) == 0.0:
        # odd cat at alpha -> 0 degenerates; |1> is the correct limit but we refuse to guess
        raise ValueError("cat state norm vanishes (odd cat with alpha = 0)")
    total = np.ones(1, dtype=complex)
    for j, dj in enumerate(space.dims):
        blk = col if j == mode else _coherent_column(0.0, dj)
        total = np.kron(total, blk)
    return StateVector(space, total).normalized()


def two_mode_squeezed_state(space: FockSpace, r: float) -> StateVector:
    """sum_m (-tanh r)^m / cosh r |m, m>, renormalized on the truncated space."""
    if space.nmodes != 2:
        raise ValueError("two-mode squeezed state requires a two-mode space")
    d = min(space.dims)
    t = math.tanh(r)
    # per-mode occupation distribution is thermal with nbar = sinh^2 r
    tail = t ** (2 * d)
    if tail > HARD_LEAKAGE_CAP:
        raise ValueError(
            f"two_mode_squeezed_state: leakage {tail:.2e} at dim {d} exceeds cap {HARD_LEAKAGE_CAP}"
        )
    nbar = math.sinh(r) ** 2
    sigma = math.sqrt(nbar * (nbar + 1.0))
    if nbar + 3.0 * sigma > d - 1:
        warnings.warn(
            f"two_mode_squeezed_state: nbar + 3 sigma = {nbar + 3 * sigma:.1f} exceeds mode dim {d}",
            TruncationWarning,
            stacklevel=2,
        )
    amp = np.zeros(space.dim, dtype=complex)
    for m in range(d):
        amp[space.flat_index((m, m))] = (-t) ** m / math.cosh(r)
    return StateVector(space, amp).normalized()


def truncated_phase_state(space: FockSpace, n_top: int, mode: int = 0) -> StateVector:
    """Uniform superposition of |0>..|n_top> on one mode (vacuum elsewhere)."""
    d = space.dims[mode]
    if n_top + 1 > d:
        raise ValueError(f"phase state needs {n_top + 1} levels but mode dim is {d}")
    col = np.zeros(d, dtype=complex)
    col[: n_top + 1] = 1.0 / math.sqrt(n_top + 1)
    total = np.ones(1, dtype=complex)
    for j, dj in enumerate(space.dims):
        blk = col if j == mode else _coherent_column(0.0, dj)
        total = np.kron(total, blk)
    return StateVector(space, total)


def tensor_states(*states: StateVector) -> StateVector:
    """Tensor product of states on disjoint spaces (mode order = argument order)."""
    dims = []
    labels = []
    have_labels = all(s.space.labels is not None for s in states)
    amp = np.ones(1, dtype=complex)
    for s in states:
        dims.extend(s.space.dims)
        if have_labels:
            labels.extend(s.space.labels)
        amp = np.kron(amp, s.amplitudes)
    space = FockSpace(tuple(dims), tuple(labels) if have_labels else None)
    return StateVector(space, amp)


# ---------------------------------------------------------------------------
# inner products, expectations, partial trace


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.space != b.space:
        raise ValueError("states live on different spaces")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(op: Operator, state) -> complex | float:
    """<A> for a StateVector or DensityMatrix; real part returned for Hermitian A."""
    if isinstance(state, StateVector):
        if op.space != state.space:
            raise ValueError("space mismatch")
        val = complex(np.vdot(state.amplitudes, op.mat @ state.amplitudes))
    elif isinstance(state, DensityMatrix):
        if op.space != state.space:
            raise ValueError("space mismatch")
        val = complex((op.mat @ state.entries).diagonal().sum())
    else:
        raise TypeError("state must be a StateVector or DensityMatrix")
    if op.hermitian:
        if abs(val.imag) >= 1e-10 * max(1.0, abs(val)):
            raise ArithmeticError(f"Hermitian expectation has imaginary part {val.imag:.3e}")
        return val.real
    return val


def partial_trace(state, trace_modes) -> DensityMatrix:
    """Trace out the listed modes, returning a density matrix on the rest."""
    trace_modes = sorted(set(int(m) for m in trace_modes))
    space = state.space
    for m in trace_modes:
        if not 0 <= m < space.nmodes:
            raise ValueError(f"mode {m} out of range")
    keep = [j for j in range(space.nmodes) if j not in trace_modes]
    if not keep:
        raise ValueError("cannot trace out every mode")
    dims = space.dims
    dk = int(np.prod([dims[j] for j in keep]))
    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape(dims)
        psi = np.transpose(psi, keep + trace_modes).reshape(dk, -1)
        rho = psi @ psi.conj().T
    elif isinstance(state, DensityMatrix):
        n = space.nmodes
        r = state.entries.reshape(dims + dims)
        perm = keep + trace_modes + [j + n for j in keep] + [j + n for j in trace_modes]
        r = np.transpose(r, perm)
        dt = int(np.prod([dims[j] for j in trace_modes]))
        r = r.reshape(dk, dt, dk, dt)
        rho = np.einsum("itjt->ij", r)
    else:
        raise TypeError("state must be a StateVector or DensityMatrix")
    sub_labels = tuple(space.labels[j] for j in keep) if space.labels else None
    sub = FockSpace(tuple(dims[j] for j in keep), sub_labels)
    return DensityMatrix(sub, rho)
