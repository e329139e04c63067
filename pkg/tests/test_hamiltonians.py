"""Tests for the drive, atom-cavity, cascade, and collective-mode builders."""

import math

import numpy as np
import pytest
import scipy.linalg

from motlight.errors import ConsistencyError
from motlight.fock import (
    coherent_state,
    expectation,
    fock_state,
    make_space,
    number,
    operator_exp,
    position_quadrature,
    two_mode_squeezed_state,
)
from motlight.hamiltonians import (
    AtomCavityParams,
    CollectiveIonParams,
    TwoModeDriveParams,
    adiabatic_collective_rate,
    build_atom_cavity,
    build_cascaded_effective,
    build_collective_ion,
    build_two_mode_drive,
    chi_coupling,
    collective_mode_map,
    effective_mixer,
    effective_squeezer,
)
from motlight.pulses import PulseSchedule


def _two_mode_params(phi=0.0):
    return TwoModeDriveParams(
        nu_x=1.0, nu_z=3.0, eta_x_p=0.1, eta_z_p=0.1,
        drive_strength_sq_over_det=0.01, delta_21=4.0, phi=phi,
    )


# ---------------------------------------------------------------------------
# two-mode drive


def test_two_mode_drive_is_hermitian():
    h = build_two_mode_drive(_two_mode_params(phi=0.7), make_space((6, 6)))
    for t in (0.0, 0.13, -2.2):
        assert h.hermiticity_defect(t) < 1e-13


def test_two_mode_drive_vacuum_element():
    # [DERIVED] <00|H|00> = -2 eps cos(delta t - phi) exp(-2(eta_x'^2 + eta_z'^2)),
    # from <0|exp(2 i eta X)|0> = exp(-2 eta^2) (Gaussian moment of X in vacuum)
    p = _two_mode_params(phi=0.3)
    spc = make_space((8, 8))
    h = build_two_mode_drive(p, spc, frame="lab")
    damp = math.exp(-2.0 * (p.eta_x_p**2 + p.eta_z_p**2))
    for t in (0.0, 0.77):
        expected = -2.0 * p.drive_strength_sq_over_det * math.cos(p.delta_21 * t - p.phi) * damp
        assert np.isclose(complex(h.matrix(t)[0, 0]), expected, atol=1e-12)


def test_two_mode_drive_frames_agree():
    # rotating-frame matrix = U(t) (H_lab - H0) U(t)† with U = exp(i H0 t)
    p = _two_mode_params(phi=-0.5)
    spc = make_space((5, 5))
    lab = build_two_mode_drive(p, spc, frame="lab")
    rot = build_two_mode_drive(p, spc, frame="rotating")
    h0 = (p.nu_x * number(spc, 0) + p.nu_z * number(spc, 1)).mat.toarray()
    for t in (0.0, 0.41):
        u = np.diag(np.exp(1j * np.diag(h0) * t))
        expected = u @ (lab.matrix(t).toarray() - h0) @ u.conj().T
        assert np.allclose(rot.matrix(t).toarray(), expected, atol=1e-12)


def test_two_mode_drive_validation():
    with pytest.raises(ValueError):
        build_two_mode_drive(_two_mode_params(), make_space((6, 6, 2)))
    with pytest.raises(ValueError):
        build_two_mode_drive(_two_mode_params(), make_space((6, 6)), frame="interaction")
    with pytest.raises(ValueError):
        TwoModeDriveParams(1.0, 3.0, 0.6, 0.1, 0.01, 4.0)


# ---------------------------------------------------------------------------
# effective mixer / squeezer


def test_mixer_matrix_elements():
    spc = make_space((3, 3))
    chi, phi = 0.02, 0.9
    h = effective_mixer(chi, phi, spc)
    m = h.mat.toarray()
    i10 = spc.flat_index((1, 0))
    i01 = spc.flat_index((0, 1))
    assert np.isclose(m[i10, i01], chi * np.exp(1j * phi))
    assert np.isclose(m[i01, i10], chi * np.exp(-1j * phi))
    assert np.isclose(m[0, 0], 0.0)


def test_squeezer_matrix_elements():
    spc = make_space((3, 3))
    chi, phi = 0.02, -0.4
    h = effective_squeezer(chi, phi, spc)
    m = h.mat.toarray()
    i11 = spc.flat_index((1, 1))
    assert np.isclose(m[i11, 0], chi * np.exp(1j * phi))
    assert np.isclose(m[0, i11], chi * np.exp(-1j * phi))


def test_squeezer_generates_two_mode_squeezed_state():
    # evolving vacuum for time T under the squeezer reproduces the closed-form
    # state with r = chi T (phase -pi/2 gives the standard real-r convention)
    spc = make_space((16, 16))
    chi, r = 0.02, 0.5
    h = effective_squeezer(chi, -math.pi / 2.0, spc)
    u = operator_exp(h, scale=-1j * (r / chi))
    out = u @ fock_state(spc, (0, 0))
    target = two_mode_squeezed_state(spc, r)
    overlap = abs(np.vdot(target.amplitudes, out.amplitudes)) ** 2
    assert overlap > 1.0 - 1e-8
    assert np.isclose(expectation(number(spc, 0), out), math.sinh(r) ** 2, atol=1e-6)


def test_mixer_full_swap_moves_excitation():
    # chi T = pi/2 is a full swap: all population of mode x ends up in mode z
    spc = make_space((12, 12))
    chi = 0.05
    h = effective_mixer(chi, -math.pi / 2.0, spc)
    u = operator_exp(h, scale=-1j * (math.pi / 2.0) / chi)
    out = u @ coherent_state(spc, (1.0, 0.0))
    assert np.isclose(expectation(number(spc, 0), out), 0.0, atol=1e-10)
    assert np.isclose(expectation(number(spc, 1), out), 1.0, atol=1e-6)


def test_chi_coupling():
    assert np.isclose(chi_coupling(_two_mode_params()), 4.0 * 0.1 * 0.1 * 0.01)


# ---------------------------------------------------------------------------
# atom-cavity site


def _ac_params(**kw):
    base = dict(nu_x=10.0, delta_cA=10.0, eta_x=0.1, g0_sq_over_det=0.2,
                kappa=1.0, g0_EA_over_det=1.0)
    base.update(kw)
    return AtomCavityParams(**base)


def test_atom_cavity_exact_sine_oracle():
    # lab-frame matrix must equal nu n_b + delta n_a - (g0^2/D) sin^2(eta X) n_a
    # - amp sin(eta X)(a† + a), with sin evaluated as a matrix function [DERIVED]
    p = _ac_params()
    spc = make_space((8, 3))
    h = build_atom_cavity(p, spc, truncation="exact", frame="lab")
    x = position_quadrature(spc, 0).mat.toarray()
    w, v = np.linalg.eigh(x)
    s = v @ np.diag(np.sin(p.eta_x * w)) @ v.conj().T
    nb = number(spc, 0).mat.toarray()
    na = number(spc, 1).mat.toarray()
    a = np.zeros((3, 3))
    for n in range(1, 3):
        a[n - 1, n] = math.sqrt(n)
    quad = np.kron(np.eye(8), a + a.T)
    expected = (
        p.nu_x * nb + p.delta_cA * na
        - p.g0_sq_over_det * (s @ s) @ na
        - 1.0 * s @ quad
    )
    assert np.allclose(h.matrix(0.0).toarray(), expected, atol=1e-12)


def test_atom_cavity_third_order_close_to_exact():
    # leading neglected term is the eta^4 X^4 piece of sin^2, so the defect
    # scales as eta^4; verify the magnitude and the scaling exponent
    spc = make_space((6, 3))
    errs = []
    for eta in (0.05, 0.1):
        p = _ac_params(eta_x=eta)
        exact = build_atom_cavity(p, spc, truncation="exact", frame="lab").matrix(0.0)
        third = build_atom_cavity(p, spc, truncation="third_order", frame="lab").matrix(0.0)
        errs.append(abs(exact - third).max())
        assert errs[-1] < 100 * eta**4
    ratio = errs[1] / errs[0]
    assert 8.0 < ratio < 32.0  # eta^4 scaling would give 16


def test_atom_cavity_rotating_frame_static_limit():
    # with the free energies removed, the resonant transfer band is static
    p = _ac_params()
    spc = make_space((6, 3))
    h = build_atom_cavity(p, spc, truncation="third_order", frame="rotating")
    omegas = sorted({t.omega for t in h.terms})
    assert 0.0 in omegas
    assert h.max_frequency == 3 * p.nu_x + p.delta_cA


def test_atom_cavity_validation():
    p = _ac_params()
    with pytest.raises(ValueError):
        build_atom_cavity(p, make_space((6, 3, 2)))
    with pytest.raises(ValueError):
        build_atom_cavity(p, make_space((6, 3)), truncation="exact", frame="rotating")
    with pytest.raises(ValueError):
        build_atom_cavity(_ac_params(g0_EA_over_det=None), make_space((6, 3)))
    with pytest.raises(ValueError):
        AtomCavityParams(nu_x=10.0, delta_cA=10.0, eta_x=0.1,
                         g0_sq_over_det=0.2, kappa=-1.0)


# ---------------------------------------------------------------------------
# cascaded pair


def test_cascade_identity_and_jump():
    p = _ac_params(g0_EA_over_det=None)
    pulses = PulseSchedule.pair(0.01, halfwidth=3.0)
    spc = make_space((4, 3, 3, 4))
    h, c = build_cascaded_effective(p, p, pulses, spc)
    cdc = (c.mat.getH() @ c.mat).toarray()
    for t in (-123.0, 0.0, 57.3):
        m = h.matrix(t).toarray()
        assert np.allclose(m - m.conj().T, -2j * cdc, atol=1e-12)
    # jump operator is sqrt(k1) a1 + sqrt(k2) a2
    from motlight.fock import destroy

    expected = destroy(spc, 1).mat + destroy(spc, 2).mat
    assert abs(c.mat - expected).max() < 1e-14


def test_cascade_lab_frame_and_exact_trig():
    p = _ac_params(g0_EA_over_det=None)
    pulses = PulseSchedule.pair(0.01, halfwidth=3.0)
    spc = make_space((3, 2, 2, 3))
    h, c = build_cascaded_effective(p, p, pulses, spc, truncation="exact", frame="lab")
    assert h.matrix(0.0).shape == (36, 36)


def test_cascade_rejects_unequal_detunings():
    p1 = _ac_params(g0_EA_over_det=None)
    p2 = _ac_params(delta_cA=12.0, g0_EA_over_det=None)
    pulses = PulseSchedule.pair(0.01, halfwidth=3.0)
    with pytest.raises(ValueError):
        build_cascaded_effective(p1, p2, pulses, make_space((3, 2, 2, 3)))


def test_cascade_space_validation():
    p = _ac_params(g0_EA_over_det=None)
    pulses = PulseSchedule.pair(0.01, halfwidth=3.0)
    with pytest.raises(ValueError):
        build_cascaded_effective(p, p, pulses, make_space((3, 2, 2)))


# ---------------------------------------------------------------------------
# collective modes


def test_collective_mode_map():
    weights, n_eff = collective_mode_map([0.0, math.pi / 3.0])
    assert np.isclose(n_eff, 1.0 + 0.25)
    assert np.isclose(np.sum(weights**2), 1.0)
    assert np.allclose(weights, np.array([1.0, 0.5]) / math.sqrt(1.25))
    with pytest.raises(ValueError):
        collective_mode_map([])
    with pytest.raises(ValueError):
        collective_mode_map([math.pi / 2.0])


def test_adiabatic_collective_rate():
    p = _ac_params(g0_EA_over_det=1.0)
    rate = adiabatic_collective_rate(p, [0.0, 0.0])
    assert np.isclose(rate, 2.0 * (0.1 * 1.0) ** 2 / 1.0)
    with pytest.raises(ValueError):
        adiabatic_collective_rate(_ac_params(g0_EA_over_det=None), [0.0])


def test_collective_ion_params_and_builder():
    p = CollectiveIonParams(
        nu_x=1.0, nu_z=1.0, eta_x=0.1, eta_z=0.1, alpha=1.0, beta=1.0,
        drive_strength_sq_over_det=0.01, case="mixR",
    )
    assert np.isclose(p.nu_Rz, math.sqrt(3.0))
    assert np.isclose(p.eta_0z, 0.1 / math.sqrt(2.0))
    assert np.isclose(p.eta_Rz, 0.1 / math.sqrt(2.0 * math.sqrt(3.0)))
    assert np.isclose(p.delta_21, 1.0 - math.sqrt(3.0))
    sq = CollectiveIonParams(
        nu_x=1.0, nu_z=1.0, eta_x=0.1, eta_z=0.1, alpha=1.0, beta=1.0,
        drive_strength_sq_over_det=0.01, case="sq0",
    )
    assert np.isclose(sq.delta_21, 2.0)
    spc = make_space((4, 4))
    h = build_collective_ion(p, spc)
    chi = 4.0 * 0.1 * p.eta_Rz * 0.01
    assert np.isclose(abs(h.mat[spc.flat_index((1, 0)), spc.flat_index((0, 1))]), chi)
    h2 = build_collective_ion(sq, spc)
    chi2 = 4.0 * 0.1 * sq.eta_0z * 0.01
    assert np.isclose(abs(h2.mat[spc.flat_index((1, 1)), 0]), chi2)
    with pytest.raises(ValueError):
        CollectiveIonParams(1.0, 1.0, 0.1, 0.1, 1.0, 1.0, 0.01, case="other")
