"""Tests for fidelities, the EPR Wigner function, and validity diagnostics."""

import math

import numpy as np
import pytest

from motlight.analysis import (
    ValidityReport,
    epr_wigner,
    fidelity_mixed,
    fidelity_phase_calibrated,
    fidelity_pure,
    lamb_dicke_validity,
    reference_decayed_coherent,
    spontaneous_scattering_average,
    spontaneous_scattering_rate,
    strong_coupling_figure,
    thermal_like_validity,
)
from motlight.fock import (
    StateVector,
    coherent_state,
    expectation,
    fock_state,
    make_space,
    number,
)


# ---------------------------------------------------------------------------
# fidelities


def test_fidelity_pure_basics():
    spc = make_space((4,))
    a = fock_state(spc, (1,))
    b = fock_state(spc, (2,))
    assert fidelity_pure(a, a) == 1.0
    assert fidelity_pure(a, b) == 0.0
    # normalization and global phase are irrelevant
    c = StateVector(spc, 3.7j * a.amplitudes)
    assert np.isclose(fidelity_pure(c, a), 1.0)
    with pytest.raises(ValueError):
        fidelity_pure(a, fock_state(make_space((5,)), (1,)))


def test_fidelity_pure_coherent_overlap():
    # [DERIVED] |<alpha|beta>|^2 = exp(-|alpha - beta|^2)
    spc = make_space((40,))
    a = coherent_state(spc, (1.0,))
    b = coherent_state(spc, (1.5 + 0.3j,))
    assert np.isclose(fidelity_pure(a, b), math.exp(-abs(1.0 - (1.5 + 0.3j)) ** 2),
                      atol=1e-8)


def test_fidelity_mixed():
    spc = make_space((4,))
    psi = fock_state(spc, (1,))
    rho = psi.projector()
    assert np.isclose(fidelity_mixed(rho, psi), 1.0)
    assert np.isclose(fidelity_mixed(rho, fock_state(spc, (0,))), 0.0)
    with pytest.raises(ValueError):
        fidelity_mixed(rho, fock_state(make_space((3,)), (0,)))


def test_fidelity_phase_calibrated():
    # [DERIVED] A state differing from the target only by a linear Fock-space
    # phase e^{i s n} on one mode is recovered exactly, and the fitted slope
    # equals the phase imprinted.
    spc = make_space((3, 20))
    target = StateVector(
        spc, np.kron([1.0, 0.0, 0.0], coherent_state(make_space((20,)), [1.3]).amplitudes)
    )
    slope = 0.31
    phased = np.exp(1j * slope * np.arange(20))
    psi = StateVector(spc, target.amplitudes.reshape(3, 20) * phased)
    raw = fidelity_pure(psi, target)
    fid, fitted = fidelity_phase_calibrated(psi, target, mode=1)
    assert raw < 0.9  # the phase visibly degrades the raw overlap
    assert math.isclose(fid, 1.0, abs_tol=1e-9)
    assert math.isclose(fitted, slope, abs_tol=1e-6)
    # On a phase-free pair the calibration is a no-op.
    fid0, fitted0 = fidelity_phase_calibrated(target, target, mode=1)
    assert math.isclose(fid0, 1.0, abs_tol=1e-12)
    with pytest.raises(ValueError):
        fidelity_phase_calibrated(psi, fock_state(make_space((4,)), (0,)), mode=0)


def test_reference_decayed_coherent():
    spc = make_space((30,))
    ref = reference_decayed_coherent(math.sqrt(10.0), nu=10.0, gamma=0.01, t=50.0,
                                     space=spc)
    expected_n = 10.0 * math.exp(-2.0 * 0.01 * 50.0)
    assert np.isclose(expectation(number(spc, 0), ref), expected_n, atol=1e-6)


# ---------------------------------------------------------------------------
# EPR Wigner function


def test_epr_wigner_normalized():
    # [DERIVED] the Wigner function integrates to 1 over all four quadratures;
    # Gaussian separability makes this a product of two 2D integrals
    r = 0.8
    # W factorizes as (4/pi^2) f(x, z) f(px, -pz) with identical Gaussian
    # forms, so the 4D integral is a product of two identical 2D integrals
    grid = np.linspace(-5.0, 5.0, 161)
    du = grid[1] - grid[0]
    xx, zz = np.meshgrid(grid, grid, indexing="ij")
    f = np.exp(-((xx + zz) ** 2) * math.exp(2.0 * r)
               - ((xx - zz) ** 2) * math.exp(-2.0 * r))
    int_f = f.sum() * du * du
    total = (4.0 / math.pi**2) * int_f * int_f
    assert np.isclose(total, 1.0, atol=1e-4)


def test_epr_wigner_values_and_symmetry():
    r = 1.0
    assert np.isclose(epr_wigner(0, 0, 0, 0, r), 4.0 / math.pi**2)
    # symmetric under (x,z) -> (z,x) with momenta swapped
    assert np.isclose(epr_wigner(0.3, -0.1, 0.7, 0.4, r),
                      epr_wigner(0.7, 0.4, 0.3, -0.1, r))
    # EPR correlations: x = -z, px = pz stays large; x = z is crushed
    assert epr_wigner(1.0, 0.5, -1.0, 0.5, 2.0) > 100 * epr_wigner(1.0, 0.5, 1.0, 0.5, 2.0)
    # r = 0 reduces to the product vacuum W = (4/pi^2) exp(-2(x^2+px^2+z^2+pz^2))
    assert np.isclose(epr_wigner(0.2, 0.3, -0.4, 0.1, 0.0),
                      4.0 / math.pi**2 * math.exp(-2.0 * (0.04 + 0.09 + 0.16 + 0.01)))


# ---------------------------------------------------------------------------
# validity diagnostics


def test_lamb_dicke_validity():
    # coherent state with nbar = 10, eta = 0.15, a = 3: (1/2) eta^2 (1 + 10 + 3 sqrt(10))
    lhs = lamb_dicke_validity(0.15, 10.0)
    assert np.isclose(lhs, 0.5 * 0.15**2 * (11.0 + 3.0 * math.sqrt(10.0)))
    # the commonly quoted rounding of this value is 0.225 (from ~ 10 eta^2)
    assert abs(lhs - 0.225) < 0.01
    assert np.isclose(lamb_dicke_validity(0.1, 4.0, sigma=0.0), 0.5 * 0.01 * 5.0)
    with pytest.raises(ValueError):
        lamb_dicke_validity(0.1, 1.0, a=-1.0)


def test_thermal_like_validity():
    r = 1.0
    nbar = math.sinh(r) ** 2
    assert np.isclose(thermal_like_validity(0.1, r), 0.5 * 0.01 * (4.0 * nbar + 2.5))
    # eta = 0.1 keeps the condition comfortably below 1 for r up to ~1.6
    assert thermal_like_validity(0.1, 1.6) < 0.25


def test_spontaneous_scattering():
    gamma, eta, ratio_sq, d21 = 1.0, 0.1, 0.04, 4.0
    # at t = 0 the difference term vanishes: rate = (1/4) g eta^2 ratio^2 * (4/5)
    assert np.isclose(spontaneous_scattering_rate(gamma, eta, ratio_sq, d21, 0.0),
                      0.25 * gamma * eta**2 * ratio_sq * 0.8)
    # at d21 t = pi the sum term vanishes: rate = (1/4) g eta^2 ratio^2 * 4
    assert np.isclose(
        spontaneous_scattering_rate(gamma, eta, ratio_sq, d21, math.pi / d21),
        0.25 * gamma * eta**2 * ratio_sq * 4.0,
    )
    # the average of |1 -/+ e^{i s}|^2 over a period is 2
    avg = spontaneous_scattering_average(gamma, eta, ratio_sq)
    ts = np.linspace(0.0, 2.0 * math.pi / d21, 4001)
    rates = [spontaneous_scattering_rate(gamma, eta, ratio_sq, d21, t) for t in ts]
    assert np.isclose(np.trapezoid(rates, ts) / ts[-1], avg, rtol=1e-6)


def test_strong_coupling_figure():
    assert np.isclose(strong_coupling_figure(2.0, 1.0, 1.0), 40.0)
    with pytest.raises(ValueError):
        strong_coupling_figure(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        strong_coupling_figure(-1.0, 1.0, 1.0)


def test_validity_report():
    rep = ValidityReport(
        lamb_dicke_lhs=0.1,
        rwa_ratios=(100.0, 50.0, 250.0),
        adiabaticity=0.1,
        strong_coupling=14.0,
        spontaneous_ratio=1e-7,
    )
    assert all(rep.passes().values())
    bad = ValidityReport(
        lamb_dicke_lhs=0.4,
        rwa_ratios=(100.0, 50.0, 2.0),
        adiabaticity=0.1,
        strong_coupling=2.0,
        spontaneous_ratio=1e-7,
    )
    flags = bad.passes()
    assert not flags["lamb_dicke"] and not flags["rwa"] and not flags["strong_coupling"]
    assert flags["adiabaticity"] and flags["spontaneous"]
    with pytest.raises(ValueError):
        ValidityReport(-0.1, (1.0, 1.0, 1.0), 0.1, 10.0, 1e-7)
