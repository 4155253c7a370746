import numpy as np
import pytest
from hypothesis import given, strategies as st

from revunc.dmmodel import (
    DMParams, TemperatureError, build_hamiltonian, closed_form_diagnostic, closed_form_state,
    concurrence_closed, energy_levels, mixedness_closed, partition_function, partition_function_closed,
    spectrum_closed, thermal_state,
)
from revunc.matcore import ket, projector
from revunc.qstate import concurrence_wootters, mixedness

couplings = st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3)
dm = st.floats(0, 3)
temps = st.floats(0.2, 5)
GRID = [DMParams(j, d, t) for j in (-2, -1, 1, 2) for d in np.linspace(0, 3, 7) for t in (0.2, 0.5, 1, 2, 5)]


def test_params():
    p = DMParams(1.0, 1.0, 0.5)
    assert p.beta == 2.0 and p.delta == pytest.approx(2 * np.sqrt(2))
    with pytest.raises(TemperatureError):
        DMParams(1.0, 1.0, 0.0)


def test_hamiltonian_examples():
    assert np.array_equal(build_hamiltonian(DMParams(0.0, 1.0, 1.0)).mat, np.zeros((4, 4)))
    assert np.allclose(energy_levels(DMParams(1.0, 0.0, 1.0)), [-1.5, 0.5, 0.5, 0.5], atol=1e-12)
    h = build_hamiltonian(DMParams(0.8, 1.7, 1.0)).mat
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12
    assert h[1, 2] == pytest.approx(0.8 * (1 + 1.7j))
    assert h[2, 1] == pytest.approx(0.8 * (1 - 1.7j))
    assert np.allclose(np.diag(h).real, [0.4, -0.4, -0.4, 0.4])


@given(couplings, dm)
def test_spectrum(j, d):
    p = DMParams(j, d, 1.0)
    assert np.allclose(energy_levels(p), spectrum_closed(p), atol=1e-10)


def test_infinite_temperature_limit():
    rho = thermal_state(DMParams(1.0, 1.0, 1e6))
    assert np.max(np.abs(rho.mat - np.eye(4) / 4)) <= 1e-5
    assert mixedness_closed(DMParams(1.0, 1.0, 1e6)) == pytest.approx(0.75, abs=1e-5)


def test_ground_state_limit_is_singlet():
    singlet = projector(ket(0, 1, -1, 0))
    assert np.max(np.abs(thermal_state(DMParams(1.0, 0.0, 0.01)).mat - singlet)) <= 1e-4


@pytest.mark.parametrize("p", GRID[::3])
def test_partition_function(p):
    assert partition_function(p) == pytest.approx(partition_function_closed(p), rel=1e-12)


@given(couplings, dm, temps)
def test_thermal_commutes_with_h_and_is_x_shaped(j, d, t):
    p = DMParams(j, d, t)
    rho = thermal_state(p).mat
    h = build_hamiltonian(p).mat
    assert np.max(np.abs(rho @ h - h @ rho)) <= 1e-10
    for idx in [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]:
        assert abs(rho[idx]) <= 1e-12


@given(st.floats(0.1, 3), st.floats(0.05, 3), temps)
def test_coherence_phase_is_arctan_d(j, d, t):
    rho = thermal_state(DMParams(j, d, t)).mat
    # for J > 0 the Boltzmann difference is negative, so rho_12 = -|rho_12| e^{i arctan D}
    assert np.angle(-rho[1, 2]) == pytest.approx(np.arctan(d), abs=1e-8)


def test_closed_form_readings():
    p = DMParams(1.0, 1.0, 1.0)
    diag = closed_form_diagnostic(p)
    assert diag["corrected"] <= 1e-12
    assert diag["literal"] > 1e-2
    with pytest.raises(ValueError):
        closed_form_state(p, "other")


def test_concurrence_closed_limits():
    assert concurrence_closed(DMParams(1.0, 0.0, 0.01)) >= 0.999
    assert concurrence_closed(DMParams(1.0, 1.0, 100.0)) == 0.0


@pytest.mark.parametrize("p", GRID)
def test_closed_forms_match_numerics(p):
    rho = thermal_state(p)
    assert concurrence_closed(p) == pytest.approx(concurrence_wootters(rho), abs=1e-8)
    assert mixedness_closed(p) == pytest.approx(mixedness(rho).gamma, abs=1e-8)


def test_gamma_monotone_in_t():
    g = [mixedness_closed(DMParams(1.0, 1.0, t)) for t in np.linspace(0.2, 5, 50)]
    assert np.all(np.diff(g) >= 0)
