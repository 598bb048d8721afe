import math

import numpy as np
import pytest

from excitherm import (BathModes, BathSpec, CounterStream, D2State,
                       ExcitonModel, ThermalLaw, build_bath, diagonalize,
                       init_state, sample_displacement, total_energy,
                       trajectory_seed)
from excitherm.units import KB_CM_PER_K, WAVENUMBER_TO_ANGULAR


def _mean_abs2_by_quadrature(beta_omega):
    """<|lambda|^2> under the thermal displacement density, numerically.

    P(lambda) ~ exp(-|lambda|^2 c) with c = e^{beta omega} - 1; radial
    quadrature, independent of the sampling code path.
    """
    c = math.expm1(beta_omega)
    r = np.linspace(0.0, 12.0 / math.sqrt(c), 200001)
    w = r * np.exp(-c * r * r)
    return float(np.trapezoid(r * r * w, r) / np.trapezoid(w, r))


def test_sample_displacement_zero_temperature():
    stream = CounterStream(trajectory_seed(0, 0))
    lam = sample_displacement(ThermalLaw(0.0), np.full(100, 10.0), stream)
    assert np.all(lam == 0.0)
    assert stream.cursor == 200  # draws consumed regardless


def test_sample_displacement_occupancy_300K():
    omega_cm = 100.0
    beta_omega = omega_cm / (KB_CM_PER_K * 300.0)
    nbar_oracle = _mean_abs2_by_quadrature(beta_omega)
    assert nbar_oracle == pytest.approx(1.0 / math.expm1(beta_omega), rel=1e-6)
    assert nbar_oracle == pytest.approx(1.6250, abs=2e-4)

    stream = CounterStream(trajectory_seed(11, 0))
    n = 10**6
    lam = sample_displacement(ThermalLaw(300.0),
                              np.full(n, omega_cm * WAVENUMBER_TO_ANGULAR),
                              stream)
    abs2 = np.abs(lam) ** 2
    se = abs2.std() / math.sqrt(n)
    assert abs(abs2.mean() - nbar_oracle) < 3 * se
    # Symmetry of the density under lambda -> -lambda.
    se_q = math.sqrt(nbar_oracle / 2.0 / n)
    assert abs(lam.real.mean()) < 3 * se_q
    assert abs(lam.imag.mean()) < 3 * se_q


@pytest.mark.parametrize("temperature,omega_cm", [
    (77.0, 50.0), (200.0, 100.0), (300.0, 200.0), (300.0, 10.0)])
def test_sampler_quadrature_variances(temperature, omega_cm):
    beta_omega = omega_cm / (KB_CM_PER_K * temperature)
    var_expected = 0.5 / math.expm1(beta_omega)
    stream = CounterStream(trajectory_seed(5, 1))
    n = 10**6
    lam = sample_displacement(ThermalLaw(temperature),
                              np.full(n, omega_cm * WAVENUMBER_TO_ANGULAR),
                              stream)
    tol = 3.0 * var_expected * math.sqrt(2.0 / n)
    assert abs(np.var(lam.real) - var_expected) < tol
    assert abs(np.var(lam.imag) - var_expected) < tol


def _three_site_model():
    return ExcitonModel(
        epsilon=[0.0, 250.0, 500.0],
        J=[[0.0, 100.0, 0.0], [100.0, 0.0, 100.0], [0.0, 100.0, 0.0]])


def test_init_state_single_site():
    model = ExcitonModel(epsilon=[120.0], J=[[0.0]])
    bath = build_bath(BathSpec(Q=8), n_sites=1)
    st = init_state(model, bath, ThermalLaw(300.0), ("site", 0),
                    CounterStream(trajectory_seed(1, 0)))
    assert st.alpha == pytest.approx([1.0])
    assert st.t == 0.0
    assert st.lam.shape == (1, 8)


def test_init_state_highest_exciton_projection():
    model = _three_site_model()
    bath = build_bath(BathSpec(Q=4), n_sites=3)
    st = init_state(model, bath, ThermalLaw(77.0), ("exciton", 2),
                    CounterStream(trajectory_seed(1, 1)))
    basis = diagonalize(model)
    rho0 = np.abs(basis.vectors.T @ st.alpha) ** 2
    assert rho0 == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
    assert st.norm() == pytest.approx(1.0, abs=1e-14)


def test_init_state_rejects_bad_excitation():
    model = _three_site_model()
    bath = build_bath(BathSpec(Q=4), n_sites=3)
    stream = CounterStream(0)
    with pytest.raises(ValueError):
        init_state(model, bath, ThermalLaw(0.0), ("site", 3), stream)
    with pytest.raises(ValueError):
        init_state(model, bath, ThermalLaw(0.0), ("orbital", 0), stream)


def test_init_state_per_site_temperatures():
    model = ExcitonModel(epsilon=[0.0, 0.0], J=[[0.0, 1.0], [1.0, 0.0]])
    bath = build_bath(BathSpec(Q=64, lambda_reorg=0.0), n_sites=2)
    laws = [ThermalLaw(0.0), ThermalLaw(300.0)]
    st = init_state(model, bath, laws, ("site", 0),
                    CounterStream(trajectory_seed(9, 0)))
    assert np.all(st.lam[0] == 0.0)
    assert np.any(st.lam[1] != 0.0)


def test_total_energy_bare_excitation():
    model = ExcitonModel(epsilon=[0.0, 250.0, 500.0], J=np.zeros((3, 3)))
    bath = BathModes(omega=np.full((3, 2), 5.0), g=np.zeros((3, 2)))
    st = D2State(alpha=[0.0, 1.0, 0.0], lam=np.zeros((3, 2)))
    assert total_energy(st, model, bath) == pytest.approx(250.0, rel=1e-12)


def test_total_energy_polaron_minimum():
    omega_cm = 100.0
    g = 0.37
    model = ExcitonModel(epsilon=[0.0], J=[[0.0]])
    bath = BathModes(omega=[[omega_cm * WAVENUMBER_TO_ANGULAR]], g=[[g]])
    st = D2State(alpha=[1.0], lam=[[g]])
    assert total_energy(st, model, bath) == pytest.approx(
        -omega_cm * g * g, rel=1e-12)


def test_total_energy_two_site_coherence():
    j = 42.0
    model = ExcitonModel(epsilon=[0.0, 0.0], J=[[0.0, j], [j, 0.0]])
    bath = BathModes(omega=np.full((2, 1), 3.0), g=np.zeros((2, 1)))
    r = 1.0 / math.sqrt(2.0)
    st = D2State(alpha=[r, r], lam=np.zeros((2, 1)))
    assert total_energy(st, model, bath) == pytest.approx(j, rel=1e-12)


def test_total_energy_global_phase_invariance():
    model = _three_site_model()
    bath = build_bath(BathSpec(Q=6), n_sites=3)
    stream = CounterStream(trajectory_seed(2, 4))
    st = init_state(model, bath, ThermalLaw(300.0), ("exciton", 1), stream)
    e0 = total_energy(st, model, bath)
    rotated = D2State(st.alpha * np.exp(1j * 0.8147), st.lam.copy())
    assert total_energy(rotated, model, bath) == pytest.approx(e0, rel=1e-12)


def test_d2state_validates_shapes():
    with pytest.raises(ValueError):
        D2State(alpha=[1.0, 0.0], lam=np.zeros((3, 2)))
