import math

import numpy as np
import pytest

from excitherm import (BathModes, BathSpec, CounterStream, ExcitonModel,
                       ThermalLaw, TimeSeries, bath_temperature, build_bath,
                       diagonalize, exciton_populations, phase_space_mean,
                       recursion_time, trajectory_seed,
                       windowed_kinetic_energy)
from excitherm.units import KB_CM_PER_K, WAVENUMBER_TO_ANGULAR as CONV


def _series(values, stride=0.01, n_traj=100):
    values = np.asarray(values)
    times = np.arange(values.shape[0]) * stride
    return TimeSeries(times=times, values=values, n_trajectories=n_traj)


def _three_site_basis():
    model = ExcitonModel(
        epsilon=[0.0, 250.0, 500.0],
        J=[[0.0, 100.0, 0.0], [100.0, 0.0, 100.0], [0.0, 100.0, 0.0]])
    return diagonalize(model)


def test_exciton_populations_initial_eigenstate():
    basis = _three_site_basis()
    alpha0 = basis.vectors[:, 2].astype(complex)
    coh = np.outer(alpha0.conj(), alpha0)[None, :, :]
    pops = exciton_populations(_series(coh), basis)
    assert pops.values[0] == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)


def test_exciton_populations_site_basis_identity():
    model = ExcitonModel(epsilon=[10.0, 20.0, 30.0], J=np.zeros((3, 3)))
    basis = diagonalize(model)
    site_pops = np.array([0.5, 0.3, 0.2])
    coh = np.diag(site_pops).astype(complex)[None, :, :]
    pops = exciton_populations(_series(coh), basis)
    assert pops.values[0] == pytest.approx(site_pops, abs=1e-12)


def test_exciton_populations_trace_preserved():
    rng = np.random.default_rng(31)
    basis = _three_site_basis()
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    coh = a @ a.conj().T
    coh /= np.trace(coh).real
    pops = exciton_populations(_series(coh[None, :, :]), basis)
    assert pops.values[0].sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(pops.values[0] > -1e-12)


def test_exciton_populations_rejects_non_hermitian():
    basis = _three_site_basis()
    coh = np.zeros((1, 3, 3), dtype=complex)
    coh[0, 0, 1] = 1e-6  # no conjugate partner
    with pytest.raises(ValueError, match="Hermitian"):
        exciton_populations(_series(coh), basis)


def test_windowed_kinetic_energy_thermal_level():
    # Frozen thermal ensemble: <K> = omega * nbar / 2 in cm^-1.
    omega_cm = 120.0
    temperature = 250.0
    bath = BathModes(omega=[[omega_cm * CONV]], g=[[0.0]])
    stream = CounterStream(trajectory_seed(17, 0))
    n = 200_000
    lam = math.sqrt(0.5 / math.expm1(
        omega_cm / (KB_CM_PER_K * temperature))) * stream.complex_normals((n,))
    im2 = np.full((9, 1, 1), np.mean(lam.imag ** 2))
    kinetic = windowed_kinetic_energy(_series(im2, n_traj=n), bath, 0.05)
    expected = omega_cm * (1.0 / math.expm1(
        omega_cm / (KB_CM_PER_K * temperature))) / 2.0
    se = omega_cm * np.std(lam.imag ** 2) / math.sqrt(n)
    assert abs(kinetic.values[0, 0, 0] - expected) < 3 * se


def test_windowed_kinetic_energy_real_displacements():
    bath = BathModes(omega=[[5.0, 9.0]], g=[[0.0, 0.0]])
    im2 = np.zeros((5, 1, 2))
    kinetic = windowed_kinetic_energy(_series(im2), bath, 0.05)
    assert np.all(kinetic.values == 0.0)


def test_windowed_kinetic_energy_full_window_is_global_mean():
    bath = BathModes(omega=[[1.0 * CONV]], g=[[0.0]])
    values = np.arange(7.0).reshape(7, 1, 1)
    kinetic = windowed_kinetic_energy(_series(values), bath, 10.0)
    assert kinetic.values[3, 0, 0] == pytest.approx(values.mean())


def test_windowed_kinetic_energy_rejects_small_window():
    bath = BathModes(omega=[[1.0]], g=[[0.0]])
    with pytest.raises(ValueError, match="smaller than the snapshot"):
        windowed_kinetic_energy(_series(np.zeros((5, 1, 1))), bath, 0.001)


def test_window_truncates_at_edges():
    bath = BathModes(omega=[[1.0 / CONV * CONV]], g=[[0.0]])
    values = np.zeros((5, 1, 1))
    values[0] = 10.0
    kinetic = windowed_kinetic_energy(_series(values), bath, 0.02)
    # First point averages snapshots {0, 1} only; index 1 sees {0, 1, 2}.
    conv = 1.0 / CONV
    assert kinetic.values[0, 0, 0] == pytest.approx(conv * 5.0)
    assert kinetic.values[1, 0, 0] == pytest.approx(conv * 10.0 / 3.0)
    assert kinetic.values[2, 0, 0] == 0.0


def test_bath_temperature_exact_inversion():
    bath = build_bath(BathSpec(Q=60, delta_omega=9.0, lambda_reorg=0.0))
    for temperature in (77.0, 200.0, 300.0):
        nbar = ThermalLaw(temperature).occupancy(bath.omega)
        k = (bath.omega / CONV) * nbar / 2.0
        series = _series(np.stack([k, k]), stride=0.01)
        est = bath_temperature(series, bath, 0.01)
        assert est.temperature[0, 0] == pytest.approx(temperature, rel=1e-10)


def test_bath_temperature_zero_kinetic_is_zero():
    bath = BathModes(omega=[[10.0, 20.0]], g=[[0.0, 0.0]])
    series = _series(np.zeros((2, 1, 2)))
    est = bath_temperature(series, bath, 0.01)
    assert np.all(est.temperature == 0.0)


def test_bath_temperature_mode_permutation_invariant():
    rng = np.random.default_rng(7)
    omega = rng.uniform(5.0, 80.0, size=12)
    k = rng.uniform(1.0, 40.0, size=(3, 1, 12))
    perm = rng.permutation(12)
    bath_a = BathModes(omega=omega[None, :], g=np.zeros((1, 12)))
    bath_b = BathModes(omega=omega[perm][None, :], g=np.zeros((1, 12)))
    ta = bath_temperature(_series(k), bath_a, 0.01).temperature
    tb = bath_temperature(_series(k[:, :, perm]), bath_b, 0.01).temperature
    assert ta == pytest.approx(tb, rel=1e-12)


def test_phase_space_mean_thermal_origin():
    stream = CounterStream(trajectory_seed(23, 0))
    n = 100_000
    sigma = math.sqrt(0.5 / math.expm1(0.5))
    lam = sigma * stream.complex_normals((n,))
    re = np.array([[np.mean(lam.real)]])[None, :, :]
    im = np.array([[np.mean(lam.imag)]])[None, :, :]
    x, p = phase_space_mean(_series(re, n_traj=n), _series(im, n_traj=n), 0, 0)
    bound = 3.0 * math.sqrt(2.0) * sigma / math.sqrt(n)
    assert abs(x[0]) < bound and abs(p[0]) < bound


def test_recursion_time_values():
    assert recursion_time(50.0) == pytest.approx(
        2.0 * math.pi / (50.0 * CONV), rel=1e-14)
    assert recursion_time(50.0) == pytest.approx(0.667, abs=5e-4)
    assert recursion_time(1.0) == pytest.approx(33.36, abs=5e-3)
    assert recursion_time(2.0) == pytest.approx(recursion_time(1.0) / 2.0,
                                                rel=1e-14)
    with pytest.raises(ValueError):
        recursion_time(0.0)


def test_time_series_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        TimeSeries(times=np.array([0.0, 0.0]), values=np.zeros(2),
                   n_trajectories=1)
    with pytest.raises(ValueError, match="uniform"):
        TimeSeries(times=np.array([0.0, 1.0, 3.0]), values=np.zeros(3),
                   n_trajectories=1)
