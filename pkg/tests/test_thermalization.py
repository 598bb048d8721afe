import math

import numpy as np
import pytest

from excitherm import (BathModes, BathSpec, CounterStream, D2State,
                       ExcitonModel, ThermalLaw, ThermalizationParams,
                       build_bath, expected_event_count, scatter,
                       trajectory_seed)
from excitherm.ensemble import IntegratorConfig, RunConfig, run_ensemble
from excitherm.observables import bath_temperature, windowed_kinetic_energy
from excitherm.rng import BatchStream
from excitherm.thermalization import scatter_batch
from excitherm.units import KB_CM_PER_K, WAVENUMBER_TO_ANGULAR as CONV


def _bath(q=16, n_sites=1):
    return build_bath(BathSpec(Q=q, delta_omega=10.0, lambda_reorg=0.0),
                      n_sites=n_sites)


def _state(bath, seed=0):
    stream = CounterStream(trajectory_seed(seed, 0))
    lam = np.sqrt(0.5) * stream.complex_normals(bath.omega.shape)
    alpha = np.zeros(bath.n_sites, dtype=complex)
    alpha[0] = 1.0
    return D2State(alpha=alpha, lam=lam), stream


def test_params_validation():
    with pytest.raises(ValueError):
        ThermalizationParams(nu=-1.0, tau=0.01, t_inf=100.0)
    with pytest.raises(ValueError):
        ThermalizationParams(nu=1.0, tau=0.0, t_inf=100.0)
    with pytest.raises(ValueError):
        ThermalizationParams(nu=150.0, tau=0.01, t_inf=100.0)  # nu*tau > 1
    with pytest.warns(UserWarning, match="Poisson limit degraded"):
        ThermalizationParams(nu=50.0, tau=0.01, t_inf=100.0)
    params = ThermalizationParams(nu=2.5, tau=0.01, t_inf=200.0)
    assert params.flip_probability == pytest.approx(0.025)


def test_scatter_zero_rate_bitwise_unchanged():
    bath = _bath()
    st, stream = _state(bath, seed=1)
    before_alpha = st.alpha.copy()
    before_lam = st.lam.copy()
    params = ThermalizationParams(nu=0.0, tau=0.01, t_inf=200.0)
    cursor0 = stream.cursor
    out = scatter(st, bath, params, stream)
    assert np.array_equal(out.alpha, before_alpha)
    assert np.array_equal(out.lam, before_lam)
    # Coins and candidate momenta are consumed even when nothing happens.
    assert stream.cursor == cursor0 + 3 * bath.omega.size


def test_scatter_preserves_coordinates_and_amplitudes():
    bath = _bath(q=200)
    st, stream = _state(bath, seed=2)
    params = ThermalizationParams(nu=9.0, tau=0.01, t_inf=150.0)
    out = scatter(st, bath, params, stream)
    assert np.array_equal(out.lam.real, st.lam.real)
    assert np.array_equal(out.alpha, st.alpha)
    assert np.any(out.lam.imag != st.lam.imag)


def test_scatter_certain_resample_matches_reservoir_marginal():
    q = 2000
    omega_cm = 80.0
    bath = BathModes(omega=np.full((1, q), omega_cm * CONV),
                     g=np.zeros((1, q)))
    st = D2State(alpha=[1.0], lam=np.full((1, q), 3.0 + 3.0j))
    params = ThermalizationParams(nu=100.0, tau=0.01, t_inf=250.0)
    with pytest.warns(UserWarning):
        params = ThermalizationParams(nu=100.0, tau=0.01, t_inf=250.0)
    stream = CounterStream(trajectory_seed(4, 0))
    out = scatter(st, bath, params, stream)
    var_expected = 0.5 / math.expm1(omega_cm / (KB_CM_PER_K * 250.0))
    sample_var = np.var(out.lam.imag)
    tol = 3.0 * var_expected * math.sqrt(2.0 / q)
    assert np.array_equal(out.lam.real, st.lam.real)
    assert abs(sample_var - var_expected) < tol


def test_scatter_flip_fraction_statistics():
    bath = _bath(q=100)
    params = ThermalizationParams(nu=2.5, tau=0.01, t_inf=100.0)
    seeds = np.array([trajectory_seed(6, i) for i in range(100)],
                     dtype=np.uint64)
    stream = BatchStream(seeds)
    lam = np.zeros((100, 1, 100), dtype=complex)
    total = 0
    rounds = 40
    for _ in range(rounds):
        heads = scatter_batch(lam, bath.omega, params, stream)
        total += int(heads.sum())
    n_coins = rounds * lam.size
    p = params.flip_probability
    se = math.sqrt(n_coins * p * (1.0 - p))
    assert abs(total - n_coins * p) < 3.0 * se


def test_expected_event_count():
    assert expected_event_count(2.5, 10.0) == pytest.approx(25.0)
    assert expected_event_count(0.0, 10.0) == 0.0
    with pytest.raises(ValueError):
        expected_event_count(-0.5, 1.0)


def _cooling_config(nu, t_total, q=24, n_traj=300):
    model = ExcitonModel(epsilon=[0.0], J=[[0.0]])
    spec = BathSpec(Q=q, omega0=0.01, delta_omega=5.0, s=2.0, omega_c=100.0,
                    lambda_reorg=0.0)
    params = ThermalizationParams(nu=nu, tau=0.01, t_inf=200.0) if nu > 0 \
        else None
    return RunConfig(
        model=model, bath_spec=spec, t0=300.0, params=params,
        integrator=IntegratorConfig(dt=0.005, t_total=t_total,
                                    record_stride=10),
        n_trajectories=n_traj, master_seed=2024, excitation=("site", 0))


def _estimated_temperature(config, result):
    bath = config.bath()
    kinetic = windowed_kinetic_energy(result.im2_series(), bath, 0.05)
    return bath_temperature(kinetic, bath, 0.05).temperature[:, 0]


def test_free_bath_cooling_convergence_and_rate_ordering():
    # Uncoupled bath, T0 = 300 K, reservoir at 200 K.  Higher scattering
    # rates must cool faster; nu >= 1 reaches the reservoir temperature
    # (the nu = 0.1 tail is exercised at scale in the acceptance suite).
    final_temps = {}
    at_fixed_time = {}
    for nu in (0.1, 1.0, 10.0):
        config = _cooling_config(nu, t_total=8.0)
        result = run_ensemble(config)
        temps = _estimated_temperature(config, result)
        times = result.times
        final_temps[nu] = float(np.mean(temps[times > 7.0]))
        at_fixed_time[nu] = float(np.mean(temps[(times > 3.5) & (times < 4.5)]))
    assert abs(final_temps[1.0] - 200.0) < 5.0
    assert abs(final_temps[10.0] - 200.0) < 5.0
    assert at_fixed_time[10.0] < at_fixed_time[1.0] < at_fixed_time[0.1] < 300.0


def test_no_scattering_conserves_energy_and_temperature():
    model = ExcitonModel(epsilon=[0.0], J=[[0.0]])
    spec = BathSpec(Q=32, omega0=0.01, delta_omega=5.0, s=2.0,
                    omega_c=100.0, lambda_reorg=0.0)
    config = RunConfig(
        model=model, bath_spec=spec, t0=300.0, params=None,
        integrator=IntegratorConfig(dt=0.002, t_total=2.0, record_stride=5),
        n_trajectories=800, master_seed=2024, excitation=("site", 0))
    result = run_ensemble(config)
    e = result.energy_mean
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-6
    temps = _estimated_temperature(config, result)
    assert np.max(np.abs(temps - 300.0)) < 8.0
