#!/usr/bin/env python3
"""Cooling of a finite bath toward the reservoir temperature.

The primary bath starts at 300 K; the implicit reservoir sits at 200 K.
Momentum-resampling events at rate nu per mode steer the windowed
kinetic-energy temperature estimate from 300 K down to 200 K, faster for
larger nu, while nu = 0 leaves the temperature pinned at its initial
value.

Reduced scale (Q = 150, 500 trajectories, short horizons); see
configs/fig2_cooling.json for the production setup.
"""

import numpy as np

from excitherm import (BathSpec, ExcitonModel, IntegratorConfig, RunConfig,
                       ThermalizationParams, bath_temperature, run_ensemble,
                       windowed_kinetic_energy)

WINDOW_PS = 0.05


def run(nu, t_total):
    params = None if nu == 0.0 else ThermalizationParams(
        nu=nu, tau=0.01, t_inf=200.0)
    config = RunConfig(
        model=ExcitonModel(epsilon=[0.0], J=[[0.0]]),
        bath_spec=BathSpec(Q=150, omega0=0.01, delta_omega=1.0, s=2.0,
                           omega_c=100.0, lambda_reorg=100.0),
        t0=300.0,
        params=params,
        integrator=IntegratorConfig(dt=5e-3, t_total=t_total,
                                    record_stride=2),
        n_trajectories=500,
        master_seed=777,
        excitation=("site", 0),
    )
    result = run_ensemble(config)
    bath = config.bath()
    kinetic = windowed_kinetic_energy(result.im2_series(), bath, WINDOW_PS)
    temps = bath_temperature(kinetic, bath, WINDOW_PS).temperature[:, 0]
    return result.times, temps


def main():
    horizons = {0.0: 10.0, 0.1: 20.0, 1.0: 10.0, 10.0: 10.0}
    curves = {}
    for nu, t_total in horizons.items():
        times, temps = run(nu, t_total)
        curves[nu] = (times, temps)
        print(f"nu = {nu:4.1f} ps^-1: T(0) = {temps[0]:6.1f} K, "
              f"T(end) = {temps[-1]:6.1f} K")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for nu, (times, temps) in curves.items():
        label = "no scattering" if nu == 0.0 else f"nu = {nu:g} ps$^{{-1}}$"
        ax.plot(times, temps, lw=1.2, label=label)
    ax.axhline(200.0, color="k", ls=":", lw=0.8)
    ax.set_xlabel("t (ps)")
    ax.set_ylabel("bath temperature (K)")
    ax.set_title("Primary bath temperature, reservoir at 200 K")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig("fig2_cooling.png", dpi=160)
    print("wrote fig2_cooling.png")


if __name__ == "__main__":
    main()
