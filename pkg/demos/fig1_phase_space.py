#!/usr/bin/env python3
"""Phase-space trajectory of one bath mode under stochastic thermostatting.

A single excited chromophore is coupled to a discretized super-Ohmic
bath sampled at 300 K while the reservoir sits at 200 K.  The ensemble
mean (<x>, <p>) of the 100 cm^-1 mode traces a closed orbit around the
displaced minimum x_min = sqrt(2) g when no scattering is active, and
spirals into (x_min, 0) once momentum resampling dissipates the mode.

Reduced scale (Q = 150, 2000 trajectories) so the script finishes in a
couple of minutes; raise the numbers toward configs/fig1_phase_space.json
for production-quality curves.
"""

import math

import numpy as np

from excitherm import (BathSpec, ExcitonModel, IntegratorConfig, RunConfig,
                       ThermalizationParams, phase_space_mean, run_ensemble)

Q = 150
N_TRAJ = 2000
MODE = 100  # grid index of the 100.01 cm^-1 mode


def run(nu):
    params = None if nu == 0.0 else ThermalizationParams(
        nu=nu, tau=0.01, t_inf=200.0)
    config = RunConfig(
        model=ExcitonModel(epsilon=[0.0], J=[[0.0]]),
        bath_spec=BathSpec(Q=Q, omega0=0.01, delta_omega=1.0, s=2.0,
                           omega_c=100.0, lambda_reorg=500.0),
        t0=300.0,
        params=params,
        integrator=IntegratorConfig(dt=1e-3, t_total=1.5, record_stride=10),
        n_trajectories=N_TRAJ,
        master_seed=31415,
        excitation=("site", 0),
    )
    result = run_ensemble(config)
    x, p = phase_space_mean(result.re_series(), result.im_series(), 0, MODE)
    return config.bath(), result.times, x, p


def main():
    curves = {}
    for nu in (0.0, 1.0, 10.0):
        bath, times, x, p = run(nu)
        curves[nu] = (x, p)
        print(f"nu = {nu:4.1f} ps^-1: final (<x>, <p>) = "
              f"({x[-1]: .4f}, {p[-1]: .4f})")
    x_min = math.sqrt(2.0) * bath.g[0, MODE]
    print(f"displaced minimum sqrt(2) g = {x_min:.4f}")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.2, 5.0))
    for nu, (x, p) in curves.items():
        label = "no scattering" if nu == 0.0 else f"nu = {nu:g} ps$^{{-1}}$"
        ax.plot(x, p, lw=1.2, label=label)
    ax.plot([x_min], [0.0], "k+", ms=12, label=r"$(\sqrt{2}g,\,0)$")
    ax.set_xlabel(r"$\langle x \rangle$")
    ax.set_ylabel(r"$\langle p \rangle$")
    ax.set_title("100 cm$^{-1}$ mode, ensemble-mean phase space")
    ax.legend(fontsize=8)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig("fig1_phase_space.png", dpi=160)
    print("wrote fig1_phase_space.png")


if __name__ == "__main__":
    main()
