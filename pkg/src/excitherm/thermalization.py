"""Stochastic contact with an implicit constant-temperature reservoir.

At the end of every interval tau, each primary-bath mode independently
flips a biased coin with heads probability nu*tau.  On heads the mode's
momentum (Im lambda) is replaced by a fresh draw from the thermal
marginal at the reservoir temperature T_inf; the coordinate (Re lambda)
and the electronic amplitudes are never touched.  Event counts per mode
follow a Bernoulli process that approximates Poisson statistics with
mean nu * t_total when nu*tau << 1.

Stream discipline: every interval consumes one coin and one candidate
momentum per mode (site-major, mode-minor), whether or not the coin
lands heads, so stream positions are outcome-independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import BathModes
from .state import D2State, ThermalLaw
from .units import DEFAULT_UNITS, UnitSystem


@dataclass(frozen=True)
class ThermalizationParams:
    """Scattering rate nu (ps^-1, per mode), interval tau (ps), T_inf (K)."""

    nu: float
    tau: float
    t_inf: float
    units: UnitSystem = DEFAULT_UNITS

    def __post_init__(self):
        if self.nu < 0.0:
            raise ValueError("nu must be >= 0")
        if self.tau <= 0.0:
            raise ValueError("tau must be > 0")
        if self.t_inf < 0.0:
            raise ValueError("t_inf must be >= 0")
        p = self.nu * self.tau
        if p > 1.0:
            raise ValueError(f"nu*tau = {p:.4g} exceeds 1; not a probability")
        if p > 0.1:
            warnings.warn(
                f"nu*tau = {p:.4g} > 0.1: Poisson limit degraded",
                stacklevel=2)

    @property
    def flip_probability(self) -> float:
        return self.nu * self.tau

    def reservoir_law(self) -> ThermalLaw:
        return ThermalLaw(self.t_inf, self.units)


def scatter_batch(lam: np.ndarray, omega: np.ndarray,
                  params: ThermalizationParams, stream) -> np.ndarray:
    """Apply one scattering round in place to a (B, N, Q) batch.

    Returns the per-(trajectory, site, mode) heads mask.  Consumes
    exactly 3*N*Q counters from the stream (coins then momenta).
    """
    shape = lam.shape[1:]
    coins = stream.uniforms(shape)
    draws = stream.normals(shape)
    p = params.flip_probability
    heads = coins < p
    if p > 0.0:
        sigma = np.sqrt(params.reservoir_law().quadrature_variance(omega))
        new_im = np.where(heads, sigma * draws, lam.imag)
        lam.imag = new_im
    return heads


def scatter(state: D2State, bath: BathModes, params: ThermalizationParams,
            stream) -> D2State:
    """One scattering round on a single state (new state returned)."""
    if state.lam.shape != bath.omega.shape:
        raise ValueError("state dimensions do not match bath")
    new = state.copy()
    scatter_batch(new.lam[None, :, :], bath.omega, params, stream)
    return new


def expected_event_count(nu: float, t_total: float) -> float:
    """Mean number of scattering events per mode over the whole run."""
    if nu < 0.0:
        raise ValueError("nu must be >= 0")
    return nu * t_total
