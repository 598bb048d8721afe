"""Measured quantities derived from ensemble moments.

The ensemble layer accumulates, per snapshot, the averaged coherence
matrix <alpha_n* alpha_m>, the first moments of Re lambda and Im lambda
and the second moment of Im lambda per (site, mode).  Everything here is
pure post-processing of those moments.

The transient bath temperature inverts the windowed mean kinetic energy
K_mq = omega_mq <(Im lambda_mq)^2> through the Bose-Einstein occupancy:
for a canonical ensemble K = omega*nbar/2 exactly, which makes the
estimator an exact round trip of the thermal sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BathModes, EigenBasis
from .units import DEFAULT_UNITS, UnitSystem


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled ensemble-averaged series."""

    times: np.ndarray        # (S,) ps, strictly increasing, uniform stride
    values: np.ndarray       # (S, ...) observable-dependent
    n_trajectories: int

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if times.size > 1:
            strides = np.diff(times)
            if np.any(strides <= 0.0):
                raise ValueError("times must be strictly increasing")
            if not np.allclose(strides, strides[0], rtol=1e-9, atol=1e-12):
                raise ValueError("times must have a uniform stride")
        object.__setattr__(self, "times", times)

    @property
    def stride(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0


@dataclass(frozen=True)
class TemperatureEstimate:
    """Per-site transient temperatures and the smoothing window used."""

    times: np.ndarray        # (S,) ps
    temperature: np.ndarray  # (S, N) Kelvin
    epsilon: float           # window width, ps


def exciton_populations(coherence: TimeSeries, basis: EigenBasis) -> TimeSeries:
    """Populations in the eigenstate basis from the site coherence matrix.

    rho_e = sum_{n,m} psi_ne* <alpha_n* alpha_m> psi_me per snapshot.
    The input matrices must be Hermitian to 1e-10.
    """
    c = np.asarray(coherence.values)
    if c.ndim != 3 or c.shape[1] != c.shape[2]:
        raise ValueError("coherence values must be (S, N, N)")
    asym = np.max(np.abs(c - np.conj(np.swapaxes(c, 1, 2))))
    if asym > 1e-10:
        raise ValueError(f"coherence matrix is not Hermitian (deviation {asym:.3g})")
    psi = basis.vectors
    rho = np.einsum("ne,snm,me->se", psi.conj(), c, psi).real
    return TimeSeries(times=coherence.times, values=rho,
                      n_trajectories=coherence.n_trajectories)


def _window_half_width(times: np.ndarray, epsilon: float) -> int:
    if times.size < 2:
        return 0
    stride = float(times[1] - times[0])
    if epsilon < stride * (1.0 - 1e-9):
        raise ValueError(
            f"window epsilon = {epsilon:.4g} ps is smaller than the snapshot "
            f"stride {stride:.4g} ps")
    # Snapshots within +-epsilon/2 of the center enter the average.
    return int(math.floor(0.5 * epsilon / stride + 1e-9))


def _moving_average(values: np.ndarray, half_width: int) -> np.ndarray:
    """Centered moving average along axis 0, truncated at the edges."""
    if half_width == 0:
        return values.copy()
    s = values.shape[0]
    csum = np.cumsum(values, axis=0, dtype=np.float64)
    out = np.empty_like(values, dtype=np.float64)
    for i in range(s):
        lo = max(0, i - half_width)
        hi = min(s - 1, i + half_width)
        total = csum[hi] - (csum[lo - 1] if lo > 0 else 0.0)
        out[i] = total / (hi - lo + 1)
    return out


def windowed_kinetic_energy(im2: TimeSeries, bath: BathModes, epsilon: float,
                            units: UnitSystem = DEFAULT_UNITS) -> TimeSeries:
    """Mean mode kinetic energy, window-averaged, in cm^-1.

    ``im2`` holds the ensemble means <(Im lambda_mq)^2> with values of
    shape (S, N, Q).  The ensemble average is taken before windowing.
    """
    vals = np.asarray(im2.values, dtype=np.float64)
    if vals.ndim != 3 or vals.shape[1:] != bath.omega.shape:
        raise ValueError("im2 values must be (S, n_sites, Q) matching the bath")
    half = _window_half_width(im2.times, epsilon)
    omega_cm = units.to_wavenumber(bath.omega)
    k = omega_cm[None, :, :] * _moving_average(vals, half)
    return TimeSeries(times=im2.times, values=k,
                      n_trajectories=im2.n_trajectories)


def bath_temperature(kinetic: TimeSeries, bath: BathModes, epsilon: float,
                     units: UnitSystem = DEFAULT_UNITS) -> TemperatureEstimate:
    """Invert windowed kinetic energies into per-site temperatures (K).

    T_m(t) = 1/(kB Q) sum_q omega_mq / ln(1 + omega_mq / (2 K_mq(t)));
    modes with K = 0 contribute 0 (the T -> 0 limit).
    """
    k = np.asarray(kinetic.values, dtype=np.float64)
    if k.ndim != 3 or k.shape[1:] != bath.omega.shape:
        raise ValueError("kinetic values must be (S, n_sites, Q) matching the bath")
    if np.any(k < 0.0):
        raise ValueError("kinetic energies must be >= 0")
    omega_cm = units.to_wavenumber(bath.omega)[None, :, :]
    with np.errstate(divide="ignore"):
        log_term = np.log1p(omega_cm / (2.0 * k))
        per_mode = np.where(k > 0.0, omega_cm / log_term, 0.0)
    q = bath.n_modes
    t_site = per_mode.sum(axis=2) / (units.kB * q)
    return TemperatureEstimate(times=kinetic.times, temperature=t_site,
                               epsilon=epsilon)


def phase_space_mean(re_mean: TimeSeries, im_mean: TimeSeries,
                     site: int, mode: int) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble-mean coordinate and momentum series of one mode.

    <x> = sqrt(2) <Re lambda>, <p> = sqrt(2) <Im lambda>.
    """
    re = np.asarray(re_mean.values)
    im = np.asarray(im_mean.values)
    if not (0 <= site < re.shape[1] and 0 <= mode < re.shape[2]):
        raise IndexError("site or mode index out of range")
    root2 = math.sqrt(2.0)
    return root2 * re[:, site, mode], root2 * im[:, site, mode]


def recursion_time(delta_omega_cm: float,
                   units: UnitSystem = DEFAULT_UNITS) -> float:
    """Revival time 2*pi/delta_omega of an equidistant finite bath, in ps."""
    if delta_omega_cm <= 0.0:
        raise ValueError("delta_omega must be > 0")
    return 2.0 * math.pi / units.to_angular(delta_omega_cm)
