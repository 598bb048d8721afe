"""Trial-wavefunction parameters and thermal initial conditions.

The variational state is a set of complex site amplitudes alpha_n plus
one complex displacement lambda_mq per bath mode (a shared product of
coherent states).  Coordinate and momentum of a mode are
x = sqrt(2) Re lambda and p = sqrt(2) Im lambda.

Thermal sampling draws each displacement from the Glauber-Sudarshan
distribution P(lambda) ~ exp(-|lambda|^2 (e^{beta omega} - 1)): both
quadratures are independent zero-mean Gaussians with variance
nbar(omega)/2, so E|lambda|^2 = nbar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .model import BathModes, ExcitonModel, diagonalize
from .units import DEFAULT_UNITS, UnitSystem


@dataclass
class D2State:
    """Variational parameters at one instant.

    The amplitude norm sum |alpha_n|^2 stays 1 under exact dynamics;
    it is never renormalized here because its drift is the integrator
    quality diagnostic.
    """

    alpha: np.ndarray   # (N,) complex
    lam: np.ndarray     # (N, Q) complex displacements
    t: float = 0.0      # ps

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.complex128)
        self.lam = np.asarray(self.lam, dtype=np.complex128)
        if self.alpha.ndim != 1:
            raise ValueError("alpha must be 1-D")
        if self.lam.ndim != 2 or self.lam.shape[0] != self.alpha.size:
            raise ValueError("lam must be (n_sites, Q) with matching n_sites")

    @property
    def n_sites(self) -> int:
        return self.alpha.size

    @property
    def n_modes(self) -> int:
        return self.lam.shape[1]

    def norm(self) -> float:
        """sum |alpha_n|^2; deviation from 1 measures integrator error."""
        return float(np.sum(np.abs(self.alpha) ** 2))

    def copy(self) -> "D2State":
        return D2State(self.alpha.copy(), self.lam.copy(), self.t)


@dataclass(frozen=True)
class ThermalLaw:
    """Canonical occupation statistics at a fixed temperature."""

    temperature: float  # K
    units: UnitSystem = DEFAULT_UNITS

    def __post_init__(self):
        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0")

    def occupancy(self, omega_rad):
        """Mean thermal occupation nbar = 1/(e^{beta omega} - 1)."""
        return 2.0 * self.quadrature_variance(omega_rad)

    def quadrature_variance(self, omega_rad):
        """Variance of Re lambda (and of Im lambda): nbar/2.

        Computed as exp(-x)/(2(1 - exp(-x))) which underflows cleanly to
        zero for large beta*omega; T = 0 is the exact point mass at 0.
        """
        omega_rad = np.asarray(omega_rad, dtype=np.float64)
        if np.any(omega_rad <= 0.0):
            raise ValueError("omega must be > 0")
        if self.temperature == 0.0:
            out = np.zeros_like(omega_rad)
            return out if out.ndim else float(out)
        omega_cm = self.units.to_wavenumber(omega_rad)
        x = omega_cm / (self.units.kB * self.temperature)
        e = np.exp(-x)
        out = 0.5 * e / (1.0 - e)
        return out if out.ndim else float(out)


def sample_displacement(law: ThermalLaw, omega_rad, stream) -> np.ndarray:
    """Draw thermal coherent-state displacements for the given frequencies.

    Re and Im are independent N(0, nbar/2); consumes two stream counters
    per displacement regardless of temperature (T = 0 yields exact 0).
    """
    omega_rad = np.asarray(omega_rad, dtype=np.float64)
    sigma = np.sqrt(law.quadrature_variance(omega_rad))
    z = stream.complex_normals(omega_rad.shape if omega_rad.ndim else (1,))
    out = sigma * z.reshape(omega_rad.shape) if omega_rad.ndim else sigma * z[0]
    return out


# Initial electronic excitation: ("site", k) puts the whole amplitude on
# site k; ("exciton", e) uses the e-th eigenvector (ascending energy).
Excitation = tuple


def init_state(model: ExcitonModel, bath: BathModes,
               law: Union[ThermalLaw, Sequence[ThermalLaw]],
               excitation: Excitation, stream) -> D2State:
    """Thermally sampled displacements plus a chosen electronic start."""
    n, q = bath.n_sites, bath.n_modes
    if model.n_sites != n:
        raise ValueError("model and bath disagree on the number of sites")

    if isinstance(law, ThermalLaw):
        laws = [law] * n
    else:
        laws = list(law)
        if len(laws) != n:
            raise ValueError("need one thermal law per site")

    lam = np.empty((n, q), dtype=np.complex128)
    for m in range(n):
        # Stream layout: site-major, mode-minor, two counters per mode.
        lam[m] = sample_displacement(laws[m], bath.omega[m], stream)

    kind, index = excitation
    alpha = np.zeros(n, dtype=np.complex128)
    if kind == "site":
        if not 0 <= index < n:
            raise ValueError(f"site index {index} out of range for N={n}")
        alpha[index] = 1.0
    elif kind == "exciton":
        if not 0 <= index < n:
            raise ValueError(f"exciton index {index} out of range for N={n}")
        basis = diagonalize(model)
        alpha[:] = basis.vectors[:, index]
    else:
        raise ValueError(f"unknown excitation kind {kind!r}")
    return D2State(alpha=alpha, lam=lam, t=0.0)


def total_energy(state: D2State, model: ExcitonModel, bath: BathModes,
                 units: UnitSystem = DEFAULT_UNITS) -> float:
    """Hamiltonian expectation value in the trial state, in cm^-1.

    E = sum_n eps_n |a_n|^2 + sum_{n!=m} J_nm a_n* a_m
        + sum_{nq} omega |lambda|^2
        - sum_n |a_n|^2 sum_q omega g 2 Re lambda ;
    the J contribution is real for symmetric J (residue asserted).
    """
    if state.n_sites != model.n_sites or state.lam.shape != bath.omega.shape:
        raise ValueError("state dimensions do not match model/bath")
    alpha, lam = state.alpha, state.lam
    pop = np.abs(alpha) ** 2

    conv = units.wavenumber_to_angular
    e_sys = float(np.dot(model.epsilon, pop)) * conv
    j_term = complex(np.vdot(alpha, model.J @ alpha)) * conv
    if abs(j_term.imag) > 1e-10 * max(1.0, abs(j_term.real)):
        raise ValueError("J coupling term has a non-real expectation value; "
                         "J is not symmetric")
    e_bath = float(np.sum(bath.omega * (lam.real**2 + lam.imag**2)))
    e_coupling = -2.0 * float(np.sum(pop[:, None] * bath.omega * bath.g * lam.real))
    return (e_sys + j_term.real + e_bath + e_coupling) / conv
