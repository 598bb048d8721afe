"""Unit conventions.

Everything inside the propagation core runs in angular frequency units
(rad/ps) with hbar = 1, so energies and frequencies are interchangeable
and time is in picoseconds.  Only the I/O layers (configs, CSV output,
thermal laws) speak wavenumbers (cm^-1), Kelvin and femtoseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Boltzmann constant in wavenumbers per Kelvin.
KB_CM_PER_K = 0.6950348

# Speed of light in cm/ps; 2*pi*c converts cm^-1 to rad/ps.
_C_CM_PER_PS = 0.0299792458
WAVENUMBER_TO_ANGULAR = 2.0 * math.pi * _C_CM_PER_PS  # 0.1883651567... rad/ps per cm^-1


@dataclass(frozen=True)
class UnitSystem:
    """Fixed physical constants used throughout a run."""

    kB: float = KB_CM_PER_K                          # cm^-1 / K
    wavenumber_to_angular: float = WAVENUMBER_TO_ANGULAR  # rad/ps per cm^-1

    def to_angular(self, omega_cm):
        """cm^-1 -> rad/ps."""
        return omega_cm * self.wavenumber_to_angular

    def to_wavenumber(self, omega_rad):
        """rad/ps -> cm^-1."""
        return omega_rad / self.wavenumber_to_angular

    def beta_omega(self, omega_cm, temperature_K):
        """Dimensionless beta*omega for a mode at the given temperature."""
        if temperature_K < 0:
            raise ValueError("temperature must be >= 0")
        if temperature_K == 0.0:
            return math.inf
        return omega_cm / (self.kB * temperature_K)


DEFAULT_UNITS = UnitSystem()
