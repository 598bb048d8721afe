"""Aggregate Hamiltonian: sites, couplings and the discretized local baths.

The electronic part is a tight-binding single-excitation Hamiltonian
(site energies eps_n, resonant couplings J_nm).  Each site owns an
identical, uncorrelated manifold of Q harmonic modes obtained by
discretizing a super-Ohmic spectral density on an equidistant grid.

Couplings are normalized so that the per-site reorganization energy
sum_q omega_q * g_q**2 equals a prescribed Lambda; Lambda is the single
knob controlling system-bath coupling strength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .units import DEFAULT_UNITS, UnitSystem


@dataclass(frozen=True)
class ExcitonModel:
    """Site energies (cm^-1) and symmetric resonant coupling matrix (cm^-1)."""

    epsilon: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        eps = np.atleast_1d(np.asarray(self.epsilon, dtype=np.float64))
        J = np.asarray(self.J, dtype=np.float64)
        if eps.ndim != 1 or eps.size < 1:
            raise ValueError("epsilon must be a non-empty 1-D array")
        n = eps.size
        if J.shape != (n, n):
            raise ValueError(f"J must be {n}x{n}, got {J.shape}")
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max())):
            raise ValueError("J must be symmetric")
        if np.any(np.diag(J) != 0.0):
            raise ValueError("J must have a zero diagonal")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "J", J)

    @property
    def n_sites(self) -> int:
        return self.epsilon.size

    def hamiltonian(self) -> np.ndarray:
        """Dense N x N system Hamiltonian in cm^-1."""
        return np.diag(self.epsilon) + self.J


@dataclass(frozen=True)
class BathSpec:
    """Equidistant discretization of the spectral density, per site.

    Mode frequencies are omega_q = omega0 + (q-1)*delta_omega for
    q = 1..Q (all in cm^-1); the small offset omega0 keeps the lowest
    mode away from zero.
    """

    Q: int
    omega0: float = 0.01
    delta_omega: float = 1.0
    s: float = 2.0
    omega_c: float = 100.0
    lambda_reorg: float = 100.0

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be > 0")
        if self.delta_omega <= 0.0:
            raise ValueError("delta_omega must be > 0")
        if self.omega_c <= 0.0:
            raise ValueError("omega_c must be > 0")
        if self.lambda_reorg < 0.0:
            raise ValueError("lambda_reorg must be >= 0")

    def frequencies_cm(self) -> np.ndarray:
        return self.omega0 + self.delta_omega * np.arange(self.Q, dtype=np.float64)


@dataclass(frozen=True)
class BathModes:
    """Per-(site, mode) frequencies in rad/ps and dimensionless couplings."""

    omega: np.ndarray  # (N, Q), rad/ps
    g: np.ndarray      # (N, Q), dimensionless

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        if omega.ndim != 2 or omega.shape != g.shape:
            raise ValueError("omega and g must be matching (n_sites, Q) arrays")
        if np.any(omega <= 0.0):
            raise ValueError("all mode frequencies must be > 0")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "g", g)

    @property
    def n_sites(self) -> int:
        return self.omega.shape[0]

    @property
    def n_modes(self) -> int:
        return self.omega.shape[1]

    def reorganization_energy(self) -> np.ndarray:
        """Per-site sum omega*g^2 in rad/ps units."""
        return np.sum(self.omega * self.g**2, axis=1)


@dataclass(frozen=True)
class EigenBasis:
    """Eigendecomposition of the system Hamiltonian.

    energies ascend; vectors[:, e] is the e-th eigenvector with the
    sign fixed so its largest-magnitude entry is positive.
    """

    energies: np.ndarray  # (N,), cm^-1, ascending
    vectors: np.ndarray   # (N, N), columns orthonormal


def spectral_density(omega, s: float, omega_c: float):
    """Super-Ohmic weight omega**s * exp(-omega/omega_c); omega in cm^-1."""
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(omega < 0.0):
        raise ValueError("omega must be >= 0")
    if omega_c <= 0.0:
        raise ValueError("omega_c must be > 0")
    out = omega**s * np.exp(-omega / omega_c)
    return out if out.ndim else float(out)


def build_bath(spec: BathSpec, units: UnitSystem = DEFAULT_UNITS,
               n_sites: int = 1) -> BathModes:
    """Discretize the spectral density into identical per-site modes.

    g_q**2 is proportional to C''(omega_q)/omega_q**2 with the global
    scale fixed by sum_q omega_q g_q**2 = lambda_reorg (enforced in the
    same units on both sides, so it holds in cm^-1 and rad/ps alike).
    """
    omega_cm = spec.frequencies_cm()
    weight = spectral_density(omega_cm, spec.s, spec.omega_c) / omega_cm**2
    if spec.lambda_reorg > 0.0:
        norm = float(np.sum(omega_cm * weight))
        if norm <= 0.0:
            raise ValueError(
                "cannot normalize couplings: spectral weights vanish on the "
                "whole frequency grid but lambda_reorg > 0")
        g = np.sqrt(spec.lambda_reorg * weight / norm)
    else:
        g = np.zeros_like(omega_cm)
    omega_rad = units.to_angular(omega_cm)
    return BathModes(
        omega=np.tile(omega_rad, (n_sites, 1)),
        g=np.tile(g, (n_sites, 1)),
    )


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def diagonalize(model: ExcitonModel) -> EigenBasis:
    """Eigenpairs of H_S, ascending, with the deterministic sign rule."""
    h = model.hamiltonian()
    energies, vectors = np.linalg.eigh(h)
    order = np.argsort(energies, kind="stable")
    return EigenBasis(energies=energies[order],
                      vectors=_fix_eigenvector_signs(vectors[:, order]))


def specific_heat(beta, omega):
    """Heat capacity of one harmonic mode in k_B units.

    c = x**2 e^x / (e^x - 1)**2 with x = beta*omega (beta and omega in
    reciprocal units); evaluated as (x / (2 sinh(x/2)))**2 which is
    stable for both tails.
    """
    beta = np.asarray(beta, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    if np.any(beta <= 0.0):
        raise ValueError("beta must be > 0")
    if np.any(omega <= 0.0):
        raise ValueError("omega must be > 0")
    x = beta * omega
    out = np.empty_like(x)
    small = x < 700.0  # sinh overflows near 710
    xs = x[small]
    out[small] = (xs / (2.0 * np.sinh(0.5 * xs))) ** 2
    out[~small] = 0.0
    return out if out.ndim else float(out)
