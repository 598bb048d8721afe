"""Variational equations of motion and the fixed-step RK4 integrator.

All rates are in rad/ps.  With W_n = sum_q omega_nq g_nq Re(lambda_nq)
and populations p_n = |alpha_n|^2, the equations are

    d(alpha_n)/dt  = -i eps_n alpha_n - i sum_{m != n} J_nm alpha_m
                     + i alpha_n (2 W_n - sum_m p_m W_m)
    d(lambda_mq)/dt = -i omega_mq (lambda_mq - g_mq p_m)

i.e. every mode is driven by its own site's population-weighted coupling
(baths are local and uncorrelated), and the amplitude phase term carries
the bath-motion contribution summed over all baths, which is what makes
the flow conserve <H> exactly.

The integrator applies RK4 to the amplitudes in a frame rotating at the
mid-spectrum electronic frequency and restores the exact global phase
factor after every step.  The rotation is a pure gauge (no observable,
and no other equation, depends on it) but it shrinks the spectral radius
RK4 sees, which is what keeps the slightly non-unitary RK4 amplification
factor from eating the amplitude norm on long runs.

The kernels evaluate whole batches of trajectories at once: alpha has
shape (B, N) and lambda (B, N, Q).  Single-state entry points wrap the
batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BathModes, ExcitonModel
from .state import D2State
from .units import DEFAULT_UNITS, UnitSystem


class TrajectoryError(RuntimeError):
    """A trajectory produced non-finite values and was aborted."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"non-finite state at t = {t:.6g} ps{detail}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration plan."""

    dt: float             # ps
    t_total: float        # ps
    record_stride: int    # steps between snapshots

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.t_total < self.dt:
            raise ValueError("t_total must be >= dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_total / self.dt))
        if abs(n * self.dt - self.t_total) > 1e-9 * self.t_total:
            raise ValueError("t_total must be an integer multiple of dt")
        return n


@dataclass
class DerivativeBuffer:
    """Rates of change matching a state's shape (ps^-1)."""

    dalpha: np.ndarray
    dlambda: np.ndarray


class SystemArrays:
    """Model and bath parameters converted once to rad/ps."""

    def __init__(self, model: ExcitonModel, bath: BathModes,
                 units: UnitSystem = DEFAULT_UNITS):
        if model.n_sites != bath.n_sites:
            raise ValueError("model and bath disagree on the number of sites")
        conv = units.wavenumber_to_angular
        self.eps = model.epsilon * conv            # (N,)
        self.J = model.J * conv                    # (N, N)
        self.omega = bath.omega                    # (N, Q)
        self.g = bath.g                            # (N, Q)
        self.omega_g = bath.omega * bath.g         # (N, Q)
        self.minus_i_omega = -1j * bath.omega      # (N, Q)
        evals = np.linalg.eigvalsh(np.diag(self.eps) + self.J)
        self.rotating_frame = 0.5 * float(evals[0] + evals[-1])  # rad/ps
        self.eps_shifted = self.eps - self.rotating_frame
        self.n_sites = model.n_sites
        self.n_modes = bath.n_modes


def _rhs_batch(alpha: np.ndarray, lam: np.ndarray, sys: SystemArrays):
    """Equations of motion for a batch in the rotating frame."""
    pop = alpha.real**2 + alpha.imag**2                 # (B, N)
    w = np.einsum("nq,bnq->bn", sys.omega_g, lam.real)  # (B, N)
    phase = 2.0 * w
    phase -= np.einsum("bn,bn->b", pop, w)[:, None]
    phase -= sys.eps_shifted
    dalpha = alpha * phase
    dalpha -= np.einsum("nm,bm->bn", sys.J, alpha)
    dalpha *= 1j
    dlam = lam - sys.g * pop[:, :, None]
    dlam *= sys.minus_i_omega
    return dalpha, dlam


@np.errstate(over="ignore", invalid="ignore")  # divergence handled explicitly
def _rk4_step_batch(alpha: np.ndarray, lam: np.ndarray, dt: float,
                    sys: SystemArrays):
    """One classical RK4 update; returns new (alpha, lam) arrays."""
    half = 0.5 * dt
    ka1, kl1 = _rhs_batch(alpha, lam, sys)
    ta = alpha + half * ka1
    tl = lam + half * kl1
    ka2, kl2 = _rhs_batch(ta, tl, sys)
    np.multiply(ka2, half, out=ta)
    ta += alpha
    np.multiply(kl2, half, out=tl)
    tl += lam
    ka3, kl3 = _rhs_batch(ta, tl, sys)
    np.multiply(ka3, dt, out=ta)
    ta += alpha
    np.multiply(kl3, dt, out=tl)
    tl += lam
    ka4, kl4 = _rhs_batch(ta, tl, sys)
    sixth = dt / 6.0
    for k1, k2, k3, k4 in ((ka1, ka2, ka3, ka4), (kl1, kl2, kl3, kl4)):
        k2 += k3
        k2 *= 2.0
        k2 += k1
        k2 += k4
        k2 *= sixth
    ka2 += alpha
    kl2 += lam
    # Undo the rotating frame: a global phase exact for this step.
    ka2 *= np.exp(-1j * sys.rotating_frame * dt)
    return ka2, kl2


def drive_strength(state: D2State, bath: BathModes, site: int, mode: int) -> float:
    """Population-weighted coupling g_mq |alpha_m|^2 driving one mode."""
    if not 0 <= site < bath.n_sites or not 0 <= mode < bath.n_modes:
        raise IndexError("site or mode index out of range")
    return float(bath.g[site, mode] * abs(state.alpha[site]) ** 2)


def eom_rhs(state: D2State, model: ExcitonModel, bath: BathModes,
            units: UnitSystem = DEFAULT_UNITS) -> DerivativeBuffer:
    """Time derivatives of all variational parameters, in ps^-1.

    Reported in the lab frame (the internal kernels work in a rotating
    frame, which only shifts every d(alpha_n)/dt by -i*e0*alpha_n).
    """
    sys = SystemArrays(model, bath, units)
    dalpha, dlam = _rhs_batch(state.alpha[None, :], state.lam[None, :, :], sys)
    return DerivativeBuffer(
        dalpha=dalpha[0] - 1j * sys.rotating_frame * state.alpha,
        dlambda=dlam[0])


def rk4_step(state: D2State, model: ExcitonModel, bath: BathModes, dt: float,
             units: UnitSystem = DEFAULT_UNITS) -> D2State:
    """Advance one step of size dt (ps); aborts on non-finite results."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    sys = SystemArrays(model, bath, units)
    alpha, lam = _rk4_step_batch(state.alpha[None, :], state.lam[None, :, :],
                                 dt, sys)
    new = D2State(alpha[0], lam[0], state.t + dt)
    if not (np.all(np.isfinite(new.alpha.view(np.float64)))
            and np.all(np.isfinite(new.lam.view(np.float64)))):
        raise TrajectoryError(new.t)
    return new


def propagate_segment(state: D2State, model: ExcitonModel, bath: BathModes,
                      duration: float, dt: float,
                      units: UnitSystem = DEFAULT_UNITS) -> D2State:
    """Repeated RK4 steps over `duration` (must be a multiple of dt).

    No scattering happens inside a segment; the thermalization step is
    applied between segments by the caller.
    """
    if duration == 0.0:
        return state.copy()
    n = int(round(duration / dt))
    if n < 1 or abs(n * dt - duration) > 1e-9 * max(duration, dt):
        raise ValueError("duration must be a non-negative integer multiple of dt")
    sys = SystemArrays(model, bath, units)
    t0 = state.t
    alpha, lam = state.alpha[None, :], state.lam[None, :, :]
    for k in range(n):
        alpha, lam = _rk4_step_batch(alpha, lam, dt, sys)
    new = D2State(alpha[0], lam[0], t0 + n * dt)
    if not (np.all(np.isfinite(new.alpha.view(np.float64)))
            and np.all(np.isfinite(new.lam.view(np.float64)))):
        raise TrajectoryError(new.t)
    return new
