"""Monte Carlo ensemble orchestration.

Trajectories are independent work items.  Each one owns a counter-based
random stream derived from (master_seed, trajectory index), so its
draws, and therefore its whole history, are bit-reproducible no matter
how trajectories are grouped into batches or spread over workers.

The engine propagates fixed-size batches of trajectories as (B, N) and
(B, N, Q) arrays and accumulates, per snapshot, only the moments the
observables need: the site coherence matrix, first moments of the
displacement quadratures, the second moment of the momentum quadrature
and the energy.  Chunk accumulators are merged in chunk order with
compensated (Kahan) summation, which keeps merged results independent
of the worker count to better than 1e-12 relative.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import IntegratorConfig, SystemArrays, _rk4_step_batch
from .model import BathSpec, ExcitonModel, build_bath, diagonalize
from .rng import BatchStream, trajectory_seed
from .state import ThermalLaw
from .thermalization import ThermalizationParams, scatter_batch
from .units import DEFAULT_UNITS, UnitSystem

DEFAULT_CHUNK_SIZE = 512
CHECKPOINT_FORMAT_VERSION = 1


class EnsembleError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines an ensemble run."""

    model: ExcitonModel
    bath_spec: BathSpec
    t0: Union[float, Sequence[float]]          # initial bath temperature(s), K
    params: Optional[ThermalizationParams]     # None disables scattering
    integrator: IntegratorConfig
    n_trajectories: int
    master_seed: int
    excitation: tuple                          # ("site"|"exciton", index)
    units: UnitSystem = DEFAULT_UNITS

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        t0 = np.atleast_1d(np.asarray(self.t0, dtype=np.float64))
        if t0.size == 1:
            t0 = np.full(self.model.n_sites, float(t0[0]))
        if t0.size != self.model.n_sites:
            raise ValueError("t0 must be a scalar or one value per site")
        if np.any(t0 < 0.0):
            raise ValueError("initial temperatures must be >= 0")
        object.__setattr__(self, "t0", t0)
        kind, index = self.excitation
        if kind not in ("site", "exciton"):
            raise ValueError(f"unknown excitation kind {kind!r}")
        if not 0 <= index < self.model.n_sites:
            raise ValueError("excitation index out of range")
        dt = self.integrator.dt
        self.integrator.n_steps  # validates t_total multiple of dt
        if self.params is not None:
            n_tau = int(round(self.params.tau / dt))
            if n_tau < 1 or abs(n_tau * dt - self.params.tau) > 1e-9 * self.params.tau:
                raise ValueError("tau must be an integer multiple of dt")
            n_seg = int(round(self.integrator.t_total / self.params.tau))
            if abs(n_seg * self.params.tau - self.integrator.t_total) \
                    > 1e-9 * self.integrator.t_total:
                raise ValueError("t_total must be an integer multiple of tau")

    @property
    def steps_per_scatter(self) -> Optional[int]:
        if self.params is None:
            return None
        return int(round(self.params.tau / self.integrator.dt))

    def bath(self) -> BathModes:
        return build_bath(self.bath_spec, self.units, self.model.n_sites)

    def initial_laws(self) -> list[ThermalLaw]:
        return [ThermalLaw(float(t), self.units) for t in self.t0]

    def fingerprint(self) -> str:
        """Stable hash of every run-defining number; guards checkpoints."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.model.epsilon).tobytes())
        h.update(np.ascontiguousarray(self.model.J).tobytes())
        spec = self.bath_spec
        for x in (spec.Q, spec.omega0, spec.delta_omega, spec.s, spec.omega_c,
                  spec.lambda_reorg):
            h.update(repr(x).encode())
        h.update(np.ascontiguousarray(self.t0).tobytes())
        if self.params is None:
            h.update(b"no-scatter")
        else:
            for x in (self.params.nu, self.params.tau, self.params.t_inf):
                h.update(repr(x).encode())
        for x in (self.integrator.dt, self.integrator.t_total,
                  self.integrator.record_stride, self.n_trajectories,
                  self.master_seed, self.excitation[0], self.excitation[1]):
            h.update(repr(x).encode())
        return h.hexdigest()


@dataclass
class TrajectoryFailure:
    index: int
    seed: int
    t: float


class EnsembleAccumulator:
    """Per-snapshot moment sums over trajectories, mergeable in order."""

    _ARRAYS = ("coh", "re", "im", "im2", "energy", "counts")

    def __init__(self, times: np.ndarray, n_sites: int, n_modes: int):
        s = times.size
        self.times = times
        self.coh = np.zeros((s, n_sites, n_sites), dtype=np.complex128)
        self.re = np.zeros((s, n_sites, n_modes))
        self.im = np.zeros((s, n_sites, n_modes))
        self.im2 = np.zeros((s, n_sites, n_modes))
        self.energy = np.zeros(s)
        self.counts = np.zeros(s)
        # Kahan compensation terms, one per summed array.
        self._comp = {name: np.zeros_like(getattr(self, name))
                      for name in self._ARRAYS}
        self.n_done = 0
        self.n_events = 0
        self.failures: list[TrajectoryFailure] = []

    def _kahan_add(self, name: str, value: np.ndarray) -> None:
        total = getattr(self, name)
        comp = self._comp[name]
        y = value - comp
        t = total + y
        comp[...] = (t - total) - y
        total[...] = t

    def merge(self, other: "EnsembleAccumulator") -> None:
        """Fold another accumulator in (call in chunk-index order)."""
        if other.times.shape != self.times.shape:
            raise ValueError("cannot merge accumulators with different grids")
        for name in self._ARRAYS:
            self._kahan_add(name, getattr(other, name))
            self._kahan_add(name, other._comp[name])
        self.n_done += other.n_done
        self.n_events += other.n_events
        self.failures.extend(other.failures)


@dataclass
class TrajectoryRecord:
    """Raw snapshots of a single trajectory (debugging and oracles)."""

    index: int
    seed: int
    times: np.ndarray     # (S,)
    alpha: np.ndarray     # (S, N)
    lam: np.ndarray       # (S, N, Q)
    energy: np.ndarray    # (S,) cm^-1
    norm: np.ndarray      # (S,)
    n_events: int


@dataclass
class EnsembleResult:
    """Ensemble-averaged moments on the snapshot grid."""

    times: np.ndarray            # (S,) ps
    counts: np.ndarray           # (S,) contributing trajectories
    coherence_mean: np.ndarray   # (S, N, N) <alpha_n* alpha_m>
    re_mean: np.ndarray          # (S, N, Q) <Re lambda>
    im_mean: np.ndarray          # (S, N, Q) <Im lambda>
    im2_mean: np.ndarray         # (S, N, Q) <(Im lambda)^2>
    energy_mean: np.ndarray      # (S,) cm^-1
    n_trajectories: int          # successfully completed
    n_requested: int
    n_events: int
    failures: list = field(default_factory=list)

    def norm_mean(self) -> np.ndarray:
        return np.einsum("snn->s", self.coherence_mean).real

    def _series(self, values: np.ndarray) -> "TimeSeries":
        from .observables import TimeSeries
        return TimeSeries(times=self.times, values=values,
                          n_trajectories=self.n_trajectories)

    def coherence_series(self):
        return self._series(self.coherence_mean)

    def re_series(self):
        return self._series(self.re_mean)

    def im_series(self):
        return self._series(self.im_mean)

    def im2_series(self):
        return self._series(self.im2_mean)

    def energy_series(self):
        return self._series(self.energy_mean)


def _batch_energy(alpha: np.ndarray, lam: np.ndarray, sys: SystemArrays,
                  conv: float) -> np.ndarray:
    """Total energy per trajectory in cm^-1."""
    pop = alpha.real**2 + alpha.imag**2
    e = pop @ sys.eps
    e += np.einsum("bn,nm,bm->b", alpha.conj(), sys.J, alpha).real
    abs2 = lam.real**2 + lam.imag**2
    e += np.einsum("nq,bnq->b", sys.omega, abs2)
    e -= 2.0 * np.einsum("bn,nq,bnq->b", pop, sys.omega_g, lam.real)
    return e / conv


def _finite_rows(alpha: np.ndarray, lam: np.ndarray) -> np.ndarray:
    ok_a = np.isfinite(alpha.view(np.float64)).all(axis=1)
    ok_l = np.isfinite(lam.view(np.float64).reshape(lam.shape[0], -1)).all(axis=1)
    return ok_a & ok_l


def _run_chunk(config: RunConfig, lo: int, hi: int,
               record_raw: bool = False):
    """Propagate trajectories [lo, hi); returns (accumulator, raw or None)."""
    model, bath = config.model, config.bath()
    sys = SystemArrays(model, bath, config.units)
    integ = config.integrator
    n_steps = integ.n_steps
    stride = integ.record_stride
    per_tau = config.steps_per_scatter
    conv = config.units.wavenumber_to_angular

    snap_steps = np.arange(0, n_steps + 1, stride)
    times = snap_steps * integ.dt
    n, q = model.n_sites, bath.n_modes
    acc = EnsembleAccumulator(times, n, q)

    b = hi - lo
    seeds = np.array([trajectory_seed(config.master_seed, i)
                      for i in range(lo, hi)], dtype=np.uint64)
    stream = BatchStream(seeds)

    # Initial conditions: thermal displacements, chosen electronic start.
    laws = config.initial_laws()
    lam = np.empty((b, n, q), dtype=np.complex128)
    for m in range(n):
        sigma = np.sqrt(laws[m].quadrature_variance(bath.omega[m]))
        lam[:, m, :] = sigma * stream.complex_normals((q,))
    kind, index = config.excitation
    alpha0 = np.zeros(n, dtype=np.complex128)
    if kind == "site":
        alpha0[index] = 1.0
    else:
        alpha0[:] = diagonalize(model).vectors[:, index]
    alpha = np.tile(alpha0, (b, 1))

    active = np.ones(b, dtype=bool)
    events = np.zeros(b, dtype=np.int64)

    raw = None
    if record_raw:
        raw = {
            "alpha": np.empty((times.size, b, n), dtype=np.complex128),
            "lam": np.empty((times.size, b, n, q), dtype=np.complex128),
        }

    def record(s: int, t: float) -> None:
        finite = _finite_rows(alpha, lam)
        newly_failed = active & ~finite
        if np.any(newly_failed):
            for idx in np.nonzero(newly_failed)[0]:
                acc.failures.append(
                    TrajectoryFailure(lo + int(idx), int(seeds[idx]), float(t)))
                alpha[idx] = 0.0
                lam[idx] = 0.0
            active[newly_failed] = False
        acc.coh[s] = np.einsum("bn,bm->nm", alpha.conj(), alpha)
        acc.re[s] = np.einsum("bnq->nq", lam.real)
        acc.im[s] = np.einsum("bnq->nq", lam.imag)
        acc.im2[s] = np.einsum("bnq,bnq->nq", lam.imag, lam.imag)
        acc.energy[s] = float(np.sum(_batch_energy(alpha, lam, sys, conv)))
        acc.counts[s] = float(np.count_nonzero(active))
        if raw is not None:
            raw["alpha"][s] = alpha
            raw["lam"][s] = lam

    record(0, 0.0)
    s = 1
    # Fixed per-step order: integrate, scatter at tau boundaries, then
    # record; a snapshot on a boundary therefore sees fresh momenta.
    for k in range(1, n_steps + 1):
        alpha, lam = _rk4_step_batch(alpha, lam, integ.dt, sys)
        if per_tau is not None and k % per_tau == 0:
            heads = scatter_batch(lam, bath.omega, config.params, stream)
            events += heads.reshape(b, -1).sum(axis=1)
        if k % stride == 0:
            record(s, k * integ.dt)
            s += 1

    acc.n_done = b
    acc.n_events = int(events.sum())
    if raw is not None:
        raw["events"] = events
        raw["seeds"] = seeds
    return acc, raw


def _run_chunk_task(args):
    config, lo, hi = args
    acc, _ = _run_chunk(config, lo, hi, record_raw=False)
    return acc


def chunk_ranges(n_trajectories: int, chunk_size: int) -> list[tuple[int, int]]:
    """Fixed partition of trajectory indices; independent of worker count."""
    edges = list(range(0, n_trajectories, chunk_size)) + [n_trajectories]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def run_trajectory(config: RunConfig, index: int) -> TrajectoryRecord:
    """Propagate a single trajectory and return its raw snapshots."""
    if not 0 <= index < config.n_trajectories:
        raise ValueError("trajectory index out of range")
    acc, raw = _run_chunk(config, index, index + 1, record_raw=True)
    alpha = raw["alpha"][:, 0]
    lam = raw["lam"][:, 0]
    norm = np.sum(alpha.real**2 + alpha.imag**2, axis=1)
    return TrajectoryRecord(
        index=index,
        seed=trajectory_seed(config.master_seed, index),
        times=acc.times,
        alpha=alpha,
        lam=lam,
        energy=acc.energy.copy(),
        norm=norm,
        n_events=acc.n_events,
    )


def _result_from_accumulator(acc: EnsembleAccumulator,
                             config: RunConfig) -> EnsembleResult:
    if len(acc.failures) > 0.01 * config.n_trajectories:
        detail = "; ".join(
            f"#{f.index} (seed {f.seed}) at t={f.t:.4g} ps"
            for f in acc.failures[:5])
        raise EnsembleError(
            f"{len(acc.failures)} of {config.n_trajectories} trajectories "
            f"failed (> 1%): {detail}")
    counts = acc.counts
    if np.any(counts <= 0.0):
        raise EnsembleError("no surviving trajectories at some snapshot")
    inv = 1.0 / counts
    result = EnsembleResult(
        times=acc.times,
        counts=counts.copy(),
        coherence_mean=acc.coh * inv[:, None, None],
        re_mean=acc.re * inv[:, None, None],
        im_mean=acc.im * inv[:, None, None],
        im2_mean=acc.im2 * inv[:, None, None],
        energy_mean=acc.energy * inv,
        n_trajectories=acc.n_done - len(acc.failures),
        n_requested=config.n_trajectories,
        n_events=acc.n_events,
        failures=list(acc.failures),
    )
    return result


def save_checkpoint(path: str, config: RunConfig, acc: EnsembleAccumulator,
                    next_chunk: int) -> None:
    """Versioned accumulator snapshot; layout documented in load_checkpoint."""
    payload = {
        "format_version": np.int64(CHECKPOINT_FORMAT_VERSION),
        "fingerprint": np.frombuffer(
            config.fingerprint().encode(), dtype=np.uint8),
        "next_chunk": np.int64(next_chunk),
        "times": acc.times,
        "n_done": np.int64(acc.n_done),
        "n_events": np.int64(acc.n_events),
        "failure_indices": np.array([f.index for f in acc.failures], dtype=np.int64),
        "failure_seeds": np.array([f.seed for f in acc.failures], dtype=np.uint64),
        "failure_times": np.array([f.t for f in acc.failures]),
    }
    for name in EnsembleAccumulator._ARRAYS:
        payload[name] = getattr(acc, name)
        payload["comp_" + name] = acc._comp[name]
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **payload)
    os.replace(tmp, path)


def load_checkpoint(path: str, config: RunConfig):
    """Return (accumulator, next_chunk) from a checkpoint of this config.

    The file is an .npz with keys: format_version, fingerprint,
    next_chunk, times, n_done, n_events, failure_{indices,seeds,times},
    plus one array and one Kahan compensation array per accumulated
    moment (coh, re, im, im2, energy, counts).
    """
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise EnsembleError(f"unsupported checkpoint version {version}")
        fingerprint = bytes(data["fingerprint"]).decode()
        if fingerprint != config.fingerprint():
            raise EnsembleError(
                "checkpoint was produced by a different configuration")
        times = data["times"]
        acc = EnsembleAccumulator(times, data["coh"].shape[1],
                                  data["re"].shape[2])
        for name in EnsembleAccumulator._ARRAYS:
            getattr(acc, name)[...] = data[name]
            acc._comp[name][...] = data["comp_" + name]
        acc.n_done = int(data["n_done"])
        acc.n_events = int(data["n_events"])
        acc.failures = [
            TrajectoryFailure(int(i), int(s), float(t))
            for i, s, t in zip(data["failure_indices"],
                               data["failure_seeds"],
                               data["failure_times"])]
        return acc, int(data["next_chunk"])


def run_ensemble(config: RunConfig, n_workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK_SIZE,
                 checkpoint_path: Optional[str] = None) -> EnsembleResult:
    """Run the full ensemble and return merged, averaged moments.

    The chunk partition depends only on (n_trajectories, chunk_size), and
    chunk accumulators are merged in index order, so results are
    identical for any worker count.  With ``checkpoint_path`` the merged
    accumulator is saved after every chunk and a matching existing file
    is resumed instead of recomputed.
    """
    chunks = chunk_ranges(config.n_trajectories, chunk_size)
    integ = config.integrator
    times = np.arange(0, integ.n_steps + 1, integ.record_stride) * integ.dt
    merged = EnsembleAccumulator(times, config.model.n_sites,
                                 config.bath_spec.Q)
    start = 0
    if checkpoint_path is not None and os.path.exists(checkpoint_path):
        merged, start = load_checkpoint(checkpoint_path, config)

    todo = chunks[start:]
    if n_workers > 1 and len(todo) > 1:
        ctx = get_context("fork")
        with ctx.Pool(processes=n_workers) as pool:
            for i, acc in enumerate(pool.imap(
                    _run_chunk_task,
                    [(config, lo, hi) for lo, hi in todo])):
                merged.merge(acc)
                if checkpoint_path is not None:
                    save_checkpoint(checkpoint_path, config, merged,
                                    start + i + 1)
    else:
        for i, (lo, hi) in enumerate(todo):
            acc, _ = _run_chunk(config, lo, hi)
            merged.merge(acc)
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, config, merged, start + i + 1)

    return _result_from_accumulator(merged, config)
