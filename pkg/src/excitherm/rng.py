"""Counter-based random streams for reproducible Monte Carlo trajectories.

Every random number consumed by a trajectory is a pure function of
(trajectory seed, counter).  This makes a trajectory's draws independent
of how trajectories are grouped into batches or distributed over worker
processes, which is what the bit-level reproducibility contract of the
ensemble requires.

Counter layout per trajectory stream (documented, relied on by tests):

* counters [0, 2*N*Q)                -- initial displacement sampling,
  site-major, mode-minor, two uniforms (one Box-Muller pair) per mode;
* scattering interval k = 1, 2, ...  -- base b = 2*N*Q + (k-1)*3*N*Q,
  coins at [b, b+N*Q), momentum resamples at [b+N*Q, b+3*N*Q).

Draws are consumed whether or not they are used (coins that land tails
still advance the stream), so stream positions never depend on outcomes.

The generator is the splitmix64 output mix applied to
``seed + GOLDEN * counter``; it is statistical quality, not cryptographic.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_U53_INV = float(2.0 ** -53)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; bijective on uint64 (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        return z ^ (z >> np.uint64(31))


def random_u64(seed, counter) -> np.ndarray:
    """Raw 64-bit output for (seed, counter); both broadcast as uint64."""
    seed = np.asarray(seed, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(seed + _GOLDEN * counter)


def random_uniform(seed, counter) -> np.ndarray:
    """Uniform draws in [0, 1) with 53-bit mantissas."""
    return (random_u64(seed, counter) >> np.uint64(11)).astype(np.float64) * _U53_INV


def random_normal_pair(seed, counter) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard normals per counter pair (Box-Muller).

    Consumes counters ``counter`` and ``counter + 1`` for each element.
    """
    counter = np.asarray(counter, dtype=np.uint64)
    u1 = random_uniform(seed, counter)
    u2 = random_uniform(seed, counter + np.uint64(1))
    r = np.sqrt(-2.0 * np.log1p(-u1))
    angle = (2.0 * np.pi) * u2
    return r * np.cos(angle), r * np.sin(angle)


def trajectory_seed(master_seed: int, index: int) -> int:
    """Derive the stream seed of trajectory ``index`` from the master seed.

    splitmix64 sequence: mix(master + (index+1)*GOLDEN).  Distinct indices
    give distinct seeds for any count (the pre-mix values already differ
    and the mix is a bijection).
    """
    if index < 0:
        raise ValueError("trajectory index must be >= 0")
    with np.errstate(over="ignore"):
        z = (np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)
             + _GOLDEN * np.uint64(index + 1))
    return int(_mix64(z))


class CounterStream:
    """A single trajectory's stream: a seed plus an advancing cursor."""

    def __init__(self, seed: int, cursor: int = 0):
        self.seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self.cursor = int(cursor)

    def _take(self, n: int) -> np.ndarray:
        counters = np.arange(self.cursor, self.cursor + n, dtype=np.uint64)
        self.cursor += n
        return counters

    def uniforms(self, shape) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape)) if not np.isscalar(shape) else (shape,)
        n = int(np.prod(shape)) if shape else 1
        return random_uniform(self.seed, self._take(n)).reshape(shape)

    def normals(self, shape) -> np.ndarray:
        """Standard normals; consumes two counters each (cos branch only)."""
        shape = tuple(np.atleast_1d(shape)) if not np.isscalar(shape) else (shape,)
        n = int(np.prod(shape)) if shape else 1
        counters = self._take(2 * n)[::2]
        z, _ = random_normal_pair(self.seed, counters)
        return z.reshape(shape)

    def complex_normals(self, shape) -> np.ndarray:
        """Standard complex normals z1 + i*z2; consumes two counters each."""
        shape = tuple(np.atleast_1d(shape)) if not np.isscalar(shape) else (shape,)
        n = int(np.prod(shape)) if shape else 1
        counters = self._take(2 * n)[::2]
        z_re, z_im = random_normal_pair(self.seed, counters)
        return (z_re + 1j * z_im).reshape(shape)


class BatchStream:
    """Per-trajectory streams for a batch, sharing one counter cursor.

    Element [b] of every draw equals what ``CounterStream(seeds[b])``
    would produce under the same call sequence.
    """

    def __init__(self, seeds: np.ndarray, cursor: int = 0):
        self.seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
        self.cursor = int(cursor)

    @property
    def size(self) -> int:
        return self.seeds.shape[0]

    def _take(self, n: int) -> np.ndarray:
        counters = np.arange(self.cursor, self.cursor + n, dtype=np.uint64)
        self.cursor += n
        return counters

    def uniforms(self, shape) -> np.ndarray:
        shape = tuple(shape)
        n = int(np.prod(shape))
        out = random_uniform(self.seeds, self._take(n)[None, :])
        return out.reshape((self.size,) + shape)

    def normals(self, shape) -> np.ndarray:
        shape = tuple(shape)
        n = int(np.prod(shape))
        counters = self._take(2 * n)[::2]
        z, _ = random_normal_pair(self.seeds, counters[None, :])
        return z.reshape((self.size,) + shape)

    def complex_normals(self, shape) -> np.ndarray:
        shape = tuple(shape)
        n = int(np.prod(shape))
        counters = self._take(2 * n)[::2]
        z_re, z_im = random_normal_pair(self.seeds, counters[None, :])
        return (z_re + 1j * z_im).reshape((self.size,) + shape)
