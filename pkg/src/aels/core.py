"""Foundation types: evaluation ledgers and reproducible random streams.

All randomness in the package flows through :class:`RngStream`, which wraps
the Philox 4x64-10 counter-based generator and derives every sample from its
raw 64-bit output.  Uniforms use the canonical ``raw >> 11`` 53-bit mapping,
normals use Box-Muller, and integer draws use rejection sampling, so a given
seed produces the same byte sequence on every platform and stays stable
across library upgrades.
"""

from __future__ import annotations

import math

import numpy as np

_TWO53 = float(1 << 53)
_U64 = 1 << 64


class EvaluationLedger:
    """Counts of objective calls charged to one trial.

    fevals: function evaluations, gevals: gradient evaluations,
    dd_evals: directional-derivative evaluations (each FD directional
    derivative also charges one feval for its extra probe point).
    """

    __slots__ = ("fevals", "gevals", "dd_evals")

    def __init__(self):
        self.fevals = 0
        self.gevals = 0
        self.dd_evals = 0

    def snapshot(self) -> tuple[int, int, int]:
        return (self.fevals, self.gevals, self.dd_evals)

    def __repr__(self):
        return f"EvaluationLedger(fevals={self.fevals}, gevals={self.gevals}, dd_evals={self.dd_evals})"


class RngStream:
    """Deterministic random stream owned by a single trial.

    A stream is identified by a 64-bit ``seed`` plus a 64-bit ``key``;
    trials in a suite derive disjoint streams from the same seed via
    :meth:`derive`.  Two streams built from equal (seed, key) pairs
    produce bit-identical draw sequences.
    """

    def __init__(self, seed: int, key: int = 0):
        self.seed = int(seed) % _U64
        self.key = int(key) % _U64
        self._bg = np.random.Philox(key=np.array([self.seed, self.key], dtype=np.uint64))
        self._spare_normal = None

    def derive(self, key: int) -> "RngStream":
        """Fresh independent stream for the same seed (e.g. one per trial)."""
        return RngStream(self.seed, key)

    def raw(self, n: int) -> np.ndarray:
        return self._bg.random_raw(n)

    def uniform(self, n: int | None = None):
        """Uniform doubles in [0, 1) from the high 53 bits of the raw stream."""
        if n is None:
            return float(self._bg.random_raw(1)[0] >> 11) / _TWO53
        return (self._bg.random_raw(n) >> 11).astype(np.float64) / _TWO53

    def normal(self, n: int):
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        out = np.empty(n, dtype=np.float64)
        filled = 0
        if self._spare_normal is not None and n > 0:
            out[0] = self._spare_normal
            self._spare_normal = None
            filled = 1
        remaining = n - filled
        if remaining > 0:
            pairs = (remaining + 1) // 2
            u = self.uniform(2 * pairs)
            r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))  # 1-u maps [0,1) -> (0,1]
            ang = 2.0 * math.pi * u[1::2]
            z = np.empty(2 * pairs, dtype=np.float64)
            z[0::2] = r * np.cos(ang)
            z[1::2] = r * np.sin(ang)
            out[filled:] = z[:remaining]
            if 2 * pairs > remaining:
                self._spare_normal = float(z[remaining])
        return out

    def integer(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection on the raw stream."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = _U64 - (_U64 % bound)
        while True:
            r = int(self._bg.random_raw(1)[0])
            if r < limit:
                return r % bound

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), uniform, via partial Fisher-Yates."""
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        pool = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + self.integer(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k].copy()


def random_unit_vector(rng: RngStream, n: int) -> np.ndarray:
    """Uniformly random point on the unit sphere in R^n.

    Draws a standard normal vector and normalizes it; rotation invariance
    of the normal makes the result isotropic (E[v v^T] = I/n).
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    while True:
        z = rng.normal(n)
        nrm = float(np.linalg.norm(z))
        if nrm > 1e-150:  # astronomically unlikely to loop
            return z / nrm


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally checking its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        v = v.reshape(-1)
    if v.size < 1:
        raise ValueError("vectors must have dimension >= 1")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.size}")
    return v
