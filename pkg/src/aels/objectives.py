"""Test objectives: quadratics, regularized logistic regression, datasets.

The logistic objective is

    f(x) = (lam/2) x'x + (1/B) sum_i log(1 + exp(-y_i x'z_i))

over a batch of B rows (the full dataset or a minibatch view).  Covariate
rows carry an appended bias coordinate fixed at 1.  All evaluations are
numerically stable for |margin| well beyond the exp overflow threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aels.core import EvaluationLedger, RngStream, as_vector


def softplus(u):
    """log(1 + exp(u)) without overflow."""
    u = np.asarray(u, dtype=np.float64)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def sigmoid(u):
    """1 / (1 + exp(-u)) without overflow."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


class QuadraticProblem:
    """f(x) = 0.5 x'Ax + b'x with A symmetric positive definite.

    ``m`` and ``L`` are the extreme eigenvalues of A (exact when A is
    built from a diagonal), i.e. the strong-convexity and gradient-
    Lipschitz constants used by the analytic bound checkers.
    """

    def __init__(self, matrix, linear=None):
        A = np.asarray(matrix, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("curvature matrix must be square")
        if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(A).max()))):
            raise ValueError("curvature matrix must be symmetric")
        self.A = A
        self.n = A.shape[0]
        self.b = np.zeros(self.n) if linear is None else as_vector(linear, self.n)
        eigs = np.linalg.eigvalsh(A)
        self.m = float(eigs[0])
        self.L = float(eigs[-1])
        if self.m <= 0:
            raise ValueError("curvature matrix must be positive definite")

    @classmethod
    def from_diagonal(cls, diag, linear=None):
        return cls(np.diag(np.asarray(diag, dtype=np.float64)), linear)

    @property
    def dim(self) -> int:
        return self.n

    def value(self, x) -> float:
        x = as_vector(x, self.n)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(0.5 * x @ (self.A @ x) + self.b @ x)

    def gradient(self, x) -> np.ndarray:
        x = as_vector(x, self.n)
        return self.A @ x + self.b

    def minimizer(self) -> np.ndarray:
        return np.linalg.solve(self.A, -self.b)

    def min_value(self) -> float:
        return self.value(self.minimizer())


@dataclass
class MinibatchView:
    """Frozen row subset backing every evaluation within one descent step."""

    indices: np.ndarray
    size: int


class SparseDataset:
    """Binary-classification rows in CSR form with labels in {-1, +1}.

    The last logical coordinate of every row is the bias entry 1; ``dim``
    includes it.  A dense matrix is materialized lazily for evaluation.
    """

    def __init__(self, indptr, indices, data, labels, dim):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.float64)
        self.dim = int(dim)
        self.N = len(self.labels)
        if self.indptr.shape != (self.N + 1,):
            raise ValueError("indptr length must be N + 1")
        if np.any((self.labels != 1.0) & (self.labels != -1.0)):
            raise ValueError("labels must be -1 or +1")
        if self.indices.size and int(self.indices.max()) >= self.dim:
            raise ValueError("feature index out of range")
        self._dense = None

    def matrix(self) -> np.ndarray:
        if self._dense is None:
            dense = np.zeros((self.N, self.dim))
            for i in range(self.N):
                sl = slice(self.indptr[i], self.indptr[i + 1])
                dense[i, self.indices[sl]] = self.data[sl]
            self._dense = dense
        return self._dense

    def row_dense(self, i: int) -> np.ndarray:
        return self.matrix()[i]


def parse_libsvm(text, expected_dim: int | None = None) -> SparseDataset:
    """Parse LIBSVM sparse text into a dataset with an appended bias column.

    Each nonempty line is ``label idx:val idx:val ...`` with 1-based
    strictly increasing indices.  Labels 0/1 are remapped to -1/+1; any
    other label raises.  ``dim`` becomes max(max index, expected_dim) + 1
    to hold the bias coordinate.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii")
    labels = []
    rows = []  # list of (indices, values) with 0-based feature indices
    max_index = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        try:
            raw_label = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed label {parts[0]!r}") from None
        if raw_label in (1.0, -1.0):
            label = raw_label
        elif raw_label == 0.0:
            label = -1.0
        else:
            raise ValueError(f"line {lineno}: label {parts[0]!r} outside {{0, 1, -1, +1}}")
        idxs, vals = [], []
        prev = 0
        for tok in parts[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ValueError(f"line {lineno}: malformed token {tok!r}") from None
            if idx <= prev:
                raise ValueError(f"line {lineno}: indices must be strictly increasing (saw {idx} after {prev})")
            prev = idx
            idxs.append(idx - 1)
            vals.append(val)
        if prev > max_index:
            max_index = prev
        labels.append(label)
        rows.append((idxs, vals))
    if not labels:
        raise ValueError("no data rows found")
    n_features = max(max_index, expected_dim or 0)
    dim = n_features + 1  # bias column
    indptr = [0]
    indices = []
    data = []
    for idxs, vals in rows:
        indices.extend(idxs)
        data.extend(vals)
        indices.append(dim - 1)  # bias coordinate
        data.append(1.0)
        indptr.append(len(indices))
    return SparseDataset(indptr, indices, data, labels, dim)


def serialize_libsvm(ds: SparseDataset) -> str:
    """Inverse of :func:`parse_libsvm` (bias column is dropped, not stored)."""
    lines = []
    for i in range(ds.N):
        sl = slice(ds.indptr[i], ds.indptr[i + 1])
        toks = ["+1" if ds.labels[i] > 0 else "-1"]
        for idx, val in zip(ds.indices[sl], ds.data[sl]):
            if idx == ds.dim - 1:
                continue
            toks.append(f"{idx + 1}:{val!r}")
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


class LogisticProblem:
    """L2-regularized logistic regression over a :class:`SparseDataset`."""

    def __init__(self, data: SparseDataset, lam: float | None = None):
        self.data = data
        self.lam = (1.0 / data.N) if lam is None else float(lam)
        if self.lam <= 0:
            raise ValueError("regularization weight must be positive")

    @property
    def dim(self) -> int:
        return self.data.dim

    def _batch(self, view: MinibatchView | None):
        Z = self.data.matrix()
        y = self.data.labels
        if view is None:
            return Z, y
        return Z[view.indices], y[view.indices]

    def value(self, x, view: MinibatchView | None = None) -> float:
        x = as_vector(x, self.dim)
        Z, y = self._batch(view)
        margins = Z @ x
        return float(0.5 * self.lam * (x @ x) + np.mean(softplus(-y * margins)))

    def gradient(self, x, view: MinibatchView | None = None) -> np.ndarray:
        x = as_vector(x, self.dim)
        Z, y = self._batch(view)
        s = sigmoid(-y * (Z @ x))
        return self.lam * x - Z.T @ (y * s) / len(y)


def sample_minibatch(data: SparseDataset, batch_size: int, rng: RngStream) -> MinibatchView:
    """Uniform without-replacement row subset; advances the stream state."""
    if not 1 <= batch_size <= data.N:
        raise ValueError(f"batch size must be in [1, {data.N}], got {batch_size}")
    idx = rng.sample_without_replacement(data.N, batch_size)
    return MinibatchView(indices=idx, size=batch_size)


class Objective:
    """Counted handle on a problem: the only door to values and gradients.

    One handle per trial; every call increments the trial's ledger.  For
    stochastic runs the driver pins a :class:`MinibatchView` on the handle
    for the duration of a step and all evaluations go through it.
    """

    def __init__(self, problem, ledger: EvaluationLedger | None = None):
        self.problem = problem
        self.ledger = ledger if ledger is not None else EvaluationLedger()
        self.view: MinibatchView | None = None

    @property
    def dim(self) -> int:
        return self.problem.dim

    @property
    def has_gradient(self) -> bool:
        return hasattr(self.problem, "gradient")

    def value(self, x) -> float:
        self.ledger.fevals += 1
        if self.view is not None:
            return self.problem.value(x, self.view)
        return self.problem.value(x)

    def gradient(self, x) -> np.ndarray:
        if not self.has_gradient:
            raise AttributeError(f"{type(self.problem).__name__} provides no gradient")
        self.ledger.gevals += 1
        if self.view is not None:
            return self.problem.gradient(x, self.view)
        return self.problem.gradient(x)

    def true_value(self, x) -> float:
        """Full-batch value for out-of-band logging; never hits the ledger."""
        return self.problem.value(x)


def bb_initial_step(obj: Objective, x0) -> tuple[float, bool]:
    """Curvature-adapted initial step from a tiny two-point gradient probe.

    Probes s = -eps * g/||g|| with eps = 1e-4 * max(1, ||x0||), forms the
    gradient difference y, and returns s's / s'y.  Returns (1.0, True) when
    the probe is degenerate (zero gradient or nonpositive curvature).
    """
    x0 = as_vector(x0, obj.dim)
    g0 = obj.gradient(x0)
    gnorm = float(np.linalg.norm(g0))
    if gnorm == 0.0 or not np.isfinite(gnorm):
        return 1.0, True
    eps = 1e-4 * max(1.0, float(np.linalg.norm(x0)))
    s = -(eps / gnorm) * g0
    y = obj.gradient(x0 + s) - g0
    sty = float(s @ y)
    if sty <= 0.0 or not np.isfinite(sty):
        return 1.0, True
    return float(s @ s) / sty, False
