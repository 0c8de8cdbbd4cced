"""Independent ground-truth machinery.

Everything here is deliberately brute force: dense tensor reconstruction,
exhaustive grid search, a dense table-backed tree search, and the
bounded-suboptimality checker.  These are the references the compact
implementations are tested against, so they share no code path with them
beyond the data types.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError
from .tt import TTTensor, tt_eval
from . import engine as _engine
from .problems import Problem
from .ttgo import MonotoneTransform, transform_cost

DENSE_LIMIT = 10**7


def dense_reconstruct(t: TTTensor) -> np.ndarray:
    """Materialize the full tensor represented by a TT (small sizes only)."""
    total = int(np.prod([float(n) for n in t.shape]))
    if total > DENSE_LIMIT:
        raise SizeLimitError(f"{total} entries exceed the dense safety limit {DENSE_LIMIT}")
    out = t.cores[0]  # (1, N0, r1)
    out = out.reshape(t.shape[0], -1)
    for j in range(1, t.d):
        core = t.cores[j]
        out = np.tensordot(out.reshape(-1, core.shape[0]), core, axes=(1, 0))
        out = out.reshape(-1, core.shape[2])
    return out.reshape(t.shape)


def tt_from_dense(a: np.ndarray, max_rank: int | None = None, tol: float = 0.0) -> TTTensor:
    """TT decomposition of a dense array by successive truncated SVDs."""
    if a.size > DENSE_LIMIT:
        raise SizeLimitError(f"{a.size} entries exceed the dense safety limit {DENSE_LIMIT}")
    shape = a.shape
    d = len(shape)
    norm = np.linalg.norm(a)
    delta = tol * norm / np.sqrt(max(d - 1, 1)) if tol > 0 else 0.0
    cores = []
    mat = a.reshape(shape[0], -1)
    r_left = 1
    for j in range(d - 1):
        mat = mat.reshape(r_left * shape[j], -1)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        r = len(s)
        if delta > 0:
            tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
            r = min(r, max(int(np.searchsorted(-tail, -delta)), 1))
        if max_rank is not None:
            r = min(r, max_rank)
        r = max(r, 1)
        cores.append(u[:, :r].reshape(r_left, shape[j], r))
        mat = s[:r, None] * vt[:r]
        r_left = r
    cores.append(mat.reshape(r_left, shape[d - 1], 1))
    return TTTensor(cores)


def dense_node_value(dense: np.ndarray, prefix: tuple[int, ...]) -> float:
    """Sum of a dense tensor over all completions of a branch prefix."""
    sub = dense[tuple(prefix)]
    return float(np.sum(sub))


def dense_multilinear_interp(dense: np.ndarray, x, grids) -> float:
    """Multilinear interpolation of a dense grid of values."""
    weights = [g.interp_weights(float(xi)) for g, xi in zip(grids, x)]
    out = dense
    for w in weights:
        out = np.tensordot(w, out, axes=(0, 0))
    return float(out)


# ---------------------------------------------------------------------------
# Exhaustive grid search.


def grid_argmin(
    problem: Problem,
    resolution: int | None = None,
    z: tuple[float, ...] = (),
    chunk: int = 200_000,
) -> tuple[tuple[int, ...], float]:
    """Exhaustive minimum of a problem's cost over its decision grid.

    ``resolution`` overrides the number of points of every continuous weight
    grid.  Ties resolve to the first index in row-major order.
    """
    spaces = problem.decision_spaces(resolution)
    shape = [len(s) for s in spaces]
    total = int(np.prod([float(n) for n in shape]))
    if total == 0:
        raise ValueError("empty decision grid")
    if total > DENSE_LIMIT:
        raise SizeLimitError(f"{total} grid points exceed the safety limit {DENSE_LIMIT}")

    best_cost = np.inf
    best_flat = -1
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.array(np.unravel_index(flat, shape)).T
        costs = problem.cost_on_grid(idx, z=z, spaces=spaces)
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best_flat = int(flat[k])
    best_idx = tuple(int(i) for i in np.unravel_index(best_flat, shape))
    return best_idx, best_cost


# ---------------------------------------------------------------------------
# Dense table backend: the same search loop as the TT engine, but with the
# value table and per-layer visit counters stored as full arrays.


class DenseTableBackend:
    """Value/visit bookkeeping on fully materialized tables.

    ``q_sums[j]`` holds the value tensor summed over modes ``j..d-1`` so a
    node query is a single lookup.  Visit counts are per-layer count arrays;
    a count scales with the number of free completions below its layer, the
    same bookkeeping the compact backend derives from its factored form.
    """

    def __init__(self, q_dense: np.ndarray):
        self.shape = tuple(q_dense.shape)
        self.d = len(self.shape)
        self.q_sums: list[np.ndarray] = []
        acc = q_dense
        for j in range(self.d, -1, -1):
            self.q_sums.append(acc)
            if j > 0:
                acc = acc.sum(axis=j - 1)
        self.q_sums.reverse()  # q_sums[j]: shape[:j]
        self.counts = [np.zeros(self.shape[:j], dtype=float) for j in range(self.d + 1)]
        # completions[j] = product of mode sizes strictly below layer j
        self.completions = [
            float(np.prod([float(n) for n in self.shape[j:]])) for j in range(self.d + 1)
        ]

    def node_q(self, prefix: tuple[int, ...]) -> float:
        return float(self.q_sums[len(prefix)][prefix])

    def child_q(self, prefix: tuple[int, ...]) -> np.ndarray:
        return np.asarray(self.q_sums[len(prefix) + 1][prefix], dtype=float)

    def child_visits(self, prefix: tuple[int, ...]) -> np.ndarray:
        j = len(prefix) + 1
        return np.asarray(self.counts[j][prefix], dtype=float) * self.completions[j]

    def parent_visits(self, prefix: tuple[int, ...]) -> float:
        j = len(prefix) + 1
        return float(np.sum(self.counts[j][prefix])) * self.completions[j]

    def record_visits(self, prefixes: set[tuple[int, ...]]) -> None:
        for p in prefixes:
            self.counts[len(p)][p] += 1.0

    def node_visits(self, prefix: tuple[int, ...]) -> float:
        j = len(prefix)
        return float(self.counts[j][prefix]) * self.completions[j]

    def storage_entries(self) -> int:
        return sum(a.size for a in self.q_sums) + sum(a.size for a in self.counts)


def table_mcts(
    problem: Problem,
    cfg: _engine.SearchConfig,
    z: tuple[float, ...] = (),
    transform: MonotoneTransform | None = None,
    q_dense: np.ndarray | None = None,
    wall_budget_s: float | None = None,
) -> _engine.SearchResult:
    """Tree search over a fully tabulated value tensor.

    The O(N^d) baseline: the value table is evaluated on the entire grid up
    front and visit counters are dense per-layer arrays.  Selection,
    simulation, backpropagation, tie rules and seed discipline are shared
    with the compact engine, so on small trees the two are exchangeable.
    ``q_dense`` lets a test inject the table directly.
    """
    spaces = problem.decision_spaces()
    shape = tuple(len(s) for s in spaces)
    total = int(np.prod([float(n) for n in shape]))
    if total > 10**6:
        raise SizeLimitError(f"{total} branches exceed the table limit 10^6")
    transform = transform or problem.transform
    t0 = time.perf_counter()
    if q_dense is None:
        flat = np.arange(total)
        idx = np.array(np.unravel_index(flat, shape)).T
        costs = problem.cost_on_grid(idx, z=z, spaces=spaces)
        q_dense = transform_cost(costs, transform).reshape(shape)
    backend = DenseTableBackend(np.asarray(q_dense, dtype=float))
    result = _engine.search_loop(
        backend, problem, cfg, z=z, spaces=spaces, t_start=t0, wall_budget_s=wall_budget_s
    )
    result.storage_entries = backend.storage_entries()
    return result


# ---------------------------------------------------------------------------
# Bounded-suboptimality check: if a surrogate is uniformly within eps of the
# true tensor, the true value at the surrogate's argmax is within 2*eps of
# the true maximum.


@dataclass
class Theorem2Report:
    eps: float
    gap: float
    holds: bool


def check_theorem2(f_dense: np.ndarray, t: TTTensor) -> Theorem2Report:
    """Compare max(f) against f at the surrogate's dense argmax."""
    approx = dense_reconstruct(t)
    if approx.shape != f_dense.shape:
        raise ValueError(f"shape mismatch: {approx.shape} vs {f_dense.shape}")
    eps = float(np.max(np.abs(approx - f_dense)))
    arg = np.unravel_index(int(np.argmax(approx)), approx.shape)
    gap = float(np.max(f_dense) - f_dense[arg])
    return Theorem2Report(eps=eps, gap=gap, holds=bool(gap <= 2.0 * eps + 1e-12))
