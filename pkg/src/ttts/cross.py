"""Cross approximation of a black-box function on a product grid.

Builds a TT from adaptively sampled entries: alternating sweeps keep nested
row/column index sets per bond, chosen by greedy maximal-volume pivoting on
QR factors of the sampled blocks.  Ranks start small and double until the
validation error target is met.  ``guided_cross`` is the degenerate one-pass
case where the nonzero pattern (a branch-prefix indicator) is known up
front, so the exact rank-1 result is written down directly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeMismatchError
from .tt import TTTensor

# Batch evaluator: takes an (m, d) integer index array, returns m values.
GridFunction = Callable[[np.ndarray], np.ndarray]


@dataclass
class CrossConfig:
    max_rank: int = 10
    tol: float = 1e-3
    max_sweeps: int = 16
    validation_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1 or self.validation_samples < 1:
            raise ValueError("max_sweeps and validation_samples must be positive")


@dataclass
class CrossDiagnostics:
    """Construction record; ``evaluations_used`` counts sweep evaluations
    only (the separate validation sample is not part of the sweep budget)."""

    achieved_ranks: list[int] = field(default_factory=list)
    evaluations_used: int = 0
    validation_error: float = float("inf")
    sweeps: int = 0
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "achieved_ranks": self.achieved_ranks,
            "evaluations_used": self.evaluations_used,
            "validation_error": self.validation_error,
            "sweeps": self.sweeps,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _greedy_independent_rows(a: np.ndarray, r: int) -> np.ndarray:
    """r well-conditioned rows via modified Gram-Schmidt residual norms."""
    res = np.array(a, dtype=float)
    rows = []
    for _ in range(r):
        norms = np.sum(res * res, axis=1)
        i = int(np.argmax(norms))
        rows.append(i)
        nv = np.sqrt(norms[i])
        if nv <= 0:
            break
        v = res[i] / nv
        res -= np.outer(res @ v, v)
    return np.array(rows, dtype=int)


def maxvol(
    a: np.ndarray,
    rng: np.random.Generator,
    growth_tol: float = 1.01,
    max_swaps: int = 100,
) -> np.ndarray:
    """Rows of a tall matrix whose square submatrix has near-maximal volume.

    Starts from a random row subset and greedily swaps rows while some entry
    of ``a @ inv(a[rows])`` exceeds ``growth_tol`` in magnitude.  A singular
    random start falls back to Gram-Schmidt row selection.  Deterministic
    for a fixed generator state.
    """
    n, r = a.shape
    if n < r:
        raise ShapeMismatchError(f"maxvol needs n >= r, got {a.shape}")
    if n == r:
        return np.arange(n)

    rows = rng.permutation(n)[:r]
    sub = a[rows]
    if np.linalg.matrix_rank(sub, tol=1e-10) < r:
        rows = _greedy_independent_rows(a, r)
        sub = a[rows]

    b = np.linalg.solve(sub.T, a.T).T  # a @ inv(sub)
    for _ in range(max_swaps):
        i, j = np.unravel_index(int(np.argmax(np.abs(b))), b.shape)
        pivot = b[i, j]
        if abs(pivot) <= growth_tol:
            break
        e_j = np.zeros(r)
        e_j[j] = 1.0
        b -= np.outer(b[:, j], (b[i, :] - e_j) / pivot)
        rows[j] = i
    return np.sort(rows)


class _CountingFunction:
    def __init__(self, f: GridFunction):
        self.f = f
        self.count = 0

    def __call__(self, idx: np.ndarray) -> np.ndarray:
        self.count += len(idx)
        vals = np.asarray(self.f(idx), dtype=float).reshape(-1)
        if len(vals) != len(idx):
            raise ValueError("grid function returned wrong number of values")
        return vals


def _block(f: _CountingFunction, left: np.ndarray, n: int, right: np.ndarray) -> np.ndarray:
    """Evaluate f on the cross {left} x {0..n-1} x {right} -> (|L|, n, |R|)."""
    nl, nr = len(left), len(right)
    mid = np.arange(n)
    rows = np.concatenate(
        [
            np.repeat(left, n * nr, axis=0),
            np.tile(np.repeat(mid, nr)[:, None], (nl, 1)),
            np.tile(right, (nl * n, 1)),
        ],
        axis=1,
    )
    return f(rows).reshape(nl, n, nr)


def _extend_right_sets(
    right: list, shape: Sequence[int], target: int, rng: np.random.Generator
) -> list:
    """Grow nested right index sets to ``target`` rows with random picks."""
    d = len(shape)
    out: list = [None] * (d + 1)
    out[d] = np.zeros((1, 0), dtype=int)
    for j in range(d - 1, 0, -1):
        cap = int(np.prod([float(n) for n in shape[j:]]))
        want = min(target, cap)
        have = right[j] if right[j] is not None else np.zeros((0, d - j), dtype=int)
        rows = {tuple(r) for r in np.asarray(have, dtype=int)}
        guard = 0
        while len(rows) < want and guard < 100 * want:
            tail = tuple(out[j + 1][rng.integers(len(out[j + 1]))])
            rows.add((int(rng.integers(shape[j])),) + tail)
            guard += 1
        out[j] = np.array(sorted(rows), dtype=int).reshape(len(rows), d - j)
    return out


def tt_eval_batch(t: TTTensor, idx: np.ndarray) -> np.ndarray:
    """Entries of the TT at the rows of an (m, d) index array."""
    idx = np.asarray(idx, dtype=int)
    v = t.cores[0][0, idx[:, 0], :]  # (m, r1)
    for j in range(1, t.d):
        slabs = t.cores[j][:, idx[:, j], :]  # (r, m, s)
        v = np.einsum("mr,rms->ms", v, slabs)
    return v[:, 0]


def tt_cross(
    f: GridFunction, shape: Sequence[int], cfg: CrossConfig
) -> tuple[TTTensor, CrossDiagnostics]:
    """Approximate ``f`` on the grid by a TT with ranks <= cfg.max_rank.

    ``f`` maps an (m, d) array of grid indices to m values (use
    ``scalar_to_grid_function`` to adapt a scalar function).  Sweeping stops
    when the relative error on a random validation sample drops below
    ``cfg.tol`` or the half-sweep budget runs out; failure to converge is
    reported in the diagnostics, never raised.
    """
    shape = [int(n) for n in shape]
    if not shape or min(shape) < 1:
        raise ShapeMismatchError(f"invalid shape {shape}")
    d = len(shape)
    fc = _CountingFunction(f)
    rng = np.random.default_rng(np.random.Philox(cfg.seed))
    diag = CrossDiagnostics()

    val_idx = np.column_stack([rng.integers(n, size=cfg.validation_samples) for n in shape])
    val_ref = np.asarray(f(val_idx), dtype=float).reshape(-1)
    val_norm = np.linalg.norm(val_ref)

    def validation_error(t: TTTensor) -> float:
        resid = np.linalg.norm(tt_eval_batch(t, val_idx) - val_ref)
        return float(resid / val_norm) if val_norm > 0 else float(resid)

    if d == 1:
        core = fc(np.arange(shape[0])[:, None]).reshape(1, shape[0], 1)
        t = TTTensor([core])
        diag.evaluations_used = fc.count
        diag.validation_error = validation_error(t)
        diag.sweeps = 1
        diag.converged = diag.validation_error <= cfg.tol
        return t, diag

    rank = min(2, cfg.max_rank)
    right: list = [None] * (d + 1)
    left: list = [np.zeros((1, 0), dtype=int)] * (d + 1)
    best: TTTensor | None = None
    best_err = float("inf")
    prev_err = float("inf")

    while True:
        right = _extend_right_sets(right, shape, rank, rng)

        # Left-to-right half sweep: rebuild left pivot sets and cores.
        cores: list = [None] * d
        left[0] = np.zeros((1, 0), dtype=int)
        for j in range(d - 1):
            blk = _block(fc, left[j], shape[j], right[j + 1])
            nl, n, nr = blk.shape
            q_fac, _ = np.linalg.qr(blk.reshape(nl * n, nr))
            piv = maxvol(q_fac, rng)
            core = np.linalg.solve(q_fac[piv].T, q_fac.T).T  # q @ inv(q[piv])
            cores[j] = core.reshape(nl, n, core.shape[1])
            li, mi = np.unravel_index(piv, (nl, n))
            new_left = np.column_stack([left[j][li], mi]) if left[j].shape[1] else mi[:, None]
            left[j + 1] = new_left
        cores[d - 1] = _block(fc, left[d - 1], shape[d - 1], right[d])
        diag.sweeps += 1

        # Right-to-left half sweep: rebuild right pivot sets against new rows.
        for j in range(d - 1, 0, -1):
            blk = _block(fc, left[j], shape[j], right[j + 1])
            nl, n, nr = blk.shape
            q_fac, _ = np.linalg.qr(blk.reshape(nl, n * nr).T)
            piv = maxvol(q_fac, rng)
            core = np.linalg.solve(q_fac[piv].T, q_fac.T)  # (q @ inv(q[piv])).T
            cores[j] = core.reshape(core.shape[0], n, nr)
            mi, ri = np.unravel_index(piv, (n, nr))
            tails = right[j + 1][ri]
            right[j] = np.column_stack([mi[:, None], tails]) if tails.shape[1] else mi[:, None]
        cores[0] = _block(fc, left[0], shape[0], right[1])
        diag.sweeps += 1

        t = TTTensor(cores)
        err = validation_error(t)
        if err < best_err:
            best, best_err = t, err

        if err <= cfg.tol or diag.sweeps + 2 > cfg.max_sweeps:
            break
        if rank < cfg.max_rank:
            rank = min(rank * 2, cfg.max_rank)
        elif err >= 0.95 * prev_err:
            # Stalled at full rank: restart the pivot sets from fresh random
            # draws and keep sweeping; the best model so far is retained.
            right = [None] * (d + 1)
        prev_err = err

    diag.achieved_ranks = list(best.ranks[1:-1])
    diag.evaluations_used = fc.count
    diag.validation_error = best_err
    diag.converged = best_err <= cfg.tol
    return best, diag


def scalar_to_grid_function(f: Callable[[tuple[int, ...]], float]) -> GridFunction:
    """Adapt an index-tuple -> value function to the batched interface."""

    def batch(idx: np.ndarray) -> np.ndarray:
        return np.array([f(tuple(int(i) for i in row)) for row in idx], dtype=float)

    return batch


def guided_cross(prefix: Sequence[int], shape: Sequence[int]) -> TTTensor:
    """Exact rank-1 indicator of a branch prefix.

    Entries are 1 on every branch extending ``prefix`` and 0 elsewhere: unit
    basis slices up to the prefix depth, all-ones slices after.  This is the
    one-pass construction available when the nonzero indices are known in
    advance.
    """
    shape = [int(n) for n in shape]
    prefix = tuple(int(i) for i in prefix)
    if len(prefix) > len(shape):
        raise ShapeMismatchError(f"prefix length {len(prefix)} exceeds d={len(shape)}")
    cores = []
    for j, n in enumerate(shape):
        if j < len(prefix):
            if not 0 <= prefix[j] < n:
                raise ShapeMismatchError(f"prefix index {prefix[j]} out of range for mode {j}")
            core = np.zeros((1, n, 1))
            core[0, prefix[j], 0] = 1.0
        else:
            core = np.ones((1, n, 1))
        cores.append(core)
    return TTTensor(cores)
