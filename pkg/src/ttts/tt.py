"""Tensor-train data structure and its core arithmetic.

A tensor train (TT) represents a d-dimensional array as a chain of
third-order cores ``G[0], ..., G[d-1]`` with ``G[j].shape == (r[j], N[j],
r[j+1])`` and boundary ranks ``r[0] == r[d] == 1``.  An entry of the full
array is the matrix product of the core slices picked out by the index
tuple.  Here the chain doubles as a compact decision tree: layer ``j`` of
the tree has ``N[j]`` children per node, and the aggregate value of a tree
node (the sum of the tensor over all completions of a branch prefix) is a
prefix product of slices contracted against cached suffix sums.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import OutOfDomainError, ShapeMismatchError, StaleCacheError

IndexPath = tuple[int, ...]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [lo, hi] with n points (n == 1 pins the value at lo)."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"grid needs at least one point, got n={self.n}")
        if self.hi < self.lo:
            raise ValueError(f"empty grid range [{self.lo}, {self.hi}]")

    def points(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def spacing(self) -> float:
        if self.n == 1:
            return 0.0
        return (self.hi - self.lo) / (self.n - 1)

    def bracket(self, x: float) -> tuple[int, float]:
        """Return (i, w) with x between points i and i+1 and weight w on i+1."""
        if x < self.lo - 1e-12 or x > self.hi + 1e-12:
            raise OutOfDomainError(f"{x} outside grid range [{self.lo}, {self.hi}]")
        if self.n == 1:
            return 0, 0.0
        t = (x - self.lo) / self.spacing
        i = int(np.clip(np.floor(t), 0, self.n - 2))
        return i, float(np.clip(t - i, 0.0, 1.0))

    def interp_weights(self, x: float) -> np.ndarray:
        """Dense weight vector over the grid nodes for linear interpolation."""
        i, w = self.bracket(x)
        out = np.zeros(self.n)
        out[i] = 1.0 - w
        if self.n > 1:
            out[i + 1] += w
        return out


class TTTensor:
    """Chain of third-order cores; immutable after construction."""

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray]):
        if len(cores) < 1:
            raise ShapeMismatchError("a TT needs at least one core")
        checked = []
        for j, c in enumerate(cores):
            c = np.asarray(c, dtype=float)
            if c.ndim != 3:
                raise ShapeMismatchError(f"core {j} is not third-order: shape {c.shape}")
            if min(c.shape) < 1:
                raise ShapeMismatchError(f"core {j} has an empty extent: {c.shape}")
            if not np.all(np.isfinite(c)):
                raise ValueError(f"core {j} contains non-finite values")
            checked.append(c)
        if checked[0].shape[0] != 1 or checked[-1].shape[2] != 1:
            raise ShapeMismatchError("boundary ranks must be 1")
        for j in range(len(checked) - 1):
            if checked[j].shape[2] != checked[j + 1].shape[0]:
                raise ShapeMismatchError(
                    f"rank mismatch between cores {j} and {j + 1}: "
                    f"{checked[j].shape[2]} vs {checked[j + 1].shape[0]}"
                )
        object.__setattr__(self, "cores", tuple(checked))

    def __setattr__(self, name, value):
        raise AttributeError("TTTensor is immutable")

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """All d+1 bond ranks, including the unit boundaries."""
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    @property
    def n_entries(self) -> int:
        """Total stored core values (the storage footprint)."""
        return sum(c.size for c in self.cores)

    def __repr__(self):
        return f"TTTensor(shape={self.shape}, ranks={self.ranks})"


def tt_ones(shape: Sequence[int]) -> TTTensor:
    return TTTensor([np.ones((1, n, 1)) for n in shape])


def tt_zeros(shape: Sequence[int]) -> TTTensor:
    return TTTensor([np.zeros((1, n, 1)) for n in shape])


def tt_random(
    shape: Sequence[int], ranks: int | Sequence[int], rng: np.random.Generator
) -> TTTensor:
    """Random TT with i.i.d. standard normal core entries."""
    d = len(shape)
    if isinstance(ranks, int):
        ranks = [ranks] * (d - 1)
    if len(ranks) != d - 1:
        raise ShapeMismatchError("need d-1 internal ranks")
    full = [1] + [max(1, r) for r in ranks] + [1]
    # Internal ranks above the unfolding bound are unreachable; clip them.
    for j in range(1, d):
        left = int(np.prod(shape[:j], dtype=object))
        right = int(np.prod(shape[j:], dtype=object))
        full[j] = min(full[j], left, right)
    return TTTensor(
        [rng.standard_normal((full[j], shape[j], full[j + 1])) for j in range(d)]
    )


def _check_index(t: TTTensor, idx: Sequence[int], depth: int | None = None) -> IndexPath:
    idx = tuple(int(i) for i in idx)
    if depth is not None and len(idx) != depth:
        raise ShapeMismatchError(f"index length {len(idx)} != {depth}")
    if len(idx) > t.d:
        raise ShapeMismatchError(f"index length {len(idx)} exceeds d={t.d}")
    for j, i in enumerate(idx):
        if not 0 <= i < t.shape[j]:
            raise ShapeMismatchError(f"index {i} out of range for mode {j} (size {t.shape[j]})")
    return idx


def tt_eval(t: TTTensor, idx: Sequence[int]) -> float:
    """Entry of the represented tensor at a full-length index tuple."""
    idx = _check_index(t, idx, depth=t.d)
    v = t.cores[0][:, idx[0], :]
    for j in range(1, t.d):
        v = v @ t.cores[j][:, idx[j], :]
    return float(v[0, 0])


def tt_eval_continuous(t: TTTensor, x: Sequence[float], grids: Sequence[Grid]) -> float:
    """Evaluate the TT at real coordinates by interpolating core slices.

    Each core is replaced by the convex combination of the two slices
    bracketing ``x[k]`` on its grid, so the result is the multilinear
    interpolant of the grid values.
    """
    if len(x) != t.d or len(grids) != t.d:
        raise ShapeMismatchError(f"need {t.d} coordinates and grids")
    v = np.ones((1, 1))
    for k in range(t.d):
        if grids[k].n != t.shape[k]:
            raise ShapeMismatchError(f"grid {k} has {grids[k].n} points, mode has {t.shape[k]}")
        i, w = grids[k].bracket(float(x[k]))
        core = t.cores[k]
        if w == 0.0:
            slab = core[:, i, :]
        else:
            slab = (1.0 - w) * core[:, i, :] + w * core[:, i + 1, :]
        v = v @ slab
    return float(v[0, 0])


@dataclass(frozen=True)
class SuffixSumCache:
    """Row-summed suffix products of a TT's cores.

    ``suffix[j]`` is the vector of length ``r[j]`` equal to
    ``(sum_i G[j][:, i, :]) @ suffix[j+1]``, with ``suffix[d] == [1]``.
    Contracting a branch prefix against ``suffix[j]`` yields the sum of the
    tensor over every completion of that prefix in O(d r^2) total work.
    """

    shape: tuple[int, ...]
    ranks: tuple[int, ...]
    suffix: tuple[np.ndarray, ...] = field(repr=False)

    @classmethod
    def build(cls, t: TTTensor) -> "SuffixSumCache":
        d = t.d
        suffix: list[np.ndarray] = [np.ones(1)] * (d + 1)
        for j in range(d - 1, -1, -1):
            suffix[j] = t.cores[j].sum(axis=1) @ suffix[j + 1]
        return cls(shape=t.shape, ranks=t.ranks, suffix=tuple(suffix))

    def check(self, t: TTTensor) -> None:
        if self.shape != t.shape or self.ranks != t.ranks:
            raise StaleCacheError(
                f"cache built for shape={self.shape}, ranks={self.ranks}; "
                f"tensor has shape={t.shape}, ranks={t.ranks}"
            )


def node_value(t: TTTensor, prefix: Sequence[int], cache: SuffixSumCache) -> float:
    """Sum of the tensor over all completions of a branch prefix.

    The empty prefix gives the grand total; a full-length prefix reduces to
    ``tt_eval``.
    """
    cache.check(t)
    prefix = _check_index(t, prefix)
    v = np.ones((1, 1))
    for j, i in enumerate(prefix):
        v = v @ t.cores[j][:, i, :]
    return float(v[0] @ cache.suffix[len(prefix)])


def tt_add(a: TTTensor, b: TTTensor) -> TTTensor:
    """Sum of two TTs by rank concatenation (ranks add at internal bonds)."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a.d
    if d == 1:
        return TTTensor([a.cores[0] + b.cores[0]])
    cores = []
    for j in range(d):
        ca, cb = a.cores[j], b.cores[j]
        ra_l, n, ra_r = ca.shape
        rb_l, _, rb_r = cb.shape
        if j == 0:
            core = np.concatenate([ca, cb], axis=2)
        elif j == d - 1:
            core = np.concatenate([ca, cb], axis=0)
        else:
            core = np.zeros((ra_l + rb_l, n, ra_r + rb_r))
            core[:ra_l, :, :ra_r] = ca
            core[ra_l:, :, ra_r:] = cb
        cores.append(core)
    return TTTensor(cores)


def tt_scale(t: TTTensor, alpha: float) -> TTTensor:
    cores = list(t.cores)
    cores[0] = cores[0] * alpha
    return TTTensor(cores)


def tt_norm(t: TTTensor) -> float:
    """Frobenius norm of the represented tensor, computed in TT form."""
    g = None
    for c in t.cores:
        if g is None:
            g = np.einsum("anb,anc->bc", c, c)
        else:
            g = np.einsum("ac,anb,cnd->bd", g, c, c)
    return float(np.sqrt(max(g[0, 0], 0.0)))


def tt_round(t: TTTensor, max_rank: int, tol: float = 0.0) -> TTTensor:
    """Compress a TT to internal ranks <= max_rank.

    Left-to-right QR orthogonalization followed by a right-to-left truncated
    SVD sweep.  With ``tol > 0`` singular values are additionally discarded
    while the accumulated Frobenius error stays below ``tol`` times the norm
    of the input; ``tol == 0`` truncates on rank alone.  Ties among equal
    singular values keep the earlier columns (numpy's SVD ordering).
    """
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    d = t.d
    if d == 1:
        return TTTensor([t.cores[0].copy()])

    cores = [c.copy() for c in t.cores]
    # Left-to-right orthogonalization: after this pass every core but the
    # last has orthonormal columns in its (left*mode, right) unfolding.
    for j in range(d - 1):
        rl, n, rr = cores[j].shape
        q, r = np.linalg.qr(cores[j].reshape(rl * n, rr))
        cores[j] = q.reshape(rl, n, q.shape[1])
        cores[j + 1] = np.einsum("ab,bnc->anc", r, cores[j + 1])

    # The whole tensor's norm now sits in the last core.
    norm = np.linalg.norm(cores[-1])
    # Split the error budget evenly across the d-1 truncations.
    delta = tol * norm / np.sqrt(d - 1) if tol > 0 else 0.0

    for j in range(d - 1, 0, -1):
        rl, n, rr = cores[j].shape
        mat = cores[j].reshape(rl, n * rr)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        r = len(s)
        if delta > 0:
            tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]  # tail[k] = ||s[k:]||
            keep = int(np.searchsorted(-tail, -delta))  # smallest k with tail[k] <= delta
            r = min(r, max(keep, 1))
        r = max(1, min(r, max_rank))
        cores[j] = vt[:r].reshape(r, n, rr)
        carry = u[:, :r] * s[:r]
        cores[j - 1] = np.einsum("anb,bc->anc", cores[j - 1], carry)
    return TTTensor(cores)


# ---------------------------------------------------------------------------
# Serialization: a JSON container that round-trips exactly (floats are
# written with Python's shortest round-trip repr).

MODEL_SCHEMA = "ttts-model/1"


def tt_to_dict(t: TTTensor, meta: dict | None = None) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "d": t.d,
        "shapes": [list(c.shape) for c in t.cores],
        "cores": [c.reshape(-1).tolist() for c in t.cores],
        "meta": meta or {},
    }


def tt_from_dict(data: dict) -> TTTensor:
    if data.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema: {data.get('schema')!r}")
    cores = []
    for shape, flat in zip(data["shapes"], data["cores"]):
        cores.append(np.array(flat, dtype=float).reshape(shape))
    return TTTensor(cores)


def save_tt(t: TTTensor, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(tt_to_dict(t, meta), sort_keys=True))


def load_tt(path: str | Path) -> tuple[TTTensor, dict]:
    data = json.loads(Path(path).read_text())
    return tt_from_dict(data), data.get("meta", {})
