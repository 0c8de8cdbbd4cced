"""Retrieval on a TT density model: transform, condition, sweep, sample.

The baseline optimizer works in three steps: map cost to an unnormalized
density with an order-reversing transform, approximate the density on the
grid in TT form, then read candidate optima back out either greedily (one
root-to-leaf sweep over aggregate node values) or stochastically (treating
node values as unnormalized probabilities).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .tt import Grid, SuffixSumCache, TTTensor

TRANSFORM_KINDS = ("negexp", "shift-reflect", "reciprocal")


@dataclass(frozen=True)
class MonotoneTransform:
    """Order-reversing map from cost to nonnegative density.

    All kinds are strictly decreasing and total on the reals:

    * ``negexp``: exp(-beta c); bounded, fast decay.
    * ``shift-reflect``: softplus(-beta c)/beta; asymptotically linear in -c,
      so low costs keep their relative scale instead of saturating.
    * ``reciprocal``: 1/(1 + beta softplus(c)); heavy polynomial tail.
    """

    kind: str = "negexp"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def transform_cost(c, m: MonotoneTransform):
    """Density value(s) for cost(s) ``c``; strictly decreasing in c."""
    c = np.asarray(c, dtype=float)
    if m.kind == "negexp":
        out = np.exp(-m.beta * c)
    elif m.kind == "shift-reflect":
        out = _softplus(-m.beta * c) / m.beta
    else:  # reciprocal
        out = 1.0 / (1.0 + m.beta * _softplus(c))
    return float(out) if out.ndim == 0 else out


def condition(q_aug: TTTensor, z, z_grids: list[Grid]) -> TTTensor:
    """Contract the leading modes of an augmented TT at coordinates ``z``.

    Each leading core is collapsed with the linear-interpolation weight
    vector of its coordinate, so the boundary rank of the remaining chain
    stays 1.  Evaluating the result equals continuous evaluation of the
    augmented TT with ``z`` prepended.
    """
    z = [float(v) for v in z]
    if len(z) != len(z_grids):
        raise ShapeMismatchError(f"{len(z)} condition values but {len(z_grids)} grids")
    if q_aug.d < len(z) + 1:
        raise ShapeMismatchError("augmented TT needs at least one free mode after conditioning")
    row = np.ones((1, 1))
    for k, (zk, grid) in enumerate(zip(z, z_grids)):
        core = q_aug.cores[k]
        if grid.n != core.shape[1]:
            raise ShapeMismatchError(f"grid {k} has {grid.n} points, mode has {core.shape[1]}")
        i, w = grid.bracket(zk)
        slab = core[:, i, :] if w == 0.0 else (1.0 - w) * core[:, i, :] + w * core[:, i + 1, :]
        row = row @ slab
    k = len(z)
    cores = [np.einsum("ab,bnc->anc", row, q_aug.cores[k])]
    cores.extend(c.copy() for c in q_aug.cores[k + 1 :])
    return TTTensor(cores)


def _layer_child_values(t: TTTensor, cache: SuffixSumCache) -> list[np.ndarray]:
    """Per layer j, the (r_j, N_j) matrix mapping a prefix row to the vector
    of child aggregate values."""
    return [
        np.einsum("anb,b->an", t.cores[j], cache.suffix[j + 1])
        for j in range(t.d)
    ]


def sweep_argmax(t: TTTensor, cache: SuffixSumCache | None = None) -> tuple[int, ...]:
    """Greedy root-to-leaf descent by aggregate node value.

    At each layer picks the child whose subtree sum is largest (first index
    wins ties).  Exact for nonnegative rank-1 tensors; a heuristic
    otherwise.  O(N d r^2) work.
    """
    cache = cache or SuffixSumCache.build(t)
    cache.check(t)
    mats = _layer_child_values(t, cache)
    row = np.ones(1)
    path = []
    for j in range(t.d):
        vals = row @ mats[j]
        i = int(np.argmax(vals))
        path.append(i)
        row = row @ t.cores[j][:, i, :]
    return tuple(path)


def tt_sample(
    t: TTTensor,
    count: int,
    seed: int | np.random.Generator = 0,
    prefix: tuple[int, ...] = (),
    cache: SuffixSumCache | None = None,
) -> list[tuple[int, ...]]:
    """Draw index paths layer by layer, weighting children by subtree sums.

    Negative aggregate values are clipped to zero inside the sampling
    weights only; a layer whose weights all vanish falls back to a uniform
    draw.  Counter-based generator, so a fixed seed reproduces the batch.
    """
    cache = cache or SuffixSumCache.build(t)
    cache.check(t)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(
        np.random.Philox(seed)
    )
    mats = _layer_child_values(t, cache)

    row0 = np.ones(1)
    for j, i in enumerate(prefix):
        row0 = row0 @ t.cores[j][:, i, :]

    out = []
    for _ in range(count):
        row = row0
        path = list(prefix)
        for j in range(len(prefix), t.d):
            weights = np.maximum(row @ mats[j], 0.0)
            total = weights.sum()
            if total <= 0.0:
                i = int(rng.integers(t.shape[j]))
            else:
                i = int(rng.choice(t.shape[j], p=weights / total))
            path.append(i)
            row = row @ t.cores[j][:, i, :]
        out.append(tuple(path))
    return out
