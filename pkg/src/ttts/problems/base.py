"""Problem container: grids, discrete choices, cost, and metadata.

A problem couples an objective J(z, a, w) with the discretization that
turns it into a layered decision tree: optional conditioning grids for the
task variables z, K finite action sets, and B uniform weight grids.  The
tree has d = K + B layers; conditioning variables are extra leading modes
of the augmented value model and are fixed before search.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..tt import Grid
from ..ttgo import MonotoneTransform

# Batch cost: (Z (m, nz), A (m, K) label values, W (m, B)) -> (m,) costs.
BatchCost = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _all_modes(mode, action):
    return [action]


@dataclass
class Problem:
    name: str
    condition_grids: list[Grid]
    action_sets: list[np.ndarray]
    weight_grids: list[Grid]
    cost_batch: BatchCost
    transform: MonotoneTransform = field(default_factory=MonotoneTransform)
    transition: Callable = _all_modes
    error_batch: BatchCost | None = None
    stages: int = 1
    horizon: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.action_sets = [np.asarray(s) for s in self.action_sets]
        for k, s in enumerate(self.action_sets):
            if len(s) < 1:
                raise ValueError(f"action set {k} is empty")

    # -- geometry ----------------------------------------------------------

    @property
    def n_actions(self) -> int:
        return len(self.action_sets)

    @property
    def n_weights(self) -> int:
        return len(self.weight_grids)

    @property
    def depth(self) -> int:
        return self.n_actions + self.n_weights

    def decision_spaces(self, resolution: int | None = None) -> list[np.ndarray]:
        """Per tree layer, the array of values the layer's index selects."""
        spaces = [np.asarray(s, dtype=float) for s in self.action_sets]
        for g in self.weight_grids:
            if resolution is not None and g.n > 1:
                g = Grid(g.lo, g.hi, resolution)
            spaces.append(g.points())
        return spaces

    def tree_shape(self, resolution: int | None = None) -> tuple[int, ...]:
        return tuple(len(s) for s in self.decision_spaces(resolution))

    def augmented_shape(self) -> tuple[int, ...]:
        return tuple(g.n for g in self.condition_grids) + self.tree_shape()

    def weight_bounds(self) -> list[tuple[float, float]]:
        return [(g.lo, g.hi) for g in self.weight_grids]

    def decode(
        self, idx: Sequence[int], spaces: list[np.ndarray] | None = None
    ) -> tuple[tuple, np.ndarray]:
        """Tree index tuple -> (action labels, weight values)."""
        spaces = spaces or self.decision_spaces()
        k = self.n_actions
        actions = tuple(spaces[j][idx[j]] for j in range(k))
        weights = np.array([spaces[k + b][idx[k + b]] for b in range(self.n_weights)])
        return actions, weights

    # -- evaluation --------------------------------------------------------

    def eval_batch(self, Z: np.ndarray, A: np.ndarray, W: np.ndarray) -> np.ndarray:
        return np.asarray(self.cost_batch(Z, A, W), dtype=float)

    def cost(self, z: Sequence[float], a: Sequence, w: Sequence[float]) -> float:
        """Scalar objective at one (condition, actions, weights) point."""
        Z = np.asarray(z, dtype=float).reshape(1, -1)
        A = np.asarray(a, dtype=float).reshape(1, -1)
        W = np.asarray(w, dtype=float).reshape(1, -1)
        return float(self.eval_batch(Z, A, W)[0])

    def error_metric(self, z: Sequence[float], a: Sequence, w: Sequence[float]) -> float:
        if self.error_batch is None:
            return self.cost(z, a, w)
        Z = np.asarray(z, dtype=float).reshape(1, -1)
        A = np.asarray(a, dtype=float).reshape(1, -1)
        W = np.asarray(w, dtype=float).reshape(1, -1)
        return float(self.error_batch(Z, A, W)[0])

    def cost_on_grid(
        self,
        idx: np.ndarray,
        z: Sequence[float] = (),
        spaces: list[np.ndarray] | None = None,
        z_rows: np.ndarray | None = None,
    ) -> np.ndarray:
        """Costs at tree index rows, with z fixed or given per row."""
        idx = np.asarray(idx, dtype=int)
        spaces = spaces or self.decision_spaces()
        m = len(idx)
        k = self.n_actions
        if z_rows is None:
            z_rows = np.tile(np.asarray(z, dtype=float), (m, 1)) if len(z) else np.zeros((m, 0))
        A = (
            np.column_stack([spaces[j][idx[:, j]] for j in range(k)])
            if k
            else np.zeros((m, 0))
        )
        W = (
            np.column_stack([spaces[k + b][idx[:, k + b]] for b in range(self.n_weights)])
            if self.n_weights
            else np.zeros((m, 0))
        )
        return self.eval_batch(z_rows, A, W)

    def augmented_grid_function(self):
        """Batched transformed-cost evaluator over the augmented index grid,
        suitable for cross approximation."""
        from ..ttgo import transform_cost

        zpts = [g.points() for g in self.condition_grids]
        spaces = self.decision_spaces()
        nz = len(zpts)

        def f(idx: np.ndarray) -> np.ndarray:
            idx = np.asarray(idx, dtype=int)
            z_rows = (
                np.column_stack([zpts[j][idx[:, j]] for j in range(nz)])
                if nz
                else np.zeros((len(idx), 0))
            )
            costs = self.cost_on_grid(idx[:, nz:], spaces=spaces, z_rows=z_rows)
            return transform_cost(costs, self.transform)

        return f
