"""Linear trajectory encoding with normalized radial bases.

A stage of T timesteps is spanned by B normalized Gaussian bumps with
centers spread uniformly over the stage and width 1.5x the center spacing.
Each row of the resulting T x B matrix sums to one (partition of unity),
and decoding is the linear map u = Psi w.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def radial_matrix(horizon: int, count: int) -> np.ndarray:
    """Normalized radial basis matrix of shape (horizon, count)."""
    if horizon < 1 or count < 1:
        raise ValueError("horizon and count must be positive")
    if count == 1:
        return np.ones((horizon, 1))
    s = np.linspace(0.0, 1.0, horizon)[:, None] if horizon > 1 else np.zeros((1, 1))
    centers = np.linspace(0.0, 1.0, count)[None, :]
    spacing = 1.0 / (count - 1)
    width = 1.5 * spacing
    phi = np.exp(-0.5 * ((s - centers) / width) ** 2)
    return phi / phi.sum(axis=1, keepdims=True)


@dataclass
class BasisEncoding:
    horizon: int
    counts: list[int]
    matrices: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.matrices:
            self.matrices = [radial_matrix(self.horizon, b) for b in self.counts]
        for k, (m, b) in enumerate(zip(self.matrices, self.counts)):
            if m.shape != (self.horizon, b):
                raise ValueError(f"basis matrix {k} has shape {m.shape}, expected {(self.horizon, b)}")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def decode(self, stage: int, w: np.ndarray) -> np.ndarray:
        """Trajectory of one stage's scalar signal from its weights."""
        return self.matrices[stage] @ np.asarray(w, dtype=float)

    def split(self, w: np.ndarray) -> list[np.ndarray]:
        """Slice a concatenated weight vector into per-stage blocks."""
        w = np.asarray(w, dtype=float)
        out, at = [], 0
        for b in self.counts:
            out.append(w[at : at + b])
            at += b
        return out
