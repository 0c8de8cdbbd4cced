"""Derivative-free polish of continuous weight vectors.

A compact (mu/mu_w, lambda) covariance-matrix-adaptation evolution strategy
with rank-1 and rank-mu updates, used to correct grid discretization error
in candidate solutions while their discrete choices stay frozen.  Samples
are clipped to the box bounds and the best point ever evaluated (including
the start) is returned, so the result never degrades the candidate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CMAESConfig:
    population: int = 25
    iterations: int = 20
    sigma0: float = 0.1
    bounds: list[tuple[float, float]] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")


def cmaes_refine(j_w, w0, cfg: CMAESConfig) -> tuple[np.ndarray, float]:
    """Minimize ``j_w`` starting from ``w0`` within the configured bounds.

    Returns the best (weights, cost) seen over the whole run; the cost is
    never above ``j_w(w0)``.
    """
    w0 = np.asarray(w0, dtype=float).copy()
    n = len(w0)
    if cfg.bounds and len(cfg.bounds) != n:
        raise ValueError(f"{len(cfg.bounds)} bounds for {n} dimensions")
    lo = np.array([b[0] for b in cfg.bounds]) if cfg.bounds else np.full(n, -np.inf)
    hi = np.array([b[1] for b in cfg.bounds]) if cfg.bounds else np.full(n, np.inf)
    if np.any(w0 < lo - 1e-12) or np.any(w0 > hi + 1e-12):
        raise ValueError("start point outside bounds")
    w0 = np.clip(w0, lo, hi)

    rng = np.random.default_rng(np.random.Philox(cfg.seed))
    best_w = w0.copy()
    best_f = float(j_w(w0))

    lam = cfg.population
    mu = lam // 2
    raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mueff = 1.0 / np.sum(weights**2)

    # Standard strategy constants.
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, np.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

    mean = w0.copy()
    sigma = cfg.sigma0
    cov = np.eye(n)
    p_c = np.zeros(n)
    p_s = np.zeros(n)

    for gen in range(cfg.iterations):
        vals, vecs = np.linalg.eigh(cov)
        vals = np.maximum(vals, 1e-20)
        sqrt_c = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
        inv_sqrt_c = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T

        zs = rng.standard_normal((lam, n))
        xs = np.clip(mean + sigma * zs @ sqrt_c.T, lo, hi)
        fs = np.array([float(j_w(x)) for x in xs])

        order = np.argsort(fs, kind="stable")
        if fs[order[0]] < best_f:
            best_f = float(fs[order[0]])
            best_w = xs[order[0]].copy()

        sel = xs[order[:mu]]
        old_mean = mean
        mean = weights @ sel
        y = (mean - old_mean) / sigma

        p_s = (1 - cs) * p_s + np.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt_c @ y)
        h_sig = float(
            np.linalg.norm(p_s) / np.sqrt(1 - (1 - cs) ** (2 * (gen + 1)))
            < (1.4 + 2 / (n + 1)) * chi_n
        )
        p_c = (1 - cc) * p_c + h_sig * np.sqrt(cc * (2 - cc) * mueff) * y

        arts = (sel - old_mean) / sigma
        rank_mu = arts.T @ (weights[:, None] * arts)
        cov = (
            (1 - c1 - cmu) * cov
            + c1 * (np.outer(p_c, p_c) + (1 - h_sig) * cc * (2 - cc) * cov)
            + cmu * rank_mu
        )
        cov = (cov + cov.T) / 2
        sigma *= float(np.exp((cs / damps) * (np.linalg.norm(p_s) / chi_n - 1)))
        sigma = float(np.clip(sigma, 1e-12, 1e6))

    return best_w, best_f
