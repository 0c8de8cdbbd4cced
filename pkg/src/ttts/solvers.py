"""Solver front ends sharing one result shape.

Four ways to attack a problem: the tree search over factored models
(``ttts``), direct retrieval from the factored density (``ttgo``), a
covariance-adaptation evolution strategy on the continuous block alone
(``cmaes``), and the dense-table tree search (``mcts``).  All are
deterministic for a fixed seed.
"""
from __future__ import annotations

import time
from typing import Sequence

import numpy as np

from .cross import CrossConfig
from .engine import (
    SearchConfig,
    SearchResult,
    Solution,
    SolutionSet,
    refine_solutions,
    run,
)
from .errors import SolverIncompatibleError
from .problems import Problem
from .refine import CMAESConfig, cmaes_refine
from .tt import TTTensor
from .ttgo import condition, sweep_argmax, tt_sample

SOLVER_NAMES = ("ttts", "ttgo", "cmaes", "mcts")


def solve_ttts(
    problem: Problem,
    cfg: SearchConfig,
    cross_cfg: CrossConfig | None = None,
    z: Sequence[float] = (),
    q_aug: TTTensor | None = None,
    refine: bool = False,
    cma_population: int = 25,
    cma_iterations: int = 20,
    threads: int = 1,
    wall_budget_s: float | None = None,
) -> SearchResult:
    result = run(problem, cfg, cross_cfg, z=z, q_aug=q_aug, wall_budget_s=wall_budget_s)
    if refine:
        t0 = time.perf_counter()
        result.solutions = refine_solutions(
            problem,
            result.solutions,
            z=z,
            population=cma_population,
            iterations=cma_iterations,
            seed=cfg.seed,
            threads=threads,
        )
        result.wall_s += time.perf_counter() - t0
    return result


def solve_ttgo(
    problem: Problem,
    cfg: SearchConfig,
    cross_cfg: CrossConfig | None = None,
    z: Sequence[float] = (),
    q_aug: TTTensor | None = None,
) -> SearchResult:
    """Retrieval-only baseline: one greedy sweep plus stochastic samples
    from the density model, ranked by true cost.  No tree statistics and no
    continuous refinement."""
    from .engine import build_q_model

    t0 = time.perf_counter()
    cross_cfg = cross_cfg or CrossConfig(max_rank=problem.meta.get("r_max", 10), seed=cfg.seed)
    q_aug, diag = build_q_model(problem, cross_cfg, q_aug)
    q_model = condition(q_aug, z, problem.condition_grids) if len(z) else q_aug

    n_samples = cfg.max_iters * cfg.tau - 1
    paths = [sweep_argmax(q_model)]
    paths.extend(tt_sample(q_model, n_samples, seed=cfg.seed))
    paths = list(dict.fromkeys(paths))
    spaces = problem.decision_spaces()
    costs = problem.cost_on_grid(np.array(paths, dtype=int), z=z, spaces=spaces)
    solutions = SolutionSet(cfg.tau)
    for path, c in zip(paths, costs):
        actions, weights = problem.decode(path, spaces)
        solutions.offer(Solution(actions, weights, float(c), path))
    wall = time.perf_counter() - t0
    trace = [
        {
            "iter": 1,
            "best_cost": solutions.best_cost(),
            "evals": len(paths),
            "q_rank": q_model.max_rank,
            "v_rank": 0,
            "wall_ms": wall * 1000.0,
        }
    ]
    result = SearchResult(
        solutions=solutions,
        trace=trace,
        evals=len(paths),
        wall_s=wall,
        storage_entries=q_model.n_entries,
    )
    result.cross_diagnostics = diag
    return result


def solve_cmaes(
    problem: Problem,
    cfg: SearchConfig,
    z: Sequence[float] = (),
    population: int = 25,
    iterations: int | None = None,
) -> SearchResult:
    """Evolution strategy over the continuous weights from the domain
    center.  Refuses problems with discrete action layers."""
    if problem.n_actions > 0:
        raise SolverIncompatibleError(
            f"cmaes cannot optimize the {problem.n_actions} discrete action "
            f"layer(s) of problem {problem.name!r}"
        )
    t0 = time.perf_counter()
    bounds = problem.weight_bounds()
    w0 = np.array([(lo + hi) / 2.0 for lo, hi in bounds])
    span = np.array([hi - lo for lo, hi in bounds])
    cma_cfg = CMAESConfig(
        population=population,
        iterations=iterations if iterations is not None else cfg.max_iters,
        sigma0=max(float(np.mean(span)) / 4.0, 1e-3),
        bounds=bounds,
        seed=cfg.seed,
    )

    def j_w(w):
        return problem.cost(z, (), w)

    w_best, c_best = cmaes_refine(j_w, w0, cma_cfg)
    solutions = SolutionSet(cfg.tau)
    solutions.offer(Solution((), w_best, c_best))
    wall = time.perf_counter() - t0
    evals = cma_cfg.population * cma_cfg.iterations + 1
    trace = [
        {
            "iter": 1,
            "best_cost": c_best,
            "evals": evals,
            "q_rank": 0,
            "v_rank": 0,
            "wall_ms": wall * 1000.0,
        }
    ]
    return SearchResult(solutions=solutions, trace=trace, evals=evals, wall_s=wall)


def solve_mcts(
    problem: Problem,
    cfg: SearchConfig,
    z: Sequence[float] = (),
    wall_budget_s: float | None = None,
) -> SearchResult:
    from .oracle import table_mcts

    return table_mcts(problem, cfg, z=z, wall_budget_s=wall_budget_s)
