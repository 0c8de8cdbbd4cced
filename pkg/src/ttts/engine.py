"""Tree search driven by factored value and visit models.

One search iteration follows the classic select / expand / simulate /
evaluate / backpropagate cycle, except that node statistics never live in
per-node storage: the value model is a TT built once by cross
approximation, and visit counts are kept as one TT per tree layer, updated
by adding exact rank-1 prefix indicators and recompressing.  Node queries
(the subtree aggregates behind the UCB rule) are suffix-sum contractions.

The loop itself is written against a small backend interface so the same
selection, simulation, tie-breaking and seeding logic can run on dense
table storage; the table variant lives in the oracle module and doubles as
a baseline and as an equivalence oracle for this engine.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import reduce
from math import inf, log, sqrt
from typing import Sequence

import numpy as np

from .cross import CrossConfig, CrossDiagnostics, guided_cross, tt_cross
from .refine import CMAESConfig, cmaes_refine
from .tt import SuffixSumCache, TTTensor, node_value, tt_add, tt_round, tt_zeros
from .ttgo import condition
from .problems import Problem

IndexPath = tuple[int, ...]


@dataclass
class SearchConfig:
    tau: int = 10
    c_explore: float = 3.0
    max_iters: int = 50
    visit_round_rank: int = 30
    update_q: bool = False
    seed: int = 0
    simulate_stochastic: bool = False

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.c_explore < 0:
            raise ValueError("c_explore must be nonnegative")
        if self.max_iters < 1 or self.visit_round_rank < 1:
            raise ValueError("max_iters and visit_round_rank must be positive")


# Visit values below this are compression noise, not actual visits: counts
# are integers scaled by completion products, so real visits are >= 1.
VISIT_EPS = 1e-9


def ucb_score(q: float, v: float, v_parent: float, c: float) -> float:
    """Upper confidence bound of a node; unvisited nodes score infinite."""
    if v <= VISIT_EPS:
        return inf
    explore = sqrt(max(log(v_parent), 0.0) / v) if v_parent > 0 else 0.0
    return q / v + c * explore


# ---------------------------------------------------------------------------
# Backends.


class TTModelBackend:
    """Node statistics from factored models.

    ``q`` is the (conditioned) value TT over the d tree layers.  Visit
    counts for prefixes of length j+1 live in ``v_models[j]``: each
    recorded visit adds the exact rank-1 indicator of the prefix, so a
    node's count is its subtree completion count times the number of
    iterations that reached it, and the per-layer chains stay small after
    rounding.
    """

    def __init__(self, q_model: TTTensor, visit_round_rank: int = 30):
        self.q = q_model
        self.shape = q_model.shape
        self.d = q_model.d
        self.round_rank = visit_round_rank
        self._rebuild_q(q_model)
        self.v_models: list[TTTensor] = [tt_zeros(self.shape) for _ in range(self.d)]
        self.v_caches: list[SuffixSumCache] = [
            SuffixSumCache.build(v) for v in self.v_models
        ]

    def _rebuild_q(self, q_model: TTTensor) -> None:
        self.q = q_model
        self.q_cache = SuffixSumCache.build(q_model)
        self.q_mats = [
            np.einsum("anb,b->an", q_model.cores[j], self.q_cache.suffix[j + 1])
            for j in range(self.d)
        ]

    def _row(self, t: TTTensor, prefix: IndexPath) -> np.ndarray:
        row = np.ones(1)
        for j, i in enumerate(prefix):
            row = row @ t.cores[j][:, i, :]
        return row

    def child_q(self, prefix: IndexPath) -> np.ndarray:
        return self._row(self.q, prefix) @ self.q_mats[len(prefix)]

    def child_visits(self, prefix: IndexPath) -> np.ndarray:
        j = len(prefix)
        v = self.v_models[j]
        row = self._row(v, prefix)
        vals = np.einsum("a,anb,b->n", row, v.cores[j], self.v_caches[j].suffix[j + 1])
        return np.maximum(vals, 0.0)

    def parent_visits(self, prefix: IndexPath) -> float:
        j = len(prefix)
        return max(node_value(self.v_models[j], prefix, self.v_caches[j]), 0.0)

    def node_visits(self, prefix: IndexPath) -> float:
        if not prefix:
            return self.parent_visits(prefix)
        g = len(prefix)
        return max(node_value(self.v_models[g - 1], prefix, self.v_caches[g - 1]), 0.0)

    def record_visits(self, prefixes: set[IndexPath]) -> None:
        by_layer: dict[int, list[IndexPath]] = {}
        for p in prefixes:
            by_layer.setdefault(len(p), []).append(p)
        for length, group in by_layer.items():
            j = length - 1
            delta = reduce(tt_add, (guided_cross(p, self.shape) for p in sorted(group)))
            updated = tt_round(tt_add(self.v_models[j], delta), self.round_rank, 0.0)
            self.v_models[j] = updated
            self.v_caches[j] = SuffixSumCache.build(updated)

    def update_q_residuals(self, corrections: list[tuple[IndexPath, float]]) -> None:
        """Add rank-1 leaf corrections (path, residual) to the value model."""
        if not corrections:
            return
        from .tt import tt_scale

        deltas = [
            tt_scale(guided_cross(p, self.shape), r) for p, r in corrections if r != 0.0
        ]
        if not deltas:
            return
        q_new = tt_round(tt_add(self.q, reduce(tt_add, deltas)), self.round_rank, 0.0)
        self._rebuild_q(q_new)

    def q_rank(self) -> int:
        return self.q.max_rank

    def v_rank(self) -> int:
        return max(v.max_rank for v in self.v_models)

    def storage_entries(self) -> int:
        return self.q.n_entries + sum(v.n_entries for v in self.v_models)


# ---------------------------------------------------------------------------
# Solutions.


@dataclass
class Solution:
    actions: tuple
    weights: np.ndarray
    cost: float
    path: IndexPath = ()

    def key(self) -> tuple:
        return (tuple(np.asarray(self.actions).tolist()), tuple(np.asarray(self.weights).tolist()))

    def to_dict(self) -> dict:
        return {
            "actions": np.asarray(self.actions).tolist(),
            "weights": np.asarray(self.weights).tolist(),
            "cost": self.cost,
            "path": list(self.path),
        }


class SolutionSet:
    """Best-cost candidates, ascending, deduplicated, capped at tau."""

    def __init__(self, tau: int):
        self.tau = tau
        self.entries: list[Solution] = []

    def offer(self, sol: Solution) -> None:
        key = sol.key()
        for existing in self.entries:
            if existing.key() == key:
                return
        self.entries.append(sol)
        self.entries.sort(key=lambda s: (s.cost, s.path))
        del self.entries[self.tau :]

    def best_cost(self) -> float:
        return self.entries[0].cost if self.entries else inf

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dicts(self) -> list[dict]:
        return [s.to_dict() for s in self.entries]


@dataclass
class SearchState:
    backend: object
    solutions: SolutionSet
    rng: np.random.Generator
    expanded: set[IndexPath] = field(default_factory=set)

    @property
    def q_model(self):
        return self.backend.q

    @property
    def v_models(self):
        return self.backend.v_models

    @property
    def q_cache(self):
        return self.backend.q_cache

    @property
    def v_caches(self):
        return self.backend.v_caches


def new_state(backend, cfg: SearchConfig) -> SearchState:
    return SearchState(
        backend=backend,
        solutions=SolutionSet(cfg.tau),
        rng=np.random.default_rng(np.random.Philox(cfg.seed)),
    )


# ---------------------------------------------------------------------------
# The four phases.


def select(state: SearchState, cfg: SearchConfig) -> list[IndexPath]:
    """Descend with a beam of tau paths ranked by UCB.

    A path stops where its tip has never been selected before (or at full
    depth); stopped paths keep their slots while the remaining beam
    deepens.  Infinite scores (unvisited nodes) break ties by value, then
    by lowest index.
    """
    backend = state.backend
    d = backend.d
    frontier: list[IndexPath] = []
    active: list[IndexPath] = [()]
    for j in range(d):
        if not active or len(frontier) >= cfg.tau:
            frontier.extend(active)
            break
        cands: list[tuple[float, float, IndexPath]] = []
        for prefix in active:
            qs = backend.child_q(prefix)
            vs = backend.child_visits(prefix)
            vp = backend.parent_visits(prefix)
            for i in range(backend.shape[j]):
                score = ucb_score(float(qs[i]), float(vs[i]), vp, cfg.c_explore)
                cands.append((score, float(qs[i]), prefix + (i,)))
        cands.sort(key=lambda t: (-t[0], -t[1], t[2]))
        slots = cfg.tau - len(frontier)
        active = []
        for _, _, p in cands[:slots]:
            if p in state.expanded and len(p) < d:
                active.append(p)
            else:
                frontier.append(p)
    else:
        frontier.extend(active)
    return frontier


def simulate(
    state: SearchState, prefixes: Sequence[IndexPath], cfg: SearchConfig
) -> list[IndexPath]:
    """Complete each prefix to full depth guided by the value model.

    Greedy mode takes the child with the largest aggregate value per layer
    (first index wins ties); stochastic mode samples children with their
    positive aggregate values as unnormalized probabilities.
    """
    backend = state.backend
    d = backend.d
    out = []
    for prefix in prefixes:
        path = prefix
        while len(path) < d:
            vals = backend.child_q(path)
            if cfg.simulate_stochastic:
                weights = np.maximum(vals, 0.0)
                total = weights.sum()
                if total <= 0:
                    i = int(state.rng.integers(len(vals)))
                else:
                    i = int(state.rng.choice(len(vals), p=weights / total))
            else:
                i = int(np.argmax(vals))
            path = path + (i,)
        out.append(path)
    return out


def backprop(
    state: SearchState,
    visited: Sequence[IndexPath],
    cfg: SearchConfig,
    densities: Sequence[float] | None = None,
) -> SearchState:
    """Record every prefix of the visited full-depth paths.

    Prefixes are deduplicated within the call, so one iteration contributes
    a binary visit pattern per layer.  With ``update_q`` on, each leaf also
    receives a rank-1 residual correction toward its observed (transformed)
    value; ``densities`` supplies those observations.
    """
    backend = state.backend
    d = backend.d
    prefixes: set[IndexPath] = set()
    for path in visited:
        if len(path) != d:
            raise ValueError("backprop expects full-depth paths")
        for g in range(1, d + 1):
            prefixes.add(path[:g])
    backend.record_visits(prefixes)
    if cfg.update_q and densities is not None:
        from .cross import tt_eval_batch

        paths = list(dict.fromkeys(visited))
        current = tt_eval_batch(backend.q, np.array(paths))
        corrections = [
            (p, float(y) - float(c))
            for p, y, c in zip(paths, densities, current)
        ]
        backend.update_q_residuals(corrections)
    return state


# ---------------------------------------------------------------------------
# Full loop.


@dataclass
class SearchResult:
    solutions: SolutionSet
    trace: list[dict]
    evals: int = 0
    wall_s: float = 0.0
    storage_entries: int = 0
    cross_diagnostics: CrossDiagnostics | None = None

    def best(self) -> Solution:
        return self.solutions.entries[0]


def search_loop(
    backend,
    problem: Problem,
    cfg: SearchConfig,
    z: Sequence[float] = (),
    spaces=None,
    t_start: float | None = None,
    wall_budget_s: float | None = None,
) -> SearchResult:
    """Iterate select / simulate / evaluate / backprop, keeping top-tau."""
    from .ttgo import transform_cost

    spaces = spaces if spaces is not None else problem.decision_spaces()
    state = new_state(backend, cfg)
    t0 = t_start if t_start is not None else time.perf_counter()
    trace: list[dict] = []
    evals = 0
    for it in range(1, cfg.max_iters + 1):
        # The budget can already be spent on model construction; still run
        # one iteration so a result always exists.
        if it > 1 and wall_budget_s is not None and time.perf_counter() - t0 >= wall_budget_s:
            break
        it_t0 = time.perf_counter()
        selected = select(state, cfg)
        state.expanded.update(selected)
        full = simulate(state, selected, cfg)
        idx = np.array(full, dtype=int).reshape(len(full), backend.d)
        costs = problem.cost_on_grid(idx, z=z, spaces=spaces)
        evals += len(full)
        for path, c in zip(full, costs):
            actions, weights = problem.decode(path, spaces)
            state.solutions.offer(Solution(actions, weights, float(c), path))
        densities = transform_cost(costs, problem.transform) if cfg.update_q else None
        backprop(state, full, cfg, densities=densities)
        trace.append(
            {
                "iter": it,
                "best_cost": state.solutions.best_cost(),
                "evals": evals,
                "q_rank": backend.q_rank() if hasattr(backend, "q_rank") else 0,
                "v_rank": backend.v_rank() if hasattr(backend, "v_rank") else 0,
                "wall_ms": (time.perf_counter() - it_t0) * 1000.0,
            }
        )
    storage = backend.storage_entries() if hasattr(backend, "storage_entries") else 0
    return SearchResult(
        solutions=state.solutions,
        trace=trace,
        evals=evals,
        wall_s=time.perf_counter() - t0,
        storage_entries=storage,
    )


def build_q_model(
    problem: Problem,
    cross_cfg: CrossConfig,
    q_aug: TTTensor | None = None,
) -> tuple[TTTensor, CrossDiagnostics | None]:
    """Cross-approximate the transformed cost on the augmented grid."""
    if q_aug is not None:
        return q_aug, None
    f = problem.augmented_grid_function()
    return tt_cross(f, problem.augmented_shape(), cross_cfg)


def run(
    problem: Problem,
    cfg: SearchConfig,
    cross_cfg: CrossConfig | None = None,
    z: Sequence[float] = (),
    q_aug: TTTensor | None = None,
    wall_budget_s: float | None = None,
) -> SearchResult:
    """End-to-end search: build/condition the value model, then iterate.

    Returns the top-tau solutions found by search (before any continuous
    refinement) plus the per-iteration trace.
    """
    if len(z) != len(problem.condition_grids):
        raise ValueError(
            f"problem expects {len(problem.condition_grids)} condition values, got {len(z)}"
        )
    t0 = time.perf_counter()
    cross_cfg = cross_cfg or CrossConfig(max_rank=problem.meta.get("r_max", 10), seed=cfg.seed)
    q_aug, diag = build_q_model(problem, cross_cfg, q_aug)
    q_model = condition(q_aug, z, problem.condition_grids) if z else q_aug
    if q_model.d != problem.depth:
        raise ValueError(
            f"conditioned model has {q_model.d} modes, tree has {problem.depth} layers"
        )
    backend = TTModelBackend(q_model, visit_round_rank=cfg.visit_round_rank)
    result = search_loop(
        backend, problem, cfg, z=z, t_start=t0, wall_budget_s=wall_budget_s
    )
    result.cross_diagnostics = diag
    return result


def run_parallel_instances(
    problem: Problem,
    cfg: SearchConfig,
    cross_cfg: CrossConfig | None = None,
    z: Sequence[float] = (),
    q_aug: TTTensor | None = None,
    instances: int = 1,
) -> SearchResult:
    """Independent searches with separate visit models; solution sets merge."""
    results = []
    for k in range(instances):
        sub = SearchConfig(
            tau=cfg.tau,
            c_explore=cfg.c_explore,
            max_iters=cfg.max_iters,
            visit_round_rank=cfg.visit_round_rank,
            update_q=cfg.update_q,
            seed=cfg.seed + k,
            simulate_stochastic=cfg.simulate_stochastic,
        )
        results.append(run(problem, sub, cross_cfg, z=z, q_aug=q_aug))
    merged = results[0]
    for other in results[1:]:
        for sol in other.solutions:
            merged.solutions.offer(sol)
        merged.evals += other.evals
        merged.wall_s += other.wall_s
    return merged


# ---------------------------------------------------------------------------
# Refinement glue.


def refine_solutions(
    problem: Problem,
    solutions: SolutionSet,
    z: Sequence[float] = (),
    population: int = 25,
    iterations: int = 20,
    seed: int = 0,
    threads: int = 1,
) -> SolutionSet:
    """Polish each candidate's continuous weights with discrete choices
    frozen; the initial step size is one grid spacing."""
    bounds = problem.weight_bounds()
    spacings = [g.spacing for g in problem.weight_grids]
    sigma0 = max(float(np.mean(spacings)) if spacings else 0.1, 1e-3)
    out = SolutionSet(solutions.tau)

    def refine_one(k_sol):
        k, sol = k_sol
        if not len(sol.weights):
            return sol
        def j_w(w):
            return problem.cost(z, sol.actions, w)

        cfg = CMAESConfig(
            population=population,
            iterations=iterations,
            sigma0=sigma0,
            bounds=bounds,
            seed=seed + k,
        )
        w_best, c_best = cmaes_refine(j_w, sol.weights, cfg)
        return Solution(sol.actions, w_best, c_best, sol.path)

    items = list(enumerate(solutions))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            refined = list(pool.map(refine_one, items))
    else:
        refined = [refine_one(it) for it in items]
    for sol in refined:
        out.offer(sol)
    return out
