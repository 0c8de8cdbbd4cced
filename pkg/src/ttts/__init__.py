"""Tree search over tensor-train value models.

Library layout:

* ``tt``       - TT data structure, evaluation, node aggregates, rounding
* ``cross``    - cross approximation and the rank-1 indicator builder
* ``ttgo``     - cost transform, conditioning, sweep retrieval, sampling
* ``engine``   - the search loop (selection/simulation/backpropagation)
* ``refine``   - CMA-ES polish of continuous weights
* ``problems`` - benchmark problems and the JSON config loader
* ``oracle``   - dense reference implementations used for validation
* ``cli``      - command-line front end (approximate / solve / bench)
"""

__version__ = "0.1.0"

from .tt import (
    Grid,
    SuffixSumCache,
    TTTensor,
    load_tt,
    node_value,
    save_tt,
    tt_add,
    tt_eval,
    tt_eval_continuous,
    tt_ones,
    tt_random,
    tt_round,
    tt_zeros,
)
from .cross import CrossConfig, CrossDiagnostics, guided_cross, maxvol, tt_cross
from .ttgo import MonotoneTransform, condition, sweep_argmax, transform_cost, tt_sample
from .engine import SearchConfig, SearchResult, Solution, SolutionSet, run, ucb_score
from .refine import CMAESConfig, cmaes_refine

__all__ = [
    "Grid",
    "SuffixSumCache",
    "TTTensor",
    "load_tt",
    "node_value",
    "save_tt",
    "tt_add",
    "tt_eval",
    "tt_eval_continuous",
    "tt_ones",
    "tt_random",
    "tt_round",
    "tt_zeros",
    "CrossConfig",
    "CrossDiagnostics",
    "guided_cross",
    "maxvol",
    "tt_cross",
    "MonotoneTransform",
    "condition",
    "sweep_argmax",
    "transform_cost",
    "tt_sample",
    "SearchConfig",
    "SearchResult",
    "Solution",
    "SolutionSet",
    "run",
    "ucb_score",
    "CMAESConfig",
    "cmaes_refine",
]
