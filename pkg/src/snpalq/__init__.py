"""Greedy endmember extraction for linear-quadratic hyperspectral mixtures.

Implements the SNPALQ extraction algorithm together with the SPA and
SNPA baselines, a synthetic linear-quadratic scene generator, a
separation-quality metric and a Monte-Carlo benchmark harness.
"""

from .extraction import (
    ExtractionResult,
    recover_abundances,
    snpa_extract,
    snpalq_extract,
    spa_extract,
)
from .lq_model import (
    EPS_FEAS,
    LqScene,
    expand_lq,
    expand_lq_subset,
    generate_scene,
    lq_dictionary_size,
    lq_pairs,
    validate_separability,
)
from .simplex_solver import (
    SolverConfig,
    project_to_delta,
    solve_nnls_delta,
    solve_nnls_delta_oracle,
)

__version__ = "0.1.0"
