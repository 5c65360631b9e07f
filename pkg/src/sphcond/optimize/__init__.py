"""Condition-number driven column subset selection."""
from .exact import exact_solve
from .local import LocalSearch, greedy_construct, local_solve
from .sweep import (DedupMap, cipic_caps_vector, dedup_columns, eta_upper_bound, inner_solve,
                    make_cipic_caps, optimize_hrtf_grid, run_sweep, sweep_transitions)
from .types import (HoopConstraintSet, InnerSolution, SelectionMask, SolverConfig, SolverMode,
                    TransitionRecord, TransitionTrace)

__all__ = [
    "DedupMap", "HoopConstraintSet", "InnerSolution", "LocalSearch", "SelectionMask",
    "SolverConfig", "SolverMode", "TransitionRecord", "TransitionTrace", "cipic_caps_vector",
    "dedup_columns", "eta_upper_bound", "exact_solve", "greedy_construct", "inner_solve",
    "local_solve", "make_cipic_caps", "optimize_hrtf_grid", "run_sweep", "sweep_transitions",
]
