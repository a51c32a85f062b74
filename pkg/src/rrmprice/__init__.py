"""Regret-based and utility-based choice pricing as mixed-integer programs."""
from .instance import Instance, synth_instance, load, save, validate
from .stochastic import sample_draws, dominance_draws, compute_er, derive_bounds
from .builders import build_rrm_uncap, build_rrm_cap, build_rum, build_model, decode, audit_solution
from .solver import SolveOptions, solve, solve_lp, solve_external, ExternalSolverConfig
from .oracle import SupplierPlan, simulate_choices, oracle_optimize
from .harness import ExperimentConfig, run_experiment, gap_percent

__all__ = [
    "Instance", "synth_instance", "load", "save", "validate",
    "sample_draws", "dominance_draws", "compute_er", "derive_bounds",
    "build_rrm_uncap", "build_rrm_cap", "build_rum", "build_model", "decode", "audit_solution",
    "SolveOptions", "solve", "solve_lp", "solve_external", "ExternalSolverConfig",
    "SupplierPlan", "simulate_choices", "oracle_optimize",
    "ExperimentConfig", "run_experiment", "gap_percent",
]
