"""Budgeted two-phase profit maximisation under the Independent Cascade model."""
from .diffusion import (DiffusionOutcome, Estimate, PartialObservation, SeedSelection,
                        continue_diffusion, estimate_profit, marginal_profit_gain, simulate_ic,
                        simulate_to_timestep)
from .exact import (OBSERVED, TABULATED, LiveGraph, PhaseTwoRule, exact_profit, exact_reachable,
                    exact_two_phase_objective, exact_two_phase_table, live_graph_probability)
from .graph import (AssignmentSpec, IngestOptions, NodeEconomics, SocialNetwork, assign_economics,
                    assign_weights, ingest_edge_list, les_miserables, make_instance,
                    residual_view)
from .protocol import TwoPhaseConfig, TwoPhaseResult, run_single_phase, run_two_phase
from .selection import AlgorithmChoice, SelectionContext, select

__version__ = "0.1.0"
