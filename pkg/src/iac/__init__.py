"""Closed-form interference alignment and cancellation (IAC) transceiver
design for the K-user MIMO interference channel with backhaul-shared
packets."""

from .design import Design, run_design
from .errors import IacError
from .feasibility import check_feasibility, enumerate_optimal_tuples, is_optimal_tuple
from .graph import build_graph, build_graph_general, build_graph_optimal, validate_graph
from .simulator import SimParams, estimate_dof_slope, simulate_trial, snr_sweep
from .solver import design_receivers, solve_precoders
from .system_model import (ChannelSet, StreamId, SystemConfig, compute_k_iac, compute_overhead,
                           generate_channels)
from .verifier import Tolerances, verify_design

__all__ = [
    "ChannelSet", "Design", "IacError", "SimParams", "StreamId", "SystemConfig", "Tolerances",
    "build_graph", "build_graph_general", "build_graph_optimal", "check_feasibility",
    "compute_k_iac", "compute_overhead", "design_receivers", "enumerate_optimal_tuples",
    "estimate_dof_slope", "generate_channels", "is_optimal_tuple", "run_design",
    "simulate_trial", "snr_sweep", "solve_precoders", "validate_graph", "verify_design",
]
