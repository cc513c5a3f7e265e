"""Surface-code quantum error correction: simulation, link-probability
analysis, and minimum-weight perfect-matching decoding."""

from .lattice import Lattice, GateSchedule, build_lattice, standard_schedule, validate_schedule
from .noise import ErrorModel, PauliOp, preset
from .sim import SyndromeHistory, DetectionEvent, PauliFrame, simulate_window, detection_events
from .edge_analysis import EdgeClassTable, derive_edge_classes, odd_parity_probability
from .metric import LinkGraph, manhattan, d_max, d_n, boundary_distance
from .matching import MatchGraph, Matching, mwpm, brute_force_mwpm
from .decoder import DecodeOutcome, decode_window
from .harness import TrialConfig, SweepStats, run_trials, rounds_to_failure, estimate_threshold

__version__ = "0.1.0"

__all__ = [
    "Lattice", "GateSchedule", "build_lattice", "standard_schedule", "validate_schedule",
    "ErrorModel", "PauliOp", "preset",
    "SyndromeHistory", "DetectionEvent", "PauliFrame", "simulate_window", "detection_events",
    "EdgeClassTable", "derive_edge_classes", "odd_parity_probability",
    "LinkGraph", "manhattan", "d_max", "d_n", "boundary_distance",
    "MatchGraph", "Matching", "mwpm", "brute_force_mwpm",
    "DecodeOutcome", "decode_window",
    "TrialConfig", "SweepStats", "run_trials", "rounds_to_failure", "estimate_threshold",
]
