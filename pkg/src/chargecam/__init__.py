"""Behavioral simulator for a charge-domain CAM approximate string matcher.

The package models a content-addressable memory whose rows store fixed-width
DNA segments and whose matchline voltage encodes a shift-tolerant mismatch
count, plus the correction strategies and evaluation harness needed to
measure its read-mapping accuracy against an exact edit-distance oracle.
"""

from .array_model import (
    ArrayConfig,
    ArrayImage,
    EnergyEstimate,
    MatchMode,
    MatchOutcome,
    NoiseModel,
    cell_match,
    distinguishable_states,
    energy_per_search,
    matchline_voltage,
    mismatch_counts,
    ml_variance,
    reference_voltage,
    row_mismatch_count,
    search,
    sense,
)
from .config import RunConfig, build_config
from .evaluation import (
    STRATEGIES,
    ConfusionCounts,
    EvalReport,
    compute_f1,
    cycle_energy_account,
    evaluate,
    run_condition,
    sweep_noise,
)
from .genome import (
    ErrorProfile,
    GenomeStore,
    ReadRecord,
    extract_reads,
    inject_edits,
    load_fasta,
    segment_reference,
    synthesize_genome,
)
from .oracles import (
    distance_matrix,
    edit_distance,
    edit_distance_capped,
    hamming,
    label_ground_truth,
)
from .strategies import (
    HdacParams,
    MatchDecision,
    TasrParams,
    hdac_decide,
    hdac_probability,
    rotate,
    tasr_lower_bound,
    tasr_search,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "ArrayImage",
    "ConfusionCounts",
    "EnergyEstimate",
    "ErrorProfile",
    "EvalReport",
    "GenomeStore",
    "HdacParams",
    "MatchDecision",
    "MatchMode",
    "MatchOutcome",
    "NoiseModel",
    "ReadRecord",
    "RunConfig",
    "STRATEGIES",
    "TasrParams",
    "build_config",
    "cell_match",
    "compute_f1",
    "cycle_energy_account",
    "distance_matrix",
    "distinguishable_states",
    "edit_distance",
    "edit_distance_capped",
    "energy_per_search",
    "evaluate",
    "extract_reads",
    "hamming",
    "hdac_decide",
    "hdac_probability",
    "inject_edits",
    "label_ground_truth",
    "load_fasta",
    "matchline_voltage",
    "mismatch_counts",
    "ml_variance",
    "reference_voltage",
    "rotate",
    "row_mismatch_count",
    "run_condition",
    "search",
    "segment_reference",
    "sense",
    "sweep_noise",
    "synthesize_genome",
    "tasr_lower_bound",
    "tasr_search",
]
