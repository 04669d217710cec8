"""Data-driven analog beam codebook synthesis from per-element E-field data."""

from .beamopt import (
    BeamWeights,
    CoordinateDescentResult,
    PhaseSpec,
    SdrConvergenceError,
    SdrSolution,
    coordinate_descent,
    design_beam,
    gaussian_randomization,
    max_eigenpair,
    quantize_phase,
    solve_sdr,
)
from .codebook import (
    Candidate,
    CandidateSet,
    Codebook,
    CodebookEntry,
    GreedyInitSpec,
    GreedyResult,
    KMeansConfig,
    KMeansResult,
    MeanGainCriterion,
    MeanThreshold,
    PercentileMixCriterion,
    PercentileThreshold,
    SizeLimit,
    benchmark_aim_degrees,
    benchmark_codebook,
    codebook_802_15_3c,
    codebook_from_dict,
    codebook_summary,
    codebook_to_dict,
    generate_candidates,
    greedy_codebook,
    kmeans_codebook,
    load_codebook,
    restrict_region,
    save_codebook,
    uniform_init,
)
from .efield import (
    FREE_SPACE_IMPEDANCE_OHMS,
    GAIN_FACTOR,
    CoverageRegion,
    Direction,
    DirectionSet,
    EFieldGrid,
    GridFormatError,
    SyntheticUlaSpec,
    coherence_matrix,
    coherence_sum,
    fibonacci_directions,
    generate_ula_efield,
    load_efield,
    mesh_directions,
    oriented_ula_efield,
    save_efield,
    snap_to_grid,
)
from .metrics import (
    CoverageStats,
    GainPattern,
    beam_gain,
    beam_gains_linear,
    beam_pattern,
    composite_gains_linear,
    composite_pattern,
    coverage_stats,
    db_from_linear,
    gap_map,
    linear_from_db,
    upper_bound_gains_linear,
    upper_bound_pattern,
    write_pattern_csv,
    write_stats_json,
)
from .oracle import BruteForceResult, RandomInstanceSpec, brute_force_b3, random_instance

__version__ = "0.1.0"
