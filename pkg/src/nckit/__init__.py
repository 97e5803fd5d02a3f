"""Collapse metrics for last-layer activations, simplex-ETF geometry, the
classifier theory around them, and codebook error exponents."""

from .classify import (
    CentroidRule,
    ConvergenceError,
    LinearRule,
    NearestClassCenter,
    WebbLoweLDA,
    decide,
    max_margin_solve,
    webb_lowe,
)
from .codec import (
    CodecInstance,
    ErrorEstimate,
    ExponentPoint,
    ExponentReport,
    analytic_exponent,
    etf_codec,
    exponent_estimate,
    q_function,
    simulate_error_rate,
)
from .etf import (
    DeltaSearchResult,
    EtfDeviation,
    SimplexEtf,
    circumcenter,
    delta_optimality_search,
    etf_deviation,
    maximin_distance,
    mes_rescale,
    random_pose,
    realize,
    standard_etf,
)
from .io import (
    ActivationPack,
    ClassifierSnapshot,
    EpochManifest,
    FormatError,
    ManifestEntry,
    ManifestError,
    pack_from_arrays,
    read_classifier,
    read_manifest,
    read_pack,
    write_classifier,
    write_manifest,
    write_pack,
)
from .metrics import (
    NcReport,
    duality_gap,
    equiangularity_std,
    equinorm_cv,
    max_equiangularity,
    nc1_collapse,
    nc1_trace,
    ncc_mismatch,
    report_for,
    trajectory_report,
)
from .moments import Moments, compute_moments, pseudo_inverse
from .synth import SynthConfig, generate, geometric_schedule

__version__ = "0.1.0"

__all__ = [
    "ActivationPack",
    "CentroidRule",
    "ClassifierSnapshot",
    "CodecInstance",
    "ConvergenceError",
    "DeltaSearchResult",
    "EpochManifest",
    "ErrorEstimate",
    "EtfDeviation",
    "ExponentPoint",
    "ExponentReport",
    "FormatError",
    "LinearRule",
    "ManifestEntry",
    "ManifestError",
    "Moments",
    "NcReport",
    "NearestClassCenter",
    "SimplexEtf",
    "SynthConfig",
    "WebbLoweLDA",
    "analytic_exponent",
    "circumcenter",
    "compute_moments",
    "decide",
    "delta_optimality_search",
    "duality_gap",
    "equiangularity_std",
    "equinorm_cv",
    "etf_codec",
    "etf_deviation",
    "exponent_estimate",
    "generate",
    "geometric_schedule",
    "max_equiangularity",
    "max_margin_solve",
    "maximin_distance",
    "mes_rescale",
    "nc1_collapse",
    "nc1_trace",
    "ncc_mismatch",
    "pack_from_arrays",
    "pseudo_inverse",
    "q_function",
    "random_pose",
    "read_classifier",
    "read_manifest",
    "read_pack",
    "realize",
    "report_for",
    "simulate_error_rate",
    "standard_etf",
    "trajectory_report",
    "webb_lowe",
    "write_classifier",
    "write_manifest",
    "write_pack",
]
