"""Photon statistics of multimode twin beams and conditional sub-Poissonian light."""

from twinbeam.analysis import (
    AnalysisReport,
    RunSummary,
    condition_records,
    estimate_eta,
    estimate_modes,
    estimate_modes_mean,
    self_consistent_report,
    summarize,
)
from twinbeam.errors import (
    ClassicalityWarning,
    ConditioningError,
    DomainError,
    EstimatorError,
    FormatError,
    TwinBeamError,
)
from twinbeam.montecarlo import PulseRecordSet, SeedSpec, sample_run, sample_shot
from twinbeam.photon_stats import (
    MomentSummary,
    PhotonDist,
    binomial_thin,
    dist_stats,
    nb_dist,
    nb_pmf,
    truncation_length,
)
from twinbeam.sweep import SweepRow, SweepSpec, find_optimum, run_sweep, validate
from twinbeam.theory import (
    JointDist,
    TwbParams,
    conditional_fano_formula,
    conditional_signal_pmf,
    exact_conditional_fano,
    exact_nrf,
    fano_detected_relation,
    heralding_probability,
    joint_detected_pmf,
    nrf_formula,
    photon_posterior,
)

__version__ = "0.1.0"
