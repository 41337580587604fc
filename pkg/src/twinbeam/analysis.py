"""Measurement-side analysis of pulse records.

Empirical moments and the noise reduction factor, self-consistent
estimation of the efficiency and mode count without calibration, and
conditional signal statistics for a heralding idler count.

Variances and covariances use the unbiased ``n - 1`` convention throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats as sps

from twinbeam.errors import (
    ClassicalityWarning,
    ConditioningError,
    DomainError,
    EstimatorError,
    TwinBeamError,
)
from twinbeam.montecarlo import PulseRecordSet
from twinbeam.photon_stats import DEFAULT_EPS, MomentSummary
from twinbeam.theory import (
    TwbParams,
    conditional_fano_formula,
    exact_conditional_fano,
    exact_nrf,
    nrf_formula,
)

MIN_SAMPLES = 100
BOOTSTRAP_RESAMPLES = 200
ARM_IMBALANCE_NOTE = 0.10
MODE_DIVERGENCE_WARNING = 0.20


@dataclass(frozen=True)
class RunSummary:
    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float
    nrf_hat: float
    fano1: Optional[float]
    fano2: Optional[float]
    shots: int
    nrf_se: float = math.nan


def _records(records) -> PulseRecordSet:
    if not isinstance(records, PulseRecordSet):
        raise TypeError(f"expected PulseRecordSet, got {type(records).__name__}")
    return records


def summarize(records: PulseRecordSet) -> RunSummary:
    """Empirical moments of a run and its noise reduction factor.

    ``nrf_se`` is the delta-method standard error of ``nrf_hat``.
    """
    records = _records(records)
    shots = len(records)
    if shots < 2:
        raise DomainError(f"need at least 2 shots, got {shots}")
    m1 = records.m1.astype(float)
    m2 = records.m2.astype(float)
    mean1, mean2 = m1.mean(), m2.mean()
    shot_noise = mean1 + mean2
    if shot_noise == 0:
        raise EstimatorError("noise reduction factor undefined: no photons detected in either arm")

    cov_matrix = np.cov(m1, m2, ddof=1)
    var1, var2, cov = cov_matrix[0, 0], cov_matrix[1, 1], cov_matrix[0, 1]
    d = m1 - m2
    var_d = d.var(ddof=1)
    nrf_hat = var_d / shot_noise

    # influence function of var(d)/mean(m1+m2)
    influence = ((d - d.mean()) ** 2 - var_d) / shot_noise \
        - var_d / shot_noise**2 * (m1 + m2 - shot_noise)
    nrf_se = influence.std(ddof=1) / math.sqrt(shots)

    return RunSummary(
        mean1=float(mean1), mean2=float(mean2),
        var1=float(var1), var2=float(var2), cov=float(cov),
        nrf_hat=float(nrf_hat),
        fano1=float(var1 / mean1) if mean1 > 0 else None,
        fano2=float(var2 / mean2) if mean2 > 0 else None,
        shots=shots, nrf_se=float(nrf_se),
    )


def _as_summary(data) -> RunSummary:
    return data if isinstance(data, RunSummary) else summarize(data)


def estimate_modes(data, arm: int) -> float:
    """Mode count from the first two moments of one arm: ``<m>^2 / (var - <m>)``.

    ``data`` is a record set or its :class:`RunSummary`.
    """
    if arm not in (1, 2):
        raise DomainError(f"arm must be 1 or 2, got {arm!r}")
    s = _as_summary(data)
    mean, var = (s.mean1, s.var1) if arm == 1 else (s.mean2, s.var2)
    excess = var - mean
    if excess <= 0:
        raise EstimatorError(
            f"arm {arm}: variance {var:.6g} does not exceed mean {mean:.6g}; "
            "the marginal is not super-Poissonian and the mode estimator is undefined")
    return mean**2 / excess


def estimate_modes_mean(data) -> tuple[float, float, float]:
    """Per-arm mode estimates and their average."""
    s = _as_summary(data)
    mu1, mu2 = estimate_modes(s, 1), estimate_modes(s, 2)
    return mu1, mu2, 0.5 * (mu1 + mu2)


def estimate_eta(summary: RunSummary) -> Optional[float]:
    """Efficiency implied by treating the data as an ideal twin beam: ``1 - R``.

    Returns ``None`` with a :class:`ClassicalityWarning` when ``R >= 1``.
    """
    nrf = summary.nrf_hat
    if not math.isfinite(nrf):
        raise EstimatorError("noise reduction factor is undefined")
    if nrf >= 1.0:
        warnings.warn(
            f"R = {nrf:.4g} >= 1: correlations are classical, no efficiency estimate",
            ClassicalityWarning, stacklevel=2)
        return None
    return 1.0 - nrf


class ConditionedSample(NamedTuple):
    signal: np.ndarray
    stats: MomentSummary
    fano_se: float


def _histogram_moments(hist: np.ndarray):
    """Rowwise sample mean and unbiased variance from count histograms."""
    k = np.arange(hist.shape[-1], dtype=float)
    n = hist.sum(axis=-1)
    mean = hist @ k / n
    second = hist @ (k * k)
    var = (second - n * mean**2) / (n - 1)
    return mean, var


def condition_records(records: PulseRecordSet, m2_value: int,
                      min_samples: int = MIN_SAMPLES,
                      n_boot: int = BOOTSTRAP_RESAMPLES,
                      seed: int = 0) -> ConditionedSample:
    """Signal counts of the shots where the idler registered ``m2_value``.

    The Fano standard error is a bootstrap over the selected shots. Since the
    counts are integers, one resample is a multinomial draw over the count
    histogram, which keeps the bootstrap cheap at any sample size.
    """
    records = _records(records)
    signal = records.m1[records.m2 == m2_value]
    if signal.size < max(min_samples, 2):
        raise ConditioningError(
            f"m2={m2_value}: found {signal.size} heralding shots, need at least {min_samples}")
    mean = float(signal.mean())
    var = float(signal.var(ddof=1))
    summary = MomentSummary.from_moments(mean, var)

    hist = np.bincount(signal)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(m2_value),)))
    boot = rng.multinomial(signal.size, hist / signal.size, size=n_boot)
    b_mean, b_var = _histogram_moments(boot)
    with np.errstate(divide="ignore", invalid="ignore"):
        b_fano = b_var / b_mean
    b_fano = b_fano[np.isfinite(b_fano)]
    fano_se = float(b_fano.std(ddof=1)) if b_fano.size > 1 else math.nan
    return ConditionedSample(signal, summary, fano_se)


def chi_square_gof(observed, probs, min_expected: float = 5.0):
    """Pearson goodness of fit of a count histogram against a pmf.

    Bins are merged from the upper tail downward until each has at least
    ``min_expected`` expected counts; any mass beyond ``probs`` joins the
    last bin. Returns ``(statistic, dof, p_value)``.
    """
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = observed.sum()
    size = max(observed.size, probs.size)
    obs = np.zeros(size)
    obs[:observed.size] = observed
    p = np.zeros(size)
    p[:probs.size] = probs
    p[-1] += max(0.0, 1.0 - p.sum())
    expected = total * p

    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs[::-1], expected[::-1]):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    obs_bins = np.array(obs_bins[::-1])
    exp_bins = np.array(exp_bins[::-1])
    dof = obs_bins.size - 1
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(np.sum((obs_bins - exp_bins) ** 2 / exp_bins))
    return stat, dof, float(sps.chi2.sf(stat, dof))


@dataclass(frozen=True)
class ConditionalEntry:
    m2: int
    samples: int
    mean: float
    fano: Optional[float]
    fano_se: float


@dataclass
class AnalysisReport:
    summary: Optional[RunSummary] = None
    mu_hat1: Optional[float] = None
    mu_hat2: Optional[float] = None
    mu_hat_mean: Optional[float] = None
    eta_hat: Optional[float] = None
    conditional: dict[int, ConditionalEntry] = field(default_factory=dict)
    theory_overlay: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    provenance: str = ""


def self_consistent_report(records: PulseRecordSet,
                           conditioning=(1, 2),
                           min_samples: int = MIN_SAMPLES,
                           nrf_variant: str = "difference",
                           eps: float = DEFAULT_EPS,
                           seed: int = 0) -> AnalysisReport:
    """Full analysis chain with no prior calibration.

    summarize -> per-arm mode estimates -> efficiency from ``R = 1 - eta`` ->
    conditional statistics for each idler value in ``conditioning`` -> closed
    forms and the exact model evaluated at the estimated parameters.
    A failing stage is recorded in ``errors`` and later stages still run
    where their inputs exist.
    """
    records = _records(records)
    report = AnalysisReport(provenance=records.provenance)

    try:
        s = summarize(records)
        report.summary = s
    except TwinBeamError as exc:
        report.errors.append(f"summary: {exc}")
        s = None

    if s is not None:
        level = 0.5 * (s.mean1 + s.mean2)
        if level > 0 and abs(s.mean1 - s.mean2) / level > ARM_IMBALANCE_NOTE:
            report.warnings.append(
                f"arm means differ by more than {ARM_IMBALANCE_NOTE:.0%}: "
                f"{s.mean1:.6g} vs {s.mean2:.6g}; a single efficiency is reported")
        for arm in (1, 2):
            try:
                setattr(report, f"mu_hat{arm}", estimate_modes(s, arm))
            except TwinBeamError as exc:
                report.errors.append(f"modes arm {arm}: {exc}")
        if report.mu_hat1 is not None and report.mu_hat2 is not None:
            mean_mu = 0.5 * (report.mu_hat1 + report.mu_hat2)
            report.mu_hat_mean = mean_mu
            if abs(report.mu_hat1 - report.mu_hat2) / mean_mu > MODE_DIVERGENCE_WARNING:
                report.warnings.append(
                    f"mode estimates diverge by more than {MODE_DIVERGENCE_WARNING:.0%}: "
                    f"{report.mu_hat1:.6g} vs {report.mu_hat2:.6g}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ClassicalityWarning)
            report.eta_hat = estimate_eta(s)
        report.warnings.extend(str(w.message) for w in caught)

    for k in conditioning:
        try:
            sample = condition_records(records, k, min_samples=min_samples, seed=seed)
        except TwinBeamError as exc:
            report.errors.append(f"conditioning m2={k}: {exc}")
            continue
        report.conditional[k] = ConditionalEntry(
            k, int(sample.signal.size), sample.stats.mean, sample.stats.fano, sample.fano_se)

    if s is not None and report.eta_hat is not None and report.mu_hat_mean is not None:
        eta, mu = report.eta_hat, report.mu_hat_mean
        overlay = report.theory_overlay
        try:
            overlay["nrf_formula"] = nrf_formula(s.mean1, s.mean2, eta, mu, nrf_variant)
            for k in conditioning:
                overlay[f"fano_formula_m2_{k}"] = conditional_fano_formula(s.mean1, mu, eta, k)
        except TwinBeamError as exc:
            report.errors.append(f"theory overlay: {exc}")
        try:
            model = TwbParams.balanced((s.mean1 + s.mean2) / (2.0 * eta), mu, eta)
            overlay["model_nrf"] = exact_nrf(model, eps)
            for k in conditioning:
                overlay[f"model_fano_m2_{k}"] = exact_conditional_fano(model, k, eps)
        except TwinBeamError as exc:
            report.errors.append(f"model overlay: {exc}")
    return report
