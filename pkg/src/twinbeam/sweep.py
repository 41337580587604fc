"""Parameter sweeps, optimum search and formula-versus-model validation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from twinbeam.analysis import condition_records, summarize
from twinbeam.errors import DomainError, TwinBeamError
from twinbeam.montecarlo import SeedSpec, sample_run
from twinbeam.photon_stats import DEFAULT_EPS
from twinbeam.theory import (
    TwbParams,
    conditional_fano_formula,
    exact_conditional_fano,
    exact_nrf,
    heralding_probability,
    nrf_formula,
)

AXES = ("M", "mu", "eta", "m2")
OBJECTIVES = ("conditional_fano_exact", "conditional_fano_formula", "nrf_exact", "heralding")
DIVERGENCE_THRESHOLD = 0.05


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep over ``axis``.

    ``fixed`` holds the remaining model values: ``mu``, either ``M`` or
    ``N``, and ``eta1``/``eta2``. ``eta`` as an axis sets both arms.
    """

    axis: str
    grid: tuple
    fixed: dict
    conditioning: tuple = (1,)
    objectives: tuple = ("conditional_fano_exact", "conditional_fano_formula", "heralding")
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.axis not in AXES:
            raise DomainError(f"axis must be one of {AXES}, got {self.axis!r}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise DomainError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("sweep grid must be strictly increasing")
        if self.axis == "m2" and any(g < 0 or g != int(g) for g in grid):
            raise DomainError("an m2 grid must hold non-negative integers")
        unknown = set(self.objectives) - set(OBJECTIVES)
        if unknown:
            raise DomainError(f"unknown objectives {sorted(unknown)}; choose from {OBJECTIVES}")
        if "N" in self.fixed and "M" in self.fixed:
            raise DomainError("give either N or M, not both")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "conditioning", tuple(int(k) for k in self.conditioning))
        object.__setattr__(self, "objectives", tuple(self.objectives))
        object.__setattr__(self, "fixed", dict(self.fixed))

    def point(self, value: float) -> tuple[TwbParams, tuple[int, ...]]:
        """Model parameters and conditioning values at one grid value."""
        values = dict(self.fixed)
        conditioning = self.conditioning
        if self.axis == "eta":
            values["eta1"] = values["eta2"] = value
        elif self.axis == "m2":
            conditioning = (int(value),)
        else:
            if self.axis == "M":
                values.pop("N", None)
            values[self.axis] = value
        try:
            mu, eta1, eta2 = values["mu"], values["eta1"], values["eta2"]
        except KeyError as exc:
            raise DomainError(f"sweep is missing fixed value {exc.args[0]!r}") from None
        if "M" in values:
            params = TwbParams.from_detected_mean(values["M"], mu, eta1, eta2)
        elif "N" in values:
            params = TwbParams(values["N"], mu, eta1, eta2)
        else:
            raise DomainError("sweep needs a fixed N or M")
        return params, conditioning


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    m2: int
    heralding: float
    values: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def has_error(self) -> bool:
        return any(f.startswith("error") for f in self.flags)


def _evaluate_point(spec: SweepSpec, value: float, divergence: float) -> list[SweepRow]:
    try:
        params, conditioning = spec.point(value)
    except TwinBeamError as exc:
        nan_values = {name: math.nan for name in spec.objectives}
        ks = (int(value),) if spec.axis == "m2" else spec.conditioning
        return [SweepRow(value, k, math.nan, nan_values, (f"error:{exc}",)) for k in ks]

    shared_flags = []
    nrf = math.nan
    if "nrf_exact" in spec.objectives:
        try:
            nrf = exact_nrf(params, spec.eps)
        except TwinBeamError as exc:
            shared_flags.append(f"error:nrf_exact:{exc}")

    rows = []
    for k in conditioning:
        flags = list(shared_flags)
        values = {}
        try:
            herald = heralding_probability(params, k, spec.eps)
        except TwinBeamError as exc:
            herald = math.nan
            flags.append(f"error:heralding:{exc}")
        for name in spec.objectives:
            try:
                if name == "conditional_fano_exact":
                    v = exact_conditional_fano(params, k, spec.eps)
                elif name == "conditional_fano_formula":
                    v = conditional_fano_formula(params.M, params.mu, params.eta, k)
                elif name == "nrf_exact":
                    v = nrf
                else:
                    v = herald
            except TwinBeamError as exc:
                v = math.nan
                flags.append(f"error:{name}:{exc}")
            if name != "nrf_exact" and not math.isfinite(v) and not any(
                    f.startswith(f"error:{name}") for f in flags):
                flags.append(f"error:{name}:undefined")
            values[name] = v
        exact = values.get("conditional_fano_exact", math.nan)
        closed = values.get("conditional_fano_formula", math.nan)
        if math.isfinite(exact) and math.isfinite(closed) and abs(exact - closed) > divergence:
            flags.append("formula_divergence")
        rows.append(SweepRow(value, k, herald, values, tuple(flags)))
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1,
              divergence: float = DIVERGENCE_THRESHOLD) -> list[SweepRow]:
    """Evaluate the objectives along the grid.

    Rows come out in grid order, then conditioning order, for any worker
    count. Failures at one point are flagged on its rows and the sweep goes on.
    """
    def run(value):
        return _evaluate_point(spec, value, divergence)

    if workers <= 1:
        per_point = [run(v) for v in spec.grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(run, spec.grid))
    return [row for rows in per_point for row in rows]


def find_optimum(rows: Sequence[SweepRow], objective: str, direction: str = "min",
                 m2: Optional[int] = None) -> SweepRow:
    """Extremal row for ``objective``; error-flagged and NaN rows are skipped.

    Ties go to the smallest axis value.
    """
    if direction not in ("min", "max"):
        raise DomainError(f"direction must be 'min' or 'max', got {direction!r}")
    if not rows:
        raise DomainError("empty sweep table")

    def value(row):
        return row.heralding if objective == "heralding" else row.values.get(objective, math.nan)

    if objective != "heralding" and not any(objective in r.values for r in rows):
        raise DomainError(f"objective {objective!r} not present in the table")
    candidates = [r for r in rows
                  if not r.has_error and math.isfinite(value(r)) and (m2 is None or r.m2 == m2)]
    if not candidates:
        raise DomainError(f"no usable rows for objective {objective!r}")
    sign = 1.0 if direction == "min" else -1.0
    return min(candidates, key=lambda r: (sign * value(r), r.axis_value, r.m2))


# --- validation -------------------------------------------------------------

NRF_TOLERANCE = 1e-9
Z_LIMIT = 5.0

DEFAULT_VALIDATION_GRID = tuple(
    (M, mu, 0.15, m2)
    for M in (0.5, 1.0, 2.0, 3.2)
    for mu in (2.0, 10.0, 100.0)
    for m2 in (1, 2)
) + ((1.0, 200.0, 0.15, 0),)


@dataclass
class ValidationReport:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.failures)


def _z(estimate: float, se: float, reference: float) -> float:
    diff = estimate - reference
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


def _point_seed(master_seed: int, index: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])


def _validate_group(key, m2_values, index, shots, seed, mc, min_samples, eps):
    M, mu, eta = key
    params = TwbParams.from_detected_mean(M, mu, eta)
    notes = []
    nrf = nrf_prod = nrf_diff = math.nan
    try:
        nrf = exact_nrf(params, eps)
        nrf_prod = nrf_formula(params.M1, params.M2, params.eta, mu, "product")
        nrf_diff = nrf_formula(params.M1, params.M2, params.eta, mu, "difference")
    except TwinBeamError as exc:
        notes.append(f"nrf:{exc}")

    records = summary = None
    if mc and params.N > 0:
        records = sample_run(params, shots, SeedSpec(_point_seed(seed, index)))
        try:
            summary = summarize(records)
        except TwinBeamError as exc:
            notes.append(f"mc:{exc}")

    out = []
    for m2 in m2_values:
        row = {"M": M, "mu": mu, "eta": eta, "m2": m2}
        row_notes = list(notes)
        row["heralding"] = heralding_probability(params, m2, eps)
        row["fano_formula"] = conditional_fano_formula(params.M, mu, params.eta, m2)
        try:
            row["fano_exact"] = exact_conditional_fano(params, m2, eps)
        except TwinBeamError as exc:
            row["fano_exact"] = math.nan
            row_notes.append(f"fano:{exc}")
        row["fano_deviation"] = abs(row["fano_formula"] - row["fano_exact"])
        row["nrf_exact"] = nrf
        row["nrf_product"] = nrf_prod
        row["nrf_product_deviation"] = abs(nrf_prod - nrf)
        row["nrf_difference"] = nrf_diff
        row["nrf_difference_deviation"] = abs(nrf_diff - nrf)
        row["mc_nrf_z"] = math.nan
        row["mc_fano_z"] = math.nan
        row["mc_samples"] = 0
        if summary is not None and math.isfinite(nrf):
            row["mc_nrf_z"] = _z(summary.nrf_hat, summary.nrf_se, nrf)
        if records is not None and math.isfinite(row["fano_exact"]):
            try:
                cond = condition_records(records, m2, min_samples=min_samples)
                row["mc_samples"] = int(cond.signal.size)
                if cond.stats.fano is not None:
                    row["mc_fano_z"] = _z(cond.stats.fano, cond.fano_se, row["fano_exact"])
            except TwinBeamError as exc:
                row_notes.append(f"mc_fano:{exc}")
        row["notes"] = "; ".join(row_notes)
        out.append(row)
    return out


def validate(grid: Sequence[tuple] = DEFAULT_VALIDATION_GRID, shots: int = 200_000,
             seed: int = 0, mc: bool = True, min_samples: int = 100,
             eps: float = DEFAULT_EPS, workers: int = 1) -> ValidationReport:
    """Compare the closed forms and Monte Carlo against the exact model.

    ``grid`` holds ``(M, mu, eta, m2)`` points (balanced arms). The
    difference-variant noise reduction formula must match to 1e-9 and every
    Monte Carlo z-score must stay within 5; conditional Fano formula
    deviations are reported only.
    """
    groups: dict = {}
    for M, mu, eta, m2 in grid:
        groups.setdefault((float(M), float(mu), float(eta)), []).append(int(m2))
    keys = list(groups)

    def run(i):
        return _validate_group(keys[i], groups[keys[i]], i, shots, seed, mc, min_samples, eps)

    if workers <= 1:
        per_group = [run(i) for i in range(len(keys))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_group = list(pool.map(run, range(len(keys))))

    report = ValidationReport()
    for rows in per_group:
        for row in rows:
            reasons = []
            if row["nrf_difference_deviation"] > NRF_TOLERANCE:
                reasons.append("nrf_difference_deviation")
            for key in ("mc_nrf_z", "mc_fano_z"):
                if abs(row[key]) > Z_LIMIT:
                    reasons.append(key)
            row["status"] = "fail:" + "+".join(reasons) if reasons else "ok"
            if reasons:
                report.failures.append(row)
            report.rows.append(row)
    return report
