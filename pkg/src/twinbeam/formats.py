"""File formats: pulse records, run config, reports and result tables.

Records CSV
    UTF-8, LF line endings, header ``shot,m1,m2``, one row per pulse,
    unsigned decimal integers.
Config
    flat ``key = value`` lines; ``#`` starts a comment.
Tables
    CSV with a header row; floats written with 9 significant digits.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from twinbeam.errors import DomainError, FormatError
from twinbeam.montecarlo import PulseRecordSet
from twinbeam.photon_stats import DEFAULT_EPS
from twinbeam.theory import NRF_VARIANTS, TwbParams

RECORDS_HEADER = "shot,m1,m2"


# --- records ------------------------------------------------------------------

def format_records(records: PulseRecordSet) -> str:
    table = np.column_stack((records.shot, records.m1, records.m2))
    buf = io.StringIO()
    buf.write(RECORDS_HEADER + "\n")
    np.savetxt(buf, table, fmt="%d", delimiter=",", newline="\n")
    return buf.getvalue()


def write_records(records: PulseRecordSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_records(records))


def parse_records(text: str, source: str = "<string>") -> PulseRecordSet:
    lines = text.split("\n")
    if not lines or lines[0].strip("\r") != RECORDS_HEADER:
        raise FormatError(f"{source}: first line must be {RECORDS_HEADER!r}")
    body = [ln for ln in lines[1:] if ln]
    if any("\r" in ln for ln in body):
        raise FormatError(f"{source}: expected LF line endings")
    values = np.empty((len(body), 3), dtype=np.int64)
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != 3 or not all(p.isdigit() and p.isascii() for p in parts):
            raise FormatError(f"{source}:{i + 2}: expected three unsigned integers, got {line!r}")
        values[i] = [int(p) for p in parts]
    try:
        return PulseRecordSet(values[:, 0], values[:, 1], values[:, 2], provenance=f"file={source}")
    except DomainError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_records(path) -> PulseRecordSet:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 ({exc})") from None
    return parse_records(text, source=str(path))


# --- config -------------------------------------------------------------------

@dataclass
class RunConfig:
    N: Optional[float] = None
    M: Optional[float] = None
    mu: Optional[float] = None
    eta: Optional[float] = None
    eta1: Optional[float] = None
    eta2: Optional[float] = None
    shots: int = 200_000
    seed: int = 0
    eps: float = DEFAULT_EPS
    m2: tuple = (1, 2)
    min_samples: int = 100
    nrf_variant: str = "difference"
    # sweep keys
    axis: Optional[str] = None
    grid: Optional[tuple] = None
    objectives: Optional[tuple] = None

    def efficiencies(self) -> tuple[float, float]:
        if self.eta is not None and (self.eta1 is not None or self.eta2 is not None):
            raise DomainError("give eta or eta1/eta2, not both")
        if self.eta is not None:
            return self.eta, self.eta
        if self.eta1 is None and self.eta2 is None:
            raise DomainError("missing efficiency: set eta, or eta1 and eta2")
        eta1 = self.eta1 if self.eta1 is not None else self.eta2
        eta2 = self.eta2 if self.eta2 is not None else self.eta1
        return eta1, eta2

    def params(self) -> TwbParams:
        if self.N is not None and self.M is not None:
            raise DomainError("N and M are mutually exclusive")
        if self.mu is None:
            raise DomainError("missing mode count mu")
        eta1, eta2 = self.efficiencies()
        if self.M is not None:
            return TwbParams.from_detected_mean(self.M, self.mu, eta1, eta2)
        if self.N is None:
            raise DomainError("missing mean photon number: set N or M")
        return TwbParams(self.N, self.mu, eta1, eta2)

    def fixed_values(self) -> dict:
        """Model values for a sweep (everything except the swept axis)."""
        out = {}
        if self.N is not None:
            out["N"] = self.N
        if self.M is not None:
            out["M"] = self.M
        if self.mu is not None:
            out["mu"] = self.mu
        if self.eta is not None or self.eta1 is not None or self.eta2 is not None:
            out["eta1"], out["eta2"] = self.efficiencies()
        return out


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def parse_grid(text: str) -> tuple:
    """``a,b,c`` lists values; ``start:stop:num`` is an inclusive linspace."""
    text = text.strip()
    if ":" in text:
        start, stop, num = text.split(":")
        return tuple(float(v) for v in np.linspace(float(start), float(stop), int(num)))
    return tuple(float(t) for t in text.split(",") if t.strip())


_CONVERTERS = {
    "N": float, "M": float, "mu": float, "eta": float, "eta1": float, "eta2": float,
    "shots": int, "seed": int, "eps": float, "m2": _int_list, "min_samples": int,
    "nrf_variant": str, "axis": str, "grid": parse_grid,
    "objectives": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
}


def apply_setting(config: RunConfig, key: str, value: str, where: str = "") -> None:
    key = key.strip()
    if key not in _CONVERTERS:
        raise FormatError(f"{where}unknown config key {key!r}")
    try:
        converted = _CONVERTERS[key](value.strip())
    except ValueError as exc:
        raise FormatError(f"{where}bad value for {key!r}: {value.strip()!r} ({exc})") from None
    if key == "nrf_variant" and converted not in NRF_VARIANTS:
        raise FormatError(f"{where}nrf_variant must be one of {NRF_VARIANTS}")
    setattr(config, key, converted)


def parse_config(text: str, source: str = "<config>",
                 config: Optional[RunConfig] = None) -> RunConfig:
    config = RunConfig() if config is None else config
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        apply_setting(config, key, value, where=f"{source}:{lineno}: ")
    return config


def read_config(path, config: Optional[RunConfig] = None) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path), config)


# --- tables and reports -------------------------------------------------------

def fmt_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def _cell(x) -> str:
    if isinstance(x, str):
        if any(c in x for c in ',"\n'):
            return '"' + x.replace('"', '""') + '"'
        return x
    return fmt_float(x)


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def format_sweep(rows, axis: str, objectives: Sequence[str]) -> str:
    header = [axis] + ([] if axis == "m2" else ["m2"]) + ["heralding"] + \
        [o for o in objectives if o != "heralding"] + ["flags"]
    body = []
    for r in rows:
        line = [r.axis_value if axis != "m2" else r.m2]
        if axis != "m2":
            line.append(r.m2)
        line.append(r.heralding)
        line.extend(r.values.get(o) for o in objectives if o != "heralding")
        line.append(";".join(r.flags))
        body.append(line)
    return format_table(header, body)


VALIDATION_COLUMNS = (
    "M", "mu", "eta", "m2", "heralding",
    "fano_formula", "fano_exact", "fano_deviation",
    "nrf_exact", "nrf_product", "nrf_product_deviation",
    "nrf_difference", "nrf_difference_deviation",
    "mc_nrf_z", "mc_fano_z", "mc_samples", "status", "notes",
)


def format_validation(report) -> str:
    return format_table(VALIDATION_COLUMNS,
                        ([row[c] for c in VALIDATION_COLUMNS] for row in report.rows))


def format_report(report) -> str:
    """Flat ``key = value`` rendering of an :class:`AnalysisReport`."""
    lines = []
    if report.provenance:
        lines.append(f"provenance = {report.provenance}")
    if report.summary is not None:
        for f in fields(report.summary):
            lines.append(f"{f.name} = {fmt_float(getattr(report.summary, f.name))}")
    for key in ("mu_hat1", "mu_hat2", "mu_hat_mean", "eta_hat"):
        value = getattr(report, key)
        if value is not None:
            lines.append(f"{key} = {fmt_float(value)}")
    for k, entry in sorted(report.conditional.items()):
        lines.append(f"cond_m2_{k}_samples = {entry.samples}")
        lines.append(f"cond_m2_{k}_mean = {fmt_float(entry.mean)}")
        lines.append(f"cond_m2_{k}_fano = {fmt_float(entry.fano)}")
        lines.append(f"cond_m2_{k}_fano_se = {fmt_float(entry.fano_se)}")
    for key, value in report.theory_overlay.items():
        lines.append(f"theory_{key} = {fmt_float(value)}")
    lines.extend(f"warning = {w}" for w in report.warnings)
    lines.extend(f"error = {e}" for e in report.errors)
    return "\n".join(lines) + "\n"


def format_conditional_table(report) -> str:
    header = ["m2", "samples", "mean", "fano", "fano_se", "fano_formula", "fano_model"]
    rows = []
    for k, e in sorted(report.conditional.items()):
        rows.append([k, e.samples, e.mean, e.fano, e.fano_se,
                     report.theory_overlay.get(f"fano_formula_m2_{k}"),
                     report.theory_overlay.get(f"model_fano_m2_{k}")])
    return format_table(header, rows)
