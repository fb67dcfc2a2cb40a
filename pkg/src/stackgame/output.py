"""CSV and summary output for simulation runs."""

from __future__ import annotations

import csv
import math
import warnings
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .engine import MAX_ITERS_REACHED, IterationRecord, Scenario
from .model import ConfigurationError, SatisfactionPoly

ITERATIONS_CSV = "iterations.csv"
SUMMARY_TXT = "summary.txt"
RELERR_CSV = "plotdata_relerr.csv"
SATISFACTION_CSV = "plotdata_satisfaction.csv"
OUTPUT_FILES = (ITERATIONS_CSV, SUMMARY_TXT, RELERR_CSV, SATISFACTION_CSV)

SATISFACTION_SAMPLES = 1001


class OutputError(ConfigurationError):
    """Output directory cannot be used."""


def fmt(value) -> str:
    """Shortest round-trip text; ``None``/NaN become empty cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def _width(records: Sequence[IterationRecord], attr: str) -> int:
    return max((len(getattr(d, attr)) for r in records for d in r.devices
                if getattr(d, attr) is not None), default=0)


def iteration_header(n_alpha: int, n_relerr: int) -> List[str]:
    return (["iter", "device", "xi1", "xi2", "y_true", "y_hat"]
            + [f"alpha_{i}" for i in range(n_alpha)]
            + ["fit_method", "fit_residual", "v_d", "y_d", "J_L_true"]
            + [f"relerr_alpha_{i}" for i in range(n_relerr)])


def _padded(values: Optional[tuple], n: int) -> List[str]:
    values = tuple(values or ())
    return [fmt(v) for v in values] + [""] * (n - len(values))


def iteration_rows(records: Sequence[IterationRecord]):
    n_alpha = _width(records, "alpha")
    n_rel = _width(records, "relerr")
    yield iteration_header(n_alpha, n_rel)
    for rec in records:
        for d in rec.devices:
            yield ([fmt(rec.iter), fmt(d.device), fmt(d.xi1), fmt(d.xi2), fmt(d.y_true),
                    fmt(d.y_hat)]
                   + _padded(d.alpha, n_alpha)
                   + [d.fit_method or "", fmt(d.fit_residual), fmt(d.v_d), fmt(d.y_d),
                      fmt(d.leader_objective)]
                   + _padded(d.relerr, n_rel))


def _write_csv(path: Path, rows: Iterable[Sequence[str]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def prepare_dir(out_dir: Path, names: Sequence[str], force: bool) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir}: {exc}") from None
    if not force:
        existing = [n for n in names if (out_dir / n).exists()]
        if existing:
            raise OutputError(
                f"{out_dir}: refusing to overwrite {', '.join(existing)} (use --force)")


def summary_text(records: Sequence[IterationRecord], scenario: Optional[Scenario]) -> str:
    last = records[-1]
    lines = [
        f"iterations: {len(records)}",
        f"devices: {len(last.devices)}",
        f"termination: {last.stop_reason or MAX_ITERS_REACHED}",
        f"terminated_early: {str(last.stop_reason not in (None, MAX_ITERS_REACHED)).lower()}",
    ]
    if scenario is not None:
        lines.append(f"epsilon: {fmt(scenario.epsilon)}")
        lines.append(f"seed: {scenario.seed}")
    flagged = [r for r in records if r.flags]
    lines.append(f"rounds_with_flags: {len(flagged)}")
    for r in flagged:
        for flag in r.flags:
            lines.append(f"  iteration {r.iter}: {flag}")
    lines.append(f"final_aggregate_y: {fmt(last.aggregate_y)}")
    lines.append(f"final_J_L_true: {fmt(last.leader_objective)}")
    for d in last.devices:
        if d.alpha is not None:
            alpha = ", ".join(fmt(a) for a in d.alpha)
            lines.append(f"device {d.device}: alpha = ({alpha}), y_d = {fmt(d.y_d)}, "
                         f"xi = ({fmt(d.xi1)}, {fmt(d.xi2)})")
    return "\n".join(lines) + "\n"


def relerr_rows(records: Sequence[IterationRecord]):
    n_rel = _width(records, "relerr")
    yield ["iter", "device"] + [f"relerr_alpha_{i}" for i in range(n_rel)]
    for rec in records:
        for d in rec.devices:
            if d.relerr is not None:
                yield [fmt(rec.iter), fmt(d.device)] + _padded(d.relerr, n_rel)


def satisfaction_rows(records: Sequence[IterationRecord], scenario: Scenario):
    """Dense samples of the true satisfaction and the first/last estimates on
    ``[0, ybar/10]``."""
    ys = np.linspace(0.0, scenario.params.ybar / 10.0, SATISFACTION_SAMPLES)
    yield ["y", "device", "f_true", "f_hat_first", "f_hat_last"]
    for ell, dev in enumerate(scenario.devices):
        fitted = [r.devices[ell].alpha for r in records if r.devices[ell].alpha is not None]
        first = SatisfactionPoly(fitted[0]) if fitted else None
        last = SatisfactionPoly(fitted[-1]) if fitted else None
        f_true = dev.satisfaction(ys)
        f_first = first(ys) if first else np.full_like(ys, np.nan)
        f_last = last(ys) if last else np.full_like(ys, np.nan)
        for y, a, b, c in zip(ys, f_true, f_first, f_last):
            yield [fmt(y), fmt(ell), fmt(a), fmt(b), fmt(c)]


def emit_records(records: Sequence[IterationRecord], out_dir, scenario: Scenario,
                 force: bool = False) -> List[Path]:
    """Write the full output file set for one run and return the paths."""
    if not records:
        raise ConfigurationError("no iteration records to write")
    out = Path(out_dir)
    prepare_dir(out, OUTPUT_FILES, force)
    try:
        _write_csv(out / ITERATIONS_CSV, iteration_rows(records))
        (out / SUMMARY_TXT).write_text(summary_text(records, scenario), encoding="utf-8")
        _write_csv(out / RELERR_CSV, relerr_rows(records))
        _write_csv(out / SATISFACTION_CSV, satisfaction_rows(records, scenario))
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from None
    return [out / n for n in OUTPUT_FILES]


def median_relerr_rows(runs: Sequence[Sequence[IterationRecord]]):
    """Per-iteration median (over runs) of each device's relative errors."""
    by_key = {}
    n_rel = 0
    for records in runs:
        for rec in records:
            for d in rec.devices:
                if d.relerr is not None:
                    by_key.setdefault((rec.iter, d.device), []).append(d.relerr)
                    n_rel = max(n_rel, len(d.relerr))
    yield ["iter", "device", "runs"] + [f"median_relerr_alpha_{i}" for i in range(n_rel)]
    for (it, dev), errs in sorted(by_key.items()):
        arr = np.array([list(e) + [np.nan] * (n_rel - len(e)) for e in errs], dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            med = np.nanmedian(arr, axis=0)
        yield [fmt(it), fmt(dev), fmt(len(errs))] + [fmt(m) for m in med]


def write_median_relerr(runs, path: Path) -> None:
    _write_csv(path, median_relerr_rows(runs))
