"""Delimited-text readers and writers plus report serialization.

Files are UTF-8 with a header row. Numbers use a decimal point and no
thousands separators. Machine output keeps full float precision.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from crossloss.blend import BlendResult, ControlSpec
from crossloss.elicitation import ElicitationSample, RegressionFit, SpecificationResult
from crossloss.loss import DomainError, PredictionSet, SignedLossRecord
from crossloss.metrics import MetricReport


class ParseError(ValueError):
    """Malformed input file; the message names the row and column."""


def _read_rows(path):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            sample = fh.read(4096)
            fh.seek(0)
            try:
                dialect = csv.Sniffer().sniff(sample, delimiters=",;\t")
            except csv.Error:
                dialect = csv.excel
            rows = [r for r in csv.reader(fh, dialect) if any(c.strip() for c in r)]
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: cannot read file: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: file is empty; a header row is required")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column names in header")
    return path, header, rows[1:]


def _number(path, lineno, column, text):
    try:
        value = float(text.strip())
    except ValueError:
        raise ParseError(f"{path}: row {lineno}, column {column!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"{path}: row {lineno}, column {column!r}: not finite: {text!r}")
    return value


def _require(path, header, names):
    missing = [n for n in names if n not in header]
    if missing:
        raise ParseError(f"{path}: header is missing column(s) {missing}; found {header}")


def _cells(path, header, rows):
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        yield lineno, dict(zip(header, row))


def read_predictions(path) -> list[PredictionSet]:
    """Read ``id, actual, <set>...``; every extra column is a prediction set."""
    path, header, rows = _read_rows(path)
    _require(path, header, ["id", "actual"])
    names = [h for h in header if h not in ("id", "actual")]
    if not names:
        raise ParseError(f"{path}: no prediction columns besides 'id' and 'actual'")
    ids, actuals, preds = [], [], {n: [] for n in names}
    seen = set()
    for lineno, cell in _cells(path, header, rows):
        rid = cell["id"].strip()
        if rid in seen:
            raise ParseError(f"{path}: row {lineno}: duplicate id {rid!r}")
        seen.add(rid)
        actual = _number(path, lineno, "actual", cell["actual"])
        if actual <= 0:
            raise DomainError(f"{path}: row {lineno} (id {rid!r}): actual must be > 0, got {actual}")
        ids.append(rid)
        actuals.append(actual)
        for n in names:
            value = _number(path, lineno, n, cell[n])
            if value < 0:
                raise DomainError(
                    f"{path}: row {lineno} (id {rid!r}), column {n!r}: prediction must be >= 0")
            preds[n].append(value)
    if not ids:
        raise ParseError(f"{path}: no data rows")
    return [PredictionSet(n, ids, actuals, preds[n]) for n in names]


def write_predictions(path, sets: list[PredictionSet]):
    """Write aligned sets in the same layout ``read_predictions`` accepts."""
    first = sets[0]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "actual"] + [s.name for s in sets])
        for i, rid in enumerate(first.ids):
            w.writerow([rid, repr(float(first.actuals[i]))]
                       + [repr(float(s.predicted[i])) for s in sets])


def read_elicitation(path) -> list[ElicitationSample]:
    """Read ``epsilon, actual, satisfaction`` rows (satisfaction in percent)."""
    path, header, rows = _read_rows(path)
    cols = ["epsilon", "actual", "satisfaction"]
    _require(path, header, cols)
    out = []
    for lineno, cell in _cells(path, header, rows):
        vals = [_number(path, lineno, c, cell[c]) for c in cols]
        try:
            out.append(ElicitationSample(*vals))
        except DomainError as exc:
            raise DomainError(f"{path}: row {lineno}: {exc}") from None
    return out


def read_controls(path, ids) -> ControlSpec:
    """Read control totals.

    Either ``id, group, total`` with one row per id (the total repeated
    within a group), or a single ``total`` row applied to every id.
    """
    path, header, rows = _read_rows(path)
    _require(path, header, ["total"])
    cells = list(_cells(path, header, rows))
    if "id" not in header:
        if len(cells) != 1:
            raise ParseError(f"{path}: without an 'id' column exactly one total row is expected")
        lineno, cell = cells[0]
        total = _number(path, lineno, "total", cell["total"])
        if total <= 0:
            raise DomainError(f"{path}: row {lineno}: control total must be > 0")
        return ControlSpec.overall(ids, total)
    _require(path, header, ["group"])
    assignment, totals = {}, {}
    for lineno, cell in cells:
        rid, group = cell["id"].strip(), cell["group"].strip()
        total = _number(path, lineno, "total", cell["total"])
        if total <= 0:
            raise DomainError(f"{path}: row {lineno}: control total must be > 0")
        if rid in assignment:
            raise ParseError(f"{path}: row {lineno}: duplicate id {rid!r}")
        if group in totals and totals[group] != total:
            raise ParseError(f"{path}: row {lineno}: group {group!r} has conflicting totals")
        assignment[rid] = group
        totals[group] = total
    missing = [i for i in ids if i not in assignment]
    if missing:
        raise ParseError(f"{path}: no control group for ids {missing[:5]}")
    return ControlSpec(assignment, totals)


def _plain(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def report_to_dict(report: MetricReport) -> dict:
    return {
        "set": report.set_name,
        "loss_params": {"p": report.params.p, "q": report.params.q},
        "metrics": dict(report.metric_values),
        "flags": {k: v.value for k, v in report.admissibility_flags.items()},
        "per_observation": {k: _plain(v) for k, v in report.per_observation.items()},
    }


def fit_to_dict(fit: RegressionFit, spec: SpecificationResult) -> dict:
    return {
        "p_hat": fit.p_hat,
        "q_hat": fit.q_hat,
        "intercept": fit.intercept,
        "standard_errors": dict(zip(("p", "q", "intercept"), fit.standard_errors)),
        "n_used": fit.n_used,
        "n_dropped_zero_u": fit.n_dropped_zero_u,
        "n_floored": fit.n_floored,
        "n_dropped_full": fit.n_dropped_full,
        "heteroscedasticity_score": fit.heteroscedasticity_score,
        "sum_pq": spec.sum_pq,
        "property1_holds": spec.property1_holds,
        "p_positive": spec.p_positive,
        "diagnostics": list(spec.diagnostics),
    }


def blend_to_dict(result: BlendResult, names) -> dict:
    return {
        "weights": dict(zip(names, result.best_weights.weights)),
        "best_loss": result.best_loss,
        "grid_resolution": result.grid_resolution,
        "evaluations": result.evaluations,
        "blended": dict(zip(result.blended.ids, _plain(result.blended.predicted))),
    }


def bias_to_dict(name: str, records: list[SignedLossRecord]) -> dict:
    return {"set": name, "records": [
        {"id": r.id, "signed_loss": r.signed_loss, "magnitude": r.magnitude} for r in records]}


def dumps(obj) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(obj, indent=2, allow_nan=True, default=_plain)


def format_table(rows: list[list], header: list[str]) -> str:
    """Fixed-width text table; floats are shown with two decimals."""
    def cell(v):
        if isinstance(v, bool) or v is None:
            return str(v)
        if isinstance(v, float):
            return f"{v:.2f}" if math.isfinite(v) else str(v)
        return str(v)

    body = [[cell(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
    return "\n".join(lines)
