"""Structured verification reports and their serialized forms.

JSON is the normative format: field order is fixed and floats carry 17
significant digits, so a rerun with the same seed produces byte-identical
output except for the runtime field.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

VERDICTS = ("pass", "fail", "inconclusive", "skip")

_FIELD_ORDER = (
    "claim_id",
    "case_id",
    "parameters",
    "predicted",
    "measured",
    "tolerance",
    "std_error",
    "verdict",
    "seed",
    "runtime_seconds",
    "claim_anchor",
)


@dataclass(frozen=True)
class VerificationReport:
    """One verified claim: what was predicted, what was measured, verdict.

    ``claim_anchor`` is a short human-readable statement of the formula or
    property the claim checks (empty only for plumbing self-tests).
    """

    claim_id: str
    case_id: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    predicted: Any = None
    measured: Any = None
    tolerance: float = 0.0
    std_error: Optional[float] = None
    verdict: str = "inconclusive"
    seed: int = 0
    runtime_seconds: float = 0.0
    claim_anchor: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    def to_dict(self) -> dict:
        out = {}
        for name in _FIELD_ORDER:
            out[name] = getattr(self, name)
        out["parameters"] = dict(self.parameters)
        return out


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def _json_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, complex):
        return '{"re": %s, "im": %s}' % (_fmt_float(v.real), _fmt_float(v.imag))
    if isinstance(v, str):
        import json as _json

        return _json.dumps(v)
    if isinstance(v, Mapping):
        inner = ", ".join(f"{_json_value(str(k))}: {_json_value(val)}" for k, val in v.items())
        return "{" + inner + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    try:
        import numpy as np

        if isinstance(v, np.integer):
            return str(int(v))
        if isinstance(v, np.floating):
            return _fmt_float(float(v))
        if isinstance(v, np.complexfloating):
            return _json_value(complex(v))
        if isinstance(v, np.ndarray):
            return _json_value(v.tolist())
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot serialize {type(v)}")


def emit_json(reports: Sequence[VerificationReport]) -> str:
    buf = io.StringIO()
    buf.write("[\n")
    for i, r in enumerate(reports):
        d = r.to_dict()
        buf.write("  {")
        buf.write(", ".join(f'"{k}": {_json_value(v)}' for k, v in d.items()))
        buf.write("}")
        buf.write(",\n" if i + 1 < len(reports) else "\n")
    buf.write("]\n")
    return buf.getvalue()


def parse_json(doc: str) -> list[VerificationReport]:
    import json

    raw = json.loads(doc)
    out = []
    for d in raw:
        kwargs = {k: d[k] for k in _FIELD_ORDER}
        for key in ("predicted", "measured"):
            v = kwargs[key]
            if isinstance(v, dict) and set(v) == {"re", "im"}:
                kwargs[key] = complex(v["re"], v["im"])
        out.append(VerificationReport(**kwargs))
    return out


def emit_csv(reports: Sequence[VerificationReport]) -> str:
    import csv

    cols = [c for c in _FIELD_ORDER if c != "parameters"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in reports:
        d = r.to_dict()
        row = []
        for c in cols:
            v = d[c]
            if isinstance(v, float):
                v = format(v, ".17g")
            elif isinstance(v, complex):
                v = format(v.real, ".17g")
            row.append(v)
        w.writerow(row)
    return buf.getvalue()


def emit_text(reports: Sequence[VerificationReport]) -> str:
    lines = []
    width = max((len(r.claim_id) for r in reports), default=10)
    for r in reports:
        meas = r.measured
        if isinstance(meas, float):
            meas = f"{meas:.6g}"
        pred = r.predicted
        if isinstance(pred, float):
            pred = f"{pred:.6g}"
        lines.append(
            f"{r.claim_id:<{width}}  [{r.verdict.upper():<12}] case={r.case_id}"
            f" predicted={pred} measured={meas} tol={r.tolerance:g}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def emit_report(reports: Sequence[VerificationReport], format: str = "json") -> str:
    """Serialize reports; json is normative, csv flattens scalar fields,
    text is aligned for humans."""
    if format == "json":
        return emit_json(reports)
    if format == "csv":
        return emit_csv(reports)
    if format == "text":
        return emit_text(reports)
    raise ValueError(f"unknown format {format!r}")


def exit_code(reports: Sequence[VerificationReport]) -> int:
    """0 when every non-skipped report passes, 1 on any fail, 2 when the
    only problems are inconclusive verdicts."""
    verdicts = {r.verdict for r in reports if r.verdict != "skip"}
    if "fail" in verdicts:
        return 1
    if "inconclusive" in verdicts:
        return 2
    return 0
