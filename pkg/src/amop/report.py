"""Deterministic report documents.

Reports are JSON with sorted keys. Floats in the machine section are written
with 17 significant digits in scientific notation, so identical inputs give
byte-identical output and every double round-trips. Human-readable lines use
6 significant digits.
"""
from __future__ import annotations

import json
import math

import numpy as np
import sympy as sp

from . import __version__
from .analysis import Infimum
from .calculus import LeastSquaresSolution, bounded_transform, minimum_modulus
from .classify import ClassificationReport, SpectrumReport, classify_am, spectrum_report
from .core import INFINITE, DiagonalModel, FiniteOperator, OperatorModel
from .truncation import ConvergenceRecord, TruncationPlan


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".16e")


def _plain(obj):
    """Convert numpy/sympy/complex values into JSON-able primitives."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"im": float(obj.imag), "re": float(obj.real)}
    if isinstance(obj, sp.Basic):
        return str(obj)
    return obj


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_emit(obj[k], indent + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit(v, indent) for v in obj) + "]"
        return "[\n" + ",\n".join(f"{pad}  {_emit(v, indent + 1)}" for v in obj) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    return json.dumps(obj)


def render(doc: dict) -> str:
    return _emit(_plain(doc), 0) + "\n"


def _g(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.6g}{x.imag:+.6g}i" if x.imag else f"{x.real:.6g}"
    return f"{float(x):.6g}"


def _tool() -> dict:
    return {"name": "amop", "version": __version__}


def _clauses(report: ClassificationReport) -> list[dict]:
    return [{"evidence": c.evidence, "holds": c.holds, "name": c.name} for c in report.clauses]


def _spectrum(s: SpectrumReport) -> dict:
    return {
        "discrete_sample": [{"multiplicity": "inf" if m == INFINITE else m, "value": complex(lam)}
                            for lam, m in s.discrete_sample],
        "essential": None if s.essential is None else [str(v) for v in s.essential],
        "essential_numeric": s.essential_float,
        "notes": list(s.notes),
        "spectrum_discrete": s.spectrum_discrete,
        "zero_in_spectrum": s.zero_in_spectrum,
        "zero_kind": s.zero_kind,
    }


def _set_text(values) -> str:
    if values is None:
        return "undecided"
    return "{" + ", ".join(str(v) for v in values) + "}"


def classification_document(model: OperatorModel, echo: dict) -> tuple[dict, ClassificationReport]:
    report = classify_am(model)
    spec = spectrum_report(model)
    doc = {
        "tool": _tool(),
        "spec": echo,
        "classification": {
            "clauses": _clauses(report),
            "evidence": list(report.evidence),
            "route": report.route,
            "verdict": report.verdict.value,
        },
        "spectrum": _spectrum(spec),
    }
    human = [f"verdict: {report.verdict.value} (route: {report.route})"]
    human += [f"  {c.name}: {c.holds} ({c.evidence})" for c in report.clauses]
    human += [f"  {e}" for e in report.evidence]
    m = minimum_modulus(model)
    if isinstance(m, Infimum):
        doc["minimum_modulus"] = {"attained": m.attained, "certified": m.certified,
                                  "evidence": m.evidence, "value": float(m.value)}
        human.append(f"minimum modulus: {_g(m.value)} ({m.evidence})")
    else:
        doc["minimum_modulus"] = {"attained": True, "certified": True, "value": float(m)}
        human.append(f"minimum modulus: {_g(m)}")
    if isinstance(model, DiagonalModel) and not model.is_finite_dimensional:
        zs = spectrum_report(bounded_transform(model))
        doc["bounded_transform"] = {"spectrum": _spectrum(zs)}
        human.append(f"essential spectrum of T: {_set_text(spec.essential)}")
        human.append(f"essential spectrum of Z_T: {_set_text(zs.essential)}")
    else:
        human.append("finite-dimensional: spectrum is purely discrete")
    doc["human"] = human
    return doc, report


def verification_document(records: list[ConvergenceRecord], plan: TruncationPlan, echo: dict) -> dict:
    rows = []
    human = [f"{'check':<18} {'size':>5} {'value':>12} {'deviation':>12} {'tol':>8}  status"]
    for r in records:
        rows.append({
            "check_id": r.check_id,
            "deviations": list(r.deviations),
            "limit_estimate": r.limit_estimate,
            "monotone": r.monotone_flag,
            "passed": r.passed,
            "prediction": r.prediction,
            "sizes": list(r.sizes),
            "tolerance": r.tolerance,
            "trend": r.trend,
            "values": list(r.values),
        })
        for n, v, d in zip(r.sizes, r.values, r.deviations):
            human.append(f"{r.check_id:<18} {n:>5} {_g(v):>12} {_g(d):>12} {_g(r.tolerance):>8}  "
                         f"{'ok' if d <= r.tolerance else 'FAIL'}")
        if r.prediction is not None:
            human.append(f"{r.check_id:<18} limit estimate {_g(r.limit_estimate)}, predicted {_g(r.prediction)}")
    return {
        "tool": _tool(),
        "spec": echo,
        "plan": {"checks": list(plan.checks), "conjugate": plan.conjugate, "seed": plan.seed,
                 "sizes": list(plan.sizes)},
        "records": rows,
        "passed": all(r.passed for r in records),
        "seed": plan.seed,
        "human": human,
    }


def solution_document(sol: LeastSquaresSolution, rhs: np.ndarray, echo: dict, tolerance: float) -> dict:
    passed = sol.mp_certificate <= tolerance
    return {
        "tool": _tool(),
        "spec": echo,
        "rhs": [complex(v) for v in rhs],
        "solution": [complex(v) for v in sol.solution],
        "residual_norm": sol.residual_norm,
        "mp_certificate": sol.mp_certificate,
        "deviations": dict(sol.deviations),
        "tolerance": tolerance,
        "passed": passed,
        "human": [
            "x = [" + ", ".join(_g(complex(v)) for v in sol.solution) + "]",
            f"residual ||Tx - y|| = {_g(sol.residual_norm)}",
            f"Moore-Penrose certificate {_g(sol.mp_certificate)} (tolerance {_g(tolerance)}): "
            + ("pass" if passed else "FAIL"),
        ],
    }
