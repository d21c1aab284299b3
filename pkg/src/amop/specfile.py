"""Operator spec files.

Line-oriented ``key = value`` text. ``#`` starts a comment. A matrix is given
after ``matrix =`` either inline (rows separated by ``;``) or as the
following indented lines, one row per line, entries separated by commas::

    name = nilpotent
    kind = matrix
    field = complex
    matrix =
        0, 1
        0, 0

Entries are ``re+imi`` tokens (``3``, ``-2.5i``, ``1e-3-4i``). Files ending
in ``.json`` are read as a JSON object with the same keys.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .core import (
    INFINITE,
    DiagonalModel,
    ExplicitPart,
    Field,
    FiniteOperator,
    FormulaPart,
    OperatorModel,
    Structure,
    validate,
)
from .formula import FormulaError, has_imag, parse_formula

KEYS = ("name", "kind", "formula", "multiplicity", "null_dim", "field", "matrix",
        "eigenvalues", "multiplicities", "structure")

_COMPLEX = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?"
                      r"([+-](\d+(\.\d*)?|\.\d+)?([eE][+-]?\d+)?i)?$"
                      r"|^[+-]?((\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)?i$")


class SpecError(ValueError):
    """Malformed or invalid spec; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class SpecFile:
    name: str = ""
    kind: str = "diagonal"
    formula: str | None = None
    multiplicity: str | None = None
    null_dim: int | float = 0
    field: str | None = None
    matrix: list[list[complex]] | None = None
    eigenvalues: list[complex] | None = None
    multiplicities: list[int] | None = None
    structure: str = "general"
    raw: dict = dc_field(default_factory=dict, repr=False)

    def echo(self) -> dict:
        """Normalised key/value view for reports."""
        out = {"name": self.name, "kind": self.kind,
               "null_dim": "inf" if self.null_dim == INFINITE else int(self.null_dim)}
        if self.field:
            out["field"] = self.field
        if self.formula is not None:
            out["formula"] = self.formula
        if self.multiplicity is not None:
            out["multiplicity"] = self.multiplicity
        if self.eigenvalues is not None:
            out["eigenvalues"] = [format_complex(v) for v in self.eigenvalues]
        if self.multiplicities is not None:
            out["multiplicities"] = list(self.multiplicities)
        if self.matrix is not None:
            out["matrix"] = [[format_complex(v) for v in row] for row in self.matrix]
            out["structure"] = self.structure
        return out


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{z.imag:+}i" if z.real else f"{z.imag!r}i"


def parse_complex(token: str, path: str = "value") -> complex:
    tok = token.strip().replace(" ", "")
    if not tok or not _COMPLEX.match(tok):
        raise SpecError(path, f"not a complex number token: {token!r}")
    if tok.endswith("i"):
        tok = tok[:-1] + "j"
        if tok in ("j", "+j", "-j"):
            tok = tok.replace("j", "1j")
        elif tok[-2] in "+-":
            tok = tok[:-1] + "1j"
    return complex(tok)


def _parse_row(text: str, path: str) -> list[complex]:
    cells = [c for c in text.split(",")]
    if any(not c.strip() for c in cells):
        raise SpecError(path, "empty matrix entry")
    return [parse_complex(c, f"{path}[{j}]") for j, c in enumerate(cells)]


def _read_text(text: str) -> dict:
    data: dict = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].split("#", 1)[0].rstrip()
        i += 1
        if not line.strip():
            continue
        if "=" not in line:
            raise SpecError(f"line {i}", f"expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise SpecError(f"line {i}", f"unknown key {key!r}")
        if key in data:
            raise SpecError(key, "given twice")
        if key == "matrix":
            rows = [r for r in value.split(";") if r.strip()] if value else []
            while not value and i < len(lines):
                nxt = lines[i].split("#", 1)[0]
                if not nxt.strip():
                    i += 1
                    if rows:
                        break
                    continue
                if "=" in nxt or not nxt[:1].isspace():
                    break
                rows.append(nxt.strip())
                i += 1
            data[key] = rows
        else:
            data[key] = value
    return data


def _null_dim(value) -> int | float:
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "infinite", "infinity"):
            return INFINITE
        if not re.fullmatch(r"\d+", v):
            raise SpecError("null_dim", f"expected a non-negative integer or 'inf', got {value!r}")
        return int(v)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SpecError("null_dim", f"expected a non-negative integer or 'inf', got {value!r}")
    return value


def _to_spec(data: dict) -> SpecFile:
    unknown = [k for k in data if k not in KEYS]
    if unknown:
        raise SpecError(unknown[0], "unknown key")
    spec = SpecFile(raw=dict(data))
    spec.name = str(data.get("name", ""))
    spec.kind = str(data.get("kind", "matrix" if "matrix" in data else "diagonal")).strip().lower()
    if spec.kind not in ("matrix", "diagonal"):
        raise SpecError("kind", f"expected 'matrix' or 'diagonal', got {spec.kind!r}")
    if "field" in data:
        spec.field = str(data["field"]).strip().lower()
        if spec.field not in ("real", "complex"):
            raise SpecError("field", f"expected 'real' or 'complex', got {spec.field!r}")
    spec.null_dim = _null_dim(data.get("null_dim", 0))
    sources = [k for k in ("matrix", "formula", "eigenvalues") if k in data]
    if len(sources) != 1:
        raise SpecError("formula", "exactly one of matrix, formula, eigenvalues is required")
    if spec.kind == "matrix" and sources[0] != "matrix":
        raise SpecError("matrix", "kind 'matrix' needs a matrix block")
    if spec.kind == "diagonal" and sources[0] == "matrix":
        raise SpecError("kind", "a matrix block needs kind 'matrix'")
    if "matrix" in data:
        rows = data["matrix"]
        if isinstance(rows, str):
            rows = [r for r in rows.split(";") if r.strip()]
        if not rows:
            raise SpecError("matrix", "empty matrix")
        matrix = []
        for r, row in enumerate(rows):
            if isinstance(row, str):
                matrix.append(_parse_row(row, f"matrix[{r}]"))
            else:
                matrix.append([parse_complex(str(c), f"matrix[{r}][{j}]") for j, c in enumerate(row)])
        if len({len(row) for row in matrix}) != 1:
            raise SpecError("matrix", "rows have different lengths")
        spec.matrix = matrix
        spec.structure = str(data.get("structure", "general")).strip().lower()
    for key in ("formula", "multiplicity"):
        if key in data:
            setattr(spec, key, str(data[key]).strip())
    if "eigenvalues" in data:
        vals = data["eigenvalues"]
        items = vals.split(",") if isinstance(vals, str) else vals
        spec.eigenvalues = [parse_complex(str(v), f"eigenvalues[{j}]") for j, v in enumerate(items)]
    if "multiplicities" in data:
        vals = data["multiplicities"]
        items = vals.split(",") if isinstance(vals, str) else vals
        try:
            spec.multiplicities = [int(str(v).strip()) for v in items]
        except ValueError as exc:
            raise SpecError("multiplicities", str(exc)) from None
    return spec


def read_spec(path: str | Path) -> SpecFile:
    """Read and syntactically check a spec file. ``OSError`` propagates."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError("json", str(exc)) from None
        if not isinstance(data, dict):
            raise SpecError("json", "top level must be an object")
    else:
        data = _read_text(text)
    return _to_spec(data)


def build_model(spec: SpecFile) -> OperatorModel:
    """Turn a spec into a validated model."""
    if spec.matrix is not None:
        a = np.array(spec.matrix, dtype=complex)
        if spec.field == "real" and np.any(a.imag != 0):
            raise SpecError("matrix", "field is real but entries are complex")
        try:
            tag = Structure(spec.structure)
        except ValueError:
            raise SpecError("structure", f"unknown structure {spec.structure!r}") from None
        op = FiniteOperator(a, tag)
        try:
            result = validate(op)
        except ValueError as exc:
            raise SpecError("structure", str(exc)) from None
        if not result.valid:
            v = result.violations[0]
            raise SpecError("structure", f"{v.rule} violated (deviation {v.deviation:.3e})")
        return op
    if spec.formula is not None:
        parsed = {}
        for key in ("formula", "multiplicity"):
            src = getattr(spec, key)
            if src is None:
                continue
            try:
                parsed[key] = parse_formula(src)
            except FormulaError as exc:
                raise SpecError(key, str(exc)) from None
        part = FormulaPart(parsed["formula"], parsed.get("multiplicity"))
        complex_formula = has_imag(part.formula)
    else:
        part = ExplicitPart(tuple(spec.eigenvalues), tuple(spec.multiplicities or ()))
        complex_formula = any(v.imag != 0 for v in part.values)
    if spec.field == "real" and complex_formula:
        raise SpecError("field", "field is real but the eigenvalues are complex")
    fld = Field(spec.field) if spec.field else (Field.COMPLEX if complex_formula else Field.REAL)
    model = DiagonalModel((part,), spec.null_dim, fld, spec.name)
    result = validate(model)
    if not result.valid:
        v = result.violations[0]
        where = "multiplicity" if v.rule.startswith("multiplicity") else (
            "eigenvalues" if spec.eigenvalues is not None else "formula")
        raise SpecError(where, f"{v.rule} violated (deviation {v.deviation:.3e})")
    return model


def load_spec(path: str | Path) -> OperatorModel:
    return build_model(read_spec(path))


def read_vector(path: str | Path) -> np.ndarray:
    """Read a numeric vector: complex tokens separated by commas or whitespace."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(t for t in re.split(r"[,\s]+", line) if t)
    if not tokens:
        raise SpecError("rhs", "empty vector")
    return np.array([parse_complex(t, f"rhs[{j}]") for j, t in enumerate(tokens)], dtype=complex)
