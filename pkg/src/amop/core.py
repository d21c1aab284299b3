"""Operator models: dense matrices and lazily defined diagonal operators.

``FiniteOperator`` is a complex matrix with a structure tag. ``DiagonalModel``
is a (possibly unbounded) diagonal operator on l^2: a kernel block of
dimension ``null_dim`` (possibly infinite) followed by one or more eigenvalue
*parts*, each either an explicit finite list or a formula ``lambda(n)``.
Zero eigenvalues live only in the kernel block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .formula import Formula, evaluate, has_imag, parse_formula, to_string

TAU_STRUCT = 1e-10
"""Structure-tag tolerance, relative to the Frobenius norm."""
TAU_ZERO = 1e-8
"""Numerical-rank cutoff, relative to the largest singular value."""
TAU_NUM = 1e-9
"""Tolerance for algebraic identity checks (relative)."""

INFINITE = math.inf
"""Marker for an infinite-dimensional kernel block."""

VALIDATION_PREFIX = 10_000


class StructureError(ValueError):
    pass


class FieldError(ValueError):
    pass


class ValidationError(ValueError):
    pass


class Structure(Enum):
    GENERAL = "general"
    SELF_ADJOINT = "self_adjoint"
    NORMAL = "normal"
    POSITIVE = "positive"


class Field(Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True, eq=False)
class FiniteOperator:
    """Dense operator ``C^cols -> C^rows`` with a structure tag.

    The tag is a claim, checked by :func:`validate`, not at construction.
    """

    entries: np.ndarray
    structure: Structure = Structure.GENERAL

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise StructureError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def adjoint(self) -> "FiniteOperator":
        return FiniteOperator(self.entries.conj().T, self.structure)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)

    def __repr__(self):
        return f"FiniteOperator({self.rows}x{self.cols}, {self.structure.value})"


@dataclass(frozen=True)
class ExplicitPart:
    """Finite list of nonzero eigenvalues with multiplicities."""

    values: tuple[complex, ...]
    multiplicities: tuple[int, ...] = ()

    def __post_init__(self):
        values = tuple(complex(v) for v in self.values)
        mult = tuple(int(m) for m in self.multiplicities) or (1,) * len(values)
        if len(mult) != len(values):
            raise ValidationError("multiplicities and values differ in length")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "multiplicities", mult)

    @property
    def dimension(self) -> int:
        return sum(self.multiplicities)


@dataclass(frozen=True)
class FormulaPart:
    """Infinite sequence ``lambda(n)``, n >= 1, with optional multiplicity formula."""

    formula: Formula
    multiplicity: Formula | None = None

    @classmethod
    def parse(cls, formula: str, multiplicity: str | None = None) -> "FormulaPart":
        return cls(parse_formula(formula), parse_formula(multiplicity) if multiplicity else None)

    def values(self, n) -> np.ndarray:
        return evaluate(self.formula, n)

    def multiplicities(self, n) -> np.ndarray:
        n = np.asarray(n)
        if self.multiplicity is None:
            return np.ones(n.shape, dtype=np.int64)
        m = np.real(evaluate(self.multiplicity, n))
        return np.rint(m).astype(np.int64)

    def __str__(self):
        text = to_string(self.formula)
        if self.multiplicity is not None:
            text += f" (multiplicity {to_string(self.multiplicity)})"
        return text


Part = Union[ExplicitPart, FormulaPart]


@dataclass(frozen=True)
class DiagonalModel:
    """Diagonal operator ``0_{null_dim} (+) diag(part_1) (+) diag(part_2) ...``.

    ``field`` REAL means a self-adjoint model (real eigenvalues).
    """

    parts: tuple[Part, ...] = ()
    null_dim: int | float = 0
    field: Field = Field.REAL
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if self.null_dim != INFINITE:
            object.__setattr__(self, "null_dim", int(self.null_dim))

    @classmethod
    def from_formula(cls, formula: str, *, multiplicity: str | None = None, null_dim=0,
                     field: Field | None = None, name: str = "") -> "DiagonalModel":
        part = FormulaPart.parse(formula, multiplicity)
        if field is None:
            field = Field.COMPLEX if has_imag(part.formula) else Field.REAL
        return cls((part,), null_dim, field, name)

    @classmethod
    def from_values(cls, values, multiplicities=(), *, null_dim=0, name: str = "") -> "DiagonalModel":
        values = [complex(v) for v in values]
        field = Field.REAL if all(v.imag == 0 for v in values) else Field.COMPLEX
        return cls((ExplicitPart(tuple(values), tuple(multiplicities)),), null_dim, field, name)

    @property
    def formula_parts(self) -> tuple[FormulaPart, ...]:
        return tuple(p for p in self.parts if isinstance(p, FormulaPart))

    @property
    def explicit_parts(self) -> tuple[ExplicitPart, ...]:
        return tuple(p for p in self.parts if isinstance(p, ExplicitPart))

    @property
    def is_finite_dimensional(self) -> bool:
        return self.null_dim != INFINITE and not self.formula_parts

    @property
    def dimension(self) -> int | float:
        if not self.is_finite_dimensional:
            return INFINITE
        return self.null_dim + sum(p.dimension for p in self.explicit_parts)

    def describe(self) -> str:
        pieces = []
        if self.null_dim:
            pieces.append(f"0[{'inf' if self.null_dim == INFINITE else self.null_dim}]")
        for p in self.parts:
            if isinstance(p, FormulaPart):
                pieces.append(f"lambda(n) = {p}")
            else:
                pieces.append("diag(" + ", ".join(_fmt_complex(v) for v in p.values) + ")")
        return " (+) ".join(pieces) or "0"


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


OperatorModel = Union[FiniteOperator, DiagonalModel]


# -- spectral data ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues with multiplicities, ordered by (|lambda|, arg lambda).

    ``basis`` holds one orthonormal column block per eigenvalue (finite case).
    """

    pairs: tuple[tuple[complex, int], ...]
    basis: tuple[np.ndarray, ...] | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([lam for lam, _ in self.pairs], dtype=complex)

    @property
    def dimension(self) -> int:
        return sum(m for _, m in self.pairs)


def spectral_order(z: complex) -> tuple[float, float]:
    z = complex(z)
    return (abs(z), float(np.angle(z)) if z != 0 else 0.0)


@dataclass(frozen=True, eq=False)
class CarrierSplit:
    """Orthonormal bases of the kernel, the carrier ``N(T)^perp`` and ``R(T)``."""

    null_basis: np.ndarray
    carrier_basis: np.ndarray
    range_basis: np.ndarray

    @property
    def rank(self) -> int:
        return self.carrier_basis.shape[1]


@dataclass(frozen=True)
class Violation:
    rule: str
    deviation: float
    tolerance: float


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def max_deviation(self) -> float:
        return max((v.deviation for v in self.violations), default=0.0)

    def __bool__(self):
        return self.valid


# -- operations ---------------------------------------------------------------

def validate(op: OperatorModel) -> ValidationResult:
    """Check structural claims. Pure; returns the list of violated rules."""
    if isinstance(op, DiagonalModel):
        return validate_diagonal(op)
    a = op.entries
    scale = np.linalg.norm(a)
    tol = TAU_STRUCT * scale
    violations = []
    if op.structure is not Structure.GENERAL and op.rows != op.cols:
        raise StructureError(f"{op.structure.value} operator must be square, got {op.shape}")
    if op.structure in (Structure.SELF_ADJOINT, Structure.POSITIVE):
        dev = float(np.max(np.abs(a - a.conj().T)))
        if dev > tol:
            violations.append(Violation("self_adjoint", dev, tol))
    if op.structure is Structure.NORMAL:
        dev = float(np.max(np.abs(a @ a.conj().T - a.conj().T @ a)))
        if dev > TAU_STRUCT * scale**2:
            violations.append(Violation("normal", dev, TAU_STRUCT * scale**2))
    if op.structure is Structure.POSITIVE:
        lowest = float(np.min(np.linalg.eigvalsh((a + a.conj().T) / 2)))
        if lowest < -tol:
            violations.append(Violation("positive", -lowest, tol))
    return ValidationResult(tuple(violations))


def validate_diagonal(model: DiagonalModel, prefix: int = VALIDATION_PREFIX) -> ValidationResult:
    """Check a diagonal model on explicit data and a formula prefix of ``prefix`` terms."""
    violations = []
    if not (model.null_dim == INFINITE or model.null_dim >= 0):
        violations.append(Violation("null_dim", float(model.null_dim), 0.0))
    n = np.arange(1, prefix + 1)
    for part in model.parts:
        if isinstance(part, ExplicitPart):
            vals = np.array(part.values, dtype=complex)
            mult = np.array(part.multiplicities)
        else:
            vals = part.values(n)
            mult = part.multiplicities(n)
            if part.multiplicity is not None:
                raw = np.real(evaluate(part.multiplicity, n))
                frac = float(np.nanmax(np.abs(raw - np.rint(raw)))) if raw.size else 0.0
                if not np.all(np.isfinite(raw)) or frac > 1e-9:
                    violations.append(Violation("multiplicity_integer", frac, 1e-9))
        if np.any(mult < 1):
            violations.append(Violation("multiplicity_positive", float(-np.min(mult) + 1), 0.0))
        if not np.all(np.isfinite(vals)):
            violations.append(Violation("formula_defined", 1.0, 0.0))
            continue
        small = np.abs(vals)
        if np.any(small <= TAU_ZERO):
            violations.append(Violation("nonzero_eigenvalue", float(np.min(small)), TAU_ZERO))
        if model.field is Field.REAL:
            imag = np.abs(np.imag(vals))
            scale = np.maximum(np.abs(vals), 1.0)
            dev = float(np.max(imag / scale)) if imag.size else 0.0
            if dev > TAU_STRUCT:
                violations.append(Violation("real_field", dev, TAU_STRUCT))
    return ValidationResult(tuple(violations))


def _finite_as_diagonal(op: FiniteOperator) -> DiagonalModel:
    if op.rows != op.cols or not validate(FiniteOperator(op.entries, Structure.NORMAL)).valid:
        raise FieldError("only normal matrices can be summed with a diagonal model")
    data = spectral_data(op)
    scale = max(abs(lam) for lam, _ in data.pairs) if data.pairs else 0.0
    null = sum(m for lam, m in data.pairs if abs(lam) <= TAU_ZERO * max(scale, 1e-300))
    rest = [(lam, m) for lam, m in data.pairs if abs(lam) > TAU_ZERO * max(scale, 1e-300)]
    hermitian = validate(FiniteOperator(op.entries, Structure.SELF_ADJOINT)).valid
    field = Field.REAL if hermitian else Field.COMPLEX
    values = tuple(complex(lam.real, 0.0) if hermitian else lam for lam, _ in rest)
    parts = (ExplicitPart(values, tuple(m for _, m in rest)),) if rest else ()
    return DiagonalModel(parts, null, field)


def direct_sum(a: OperatorModel, b: OperatorModel) -> OperatorModel:
    """Block-diagonal composition ``a (+) b``.

    Two matrices give a matrix; anything involving a diagonal model gives a
    diagonal model (a matrix operand must then be normal).
    """
    if isinstance(a, FiniteOperator) and isinstance(b, FiniteOperator):
        out = np.zeros((a.rows + b.rows, a.cols + b.cols), dtype=complex)
        out[: a.rows, : a.cols] = a.entries
        out[a.rows:, a.cols:] = b.entries
        order = [Structure.POSITIVE, Structure.SELF_ADJOINT, Structure.NORMAL, Structure.GENERAL]
        if a.structure is Structure.GENERAL or b.structure is Structure.GENERAL:
            tag = Structure.GENERAL
        else:
            tag = order[max(order.index(a.structure), order.index(b.structure))]
        return FiniteOperator(out, tag)
    if isinstance(a, FiniteOperator):
        a = _finite_as_diagonal(a)
        if a.field is Field.REAL and b.field is Field.COMPLEX:
            a = DiagonalModel(a.parts, a.null_dim, Field.COMPLEX)
    if isinstance(b, FiniteOperator):
        b = _finite_as_diagonal(b)
        if b.field is Field.REAL and a.field is Field.COMPLEX:
            b = DiagonalModel(b.parts, b.null_dim, Field.COMPLEX)
    if a.field is not b.field:
        raise FieldError(f"cannot sum a {a.field.value} model with a {b.field.value} model")
    name = f"{a.name} (+) {b.name}" if a.name and b.name else (a.name or b.name)
    return DiagonalModel(a.parts + b.parts, a.null_dim + b.null_dim, a.field, name)


def zero_model(dim=INFINITE, field: Field = Field.REAL) -> DiagonalModel:
    return DiagonalModel((), dim, field, "zero")


def numerical_rank(singular_values: np.ndarray) -> int:
    if singular_values.size == 0 or singular_values[0] == 0:
        return 0
    return int(np.sum(singular_values > TAU_ZERO * singular_values[0]))


def carrier_split(op: FiniteOperator) -> CarrierSplit:
    a = op.entries
    u, s, vh = np.linalg.svd(a)
    r = numerical_rank(s)
    v = vh.conj().T
    null_basis = v[:, r:]
    carrier = np.eye(op.cols, dtype=complex) if r == op.cols else v[:, :r]
    rng = np.eye(op.rows, dtype=complex) if r == op.rows else u[:, :r]
    return CarrierSplit(null_basis, carrier, rng)


def restrict_to_carrier(op: FiniteOperator) -> tuple[CarrierSplit, FiniteOperator | None]:
    """Split off the kernel and compress ``T`` to ``T0: C(T) -> R(T)``.

    ``T0 = Q_R^* T Q_C`` is square and invertible (``N(T0) = {0}``); when the
    kernel is trivial and the range is everything both bases are identities,
    so ``T0 = T``. ``None`` for the zero operator. Re-embedding:
    ``T = Q_R T0 Q_C^*``.
    """
    split = carrier_split(op)
    if split.rank == 0:
        return split, None
    t0 = split.range_basis.conj().T @ op.entries @ split.carrier_basis
    tag = op.structure if split.rank == op.rows == op.cols else Structure.GENERAL
    return split, FiniteOperator(t0, tag)


def embed_from_carrier(split: CarrierSplit, t0: FiniteOperator | None, shape) -> np.ndarray:
    if t0 is None:
        return np.zeros(shape, dtype=complex)
    return split.range_basis @ t0.entries @ split.carrier_basis.conj().T


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    order = sorted(range(len(values)), key=lambda i: spectral_order(values[i]))
    clusters: list[list[int]] = []
    for i in order:
        for c in clusters:
            if abs(values[c[0]] - values[i]) <= tol:
                c.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def spectral_data(op: OperatorModel, tol: float | None = None) -> SpectralData:
    """Eigenvalue/eigenspace data of a normal matrix or finite diagonal model.

    Matrices go through the complex Schur form (diagonal for normal
    matrices), so eigenvector blocks are orthonormal. Eigenvalues closer than
    ``tol`` (default ``1e-8 * ||T||``) are merged.
    """
    if isinstance(op, DiagonalModel):
        if not op.is_finite_dimensional:
            raise ValueError("spectral data of an infinite model is not finite; truncate it first")
        acc: dict[complex, int] = {}
        if op.null_dim:
            acc[0j] = op.null_dim
        for p in op.explicit_parts:
            for lam, m in zip(p.values, p.multiplicities):
                acc[lam] = acc.get(lam, 0) + m
        return SpectralData(tuple(sorted(acc.items(), key=lambda t: spectral_order(t[0]))))
    import scipy.linalg

    a = op.entries
    if a.shape[0] != a.shape[1]:
        raise StructureError("spectral data needs a square matrix")
    scale = max(np.linalg.norm(a, 2), 1e-300)
    tol = TAU_ZERO * scale if tol is None else tol
    if op.structure in (Structure.SELF_ADJOINT, Structure.POSITIVE):
        w, q = np.linalg.eigh((a + a.conj().T) / 2)
        w = w.astype(complex)
    else:
        t, q = scipy.linalg.schur(a, output="complex")
        w = np.diag(t)
    pairs, blocks = [], []
    for c in _cluster(w, tol):
        lam = complex(np.mean(w[c]))
        pairs.append((lam, len(c)))
        blocks.append(q[:, c])
    return SpectralData(tuple(pairs), tuple(blocks))
