"""Minimum modulus, modulus, square roots, polar and Moore-Penrose inverses,
the bounded transform and resolvents, for matrices and diagonal models.

Matrix routines are SVD/eigendecomposition based with the numerical-rank
cutoff ``TAU_ZERO * sigma_max``. Diagonal routines act on eigenvalue
formulas symbolically and never truncate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import formula as fm
from .analysis import ALL_INDICES, IndexSet, Infimum, analyze, infimum
from .core import (
    INFINITE,
    TAU_NUM,
    TAU_STRUCT,
    TAU_ZERO,
    DiagonalModel,
    ExplicitPart,
    Field,
    FiniteOperator,
    FormulaPart,
    OperatorModel,
    Structure,
    StructureError,
    numerical_rank,
)


class SpectrumError(ValueError):
    """The requested point is (numerically) in the spectrum."""


class DimensionError(ValueError):
    pass


class Attainment(Enum):
    ATTAINED = "attained"
    NOT_ATTAINED = "not_attained"
    UNDECIDABLE = "undecidable"


@dataclass(frozen=True, eq=False)
class PolarParts:
    partial_isometry: FiniteOperator
    modulus: FiniteOperator


@dataclass(frozen=True, eq=False)
class LeastSquaresSolution:
    solution: np.ndarray
    residual_norm: float
    mp_certificate: float
    deviations: dict


@dataclass(frozen=True, eq=False)
class ResolventSample:
    """``(T - lambda I)^{-1}``: a matrix, or a diagonal model whose eigenvalues
    are the coefficients ``1/(lambda_n - lambda)``."""

    lam: complex
    inverse: FiniteOperator | DiagonalModel
    coefficient_decay: bool
    distance: float
    certified: bool = True


# -- helpers ------------------------------------------------------------------

def _svd(a: np.ndarray):
    u, s, vh = np.linalg.svd(a)
    return u, s, vh.conj().T


def _constant_part(value: complex, dim) -> ExplicitPart | FormulaPart:
    """Eigenvalue ``value`` repeated ``dim`` times (possibly infinitely)."""
    if dim == INFINITE:
        return FormulaPart(fm.num(value))
    return ExplicitPart((value,), (int(dim),))


def _map_parts(model: DiagonalModel, formula_map, value_map, *, zero_image=0.0,
               field: Field | None = None, name: str = "") -> DiagonalModel:
    """Apply an eigenvalue map to every part; the kernel block maps to
    ``zero_image`` (kept as kernel when that is 0)."""
    parts = []
    null_dim = model.null_dim
    if zero_image != 0 and model.null_dim:
        parts.append(_constant_part(zero_image, model.null_dim))
        null_dim = 0
    for p in model.parts:
        if isinstance(p, FormulaPart):
            parts.append(FormulaPart(formula_map(p.formula), p.multiplicity))
        else:
            parts.append(ExplicitPart(tuple(value_map(v) for v in p.values), p.multiplicities))
    return DiagonalModel(tuple(parts), null_dim, field or model.field, name)


def _conjugate(f: fm.Formula) -> fm.Formula:
    """Complex conjugate of a formula in the real index ``n`` (i -> -i)."""
    if isinstance(f, fm.Imag):
        return fm.Neg(f)
    if isinstance(f, fm.Neg):
        return fm.Neg(_conjugate(f.arg))
    if isinstance(f, fm.BinOp):
        return fm.BinOp(f.op, _conjugate(f.left), _conjugate(f.right))
    if isinstance(f, fm.Call):
        return fm.Call(f.func, _conjugate(f.arg))
    return f


def adjoint(op: OperatorModel) -> OperatorModel:
    """``T^*``: conjugate transpose, or conjugated eigenvalues for diagonal models.

    Formula conjugation maps ``i`` to ``-i``; this is exact away from branch
    cuts of ``sqrt`` and complex powers.
    """
    if isinstance(op, FiniteOperator):
        return op.adjoint
    if op.field is Field.REAL:
        return op
    return _map_parts(op, _conjugate, lambda v: v.conjugate(), name=f"{op.name}*" if op.name else "")


# -- minimum modulus ------------------------------------------------------------

def minimum_modulus(op: OperatorModel) -> float | Infimum:
    """``m(T) = inf ||Tx||`` over unit vectors.

    Matrices: the smallest singular value (0 when ``cols > rows``), ``inf``
    on a zero-dimensional domain. Diagonal models: an :class:`Infimum` over
    ``{|lambda_n|}`` (and 0 for a kernel block), undecidable rather than
    guessed when no monotone-tail certificate exists.
    """
    if isinstance(op, DiagonalModel):
        return _diagonal_min_modulus(op, ALL_INDICES)
    a = op.entries if isinstance(op, FiniteOperator) else np.asarray(op)
    if a.shape[1] == 0:
        return math.inf
    if a.shape[1] > a.shape[0]:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def _diagonal_min_modulus(model: DiagonalModel, members: IndexSet) -> Infimum:
    if model.null_dim:
        return Infimum(0.0, True, None, True, "kernel block is nontrivial")
    results = []
    for p in model.parts:
        if isinstance(p, ExplicitPart):
            mags = [abs(v) for v in p.values]
            if mags:
                j = int(np.argmin(mags))
                results.append(Infimum(mags[j], True, j + 1, True, "explicit eigenvalue list"))
        else:
            results.append(infimum(p.formula, members))
    if not results:
        return Infimum(math.inf, None, None, True, "zero-dimensional domain")
    best = min(results, key=lambda r: (r.value, not r.attained))
    if not all(r.certified for r in results):
        uncertain = [r for r in results if not r.certified]
        return Infimum(best.value, None, best.argmin, False,
                       "undecidable: " + "; ".join(r.evidence for r in uncertain))
    ties = [r for r in results if math.isclose(r.value, best.value, rel_tol=1e-12, abs_tol=0.0)]
    attained = any(r.attained for r in ties)
    chosen = next((r for r in ties if r.attained), best)
    return Infimum(best.value, attained, chosen.argmin, True, chosen.evidence, chosen.exact)


def minimum_modulus_attained(model: DiagonalModel, subset: IndexSet = ALL_INDICES) -> Infimum:
    """Decide whether ``inf{|lambda_n| : n in subset}`` is a minimum.

    ``subset`` indexes the eigenvalue sequence of a single-part model
    (the kernel block is not indexed). ``result.status`` is an
    :class:`Attainment`.
    """
    if len(model.parts) != 1:
        raise ValueError("subset attainment needs a model with exactly one eigenvalue part")
    part = model.parts[0]
    if isinstance(part, ExplicitPart):
        idx = [i + 1 for i in range(len(part.values)) if subset.contains(np.array([i + 1]))[0]]
        if not idx:
            return Infimum(math.inf, None, None, True, "empty subset")
        j = min(idx, key=lambda i: abs(part.values[i - 1]))
        return Infimum(abs(part.values[j - 1]), True, j, True, f"minimum attained at n={j}")
    return infimum(part.formula, subset)


def attainment(result: Infimum) -> Attainment:
    if result.attained is None:
        return Attainment.UNDECIDABLE
    return Attainment.ATTAINED if result.attained else Attainment.NOT_ATTAINED


def attaining_vector(op: FiniteOperator) -> tuple[np.ndarray, float]:
    """Unit vector ``x`` with ``||Tx|| = m(T)`` (a kernel vector when ``cols > rows``)."""
    _, s, vh = np.linalg.svd(op.entries, full_matrices=True)
    x = vh[-1].conj()
    return x, float(np.linalg.norm(op.entries @ x))


# -- modulus, square root, polar -----------------------------------------------

def modulus(op: OperatorModel) -> OperatorModel:
    """``|T| = (T^*T)^{1/2}``; diagonal case ``|lambda_n|``."""
    if isinstance(op, DiagonalModel):
        return _map_parts(op, fm.absolute, abs, field=Field.REAL, name=f"|{op.name}|" if op.name else "")
    _, s, w = _svd(op.entries)
    k = len(s)
    m = (w[:, :k] * s) @ w[:, :k].conj().T
    return FiniteOperator((m + m.conj().T) / 2, Structure.POSITIVE)


def sqrt_positive(op: FiniteOperator) -> FiniteOperator:
    """Unique positive square root via the spectral decomposition."""
    a = op.entries
    if a.shape[0] != a.shape[1]:
        raise StructureError("square root needs a square operator")
    scale = np.linalg.norm(a)
    tol = TAU_STRUCT * scale
    if np.max(np.abs(a - a.conj().T), initial=0.0) > tol:
        raise StructureError("operator is not self-adjoint")
    w, q = np.linalg.eigh((a + a.conj().T) / 2)
    if w.size and w[0] < -tol:
        raise StructureError(f"negative eigenvalue {w[0]:.3e}; operator is not positive")
    root = (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T
    return FiniteOperator((root + root.conj().T) / 2, Structure.POSITIVE)


def polar_decompose(op: FiniteOperator) -> PolarParts:
    """``T = V|T|`` with ``V`` the partial isometry from ``closure R(T^*)`` onto
    ``closure R(T)``; singular directions below the rank cutoff map to 0."""
    u, s, w = _svd(op.entries)
    r = numerical_rank(s)
    v = u[:, :r] @ w[:, :r].conj().T
    k = len(s)
    m = (w[:, :k] * s) @ w[:, :k].conj().T
    return PolarParts(FiniteOperator(v), FiniteOperator((m + m.conj().T) / 2, Structure.POSITIVE))


# -- Moore-Penrose ----------------------------------------------------------------

def moore_penrose(op: OperatorModel) -> OperatorModel:
    """Moore-Penrose inverse.

    Diagonal models: nonzero eigenvalues are inverted, the kernel block is
    kept (``N(T^+) = R(T)^perp = N(T)`` for normal ``T``).
    """
    if isinstance(op, DiagonalModel):
        one = fm.num(1)
        return _map_parts(op, lambda f: fm.div(one, f), lambda v: 1 / v,
                          name=f"{op.name}^+" if op.name else "")
    u, s, w = _svd(op.entries)
    r = numerical_rank(s)
    pinv = (w[:, :r] / s[:r]) @ u[:, :r].conj().T
    return FiniteOperator(pinv)


def mp_deviations(op: FiniteOperator, pinv: FiniteOperator | None = None) -> dict[str, float]:
    """Deviations from the defining Moore-Penrose properties.

    Range projection, carrier projection and kernel of ``T^+`` are checked
    against projections built from an independent QR-based range basis;
    the two multiply-back identities are relative to ``||T||``/``||T^+||``.
    """
    import scipy.linalg

    t = op.entries
    p = (pinv or moore_penrose(op)).entries
    t_norm = max(np.linalg.norm(t, 2), 1e-300)
    p_norm = max(np.linalg.norm(p, 2), 1e-300)
    s = np.linalg.svd(t, compute_uv=False)
    r = numerical_rank(s)
    # independent orthonormal bases from pivoted QR
    q_range = scipy.linalg.qr(t, pivoting=True)[0][:, :r]
    q_coker = scipy.linalg.qr(t.conj().T, pivoting=True)[0][:, :r]
    proj_range = q_range @ q_range.conj().T
    proj_carrier = q_coker @ q_coker.conj().T
    tp, pt = t @ p, p @ t
    return {
        "range_projection": float(np.linalg.norm(tp - proj_range, 2)),
        "carrier_projection": float(np.linalg.norm(pt - proj_carrier, 2)),
        "kernel_of_inverse": float(np.linalg.norm(p @ (np.eye(t.shape[0]) - proj_range), 2) / p_norm),
        "t_pinv_t": float(np.linalg.norm(tp @ t - t, 2) / t_norm),
        "pinv_t_pinv": float(np.linalg.norm(pt @ p - p, 2) / p_norm),
    }


def least_squares_min_norm(op: FiniteOperator, y) -> LeastSquaresSolution:
    """Least-squares solution of minimal norm, ``x = T^+ y``."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.shape[0] != op.rows:
        raise DimensionError(f"right-hand side has length {y.shape[0]}, operator has {op.rows} rows")
    pinv = moore_penrose(op)
    x = pinv.entries @ y
    residual = float(np.linalg.norm(op.entries @ x - y))
    dev = mp_deviations(op, pinv)
    return LeastSquaresSolution(x, residual, max(dev.values()), dev)


# -- bounded transform, resolvent, T^*T + I -------------------------------------

def bounded_transform(op: OperatorModel) -> OperatorModel:
    """``Z_T = T (I + T^*T)^{-1/2}``; diagonal case ``lambda_n / sqrt(1 + |lambda_n|^2)``."""
    if isinstance(op, DiagonalModel):
        one = fm.num(1)
        real = op.field is Field.REAL

        def transform(f):
            sq = fm.power(f, fm.num(2)) if real else fm.power(fm.absolute(f), fm.num(2))
            return fm.div(f, fm.sqrt(fm.add(one, sq)))

        return _map_parts(op, transform, lambda v: v / math.sqrt(1 + abs(v) ** 2),
                          name=f"Z({op.name})" if op.name else "")
    # T = U S V^*  gives  Z = U S (1 + S^2)^{-1/2} V^*, avoiding the squared condition number
    u, s, vh = np.linalg.svd(op.entries, full_matrices=False)
    z = (u * (s / np.sqrt(1.0 + s**2))) @ vh
    tag = op.structure if op.structure in (Structure.SELF_ADJOINT, Structure.NORMAL,
                                           Structure.POSITIVE) else Structure.GENERAL
    return FiniteOperator(z, tag)


def square_plus_identity(op: OperatorModel) -> OperatorModel:
    """``T^*T + I`` (equal to ``T^2 + I`` for self-adjoint ``T``).

    The kernel block becomes the eigenvalue 1 with the same multiplicity.
    """
    if isinstance(op, DiagonalModel):
        one = fm.num(1)
        real = op.field is Field.REAL

        def shift(f):
            sq = fm.power(f, fm.num(2)) if real else fm.power(fm.absolute(f), fm.num(2))
            return fm.add(sq, one)

        return _map_parts(op, shift, lambda v: abs(v) ** 2 + 1, zero_image=1.0, field=Field.REAL,
                          name=f"{op.name}^2+I" if op.name else "")
    t = op.entries
    return FiniteOperator(np.eye(op.cols) + t.conj().T @ t, Structure.POSITIVE)


def resolvent(op: OperatorModel, lam: complex) -> ResolventSample:
    """``(T - lam I)^{-1}``, refused within ``TAU_ZERO`` (absolute) of the spectrum."""
    lam = complex(lam)
    if isinstance(op, DiagonalModel):
        return _diagonal_resolvent(op, lam)
    t = op.entries
    if t.shape[0] != t.shape[1]:
        raise StructureError("resolvent needs a square operator")
    eig = np.linalg.eigvals(t)
    dist = float(np.min(np.abs(eig - lam)))
    if dist <= TAU_ZERO:
        raise SpectrumError(f"{lam} is within {dist:.2e} of an eigenvalue")
    inv = np.linalg.inv(t - lam * np.eye(t.shape[0]))
    return ResolventSample(lam, FiniteOperator(inv), True, dist)


def _diagonal_resolvent(model: DiagonalModel, lam: complex) -> ResolventSample:
    shift = fm.num(lam)
    distances = []
    certified = True
    if model.null_dim:
        distances.append(abs(lam))
    for p in model.parts:
        if isinstance(p, ExplicitPart):
            distances.extend(abs(v - lam) for v in p.values)
        else:
            inf = infimum(fm.sub(p.formula, shift))
            certified &= inf.certified
            distances.append(inf.value)
    dist = min(distances, default=math.inf)
    if dist <= TAU_ZERO:
        raise SpectrumError(f"{lam} is within {dist:.2e} of the spectrum")
    one = fm.num(1)
    inverse = _map_parts(model, lambda f: fm.div(one, fm.sub(f, shift)), lambda v: 1 / (v - lam),
                         zero_image=-1 / lam if model.null_dim else 0.0,
                         field=Field.REAL if lam.imag == 0 and model.field is Field.REAL else Field.COMPLEX)
    decay = all(analyze(p.formula).unbounded is True for p in model.formula_parts)
    if model.null_dim == INFINITE:
        decay = False
    return ResolventSample(lam, inverse, decay, dist, certified)


def perturbed_min_modulus_check(op: FiniteOperator) -> tuple[float, float]:
    """Both sides of ``m(S + iI) = sqrt(1 + m(S)^2)`` for self-adjoint ``S``:
    the left from the singular values of ``S + iI``, the right from those of ``S``."""
    a = op.entries
    if a.shape[0] != a.shape[1]:
        raise StructureError("S must be square")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > TAU_STRUCT * np.linalg.norm(a):
        raise StructureError("S must be self-adjoint")
    lhs = minimum_modulus(FiniteOperator(a + 1j * np.eye(a.shape[0])))
    rhs = math.sqrt(1.0 + minimum_modulus(op) ** 2)
    return lhs, rhs


__all__ = [
    "Attainment", "DimensionError", "adjoint", "attaining_vector", "LeastSquaresSolution", "PolarParts", "ResolventSample",
    "SpectrumError", "TAU_NUM", "attainment", "bounded_transform", "least_squares_min_norm",
    "minimum_modulus", "minimum_modulus_attained", "modulus", "moore_penrose", "mp_deviations",
    "perturbed_min_modulus_check", "polar_decompose", "resolvent", "sqrt_positive",
    "square_plus_identity",
]
