"""Finite-section verification of diagonal models.

A model is materialised as ``n x n`` matrices (optionally conjugated by a
seeded random unitary) and each check compares a numerically computed
quantity with the value read off the diagonal. Results come back as one
:class:`ConvergenceRecord` per check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analysis import analyze
from .calculus import (
    attaining_vector,
    bounded_transform,
    minimum_modulus,
    moore_penrose,
    mp_deviations,
    perturbed_min_modulus_check,
    polar_decompose,
    resolvent,
)
from .classify import spectral_synthesize
from .core import (
    INFINITE,
    DiagonalModel,
    ExplicitPart,
    Field,
    FiniteOperator,
    FormulaPart,
    Structure,
    spectral_data,
)


class ConfigError(ValueError):
    pass


class RangeError(ValueError):
    pass


DEFAULT_CHECKS = (
    "mp_axioms", "bounded_transform", "perturb", "znorm", "synthesis", "resolvent",
    "min_modulus", "polar", "attain", "reciprocal_decay", "conjugation",
)


@dataclass
class TruncationPlan:
    sizes: tuple[int, ...] = (4, 8, 16, 32, 64)
    seed: int = 0
    conjugate: bool = False
    checks: tuple[str, ...] = DEFAULT_CHECKS

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.checks = tuple(self.checks)
        if not self.sizes:
            raise ConfigError("at least one truncation size is required")
        if any(s < 1 for s in self.sizes):
            raise ConfigError("truncation sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("truncation sizes must be strictly ascending")
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown check(s): {', '.join(unknown)}")


@dataclass
class ConvergenceRecord:
    check_id: str
    sizes: tuple[int, ...]
    values: tuple[float, ...]
    deviations: tuple[float, ...]
    tolerance: float
    passed: bool
    monotone_flag: bool
    limit_estimate: float
    prediction: float | None = None
    trend: str | None = None
    notes: tuple[str, ...] = field(default=())


# -- materialisation ------------------------------------------------------------

def random_unitary(n: int, seed: int = 0) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Gaussian with phase fix."""
    rng = np.random.default_rng([seed, n])
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def diagonal_entries(model: DiagonalModel, n: int) -> np.ndarray:
    """First ``n`` diagonal entries: the kernel block, explicit parts, then the
    formula parts interleaved by index (each value repeated by multiplicity).
    An infinite kernel block is interleaved too, one zero per round."""
    out: list[complex] = []
    infinite_kernel = model.null_dim == INFINITE
    if not infinite_kernel:
        out.extend([0j] * min(int(model.null_dim), n))
    for p in model.explicit_parts:
        for v, m in zip(p.values, p.multiplicities):
            out.extend([v] * m)
    parts = model.formula_parts
    k = 1
    while len(out) < n and (parts or infinite_kernel):
        block = max(1, n - len(out))
        ks = np.arange(k, k + block)
        per_part = [(p.values(ks), p.multiplicities(ks)) for p in parts]
        for j in range(block):
            if infinite_kernel:
                out.append(0j)
            for vals, mult in per_part:
                out.extend([complex(vals[j])] * int(mult[j]))
        k += block
    if len(out) < n:
        raise RangeError(f"model has dimension {len(out)}, cannot truncate to {n}")
    return np.array(out[:n], dtype=complex)


def materialize(model: DiagonalModel, n: int, *, conjugate: bool = False, seed: int = 0) -> FiniteOperator:
    d = diagonal_entries(model, n)
    tag = Structure.SELF_ADJOINT if model.field is Field.REAL else Structure.NORMAL
    if model.field is Field.REAL:
        d = d.real.astype(complex)
    if not conjugate:
        return FiniteOperator(np.diag(d), tag)
    u = random_unitary(n, seed)
    t = (u * d) @ u.conj().T
    if model.field is Field.REAL:
        t = (t + t.conj().T) / 2
    return FiniteOperator(t, tag)


# -- checks --------------------------------------------------------------------

@dataclass(frozen=True)
class _Sample:
    n: int
    diag: np.ndarray
    op: FiniteOperator
    plain: FiniteOperator
    rng: np.random.Generator


def _scale(s: _Sample) -> float:
    return max(1.0, float(np.max(np.abs(s.diag))))


def _mp_axioms(s: _Sample):
    dev = max(mp_deviations(s.op).values())
    return dev, dev


def _bounded_transform(s: _Sample):
    # I - (I + T^*T)^{-1} from the eigendecomposition of T itself; forming
    # T^*T first would square the condition number
    z = bounded_transform(s.op).entries
    data = spectral_data(s.op)
    rhs = np.zeros((s.n, s.n), dtype=complex)
    for (lam, _), block in zip(data.pairs, data.basis):
        w = abs(lam) ** 2
        rhs += (w / (1 + w)) * (block @ block.conj().T)
    dev = float(np.linalg.norm(z.conj().T @ z - rhs, 2))
    return dev, dev


def _perturb(s: _Sample):
    herm = s.op if s.op.structure is Structure.SELF_ADJOINT else polar_decompose(s.op).modulus
    lhs, rhs = perturbed_min_modulus_check(FiniteOperator(herm.entries, Structure.SELF_ADJOINT))
    dev = abs(lhs**2 - rhs**2)
    return dev, dev


def _znorm(s: _Sample):
    z = bounded_transform(s.op).entries
    value = float(np.linalg.norm(z, 2))
    mags = np.abs(s.diag)
    predicted = float(np.max(mags / np.sqrt(1 + mags**2)))
    return value, abs(value - predicted)


def _synthesis(s: _Sample):
    data = spectral_data(s.op)
    worst = 0.0
    for _ in range(20):
        x = s.rng.standard_normal(s.n) + 1j * s.rng.standard_normal(s.n)
        x /= np.linalg.norm(x)
        y = spectral_synthesize(data, x)
        worst = max(worst, float(np.linalg.norm(y - s.op.entries @ x)))
    dev = worst / _scale(s)
    return dev, dev


def _resolvent(s: _Sample):
    lam = 1j * (1 + float(np.max(np.abs(s.diag))))
    r = resolvent(s.op, lam).inverse.entries
    dev = float(np.linalg.norm((s.op.entries - lam * np.eye(s.n)) @ r - np.eye(s.n), 2))
    return dev, dev


def _min_modulus(s: _Sample):
    value = minimum_modulus(s.op)
    return value, abs(value - float(np.min(np.abs(s.diag)))) / _scale(s)


def _polar(s: _Sample):
    parts = polar_decompose(s.op)
    dev = float(np.linalg.norm(parts.partial_isometry.entries @ parts.modulus.entries - s.op.entries, 2))
    dev /= _scale(s)
    return dev, dev


def _attain(s: _Sample):
    x, value = attaining_vector(s.op)
    dev = abs(value - minimum_modulus(s.op)) / _scale(s)
    return value, dev


def _reciprocal_decay(s: _Sample):
    pinv = moore_penrose(s.op).entries
    sv = np.linalg.svd(pinv, compute_uv=False)
    nonzero = sv[sv > 1e-8 * sv[0]] if sv[0] > 0 else sv
    value = float(nonzero[-1]) if nonzero.size else 0.0
    mags = np.abs(s.diag)
    predicted = 1.0 / float(np.max(mags)) if np.max(mags) > 0 else 0.0
    return value, abs(value - predicted) / max(predicted, 1e-300)


def _conjugation(s: _Sample):
    """Unitary invariants agree between the plain and conjugated sections."""
    a, b = s.plain, s.op
    if a is b:
        u = random_unitary(s.n, 12345)
        b = FiniteOperator((u * np.diag(a.entries)) @ u.conj().T, a.structure)
    sa = np.linalg.svd(a.entries, compute_uv=False)
    sb = np.linalg.svd(b.entries, compute_uv=False)
    za = np.linalg.norm(bounded_transform(a).entries, 2)
    zb = np.linalg.norm(bounded_transform(b).entries, 2)
    dev = max(float(np.max(np.abs(sa - sb))) / _scale(s), abs(za - zb))
    return dev, dev


@dataclass(frozen=True)
class _Check:
    fn: Callable[[_Sample], tuple[float, float]]
    tolerance: float
    trend: str | None = None


CHECKS: dict[str, _Check] = {
    "mp_axioms": _Check(_mp_axioms, 1e-9),
    "bounded_transform": _Check(_bounded_transform, 1e-9),
    "perturb": _Check(_perturb, 1e-10),
    "znorm": _Check(_znorm, 1e-9, "non-decreasing"),
    "synthesis": _Check(_synthesis, 1e-10),
    "resolvent": _Check(_resolvent, 1e-9),
    "min_modulus": _Check(_min_modulus, 1e-9, "non-increasing"),
    "polar": _Check(_polar, 1e-9),
    "attain": _Check(_attain, 1e-9, "non-increasing"),
    "reciprocal_decay": _Check(_reciprocal_decay, 1e-9, "non-increasing"),
    "conjugation": _Check(_conjugation, 1e-9),
}


def _monotone(values, trend: str | None, slack: float) -> bool:
    diffs = np.diff(np.asarray(values, dtype=float))
    if trend == "non-increasing":
        return bool(np.all(diffs <= slack))
    if trend == "non-decreasing":
        return bool(np.all(diffs >= -slack))
    return bool(np.all(diffs <= slack) or np.all(diffs >= -slack))


def _prediction(model: DiagonalModel, check: str) -> float | None:
    parts = model.formula_parts
    if not parts:
        return None
    unbounded = all(analyze(p.formula).unbounded is True for p in parts)
    if check == "znorm" and unbounded:
        return 1.0
    if check == "reciprocal_decay" and unbounded:
        return 0.0
    return None


def run_suite(model: DiagonalModel, plan: TruncationPlan | None = None) -> list[ConvergenceRecord]:
    """Run every check of ``plan`` across its truncation sizes."""
    plan = plan or TruncationPlan()
    samples = []
    for n in plan.sizes:
        plain = materialize(model, n)
        op = materialize(model, n, conjugate=True, seed=plan.seed) if plan.conjugate else plain
        samples.append(_Sample(n, diagonal_entries(model, n), op, plain,
                               np.random.default_rng([plan.seed, n, 1])))
    records = []
    for name in plan.checks:
        check = CHECKS[name]
        values, devs = zip(*(check.fn(s) for s in samples))
        scale = max(1.0, max(abs(v) for v in values))
        monotone = _monotone(values, check.trend, 1e-9 * scale)
        within = all(d <= check.tolerance for d in devs)
        passed = within and (monotone if check.trend else True)
        records.append(ConvergenceRecord(
            name, plan.sizes, tuple(float(v) for v in values), tuple(float(d) for d in devs),
            check.tolerance, passed, monotone, float(values[-1]), _prediction(model, name), check.trend,
        ))
    return records


__all__ = [
    "CHECKS", "ConfigError", "ConvergenceRecord", "DEFAULT_CHECKS", "RangeError", "TruncationPlan",
    "diagonal_entries", "materialize", "random_unitary", "run_suite",
]
