"""Absolutely-minimum-attaining (AM) classification of operator models.

A closed operator is AM when its restriction to every closed subspace attains
its minimum modulus. Every finite-dimensional operator is AM. For diagonal
models two decidable characterisations are used:

* unbounded eigenvalues: AM iff the kernel is finite-dimensional and the
  Moore-Penrose inverse is compact, i.e. ``|lambda_n| -> oo`` on every branch;
* bounded eigenvalues: AM iff the moduli accumulate at a single value
  ``beta`` and every branch approaches ``beta`` from below (or is
  eventually equal to it); such models have the form ``beta I - K + F``
  with ``K`` compact positive and ``F`` finite rank.

Anything that neither certificate nor counterexample covers is reported as
UNDECIDABLE rather than guessed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.linalg
import sympy as sp

from . import formula as fm
from .analysis import (
    N_MAX,
    Trend,
    analyze,
    scan_limit_candidates,
    sum_of_squares_converges,
    partial_sums,
)
from .calculus import attaining_vector, bounded_transform, minimum_modulus, square_plus_identity
from .core import (
    INFINITE,
    TAU_ZERO,
    DiagonalModel,
    ExplicitPart,
    Field,
    FiniteOperator,
    FormulaPart,
    OperatorModel,
    SpectralData,
    StructureError,
    carrier_split,
    spectral_data,
    spectral_order,
)


class Verdict(Enum):
    AM = "AM"
    NOT_AM = "NotAM"
    UNDECIDABLE = "Undecidable"


class DomainVerdict(Enum):
    IN_DOMAIN = "InDomain"
    NOT_IN_DOMAIN = "NotInDomain"
    UNDECIDABLE = "Undecidable"


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Clause:
    name: str
    holds: bool | None
    evidence: str


@dataclass(frozen=True)
class ClassificationReport:
    verdict: Verdict
    route: str
    clauses: tuple[Clause, ...] = ()
    evidence: tuple[str, ...] = ()
    attaining_vector: np.ndarray | None = field(default=None, compare=False)
    null_dim_finite: bool | None = None
    mp_compact: bool | None = None
    spectrum_discrete: bool | None = None

    @property
    def certified(self) -> bool:
        return self.verdict is not Verdict.UNDECIDABLE


@dataclass(frozen=True)
class SpectrumReport:
    essential: tuple[sp.Expr, ...] | None
    discrete_sample: tuple[tuple[complex, int | float], ...]
    zero_in_spectrum: bool | None
    zero_kind: str
    spectrum_discrete: bool | None
    notes: tuple[str, ...] = ()

    @property
    def essential_float(self) -> list[complex] | None:
        if self.essential is None:
            return None
        return [complex(sp.N(v, 17)) for v in self.essential]


@dataclass(frozen=True)
class ChainReport:
    verdicts: dict[str, Verdict]
    reports: dict[str, ClassificationReport]

    @property
    def links(self) -> list[tuple[str, bool]]:
        v = self.verdicts
        return [("T~T^2+I", v["T"] == v["T^2+I"]), ("T^2+I~Z_T", v["T^2+I"] == v["Z_T"]),
                ("T~Z_T", v["T"] == v["Z_T"])]

    @property
    def consistent(self) -> bool:
        return all(ok for _, ok in self.links)


@dataclass(frozen=True)
class DomainReport:
    verdict: DomainVerdict
    evidence: str
    partial_sums: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class WitnessReport:
    """A nontrivial hyperinvariant subspace. ``branch`` is ``kernel`` when
    ``T`` has one; for bijective ``T`` (``bijective``) the subspace is the
    eigenspace of an eigenvalue of least modulus."""

    status: str
    branch: str | None = None
    eigenvalue: complex | None = None
    dimension: int | float = 0
    basis: np.ndarray | None = None
    indices: tuple = ()
    evidence: str = ""


# -- helpers ------------------------------------------------------------------

def _distinct(values) -> list[sp.Expr]:
    out: list[sp.Expr] = []
    for v in values:
        if not any(sp.simplify(v - w) == 0 for w in out):
            out.append(v)
    return sorted(out, key=lambda z: spectral_order(complex(sp.N(z, 20))))


def _branches(model: DiagonalModel):
    for p in model.formula_parts:
        info = analyze(p.formula)
        for br in info.branches:
            yield p, br


def _branch_label(p: FormulaPart, br) -> str:
    where = "n" if br.step == 1 else f"n = {br.step}k + {br.offset}"
    return f"lambda(n) = {fm.to_string(p.formula)} [{where}]"


def _scan_evidence(model: DiagonalModel) -> list[str]:
    notes = []
    for p in model.formula_parts:
        cands, unbounded = scan_limit_candidates(p.formula)
        if unbounded:
            notes.append(f"{fm.to_string(p.formula)}: values near n = {N_MAX} exceed 1e6 (uncertified)")
        elif cands:
            shown = ", ".join(f"{abs(c):.6g}" for c in cands)
            notes.append(f"{fm.to_string(p.formula)}: |lambda| near n = {N_MAX} clusters at {shown} (uncertified)")
        else:
            notes.append(f"{fm.to_string(p.formula)}: no monotone-tail certificate")
    return notes


# -- classification -------------------------------------------------------------

def classify_am_finite(op: FiniteOperator | DiagonalModel) -> ClassificationReport:
    """Finite-dimensional operators are always AM; the report carries a unit
    vector attaining the minimum modulus."""
    if isinstance(op, DiagonalModel):
        return ClassificationReport(Verdict.AM, "finite", (
            Clause("finite_dimensional", True, f"dimension {op.dimension}"),), (
            "finite rank, compact T^+, finite-dimensional kernel",
            "every restriction to a subspace of a finite-dimensional space attains its minimum"))
    x, value = attaining_vector(op)
    m = minimum_modulus(op)
    return ClassificationReport(
        Verdict.AM, "finite",
        (Clause("finite_dimensional", True, f"{op.rows}x{op.cols} matrix"),
         Clause("minimum_attained", True, f"||Tx|| = {value:.6g}, m(T) = {m:.6g}")),
        ("finite rank, compact T^+, finite-dimensional kernel",
         "unit sphere is compact, so every restriction attains its minimum"),
        x,
    )


def classify_am(op: OperatorModel) -> ClassificationReport:
    """AM verdict for a matrix or diagonal model, with the clauses that decided it."""
    report = _classify(op)
    if isinstance(op, FiniteOperator) or op.is_finite_dimensional:
        return replace(report, null_dim_finite=True, mp_compact=True, spectrum_discrete=True)
    flags = [br.unbounded for _, br in _branches(op)]
    mp_compact = None if any(f is None for f in flags) else all(flags)
    if op.null_dim == INFINITE and not flags:
        mp_compact = True
    ess = spectrum_report(op).essential
    return replace(report, null_dim_finite=op.null_dim != INFINITE, mp_compact=mp_compact,
                   spectrum_discrete=None if ess is None else not ess)


def _classify(op: OperatorModel) -> ClassificationReport:
    if isinstance(op, FiniteOperator) or op.is_finite_dimensional:
        return classify_am_finite(op)
    model = op
    pairs = list(_branches(model))
    if model.null_dim == INFINITE and pairs:
        return ClassificationReport(Verdict.NOT_AM, "kernel", (
            Clause("kernel_finite_or_rest_finite_rank", False,
                   "infinite-dimensional kernel alongside infinitely many nonzero eigenvalues"),), (
            "restricting to the closed span of e_k + v_k/(k lambda_k), e_k in the kernel and v_k eigenvectors, "
            "gives an injective operator whose minimum modulus 0 is not attained",))
    flags = [br.unbounded for _, br in pairs]
    if any(f is True for f in flags) and any(f is False for f in flags):
        bounded = next(_branch_label(p, br) for p, br in pairs if br.unbounded is False)
        return ClassificationReport(Verdict.NOT_AM, "unbounded", (
            Clause("pinv_compact", False, f"{bounded} stays bounded, so 1/lambda does not tend to 0"),))
    if any(f is None for f in flags):
        return ClassificationReport(Verdict.UNDECIDABLE, "uncertified", (),
                                    tuple(_scan_evidence(model)))
    if flags and all(f is True for f in flags):
        return _unbounded_route(model, pairs)
    return _bounded_route(model, pairs)


def _unbounded_route(model: DiagonalModel, pairs) -> ClassificationReport:
    kernel = Clause("kernel_finite", model.null_dim != INFINITE,
                    f"null_dim = {'inf' if model.null_dim == INFINITE else model.null_dim}")
    pinv = Clause("pinv_compact", True,
                  "; ".join(f"{_branch_label(p, br)}: |lambda| -> oo" for p, br in pairs))
    verdict = Verdict.AM if kernel.holds else Verdict.NOT_AM
    return ClassificationReport(verdict, "unbounded", (kernel, pinv),
                                ("AM iff the kernel is finite-dimensional and T^+ is compact",))


def _bounded_route(model: DiagonalModel, pairs) -> ClassificationReport:
    if any(br.trend is None for _, br in pairs):
        # the limit alone cannot tell from which side the tail approaches it
        return ClassificationReport(Verdict.UNDECIDABLE, "bounded", (),
                                    ("no monotone-tail certificate",) + tuple(_scan_evidence(model)))
    moduli = [br.abs_limit for _, br in pairs]
    if model.null_dim == INFINITE:
        moduli.append(sp.Integer(0))
    ess = _distinct(moduli)
    single = Clause("single_essential_modulus", len(ess) <= 1,
                    "essential moduli {" + ", ".join(str(v) for v in ess) + "}")
    if not single.holds:
        return ClassificationReport(Verdict.NOT_AM, "bounded", (single,), (
            "two distinct accumulation moduli give a subspace whose minimum is not attained",))
    beta = ess[0] if ess else None
    from_above = [(p, br) for p, br in pairs if br.trend is Trend.DECREASING]
    below = Clause("approach_from_below", not from_above,
                   "all branches increase to or equal beta" if not from_above else
                   "; ".join(f"{_branch_label(p, br)} decreases to {br.abs_limit}" for p, br in from_above))
    verdict = Verdict.AM if below.holds else Verdict.NOT_AM
    note = (f"T = {beta} I - K + F with K compact positive and F finite rank" if below.holds
            else f"inf over the tail is {beta}, approached from above and never attained")
    return ClassificationReport(verdict, "bounded", (single, below), (note,))


def bounded_am_criterion(op: OperatorModel) -> ClassificationReport:
    """Classify a bounded model through the ``beta I - K + F`` characterisation."""
    if isinstance(op, FiniteOperator) or op.is_finite_dimensional:
        return classify_am_finite(op)
    pairs = list(_branches(op))
    if any(br.unbounded is None for _, br in pairs):
        return ClassificationReport(Verdict.UNDECIDABLE, "bounded", (), tuple(_scan_evidence(op)))
    if any(br.unbounded for _, br in pairs):
        raise ValueError("bounded criterion applied to an unbounded model")
    return _bounded_route(op, pairs)


def is_compact(op: OperatorModel) -> bool | None:
    if isinstance(op, FiniteOperator) or op.is_finite_dimensional:
        return True
    limits = [br.abs_limit for _, br in _branches(op)]
    if any(v is None for v in limits):
        return None
    return all(v == 0 for v in limits)


# -- spectra --------------------------------------------------------------------

def spectrum_report(op: OperatorModel, sample: int = 6) -> SpectrumReport:
    """Essential spectrum (exact limit points), a discrete-eigenvalue sample
    and the status of 0."""
    if isinstance(op, FiniteOperator) or op.is_finite_dimensional:
        data = spectral_data(op)
        zero = any(abs(lam) <= TAU_ZERO * max(1.0, abs(data.pairs[-1][0])) for lam, _ in data.pairs)
        return SpectrumReport((), tuple(data.pairs[:sample]), zero,
                              "eigenvalue" if zero else "resolvent", True)
    model = op
    points: list[sp.Expr] = []
    certified = True
    for _, br in _branches(model):
        if br.abs_limit is None or (br.abs_limit != sp.oo and br.limit is None):
            certified = False
        elif br.abs_limit != sp.oo:
            points.append(br.limit)
    if model.null_dim == INFINITE:
        points.append(sp.Integer(0))
    essential = tuple(_distinct(points)) if certified else None
    discrete: list[tuple[complex, int | float]] = []
    if model.null_dim and model.null_dim != INFINITE:
        discrete.append((0j, model.null_dim))
    ess_num = [complex(sp.N(v, 20)) for v in essential or ()]
    for p in model.parts:
        if isinstance(p, ExplicitPart):
            discrete.extend(zip(p.values, p.multiplicities))
        else:
            n = np.arange(1, sample + 1)
            discrete.extend(zip(p.values(n).astype(complex), p.multiplicities(n).tolist()))
    discrete = [(lam, m) for lam, m in discrete
                if not any(abs(lam - e) <= 1e-12 * max(1.0, abs(e)) for e in ess_num)][:sample]
    zero_ess = essential is not None and any(v == 0 for v in essential)
    if zero_ess:
        zero_in, kind = True, "essential"
    elif model.null_dim:
        zero_in, kind = True, "eigenvalue"
    elif essential is None:
        zero_in, kind = None, "unknown"
    else:
        zero_in, kind = False, "resolvent"
    notes = () if certified else tuple(_scan_evidence(model))
    return SpectrumReport(essential, tuple(discrete), zero_in, kind,
                          None if essential is None else not essential, notes)


# -- equivalence chain ----------------------------------------------------------

def _require_positive(op: OperatorModel, prefix: int = 10_000) -> None:
    if isinstance(op, FiniteOperator):
        a = op.entries
        if a.shape[0] != a.shape[1] or np.max(np.abs(a - a.conj().T)) > 1e-10 * np.linalg.norm(a):
            raise StructureError("chain check needs a positive operator")
        if np.linalg.eigvalsh((a + a.conj().T) / 2)[0] < -1e-10 * np.linalg.norm(a):
            raise StructureError("chain check needs a positive operator")
        return
    if op.field is not Field.REAL:
        raise StructureError("chain check needs a positive (real-field) model")
    for p in op.parts:
        vals = np.array(p.values) if isinstance(p, ExplicitPart) else p.values(np.arange(1, prefix + 1))
        if np.any(np.real(vals) <= 0):
            raise StructureError("chain check needs positive eigenvalues")


def equivalence_chain_check(op: OperatorModel) -> ChainReport:
    """Classify ``T``, ``T^2 + I`` and ``Z_T`` independently; for positive
    ``T`` the three verdicts coincide."""
    _require_positive(op)
    reports = {
        "T": classify_am(op),
        "T^2+I": classify_am(square_plus_identity(op)),
        "Z_T": bounded_am_criterion(bounded_transform(op)),
    }
    return ChainReport({k: r.verdict for k, r in reports.items()}, reports)


# -- domain and synthesis -------------------------------------------------------

def _coefficient_formula(coeffs) -> fm.Formula:
    return fm.parse_formula(coeffs) if isinstance(coeffs, str) else coeffs


def domain_membership(model: DiagonalModel, coeffs) -> DomainReport:
    """Is ``x`` in the domain of ``T``? ``coeffs`` gives ``c(n) = ||P_n x||``
    on the eigenvalue part (formula or finite list); membership is
    ``sum |lambda(n) c(n)|^2 < oo``."""
    if len(model.formula_parts) != 1 or model.explicit_parts:
        if not model.formula_parts:
            return DomainReport(DomainVerdict.IN_DOMAIN, "bounded finite-rank eigenvalue data")
        raise ValueError("domain membership needs a single eigenvalue formula")
    lam = model.formula_parts[0].formula
    if isinstance(coeffs, (list, tuple, np.ndarray)):
        return DomainReport(DomainVerdict.IN_DOMAIN, f"{len(coeffs)} nonzero coefficients")
    c = _coefficient_formula(coeffs)
    if sum_of_squares_converges(c) is False:
        raise DomainError("coefficients are not square-summable, so x is not a vector of the space")
    prod = fm.mul(lam, c)
    verdict = sum_of_squares_converges(prod)
    sums = ()
    if verdict is None:
        sums = tuple(partial_sums(prod))
    mapping = {True: DomainVerdict.IN_DOMAIN, False: DomainVerdict.NOT_IN_DOMAIN,
               None: DomainVerdict.UNDECIDABLE}
    evidence = {True: "sum |lambda c|^2 converges (p-series comparison)",
                False: "sum |lambda c|^2 diverges (p-series comparison)",
                None: "no comparison test applies; partial sums attached"}[verdict]
    return DomainReport(mapping[verdict], evidence, sums)


def spectral_synthesize(data, x):
    """Apply ``T = sum lambda P_lambda`` to ``x``.

    ``data`` is :class:`SpectralData` with an eigenvector basis (then ``x`` is
    a vector) or a single-formula :class:`DiagonalModel` (then ``x`` is a
    coefficient formula and the coefficient formula of ``Tx`` is returned).
    """
    if isinstance(data, SpectralData):
        if data.basis is None:
            raise ValueError("spectral data carries no eigenvector basis")
        x = np.asarray(x, dtype=complex)
        out = np.zeros(data.basis[0].shape[0], dtype=complex)
        for (lam, _), block in zip(data.pairs, data.basis):
            out += lam * (block @ (block.conj().T @ x))
        return out
    report = domain_membership(data, x)
    if report.verdict is not DomainVerdict.IN_DOMAIN:
        raise DomainError(f"x is not certified to lie in the domain: {report.evidence}")
    return fm.mul(data.formula_parts[0].formula, _coefficient_formula(x))


# -- hyperinvariant subspaces ---------------------------------------------------

def hyperinvariant_witness(op: OperatorModel) -> WitnessReport:
    """Nontrivial closed subspace invariant under everything commuting with ``T``."""
    report = classify_am(op)
    if report.verdict is not Verdict.AM:
        return WitnessReport("not_applicable", evidence=f"operator is {report.verdict.value}")
    if isinstance(op, FiniteOperator):
        return _finite_witness(op)
    return _diagonal_witness(op)


def _finite_witness(op: FiniteOperator) -> WitnessReport:
    if op.rows != op.cols:
        raise StructureError("hyperinvariant subspaces need a square operator")
    split = carrier_split(op)
    n = op.cols
    if split.rank == 0:
        return WitnessReport("none", evidence="zero operator: every subspace is reducing, none hyperinvariant")
    if split.rank < n:
        return WitnessReport("witness", "kernel", 0j, n - split.rank, split.null_basis,
                             evidence="kernel of T is invariant under its commutant")
    eig = np.linalg.eigvals(op.entries)
    lam = min(eig, key=spectral_order)
    scale = max(np.linalg.norm(op.entries, 2), 1e-300)
    basis = scipy.linalg.null_space(op.entries - lam * np.eye(n), rcond=1e-8)
    if basis.shape[1] == 0:
        basis = scipy.linalg.null_space(op.entries - lam * np.eye(n), rcond=1e-6)
    if basis.shape[1] >= n or np.linalg.norm(op.entries - lam * np.eye(n), 2) <= TAU_ZERO * scale:
        return WitnessReport("none", evidence="T is a scalar multiple of the identity")
    return WitnessReport("witness", "bijective", complex(lam), basis.shape[1], basis,
                         evidence=f"eigenspace of the least-modulus eigenvalue {complex(lam):.6g}")


def _diagonal_witness(model: DiagonalModel) -> WitnessReport:
    if model.null_dim:
        if not model.parts:
            return WitnessReport("none", evidence="zero operator")
        return WitnessReport("witness", "kernel", 0j, model.null_dim, None, (("kernel", None),),
                             "kernel block is invariant under the commutant")
    m = minimum_modulus(model)
    if not m.attained:
        return WitnessReport("not_applicable", evidence=f"minimum modulus not certified attained: {m.evidence}")
    # collect every index carrying the least-modulus eigenvalue
    candidates = []
    for i, p in enumerate(model.parts):
        if isinstance(p, ExplicitPart):
            for j, v in enumerate(p.values):
                candidates.append((abs(v), v, (i, j + 1), p.multiplicities[j], False))
            continue
        info = analyze(p.formula)
        horizon = max(b.step * (b.start or 1) + b.offset for b in info.branches) + 1000
        n = np.arange(1, min(horizon, N_MAX) + 1)
        vals = p.values(n).astype(complex)
        mult = p.multiplicities(n)
        constant = {(b.step, b.offset) for b in info.branches if b.trend is Trend.CONSTANT}
        for k in range(len(n)):
            tail = any((k + 1 - off) % st == 0 for st, off in constant)
            candidates.append((abs(vals[k]), vals[k], (i, k + 1), int(mult[k]), tail))
    target = min(c[0] for c in candidates)
    lam = next(c[1] for c in candidates if math.isclose(c[0], target, rel_tol=1e-12))
    hits = [c for c in candidates if abs(c[1] - lam) <= 1e-12 * max(1.0, abs(lam))]
    infinite = any(c[4] for c in hits)
    scalar = len(hits) == len(candidates)
    if infinite and scalar:
        return WitnessReport("none", evidence="T is a scalar multiple of the identity")
    dim = INFINITE if infinite else sum(c[3] for c in hits)
    return WitnessReport("witness", "bijective", complex(lam), dim, None,
                         tuple(c[2] for c in hits if not c[4]) if not infinite else (),
                         f"eigenspace ker(T - {complex(lam):.6g} I) of the least-modulus eigenvalue")
