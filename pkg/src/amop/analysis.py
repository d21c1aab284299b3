"""Certified asymptotics for formula-defined eigenvalue sequences.

A formula ``f(n)`` is split into residue branches ``n = step*k + offset``
(``step > 1`` only when ``f`` contains powers like ``(-1)^n`` or ``i^n``).
For every branch the continuous relaxation ``x -> |f|^2`` is differentiated
symbolically; past the largest real root of the derivative's numerator and
denominator the modulus is strictly monotone (or constant). Together with
the symbolic limit this gives

* a *certificate start* ``k0`` beyond which ``|f|`` has a fixed trend,
* the limit of ``f`` and of ``|f|`` (possibly infinite).

Everything downstream (infima over index subsets, limit points, series
convergence) either uses these certificates or reports ``None`` for
"undecidable". Nothing here returns a number it cannot justify.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp

from .formula import Formula, evaluate, has_imag, to_sympy

N_MAX = 10**6
"""Scan horizon for bounded searches."""

_CHUNK = 8192

_N = sp.Symbol("n", integer=True, positive=True)
_K = sp.Symbol("k", integer=True, positive=True)
X = sp.Symbol("x", positive=True)


class Trend(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"


@dataclass(frozen=True)
class Branch:
    """Subsequence ``n = step*k + offset`` (k >= 1) with its certificate."""

    step: int
    offset: int
    expr: sp.Expr | None
    sq_modulus: sp.Expr | None
    start: int | None = None
    trend: Trend | None = None
    abs_limit: sp.Expr | None = None
    limit: sp.Expr | None = None

    def index(self, k):
        return self.step * k + self.offset

    @property
    def unbounded(self) -> bool | None:
        if self.abs_limit is None:
            return None
        return self.abs_limit == sp.oo

    @property
    def certified(self) -> bool:
        return self.trend is not None and self.start is not None and self.abs_limit is not None


@dataclass(frozen=True)
class SequenceAnalysis:
    formula: Formula
    branches: tuple[Branch, ...]
    notes: tuple[str, ...] = ()

    @property
    def certified(self) -> bool:
        return bool(self.branches) and all(b.certified for b in self.branches)

    @property
    def unbounded(self) -> bool | None:
        """True when ``|f(n)| -> oo`` along every branch."""
        flags = [b.unbounded for b in self.branches]
        if flags and all(f is True for f in flags):
            return True
        if any(f is False for f in flags):
            return False
        return None


# -- symbolic helpers -------------------------------------------------------

def _finite(value) -> bool:
    try:
        return bool(value.is_finite) and not value.has(sp.AccumBounds, sp.nan, sp.zoo)
    except AttributeError:
        return False


def _safe_limit(expr: sp.Expr):
    try:
        value = sp.limit(expr, X, sp.oo)
    except Exception:  # sympy raises a zoo of types here
        return None
    if value in (sp.oo, -sp.oo):
        return value
    return value if _finite(value) else None


def _root_bound(expr: sp.Expr) -> float | None:
    """Upper bound for the real zeros of ``expr`` on ``x >= 1`` (0.0 if none)."""
    expr = sp.together(expr)
    num, den = sp.fraction(expr)
    bound = 0.0
    for part in (num, den):
        part = sp.expand(part)
        if not part.has(X):
            if part == 0:
                return None
            continue
        b = _poly_root_bound(part)
        if b is None:
            b = _solveset_root_bound(part)
        if b is None:
            return None
        bound = max(bound, b)
    return bound


def _poly_root_bound(expr: sp.Expr) -> float | None:
    try:
        poly = sp.Poly(expr, X)
    except sp.PolynomialError:
        return None
    if not poly.free_symbols <= {X} or poly.degree() < 1:
        return 0.0 if poly.degree() < 1 else None
    coeffs = poly.all_coeffs()
    if all(c.is_rational for c in coeffs):
        intervals = poly.intervals()
        return float(max((hi for (lo, hi), _ in intervals), default=0.0))
    # Cauchy bound on |roots|
    try:
        lead = abs(complex(coeffs[0]))
        return 1.0 + max(abs(complex(c)) for c in coeffs[1:]) / lead
    except TypeError:
        return None


def _solveset_root_bound(expr: sp.Expr) -> float | None:
    try:
        roots = sp.solveset(expr, X, sp.Interval(1, sp.oo))
    except Exception:
        return None
    if roots is sp.S.EmptySet:
        return 0.0
    if isinstance(roots, sp.FiniteSet) and all(r.is_real for r in roots):
        return float(max(roots))
    return None


def _root_of_unity_order(base: sp.Expr, coeff: sp.Expr) -> int | None:
    """Order ``d`` with ``(base/|base|)^(coeff*d) == 1``, or None."""
    try:
        turns = sp.nsimplify(sp.arg(base) * coeff / (2 * sp.pi))
    except Exception:
        return None
    if not turns.is_rational:
        return None
    return int(sp.Rational(turns).q)


def _period(expr: sp.Expr) -> int | None:
    step = 1
    for p in expr.atoms(sp.Pow):
        base, exponent = p.as_base_exp()
        if not exponent.has(_N):
            continue
        if base.has(_N):
            if base.is_positive is not True:
                return None
            continue
        if base.is_positive:
            continue
        lin = sp.Poly(exponent, _N) if exponent.is_polynomial(_N) else None
        if lin is None or lin.degree() != 1:
            return None
        d = _root_of_unity_order(base, lin.all_coeffs()[0])
        if d is None:
            return None
        step = step * d // math.gcd(step, d)
    return step


def _normalise_powers(expr: sp.Expr) -> sp.Expr | None:
    """Rewrite ``b**(a*k + c)`` as ``(b**a)**k * b**c`` so roots of unity cancel."""
    failed = False

    def rewrite(p):
        nonlocal failed
        base, exponent = p.as_base_exp()
        if base.has(_K) or not exponent.has(_K):
            return p
        exponent = sp.expand(exponent)
        a = exponent.coeff(_K, 1)
        c = exponent.coeff(_K, 0)
        if (a * _K + c - exponent).simplify() != 0 or a.has(_K):
            failed = True
            return p
        root = sp.expand(sp.expand_complex(base**a))
        if not (root.is_positive or root == 0):
            failed = True
            return p
        return root**_K * base**c

    out = expr.replace(lambda e: isinstance(e, sp.Pow), rewrite)
    return None if failed else out


def _strip_abs(expr: sp.Expr) -> tuple[sp.Expr, float] | None:
    """Replace each ``Abs(h)`` by ``sign*h`` valid for large x; returns the
    expression and the point beyond which the replacement holds."""
    bound = 0.0
    while True:
        atoms = [a for a in expr.atoms(sp.Abs) if a.has(X)]
        if not atoms:
            return expr, bound
        a = min(atoms, key=sp.count_ops)
        inner = a.args[0]
        lim = _safe_limit(inner)
        if lim is None or lim == 0:
            return None
        sign = 1 if (lim == sp.oo or (lim != -sp.oo and complex(lim).real > 0)) else -1
        if inner.has(sp.I):
            return None
        b = _root_bound(inner)
        if b is None:
            return None
        bound = max(bound, b)
        expr = expr.xreplace({a: sign * inner})


def _analyze_branch(expr_k: sp.Expr, step: int, offset: int, complex_valued: bool) -> Branch:
    g = expr_k.subs(_K, X)
    try:
        if complex_valued:
            re_g, im_g = sp.expand_complex(g).as_real_imag()
            sq = sp.simplify(re_g**2 + im_g**2)
        else:
            sq = sp.simplify(g**2)
    except Exception:
        return Branch(step, offset, g, None)
    stripped = _strip_abs(sq)
    if stripped is None:
        return Branch(step, offset, g, sq)
    sq, abs_bound = stripped
    abs_limit_sq = _safe_limit(sq)
    abs_limit = None
    if abs_limit_sq is not None:
        abs_limit = sp.oo if abs_limit_sq == sp.oo else sp.sqrt(abs_limit_sq)
    limit = None
    if abs_limit is not None and abs_limit != sp.oo:
        if complex_valued:
            g_stripped = _strip_abs(g)
            if g_stripped is not None:
                re_g, im_g = sp.expand_complex(g_stripped[0]).as_real_imag()
                lr, li = _safe_limit(re_g), _safe_limit(im_g)
                if lr is not None and li is not None and _finite(lr) and _finite(li):
                    limit = sp.simplify(lr + sp.I * li)
        else:
            g_stripped = _strip_abs(g)
            if g_stripped is not None:
                lim = _safe_limit(g_stripped[0])
                limit = lim if lim is not None and _finite(lim) else None
    derivative = sp.simplify(sp.diff(sq, X))
    if derivative == 0:
        start = max(1, math.floor(abs_bound) + 1)
        return Branch(step, offset, g, sq, start, Trend.CONSTANT, abs_limit, limit)
    bound = _root_bound(derivative)
    if bound is None:
        return Branch(step, offset, g, sq, None, None, abs_limit, limit)
    start = max(1, math.floor(max(bound, abs_bound)) + 1)
    try:
        slope = sp.N(derivative.subs(X, start), 30)
        slope = complex(slope)
    except (TypeError, ValueError):
        return Branch(step, offset, g, sq, None, None, abs_limit, limit)
    if abs(slope.imag) > 1e-20 or slope.real == 0:
        return Branch(step, offset, g, sq, None, None, abs_limit, limit)
    trend = Trend.INCREASING if slope.real > 0 else Trend.DECREASING
    if start > N_MAX:
        start, trend = None, None
    return Branch(step, offset, g, sq, start, trend, abs_limit, limit)


@lru_cache(maxsize=1024)
def analyze(f: Formula) -> SequenceAnalysis:
    """Symbolic certificate for ``|f(n)|`` (cached per formula)."""
    expr = to_sympy(f, _N)
    complex_valued = has_imag(f)
    step = _period(expr)
    if step is None:
        return SequenceAnalysis(f, (Branch(1, 0, None, None),), ("oscillating powers not supported",))
    branches = []
    for r in range(1, step + 1):
        offset = r - step
        sub = expr.subs(_N, step * _K + offset)
        sub = _normalise_powers(sub)
        if sub is None:
            branches.append(Branch(step, offset, None, None))
            continue
        try:
            branches.append(_analyze_branch(sub, step, offset, complex_valued or sub.has(sp.I)))
        except (ArithmeticError, ValueError, TypeError, RecursionError):
            # sympy gives up on some inputs (e.g. huge rationals); no certificate then
            branches.append(Branch(step, offset, None, None))
    return SequenceAnalysis(f, tuple(branches))


# -- index sets -------------------------------------------------------------

class IndexSet(ABC):
    """Subset of the positive integers, queried lazily."""

    @abstractmethod
    def contains(self, n: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def infinite_in(self, step: int, offset: int) -> bool | None:
        """Whether infinitely many members have the form ``step*k + offset``."""

    def bound(self) -> int | None:
        """Largest member for finite sets, else None."""
        return None


@dataclass(frozen=True)
class FiniteIndexSet(IndexSet):
    members: frozenset[int]

    def contains(self, n):
        return np.isin(n, np.fromiter(self.members, dtype=np.int64, count=len(self.members)))

    def infinite_in(self, step, offset):
        return False

    def bound(self):
        return max(self.members, default=0)


@dataclass(frozen=True)
class CofiniteIndexSet(IndexSet):
    excluded: frozenset[int] = frozenset()

    def contains(self, n):
        if not self.excluded:
            return np.ones(np.shape(n), dtype=bool)
        return ~np.isin(n, np.fromiter(self.excluded, dtype=np.int64, count=len(self.excluded)))

    def infinite_in(self, step, offset):
        return True


@dataclass(frozen=True)
class ProgressionIndexSet(IndexSet):
    """``{start, start + step, start + 2 step, ...}``."""

    start: int
    step: int

    def contains(self, n):
        n = np.asarray(n)
        return (n >= self.start) & ((n - self.start) % self.step == 0)

    def infinite_in(self, step, offset):
        period = self.step * step // math.gcd(self.step, step)
        candidates = np.arange(self.start, self.start + period)
        return bool(np.any((candidates - offset) % step == 0))


@dataclass(frozen=True)
class PredicateIndexSet(IndexSet):
    predicate: Callable[[int], bool]
    description: str = "predicate"

    def contains(self, n):
        return np.fromiter((bool(self.predicate(int(v))) for v in np.ravel(n)), dtype=bool,
                           count=np.size(n)).reshape(np.shape(n))

    def infinite_in(self, step, offset):
        return None


ALL_INDICES = CofiniteIndexSet()


# -- infimum over subsets -----------------------------------------------------

@dataclass(frozen=True)
class Infimum:
    """Infimum of ``|f(n)|`` over a subset, with attainment verdict.

    ``attained`` is None when undecidable; then ``value`` is only the best
    scanned value (an upper bound) and ``certified`` is False.
    """

    value: float
    attained: bool | None
    argmin: int | None
    certified: bool
    evidence: str = ""
    exact: sp.Expr | None = field(default=None, compare=False)

    def __float__(self):
        return float(self.value)


class _Undecidable(Exception):
    pass


def _abs_values(f: Formula, n: np.ndarray) -> np.ndarray:
    return np.abs(evaluate(f, n))


def _exact_abs(f: Formula, n: int) -> sp.Expr:
    return sp.Abs(to_sympy(f, sp.Integer(n)))


def _branch_candidates(f: Formula, br: Branch, members: IndexSet):
    """Yield ``(value, attained, n, exact)`` candidates for one branch."""
    out = []
    k0 = br.start
    bound = members.bound()
    if k0 > 1:
        ks = np.arange(1, k0)
        ns = br.index(ks)
        ns = ns[ns >= 1]
        mask = members.contains(ns)
        if mask.any():
            vals = _abs_values(f, ns[mask])
            j = int(np.argmin(vals))
            out.append((float(vals[j]), True, int(ns[mask][j]), None))
    tail_finite = members.infinite_in(br.step, br.offset)
    if tail_finite is not None:
        tail_finite = not tail_finite
    if br.trend is Trend.DECREASING and tail_finite is False:
        out.append((float(br.abs_limit), False, None, br.abs_limit))
        return out
    if br.trend is Trend.DECREASING and tail_finite is None:
        raise _Undecidable("cannot tell whether the subset is infinite on a decreasing branch")
    best = min((c[0] for c in out), default=None)
    k = k0
    while True:
        if k > N_MAX:
            if bound is not None and br.index(k) > bound:
                return out
            raise _Undecidable(f"scan horizon {N_MAX} exceeded")
        ks = np.arange(k, min(k + _CHUNK, N_MAX + 1))
        ns = br.index(ks)
        mask = members.contains(ns)
        if br.trend is Trend.DECREASING:
            # finite subset: all remaining members matter
            if mask.any():
                vals = _abs_values(f, ns[mask])
                j = int(np.argmin(vals))
                out.append((float(vals[j]), True, int(ns[mask][j]), None))
        elif mask.any():
            first = int(np.argmax(mask))
            out.append((float(_abs_values(f, ns[first:first + 1])[0]), True, int(ns[first]), None))
            return out
        elif best is not None and br.trend is Trend.INCREASING:
            if _abs_values(f, ns[-1:])[0] >= best:
                return out
        elif best is not None and br.trend is Trend.CONSTANT:
            if _abs_values(f, ns[-1:])[0] >= best:
                return out
        if bound is not None and ns[-1] >= bound:
            return out
        k = int(ks[-1]) + 1


def infimum(f: Formula, members: IndexSet = ALL_INDICES) -> Infimum:
    """Infimum of ``|f(n)|`` over ``n`` in ``members``, decided exactly when
    the formula carries a monotone-tail certificate."""
    info = analyze(f)
    if not info.certified:
        return _scan_infimum(f, members, "no monotone-tail certificate")
    candidates = []
    try:
        for br in info.branches:
            candidates.extend(_branch_candidates(f, br, members))
    except _Undecidable as exc:
        return _scan_infimum(f, members, str(exc))
    if not candidates:
        return Infimum(math.inf, None, None, True, "empty index set")
    value = min(c[0] for c in candidates)
    attained = [c for c in candidates if c[1] and c[0] <= value * (1 + 1e-12) + 1e-300]
    limits = [c for c in candidates if not c[1] and c[0] <= value * (1 + 1e-12) + 1e-300]
    if not attained:
        lim = limits[0]
        return Infimum(float(lim[3]), False, None, True,
                       f"infimum {lim[3]} is a limit approached strictly from above", lim[3])
    best = min(attained, key=lambda c: (c[0], c[2]))
    try:
        exact = _exact_abs(f, best[2])
        # float tie: settle with exact arithmetic
        strict = [lim for lim in limits if sp.simplify(exact - lim[3]).is_positive]
    except (ArithmeticError, ValueError, TypeError):
        # symbolic arithmetic gave up (e.g. subnormal shifts); keep the float minimum
        exact, strict = None, []
    if strict:
        lim = strict[0]
        return Infimum(float(lim[3]), False, None, True,
                       f"infimum {lim[3]} is a limit approached strictly from above", lim[3])
    return Infimum(best[0], True, best[2], True, f"minimum attained at n={best[2]}", exact)


def _scan_infimum(f: Formula, members: IndexSet, reason: str) -> Infimum:
    best_val, best_n = math.inf, None
    for start in range(1, N_MAX + 1, _CHUNK * 8):
        ns = np.arange(start, min(start + _CHUNK * 8, N_MAX + 1))
        mask = members.contains(ns)
        if mask.any():
            vals = _abs_values(f, ns[mask])
            j = int(np.nanargmin(vals)) if not np.all(np.isnan(vals)) else None
            if j is not None and vals[j] < best_val:
                best_val, best_n = float(vals[j]), int(ns[mask][j])
        if members.bound() is not None and ns[-1] >= members.bound():
            return Infimum(best_val, best_val < math.inf or None, best_n, True, "finite subset scanned")
    return Infimum(best_val, None, best_n, False,
                   f"undecidable ({reason}); best value over n <= {N_MAX} is {best_val:.6g}")


# -- limit points and convergence --------------------------------------------

def limit_points(f: Formula) -> frozenset | None:
    """Finite limit points of ``f(n)`` (exact), or None when uncertified."""
    info = analyze(f)
    points = set()
    for br in info.branches:
        if br.abs_limit is None:
            return None
        if br.abs_limit == sp.oo:
            continue
        if br.limit is None:
            return None
        points.add(sp.nsimplify(br.limit) if br.limit.is_Float else br.limit)
    return frozenset(points)


def scan_limit_candidates(f: Formula, window: int = 2000) -> tuple[list[complex], bool]:
    """Uncertified tail scan: cluster values near ``N_MAX``.

    Returns candidate finite limit points and whether the tail looks unbounded.
    """
    ns = np.arange(N_MAX - window + 1, N_MAX + 1)
    vals = evaluate(f, ns)
    mags = np.abs(vals)
    if not np.all(np.isfinite(mags)) or mags.min() > 1e6:
        return [], True
    rounded = {complex(float(f"{v.real:.6g}"), float(f"{v.imag:.6g}")) if np.iscomplexobj(vals)
               else float(f"{v:.6g}") for v in vals}
    if len(rounded) > 8:
        return [], False
    return sorted(rounded, key=lambda z: (abs(z), np.angle(z))), False


def sum_of_squares_converges(f: Formula) -> bool | None:
    """Decide convergence of ``sum |f(n)|^2`` by comparison with p-series.

    Uses the exponent ``p = lim log|f|^2 / log x``: ``p < -1`` converges,
    ``p > -1`` diverges; the borderline is settled against ``1/x`` and
    ``1/(x log^2 x)``. None when no test applies.
    """
    info = analyze(f)
    verdicts = []
    for br in info.branches:
        sq = br.sq_modulus
        if sq is None:
            return None
        if sq == 0:
            verdicts.append(True)
            continue
        try:
            ratio = sp.expand_log(sp.log(sq), force=True) / sp.log(X)
        except Exception:
            return None
        p = _safe_limit(ratio)
        if p is None:
            return None
        if p == -sp.oo or (p != sp.oo and p < -1):
            verdicts.append(True)
            continue
        if p == sp.oo or p > -1:
            verdicts.append(False)
            continue
        q = _safe_limit(sq * X)
        if q is None:
            return None
        if q == sp.oo or q > 0:
            verdicts.append(False)
            continue
        r = _safe_limit(sq * X * sp.log(X) ** 2)
        if r is None or r == sp.oo:
            return None
        verdicts.append(True)
    return all(verdicts)


def partial_sums(f: Formula, checkpoints=(10**2, 10**3, 10**4, 10**5, 10**6)) -> list[float]:
    """Partial sums of ``|f(n)|^2`` at the given indices (scan evidence)."""
    top = max(checkpoints)
    terms = np.abs(evaluate(f, np.arange(1, top + 1))) ** 2
    sums = np.cumsum(terms)
    return [float(sums[c - 1]) for c in checkpoints]
