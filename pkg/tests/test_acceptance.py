"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.linalg
import sympy as sp

from amop import corpus
from amop.analysis import (
    CofiniteIndexSet, FiniteIndexSet, ProgressionIndexSet, analyze,
)
from amop.calculus import (
    Attainment, attainment, bounded_transform, least_squares_min_norm, minimum_modulus,
    minimum_modulus_attained, modulus, mp_deviations, resolvent,
)
from amop.classify import Verdict, classify_am, equivalence_chain_check, spectral_synthesize, spectrum_report
from amop.core import INFINITE, DiagonalModel, FiniteOperator, Structure, StructureError, spectral_data
from amop.specfile import load_spec
from amop.truncation import TruncationPlan, materialize, run_suite

D = DiagonalModel.from_formula
CORPUS = {p.name: load_spec(p) for p in corpus.spec_paths()}
DIAGONAL = {k: m for k, m in CORPUS.items() if isinstance(m, DiagonalModel)}


@pytest.fixture
def verdict(capsys, request):
    """Print ``PASS``/``FAIL`` for the criterion, even when the test fails."""
    label = request.node.get_closest_marker("criterion").args[0]
    state = {"detail": ""}
    yield state
    failed = getattr(request.node, "rep_call", None) is None or request.node.rep_call.failed
    with capsys.disabled():
        print(f"\n[{'FAIL' if failed else 'PASS'}] {label}{': ' + state['detail'] if state['detail'] else ''}")


def _random_matrices(count, rng, kinds=("self_adjoint", "normal")):
    for k in range(count):
        n = int(rng.integers(1, 65))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if kinds[k % len(kinds)] == "self_adjoint":
            yield FiniteOperator((a + a.conj().T) / 2, Structure.SELF_ADJOINT)
        else:
            q = np.linalg.qr(a)[0]
            d = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            yield FiniteOperator((q * d) @ q.conj().T, Structure.NORMAL)


@pytest.mark.criterion("1 bounded-transform identity")
def test_bounded_transform_identity(verdict):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for op in _random_matrices(100, rng):
        n = op.rows
        t = op.entries
        z = bounded_transform(op).entries
        rhs = np.eye(n) - np.linalg.inv(np.eye(n) + t.conj().T @ t)
        worst = max(worst, np.linalg.norm(z.conj().T @ z - rhs, "fro") / math.sqrt(n))
    elapsed = time.perf_counter() - start
    verdict["detail"] = f"max ||Z*Z - (I - (I+T*T)^-1)||_F / ||I||_F = {worst:.2e}, {elapsed:.2f} s"
    assert worst <= 1e-9
    assert elapsed < 10.0


@pytest.mark.criterion("2 perturbation formula m(S+iI)^2 = 1 + m(S)^2")
def test_perturbation_formula(verdict):
    rng = np.random.default_rng(202)
    worst_m = worst_v = 0.0
    for op in _random_matrices(100, rng, kinds=("self_adjoint",)):
        s = op.entries
        n = op.rows
        shifted = FiniteOperator(s + 1j * np.eye(n))
        worst_m = max(worst_m, abs(minimum_modulus(shifted) ** 2 - (1 + minimum_modulus(op) ** 2)))
        for _ in range(5):
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x /= np.linalg.norm(x)
            lhs = np.linalg.norm(shifted.entries @ x) ** 2
            rhs = np.linalg.norm(s @ x) ** 2 + 1.0
            worst_v = max(worst_v, abs(lhs - rhs))
    verdict["detail"] = f"modulus deviation {worst_m:.2e}, vector identity deviation {worst_v:.2e}"
    assert worst_m <= 1e-10
    assert worst_v <= 1e-10


def _carrier_oracle(a, y):
    """Minimal-norm least squares by solving on an orthonormal basis of the carrier."""
    q = scipy.linalg.orth(a.conj().T)
    if q.shape[1] == 0:
        return np.zeros(a.shape[1], dtype=complex)
    c = scipy.linalg.lstsq(a @ q, y)[0]
    return q @ c


@pytest.mark.criterion("3 Moore-Penrose suite")
def test_moore_penrose_suite(verdict):
    rng = np.random.default_rng(303)
    worst_dev = worst_sol = 0.0
    deficient = 0
    for k in range(100):
        m, n = (int(v) for v in rng.integers(1, 41, size=2))
        if k % 2:
            r = int(rng.integers(0, min(m, n) + 1))
            a = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
            deficient += r < min(m, n)
        else:
            a = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        op = FiniteOperator(a.astype(complex))
        worst_dev = max(worst_dev, max(mp_deviations(op).values()))
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        x = least_squares_min_norm(op, y).solution
        worst_sol = max(worst_sol, np.linalg.norm(x - _carrier_oracle(op.entries, y)) / max(1.0, np.linalg.norm(x)))
    verdict["detail"] = (f"max MP deviation {worst_dev:.2e}, min-norm solution vs carrier oracle {worst_sol:.2e}, "
                         f"{deficient} rank-deficient")
    assert deficient >= 20
    assert worst_dev <= 1e-9
    assert worst_sol <= 1e-8


@pytest.mark.criterion("4 kernel counterexample regression")
def test_counterexample_regression(verdict):
    with_kernel = D("n", null_dim=INFINITE)
    without = D("n")
    ess_k = spectrum_report(bounded_transform(with_kernel)).essential
    ess_0 = spectrum_report(bounded_transform(without)).essential
    v_k, v_0 = classify_am(with_kernel).verdict, classify_am(without).verdict
    verdict["detail"] = f"null_dim=inf: {v_k.value}, ess(Z)={set(ess_k)}; null_dim=0: {v_0.value}, ess(Z)={set(ess_0)}"
    assert v_k is Verdict.NOT_AM
    assert sp.FiniteSet(*ess_k) == sp.FiniteSet(0, 1)
    assert v_0 is Verdict.AM
    assert sp.FiniteSet(*ess_0) == sp.FiniteSet(1)


@pytest.mark.criterion("5 equivalence chain on the corpus")
def test_equivalence_chain(verdict):
    inconsistent = []
    seen = set()
    for name, model in sorted(CORPUS.items()):
        try:
            chain = equivalence_chain_check(model)
        except StructureError:
            # not positive: AM depends only on |T|
            chain = equivalence_chain_check(modulus(model))
            assert chain.verdicts["T"] is classify_am(model).verdict
        seen.add(chain.verdicts["T"])
        if not chain.consistent:
            inconsistent.append(name)
    verdict["detail"] = f"{len(CORPUS)} models ({len(DIAGONAL)} diagonal), {len(inconsistent)} inconsistencies"
    assert len(DIAGONAL) >= 10
    assert {Verdict.AM, Verdict.NOT_AM} <= seen
    assert inconsistent == []


@pytest.mark.criterion("6 spectral synthesis on truncations")
def test_spectral_synthesis(verdict):
    rng = np.random.default_rng(606)
    worst = worst_conj = 0.0
    for model in DIAGONAL.values():
        for n in range(4, 65):
            for conjugate in (False, True):
                op = materialize(model, n, conjugate=conjugate, seed=n)
                data = spectral_data(op)
                scale = 1.0 if not conjugate else max(1.0, np.linalg.norm(op.entries, 2))
                for _ in range(20):
                    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                    x /= np.linalg.norm(x)
                    err = np.linalg.norm(spectral_synthesize(data, x) - op.entries @ x) / scale
                    if conjugate:
                        worst_conj = max(worst_conj, err)
                    else:
                        worst = max(worst, err)
    verdict["detail"] = f"sections: max abs error {worst:.2e}; conjugated sections: max error / ||T|| {worst_conj:.2e}"
    assert worst <= 1e-10
    assert worst_conj <= 1e-10


@pytest.mark.criterion("7 resolvent of AM models")
def test_resolvent(verdict):
    rng = np.random.default_rng(707)
    models = [m for m in DIAGONAL.values()
              if classify_am(m).verdict is Verdict.AM and classify_am(m).route == "unbounded"]
    worst = 0.0
    for model in models:
        for _ in range(10):
            lam = complex(rng.uniform(-20, 20), rng.choice([-1, 1]) * rng.uniform(0.25, 5))
            sample = resolvent(model, lam)
            assert sample.coefficient_decay and sample.certified
            # symbolic certificate: every coefficient branch of the resolvent tends to 0
            for part in sample.inverse.formula_parts:
                assert all(br.abs_limit == 0 for br in analyze(part.formula).branches)
            for n in (8, 32, 64):
                t = materialize(model, n).entries
                r = materialize(sample.inverse, n).entries
                worst = max(worst, np.linalg.norm((t - lam * np.eye(n)) @ r - np.eye(n), 2))
    verdict["detail"] = f"{len(models)} unbounded AM models x 10 lambda, max ||(T - lam)R - I|| {worst:.2e}"
    assert len(models) >= 5
    assert worst <= 1e-9


@pytest.mark.criterion("8 inf = min on subsets")
def test_inf_equals_min_on_subsets(verdict):
    rng = np.random.default_rng(808)
    model = D("n")
    kinds = {"finite": 0, "cofinite": 0, "progression": 0}
    for k in range(50):
        pattern = ("finite", "cofinite", "progression")[k % 3]
        kinds[pattern] += 1
        if pattern == "finite":
            chosen = {int(v) for v in rng.integers(1, 500, size=int(rng.integers(1, 20)))}
            subset = FiniteIndexSet(frozenset(chosen))
            brute = min(chosen)
        elif pattern == "cofinite":
            excluded = {int(v) for v in rng.integers(1, 30, size=int(rng.integers(0, 25)))}
            subset = CofiniteIndexSet(frozenset(excluded))
            brute = min(n for n in range(1, 1000) if n not in excluded)
        else:
            start, step = (int(v) for v in rng.integers(1, 40, size=2))
            subset = ProgressionIndexSet(start, step)
            brute = start
        result = minimum_modulus_attained(model, subset)
        assert attainment(result) is Attainment.ATTAINED, (pattern, result)
        assert result.value == brute
    not_attained = attainment(minimum_modulus_attained(D("1+1/n")))
    verdict["detail"] = f"50 subsets {kinds}; 1+1/n on all indices: {not_attained.value}"
    assert not_attained is Attainment.NOT_ATTAINED


_UNITARY_INVARIANT = ("znorm", "min_modulus", "attain", "reciprocal_decay")


@pytest.mark.criterion("9 conjugation invariance")
def test_conjugation_invariance(verdict):
    worst = 0.0
    failed = []
    for name, model in sorted(DIAGONAL.items()):
        plain = {r.check_id: r for r in run_suite(model, TruncationPlan(seed=9))}
        conj = {r.check_id: r for r in run_suite(model, TruncationPlan(seed=9, conjugate=True))}
        failed += [f"{name}:{k}" for k, r in conj.items() if not r.passed]
        for key in _UNITARY_INVARIANT:
            for a, b in zip(plain[key].values, conj[key].values):
                worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    verdict["detail"] = f"max relative gap {worst:.2e}, {len(failed)} failing conjugated checks"
    assert failed == []
    assert worst <= 1e-9


@pytest.mark.criterion("10 determinism")
def test_determinism(verdict, tmp_path):
    commands = [
        ["classify", str(corpus.path("kernel_counterexample.spec"))],
        ["verify", str(corpus.path("squares_kernel2.spec")), "--conjugate", "--seed", "11"],
        ["solve", str(corpus.path("rank_deficient.spec")), str(corpus.path("rank_deficient.rhs"))],
    ]
    for k, argv in enumerate(commands):
        outputs = []
        for run in range(2):
            out = tmp_path / f"{k}_{run}.json"
            subprocess.run([sys.executable, "-m", "amop", *argv, "-o", str(out)], check=False,
                           capture_output=True)
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1], argv[0]
    verdict["detail"] = f"{len(commands)} commands, two processes each, byte-identical"
