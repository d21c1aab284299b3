import numpy as np
import pytest
from hypothesis import given, strategies as st

from amop import corpus
from amop.core import INFINITE, DiagonalModel, Structure
from amop.specfile import load_spec
from amop.truncation import (
    CHECKS, ConfigError, RangeError, TruncationPlan, diagonal_entries, materialize, random_unitary,
    run_suite,
)

D = DiagonalModel.from_formula
DIAGONAL_SPECS = [p.name for p in corpus.spec_paths() if p.name not in ("nilpotent.spec", "rank_deficient.spec")]


@pytest.mark.parametrize("kwargs", [
    {"sizes": ()},
    {"sizes": (0, 4)},
    {"sizes": (8, 4)},
    {"sizes": (4, 4)},
    {"checks": ("mp_axioms", "nonsense")},
])
def test_plan_rejects_bad_config(kwargs):
    with pytest.raises(ConfigError):
        TruncationPlan(**kwargs)


def test_plan_defaults():
    plan = TruncationPlan()
    assert plan.sizes == (4, 8, 16, 32, 64)
    assert set(plan.checks) == set(CHECKS)


def test_materialize_examples():
    np.testing.assert_allclose(materialize(D("n"), 3).entries, np.diag([1, 2, 3]))
    np.testing.assert_allclose(materialize(D("n", null_dim=2), 4).entries, np.diag([0, 0, 1, 2]))
    np.testing.assert_allclose(diagonal_entries(D("n", multiplicity="n"), 6), [1, 2, 2, 3, 3, 3])
    conj = materialize(D("n"), 3, conjugate=True, seed=7)
    assert conj.structure is Structure.SELF_ADJOINT
    np.testing.assert_allclose(np.linalg.eigvalsh(conj.entries), [1, 2, 3], atol=1e-12)


def test_infinite_kernel_is_interleaved():
    np.testing.assert_allclose(diagonal_entries(D("n", null_dim=INFINITE), 6), [0, 1, 0, 2, 0, 3])
    # a finite-rank model with an infinite kernel still fills every size
    model = DiagonalModel.from_values([1, 2, 5], null_dim=INFINITE)
    np.testing.assert_allclose(diagonal_entries(model, 5), [1, 2, 5, 0, 0])


def test_range_error_on_finite_model():
    with pytest.raises(RangeError):
        materialize(DiagonalModel.from_values([1, 2]), 4)


def test_complex_model_is_normal():
    op = materialize(D("n*i^n"), 4, conjugate=True, seed=1)
    assert op.structure is Structure.NORMAL
    a = op.entries
    np.testing.assert_allclose(a @ a.conj().T, a.conj().T @ a, atol=1e-10)


@given(st.integers(1, 40), st.integers(0, 2**31))
def test_random_unitary_is_unitary(n, seed):
    u = random_unitary(n, seed)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-12)
    np.testing.assert_array_equal(u, random_unitary(n, seed))


def test_suite_is_deterministic():
    plan = TruncationPlan(sizes=(4, 8, 16), seed=3, conjugate=True)
    a = run_suite(D("n^2"), plan)
    b = run_suite(D("n^2"), plan)
    assert a == b


@pytest.mark.parametrize("conjugate", [False, True])
@pytest.mark.parametrize("name", DIAGONAL_SPECS)
def test_suite_passes_on_corpus(name, conjugate):
    records = run_suite(load_spec(corpus.path(name)), TruncationPlan(conjugate=conjugate))
    assert [r.check_id for r in records if not r.passed] == []


def test_znorm_increases_towards_one():
    rec = {r.check_id: r for r in run_suite(D("n"))}["znorm"]
    assert rec.prediction == 1.0
    assert all(b >= a for a, b in zip(rec.values, rec.values[1:]))
    np.testing.assert_allclose(rec.values[-1], 64 / np.sqrt(1 + 64**2), rtol=1e-12)


def test_reciprocal_decay_shrinks():
    rec = {r.check_id: r for r in run_suite(D("n^2"))}["reciprocal_decay"]
    assert rec.prediction == 0.0
    assert all(b <= a for a, b in zip(rec.values, rec.values[1:]))
    np.testing.assert_allclose(rec.values, [1 / n**2 for n in rec.sizes], rtol=1e-9)


def test_min_modulus_values_read_off_the_diagonal():
    rec = {r.check_id: r for r in run_suite(D("1+1/n"))}["min_modulus"]
    np.testing.assert_allclose(rec.values, [1 + 1 / n for n in rec.sizes], rtol=1e-12)
