import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amop import corpus
from amop.core import INFINITE, DiagonalModel, Field, FiniteOperator
from amop.specfile import SpecError, format_complex, load_spec, parse_complex, read_spec, read_vector


def write(tmp_path, text, name="t.spec"):
    path = tmp_path / name
    path.write_text(text)
    return path


@pytest.mark.parametrize("token, value", [
    ("3", 3), ("-2.5", -2.5), ("i", 1j), ("-i", -1j), ("2i", 2j), ("1-i", 1 - 1j),
    ("1e-3-4i", 1e-3 - 4j), (".5+.25i", 0.5 + 0.25j), ("+7", 7),
])
def test_parse_complex(token, value):
    assert parse_complex(token) == value


@pytest.mark.parametrize("token", ["", "abc", "1+", "1++2i", "i2", "1e"])
def test_parse_complex_rejects(token):
    with pytest.raises(SpecError):
        parse_complex(token)


@given(st.complex_numbers(allow_nan=False, allow_infinity=False))
def test_format_complex_round_trip(z):
    assert parse_complex(format_complex(z)) == z


def test_matrix_block(tmp_path):
    op = load_spec(write(tmp_path, "name = m\nkind = matrix\nmatrix =\n    1, 2i\n    0, 3  # trailing\n"))
    assert isinstance(op, FiniteOperator)
    np.testing.assert_array_equal(op.entries, [[1, 2j], [0, 3]])


def test_inline_matrix(tmp_path):
    op = load_spec(write(tmp_path, "kind = matrix\nmatrix = 1, 0; 0, 2\n"))
    np.testing.assert_array_equal(op.entries, np.diag([1, 2]))


def test_diagonal_spec(tmp_path):
    model = load_spec(write(tmp_path, "name = c\nformula = n^2\nmultiplicity = 2\nnull_dim = inf\n"))
    assert isinstance(model, DiagonalModel)
    assert model.null_dim == INFINITE
    assert model.field is Field.REAL


def test_explicit_eigenvalues(tmp_path):
    model = load_spec(write(tmp_path, "eigenvalues = 1, 2, 5\nmultiplicities = 1, 2, 1\nnull_dim = 3\n"))
    assert model.dimension == 3 + 4


def test_json_spec(tmp_path):
    path = write(tmp_path, json.dumps({"formula": "n*i^n", "field": "complex"}), "t.json")
    assert load_spec(path).field is Field.COMPLEX


def test_corpus_loads():
    for path in corpus.spec_paths():
        load_spec(path)


def test_echo_is_normalised(tmp_path):
    spec = read_spec(write(tmp_path, "name = x\nformula = n\nnull_dim = inf\n"))
    assert spec.echo() == {"formula": "n", "kind": "diagonal", "name": "x", "null_dim": "inf"}


@pytest.mark.parametrize("text, where", [
    ("formula = n\nformula = n\n", "formula"),
    ("bogus = 1\n", "line 1"),
    ("just text\n", "line 1"),
    ("null_dim = 3\n", "formula"),
    ("formula = n\nmatrix = 1\n", "formula"),
    ("formula = n +\n", "formula"),
    ("formula = n\nmultiplicity = 0\n", "multiplicity"),
    ("formula = n\nmultiplicity = (\n", "multiplicity"),
    ("formula = n\nnull_dim = -1\n", "null_dim"),
    ("formula = n\nfield = quaternion\n", "field"),
    ("formula = i*n\nfield = real\n", "field"),
    ("formula = 1/(n-2)\n", "formula"),
    ("kind = matrix\nmatrix = 1, 2; 3\n", "matrix"),
    ("kind = matrix\nmatrix = 1, x\n", "matrix[0][1]"),
    ("kind = matrix\nstructure = self_adjoint\nmatrix = 1, 2; 0, 1\n", "structure"),
    ("kind = diagonal\nmatrix = 1\n", "kind"),
    ("kind = other\nformula = n\n", "kind"),
])
def test_spec_errors_name_the_field(tmp_path, text, where):
    with pytest.raises(SpecError) as exc:
        load_spec(write(tmp_path, text))
    assert exc.value.path == where


def test_read_vector(tmp_path):
    path = write(tmp_path, "1, 2\n3i # comment\n", "v.rhs")
    np.testing.assert_array_equal(read_vector(path), [1, 2, 3j])
    with pytest.raises(SpecError):
        read_vector(write(tmp_path, "# nothing\n", "e.rhs"))
