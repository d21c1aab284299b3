"""Minimum-attaining analysis of closed operators on finite and diagonal models."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    INFINITE,
    DiagonalModel,
    Field,
    FiniteOperator,
    Structure,
    direct_sum,
    validate,
)
from .formula import parse_formula  # noqa: E402
from .classify import Verdict, classify_am, spectrum_report  # noqa: E402
from .specfile import load_spec  # noqa: E402

__all__ = [
    "INFINITE", "DiagonalModel", "Field", "FiniteOperator", "Structure", "direct_sum",
    "Verdict", "classify_am", "load_spec", "parse_formula", "spectrum_report", "validate",
]
