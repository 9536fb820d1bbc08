"""Dissipative simulation of Lindbladians through strongly damped ancillas."""
from .effective import effective_generator, effective_generator_generic, gks_decompose, prop3_closed_form
from .experiments import error_curve, hierarchy_iterate, leakage_check, regression_scenarios, sweep_T
from .hilbert import HilbertSpace, boson, collective_spin, embed, pauli
from .numerics import DEFAULT_TOLERANCES, NumericError, Tolerances
from .protocol import builtin, compile_target, scale
from .spectral import analyze, analyze_product
from .superop import LindbladSpec, dissipator, hamiltonian_superop, liouvillian

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLERANCES",
    "HilbertSpace",
    "LindbladSpec",
    "NumericError",
    "Tolerances",
    "analyze",
    "analyze_product",
    "boson",
    "builtin",
    "collective_spin",
    "compile_target",
    "dissipator",
    "effective_generator",
    "effective_generator_generic",
    "embed",
    "error_curve",
    "gks_decompose",
    "hamiltonian_superop",
    "hierarchy_iterate",
    "leakage_check",
    "liouvillian",
    "pauli",
    "prop3_closed_form",
    "regression_scenarios",
    "scale",
    "sweep_T",
]
