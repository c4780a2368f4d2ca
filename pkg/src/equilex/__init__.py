"""Equilateral sets in smooth finite-dimensional normed spaces.

The pipeline stabilizes a decaying sequence by tail limits
(:mod:`equilex.stabilizer`), then adds points one at a time by solving a
small nonlinear system with a guarded Newton iteration
(:mod:`equilex.builder`, :mod:`equilex.newton`), gating each Jacobian
through a uniformly invertible matrix class (:mod:`equilex.gate`).
"""

from .builder import BuildSettings, EquilateralSet, build, construct
from .config import RunConfig, parse_config
from .errors import (
    ConfigError,
    DivisionGuard,
    EquilexError,
    ExhaustedPool,
    GuardFailed,
    InvariantViolation,
    LambdaTooSmall,
    LeftDomain,
    NonStabilizing,
    SingularMatrix,
)
from .gate import eps_schedule, in_class, inverse_norm_check
from .newton import DifferentiableMap, guard_check, solve
from .norms import CustomNorm, LpNorm, modulus_of_smoothness, support_functional
from .sources import SequenceSource, perturbed_basis, unit_basis
from .stabilizer import stabilize
from .tails import TailPolicy, tail_limit

__version__ = "0.1.0"

__all__ = [
    "BuildSettings",
    "ConfigError",
    "CustomNorm",
    "DifferentiableMap",
    "DivisionGuard",
    "EquilateralSet",
    "EquilexError",
    "ExhaustedPool",
    "GuardFailed",
    "InvariantViolation",
    "LambdaTooSmall",
    "LeftDomain",
    "LpNorm",
    "NonStabilizing",
    "RunConfig",
    "SequenceSource",
    "SingularMatrix",
    "TailPolicy",
    "build",
    "construct",
    "eps_schedule",
    "guard_check",
    "in_class",
    "inverse_norm_check",
    "modulus_of_smoothness",
    "parse_config",
    "perturbed_basis",
    "solve",
    "stabilize",
    "support_functional",
    "tail_limit",
    "unit_basis",
]
