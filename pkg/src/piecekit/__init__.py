"""Piecewise functions built from elementary formulas, adaptive fitting, and
quadrature-free moments and Hilbert transforms."""

from .catalog import (FORMULAS, ISRS, LOG, PLS, POLY, SQRT, TAIL, XLOG, Formula,
                      check_constraint, formula_eval, get_formula, moment_primitive,
                      reflect_params, register_formula, scale_params)
from .core import (Parity, Piece, PiecewiseFunction, Term, add, constructor_text,
                   deserialize, scale, serialize, unfold)
from .dilog import dilog
from .errors import *  # noqa: F401,F403
from .fitting import Candidate, FitConfig, FitReport, fit_interval, piecewisefit
from .hilbert import (REGISTRY, KernelRegistry, hilbert, moments, register_kernel,
                      transform)
from .quadrature import QuadResult, integrate

__version__ = "0.1.0"
