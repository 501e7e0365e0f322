"""Calculus of variations on finite time scales.

Exact delta calculus on finite grids (:mod:`tsvar.timescale`), symbolic
integrands (:mod:`tsvar.expr`), isoperimetric problems with Euler-Lagrange
certification (:mod:`tsvar.variational`) and Sturm-Liouville eigenproblems
(:mod:`tsvar.sturm`).
"""
from .errors import (DegenerateScale, DomainError, EvalDomain, InvalidSpec,
                     NumericalFailure, ParseError)
from .expr import Expr, diff, parse, simplify
from .kernels import BACKEND
from .sturm import EigenResult, SLProblem, assemble, residual_check, solve_eigs, verify_rayleigh_minimum
from .timescale import (GridFunction, Interval, Points, TimeScale, build, cumulative_integral,
                        delta_derivative, delta_integral)
from .variational import (IsoProblem, SolveReport, SolverOptions, dr_deviation, el_residual,
                          eval_functional, is_extremal_of_I, solve_iso)

__version__ = "0.1.0"
