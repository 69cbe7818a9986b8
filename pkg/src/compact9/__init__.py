"""Sixth-order compact 9-point scheme for ``-eps Δu + a u_x + b u_y = f`` on the unit square."""

from .assembly import (AssemblyError, GridFunction, Mesh, ProblemSpec, SparseSystem,
                       apply_operator, apply_stencil, assemble, build_mesh,
                       read_grid, write_grid)
from .field import (DifferentiableField2D, EvaluationError, ParseError, as_field,
                    differentiate, evaluate, manufactured_source, parse)
from .solver import (ConvergenceError, Method, SolveReport, SolverError,
                     auto_method, residual_norm, solve)
from .stencil import (CaseTag, CompactStencil, DomainError, ScaledCoefficients,
                      StencilTable, build_table, collapse, compute_r, rhs_value,
                      select_case)
from .verify import (ConvergenceReport, StructureReport, comparison_bound,
                     load_report, mms_study, richardson_study, structure_sweep,
                     truncation_study, verify_all)

__all__ = [
    "AssemblyError", "CaseTag", "CompactStencil", "ConvergenceError",
    "ConvergenceReport", "DifferentiableField2D", "DomainError", "EvaluationError",
    "GridFunction", "Mesh", "Method", "ParseError", "ProblemSpec",
    "ScaledCoefficients", "SolveReport", "SolverError", "SparseSystem",
    "StencilTable", "StructureReport", "apply_operator", "apply_stencil",
    "as_field", "assemble", "auto_method", "build_mesh", "build_table",
    "collapse", "comparison_bound", "compute_r", "differentiate", "evaluate",
    "load_report", "manufactured_source", "mms_study", "parse", "read_grid",
    "residual_norm", "rhs_value", "richardson_study", "select_case", "solve",
    "structure_sweep", "truncation_study", "verify_all", "write_grid",
]
