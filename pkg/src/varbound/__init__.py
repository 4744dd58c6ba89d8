"""Certified state-independent lower bounds for variance sums.

Given two measurements (projective or generalized) the solver computes the
best constant c with var_A + var_B >= c for every state, as a certified
interval [c_lower, c_upper], by outer polytope approximation of the convex
set of joint expectations.  On top of that sit weighted bounds, uncertainty
region traces, and entanglement witnesses for collective observables.
"""

from .bound_solver import (BoundResult, SolveStatus, StepRecord, optimal_bound,
                           oracle_grid, oracle_grid_error_bound, seesaw)
from .eigensolver import (EigenResult, ExpectationTriple, expectation_triple,
                          lowest_eigenpair)
from .entanglement import (RegionSample, UncertaintyRegion, WitnessReport,
                           evaluate_witness, global_bound, noise_sweep,
                           region_trace, separable_bound, weighted_bound)
from .errors import (AlphaOutOfRange, CertificateError, ConvergenceFailure,
                     DimensionMismatch, EmptyBox, EmptyPolytope, InvalidPovm,
                     InvalidSpin, NotHermitian, NotNormalized, NotSquare,
                     NumericalFailure, ProblemFileError, ThetaOutOfRange,
                     VarBoundError)
from .operators import (HermitianOperator, MomentPair, Povm, build_H,
                        depolarize, hermitian_from_matrix,
                        moment_pair_from_observable, moment_pair_from_povm,
                        scale, spin_component, sum_observable)
from .polytope import HalfSpace, Polytope3, init_box, min_mu_vertex, mu_value

__version__ = "0.1.0"

__all__ = [
    "AlphaOutOfRange", "BoundResult", "CertificateError", "ConvergenceFailure",
    "DimensionMismatch", "EigenResult", "EmptyBox", "EmptyPolytope",
    "ExpectationTriple", "HalfSpace", "HermitianOperator", "InvalidPovm",
    "InvalidSpin", "MomentPair", "NotHermitian", "NotNormalized", "NotSquare",
    "NumericalFailure", "Polytope3", "Povm", "ProblemFileError", "RegionSample",
    "SolveStatus", "StepRecord", "ThetaOutOfRange", "UncertaintyRegion",
    "VarBoundError", "WitnessReport", "build_H", "depolarize",
    "evaluate_witness", "expectation_triple", "global_bound",
    "hermitian_from_matrix", "init_box", "lowest_eigenpair", "min_mu_vertex",
    "moment_pair_from_observable", "moment_pair_from_povm", "mu_value",
    "noise_sweep", "optimal_bound", "oracle_grid", "oracle_grid_error_bound",
    "region_trace", "scale", "seesaw", "separable_bound", "spin_component",
    "sum_observable", "weighted_bound",
]
