"""Second-order solvers with stationarity certificates for
nonconvex-strongly-concave minimax problems, plus a benchmark CLI."""

from .drivers import (
    IterationRecord,
    SolverConfig,
    SolverRun,
    StationarityReport,
    certify,
    evaluate_primal,
    run_gda,
    run_grtr,
    run_lmnegcur,
    run_minimax_tr,
)
from .inner import InnerConfig, InnerResult, ascend, schedule_N
from .oracle import (
    DerivedConstants,
    MinimaxProblem,
    OracleEval,
    assemble_reduced_hessian,
    validate_derivatives,
)
from .problems import (
    SaddleChainParams,
    classify_region,
    quadratic_problem,
    saddle_chain_problem,
)
from .trsub import EigPair, TRProblem, TRSolution, min_eigpair, solve_tr_cg, solve_tr_exact

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "EigPair",
    "InnerConfig",
    "InnerResult",
    "IterationRecord",
    "MinimaxProblem",
    "OracleEval",
    "SaddleChainParams",
    "SolverConfig",
    "SolverRun",
    "StationarityReport",
    "TRProblem",
    "TRSolution",
    "ascend",
    "assemble_reduced_hessian",
    "certify",
    "classify_region",
    "evaluate_primal",
    "min_eigpair",
    "quadratic_problem",
    "run_gda",
    "run_grtr",
    "run_lmnegcur",
    "run_minimax_tr",
    "saddle_chain_problem",
    "schedule_N",
    "solve_tr_cg",
    "solve_tr_exact",
    "validate_derivatives",
]
