"""Dense simulation of a two-stage qudit algorithm for polynomial integer programs."""
from .amplification import UndecidableError, amplify, detect_undecidable
from .distillation import build_entangler, build_entanglers
from .optimizer import DegenerateObjectiveError, SolveReport, solve
from .oracles import branch_and_bound_solve, brute_force_solve
from .problem import IpProblem, parse_problem

__all__ = [
    "DegenerateObjectiveError",
    "IpProblem",
    "SolveReport",
    "UndecidableError",
    "amplify",
    "branch_and_bound_solve",
    "brute_force_solve",
    "build_entangler",
    "build_entanglers",
    "detect_undecidable",
    "parse_problem",
    "solve",
]
