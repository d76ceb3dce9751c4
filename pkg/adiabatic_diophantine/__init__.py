"""
adiabatic-diophantine simulates adiabatic ground-state search for
Diophantine equations on a truncated Fock space
"""
__version__ = "0.1.0.dev0"

from .diophantine import (  # noqa: F401
    BruteForceResult,
    EvaluationPoint,
    Polynomial,
    brute_force_minimum,
    evaluate,
    evaluate_squared,
    parse_polynomial,
)
from .evolution import Schedule, Trajectory, WaveFunction, evolve  # noqa: F401
from .fock import (  # noqa: F401
    FockBasis,
    HermitianOperator,
    build_basis,
    build_initial_hamiltonian,
    build_problem_hamiltonian,
    interpolate,
    spectral_decomposition,
)
from .measurement import (  # noqa: F401
    Distribution,
    MatchVerdict,
    ShotRecord,
    born_distribution,
    match_verdict,
    sample,
    total_variation,
)
from .verification import (  # noqa: F401
    Decision,
    DecisionKind,
    RunConfig,
    VerificationReport,
    cutoff_sweep,
    decide,
    identify_ground_state,
)
