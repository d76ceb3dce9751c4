"""
This module runs the ground-state identification protocol and turns it
into a decision about the Diophantine equation.

# PROTOCOL

For every evolution time T in the configured list:

1. evolve the ground state of H_I to s = 1 over time T,
2. compute the calculated (Born) distribution of the final state,
3. sample ``shots`` number-basis measurements with seed_T,
4. match calculated against measured,
5. tag every measured index with its exact energy D(n)^2. The candidate
   is the set of measured indices at the lowest measured energy. It is
   dominant when the lower Clopper-Pearson bound of its measured
   frequency exceeds theta.

The ground space is identified when, for the two largest T, the match
passes, the candidate is dominant, and candidate set and energy agree.
The candidate energy must also equal the calculated ground energy of the
truncated H_P.

# DECISION

- HAS_SOLUTION: identified at energy 0; the witnesses are the candidate
  tuples, each re-checked by exact substitution.
- NO_SOLUTION_WITHIN_CUTOFF: identified at a positive energy. This only
  speaks for the box [0, N]^k.
- INCONCLUSIVE: anything else, with a reason code.

seed_T is the first 8 bytes (big-endian) of sha256(f"{seed}:{T!r}") with T
a float.

Every key of :meth:`VerificationReport.to_dict` is listed in README.rst
under "Verification report".
"""
import dataclasses
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats

from .diophantine import (
    EvaluationPoint,
    Polynomial,
    brute_force_minimum,
    evaluate,
)
from .evolution import Schedule, WaveFunction, evolve
from .exceptions import GuardExceededError, IntegrationError, WitnessError
from .fock import (
    FockBasis,
    HermitianOperator,
    build_initial_hamiltonian,
    build_problem_hamiltonian,
    spectral_decomposition,
)
from .measurement import (
    VALID_STATISTICS,
    Distribution,
    MatchVerdict,
    ShotRecord,
    born_distribution,
    match_verdict,
    sample,
)

logger = logging.getLogger(__name__)

SCHEMA = "adiabatic-diophantine/verification-report/1"
STABILITY_RULE = "largest-two-T"


def doubling_times(t_max: float) -> Tuple[float, ...]:
    """1, 2, 4, ... up to and including ``t_max``."""
    if t_max <= 0:
        raise ValueError(f"Invalid maximum time {t_max}. It must be > 0.")
    times: List[float] = []
    total_time = 1.0
    while total_time < t_max:
        times.append(total_time)
        total_time *= 2.0
    times.append(float(t_max))
    return tuple(times)


DEFAULT_T_LIST = doubling_times(512)


def derive_seed(seed: int, total_time: float) -> int:
    """Per-T seed: first 8 bytes of sha256(f"{seed}:{T!r}"), big-endian."""
    digest = hashlib.sha256(f"{seed}:{float(total_time)!r}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def clopper_pearson_lower(hits: int, trials: int, alpha: float) -> float:
    """One-sided lower confidence bound (level 1 - alpha) of a binomial rate."""
    if hits <= 0:
        return 0.0
    return float(scipy.stats.beta.ppf(alpha, hits, trials - hits + 1))


class DecisionKind(str, Enum):
    HAS_SOLUTION = "HAS_SOLUTION"
    NO_SOLUTION_WITHIN_CUTOFF = "NO_SOLUTION_WITHIN_CUTOFF"
    INCONCLUSIVE = "INCONCLUSIVE"


class InconclusiveReason(str, Enum):
    MATCH_FAILED = "match-failed"
    NOT_DOMINANT = "not-dominant"
    UNSTABLE = "unstable-across-T"
    GUARD_EXCEEDED = "guard-exceeded"


@dataclass(frozen=True)
class Decision:
    """The answer for one instance and cutoff."""

    kind: DecisionKind
    witnesses: Tuple[EvaluationPoint, ...] = ()
    min_value: Optional[int] = None
    argmin: Tuple[EvaluationPoint, ...] = ()
    reason: Optional[InconclusiveReason] = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.kind is DecisionKind.HAS_SOLUTION and not self.witnesses:
            raise ValueError("HAS_SOLUTION needs at least one witness.")
        if self.kind is DecisionKind.NO_SOLUTION_WITHIN_CUTOFF and not (
            self.min_value is not None and self.min_value > 0
        ):
            raise ValueError("NO_SOLUTION_WITHIN_CUTOFF needs a positive min_value.")
        if self.kind is DecisionKind.INCONCLUSIVE and self.reason is None:
            raise ValueError("INCONCLUSIVE needs a reason.")

    def __str__(self) -> str:
        if self.kind is DecisionKind.HAS_SOLUTION:
            return f"{self.kind.value}({', '.join(map(str, self.witnesses))})"
        if self.kind is DecisionKind.NO_SOLUTION_WITHIN_CUTOFF:
            points = ", ".join(map(str, self.argmin))
            return f"{self.kind.value}({self.min_value}, [{points}])"
        assert self.reason is not None
        return f"{self.kind.value}({self.reason.value})"

    @classmethod
    def has_solution(cls, witnesses: Sequence[EvaluationPoint]) -> "Decision":
        return cls(DecisionKind.HAS_SOLUTION, witnesses=tuple(witnesses))

    @classmethod
    def no_solution(
        cls, min_value: int, argmin: Sequence[EvaluationPoint]
    ) -> "Decision":
        return cls(
            DecisionKind.NO_SOLUTION_WITHIN_CUTOFF,
            min_value=min_value,
            argmin=tuple(argmin),
        )

    @classmethod
    def inconclusive(cls, reason: InconclusiveReason, detail: str = "") -> "Decision":
        return cls(DecisionKind.INCONCLUSIVE, reason=reason, detail=detail)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "witnesses": [point.to_list() for point in self.witnesses],
            "min_value": self.min_value,
            "argmin": [point.to_list() for point in self.argmin],
            "reason": None if self.reason is None else self.reason.value,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one identification run."""

    polynomial: Polynomial
    cutoff: int
    alpha: Optional[Tuple[complex, ...]] = None
    t_list: Tuple[float, ...] = DEFAULT_T_LIST
    steps_per_time: float = 40.0
    shots: int = 100_000
    seed: int = 42
    theta: float = 0.5
    match_constant: float = 2.0
    statistic: str = "tv"
    profile: str = "linear"
    dominance_alpha: float = 1e-3
    degeneracy_tol: Optional[float] = None
    max_workers: int = 1

    def __post_init__(self) -> None:
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise ValueError(f"Invalid cutoff {self.cutoff}. It must be >= 0.")
        t_list = tuple(float(total_time) for total_time in self.t_list)
        if not t_list:
            raise ValueError("t_list must not be empty.")
        if any(total_time <= 0 for total_time in t_list):
            raise ValueError(f"Evolution times must be > 0: {t_list}")
        if any(later <= earlier for earlier, later in zip(t_list, t_list[1:])):
            raise ValueError(f"t_list must be strictly increasing: {t_list}")
        object.__setattr__(self, "t_list", t_list)
        if self.alpha is not None:
            alpha = tuple(complex(value) for value in self.alpha)
            if len(alpha) != self.polynomial.modes:
                raise ValueError(
                    f"Got {len(alpha)} alpha values for "
                    f"{self.polynomial.modes} variables."
                )
            object.__setattr__(self, "alpha", alpha)
        if not 0 < self.theta < 1:
            raise ValueError(f"Invalid theta {self.theta}. It must be in (0, 1).")
        if self.shots < 100:
            raise ValueError(f"Invalid shots {self.shots}. It must be >= 100.")
        if self.steps_per_time <= 0:
            raise ValueError(
                f"Invalid steps per time {self.steps_per_time}. It must be > 0."
            )
        if self.match_constant <= 0:
            raise ValueError(f"Invalid match constant {self.match_constant}.")
        if self.statistic not in VALID_STATISTICS:
            raise ValueError(
                f"Invalid statistic {self.statistic}. "
                f"Only {VALID_STATISTICS} are allowed."
            )
        if not 0 < self.dominance_alpha < 1:
            raise ValueError(f"Invalid dominance alpha {self.dominance_alpha}.")
        if self.max_workers < 1:
            raise ValueError(f"Invalid max workers {self.max_workers}.")

    def with_cutoff(self, cutoff: int) -> "RunConfig":
        return dataclasses.replace(self, cutoff=cutoff)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cutoff": self.cutoff,
            "alpha": None
            if self.alpha is None
            else [[value.real, value.imag] for value in self.alpha],
            "t_list": list(self.t_list),
            "steps_per_time": self.steps_per_time,
            "shots": self.shots,
            "seed": self.seed,
            "theta": self.theta,
            "match_constant": self.match_constant,
            "statistic": self.statistic,
            "profile": self.profile,
            "dominance_alpha": self.dominance_alpha,
            "degeneracy_tol": self.degeneracy_tol,
        }


@dataclass(frozen=True)
class TimeRecord:
    """Everything observed for one evolution time."""

    total_time: float
    steps: int
    seed: int
    calculated: Distribution
    measured: ShotRecord
    verdict: MatchVerdict
    dominant_indices: Tuple[int, ...]
    dominant_probability: float
    dominant_lower_bound: float
    dominant_energy: int
    is_dominant: bool
    final_ground_population: float

    def to_dict(self, basis: FockBasis) -> Dict[str, Any]:
        return {
            "T": self.total_time,
            "steps": self.steps,
            "seed": self.seed,
            "calculated": self.calculated.to_dict(),
            "measured": self.measured.to_dict(),
            "match": self.verdict.to_dict(),
            "dominant": {
                "indices": list(self.dominant_indices),
                "tuples": [list(basis.tuple_of(i)) for i in self.dominant_indices],
                "probability": self.dominant_probability,
                "lower_bound": self.dominant_lower_bound,
                "energy": self.dominant_energy,
                "is_dominant": self.is_dominant,
            },
            "final_ground_population": self.final_ground_population,
        }


@dataclass
class VerificationReport:
    """The record of one identification run and its decision."""

    config: RunConfig
    basis: FockBasis
    records: List[TimeRecord]
    identified: Optional[Tuple[int, ...]]
    min_energy_observed: Optional[int]
    calculated_ground_energy: int
    decision: Decision
    caveats: Tuple[str, ...] = ()
    failures: Dict[float, str] = field(default_factory=dict)
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    @property
    def identified_tuples(self) -> Optional[List[Tuple[int, ...]]]:
        if self.identified is None:
            return None
        return [self.basis.tuple_of(index) for index in self.identified]

    def to_dict(self) -> Dict[str, Any]:
        identified: Any = "NOT_IDENTIFIED"
        if self.identified is not None:
            identified = {
                "indices": list(self.identified),
                "tuples": [list(t) for t in self.identified_tuples or []],
            }
        return {
            "schema": SCHEMA,
            "polynomial": self.config.polynomial.to_dict(),
            "config": self.config.to_dict(),
            "basis": {
                "modes": self.basis.modes,
                "cutoff": self.basis.cutoff,
                "dimension": self.basis.dimension,
            },
            "records": [record.to_dict(self.basis) for record in self.records],
            "failures": {repr(key): value for key, value in self.failures.items()},
            "identified_ground_space": identified,
            "min_energy_observed": self.min_energy_observed,
            "calculated_ground_energy": self.calculated_ground_energy,
            "decision": self.decision.to_dict(),
            "caveats": list(self.caveats),
            "stability_rule": STABILITY_RULE,
            "timestamp": self.timestamp,
        }


def prepare_initial_state(
    initial_hamiltonian: HermitianOperator,
    basis: FockBasis,
    degeneracy_tol: Optional[float] = None,
) -> WaveFunction:
    """The truncated ground state of H_I with a fixed global phase."""
    spectrum = spectral_decomposition(
        initial_hamiltonian, degeneracy_tol=degeneracy_tol
    )
    if len(spectrum.ground_group) > 1:
        logger.warning(
            "H_I ground level is %d-fold degenerate; using the first eigenvector.",
            len(spectrum.ground_group),
        )
    vector = spectrum.eigenvectors[:, 0].astype(np.complex128)
    pivot = vector[np.argmax(np.abs(vector))]
    return WaveFunction.normalized(vector * abs(pivot) / pivot, basis)


class _Run:
    """Shared state of one :func:`identify_ground_state` call."""

    def __init__(self, cfg: RunConfig) -> None:
        self.cfg = cfg
        self.basis = FockBasis(cfg.polynomial.modes, cfg.cutoff)
        self.problem = build_problem_hamiltonian(cfg.polynomial, self.basis)
        self.initial_hamiltonian = build_initial_hamiltonian(self.basis, cfg.alpha)
        self.initial_state = prepare_initial_state(
            self.initial_hamiltonian, self.basis, cfg.degeneracy_tol
        )
        self.problem_spectrum = spectral_decomposition(
            self.problem, degeneracy_tol=cfg.degeneracy_tol
        )
        self._energies: Dict[int, int] = {}

    def energy(self, index: int) -> int:
        """Exact D^2 of a basis index."""
        if index not in self._energies:
            self._energies[index] = self.cfg.polynomial.evaluate_squared(
                self.basis.tuple_of(index)
            )
        return self._energies[index]

    def run_time(self, total_time: float) -> TimeRecord:
        cfg = self.cfg
        schedule = Schedule.from_rate(total_time, cfg.steps_per_time, cfg.profile)
        trajectory = evolve(
            self.initial_state,
            self.initial_hamiltonian,
            self.problem,
            schedule,
            checkpoint_stride=schedule.steps,
            track_ground_population=False,
        )
        final = trajectory.final
        calculated = born_distribution(final)
        seed = derive_seed(cfg.seed, total_time)
        measured = sample(final, cfg.shots, seed)
        verdict = match_verdict(
            calculated, measured, c=cfg.match_constant, statistic=cfg.statistic
        )

        lowest = min(self.energy(index) for index in measured.counts)
        candidate = tuple(
            index for index in measured.counts if self.energy(index) == lowest
        )
        hits = sum(measured.counts[index] for index in candidate)
        lower_bound = clopper_pearson_lower(hits, cfg.shots, cfg.dominance_alpha)
        record = TimeRecord(
            total_time=total_time,
            steps=schedule.steps,
            seed=seed,
            calculated=calculated,
            measured=measured,
            verdict=verdict,
            dominant_indices=candidate,
            dominant_probability=hits / cfg.shots,
            dominant_lower_bound=lower_bound,
            dominant_energy=lowest,
            is_dominant=lower_bound > cfg.theta,
            final_ground_population=self.problem_spectrum.ground_population(
                final.amplitudes
            ),
        )
        logger.debug(
            "T=%g: match %s, candidate %s at energy %d with frequency %.4f",
            total_time,
            "passed" if verdict.passed else "failed",
            [self.basis.tuple_of(index) for index in candidate],
            lowest,
            record.dominant_probability,
        )
        return record

    def run_time_safely(self, total_time: float):
        try:
            return self.run_time(total_time)
        except IntegrationError as error:
            logger.error("evolution for T=%g failed: %s", total_time, error)
            return error


def _conclude(
    run: _Run, records: Dict[float, TimeRecord], failures: Dict[float, str]
) -> Tuple[Optional[Tuple[int, ...]], Decision, List[str]]:
    cfg = run.cfg
    caveats: List[str] = []
    if any(not record.verdict.passed for record in records.values()) or failures:
        caveats.append("match-failed")
    last_times = cfg.t_list[-2:]
    if cfg.t_list[-1] in records and not records[cfg.t_list[-1]].is_dominant:
        caveats.append("not-dominant")

    if any(total_time in failures for total_time in last_times) or any(
        not records[total_time].verdict.passed for total_time in last_times
    ):
        return None, Decision.inconclusive(InconclusiveReason.MATCH_FAILED), caveats
    last_records = [records[total_time] for total_time in last_times]
    if not all(record.is_dominant for record in last_records):
        return None, Decision.inconclusive(InconclusiveReason.NOT_DOMINANT), caveats
    if len(last_records) < 2:
        return (
            None,
            Decision.inconclusive(
                InconclusiveReason.UNSTABLE, "at least two evolution times are needed"
            ),
            caveats,
        )
    previous, latest = last_records
    if (
        set(previous.dominant_indices) != set(latest.dominant_indices)
        or previous.dominant_energy != latest.dominant_energy
    ):
        return None, Decision.inconclusive(InconclusiveReason.UNSTABLE), caveats

    candidate = tuple(sorted(latest.dominant_indices))
    energy = latest.dominant_energy
    calculated_ground = int(run.problem_spectrum.ground_energy)
    if energy != calculated_ground:
        caveats.append("energy-mismatch")
        return (
            None,
            Decision.inconclusive(
                InconclusiveReason.MATCH_FAILED,
                f"measured ground energy {energy} differs from the "
                f"calculated {calculated_ground}",
            ),
            caveats,
        )

    points = [EvaluationPoint(run.basis.tuple_of(index)) for index in candidate]
    if any(value == cfg.cutoff for point in points for value in point):
        caveats.append("cutoff-limited")
    if energy == 0:
        for point in points:
            if evaluate(cfg.polynomial, point) != 0:
                raise WitnessError(
                    f"Witness {point} is not a zero of {cfg.polynomial}."
                )
        return candidate, Decision.has_solution(points), caveats
    if "cutoff-limited" not in caveats:
        caveats.append("cutoff-limited")
    return candidate, Decision.no_solution(energy, points), caveats


def identify_ground_state(cfg: RunConfig) -> VerificationReport:
    """Run the protocol over every T of ``cfg.t_list``.

    Raises
    ------
    GuardExceededError
        If the basis, H_P or the eigensolver exceed their limits.
    IntegrationError
        If every evolution failed.

    """
    run = _Run(cfg)
    logger.info(
        "identifying the ground state of %s on %d basis states over T=%s",
        cfg.polynomial,
        run.basis.dimension,
        list(cfg.t_list),
    )
    if cfg.max_workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as executor:
            outcomes = list(executor.map(run.run_time_safely, cfg.t_list))
    else:
        outcomes = [run.run_time_safely(total_time) for total_time in cfg.t_list]

    records: Dict[float, TimeRecord] = {}
    failures: Dict[float, str] = {}
    for total_time, outcome in zip(cfg.t_list, outcomes):
        if isinstance(outcome, TimeRecord):
            records[total_time] = outcome
        else:
            failures[total_time] = str(outcome)
    if not records:
        raise IntegrationError(f"All {len(cfg.t_list)} evolutions failed.")

    identified, decision, caveats = _conclude(run, records, failures)
    latest = records.get(cfg.t_list[-1])
    report = VerificationReport(
        config=cfg,
        basis=run.basis,
        records=[records[t] for t in cfg.t_list if t in records],
        identified=identified,
        min_energy_observed=None if latest is None else latest.dominant_energy,
        calculated_ground_energy=int(run.problem_spectrum.ground_energy),
        decision=decision,
        caveats=tuple(caveats),
        failures=failures,
    )
    logger.info("decision for %s: %s", cfg.polynomial, decision)
    return report


def decide(cfg: RunConfig) -> Decision:
    """The decision of :func:`identify_ground_state`; guard errors are INCONCLUSIVE."""
    try:
        return identify_ground_state(cfg).decision
    except GuardExceededError as error:
        logger.warning("guard exceeded for %s: %s", cfg.polynomial, error)
        return Decision.inconclusive(InconclusiveReason.GUARD_EXCEEDED, str(error))


@dataclass(frozen=True)
class SweepRow:
    """One cutoff of a cutoff-growth sweep."""

    cutoff: int
    dimension: int
    decision: Decision
    oracle_min_value: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cutoff": self.cutoff,
            "dimension": self.dimension,
            "decision": self.decision.to_dict(),
            "oracle_min_value": self.oracle_min_value,
        }


def cutoff_sweep(cfg: RunConfig, cutoffs: Sequence[int]) -> List[SweepRow]:
    """Decide the instance at each cutoff next to the brute-force minimum.

    No convergence in the cutoff is claimed; the rows are per-box results.
    """
    rows = []
    for cutoff in cutoffs:
        oracle = brute_force_minimum(cfg.polynomial, cutoff)
        rows.append(
            SweepRow(
                cutoff=cutoff,
                dimension=(cutoff + 1) ** cfg.polynomial.modes,
                decision=decide(cfg.with_cutoff(cutoff)),
                oracle_min_value=oracle.min_value,
            )
        )
    return rows
