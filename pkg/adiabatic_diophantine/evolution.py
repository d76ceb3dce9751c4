"""
This module integrates the time-dependent Schrodinger equation along the
interpolation H(s) = (1 - s) H_I + s H_P.

Units have hbar = 1 and a dimensionless total time T. The schedule maps
step j of M to s_j = profile(j / M). Each step applies the Cayley
(Crank-Nicolson) propagator at the midpoint of the step:

    psi_{j+1} = (I + i dt H(s_mid) / 2)^-1 (I - i dt H(s_mid) / 2) psi_j

with dt = T / M. The propagator is unitary for Hermitian H, so the norm
only drifts by the residual of the sparse LU solve.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .exceptions import DimensionMismatchError, IntegrationError
from .fock import FockBasis, HermitianOperator, interpolate, spectral_decomposition

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-9

Profile = Callable[[float], float]

PROFILES: Dict[str, Profile] = {
    "linear": lambda u: u,
    "smoothstep": lambda u: u * u * (3.0 - 2.0 * u),
    "sine": lambda u: math.sin(0.5 * math.pi * u) ** 2,
}


class WaveFunction:
    """
    A normalized complex amplitude vector over the truncated basis.
    """

    def __init__(
        self,
        amplitudes: Union[np.ndarray, Sequence[complex]],
        basis: Optional[FockBasis] = None,
    ) -> None:
        """
        Parameters
        ----------
        amplitudes: array-like
            The amplitudes; their squared norm must be 1 within 1e-9.
        basis: FockBasis, optional
            The basis the amplitudes refer to.

        """
        self.amplitudes = np.array(amplitudes, dtype=np.complex128).ravel()
        self.amplitudes.setflags(write=False)
        self.basis = basis
        if basis is not None and basis.dimension != self.dimension:
            raise DimensionMismatchError(
                f"{self.dimension} amplitudes for a basis of dimension "
                f"{basis.dimension}."
            )
        if abs(self.norm**2 - 1.0) > NORM_TOLERANCE:
            raise ValueError(
                f"Wave function is not normalized: squared norm {self.norm**2:.12f}."
            )

    def __repr__(self) -> str:
        return f"<WaveFunction(dimension={self.dimension})>"

    @classmethod
    def normalized(
        cls,
        amplitudes: Union[np.ndarray, Sequence[complex]],
        basis: Optional[FockBasis] = None,
    ) -> "WaveFunction":
        """Scale the amplitudes to unit norm first."""
        values = np.array(amplitudes, dtype=np.complex128).ravel()
        norm = np.linalg.norm(values)
        if norm == 0:
            raise ValueError("Cannot normalize the zero vector.")
        return cls(values / norm, basis)

    @classmethod
    def basis_state(cls, basis: FockBasis, occupations: Sequence[int]):
        """The number state |n_1 ... n_k>."""
        amplitudes = np.zeros(basis.dimension, dtype=np.complex128)
        amplitudes[basis.index_of(occupations)] = 1.0
        return cls(amplitudes, basis)

    @property
    def dimension(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "WaveFunction") -> float:
        return abs(self.overlap(other)) ** 2

    def distance(self, other: "WaveFunction") -> float:
        """Euclidean distance between the amplitude vectors."""
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


class Schedule:
    """
    The map from integration step to interpolation parameter s.
    """

    def __init__(
        self,
        total_time: float,
        steps: int,
        profile: Union[str, Profile] = "linear",
    ) -> None:
        """
        Parameters
        ----------
        total_time: float
            The evolution time T (> 0).
        steps: int
            The number of integration steps M (>= 1).
        profile: str or callable, optional
            A name from ``PROFILES`` or a nondecreasing map [0, 1] -> [0, 1]
            with profile(0) = 0 and profile(1) = 1.

        """
        if not math.isfinite(total_time) or total_time <= 0:
            raise ValueError(f"Invalid total time {total_time}. It must be > 0.")
        if int(steps) != steps or steps < 1:
            raise ValueError(f"Invalid number of steps {steps}. It must be >= 1.")
        if isinstance(profile, str):
            if profile not in PROFILES:
                raise ValueError(
                    f"Invalid profile {profile}. Only {tuple(PROFILES)} are allowed."
                )
            self.profile_name = profile
            profile = PROFILES[profile]
        else:
            self.profile_name = getattr(profile, "__name__", "custom")
        self.total_time = float(total_time)
        self.steps = int(steps)
        self.profile: Profile = profile

        if abs(profile(0.0)) > 1e-12 or abs(profile(1.0) - 1.0) > 1e-12:
            raise ValueError("Schedule profile must map 0 to 0 and 1 to 1.")
        if np.any(np.diff(self.s_values) < 0):
            raise ValueError("Schedule profile must be nondecreasing.")

    def __repr__(self) -> str:
        return (
            f"<Schedule(total_time={self.total_time}, steps={self.steps}, "
            f"profile={self.profile_name})>"
        )

    @classmethod
    def from_rate(
        cls,
        total_time: float,
        steps_per_time: float,
        profile: Union[str, Profile] = "linear",
    ) -> "Schedule":
        """Schedule with ceil(T * steps_per_time) steps, at least one."""
        if steps_per_time <= 0:
            raise ValueError(
                f"Invalid steps per time {steps_per_time}. It must be > 0."
            )
        steps = max(1, math.ceil(total_time * steps_per_time))
        return cls(total_time, steps, profile=profile)

    @property
    def time_step(self) -> float:
        return self.total_time / self.steps

    def s_at(self, step: int) -> float:
        """s at the end of ``step`` steps; exactly 0 and 1 at the ends."""
        if step <= 0:
            return 0.0
        if step >= self.steps:
            return 1.0
        return float(min(1.0, max(0.0, self.profile(step / self.steps))))

    def midpoint(self, step: int) -> float:
        """s in the middle of step ``step`` (0-based)."""
        return float(min(1.0, max(0.0, self.profile((step + 0.5) / self.steps))))

    @property
    def s_values(self) -> np.ndarray:
        return np.array([self.s_at(step) for step in range(self.steps + 1)])


@dataclass(frozen=True)
class Checkpoint:
    """The state recorded after ``step`` integration steps."""

    step: int
    s: float
    state: WaveFunction
    ground_population: Optional[float]
    energy: float
    norm: float


@dataclass
class Trajectory:
    """Checkpoints along one evolution; the last one is the final state."""

    schedule: Schedule
    checkpoints: List[Checkpoint] = field(default_factory=list)

    @property
    def final(self) -> WaveFunction:
        return self.checkpoints[-1].state

    @property
    def max_norm_drift(self) -> float:
        return max(abs(checkpoint.norm - 1.0) for checkpoint in self.checkpoints)

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "s": checkpoint.s,
                "ground_population": checkpoint.ground_population,
                "energy_expectation": checkpoint.energy,
                "norm": checkpoint.norm,
            }
            for checkpoint in self.checkpoints
        ]


def instantaneous_ground_population(
    state: WaveFunction,
    initial: HermitianOperator,
    problem: HermitianOperator,
    s: float,
    degeneracy_tol: Optional[float] = None,
) -> float:
    """Population of ``state`` on the ground eigenspace of H(s).

    Degenerate ground levels count as a whole subspace.
    """
    hamiltonian = interpolate(initial, problem, s)
    spectrum = spectral_decomposition(hamiltonian, degeneracy_tol=degeneracy_tol)
    return spectrum.ground_population(state.amplitudes)


def evolve(
    initial: WaveFunction,
    initial_hamiltonian: HermitianOperator,
    problem_hamiltonian: HermitianOperator,
    schedule: Schedule,
    checkpoint_stride: Optional[int] = None,
    track_ground_population: bool = True,
    degeneracy_tol: Optional[float] = None,
) -> Trajectory:
    """Integrate from ``initial`` along the schedule.

    Parameters
    ----------
    initial: WaveFunction
        The state at s = 0.
    initial_hamiltonian, problem_hamiltonian: HermitianOperator
        H_I and H_P.
    schedule: Schedule
        Total time, number of steps and profile.
    checkpoint_stride: int, optional
        Record a checkpoint every this many steps (default M // 100, at
        least 1). The first and last states are always recorded.
    track_ground_population: bool, optional
        Diagonalize H(s) at each checkpoint to report the ground population.
    degeneracy_tol: float, optional
        Passed to :func:`spectral_decomposition`.

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationError
        If a step produces non-finite amplitudes or the linear solve fails.

    """
    dimension = initial.dimension
    for operator in (initial_hamiltonian, problem_hamiltonian):
        if operator.dimension != dimension:
            raise DimensionMismatchError(
                f"Operator dimension {operator.dimension} does not match "
                f"state dimension {dimension}."
            )
    if checkpoint_stride is None:
        checkpoint_stride = max(1, schedule.steps // 100)
    if checkpoint_stride < 1:
        raise ValueError(f"Invalid checkpoint stride {checkpoint_stride}.")

    def record(step: int, amplitudes: np.ndarray) -> Checkpoint:
        s = schedule.s_at(step)
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise IntegrationError(
                f"Norm drifted to {norm:.15f} after step {step} (s={s:.6f})."
            )
        state = WaveFunction(amplitudes.copy(), initial.basis)
        population = None
        if track_ground_population:
            population = instantaneous_ground_population(
                state,
                initial_hamiltonian,
                problem_hamiltonian,
                s,
                degeneracy_tol=degeneracy_tol,
            )
        energy = interpolate(initial_hamiltonian, problem_hamiltonian, s).expectation(
            amplitudes
        )
        return Checkpoint(
            step=step,
            s=s,
            state=state,
            ground_population=population,
            energy=energy,
            norm=norm,
        )

    sparse_initial = initial_hamiltonian.to_sparse().tocsc()
    sparse_problem = problem_hamiltonian.to_sparse().tocsc()
    identity = scipy.sparse.identity(dimension, dtype=np.complex128, format="csc")
    half_step = 0.5j * schedule.time_step

    psi = np.array(initial.amplitudes, dtype=np.complex128)
    trajectory = Trajectory(schedule=schedule, checkpoints=[record(0, psi)])
    for step in range(schedule.steps):
        s_mid = schedule.midpoint(step)
        hamiltonian = (1.0 - s_mid) * sparse_initial + s_mid * sparse_problem
        generator = half_step * hamiltonian
        try:
            lu = scipy.sparse.linalg.splu((identity + generator).tocsc())
            psi = lu.solve((identity - generator) @ psi)
        except RuntimeError as error:
            raise IntegrationError(
                f"Cayley solve failed at step {step} (s={s_mid:.6f}): {error}"
            ) from error
        if not np.all(np.isfinite(psi)):
            raise IntegrationError(
                f"Non-finite amplitudes at step {step} (s={s_mid:.6f})."
            )
        done = step + 1
        if done % checkpoint_stride == 0 or done == schedule.steps:
            trajectory.checkpoints.append(record(done, psi))

    logger.debug(
        "evolved T=%g over %d steps: norm drift %.2e",
        schedule.total_time,
        schedule.steps,
        trajectory.max_norm_drift,
    )
    return trajectory
