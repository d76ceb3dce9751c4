"""
This module turns states into probability distributions and compares the
calculated distribution with simulated measurement statistics.

- :func:`born_distribution`: p_j = |c_j|^2, the calculated side.
- :func:`sample`: projective measurements in the number basis, repeated
  ``shots`` times with a seeded :func:`numpy.random.default_rng` (PCG64).
- :func:`match_verdict`: total variation between the two with the
  acceptance threshold c * sqrt(d / M), where d counts the indices with
  calculated probability above 1e-6. A Pearson chi-square test is
  available as an alternative statistic.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import scipy.stats

from .evolution import WaveFunction
from .exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

GENERATOR = "numpy.random.PCG64"
MIN_SHOTS = 100
SUPPORT_FLOOR = 1e-6
MATCH_CONSTANT = 2.0
CHI2_SIGNIFICANCE = 1e-3
VALID_STATISTICS = ("tv", "chi2")


class Distribution:
    """
    A probability vector over basis indices.
    """

    TOLERANCE = 1e-9

    def __init__(self, probabilities: Any) -> None:
        values = np.array(probabilities, dtype=np.float64).ravel()
        if np.any(values < 0):
            raise ValueError("Probabilities must be non-negative.")
        if abs(values.sum() - 1.0) > self.TOLERANCE:
            raise ValueError(f"Probabilities sum to {values.sum():.12f}, not 1.")
        values.setflags(write=False)
        self.probabilities = values

    def __repr__(self) -> str:
        return f"<Distribution(dimension={self.dimension})>"

    def __len__(self) -> int:
        return self.dimension

    @property
    def dimension(self) -> int:
        return self.probabilities.shape[0]

    def support_size(self, floor: float = SUPPORT_FLOOR) -> int:
        """Number of indices with probability above ``floor``."""
        return int(np.count_nonzero(self.probabilities > floor))

    def to_dict(self) -> Dict[str, float]:
        """Non-zero entries keyed by index."""
        return {
            str(index): float(value)
            for index, value in enumerate(self.probabilities)
            if value > 0
        }


@dataclass(frozen=True)
class ShotRecord:
    """Counts of repeated number-basis measurements."""

    shots: int
    counts: Mapping[int, int]
    seed: Optional[int]
    dimension: int
    generator: str = GENERATOR

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise ValueError(
                f"Counts sum to {sum(self.counts.values())}, expected {self.shots}."
            )
        if any(not 0 <= index < self.dimension for index in self.counts):
            raise ValueError("Count index outside the basis.")
        object.__setattr__(
            self,
            "counts",
            {int(key): int(self.counts[key]) for key in sorted(self.counts)},
        )

    @property
    def count_vector(self) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.int64)
        for index, count in self.counts.items():
            vector[index] = count
        return vector

    def frequencies(self) -> Distribution:
        """The empirical distribution counts / shots."""
        return Distribution(self.count_vector / self.shots)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "generator": self.generator,
            "counts": {str(index): count for index, count in self.counts.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], dimension: int) -> "ShotRecord":
        return cls(
            shots=int(data["shots"]),
            counts={int(key): int(value) for key, value in data["counts"].items()},
            seed=data.get("seed"),
            dimension=dimension,
            generator=data.get("generator", GENERATOR),
        )


@dataclass(frozen=True)
class MatchVerdict:
    """Outcome of comparing a calculated distribution with measured counts."""

    statistic: float
    threshold: float
    passed: bool
    effective_dimension: int
    method: str = "tv"

    def to_dict(self) -> Dict[str, Any]:
        """JSON-safe fields; a non-finite statistic becomes None."""
        return {
            "method": self.method,
            "statistic": self.statistic if math.isfinite(self.statistic) else None,
            "threshold": self.threshold,
            "pass": self.passed,
            "effective_dimension": self.effective_dimension,
        }


def born_distribution(state: WaveFunction) -> Distribution:
    """p_j = |c_j|^2."""
    return Distribution(np.abs(state.amplitudes) ** 2)


def sample(state: WaveFunction, shots: int, seed: Optional[int] = None) -> ShotRecord:
    """Measure ``state`` in the number basis ``shots`` times.

    Parameters
    ----------
    state: WaveFunction
        The state to measure.
    shots: int
        The number of independent draws (>= 1).
    seed: int, optional
        Seed for :func:`numpy.random.default_rng`. Identical state, shots
        and seed give identical counts.

    Returns
    -------
    ShotRecord

    """
    if int(shots) != shots or shots < 1:
        raise ValueError(f"Invalid number of shots {shots}. It must be >= 1.")
    probabilities = np.abs(state.amplitudes) ** 2
    probabilities = probabilities / probabilities.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(state.dimension, size=int(shots), p=probabilities)
    counts = np.bincount(draws, minlength=state.dimension)
    return ShotRecord(
        shots=int(shots),
        counts={int(index): int(counts[index]) for index in np.flatnonzero(counts)},
        seed=seed,
        dimension=state.dimension,
    )


def _as_probabilities(value: Union[Distribution, ShotRecord]) -> np.ndarray:
    if isinstance(value, ShotRecord):
        return value.frequencies().probabilities
    return value.probabilities


def total_variation(
    dist_a: Union[Distribution, ShotRecord], dist_b: Union[Distribution, ShotRecord]
) -> float:
    """Half the L1 distance between two distributions (counts are normalized)."""
    left = _as_probabilities(dist_a)
    right = _as_probabilities(dist_b)
    if left.shape != right.shape:
        raise DimensionMismatchError(
            f"Distribution dimensions differ: {left.shape[0]} != {right.shape[0]}"
        )
    return float(min(1.0, 0.5 * np.abs(left - right).sum()))


def _chi_square(calc: Distribution, measured: ShotRecord, floor: float):
    expected = calc.probabilities * measured.shots
    observed = measured.count_vector.astype(np.float64)
    support = calc.probabilities > floor
    expected_cells = list(expected[support])
    observed_cells = list(observed[support])
    outside_expected = float(expected[~support].sum())
    outside_observed = float(observed[~support].sum())
    if outside_expected > 0:
        expected_cells.append(outside_expected)
        observed_cells.append(outside_observed)
    elif outside_observed > 0:
        # counts where the calculation predicts nothing
        return math.inf, 0.0
    expected_arr = np.array(expected_cells)
    observed_arr = np.array(observed_cells)
    statistic = float(np.sum((observed_arr - expected_arr) ** 2 / expected_arr))
    dof = max(1, len(expected_cells) - 1)
    return statistic, float(scipy.stats.chi2.sf(statistic, dof))


def match_verdict(
    calc: Distribution,
    measured: ShotRecord,
    c: float = MATCH_CONSTANT,
    statistic: str = "tv",
    support_floor: float = SUPPORT_FLOOR,
    min_shots: int = MIN_SHOTS,
) -> MatchVerdict:
    """Decide whether measured counts are consistent with the calculation.

    Parameters
    ----------
    calc: Distribution
        The calculated (Born) distribution.
    measured: ShotRecord
        The sampled counts.
    c: float, optional
        The total variation acceptance constant.
    statistic: str, optional
        ``"tv"`` (default) or ``"chi2"``.
    support_floor: float, optional
        Probabilities at or below this do not count towards d.
    min_shots: int, optional
        Refuse records with fewer shots.

    Returns
    -------
    MatchVerdict

    """
    if statistic not in VALID_STATISTICS:
        raise ValueError(
            f"Invalid statistic {statistic}. Only {VALID_STATISTICS} are allowed."
        )
    if measured.shots < min_shots:
        raise ValueError(
            f"{measured.shots} shots is below the floor of {min_shots} for matching."
        )
    if calc.dimension != measured.dimension:
        raise DimensionMismatchError(
            f"Distribution dimensions differ: {calc.dimension} != {measured.dimension}"
        )
    effective_dimension = max(1, calc.support_size(support_floor))
    if statistic == "chi2":
        value, p_value = _chi_square(calc, measured, support_floor)
        verdict = MatchVerdict(
            statistic=value,
            threshold=CHI2_SIGNIFICANCE,
            passed=p_value >= CHI2_SIGNIFICANCE,
            effective_dimension=effective_dimension,
            method="chi2",
        )
    else:
        value = total_variation(calc, measured)
        threshold = c * math.sqrt(effective_dimension / measured.shots)
        verdict = MatchVerdict(
            statistic=value,
            threshold=threshold,
            passed=value <= threshold,
            effective_dimension=effective_dimension,
        )
    if not verdict.passed:
        logger.warning(
            "calculated and measured distributions disagree: %s %.4g vs threshold %.4g",
            verdict.method,
            verdict.statistic,
            verdict.threshold,
        )
    return verdict
