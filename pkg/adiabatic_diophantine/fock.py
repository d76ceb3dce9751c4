"""
This module builds the truncated occupation-number (Fock) basis and the
Hamiltonians that act on it.

# BASIS

Each of the k modes holds 0..N quanta (box truncation), so the basis has
(N+1)^k states. States are ordered row-major with the first mode slowest:

    k=2, N=1:  0 -> (0, 0)   1 -> (0, 1)   2 -> (1, 0)   3 -> (1, 1)

Modes are numbered from 1 to k, matching the variables of the polynomial.

# HAMILTONIANS

- problem Hamiltonian H_P: diagonal, D(n_1, ..., n_k)^2 on |n_1 ... n_k>
- initial Hamiltonian H_I: sum_i (a_i^dag - conj(alpha_i)) (a_i - alpha_i),
  whose untruncated ground state is the coherent state |alpha>
- interpolation H(s) = (1 - s) H_I + s H_P for 0 <= s <= 1

Diagonal operators are stored as real vectors, everything else as
:mod:`scipy.sparse` CSR matrices.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .diophantine import Polynomial
from .exceptions import (
    BasisTooLargeError,
    ConvergenceError,
    DimensionMismatchError,
    NotHermitianError,
    PrecisionGuardError,
    SolverGuardError,
)

logger = logging.getLogger(__name__)

MAX_DIMENSION = 2**16
MAX_DENSE_DIMENSION = 4096
MAX_EXACT_FLOAT = 2**53
HERMITIAN_TOLERANCE = 1e-12


class FockBasis:
    """
    The truncated multi-mode occupation-number basis.
    """

    def __init__(
        self, modes: int, cutoff: int, max_dimension: int = MAX_DIMENSION
    ) -> None:
        """
        Parameters
        ----------
        modes: int
            The number of bosonic modes k (>= 1).
        cutoff: int
            The maximum occupation N of each mode (>= 0).
        max_dimension: int, optional
            Refuse bases with more than this many states.

        """
        if int(modes) != modes or modes < 1:
            raise ValueError(f"Invalid number of modes {modes}. It must be >= 1.")
        if int(cutoff) != cutoff or cutoff < 0:
            raise ValueError(f"Invalid cutoff {cutoff}. It must be >= 0.")
        self.modes = int(modes)
        self.cutoff = int(cutoff)
        self.dimension = (self.cutoff + 1) ** self.modes
        if self.dimension > max_dimension:
            raise BasisTooLargeError(
                f"Basis dimension {self.dimension} = ({self.cutoff}+1)^{self.modes} "
                f"exceeds the limit of {max_dimension}. Reduce the cutoff."
            )
        # properties
        self._occupations: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return (
            f"<FockBasis(modes={self.modes}, cutoff={self.cutoff}, "
            f"dimension={self.dimension})>"
        )

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, FockBasis):
            return NotImplemented
        return (self.modes, self.cutoff) == (other.modes, other.cutoff)

    def __hash__(self) -> int:
        return hash((self.modes, self.cutoff))

    def __len__(self) -> int:
        return self.dimension

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        return itertools.product(range(self.cutoff + 1), repeat=self.modes)

    @property
    def occupations(self) -> np.ndarray:
        """:obj:`numpy.ndarray`: (dimension, modes) table of occupation tuples."""
        if self._occupations is not None:
            return self._occupations
        self._occupations = np.array(list(self), dtype=np.int64).reshape(
            self.dimension, self.modes
        )
        self._occupations.setflags(write=False)
        return self._occupations

    def validate_mode(self, mode: int) -> int:
        """Validate a 1-based mode number.

        Returns
        -------
        int: The 0-based column of the mode.

        Raises
        ------
        ValueError

        """
        if int(mode) != mode or not 1 <= mode <= self.modes:
            raise ValueError(
                f"Invalid mode {mode}. Only modes 1..{self.modes} are allowed."
            )
        return int(mode) - 1

    def index_of(self, occupations: Sequence[int]) -> int:
        """Basis index of an occupation tuple."""
        occupations = tuple(occupations)
        if len(occupations) != self.modes:
            raise DimensionMismatchError(
                f"Occupation tuple {occupations} does not have {self.modes} entries."
            )
        index = 0
        for occupation in occupations:
            if not 0 <= occupation <= self.cutoff:
                raise ValueError(
                    f"Occupation tuple {occupations} is outside [0, {self.cutoff}]."
                )
            index = index * (self.cutoff + 1) + int(occupation)
        return index

    def tuple_of(self, index: int) -> Tuple[int, ...]:
        """Occupation tuple of a basis index."""
        if int(index) != index or not 0 <= index < self.dimension:
            raise ValueError(
                f"Invalid basis index {index}. It must be in [0, {self.dimension})."
            )
        index = int(index)
        occupations = []
        for _ in range(self.modes):
            index, occupation = divmod(index, self.cutoff + 1)
            occupations.append(occupation)
        return tuple(reversed(occupations))


class HermitianOperator:
    """
    A finite operator on the truncated basis.

    Despite the name it also carries non-Hermitian matrices (such as the
    ladder operators); ``hermitian`` records which kind it is.
    """

    def __init__(
        self,
        diagonal: Optional[Union[np.ndarray, Sequence[float]]] = None,
        matrix: Optional[Any] = None,
        hermitian: bool = True,
    ) -> None:
        """
        Parameters
        ----------
        diagonal: array-like, optional
            Real diagonal. Mutually exclusive with ``matrix``.
        matrix: array-like or scipy sparse matrix, optional
            General square matrix.
        hermitian: bool, optional
            Whether the operator is Hermitian. Checked to within 1e-12.

        """
        if (diagonal is None) == (matrix is None):
            raise ValueError("Provide exactly one of diagonal or matrix.")
        self.hermitian = bool(hermitian)
        self.diagonal: Optional[np.ndarray] = None
        self.matrix: Optional[scipy.sparse.csr_matrix] = None
        if diagonal is not None:
            values = np.asarray(diagonal)
            if np.iscomplexobj(values):
                if np.any(values.imag != 0):
                    raise NotHermitianError("Diagonal storage must be real.")
                values = values.real
            self.diagonal = np.array(values, dtype=np.float64).ravel()
            self.dimension = self.diagonal.shape[0]
            return

        matrix = scipy.sparse.csr_matrix(matrix, dtype=np.complex128)
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"Matrix is not square: {matrix.shape}")
        self.matrix = matrix
        self.dimension = matrix.shape[0]
        if self.hermitian:
            asymmetry = self.hermiticity_error()
            if asymmetry > HERMITIAN_TOLERANCE:
                raise NotHermitianError(
                    f"Matrix differs from its conjugate transpose by {asymmetry:.3e}."
                )

    def __repr__(self) -> str:
        storage = "diagonal" if self.is_diagonal else "sparse"
        return (
            f"<HermitianOperator(dimension={self.dimension}, storage={storage}, "
            f"hermitian={self.hermitian})>"
        )

    @property
    def is_diagonal(self) -> bool:
        return self.diagonal is not None

    def hermiticity_error(self) -> float:
        """Largest entrywise deviation from the conjugate transpose."""
        if self.diagonal is not None:
            return 0.0
        assert self.matrix is not None
        difference = self.matrix - self.matrix.conj().T
        return float(abs(difference).max()) if difference.nnz else 0.0

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        if self.diagonal is not None:
            return scipy.sparse.diags(self.diagonal, format="csr").astype(
                np.complex128
            )
        assert self.matrix is not None
        return self.matrix

    def to_dense(self) -> np.ndarray:
        if self.diagonal is not None:
            return np.diag(self.diagonal)
        assert self.matrix is not None
        return self.matrix.toarray()

    def max_abs(self) -> float:
        """The entrywise max norm."""
        if self.diagonal is not None:
            return float(np.max(np.abs(self.diagonal), initial=0.0))
        assert self.matrix is not None
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def dot(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector)
        if vector.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"Vector of length {vector.shape[0]} does not match "
                f"dimension {self.dimension}."
            )
        if self.diagonal is not None:
            return self.diagonal * vector
        assert self.matrix is not None
        return self.matrix @ vector

    def expectation(self, vector: np.ndarray) -> float:
        """<v|H|v>, real for Hermitian operators."""
        value = np.vdot(vector, self.dot(vector))
        return float(value.real)

    def adjoint(self) -> "HermitianOperator":
        if self.diagonal is not None:
            return HermitianOperator(diagonal=self.diagonal)
        assert self.matrix is not None
        return HermitianOperator(
            matrix=self.matrix.conj().T.tocsr(), hermitian=self.hermitian
        )

    def _check_dimension(self, other: "HermitianOperator") -> None:
        if self.dimension != other.dimension:
            raise DimensionMismatchError(
                f"Operator dimensions differ: {self.dimension} != {other.dimension}"
            )

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check_dimension(other)
        if self.diagonal is not None and other.diagonal is not None:
            return HermitianOperator(diagonal=self.diagonal + other.diagonal)
        return HermitianOperator(
            matrix=self.to_sparse() + other.to_sparse(),
            hermitian=self.hermitian and other.hermitian,
        )

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "HermitianOperator":
        if self.diagonal is not None and np.imag(scalar) == 0:
            return HermitianOperator(diagonal=float(np.real(scalar)) * self.diagonal)
        return HermitianOperator(
            matrix=scalar * self.to_sparse(),
            hermitian=self.hermitian and np.imag(scalar) == 0,
        )

    __rmul__ = __mul__

    def __matmul__(self, other: "HermitianOperator") -> "HermitianOperator":
        self._check_dimension(other)
        if self.diagonal is not None and other.diagonal is not None:
            return HermitianOperator(diagonal=self.diagonal * other.diagonal)
        return HermitianOperator(
            matrix=self.to_sparse() @ other.to_sparse(), hermitian=False
        )


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full spectrum of a Hermitian operator in ascending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_groups: Tuple[Tuple[int, ...], ...]
    tolerance: float

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_group(self) -> Tuple[int, ...]:
        """tuple: Eigenvalue indices of the (possibly degenerate) ground level."""
        return self.degeneracy_groups[0]

    @property
    def ground_vectors(self) -> np.ndarray:
        """:obj:`numpy.ndarray`: Columns spanning the ground eigenspace."""
        return self.eigenvectors[:, list(self.ground_group)]

    def ground_population(self, vector: np.ndarray) -> float:
        """Squared norm of the projection of ``vector`` on the ground eigenspace."""
        overlaps = self.ground_vectors.conj().T @ np.asarray(vector)
        return float(min(1.0, max(0.0, np.sum(np.abs(overlaps) ** 2))))


def build_basis(
    modes: int, cutoff: int, max_dimension: int = MAX_DIMENSION
) -> FockBasis:
    """Build the truncated basis with (cutoff+1)^modes states."""
    return FockBasis(modes, cutoff, max_dimension=max_dimension)


def _kron_mode(basis: FockBasis, mode: int, single: scipy.sparse.spmatrix):
    """Embed a single-mode matrix acting on ``mode`` into the full basis."""
    position = basis.validate_mode(mode)
    size = basis.cutoff + 1
    left = scipy.sparse.identity(size**position, format="csr")
    right = scipy.sparse.identity(size ** (basis.modes - position - 1), format="csr")
    return scipy.sparse.kron(
        scipy.sparse.kron(left, single, format="csr"), right, format="csr"
    )


def annihilation_operator(basis: FockBasis, mode: int) -> HermitianOperator:
    """The truncated bosonic lowering operator a_mode.

    <..., n-1, ...| a |..., n, ...> = sqrt(n); the transition out of the
    box at n = N is dropped.
    """
    size = basis.cutoff + 1
    rows = np.arange(0, basis.cutoff)
    columns = np.arange(1, size)
    single = scipy.sparse.csr_matrix(
        (np.sqrt(columns).astype(np.complex128), (rows, columns)), shape=(size, size)
    )
    return HermitianOperator(matrix=_kron_mode(basis, mode, single), hermitian=False)


def creation_operator(basis: FockBasis, mode: int) -> HermitianOperator:
    """The truncated raising operator, the adjoint of :func:`annihilation_operator`."""
    return annihilation_operator(basis, mode).adjoint()


def number_operator(basis: FockBasis, mode: int) -> HermitianOperator:
    """Diagonal operator with the occupation of ``mode`` on each basis state."""
    column = basis.validate_mode(mode)
    return HermitianOperator(diagonal=basis.occupations[:, column].astype(np.float64))


def build_problem_hamiltonian(
    polynomial: Polynomial, basis: FockBasis, max_exact: int = MAX_EXACT_FLOAT
) -> HermitianOperator:
    """Diagonal H_P with D(n_1, ..., n_k)^2 on every basis state.

    Raises
    ------
    DimensionMismatchError
        If the polynomial and the basis disagree on the number of modes.
    PrecisionGuardError
        If an entry cannot be represented exactly as a float.

    """
    if polynomial.modes != basis.modes:
        raise DimensionMismatchError(
            f"Polynomial has {polynomial.modes} variables, "
            f"basis has {basis.modes} modes."
        )
    values = [polynomial.evaluate_squared(occupations) for occupations in basis]
    largest = max(values)
    if largest > max_exact:
        raise PrecisionGuardError(
            f"H_P entry {largest} exceeds {max_exact} and cannot be stored exactly. "
            f"Reduce the cutoff below {basis.cutoff}."
        )
    return HermitianOperator(diagonal=np.array(values, dtype=np.float64))


def build_initial_hamiltonian(
    basis: FockBasis, alpha: Optional[Sequence[complex]] = None
) -> HermitianOperator:
    """H_I = sum_i (a_i^dag - conj(alpha_i)) (a_i - alpha_i) on the truncated basis.

    Parameters
    ----------
    basis: FockBasis
        The truncated basis.
    alpha: sequence of complex, optional
        Coherent amplitude per mode. Defaults to 1 for every mode.

    Returns
    -------
    HermitianOperator

    """
    if alpha is None:
        alpha = (1.0,) * basis.modes
    alpha = tuple(complex(value) for value in alpha)
    if len(alpha) != basis.modes:
        raise DimensionMismatchError(
            f"Got {len(alpha)} alpha values for {basis.modes} modes."
        )
    if not all(np.isfinite(value) for value in alpha):
        raise ValueError(f"alpha values must be finite: {alpha}")

    identity = scipy.sparse.identity(basis.dimension, dtype=np.complex128, format="csr")
    total = scipy.sparse.csr_matrix((basis.dimension, basis.dimension), dtype=complex)
    for mode, amplitude in enumerate(alpha, start=1):
        if abs(amplitude) ** 2 > basis.cutoff / 2:
            logger.warning(
                "|alpha_%d|^2 = %.3g exceeds half the cutoff %d; "
                "the truncated coherent state is inaccurate.",
                mode,
                abs(amplitude) ** 2,
                basis.cutoff,
            )
        lower = annihilation_operator(basis, mode).to_sparse()
        raise_ = lower.conj().T.tocsr()
        total = total + (raise_ - np.conj(amplitude) * identity) @ (
            lower - amplitude * identity
        )
    return HermitianOperator(matrix=total)


def interpolate(
    initial: HermitianOperator, problem: HermitianOperator, s: float
) -> HermitianOperator:
    """H(s) = (1 - s) H_I + s H_P.

    The endpoints return the operators themselves.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"Invalid s {s}. It must be in [0, 1].")
    if initial.dimension != problem.dimension:
        raise DimensionMismatchError(
            f"Operator dimensions differ: {initial.dimension} != {problem.dimension}"
        )
    if s == 0.0:
        return initial
    if s == 1.0:
        return problem
    return (1.0 - s) * initial + s * problem


def spectral_decomposition(
    operator: HermitianOperator,
    degeneracy_tol: Optional[float] = None,
    max_dimension: int = MAX_DENSE_DIMENSION,
) -> SpectralDecomposition:
    """Diagonalize a Hermitian operator and group degenerate levels.

    Parameters
    ----------
    operator: HermitianOperator
        Must carry the hermitian flag.
    degeneracy_tol: float, optional
        Neighbouring eigenvalues closer than this share a group.
        Defaults to 1e-8 * (1 + max |H_ij|).
    max_dimension: int, optional
        Refuse operators larger than this for the dense solver.

    Returns
    -------
    SpectralDecomposition

    """
    if not operator.hermitian:
        raise NotHermitianError("Spectral decomposition requires a Hermitian operator.")
    if operator.dimension > max_dimension:
        raise SolverGuardError(
            f"Dimension {operator.dimension} exceeds the dense solver limit "
            f"of {max_dimension}."
        )
    if degeneracy_tol is None:
        degeneracy_tol = 1e-8 * (1.0 + operator.max_abs())

    if operator.diagonal is not None:
        order = np.argsort(operator.diagonal, kind="stable")
        eigenvalues = operator.diagonal[order]
        eigenvectors = np.eye(operator.dimension)[:, order]
    else:
        try:
            eigenvalues, eigenvectors = scipy.linalg.eigh(operator.to_dense())
        except np.linalg.LinAlgError as error:
            raise ConvergenceError(f"Eigensolver failed: {error}") from error

    groups = []
    current = [0]
    for index in range(1, len(eigenvalues)):
        if eigenvalues[index] - eigenvalues[index - 1] < degeneracy_tol:
            current.append(index)
        else:
            groups.append(tuple(current))
            current = [index]
    groups.append(tuple(current))

    return SpectralDecomposition(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        degeneracy_groups=tuple(groups),
        tolerance=float(degeneracy_tol),
    )
