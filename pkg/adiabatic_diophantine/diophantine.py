"""
This module parses, represents and evaluates Diophantine polynomials.

# GRAMMAR

    expr   := term (("+" | "-") term)*
    term   := factor ("*" factor)*
    factor := base ("^" nat)?
    base   := nat | ident | "(" expr ")"

Whitespace is insignificant. Identifiers are an ASCII letter followed by
letters, digits or underscores. An expression may start with a unary sign
so that printed polynomials with a negative leading coefficient parse back.

# CANONICAL FORM

A polynomial in k unknowns is a list of (coefficient, exponents) terms:

    "x + y - 2"  ->  (1, (1, 0)), (1, (0, 1)), (-2, (0, 0))

Variables are numbered by order of first appearance in the text; that
order is also the mode order of the Fock basis. Like terms are merged,
zero coefficients dropped and terms sorted graded-lexicographically
(higher total degree first, ties broken by the exponent of the earlier
variable). All arithmetic uses Python integers, so values are exact.

# ORACLE

:func:`brute_force_minimum` scans the box [0, B]^k in lexicographic order
and returns the minimum of D^2 with every point attaining it. It is the
independent classical check the quantum simulation is compared against.
"""
import itertools
import logging
import re
from dataclasses import dataclass
from typing import (
    Any,
    Dict,
    Iterable,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from .exceptions import (
    DimensionMismatchError,
    PolynomialSyntaxError,
    SearchSpaceTooLargeError,
)

logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]
Term = Tuple[int, Monomial]

MAX_SEARCH_POINTS = 10**8

IDENTIFIER_PATTERN = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
TOKEN_PATTERN = re.compile(
    r"\s*(?:(?P<nat>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*^()]))"
)


class _Token(NamedTuple):
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = TOKEN_PATTERN.match(text, position)
        if not match:
            # skip the whitespace so the position points at the culprit
            while text[position].isspace():
                position += 1
            raise PolynomialSyntaxError(
                f'Unexpected character "{text[position]}"', position
            )
        kind = match.lastgroup or "op"
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    return tokens


def _sort_key(term: Term) -> Tuple[int, Tuple[int, ...]]:
    exponents = term[1]
    return -sum(exponents), tuple(-exponent for exponent in exponents)


def _add(left: Dict[Monomial, int], right: Dict[Monomial, int], sign: int = 1):
    result = dict(left)
    for exponents, coefficient in right.items():
        result[exponents] = result.get(exponents, 0) + sign * coefficient
    return {key: value for key, value in result.items() if value != 0}


def _multiply(left: Dict[Monomial, int], right: Dict[Monomial, int]):
    result: Dict[Monomial, int] = {}
    for (exp_left, coef_left), (exp_right, coef_right) in itertools.product(
        left.items(), right.items()
    ):
        exponents = tuple(a + b for a, b in zip(exp_left, exp_right))
        result[exponents] = result.get(exponents, 0) + coef_left * coef_right
    return {key: value for key, value in result.items() if value != 0}


def _power(base: Dict[Monomial, int], exponent: int, modes: int):
    result: Dict[Monomial, int] = {(0,) * modes: 1}
    while exponent:
        if exponent & 1:
            result = _multiply(result, base)
        exponent >>= 1
        if exponent:
            base = _multiply(base, base)
    return result


class _Parser:
    """Recursive descent over the token list."""

    def __init__(self, text: str, tokens: List[_Token], variables: Sequence[str]):
        self.text = text
        self.tokens = tokens
        self.index = 0
        self.modes = len(variables)
        self.variable_index = {name: idx for idx, name in enumerate(variables)}

    def _peek(self) -> Optional[_Token]:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def _end_position(self) -> int:
        return len(self.text.rstrip())

    def _advance(self) -> _Token:
        token = self._peek()
        if token is None:
            raise PolynomialSyntaxError(
                "Unexpected end of equation", self._end_position()
            )
        self.index += 1
        return token

    def parse(self) -> Dict[Monomial, int]:
        result = self.expr()
        token = self._peek()
        if token is not None:
            raise PolynomialSyntaxError(f'Unexpected "{token.text}"', token.position)
        return result

    def expr(self) -> Dict[Monomial, int]:
        sign = 1
        token = self._peek()
        if token is not None and token.text in ("+", "-"):
            self._advance()
            sign = -1 if token.text == "-" else 1
        result = _add({}, self.term(), sign)
        while True:
            token = self._peek()
            if token is None or token.text not in ("+", "-"):
                return result
            self._advance()
            result = _add(result, self.term(), -1 if token.text == "-" else 1)

    def term(self) -> Dict[Monomial, int]:
        result = self.factor()
        while True:
            token = self._peek()
            if token is None or token.text != "*":
                return result
            self._advance()
            result = _multiply(result, self.factor())

    def factor(self) -> Dict[Monomial, int]:
        base = self.base()
        token = self._peek()
        if token is None or token.text != "^":
            return base
        self._advance()
        exponent = self._peek()
        if exponent is None or exponent.kind != "nat":
            position = self._end_position() if exponent is None else exponent.position
            raise PolynomialSyntaxError(
                "Exponent must be a non-negative integer literal", position
            )
        self._advance()
        return _power(base, int(exponent.text), self.modes)

    def base(self) -> Dict[Monomial, int]:
        token = self._advance()
        if token.kind == "nat":
            value = int(token.text)
            return {(0,) * self.modes: value} if value else {}
        if token.kind == "ident":
            exponents = [0] * self.modes
            exponents[self.variable_index[token.text]] = 1
            return {tuple(exponents): 1}
        if token.text == "(":
            inner = self.expr()
            closing = self._peek()
            if closing is None or closing.text != ")":
                position = self._end_position() if closing is None else closing.position
                raise PolynomialSyntaxError('Expected ")"', position)
            self._advance()
            return inner
        raise PolynomialSyntaxError(
            f'Expected a number, a variable or "(" but found "{token.text}"',
            token.position,
        )


@dataclass(frozen=True)
class EvaluationPoint:
    """A candidate solution: one non-negative integer per unknown."""

    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(self.values)
        for value in values:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"Evaluation point entries must be integers: {values}")
            if value < 0:
                raise ValueError(
                    f"Evaluation point entries must be non-negative: {values}"
                )
        object.__setattr__(self, "values", tuple(int(value) for value in values))

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, item: int) -> int:
        return self.values[item]

    def __str__(self) -> str:
        return "(" + ",".join(str(value) for value in self.values) + ")"

    def to_list(self) -> List[int]:
        return list(self.values)


PointLike = Union[EvaluationPoint, Sequence[int]]


def _as_point(point: PointLike) -> EvaluationPoint:
    if isinstance(point, EvaluationPoint):
        return point
    return EvaluationPoint(tuple(point))


class Polynomial:
    """
    A multivariate polynomial with integer coefficients in canonical form.
    """

    def __init__(
        self, variables: Sequence[str], terms: Iterable[Tuple[int, Sequence[int]]]
    ) -> None:
        """
        Parameters
        ----------
        variables: sequence of str
            The unknowns, in mode order.
        terms: iterable of (int, sequence of int)
            Coefficient and exponent tuple pairs. Like terms are merged
            and zero coefficients dropped.

        """
        self.variables: Tuple[str, ...] = tuple(variables)
        if not self.variables:
            raise ValueError("A polynomial needs at least one variable.")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"Duplicate variable names: {self.variables}")
        for name in self.variables:
            if not IDENTIFIER_PATTERN.match(name):
                raise ValueError(f'"{name}" is not a valid variable name.')

        merged: Dict[Monomial, int] = {}
        for coefficient, exponents in terms:
            exponents = tuple(int(exponent) for exponent in exponents)
            if len(exponents) != self.modes:
                raise DimensionMismatchError(
                    f"Exponent tuple {exponents} does not have {self.modes} entries."
                )
            if any(exponent < 0 for exponent in exponents):
                raise ValueError(f"Exponents must be non-negative: {exponents}")
            merged[exponents] = merged.get(exponents, 0) + int(coefficient)
        self.terms: Tuple[Term, ...] = tuple(
            sorted(
                ((coef, exps) for exps, coef in merged.items() if coef != 0),
                key=_sort_key,
            )
        )

    @classmethod
    def from_text(
        cls, text: str, variables: Optional[Sequence[str]] = None
    ) -> "Polynomial":
        """Parse an equation such as ``"x^2 + y^2 - 25"``.

        Parameters
        ----------
        text: str
            The polynomial in the documented grammar.
        variables: sequence of str, optional
            Fix the mode order instead of using the order of first
            appearance. It must name every identifier in the text.

        Returns
        -------
        Polynomial

        Raises
        ------
        PolynomialSyntaxError

        """
        if not text or not text.strip():
            raise PolynomialSyntaxError("Empty equation", 0)
        tokens = _tokenize(text)
        seen: List[str] = []
        for token in tokens:
            if token.kind == "ident" and token.text not in seen:
                seen.append(token.text)
        if variables is None:
            variables = seen
        else:
            missing = [name for name in seen if name not in variables]
            if missing:
                raise ValueError(f"Variables {missing} are missing from {variables}.")
        if not variables:
            raise PolynomialSyntaxError(
                "Equation has no unknowns; at least one variable is required", 0
            )
        parsed = _Parser(text, tokens, variables).parse()
        return cls(variables, ((coef, exps) for exps, coef in parsed.items()))

    @property
    def modes(self) -> int:
        """int: The number of unknowns k."""
        return len(self.variables)

    @property
    def degree(self) -> int:
        """int: The total degree (0 for the zero polynomial)."""
        return max((sum(exps) for _, exps in self.terms), default=0)

    def _as_dict(self) -> Dict[Monomial, int]:
        return {exps: coef for coef, exps in self.terms}

    def _check_compatible(self, other: "Polynomial") -> None:
        if self.variables != other.variables:
            raise DimensionMismatchError(
                f"Variables differ: {self.variables} != {other.variables}"
            )

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        merged = _add(self._as_dict(), other._as_dict())
        return Polynomial(self.variables, ((c, e) for e, c in merged.items()))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        merged = _add(self._as_dict(), other._as_dict(), -1)
        return Polynomial(self.variables, ((c, e) for e, c in merged.items()))

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.variables, ((-c, e) for c, e in self.terms))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        product = _multiply(self._as_dict(), other._as_dict())
        return Polynomial(self.variables, ((c, e) for e, c in product.items()))

    def __pow__(self, exponent: int) -> "Polynomial":
        if int(exponent) != exponent or exponent < 0:
            raise ValueError(f"Exponent must be a non-negative integer: {exponent}")
        powered = _power(self._as_dict(), int(exponent), self.modes)
        return Polynomial(self.variables, ((c, e) for e, c in powered.items()))

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.variables, self.terms))

    def __repr__(self) -> str:
        return f"<Polynomial({self}, variables={self.variables})>"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces: List[str] = []
        for coefficient, exponents in self.terms:
            monomial = "*".join(
                name if exponent == 1 else f"{name}^{exponent}"
                for name, exponent in zip(self.variables, exponents)
                if exponent
            )
            magnitude = abs(coefficient)
            if not monomial:
                body = str(magnitude)
            elif magnitude == 1:
                body = monomial
            else:
                body = f"{magnitude}*{monomial}"
            if not pieces:
                pieces.append(f"-{body}" if coefficient < 0 else body)
            else:
                pieces.append(f"{'-' if coefficient < 0 else '+'} {body}")
        return " ".join(pieces)

    def evaluate(self, point: PointLike) -> int:
        """Exact value of the polynomial at a non-negative integer point.

        Raises
        ------
        DimensionMismatchError

        """
        point = _as_point(point)
        if len(point) != self.modes:
            raise DimensionMismatchError(
                f"Point {point} has {len(point)} entries, "
                f"the polynomial has {self.modes} variables."
            )
        total = 0
        for coefficient, exponents in self.terms:
            value = coefficient
            for base, exponent in zip(point.values, exponents):
                if exponent:
                    value *= base**exponent
            total += value
        return total

    def evaluate_squared(self, point: PointLike) -> int:
        """The square of :meth:`evaluate`; never negative."""
        return self.evaluate(point) ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "text": str(self),
            "variables": list(self.variables),
            "terms": [[coef, list(exps)] for coef, exps in self.terms],
        }


@dataclass(frozen=True)
class BruteForceResult:
    """The exhaustive minimum of D^2 over the box [0, bound]^k."""

    min_value: int
    argmin: Tuple[EvaluationPoint, ...]
    bound: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bound": self.bound,
            "min_value": self.min_value,
            "argmin": [point.to_list() for point in self.argmin],
        }


def parse_polynomial(text: str, variables: Optional[Sequence[str]] = None):
    """Parse equation text into a canonical :class:`Polynomial`."""
    return Polynomial.from_text(text, variables=variables)


def evaluate(polynomial: Polynomial, at: PointLike) -> int:
    """Exact value of D at the point."""
    return polynomial.evaluate(at)


def evaluate_squared(polynomial: Polynomial, at: PointLike) -> int:
    """Exact value of D^2 at the point."""
    return polynomial.evaluate_squared(at)


def brute_force_minimum(
    polynomial: Polynomial, bound: int, max_points: int = MAX_SEARCH_POINTS
) -> BruteForceResult:
    """Scan [0, bound]^k for the minimum of D^2.

    Parameters
    ----------
    polynomial: Polynomial
        The instance.
    bound: int
        Largest value tried for each unknown.
    max_points: int, optional
        Refuse boxes with more points than this.

    Returns
    -------
    BruteForceResult
        argmin is in lexicographic order.

    Raises
    ------
    SearchSpaceTooLargeError

    """
    if int(bound) != bound or bound < 0:
        raise ValueError(f"Invalid bound {bound}. It must be a non-negative integer.")
    bound = int(bound)
    points = (bound + 1) ** polynomial.modes
    if points > max_points:
        raise SearchSpaceTooLargeError(
            f"Search space of {points} points exceeds the limit of {max_points}. "
            "Reduce the bound."
        )

    min_value: Optional[int] = None
    argmin: List[EvaluationPoint] = []
    for values in itertools.product(range(bound + 1), repeat=polynomial.modes):
        value = polynomial.evaluate_squared(values)
        if min_value is None or value < min_value:
            min_value = value
            argmin = [EvaluationPoint(values)]
        elif value == min_value:
            argmin.append(EvaluationPoint(values))
    assert min_value is not None
    logger.debug(
        "brute force over %d points of %s: min %d at %d points",
        points,
        polynomial,
        min_value,
        len(argmin),
    )
    return BruteForceResult(min_value=min_value, argmin=tuple(argmin), bound=bound)
