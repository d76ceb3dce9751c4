import functools
import json
import math

import numpy as np
import pytest

from adiabatic_diophantine import (
    Decision,
    DecisionKind,
    EvaluationPoint,
    FockBasis,
    RunConfig,
    brute_force_minimum,
    build_problem_hamiltonian,
    cutoff_sweep,
    decide,
    evaluate,
    identify_ground_state,
    parse_polynomial,
    spectral_decomposition,
)
from adiabatic_diophantine.exceptions import BasisTooLargeError, WitnessError
from adiabatic_diophantine.verification import (
    DEFAULT_T_LIST,
    InconclusiveReason,
    clopper_pearson_lower,
    derive_seed,
    doubling_times,
)

from .conftest import load_corpus


def config(equation, cutoff, **kwargs):
    return RunConfig(polynomial=parse_polynomial(equation), cutoff=cutoff, **kwargs)


def without_timestamp(report):
    data = report.to_dict()
    data.pop("timestamp")
    return data


def ground_group_tuples(cfg):
    """Basis tuples of the lowest H_P eigenspace."""
    basis = FockBasis(cfg.polynomial.modes, cfg.cutoff)
    spectrum = spectral_decomposition(build_problem_hamiltonian(cfg.polynomial, basis))
    return {
        basis.tuple_of(int(np.argmax(np.abs(vector))))
        for vector in spectrum.ground_vectors.T
    }


@pytest.mark.parametrize(
    "t_max,expected",
    [
        (128, (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)),
        (100, (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 100.0)),
        (1, (1.0,)),
        (0.5, (0.5,)),
    ],
)
def test_doubling_times(t_max, expected):
    assert doubling_times(t_max) == expected


def test_default_t_list():
    assert DEFAULT_T_LIST == doubling_times(512)


def test_derive_seed():
    assert derive_seed(42, 1) == derive_seed(42, 1.0)
    assert derive_seed(42, 1.0) != derive_seed(42, 2.0)
    assert derive_seed(42, 1.0) != derive_seed(43, 1.0)
    assert 0 <= derive_seed(42, 128.0) < 2**64


@pytest.mark.parametrize(
    "hits,trials,expected",
    [
        (0, 100, 0.0),
        (100, 100, 0.001 ** (1 / 100)),
        (1, 1, 0.001),
    ],
)
def test_clopper_pearson_lower(hits, trials, expected):
    assert clopper_pearson_lower(hits, trials, 1e-3) == pytest.approx(expected)


def test_clopper_pearson_lower__below_frequency():
    bound = clopper_pearson_lower(60_000, 100_000, 1e-3)
    assert 0.59 < bound < 0.6


def test_decision():
    witness = EvaluationPoint((3, 4))
    assert str(Decision.has_solution([witness])) == "HAS_SOLUTION((3,4))"
    assert (
        str(Decision.no_solution(1, [EvaluationPoint((1, 1))]))
        == "NO_SOLUTION_WITHIN_CUTOFF(1, [(1,1)])"
    )
    inconclusive = Decision.inconclusive(InconclusiveReason.NOT_DOMINANT)
    assert str(inconclusive) == "INCONCLUSIVE(not-dominant)"
    assert inconclusive.to_dict()["reason"] == "not-dominant"


def test_decision__invalid():
    with pytest.raises(ValueError, match="witness"):
        Decision.has_solution([])
    with pytest.raises(ValueError, match="positive min_value"):
        Decision.no_solution(0, [EvaluationPoint((1,))])
    with pytest.raises(ValueError, match="reason"):
        Decision(DecisionKind.INCONCLUSIVE)


@pytest.mark.parametrize(
    "kwargs,message",
    [
        ({"theta": 0}, "Invalid theta"),
        ({"theta": 1}, "Invalid theta"),
        ({"shots": 99}, "Invalid shots"),
        ({"t_list": (2, 1)}, "strictly increasing"),
        ({"t_list": (1, 1)}, "strictly increasing"),
        ({"t_list": ()}, "must not be empty"),
        ({"t_list": (0, 1)}, "must be > 0"),
        ({"alpha": (1,)}, "alpha values"),
        ({"statistic": "ks"}, "Invalid statistic"),
        ({"steps_per_time": 0}, "Invalid steps per time"),
        ({"max_workers": 0}, "Invalid max workers"),
        ({"cutoff": -1}, "Invalid cutoff"),
    ],
)
def test_run_config__invalid(kwargs, message):
    arguments = {"cutoff": 2, **kwargs}
    with pytest.raises(ValueError, match=message):
        config("x + y - 2", **arguments)


def test_run_config():
    cfg = config("x + y - 2", 2, t_list=[1, 2], alpha=[1, 0.5j])
    assert cfg.t_list == (1.0, 2.0)
    assert cfg.alpha == (1 + 0j, 0.5j)
    assert cfg.with_cutoff(3).cutoff == 3
    assert cfg.to_dict()["alpha"] == [[1.0, 0.0], [0.0, 0.5]]


def test_identify_ground_state__degenerate_zeros():
    cfg = config("x + y - 2", 2)
    report = identify_ground_state(cfg)
    assert report.identified is not None
    assert set(report.identified_tuples) == {(0, 2), (1, 1), (2, 0)}
    assert set(report.identified_tuples) == ground_group_tuples(cfg)
    assert report.min_energy_observed == 0
    assert report.calculated_ground_energy == 0
    assert report.decision.kind is DecisionKind.HAS_SOLUTION
    for witness in report.decision.witnesses:
        assert evaluate(report.config.polynomial, witness) == 0
    assert [record.total_time for record in report.records] == list(DEFAULT_T_LIST)


def test_identify_ground_state__positive_minimum():
    cfg = config("x^2 + y^2 - 3", 4)
    report = identify_ground_state(cfg)
    assert report.min_energy_observed == 1
    decision = report.decision
    assert decision.kind is DecisionKind.NO_SOLUTION_WITHIN_CUTOFF
    assert decision.min_value == 1
    assert [point.values for point in decision.argmin] == [(0, 2), (1, 1), (2, 0)]
    assert set(report.identified_tuples) == ground_group_tuples(cfg)
    assert "cutoff-limited" in report.caveats


@pytest.mark.parametrize(
    "equation,cutoff,kind,points,min_value",
    [
        ("x - 3", 4, DecisionKind.HAS_SOLUTION, [(3,)], None),
        (
            "x^2 + y^2 - 25",
            5,
            DecisionKind.HAS_SOLUTION,
            [(0, 5), (3, 4), (4, 3), (5, 0)],
            None,
        ),
        ("x^2 - 2", 3, DecisionKind.NO_SOLUTION_WITHIN_CUTOFF, [(1,)], 1),
        ("x^2 + 1", 3, DecisionKind.NO_SOLUTION_WITHIN_CUTOFF, [(0,)], 1),
    ],
)
def test_decide(equation, cutoff, kind, points, min_value):
    decision = decide(config(equation, cutoff))
    assert decision.kind is kind
    assert decision.min_value == min_value
    if kind is DecisionKind.HAS_SOLUTION:
        assert [point.values for point in decision.witnesses] == points
    else:
        assert [point.values for point in decision.argmin] == points


def test_identify_ground_state__not_dominant():
    report = identify_ground_state(
        config("x + y - 2", 2, shots=100, theta=0.99, t_list=(32, 64, 128))
    )
    assert report.identified is None
    assert report.decision.kind is DecisionKind.INCONCLUSIVE
    assert report.decision.reason is InconclusiveReason.NOT_DOMINANT
    assert "not-dominant" in report.caveats
    # even 100 hits out of 100 stay below 0.99 at confidence 1 - 1e-3
    assert all(record.dominant_lower_bound < 0.99 for record in report.records)
    assert report.to_dict()["identified_ground_space"] == "NOT_IDENTIFIED"


def test_decide__diabatic():
    decision = decide(config("x + y - 2", 2, t_list=(1e-3,)))
    assert decision.kind is DecisionKind.INCONCLUSIVE
    assert decision.reason in (
        InconclusiveReason.MATCH_FAILED,
        InconclusiveReason.NOT_DOMINANT,
    )


def test_decide__single_time_is_unstable():
    decision = decide(config("x - 3", 4, t_list=(128,)))
    assert decision.kind is DecisionKind.INCONCLUSIVE
    assert decision.reason is InconclusiveReason.UNSTABLE


def test_decide__guard_exceeded():
    cfg = config("x + y + z - 3", 40)
    with pytest.raises(BasisTooLargeError):
        identify_ground_state(cfg)
    decision = decide(cfg)
    assert decision.kind is DecisionKind.INCONCLUSIVE
    assert decision.reason is InconclusiveReason.GUARD_EXCEEDED
    assert "Reduce the cutoff" in decision.detail


def test_identify_ground_state__witness_check(monkeypatch):
    monkeypatch.setattr(
        "adiabatic_diophantine.verification.evaluate", lambda polynomial, point: 1
    )
    with pytest.raises(WitnessError):
        identify_ground_state(config("x - 3", 4, t_list=(64, 128)))


def test_report_determinism():
    cfg = config("x - 3", 4, t_list=(8, 16), shots=1000)
    first = identify_ground_state(cfg)
    second = identify_ground_state(cfg)
    assert json.dumps(without_timestamp(first)) == json.dumps(
        without_timestamp(second)
    )
    threaded = identify_ground_state(
        config("x - 3", 4, t_list=(8, 16), shots=1000, max_workers=2)
    )
    assert without_timestamp(threaded)["records"] == without_timestamp(first)["records"]


def test_report_to_dict():
    report = identify_ground_state(config("x - 3", 4, t_list=(64, 128), shots=1000))
    data = json.loads(json.dumps(report.to_dict()))
    assert data["schema"] == "adiabatic-diophantine/verification-report/1"
    assert data["stability_rule"] == "largest-two-T"
    assert data["basis"] == {"modes": 1, "cutoff": 4, "dimension": 5}
    assert data["identified_ground_space"] == {"indices": [3], "tuples": [[3]]}
    assert data["decision"]["kind"] == "HAS_SOLUTION"
    assert data["decision"]["witnesses"] == [[3]]
    assert data["min_energy_observed"] == 0
    assert data["calculated_ground_energy"] == 0
    record = data["records"][-1]
    assert record["T"] == 128.0
    assert record["seed"] == derive_seed(42, 128.0)
    assert record["measured"]["shots"] == 1000
    assert record["match"]["pass"] is True
    assert record["dominant"]["tuples"] == [[3]]
    assert math.isclose(sum(record["calculated"].values()), 1.0, abs_tol=1e-9)
    assert 0 <= record["final_ground_population"] <= 1


def test_cutoff_sweep():
    rows = cutoff_sweep(config("x^2 - 2", 1, t_list=(64, 128)), [1, 3])
    assert [row.cutoff for row in rows] == [1, 3]
    assert [row.dimension for row in rows] == [2, 4]
    assert [row.oracle_min_value for row in rows] == [1, 1]
    for row in rows:
        if row.decision.kind is not DecisionKind.INCONCLUSIVE:
            assert row.decision.min_value == row.oracle_min_value
    assert rows[0].to_dict()["cutoff"] == 1


@pytest.mark.parametrize("equation,cutoff", [("x - 3", 4), ("x^2 - 2", 3)])
def test_decide__monotone_in_time_and_shots(equation, cutoff):
    kinds = {
        decide(config(equation, cutoff, t_list=doubling_times(t_max), shots=shots)).kind
        for t_max in (128, 512)
        for shots in (10_000, 100_000)
    }
    assert not {
        DecisionKind.HAS_SOLUTION,
        DecisionKind.NO_SOLUTION_WITHIN_CUTOFF,
    } <= kinds
    assert kinds - {DecisionKind.INCONCLUSIVE}


@functools.lru_cache(maxsize=None)
def corpus_decision(equation, cutoff):
    return decide(RunConfig(parse_polynomial(equation), cutoff))


@pytest.mark.slow
def test_decide_agrees_with_oracle(corpus_case):
    equation, cutoff = corpus_case
    poly = parse_polynomial(equation)
    oracle = brute_force_minimum(poly, cutoff)
    argmin = {point.values for point in oracle.argmin}
    decision = corpus_decision(equation, cutoff)
    if decision.kind is DecisionKind.HAS_SOLUTION:
        assert oracle.min_value == 0
        assert {point.values for point in decision.witnesses} == argmin
        assert all(evaluate(poly, point) == 0 for point in decision.witnesses)
    elif decision.kind is DecisionKind.NO_SOLUTION_WITHIN_CUTOFF:
        assert decision.min_value == oracle.min_value
        assert {point.values for point in decision.argmin} == argmin


@pytest.mark.slow
def test_decide_conclusive_share():
    corpus = load_corpus()
    conclusive = sum(
        corpus_decision(equation, cutoff).kind is not DecisionKind.INCONCLUSIVE
        for equation, cutoff in corpus
    )
    assert conclusive >= 0.8 * len(corpus)
