import csv
from pathlib import Path

CORPUS_PATH = Path(__file__).parent / "data" / "corpus.csv"


def load_corpus():
    with open(CORPUS_PATH, encoding="utf-8", newline="") as handle:
        return [(row["equation"], int(row["cutoff"])) for row in csv.DictReader(handle)]


def pytest_generate_tests(metafunc):
    # every test taking ``corpus_case`` runs once per corpus instance
    if "corpus_case" in metafunc.fixturenames:
        cases = load_corpus()
        metafunc.parametrize(
            "corpus_case", cases, ids=[f"{eq}|N={cutoff}" for eq, cutoff in cases]
        )
