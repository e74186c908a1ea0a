import random

import pytest

from pbconsensus.model import Ballot, ElectionInstance, Project


def make_election(costs, ballots, budget, district="Testville", year=2023, votes=None):
    """Instance from ``{id: cost}`` and a list of approval sets."""
    projects = tuple(Project(pid, c) for pid, c in costs.items())
    bs = tuple(Ballot(f"v{i + 1}", frozenset(b)) for i, b in enumerate(ballots))
    return ElectionInstance(district, year, budget, projects, bs).with_vote_counts()


def random_election(rng: random.Random, max_projects=6, max_voters=6):
    n = rng.randint(1, max_projects)
    costs = {str(i + 1): rng.randint(0, 20) * 5 for i in range(n)}
    budget = rng.randint(1, max(1, sum(costs.values())))
    ballots = []
    for _ in range(rng.randint(1, max_voters)):
        k = rng.randint(1, n)
        ballots.append(set(rng.sample(sorted(costs), k)))
    return costs, ballots, budget


@pytest.fixture
def tiny_doc():
    return (
        "META\n"
        "key;value\n"
        "description;Tiny test election\n"
        "district;Testville\n"
        "year;2023\n"
        "num_projects;3\n"
        "num_votes;2\n"
        "budget;700\n"
        "vote_type;approval\n"
        "PROJECTS\n"
        "project_id;cost;votes;name;category;target;selected\n"
        "1;200;2;Park;education,Sport;children;1\n"
        "2;300;1;Library;education;;0\n"
        "3;500;0;Road;;adults;0\n"
        "VOTES\n"
        "voter_id;vote\n"
        "a;1,2\n"
        "b;1\n"
    )


_CRITERIA: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        number, _, label = name[len("test_criterion_"):].partition("_")
        terminalreporter.write_line(f"criterion {int(number):>2} {label.replace('_', ' ')}: {_CRITERIA[name]}")
