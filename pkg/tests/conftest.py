import pytest

from vicinity import build_oracle, parse_edge_list
from vicinity.baselines import path_length
from vicinity.build import landmarks_from_members

PATH5 = "0 1\n1 2\n2 3\n3 4\n"
PATH11 = "".join(f"{i} {i + 1}\n" for i in range(10))

# (alpha, seed) pairs whose sampler draws exactly L={2} on PATH5 and L={2,8} on PATH11
PATH5_ALPHA, PATH5_SEED = 2.0, 701
PATH11_ALPHA, PATH11_SEED = 3.0, 447


@pytest.fixture
def path5():
    return parse_edge_list(PATH5)


@pytest.fixture
def path5_oracle(path5):
    return build_oracle(path5, alpha=1.0, seed=0, landmarks=landmarks_from_members(path5, [2]))


@pytest.fixture
def path11_oracle():
    g = parse_edge_list(PATH11)
    return build_oracle(g, alpha=1.0, seed=0, landmarks=landmarks_from_members(g, [2, 8]))


def assert_valid_walk(g, path, s, t, length):
    assert path[0] == s and path[-1] == t
    assert path_length(g, path) == pytest.approx(length, abs=1e-9)


_acceptance_lines = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
