import numpy as np
import pytest

from nmps.envs import make_env


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def four_rooms():
    return make_env("fourrooms")


@pytest.fixture
def open_room():
    return make_env("fourrooms", layout="open")


@pytest.fixture
def ne_task():
    return make_env("fourrooms", task_id="reach-goal-NE")


def make_batch(obs, actions, next_obs, *, ws=None, skills=None, terminals=None,
               state_ids=None, next_state_ids=None, source="explor"):
    """Build a replay Batch directly from arrays."""
    from nmps.replay import Batch

    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    n = len(obs)
    return Batch(
        obs=obs,
        actions=np.asarray(actions, dtype=int),
        next_obs=np.atleast_2d(np.asarray(next_obs, dtype=float)),
        ws=np.zeros((n, 10)) if ws is None else np.asarray(ws, dtype=float),
        skills=np.full(n, -1) if skills is None else np.asarray(skills, dtype=int),
        terminals=np.zeros(n, bool) if terminals is None else np.asarray(terminals, dtype=bool),
        actors=np.full(n, "Explor"),
        steps=np.arange(n),
        state_ids=np.full(n, -1) if state_ids is None else np.asarray(state_ids, dtype=int),
        next_state_ids=np.full(n, -1) if next_state_ids is None else np.asarray(next_state_ids, dtype=int),
        source=source,
    )


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> str:
    line = f"acceptance {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
