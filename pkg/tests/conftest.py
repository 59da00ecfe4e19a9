import random

import pytest

from netdebate.agents import AnswerLabel, Question, ScriptedBackend, StochasticBackend
from netdebate.engine import DebateConfig, assign_bias, run_debate
from netdebate.topology import Network, complete_network, empty_network, gilbert_network, scale_free_network


def make_question(qid="q1", correct="C"):
    return Question(qid, f"What is the answer to {qid}?", {k: f"text {k}" for k in "ABCD"}, correct)


def star(n):
    return Network.from_edges(n, [(0, v) for v in range(1, n)], label=f"star{n}")


def path_graph(n):
    return Network.from_edges(n, [(v, v + 1) for v in range(n - 1)], label=f"path{n}")


# Five agents; agent 2 sits in the middle and reaches everyone within two hops.
RELAY_EDGES = [(0, 1), (1, 2), (2, 3), (2, 4), (3, 4)]
RELAY_SCRIPT = [
    ["A", "A", "B", "A", "D"],  # everyone wrong
    ["A", "A", "C", "A", "D"],  # agent 2 corrects itself by self-reflection
    ["A", "C", "C", "C", "C"],  # its neighbours adopt C
    ["C", "C", "C", "C", "C"],  # C reaches agent 0
]
RELAY_VOTES = [AnswerLabel.A, AnswerLabel.A, AnswerLabel.C, AnswerLabel.C]


@pytest.fixture
def relay():
    net = Network.from_edges(5, RELAY_EDGES, label="relay")
    q = make_question("relay", "C")
    backend = ScriptedBackend.from_grid({"relay": RELAY_SCRIPT})
    return net, q, backend


@pytest.fixture
def question():
    return make_question()


def random_debate_case(i):
    """A seeded random network, question, bias and backend for invariant checks."""
    rng = random.Random(i)
    kind = rng.choice(["sf", "gilbert", "complete", "empty"])
    net = {
        "sf": lambda: scale_free_network(25, seed=i),
        "gilbert": lambda: gilbert_network(rng.randint(3, 25), 0.2, seed=i),
        "complete": lambda: complete_network(rng.randint(1, 25)),
        "empty": lambda: empty_network(rng.randint(1, 25)),
    }[kind]()
    q = make_question(f"q{i}", rng.choice("ABCD"))
    bias = []
    if net.n > 2 and rng.random() < 0.6:
        bias = assign_bias(net, rng.choice(["hub", "edge"]), rng.choice(["correct", "incorrect"]), rng.randint(1, 2), q, seed=i)
    if rng.random() < 0.5:
        backend = StochasticBackend()
    else:
        grid = [[rng.choice(list("ABCD") + ["Undetermined"]) for _ in range(net.n)] for _ in range(4)]
        backend = ScriptedBackend.from_grid({q.id: grid})
    return net, q, bias, backend, DebateConfig(rounds=4, seed=i)


def random_metric_run(i):
    """Two networks, a few questions, random bias; returns (networks, questions, transcripts)."""
    rng = random.Random(i)
    nets = [scale_free_network(25, seed=i), gilbert_network(rng.randint(2, 15), rng.random(), seed=i, label="g")]
    questions = [make_question(f"q{j}", rng.choice("ABCD")) for j in range(rng.randint(1, 4))]
    transcripts = []
    for net in nets:
        for q in questions:
            bias = assign_bias(net, rng.choice(["hub", "edge"]), rng.choice(["correct", "incorrect"]), rng.randint(0, 2), q, seed=i)
            if rng.random() < 0.5:
                backend = StochasticBackend()
            else:
                grid = [[rng.choice(list("ABCD") + ["Undetermined"]) for _ in range(net.n)] for _ in range(4)]
                backend = ScriptedBackend.from_grid({q.id: grid})
            transcripts.append(run_debate(net, backend, q, DebateConfig(rounds=4, seed=i), bias))
    return nets, questions, transcripts


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
