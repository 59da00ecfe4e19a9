import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from netdebate.agents import AnswerLabel, ScriptedBackend, StochasticBackend
from netdebate.engine import DebateConfig, assign_bias, run_debate
from netdebate.errors import IncompleteData, InvalidInput, InvalidParameter
from netdebate.metrics import (
    accuracy_by_round,
    consensus_split,
    final_round_correct_fraction,
    influence_table,
    mean_stderr,
    neighbour_bin,
    simpson_index,
    token_cost_per_round,
    transition_counts,
)
from netdebate.topology import Network, complete_network, empty_network, gilbert_network, scale_free_network

from conftest import make_question, random_metric_run, star
from oracles import recount_influence, recount_transitions, table_as_keys, transitions_as_keys

L = AnswerLabel
labels_st = st.lists(st.sampled_from(list(AnswerLabel)), min_size=1, max_size=60)


class TestSimpson:
    def test_anchors(self):
        assert simpson_index([L.A] * 25) == 1.0
        assert simpson_index(list(AnswerLabel)) == pytest.approx(0.2, abs=1e-12)
        assert simpson_index([L.A, L.B] * 5) == pytest.approx(0.5, abs=1e-12)

    def test_undetermined_is_a_category(self):
        assert simpson_index([L.UNDETERMINED] * 4) == 1.0

    def test_empty(self):
        with pytest.raises(InvalidInput):
            simpson_index([])

    @given(labels_st)
    def test_bounds(self, labels):
        distinct = len(set(labels))
        lam = simpson_index(labels)
        assert 1 / distinct - 1e-12 <= lam <= 1.0

    @given(labels_st, st.randoms())
    def test_permutation_invariant(self, labels, rnd):
        shuffled = labels[:]
        rnd.shuffle(shuffled)
        assert simpson_index(shuffled) == simpson_index(labels)


class TestTokens:
    @pytest.mark.parametrize("edges,expected", [(300, 125000), (0, 5000), (59, 28600), (42, 21800)])
    def test_reference_values(self, edges, expected):
        pairs = [(u, v) for u in range(25) for v in range(u + 1, 25)][:edges]
        assert token_cost_per_round(Network.from_edges(25, pairs)).tokens_per_round == expected

    def test_generated_networks(self):
        assert token_cost_per_round(complete_network(25)).tokens_per_round == 125000
        assert token_cost_per_round(empty_network(25)).tokens_per_round == 5000

    def test_bad_cap(self):
        with pytest.raises(InvalidParameter):
            token_cost_per_round(star(3), cap=0)


class TestMeanStderr:
    def test_values(self):
        e = mean_stderr([0.6, 0.7, 0.8])
        assert e.mean == pytest.approx(0.7)
        assert e.stderr == pytest.approx(0.1 / 3 ** 0.5)

    def test_single(self):
        assert mean_stderr([0.5]).stderr == 0.0


def _scripted_runs(net, questions, grids, reps=1, rounds=4):
    backend = ScriptedBackend.from_grid(grids)
    cfg = DebateConfig(rounds=rounds)
    return [run_debate(net, backend, q, cfg, rep_index=rep) for q in questions for rep in range(reps)]


class TestAccuracy:
    def test_exact_fraction(self):
        questions = [make_question(f"q{i}", "A") for i in range(100)]
        grids = {q.id: [["A" if i < 67 else "B"] * 3] for i, q in enumerate(questions)}
        report = accuracy_by_round(_scripted_runs(star(3), questions, grids, rounds=1), questions)
        assert report.final.mean == pytest.approx(0.67)

    def test_all_undetermined(self):
        questions = [make_question(f"q{i}") for i in range(5)]
        grids = {q.id: [["Undetermined"] * 3] * 2 for q in questions}
        ts = _scripted_runs(star(3), questions, grids, rounds=2)
        assert all(a is L.UNDETERMINED for t in ts for a in t.system_answers)
        assert accuracy_by_round(ts, questions).final.mean == 0.0

    def test_stderr_across_repetitions(self):
        questions = [make_question("q0", "A")]
        backend = ScriptedBackend({("q0", 1, 0): L.A})
        good = run_debate(Network.from_edges(1, []), backend, questions[0], DebateConfig(rounds=1), rep_index=0)
        bad_backend = ScriptedBackend({("q0", 1, 0): L.B})
        bad = run_debate(Network.from_edges(1, []), bad_backend, questions[0], DebateConfig(rounds=1), rep_index=1)
        report = accuracy_by_round([good, bad], questions)
        assert report.final.mean == 0.5
        assert report.final.stderr == pytest.approx(0.5)

    def test_gap_raises(self, relay):
        net, q, backend = relay
        t = run_debate(net, backend, q, DebateConfig(rounds=4))
        with pytest.raises(IncompleteData):
            accuracy_by_round([t], [q], repetitions=2)
        with pytest.raises(IncompleteData):
            accuracy_by_round([t], [q, make_question("other")])

    def test_recompute_matches_stored(self):
        questions = [make_question(f"q{i}", "ABCD"[i % 4]) for i in range(40)]
        net = scale_free_network(25, seed=2)
        cfg = DebateConfig(rounds=4, seed=17)
        ts = [run_debate(net, StochasticBackend(), q, cfg, rep_index=r) for q in questions for r in range(3)]
        stored = accuracy_by_round(ts, questions)
        assert accuracy_by_round(ts, questions, recompute_seed=17) == stored

    def test_round1_near_half(self):
        questions = [make_question(f"q{i}", "ABCD"[i % 4]) for i in range(300)]
        net = scale_free_network(25, seed=0)
        ts = [run_debate(net, StochasticBackend(), q, DebateConfig(rounds=1), rep_index=r) for q in questions for r in range(3)]
        assert abs(accuracy_by_round(ts, questions).per_round[0].mean - 0.5) <= 0.05


class TestConsensus:
    def test_split(self):
        questions = [make_question("right", "A"), make_question("wrong", "A")]
        grids = {"right": [["A", "A", "B"]], "wrong": [["B", "B", "C"]]}
        report = consensus_split(_scripted_runs(star(3), questions, grids, rounds=1), questions)
        assert report.correct == pytest.approx(5 / 9)
        assert report.incorrect == pytest.approx(5 / 9)
        assert report.to_dict()["n_correct"] == 1

    def test_biased_agents_excluded(self, question):
        backend = ScriptedBackend.from_grid({question.id: [["A", "C", "C"]]})
        bias = assign_bias(star(3), "hub", "incorrect", 1, question, seed=0)
        t = run_debate(star(3), backend, question, DebateConfig(rounds=1), bias)
        assert consensus_split([t], [question]).overall == 1.0

    def test_empty_partition_is_none(self, question):
        backend = ScriptedBackend.from_grid({question.id: [["C", "C"]]})
        t = run_debate(complete_network(2), backend, question, DebateConfig(rounds=1))
        assert consensus_split([t], [question]).incorrect is None

    def test_correct_fraction(self, question):
        backend = ScriptedBackend.from_grid({question.id: [["C", "C", "A", "B"]]})
        t = run_debate(complete_network(4), backend, question, DebateConfig(rounds=1))
        assert final_round_correct_fraction([t], [question]) == {"complete": 0.5}


class TestInfluence:
    @pytest.mark.parametrize("k,d,expected", [(0, 4, 0), (1, 4, 1), (2, 4, 2), (3, 4, 3), (4, 4, 4), (1, 5, 1), (3, 5, 3), (1, 3, 1), (2, 3, 3)])
    def test_bins(self, k, d, expected):
        assert neighbour_bin(k, d, 5) == expected

    def test_hand_counted(self, question):
        # path 0-1-2, correct C
        net = Network.from_edges(3, [(0, 1), (1, 2)])
        backend = ScriptedBackend.from_grid({question.id: [["C", "A", "C"], ["C", "C", "A"]]})
        t = run_debate(net, backend, question, DebateConfig(rounds=2))
        table = influence_table([t], net, [question])
        # agents 0 and 2 were correct beside a wrong agent 1; agent 1 saw two correct neighbours
        assert table.cells == {(2, True, 0): [2, 1], (2, False, 4): [1, 1]}
        assert table.lookup(True, 0).probability == 0.5
        assert table.samples_in_round(2, True) == 2

    def test_isolated_tracked_separately(self, question):
        backend = ScriptedBackend.from_grid({question.id: [["C", "A"], ["C", "C"]]})
        t = run_debate(empty_network(2), backend, question, DebateConfig(rounds=2))
        rates = influence_table([t], empty_network(2), [question]).isolated_rates()
        assert rates["stay_correct"] == {"n_samples": 1, "rate": 1.0}
        assert rates["gain_correct"] == {"n_samples": 1, "rate": 1.0}

    def test_size_mismatch(self, relay):
        net, q, backend = relay
        t = run_debate(net, backend, q, DebateConfig(rounds=4))
        with pytest.raises(InvalidInput):
            influence_table([t], star(3), [q])

    def test_recovers_influence_rule(self):
        questions = [make_question(f"q{i}", "ABCD"[i % 4]) for i in range(150)]
        net = complete_network(25)
        backend = StochasticBackend(difficulty_concentration=None)
        ts = [run_debate(net, backend, q, DebateConfig(rounds=4)) for q in questions]
        table = influence_table(ts, net, questions)
        for prev, lo, hi in ((False, 0.10, 0.90), (True, 0.30, 0.95)):
            for row in (table.lookup(prev, b) for b in range(5)):
                if row.n_samples >= 300:
                    mid = (row.lower + row.upper) / 2
                    assert abs(row.probability - (lo + mid * (hi - lo))) < 0.12


class TestTransitions:
    def test_hand_counted(self, question):
        backend = ScriptedBackend.from_grid({question.id: [["C", "A"], ["A", "C"], ["A", "C"]]})
        t = run_debate(complete_network(2), backend, question, DebateConfig(rounds=3))
        pairs = transition_counts([t], [question]).pairs
        assert pairs[0] == {"correct->correct": 0, "incorrect->incorrect": 0, "incorrect->correct": 1, "correct->incorrect": 1}
        assert pairs[1] == {"correct->correct": 1, "incorrect->incorrect": 1, "incorrect->correct": 0, "correct->incorrect": 0}


@pytest.mark.parametrize("i", range(50))
def test_metrics_match_brute_force(i):
    nets, questions, transcripts = random_metric_run(i)
    raw = [t.to_dict() for t in transcripts]
    correct = {q.id: q.correct.value for q in questions}
    bins = 1 + i % 6
    table = influence_table(transcripts, {n.label: n for n in nets}, questions, bins=bins)
    expected = recount_influence(raw, {n.label: n.sorted_edges() for n in nets}, {n.label: n.n for n in nets}, correct, bins)
    assert table_as_keys(table) == expected
    assert transitions_as_keys(transition_counts(transcripts, questions)) == recount_transitions(raw, correct)
