"""Analyses over debate transcripts.

Every function here is pure. Undetermined answers count as incorrect
wherever correctness matters. Biased agents are excluded from all
agent-level statistics, but they still count as neighbours.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .agents import AnswerLabel, Question
from .engine import Transcript, majority_vote, vote_rng
from .errors import IncompleteData, InvalidInput, InvalidParameter
from .topology import Network

TRANSITION_CATEGORIES = ("correct->correct", "incorrect->incorrect", "incorrect->correct", "correct->incorrect")


def _question_map(questions: Iterable[Question]) -> dict[str, Question]:
    return {q.id: q for q in questions}


def _sorted(transcripts: Iterable[Transcript]) -> list[Transcript]:
    # fixed reduction order keeps floating-point sums reproducible
    return sorted(transcripts, key=lambda t: (t.network_label, _id_key(t.question_id), t.repetition))


def _id_key(qid: str):
    return (0, int(qid), "") if qid.isdigit() else (1, 0, qid)


def _correct_of(qmap: Mapping[str, Question], t: Transcript) -> AnswerLabel:
    try:
        return qmap[t.question_id].correct
    except KeyError:
        raise InvalidInput(f"transcript refers to unknown question {t.question_id!r}") from None


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float


def mean_stderr(values: Sequence[float]) -> Estimate:
    """Mean and standard error (sample std / sqrt(n)); stderr is 0 for n < 2."""
    if not values:
        raise InvalidInput("no values to summarize")
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return Estimate(mean, 0.0)
    return Estimate(mean, statistics.stdev(values) / math.sqrt(len(values)))


def simpson_index(labels: Sequence[AnswerLabel]) -> float:
    """Probability that two agents drawn with replacement gave the same answer."""
    if not labels:
        raise InvalidInput("Simpson index of an empty label list")
    counts = Counter(AnswerLabel(label) for label in labels)
    total = len(labels)
    return sum(c * c for c in counts.values()) / (total * total)


# --- accuracy -------------------------------------------------------------------------


@dataclass(frozen=True)
class AccuracyReport:
    per_round: list[Estimate]
    final: Estimate
    n_questions: int
    n_repetitions: int
    networks: list[str]
    stderr_definition: str = "sample std across repetitions / sqrt(repetitions)"

    def to_dict(self) -> dict:
        return {
            "per_round": [{"round": r, **asdict(e)} for r, e in enumerate(self.per_round, start=1)],
            "final": asdict(self.final),
            "n_questions": self.n_questions,
            "n_repetitions": self.n_repetitions,
            "networks": self.networks,
            "stderr_definition": self.stderr_definition,
        }

    def csv_rows(self) -> tuple[list[str], list[list]]:
        return ["round", "mean", "stderr"], [[r, e.mean, e.stderr] for r, e in enumerate(self.per_round, start=1)]


def _recomputed_answer(t: Transcript, round_: int, seed: int) -> AnswerLabel:
    voters = t.unbiased_nodes()
    labels = [t.rounds[round_ - 1][v].label for v in voters]
    return majority_vote(labels, vote_rng(seed, t.question_id, t.repetition, round_)).winner


def accuracy_by_round(
    transcripts: Iterable[Transcript],
    questions: Iterable[Question],
    repetitions: int | None = None,
    *,
    recompute_seed: int | None = None,
) -> AccuracyReport:
    """System accuracy after every round, mean and stderr across repetitions.

    Transcripts may come from several networks; each repetition's accuracy is
    averaged over all (network, question) pairs. ``recompute_seed`` re-derives
    system answers from the raw grids instead of trusting stored ones.
    """
    qmap = _question_map(questions)
    ts = _sorted(transcripts)
    if not ts:
        raise IncompleteData(["no transcripts"])
    reps = list(range(repetitions)) if repetitions is not None else sorted({t.repetition for t in ts})
    networks = sorted({t.network_label for t in ts})
    have = {(t.network_label, t.question_id, t.repetition): t for t in ts}
    gaps = [
        (net, qid, rep)
        for net in networks
        for qid in sorted(qmap, key=_id_key)
        for rep in reps
        if (net, qid, rep) not in have
    ]
    if gaps:
        raise IncompleteData(gaps)
    n_rounds = {t.n_rounds for t in ts}
    if len(n_rounds) != 1:
        raise InvalidInput(f"transcripts disagree on the number of rounds: {sorted(n_rounds)}")
    rounds = n_rounds.pop()

    per_round = []
    for r in range(1, rounds + 1):
        by_rep = []
        for rep in reps:
            hits = []
            for net in networks:
                for qid in sorted(qmap, key=_id_key):
                    t = have[(net, qid, rep)]
                    answer = t.system_answers[r - 1] if recompute_seed is None else _recomputed_answer(t, r, recompute_seed)
                    hits.append(1.0 if answer == qmap[qid].correct else 0.0)
            by_rep.append(math.fsum(hits) / len(hits))
        per_round.append(mean_stderr(by_rep))
    return AccuracyReport(per_round, per_round[-1], len(qmap), len(reps), networks)


# --- tokens ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TokenReport:
    tokens_per_round: int
    n: int
    n_edges: int
    cap: int

    def to_dict(self) -> dict:
        return asdict(self)


def token_cost_per_round(net: Network, cap: int = 200) -> TokenReport:
    """Input tokens per follow-up round: each agent reads its own and each neighbour's capped reply."""
    if cap < 1:
        raise InvalidParameter(f"token cap must be >= 1, got {cap}")
    return TokenReport(cap * (net.n + 2 * net.n_edges), net.n, net.n_edges, cap)


# --- consensus ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusEntry:
    network_label: str
    question_id: str
    repetition: int
    simpson: float
    system_correct: bool


@dataclass(frozen=True)
class ConsensusReport:
    overall: float | None
    correct: float | None
    incorrect: float | None
    entries: list[ConsensusEntry]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "n_correct": sum(e.system_correct for e in self.entries),
            "n_incorrect": sum(not e.system_correct for e in self.entries),
            "entries": [asdict(e) for e in self.entries],
        }


def _mean_or_none(values: list[float]) -> float | None:
    return math.fsum(values) / len(values) if values else None


def consensus_split(transcripts: Iterable[Transcript], questions: Iterable[Question]) -> ConsensusReport:
    """Final-round Simpson index over unbiased agents, split by system correctness."""
    qmap = _question_map(questions)
    entries = []
    for t in _sorted(transcripts):
        if not t.rounds:
            raise InvalidInput(f"transcript {t.question_id} has no rounds")
        final = t.rounds[-1]
        labels = [final[v].label for v in t.unbiased_nodes()]
        lam = simpson_index(labels)
        entries.append(ConsensusEntry(t.network_label, t.question_id, t.repetition, lam, t.system_answers[-1] == _correct_of(qmap, t)))
    return ConsensusReport(
        _mean_or_none([e.simpson for e in entries]),
        _mean_or_none([e.simpson for e in entries if e.system_correct]),
        _mean_or_none([e.simpson for e in entries if not e.system_correct]),
        entries,
    )


def final_round_correct_fraction(transcripts: Iterable[Transcript], questions: Iterable[Question]) -> dict[str, float]:
    """Per network: mean over debates of the share of unbiased agents correct at the end."""
    qmap = _question_map(questions)
    shares: dict[str, list[float]] = defaultdict(list)
    for t in _sorted(transcripts):
        correct = _correct_of(qmap, t)
        voters = t.unbiased_nodes()
        if not voters:
            continue
        hits = sum(t.rounds[-1][v].label == correct for v in voters)
        shares[t.network_label].append(hits / len(voters))
    return {label: math.fsum(v) / len(v) for label, v in sorted(shares.items())}


# --- influence ------------------------------------------------------------------------


@dataclass(frozen=True)
class InfluenceBin:
    prev_correct: bool
    bin_index: int
    lower: float
    upper: float
    n_samples: int
    n_correct: int

    @property
    def probability(self) -> float | None:
        return self.n_correct / self.n_samples if self.n_samples else None


@dataclass
class InfluenceTable:
    bins: int
    # (round, prev_correct, bin_index) -> [samples, correct]
    cells: dict[tuple[int, bool, int], list[int]] = field(default_factory=dict)
    # (round, prev_correct) -> [samples, correct] for agents without neighbours
    isolated: dict[tuple[int, bool], list[int]] = field(default_factory=dict)

    def rows(self) -> list[InfluenceBin]:
        out = []
        for prev in (True, False):
            for b in range(self.bins):
                n = sum(v[0] for (r, p, i), v in self.cells.items() if p == prev and i == b)
                k = sum(v[1] for (r, p, i), v in self.cells.items() if p == prev and i == b)
                out.append(InfluenceBin(prev, b, b / self.bins, (b + 1) / self.bins, n, k))
        return out

    def lookup(self, prev_correct: bool, bin_index: int) -> InfluenceBin:
        return next(row for row in self.rows() if row.prev_correct == prev_correct and row.bin_index == bin_index)

    def samples_in_round(self, round_: int, prev_correct: bool) -> int:
        return sum(v[0] for (r, p, _), v in self.cells.items() if r == round_ and p == prev_correct)

    def isolated_rates(self) -> dict:
        def agg(prev: bool) -> tuple[int, int]:
            n = sum(v[0] for (r, p), v in self.isolated.items() if p == prev)
            k = sum(v[1] for (r, p), v in self.isolated.items() if p == prev)
            return n, k

        stay_n, stay_k = agg(True)
        gain_n, gain_k = agg(False)
        return {
            "stay_correct": {"n_samples": stay_n, "rate": stay_k / stay_n if stay_n else None},
            "gain_correct": {"n_samples": gain_n, "rate": gain_k / gain_n if gain_n else None},
        }

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "rows": [
                {
                    "prev_correct": row.prev_correct,
                    "bin_index": row.bin_index,
                    "lower": row.lower,
                    "upper": row.upper,
                    "n_samples": row.n_samples,
                    "n_correct": row.n_correct,
                    "probability": row.probability,
                }
                for row in self.rows()
            ],
            "isolated": self.isolated_rates(),
        }


def neighbour_bin(n_correct: int, n_neighbours: int, bins: int) -> int:
    """Equal-width bin of the fraction ``n_correct / n_neighbours``; 1.0 falls in the last bin."""
    return min(n_correct * bins // n_neighbours, bins - 1)


def influence_table(
    transcripts: Iterable[Transcript],
    networks: Network | Mapping[str, Network],
    questions: Iterable[Question],
    bins: int = 5,
) -> InfluenceTable:
    """Tabulate P(correct at r) by own correctness and neighbour share at r-1.

    ``networks`` is a single network used for every transcript or a mapping from
    network label to network.
    """
    if bins < 1:
        raise InvalidParameter(f"bins must be >= 1, got {bins}")
    qmap = _question_map(questions)
    table = InfluenceTable(bins)
    for t in _sorted(transcripts):
        net = networks if isinstance(networks, Network) else networks[t.network_label]
        if net.n != t.n_agents:
            raise InvalidInput(f"network {net.label!r} has {net.n} nodes, transcript has {t.n_agents}")
        correct = _correct_of(qmap, t)
        for r in range(2, t.n_rounds + 1):
            before = [resp.label == correct for resp in t.rounds[r - 2]]
            now = t.rounds[r - 1]
            for v in t.unbiased_nodes():
                nbrs = net.adjacency[v]
                hit = int(now[v].label == correct)
                if not nbrs:
                    cell = table.isolated.setdefault((r, before[v]), [0, 0])
                else:
                    k = sum(before[w] for w in nbrs)
                    cell = table.cells.setdefault((r, before[v], neighbour_bin(k, len(nbrs), bins)), [0, 0])
                cell[0] += 1
                cell[1] += hit
    return table


# --- transitions ----------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionCounts:
    # index i holds the counts for round i+1 -> round i+2
    pairs: list[dict[str, int]]

    def to_dict(self) -> dict:
        return {"pairs": [{"from_round": i + 1, "to_round": i + 2, **c} for i, c in enumerate(self.pairs)]}

    def csv_rows(self) -> tuple[list[str], list[list]]:
        rows = []
        for i, counts in enumerate(self.pairs):
            for cat in TRANSITION_CATEGORIES:
                rows.append([f"{i + 1}->{i + 2}", cat, counts[cat]])
        return ["round_pair", "category", "count"], rows


def transition_counts(transcripts: Iterable[Transcript], questions: Iterable[Question]) -> TransitionCounts:
    qmap = _question_map(questions)
    pairs: list[dict[str, int]] = []
    for t in _sorted(transcripts):
        correct = _correct_of(qmap, t)
        while len(pairs) < t.n_rounds - 1:
            pairs.append({cat: 0 for cat in TRANSITION_CATEGORIES})
        for r in range(1, t.n_rounds):
            a, b = t.rounds[r - 1], t.rounds[r]
            for v in t.unbiased_nodes():
                was = "correct" if a[v].label == correct else "incorrect"
                now = "correct" if b[v].label == correct else "incorrect"
                pairs[r - 1][f"{was}->{now}"] += 1
    return TransitionCounts(pairs)
