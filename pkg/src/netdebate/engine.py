"""Synchronous multi-round debate on a network, with bias and majority vote."""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .agents import AgentBackend, AgentTurn, AnswerLabel, Question, Response
from .agents.core import DEFAULT_TOKEN_CAP, count_tokens, ensure_final_answer, synthesize_text
from .errors import AgentError, InvalidInput, InvalidParameter
from .seeding import stream
from .topology import Network, select_hubs, select_periphery

log = logging.getLogger(__name__)

BIAS_MODES = ("correct", "incorrect")
BIAS_PLACEMENTS = ("hub", "edge")


@dataclass(frozen=True)
class DebateConfig:
    rounds: int = 4
    output_token_cap: int = DEFAULT_TOKEN_CAP
    repetitions: int = 3
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.rounds < 1 or self.output_token_cap < 1 or self.repetitions < 1 or self.workers < 1:
            raise InvalidParameter("rounds, output_token_cap, repetitions and workers must all be >= 1")


@dataclass(frozen=True)
class BiasSpec:
    node: int
    mode: str
    fixed_label: AnswerLabel
    justification: str = ""

    def __post_init__(self):
        if self.mode not in BIAS_MODES:
            raise InvalidParameter(f"bias mode must be one of {BIAS_MODES}, got {self.mode!r}")
        object.__setattr__(self, "fixed_label", AnswerLabel(self.fixed_label))
        if not self.fixed_label.is_option:
            raise InvalidParameter("biased label must be one of A-D")

    def check_against(self, q: Question) -> None:
        if self.mode == "correct" and self.fixed_label != q.correct:
            raise InvalidParameter(f"node {self.node}: correct bias must carry {q.correct.value}")
        if self.mode == "incorrect" and self.fixed_label == q.correct:
            raise InvalidParameter(f"node {self.node}: incorrect bias carries the correct label")

    def response(self, cap: int) -> Response:
        text = ensure_final_answer(self.justification or synthesize_text(self.fixed_label), self.fixed_label)
        return Response(text, self.fixed_label, min(cap, count_tokens(text)))


@dataclass(frozen=True)
class VoteOutcome:
    winner: AnswerLabel
    counts: Mapping[AnswerLabel, int]
    tie: bool


@dataclass
class Transcript:
    network_label: str
    question_id: str
    repetition: int
    bias: list[BiasSpec]
    rounds: list[list[Response]]
    system_answers: list[AnswerLabel]
    warnings: list[str] = field(default_factory=list, compare=False)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def n_agents(self) -> int:
        return len(self.rounds[0]) if self.rounds else 0

    @property
    def biased_nodes(self) -> frozenset[int]:
        return frozenset(b.node for b in self.bias)

    def unbiased_nodes(self) -> list[int]:
        skip = self.biased_nodes
        return [v for v in range(self.n_agents) if v not in skip]

    def labels(self, round_: int) -> list[AnswerLabel]:
        """Labels of every node in 1-based round ``round_``."""
        return [r.label for r in self.rounds[round_ - 1]]

    def failures(self) -> int:
        return sum(r.failed for row in self.rounds for r in row)

    def to_dict(self) -> dict:
        return {
            "network_label": self.network_label,
            "question_id": self.question_id,
            "repetition": self.repetition,
            "bias": [{"node": b.node, "mode": b.mode, "label": b.fixed_label.value} for b in self.bias],
            "rounds": [[resp.to_dict(node) for node, resp in enumerate(row)] for row in self.rounds],
            "system_answers": [a.value for a in self.system_answers],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "Transcript":
        rounds = []
        for row in data["rounds"]:
            ordered = sorted(row, key=lambda entry: entry["node"])
            if [entry["node"] for entry in ordered] != list(range(len(ordered))):
                raise InvalidInput("transcript round does not cover nodes 0..n-1")
            rounds.append([Response.from_dict(entry) for entry in ordered])
        bias = [
            BiasSpec(int(b["node"]), b["mode"], AnswerLabel(b["label"]), rounds[0][int(b["node"])].text if rounds else "")
            for b in data["bias"]
        ]
        return cls(
            network_label=data["network_label"],
            question_id=str(data["question_id"]),
            repetition=int(data["repetition"]),
            bias=bias,
            rounds=rounds,
            system_answers=[AnswerLabel(a) for a in data["system_answers"]],
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_dict(json.loads(text))


def majority_vote(labels: Sequence[AnswerLabel], tie_rng: random.Random) -> VoteOutcome:
    """Plurality over A-D; ties broken uniformly with ``tie_rng``.

    Undetermined is counted but only wins when no voter chose an option.
    """
    if not labels:
        raise InvalidInput("majority vote needs at least one label")
    tally = Counter(AnswerLabel(label) for label in labels)
    counts = {label: tally.get(label, 0) for label in AnswerLabel}
    best = max(counts[o] for o in AnswerLabel.options())
    if best == 0:
        return VoteOutcome(AnswerLabel.UNDETERMINED, counts, False)
    leaders = [o for o in AnswerLabel.options() if counts[o] == best]
    if len(leaders) == 1:
        return VoteOutcome(leaders[0], counts, False)
    return VoteOutcome(tie_rng.choice(leaders), counts, True)


def vote_rng(seed: int, question_id: str, repetition: int, round_: int) -> random.Random:
    return stream("vote", seed, question_id, repetition, round_)


def eligible_voters(net: Network, bias: Iterable[BiasSpec]) -> list[int]:
    skip = {b.node for b in bias}
    return [v for v in range(net.n) if v not in skip]


def assign_bias(
    net: Network,
    placement: str,
    mode: str,
    k: int,
    q: Question,
    seed: int,
    *,
    placement_seed: int | None = None,
    backend: AgentBackend | None = None,
) -> list[BiasSpec]:
    """Pick ``k`` nodes by placement and fix their answer.

    Incorrectly biased nodes all share one wrong option drawn with ``seed``.
    Periphery nodes are sampled with ``placement_seed`` (default ``seed``) so
    callers can keep the same edge nodes across questions. Without a backend
    the justification is placeholder text.
    """
    if placement not in BIAS_PLACEMENTS:
        raise InvalidParameter(f"bias placement must be one of {BIAS_PLACEMENTS}, got {placement!r}")
    if mode not in BIAS_MODES:
        raise InvalidParameter(f"bias mode must be one of {BIAS_MODES}, got {mode!r}")
    if not 0 <= k <= net.n:
        raise InvalidParameter(f"cannot bias {k} of {net.n} nodes")
    if placement == "hub":
        nodes = select_hubs(net, k)
    else:
        nodes = select_periphery(net, k, seed if placement_seed is None else placement_seed)
    if mode == "correct":
        label = q.correct
    else:
        label = random.Random(seed).choice(q.wrong_options())

    justification = synthesize_text(label)
    if backend is not None and nodes:
        try:
            justification = backend.justify(q, label).text
        except AgentError as exc:
            log.warning("question %s: bias justification failed (%s); using placeholder", q.id, exc)
    return [BiasSpec(v, mode, label, justification) for v in sorted(nodes)]


def _validate_bias(net: Network, q: Question, bias: Sequence[BiasSpec]) -> None:
    seen = set()
    for b in bias:
        if not 0 <= b.node < net.n:
            raise InvalidParameter(f"biased node {b.node} outside network of size {net.n}")
        if b.node in seen:
            raise InvalidParameter(f"node {b.node} biased twice")
        seen.add(b.node)
        b.check_against(q)


def run_debate(
    net: Network,
    backend: AgentBackend,
    q: Question,
    cfg: DebateConfig,
    bias: Sequence[BiasSpec] = (),
    rep_index: int = 0,
    *,
    query_order: Sequence[int] | None = None,
) -> Transcript:
    """Run one debate and record every response and the per-round vote.

    All agents in round ``r`` see only round ``r-1`` responses: their own and
    those of their graph neighbours. Biased agents repeat their fixed answer and
    are excluded from the vote. A backend failure turns into an Undetermined
    response carrying the error text. ``query_order`` only changes the order of
    backend calls within a round.
    """
    _validate_bias(net, q, bias)
    cap = cfg.output_token_cap
    fixed = {b.node: b.response(cap) for b in bias}
    voters = eligible_voters(net, bias)
    order = list(range(net.n)) if query_order is None else list(query_order)
    if sorted(order) != list(range(net.n)):
        raise InvalidParameter("query_order must be a permutation of the node ids")
    active = [v for v in order if v not in fixed]

    grid: list[list[Response]] = []
    system: list[AnswerLabel] = []
    warnings: list[str] = []

    def answer(turn: AgentTurn) -> Response:
        try:
            resp = backend.respond(turn)
        except AgentError as exc:
            msg = f"question {q.id} rep {rep_index} round {turn.round} node {turn.node}: {exc}"
            log.warning("agent failed: %s", msg)
            warnings.append(msg)
            return Response.failure(str(exc))
        if resp.token_count > cap:
            resp = Response(resp.text, resp.label, cap, resp.error)
        return resp

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 and len(active) > 1 else None
    try:
        for r in range(1, cfg.rounds + 1):
            prev = grid[-1] if grid else None
            turns = [
                AgentTurn(
                    question=q,
                    node=v,
                    round=r,
                    repetition=rep_index,
                    seed=cfg.seed,
                    previous=None if prev is None else prev[v],
                    neighbours=() if prev is None else tuple((w, prev[w]) for w in net.adjacency[v]),
                )
                for v in active
            ]
            results = list(pool.map(answer, turns)) if pool else [answer(t) for t in turns]
            row: list[Response | None] = [None] * net.n
            for v, resp in fixed.items():
                row[v] = resp
            for t, resp in zip(turns, results):
                row[t.node] = resp
            grid.append(row)  # type: ignore[arg-type]
            outcome = majority_vote([row[v].label for v in voters], vote_rng(cfg.seed, q.id, rep_index, r))
            system.append(outcome.winner)
    finally:
        if pool:
            pool.shutdown()

    return Transcript(net.label, q.id, rep_index, list(bias), grid, system, warnings)


def check_transcript(t: Transcript, n_rounds: int | None = None) -> list[str]:
    """Return a list of invariant violations (empty when consistent)."""
    problems = []
    if n_rounds is not None and t.n_rounds != n_rounds:
        problems.append(f"expected {n_rounds} rounds, found {t.n_rounds}")
    if len(t.system_answers) != t.n_rounds:
        problems.append("one system answer per round required")
    width = {len(row) for row in t.rounds}
    if len(width) > 1:
        problems.append("rounds have different numbers of agents")
    for b in t.bias:
        labels = {row[b.node].label for row in t.rounds}
        if labels != {b.fixed_label}:
            problems.append(f"biased node {b.node} changed its answer")
    voters = t.unbiased_nodes()
    for r, stored in enumerate(t.system_answers, start=1):
        if r > t.n_rounds or not voters:
            break
        counts = Counter(t.rounds[r - 1][v].label for v in voters)
        best = max(counts.get(o, 0) for o in AnswerLabel.options())
        if best == 0:
            ok = stored == AnswerLabel.UNDETERMINED
        else:
            ok = stored.is_option and counts.get(stored, 0) == best
        if not ok:
            problems.append(f"round {r}: stored system answer {stored.value} is not a plurality winner")
    return problems
