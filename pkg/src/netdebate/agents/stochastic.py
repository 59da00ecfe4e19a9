"""Offline opinion-dynamics agent calibrated to observed LLM influence rates.

An agent's chance of answering correctly depends only on whether it was
correct in the previous round and on the fraction of its neighbours that were.
"""

from __future__ import annotations

import random
import threading
from dataclasses import asdict, dataclass, replace
from typing import Sequence

from ..errors import InvalidParameter
from ..seeding import stream
from .base import AgentBackend, AgentTurn
from .core import AnswerLabel, Question, Response, synthesize_text


@dataclass(frozen=True)
class InfluenceParams:
    p_incorrect_f0: float = 0.10
    p_correct_f0: float = 0.30
    p_incorrect_f1: float = 0.90
    p_correct_f1: float = 0.95
    p_stay_correct_isolated: float = 0.85
    p_gain_correct_isolated: float = 0.15
    p_round1_correct: float = 0.50

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must lie in [0, 1], got {value}")
        if self.p_correct_f0 < self.p_incorrect_f0 or self.p_correct_f1 < self.p_incorrect_f1:
            raise InvalidParameter("previously-correct agents must be at least as likely to be correct")

    def to_dict(self) -> dict:
        return asdict(self)


def influence_probability(prev_correct: bool, frac_correct_neighbours: float, params: InfluenceParams = InfluenceParams()) -> float:
    """P(correct this round), linear in the fraction of correct neighbours."""
    f = frac_correct_neighbours
    if not 0.0 <= f <= 1.0:
        raise InvalidParameter(f"neighbour fraction must lie in [0, 1], got {f}")
    if prev_correct:
        lo, hi = params.p_correct_f0, params.p_correct_f1
    else:
        lo, hi = params.p_incorrect_f0, params.p_incorrect_f1
    return lo + f * (hi - lo)


def stochastic_respond(
    q: Question,
    prev_label: AnswerLabel | None,
    neighbour_labels: Sequence[AnswerLabel],
    params: InfluenceParams,
    rng: random.Random,
    *,
    distractor: AnswerLabel | None = None,
) -> Response:
    """Draw one answer.

    ``prev_label=None`` marks round 1. With no neighbours a later-round agent
    uses the isolated stay/gain rates. A wrong answer is ``distractor`` when
    given, otherwise uniform over the three wrong options. Undetermined
    previous labels count as incorrect.
    """
    if prev_label is None:
        p = params.p_round1_correct
    else:
        prev_correct = prev_label == q.correct
        if neighbour_labels:
            frac = sum(label == q.correct for label in neighbour_labels) / len(neighbour_labels)
            p = influence_probability(prev_correct, frac, params)
        else:
            p = params.p_stay_correct_isolated if prev_correct else params.p_gain_correct_isolated

    if rng.random() < p:
        label = q.correct
    elif distractor is not None:
        if distractor == q.correct or not AnswerLabel(distractor).is_option:
            raise InvalidParameter("distractor must be a wrong option")
        label = AnswerLabel(distractor)
    else:
        label = rng.choice(q.wrong_options())
    return Response(synthesize_text(label), label, 1)


class StochasticBackend(AgentBackend):
    """Seeded stochastic agents.

    Two question-level effects sit on top of :func:`stochastic_respond`:

    * ``difficulty_concentration``: each (question, repetition) draws its own
      round-1 correctness probability from Beta(k*p, k*(1-p)) with
      ``p = p_round1_correct``; the mean stays ``p`` but agents on the same
      question are correlated. ``None`` disables this.
    * ``distractor_weight``: probability that a wrong answer goes to the
      question's single attractive wrong option instead of a uniform wrong one.

    Every draw comes from a stream keyed by (run seed, question, repetition,
    round, node), so results do not depend on query order.
    """

    name = "stochastic"

    def __init__(
        self,
        params: InfluenceParams | None = None,
        difficulty_concentration: float | None = 1.0,
        distractor_weight: float = 1.0,
    ):
        self.params = params or InfluenceParams()
        if difficulty_concentration is not None and difficulty_concentration <= 0:
            raise InvalidParameter("difficulty_concentration must be positive or None")
        if not 0.0 <= distractor_weight <= 1.0:
            raise InvalidParameter("distractor_weight must lie in [0, 1]")
        self.difficulty_concentration = difficulty_concentration
        self.distractor_weight = distractor_weight
        self._lock = threading.Lock()
        self._difficulty: dict[tuple, float] = {}

    def round1_probability(self, seed: int, question_id: str, repetition: int) -> float:
        p = self.params.p_round1_correct
        k = self.difficulty_concentration
        if k is None or p in (0.0, 1.0):
            return p
        key = (seed, question_id, repetition)
        with self._lock:
            cached = self._difficulty.get(key)
        if cached is None:
            cached = stream("difficulty", *key).betavariate(k * p, k * (1.0 - p))
            with self._lock:
                self._difficulty[key] = cached
        return cached

    @staticmethod
    def question_distractor(seed: int, q: Question) -> AnswerLabel:
        return stream("distractor", seed, q.id).choice(q.wrong_options())

    def respond(self, turn: AgentTurn) -> Response:
        q = turn.question
        rng = stream("agent", turn.seed, q.id, turn.repetition, turn.round, turn.node)
        distractor = None
        if self.distractor_weight >= 1.0 or (self.distractor_weight > 0.0 and rng.random() < self.distractor_weight):
            distractor = self.question_distractor(turn.seed, q)
        params = self.params
        if turn.previous is None:
            params = replace(params, p_round1_correct=self.round1_probability(turn.seed, q.id, turn.repetition))
            prev = None
        else:
            prev = turn.previous.label
        return stochastic_respond(q, prev, [r.label for _, r in turn.neighbours], params, rng, distractor=distractor)
