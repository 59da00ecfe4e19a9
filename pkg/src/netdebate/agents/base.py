"""Backend contract shared by the LLM, scripted and stochastic agents."""

from __future__ import annotations

from dataclasses import dataclass

from .core import AnswerLabel, Question, Response, synthesize_text


@dataclass(frozen=True)
class AgentTurn:
    """Everything one agent may see when answering in one round.

    ``neighbours`` holds ``(node_id, response)`` pairs from the previous round in
    ascending node order; it is empty in round 1 and for isolated agents.
    """

    question: Question
    node: int
    round: int
    repetition: int
    seed: int
    previous: Response | None = None
    neighbours: tuple[tuple[int, Response], ...] = ()


class AgentBackend:
    """Base class; subclasses implement :meth:`respond`.

    ``respond`` must be safe to call concurrently for different agents of the
    same round. It raises :class:`~netdebate.errors.AgentError` subclasses for
    per-turn failures and :class:`~netdebate.errors.ConfigError` for fatal ones.
    """

    name = "backend"
    offline = True

    def respond(self, turn: AgentTurn) -> Response:
        raise NotImplementedError

    def justify(self, question: Question, label: AnswerLabel) -> Response:
        """Reasoning for a biased agent that must defend ``label``."""
        return Response(synthesize_text(label), label, 1)

    def check(self) -> None:
        """Raise ConfigError if the backend cannot run at all."""
