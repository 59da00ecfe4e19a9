"""Replay backend: answers come from a fixed table, for tests and fixtures."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from ..errors import ConfigError, ParseError, ScriptGap
from .base import AgentBackend, AgentTurn
from .core import AnswerLabel, Response, synthesize_text

ScriptKey = tuple[str, int, int]  # (question id, round, node)


def scripted_respond(script: Mapping[ScriptKey, AnswerLabel], question_id: str, round_: int, node: int) -> Response:
    key = (question_id, round_, node)
    try:
        label = AnswerLabel(script[key])
    except KeyError:
        raise ScriptGap(key) from None
    return Response(synthesize_text(label), label, 1)


class ScriptedBackend(AgentBackend):
    name = "scripted"

    def __init__(self, script: Mapping[ScriptKey, AnswerLabel | str]):
        self.script = {key: AnswerLabel(value) for key, value in script.items()}

    @classmethod
    def from_grid(cls, grids: Mapping[str, list[list[str]]]) -> "ScriptedBackend":
        """Build from ``{question_id: [[round-1 labels by node], [round 2], ...]}``."""
        script = {}
        for qid, rounds in grids.items():
            for r, row in enumerate(rounds, start=1):
                for node, label in enumerate(row):
                    script[(str(qid), r, node)] = label
        return cls(script)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"script file {path} does not exist")
        try:
            data = json.loads(path.read_text())
            return cls.from_grid(data)
        except (json.JSONDecodeError, ValueError, TypeError, AttributeError) as exc:
            raise ParseError(f"bad script file {path}: {exc}") from None

    def respond(self, turn: AgentTurn) -> Response:
        return scripted_respond(self.script, turn.question.id, turn.round, turn.node)
