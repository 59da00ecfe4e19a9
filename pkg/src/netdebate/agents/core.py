"""Answer labels, questions, responses and the answer grammar."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import InvalidParameter

OPTION_LETTERS = ("A", "B", "C", "D")
DEFAULT_TOKEN_CAP = 200


class AnswerLabel(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    UNDETERMINED = "Undetermined"

    @property
    def is_option(self) -> bool:
        return self is not AnswerLabel.UNDETERMINED

    @classmethod
    def options(cls) -> tuple["AnswerLabel", ...]:
        return (cls.A, cls.B, cls.C, cls.D)

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Question:
    id: str
    stem: str
    options: Mapping[str, str]
    correct: AnswerLabel

    def __post_init__(self):
        object.__setattr__(self, "correct", AnswerLabel(self.correct))
        if not self.correct.is_option:
            raise InvalidParameter(f"question {self.id}: correct label must be one of A-D")
        if sorted(self.options) != list(OPTION_LETTERS):
            raise InvalidParameter(f"question {self.id}: options must be exactly A, B, C, D")
        object.__setattr__(self, "options", dict((k, self.options[k]) for k in OPTION_LETTERS))

    def wrong_options(self) -> list[AnswerLabel]:
        return [label for label in AnswerLabel.options() if label is not self.correct]


@dataclass(frozen=True)
class Response:
    text: str
    label: AnswerLabel
    token_count: int
    error: str | None = field(default=None, compare=True)

    @property
    def failed(self) -> bool:
        return self.error is not None

    @classmethod
    def from_text(cls, text: str, token_count: int | None = None, cap: int = DEFAULT_TOKEN_CAP) -> "Response":
        count = count_tokens(text) if token_count is None else token_count
        return cls(text, parse_answer(text), min(count, cap))

    @classmethod
    def failure(cls, reason: str) -> "Response":
        return cls("", AnswerLabel.UNDETERMINED, 0, error=reason)

    def to_dict(self, node: int) -> dict:
        out = {"node": node, "text": self.text, "label": self.label.value, "token_count": self.token_count}
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Response":
        return cls(data["text"], AnswerLabel(data["label"]), int(data["token_count"]), data.get("error"))


def count_tokens(text: str) -> int:
    """Whitespace token estimate, used when a backend reports no usage."""
    return len(text.split())


_PAREN = re.compile(r"\(\s*([ABCD])\s*\)", re.IGNORECASE)
_ANSWER_WORD = re.compile(r"\banswer\s*(?:is|:|=)?\s*:?\s*([ABCD])\b(?![\w'])", re.IGNORECASE)
_BARE_LAST_LINE = re.compile(r"^\s*([ABCD])\s*[.):]?\s*$")


def parse_answer(text: str) -> AnswerLabel:
    """Extract the final answer from free text.

    Precedence:
      1. the last parenthesized option ``(A)``..``(D)``, any case;
      2. the last ``answer [is|:] X`` phrase, where X is an upper-case letter;
      3. a final non-empty line consisting of a single letter, e.g. ``B.``;
    otherwise ``Undetermined``.
    """
    matches = _PAREN.findall(text)
    if matches:
        return AnswerLabel(matches[-1].upper())
    letters = [m.group(1) for m in _ANSWER_WORD.finditer(text) if m.group(1).isupper()]
    if letters:
        return AnswerLabel(letters[-1])
    lines = [line for line in text.splitlines() if line.strip()]
    if lines:
        m = _BARE_LAST_LINE.match(lines[-1])
        if m:
            return AnswerLabel(m.group(1))
    return AnswerLabel.UNDETERMINED


def synthesize_text(label: AnswerLabel) -> str:
    """Placeholder response text for offline backends."""
    if not label.is_option:
        return "I cannot determine the answer."
    return f"({label.value})"


def ensure_final_answer(text: str, label: AnswerLabel) -> str:
    """Append ``(X)`` when ``text`` does not already parse to ``label``."""
    if parse_answer(text) is label:
        return text
    suffix = f"({label.value})"
    return f"{text.rstrip()}\n\n{suffix}" if text.strip() else suffix
