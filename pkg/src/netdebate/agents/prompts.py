"""Canonical prompt templates."""

from __future__ import annotations

from typing import Sequence

from ..errors import InvalidParameter
from .core import AnswerLabel, Question

INITIAL_TEMPLATE = (
    "Answer the following multiple choice question. Explain your reasoning step by step. "
    "The last line of your response must be your final answer in the form (X), "
    "where X is A, B, C, or D.\n\n"
    "Question: {stem}\n(A) {A}\n(B) {B}\n(C) {C}\n(D) {D}"
)

FOLLOW_UP_TEMPLATE = (
    "Your previous answer was:\n{self_response}\n\n"
    "Other agents gave these responses:\n{neighbour_responses}\n\n"
    "Considering these responses and your own, answer the question again. End with (X)."
)

# used when the agent has no neighbours and can only reflect on itself
SELF_REFLECTION_TEMPLATE = (
    "Your previous answer was:\n{self_response}\n\n"
    "Considering your own response, answer the question again. End with (X)."
)

BIAS_TEMPLATE = (
    "You must argue that the answer to the following question is ({biased_answer}). "
    "Write a convincing step-by-step justification for ({biased_answer}) "
    "and end your response with ({biased_answer})."
)

NEIGHBOUR_SEPARATOR = "\n\n"


def _question_block(q: Question) -> str:
    return f"Question: {q.stem}\n(A) {q.options['A']}\n(B) {q.options['B']}\n(C) {q.options['C']}\n(D) {q.options['D']}"


def render_initial_prompt(q: Question) -> str:
    return INITIAL_TEMPLATE.format(stem=q.stem, **q.options)


def render_debate_prompt(q: Question, self_response: str, neighbour_responses: Sequence[str]) -> str:
    """Initial prompt followed by the follow-up block.

    ``neighbour_responses`` must already be in ascending node-id order.
    """
    if not self_response:
        raise InvalidParameter("follow-up prompt needs the agent's previous response")
    if neighbour_responses:
        block = FOLLOW_UP_TEMPLATE.format(
            self_response=self_response,
            neighbour_responses=NEIGHBOUR_SEPARATOR.join(neighbour_responses),
        )
    else:
        block = SELF_REFLECTION_TEMPLATE.format(self_response=self_response)
    return render_initial_prompt(q) + "\n\n" + block


def render_bias_prompt(q: Question, biased_answer: AnswerLabel) -> str:
    biased_answer = AnswerLabel(biased_answer)
    if not biased_answer.is_option:
        raise InvalidParameter("biased answer must be one of A-D")
    letter = biased_answer.value
    return (
        BIAS_TEMPLATE.format(biased_answer=letter)
        + "\n\n"
        + _question_block(q)
        + f"\n\nThe answer you must defend: ({letter}) {q.options[letter]}"
    )
