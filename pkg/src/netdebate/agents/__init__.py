"""Agent backends, prompt rendering and answer parsing."""

from .base import AgentBackend, AgentTurn
from .core import (
    DEFAULT_TOKEN_CAP,
    AnswerLabel,
    Question,
    Response,
    count_tokens,
    ensure_final_answer,
    parse_answer,
    synthesize_text,
)
from .llm import AuthError, ChatClient, LLMBackend
from .prompts import render_bias_prompt, render_debate_prompt, render_initial_prompt
from .scripted import ScriptedBackend, scripted_respond
from .stochastic import InfluenceParams, StochasticBackend, influence_probability, stochastic_respond

__all__ = [
    "AgentBackend",
    "AgentTurn",
    "AnswerLabel",
    "AuthError",
    "ChatClient",
    "DEFAULT_TOKEN_CAP",
    "InfluenceParams",
    "LLMBackend",
    "Question",
    "Response",
    "ScriptedBackend",
    "StochasticBackend",
    "count_tokens",
    "ensure_final_answer",
    "influence_probability",
    "parse_answer",
    "render_bias_prompt",
    "render_debate_prompt",
    "render_initial_prompt",
    "scripted_respond",
    "stochastic_respond",
    "synthesize_text",
]
