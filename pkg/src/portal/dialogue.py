"""Two-tier response generation.

One chat call produces a covert Inner Thoughts section (self-reflection,
motivation, engagement intent) plus the Public Response; a sectioned output
grammar (INNER / INTENT / SPEAK / RESPONSE) separates the tiers. Inner
thoughts are operator-channel only and never reach speech synthesis.
"""
from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass

from .identity import Persona
from .persistence import StoredMemory
from .providers import (
    ChatMessage,
    ChatRequest,
    ErrorKind,
    ProviderError,
    ProviderSet,
    SchemaTag,
)

TRANSCRIPT_TAIL_TURNS = 12
HISTORY_WINDOW = 6
RELEVANT_WINDOW = 4

_SECTION_RE = re.compile(
    r"^\s*INNER:(?P<inner>.*?)\n\s*INTENT:(?P<intent>.*?)\n"
    r"\s*SPEAK:(?P<speak>.*?)\n\s*RESPONSE:(?P<response>.*?)\s*$",
    re.DOTALL,
)

REASK_INSTRUCTION = (
    "Your previous reply did not follow the required format. Reply again with "
    "exactly four lines: INNER: <covert thoughts>, INTENT: <number 0..1>, "
    "SPEAK: <yes|no>, RESPONSE: <reply, empty when SPEAK is no>."
)


@dataclass(frozen=True)
class TwoTierTurn:
    inner_thoughts: str
    engagement_intent: float
    speak: bool
    public_response: str

    def __post_init__(self):
        if not 0.0 <= self.engagement_intent <= 1.0:
            raise ValueError("engagement_intent must be in [0, 1]")
        if self.speak and not self.public_response:
            raise ValueError("speak=true requires a non-empty public_response")
        if not self.speak and self.public_response:
            raise ValueError("speak=false requires an empty public_response")


@dataclass(frozen=True)
class PromptContext:
    persona: Persona
    history_window: tuple[StoredMemory, ...]
    relevant_memories: tuple[tuple[StoredMemory, float], ...]
    transcript_tail: tuple[tuple[str, str], ...]  # (speaker, text)
    human_utterance: str

    def __post_init__(self):
        if len(self.transcript_tail) > TRANSCRIPT_TAIL_TURNS:
            raise ValueError(f"transcript_tail exceeds {TRANSCRIPT_TAIL_TURNS} turns")
        if not self.human_utterance:
            raise ValueError("human_utterance must be non-empty")


def format_two_tier(turn: TwoTierTurn) -> str:
    return (
        f"INNER: {turn.inner_thoughts}\n"
        f"INTENT: {turn.engagement_intent}\n"
        f"SPEAK: {'yes' if turn.speak else 'no'}\n"
        f"RESPONSE: {turn.public_response}"
    )


def parse_two_tier(raw: str) -> TwoTierTurn:
    if not raw:
        raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "empty model output")
    m = _SECTION_RE.match(raw)
    if m is None:
        raise ProviderError(
            ErrorKind.MALFORMED_RESPONSE, "missing INNER/INTENT/SPEAK/RESPONSE sections"
        )
    speak_raw = m.group("speak").strip().lower()
    if speak_raw not in ("yes", "no"):
        raise ProviderError(ErrorKind.MALFORMED_RESPONSE, f"bad SPEAK value {speak_raw!r}")
    try:
        intent = float(m.group("intent").strip())
    except ValueError as exc:
        raise ProviderError(ErrorKind.MALFORMED_RESPONSE, "bad INTENT value") from exc
    try:
        return TwoTierTurn(
            inner_thoughts=m.group("inner").strip(),
            engagement_intent=intent,
            speak=speak_raw == "yes",
            public_response=m.group("response").strip(),
        )
    except ValueError as exc:
        raise ProviderError(ErrorKind.MALFORMED_RESPONSE, str(exc)) from exc


def _memory_block(lines: list[str]) -> str:
    return "\n".join(lines) if lines else "(no memories yet)"


def compose_prompt(ctx: PromptContext) -> ChatRequest:
    """Deterministic prompt assembly: persona, memory blocks, output grammar."""
    template = (
        importlib.resources.files("portal.assets")
        .joinpath("dialogue_prompt.txt")
        .read_text(encoding="utf-8")
    )
    history = _memory_block(
        [f"- {m.speaker}: {m.text}" for m in ctx.history_window]
    )
    relevant = _memory_block(
        [f"- ({score:.3f}) {m.speaker}: {m.text}" for m, score in ctx.relevant_memories]
    )
    system_prompt = (
        template
        .replace("{name}", ctx.persona.name)
        .replace("{traits}", ", ".join(ctx.persona.traits))
        .replace("{speaking_style}", ctx.persona.speaking_style)
        .replace("{backstory}", ctx.persona.backstory)
        .replace("{mood}", ctx.persona.mood_seed)
        .replace("{history}", history)
        .replace("{relevant}", relevant)
    )
    # transcript tail as alternating chat turns; consecutive same-speaker
    # entries merge so the role sequence stays valid
    messages: list[ChatMessage] = []
    for speaker, text in ctx.transcript_tail:
        role = "user" if speaker == "human" else "assistant"
        if messages and messages[-1].role == role:
            messages[-1] = ChatMessage(role, messages[-1].text + "\n" + text)
        else:
            messages.append(ChatMessage(role, text))
    if messages and messages[-1].role == "user":
        messages[-1] = ChatMessage(
            "user", messages[-1].text + "\n" + ctx.human_utterance
        )
    else:
        messages.append(ChatMessage("user", ctx.human_utterance))
    return ChatRequest(
        system_prompt=system_prompt,
        messages=tuple(messages),
        response_schema_tag=SchemaTag.TWO_TIER_TURN,
    )


def generate_turn(ctx: PromptContext, providers: ProviderSet) -> TwoTierTurn:
    """compose → chat → parse, with one corrective re-ask on malformed output."""
    request = compose_prompt(ctx)
    raw = providers.chat.chat(request)
    try:
        return parse_two_tier(raw)
    except ProviderError as err:
        if err.kind is not ErrorKind.MALFORMED_RESPONSE:
            raise
        retry = ChatRequest(
            system_prompt=request.system_prompt,
            messages=request.messages
            + (ChatMessage("assistant", raw), ChatMessage("user", REASK_INSTRUCTION)),
            response_schema_tag=SchemaTag.TWO_TIER_TURN,
        )
        return parse_two_tier(providers.chat.chat(retry))
