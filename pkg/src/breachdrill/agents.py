"""LLM teammate roles: personas, prompt templates, rosters, and responses.

Teammates are prompt-engineered tutors first and players second: every
non-narrator prompt carries the teaching objective verbatim, the current
support-ladder rung, and a Bloom-process directive for how deep the help
should go. The Red-Team Narrator is the adversary's voice and is exempt
from the teaching objective.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

from .backends import BackendError, CompletionBackend
from .engine import HudSnapshot
from .scaffolding import BloomProcess, ScaffoldLevel

TEACHING_OBJECTIVE = "Your primary mission is to help the learner grow."


class RoleKind(str, Enum):
    INCIDENT_CAPTAIN = "IncidentCaptain"
    DEFENDER = "Defender"
    RED_TEAM_NARRATOR = "RedTeamNarrator"
    HUMAN_DEFENDER = "HumanDefender"


class SenderKind(str, Enum):
    """Who a chat message speaks for (roster roles plus the human, the
    copilot, and system notices)."""

    INCIDENT_CAPTAIN = "IncidentCaptain"
    DEFENDER = "Defender"
    RED_TEAM_NARRATOR = "RedTeamNarrator"
    HUMAN_DEFENDER = "HumanDefender"
    HUMAN = "Human"
    COPILOT = "Copilot"
    SYSTEM = "System"


class Channel(str, Enum):
    GAME = "Game"
    COPILOT = "Copilot"


class TopologyTag(str, Enum):
    CENTRALIZED = "Centralized"
    DECENTRALIZED = "Decentralized"
    HYBRID = "Hybrid"


class UnresolvedPlaceholder(Exception):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"prompt template uses unknown placeholder {{{name}}}")


class InvalidHumanSlot(Exception):
    def __init__(self, slot: str):
        self.slot = slot
        super().__init__(f"the human participant cannot take the {slot!r} slot")


@dataclass(frozen=True)
class Role:
    kind: RoleKind
    persona_name: str
    specialty: Optional[str] = None


@dataclass(frozen=True)
class AgentProfile:
    role: Role
    prompt_template: str
    topology_tag: TopologyTag


@dataclass(frozen=True)
class ChatMessage:
    channel: Channel
    sender: str
    role_kind: SenderKind
    content: str
    turn: int
    timestamp: int
    copilot_context_used: bool = False

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.value,
            "sender": self.sender,
            "role_kind": self.role_kind.value,
            "content": self.content,
            "turn": self.turn,
            "timestamp": self.timestamp,
            "copilot_context_used": self.copilot_context_used,
        }


# How deep the help should go at each rung, keyed by Bloom process per rung.
_BLOOM_GUIDANCE: dict[int, str] = {
    1: "hold back and let the learner reason independently; check recall only if asked.",
    2: "ask the learner to explain their own choices and reasoning in their own words.",
    3: "pose targeted diagnostic questions about the signals and evidence at hand.",
    4: "offer analogies to well-known incidents and concrete clues the learner can act on.",
    5: "help the learner weigh whether an alert is real signal or noise, ruling out red herrings.",
    6: "narrow the investigation to the most promising systems and data sources.",
    7: "reveal part of the solution and let the learner carry the rest forward.",
    8: "walk through the full solution, then push the learner to design their own improvements.",
}


def bloom_directive(level: ScaffoldLevel) -> str:
    return f"work at the {level.bloom_process.value} level of Bloom's taxonomy: {_BLOOM_GUIDANCE[level.level]}"


def load_template(name: str, templates_dir: str | Path | None = None) -> str:
    """Read a prompt template (plain text with named placeholders)."""
    if templates_dir is not None:
        return (Path(templates_dir) / f"{name}.txt").read_text(encoding="utf-8")
    return resources.files("breachdrill").joinpath(f"templates/{name}.txt").read_text(
        encoding="utf-8"
    )


_TEMPLATE_BY_KIND = {
    RoleKind.INCIDENT_CAPTAIN: "incident_captain",
    RoleKind.DEFENDER: "defender",
    RoleKind.HUMAN_DEFENDER: "defender",
    RoleKind.RED_TEAM_NARRATOR: "red_team_narrator",
}


def _render(template: str, values: dict[str, str]) -> str:
    out: list[str] = []
    for literal, field_name, _spec, _conv in string.Formatter().parse(template):
        out.append(literal)
        if field_name is None:
            continue
        if field_name not in values:
            raise UnresolvedPlaceholder(field_name)
        out.append(values[field_name])
    return "".join(out)


def build_system_prompt(
    profile: AgentProfile, level: ScaffoldLevel, game_summary: str
) -> str:
    """Render a profile's template against the current rung and game summary.

    Non-narrator prompts always contain the teaching objective, whatever the
    template says; unknown placeholders raise UnresolvedPlaceholder.
    """
    values = {
        "persona_name": profile.role.persona_name,
        "specialty": profile.role.specialty or "incident responder",
        "scaffold_level": f"{level.level} ({level.display_name})",
        "bloom_directive": bloom_directive(level),
        "game_summary": game_summary,
    }
    rendered = _render(profile.prompt_template, values)
    if profile.role.kind is not RoleKind.RED_TEAM_NARRATOR and TEACHING_OBJECTIVE not in rendered:
        rendered = TEACHING_OBJECTIVE + "\n" + rendered
    return rendered


_DEFENDER_PERSONAS = [
    ("Ash Ferro", "SOC Analyst"),
    ("Priya Nair", "Threat Intelligence Analyst"),
    ("Ilya Sorokin", "Forensics Specialist"),
    ("June Park", "Network Defender"),
]
_CAPTAIN_PERSONA = "Morgan Hale"
_NARRATOR_PERSONA = "Red Cell"


def roster_for_topology(
    tag: TopologyTag,
    human_slot: Optional[str] = None,
    templates_dir: str | Path | None = None,
) -> list[AgentProfile]:
    """Build the agent roster for a team topology.

    Every roster has exactly one Red-Team Narrator. Centralized and Hybrid
    rosters add an Incident Captain; Decentralized runs on peer defenders
    alone. `human_slot` names the defender specialty the human participant
    takes over (the narrator and captain seats cannot be taken).
    """
    templates = {
        kind: load_template(name, templates_dir) for kind, name in _TEMPLATE_BY_KIND.items()
    }

    profiles: list[AgentProfile] = []
    if tag in (TopologyTag.CENTRALIZED, TopologyTag.HYBRID):
        profiles.append(
            AgentProfile(
                role=Role(RoleKind.INCIDENT_CAPTAIN, _CAPTAIN_PERSONA, "Incident Captain"),
                prompt_template=templates[RoleKind.INCIDENT_CAPTAIN],
                topology_tag=tag,
            )
        )
        defenders = _DEFENDER_PERSONAS[:3]
    else:
        defenders = _DEFENDER_PERSONAS[:4]
    for persona, specialty in defenders:
        profiles.append(
            AgentProfile(
                role=Role(RoleKind.DEFENDER, persona, specialty),
                prompt_template=templates[RoleKind.DEFENDER],
                topology_tag=tag,
            )
        )
    profiles.append(
        AgentProfile(
            role=Role(RoleKind.RED_TEAM_NARRATOR, _NARRATOR_PERSONA, "Red-Team Narrator"),
            prompt_template=templates[RoleKind.RED_TEAM_NARRATOR],
            topology_tag=tag,
        )
    )

    if human_slot is not None:
        wanted = human_slot.strip().lower()
        blocked = {
            "redteamnarrator", "red-team narrator", "red team narrator",
            "incidentcaptain", "incident captain",
        }
        if wanted in blocked:
            raise InvalidHumanSlot(human_slot)
        for i, profile in enumerate(profiles):
            if (
                profile.role.kind is RoleKind.DEFENDER
                and (profile.role.specialty or "").lower() == wanted
            ):
                profiles[i] = AgentProfile(
                    role=Role(RoleKind.HUMAN_DEFENDER, "Learner", profile.role.specialty),
                    prompt_template=profile.prompt_template,
                    topology_tag=tag,
                )
                break
        else:
            raise InvalidHumanSlot(human_slot)
    return profiles


def summarize_hud(hud: HudSnapshot) -> str:
    """One-line game summary for prompts. Only HUD-visible facts."""
    revealed = ", ".join(hud.revealed_card_names) if hud.revealed_card_names else "none yet"
    last = (
        f"last roll {hud.last_roll.raw}+{hud.last_roll.modifier}="
        f"{hud.last_roll.total} ({'success' if hud.last_roll.success else 'failure'})"
        if hud.last_roll
        else "no rolls yet"
    )
    return (
        f"turn {hud.turn}, status {hud.status.value}; revealed cards: {revealed}; "
        f"{last}; consecutive failures {hud.consecutive_failures}; "
        f"procedures ready: {', '.join(hud.remaining_procedures) or 'none'}"
    )


@dataclass
class AgentContext:
    hud: HudSnapshot
    recent_messages: list[ChatMessage] = field(default_factory=list)
    level: ScaffoldLevel = field(default_factory=lambda: ScaffoldLevel(1))


def _last_human_message(messages: Sequence[ChatMessage]) -> Optional[ChatMessage]:
    for msg in reversed(messages):
        if msg.role_kind in (SenderKind.HUMAN, SenderKind.HUMAN_DEFENDER):
            return msg
    return None


def agent_respond(
    profile: AgentProfile,
    context: AgentContext,
    backend: CompletionBackend,
    copilot: Optional[Callable[[str], object]] = None,
    timestamp_ms: Optional[int] = None,
) -> ChatMessage:
    """Produce one Game-channel message from an agent.

    If the last human message asks a question (contains "?") and a copilot
    handle is available, the copilot's answer is added to the context the
    backend sees, and the emitted message is flagged accordingly. Backend
    failures surface as a system notice message rather than an exception.

    With the mock backend this is a pure function of its arguments; the
    default timestamp is inherited from the newest message in the window.
    """
    if timestamp_ms is None:
        timestamp_ms = context.recent_messages[-1].timestamp if context.recent_messages else 0
    summary = summarize_hud(context.hud)
    system_prompt = build_system_prompt(profile, context.level, summary)

    history = [{"sender": m.sender, "content": m.content} for m in context.recent_messages]
    copilot_used = False
    human_msg = _last_human_message(context.recent_messages)
    if copilot is not None and human_msg is not None and "?" in human_msg.content:
        answer = copilot(human_msg.content)
        answer_text = getattr(answer, "answer_text", str(answer))
        history.append({"sender": "copilot", "content": f"(copilot context) {answer_text}"})
        copilot_used = True

    try:
        content = backend.complete(system_prompt, history)
        sender = profile.role.persona_name
        role_kind = SenderKind(profile.role.kind.value)
    except BackendError as exc:
        content = f"[notice] {profile.role.persona_name} is unavailable: {exc.detail}"
        sender = "system"
        role_kind = SenderKind.SYSTEM
        copilot_used = False

    return ChatMessage(
        channel=Channel.GAME,
        sender=sender,
        role_kind=role_kind,
        content=content,
        turn=context.hud.turn,
        timestamp=timestamp_ms,
        copilot_context_used=copilot_used,
    )
