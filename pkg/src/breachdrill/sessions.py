"""Live sessions: one game, one roster, two chat channels, one telemetry log.

All mutations of a session happen under its lock, so concurrent requests
serialize per session while distinct sessions run in parallel. Every chat
message and HUD change is appended to the session's frame log; WebSocket
subscribers replay frames by sequence number, which is what makes reconnects
lossless without any per-client server state.
"""

from __future__ import annotations

import secrets
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

from .agents import (
    AgentContext,
    AgentProfile,
    Channel,
    ChatMessage,
    RoleKind,
    SenderKind,
    TopologyTag,
    agent_respond,
)
from .config import ServiceConfig, make_completion_backend, make_embedding_backend
from .copilot import CopilotAnswer, VectorIndex, answer_query, load_index
from .decks import Decks, load_bundled_decks, load_decks
from .engine import (
    GameState,
    GameStatus,
    TurnOutcome,
    hud_view,
    new_game,
    resolve_turn,
)
from .scaffolding import LearnerSignals, ScaffoldLevel, scaffold_policy
from .telemetry import EventKind, TelemetryEvent, TelemetrySink


class UnknownSession(Exception):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"no live session {session_id!r}")


class EmptyContent(Exception):
    pass


@dataclass
class Frame:
    seq: int
    kind: str  # "chat" | "hud"
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


@dataclass
class Session:
    session_id: str
    game: GameState
    roster: list[AgentProfile]
    scaffold: ScaffoldLevel
    seed: int
    sink: TelemetrySink
    created_at: int
    lock: threading.Lock = field(default_factory=threading.Lock)
    game_channel: list[ChatMessage] = field(default_factory=list)
    copilot_channel: list[ChatMessage] = field(default_factory=list)
    frames: list[Frame] = field(default_factory=list)
    _last_ts: int = 0

    def channel(self, channel: Channel) -> list[ChatMessage]:
        return self.game_channel if channel is Channel.GAME else self.copilot_channel

    def roster_public(self) -> list[dict]:
        return [
            {
                "persona_name": p.role.persona_name,
                "kind": p.role.kind.value,
                "specialty": p.role.specialty,
                "topology": p.topology_tag.value,
            }
            for p in self.roster
        ]


class SessionManager:
    """Creates sessions and runs every state-changing operation on them."""

    def __init__(
        self,
        config: Optional[ServiceConfig] = None,
        decks: Optional[Decks] = None,
        index: Optional[VectorIndex] = None,
        completion_backend=None,
        embedding_backend=None,
        clock: Optional[Callable[[], int]] = None,
    ):
        self.config = config or ServiceConfig()
        if decks is not None:
            self.decks = decks
        elif self.config.decks_dir:
            self.decks = load_decks(
                self.config.decks_dir,
                default_cooldown=self.config.game.cooldown_turns_default,
            )
        else:
            self.decks = load_bundled_decks(
                default_cooldown=self.config.game.cooldown_turns_default
            )
        if index is not None:
            self.index = index
        elif self.config.index_path and Path(self.config.index_path).exists():
            self.index = load_index(self.config.index_path)
        else:
            self.index = VectorIndex(dim=self.config.embedding_dim)
        self.completion = completion_backend or make_completion_backend(self.config.completion)
        self.embedding = embedding_backend or make_embedding_backend(
            self.config.embedding, self.config.embedding_dim
        )
        self.clock = clock or (lambda: int(time.time() * 1000))
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    @contextmanager
    def session(self, session_id: str) -> Iterator[Session]:
        with self._registry_lock:
            try:
                sess = self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None
        with sess.lock:
            yield sess

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def session_ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._sessions)

    def _next_ts(self, sess: Session) -> int:
        ts = max(self.clock(), sess._last_ts)
        sess._last_ts = ts
        return ts

    def _record(self, sess: Session, kind: EventKind, payload: dict, ts: int) -> None:
        sess.sink.record(
            TelemetryEvent(
                seq=sess.sink.next_seq(),
                session_id=sess.session_id,
                timestamp=ts,
                kind=kind,
                payload=payload,
            )
        )

    def _push_frame(self, sess: Session, kind: str, payload: dict) -> Frame:
        frame = Frame(seq=len(sess.frames) + 1, kind=kind, payload=payload)
        sess.frames.append(frame)
        return frame

    def _push_chat(self, sess: Session, message: ChatMessage) -> None:
        sess.channel(message.channel).append(message)
        self._record(sess, EventKind.CHAT_TURN, message.to_dict(), message.timestamp)
        self._push_frame(sess, "chat", message.to_dict())

    def _push_hud(self, sess: Session) -> dict:
        hud = hud_view(sess.game).to_dict()
        self._push_frame(sess, "hud", hud)
        return hud

    def _tutor_profile(self, sess: Session) -> Optional[AgentProfile]:
        for kind in (RoleKind.INCIDENT_CAPTAIN, RoleKind.DEFENDER):
            for profile in sess.roster:
                if profile.role.kind is kind:
                    return profile
        return None

    def _narrator_profile(self, sess: Session) -> Optional[AgentProfile]:
        for profile in sess.roster:
            if profile.role.kind is RoleKind.RED_TEAM_NARRATOR:
                return profile
        return None

    def _copilot_handle(self, sess: Session) -> Callable[[str], CopilotAnswer]:
        def handle(query: str) -> CopilotAnswer:
            return answer_query(
                query,
                sess.game_channel,
                self.embedding,
                self.completion,
                self.index,
            )

        return handle

    def _agent_reply(
        self, sess: Session, profile: AgentProfile, allow_copilot: bool = True
    ) -> ChatMessage:
        ctx = AgentContext(
            hud=hud_view(sess.game),
            recent_messages=list(sess.game_channel)[-12:],
            level=sess.scaffold,
        )
        message = agent_respond(
            profile,
            ctx,
            self.completion,
            copilot=self._copilot_handle(sess) if allow_copilot else None,
            timestamp_ms=self._next_ts(sess),
        )
        self._push_chat(sess, message)
        return message

    # -- operations ---------------------------------------------------------

    def create_session(
        self,
        topology: str | TopologyTag = TopologyTag.CENTRALIZED,
        human_slot: Optional[str] = "SOC Analyst",
        seed: Optional[int] = None,
        game_config=None,
    ) -> Session:
        from .agents import roster_for_topology  # local to keep import cycles away

        tag = TopologyTag(topology) if isinstance(topology, str) else topology
        roster = roster_for_topology(tag, human_slot=human_slot)
        game_config = game_config or self.config.game
        if seed is None:
            seed = secrets.randbits(64)
        game = new_game(
            game_config, self.decks.attack, self.decks.procedures, self.decks.injects, seed
        )
        session_id = secrets.token_urlsafe(12)
        sink = TelemetrySink(
            session_id, Path(self.config.telemetry_dir) / f"{session_id}.jsonl"
        )
        now = int(time.time() * 1000)
        sess = Session(
            session_id=session_id,
            game=game,
            roster=roster,
            scaffold=ScaffoldLevel(1),
            seed=seed,
            sink=sink,
            created_at=now,
        )
        with self._registry_lock:
            self._sessions[session_id] = sess
        ts = self._next_ts(sess)
        self._record(
            sess,
            EventKind.SESSION_START,
            {
                "topology": tag.value,
                "human_slot": human_slot,
                "config": game_config.to_dict(),
                "roster": [p.role.persona_name for p in roster],
                "deck_counts": {
                    "attack": len(self.decks.attack),
                    "procedures": len(self.decks.procedures),
                    "injects": len(self.decks.injects),
                },
            },
            ts,
        )
        self._push_hud(sess)
        return sess

    def submit_turn(self, session_id: str, proc_id: str) -> tuple[dict, dict]:
        """Resolve one turn. Returns (turn outcome dict, hud dict). Engine
        errors (cooldown, game over, unknown procedure) propagate."""
        with self.session(session_id) as sess:
            state, outcome = resolve_turn(sess.game, proc_id)
            sess.game = state
            ts = self._next_ts(sess)
            self._record(
                sess,
                EventKind.DICE_ROLL,
                {"turn": outcome.turn, **outcome.roll.to_dict()},
                ts,
            )
            self._record(
                sess,
                EventKind.TURN_RESOLVED,
                {
                    "turn": outcome.turn,
                    "proc_id": outcome.proc_id,
                    "success": outcome.roll.success,
                    "revealed_card_id": outcome.revealed_card_id,
                    "failures_after": outcome.failures_after,
                    "status": state.status.value,
                },
                ts,
            )
            if outcome.inject is not None:
                inject_card = next(
                    i for i in state.inject_deck if i.inject_id == outcome.inject.inject_id
                )
                self._record(
                    sess,
                    EventKind.INJECT_FIRED,
                    {
                        "turn": outcome.turn,
                        "trigger_reason": outcome.inject.trigger_reason.value,
                        "inject_id": inject_card.inject_id,
                        "name": inject_card.name,
                    },
                    ts,
                )

            self._apply_scaffold(sess, outcome, ts)
            hud = self._push_hud(sess)
            self._announce_turn(sess, outcome)

            narrator = self._narrator_profile(sess)
            if narrator is not None:
                self._agent_reply(sess, narrator, allow_copilot=False)
            tutor = self._tutor_profile(sess)
            if tutor is not None:
                self._agent_reply(sess, tutor)

            if state.status is not GameStatus.IN_PROGRESS:
                # No hidden-card identities here: the log is exportable by the
                # player even after a loss. The seed plus the deck replays the
                # draw offline for research.
                self._record(
                    sess,
                    EventKind.SESSION_END,
                    {
                        "status": state.status.value,
                        "turns_played": len(state.history),
                        "seed": sess.seed,
                    },
                    self._next_ts(sess),
                )
            return outcome.to_dict(), hud

    def _apply_scaffold(self, sess: Session, outcome: TurnOutcome, ts: int) -> None:
        ended = sess.game.status is not GameStatus.IN_PROGRESS
        if outcome.roll.success:
            signals = LearnerSignals(
                successes_since_last_escalation=1,
                objectives_met=sess.game.status is GameStatus.WON,
                session_ending=ended,
            )
        else:
            signals = LearnerSignals(
                consecutive_failures=max(1, sess.game.consecutive_failures),
                objectives_met=False,
                session_ending=ended,
            )
        new_level = scaffold_policy(sess.scaffold, signals)
        if new_level.level != sess.scaffold.level:
            self._record(
                sess,
                EventKind.SCAFFOLD_CHANGE,
                {
                    "from_level": sess.scaffold.level,
                    "to_level": new_level.level,
                    "reason": "success" if outcome.roll.success else "failure",
                },
                ts,
            )
        sess.scaffold = new_level

    def _announce_turn(self, sess: Session, outcome: TurnOutcome) -> None:
        roll = outcome.roll
        proc = sess.game.procedures[outcome.proc_id]
        parts = [
            f"Turn {outcome.turn}: {proc.name} rolled {roll.raw}+{roll.modifier}="
            f"{roll.total} ({'success' if roll.success else 'failure'})."
        ]
        if outcome.revealed_card_id:
            card = next(
                c for c in sess.game.hidden_sequence if c.card_id == outcome.revealed_card_id
            )
            parts.append(f"Revealed: {card.name}.")
        elif roll.success:
            parts.append("No new information from this angle.")
        if sess.game.status is not GameStatus.IN_PROGRESS:
            parts.append(f"The drill is over: {sess.game.status.value}.")
        message = ChatMessage(
            channel=Channel.GAME,
            sender="game",
            role_kind=SenderKind.SYSTEM,
            content=" ".join(parts),
            turn=outcome.turn,
            timestamp=self._next_ts(sess),
        )
        self._push_chat(sess, message)
        if outcome.inject is not None:
            inject_card = next(
                i for i in sess.game.inject_deck if i.inject_id == outcome.inject.inject_id
            )
            inject_msg = ChatMessage(
                channel=Channel.GAME,
                sender="game",
                role_kind=SenderKind.SYSTEM,
                content=(
                    f"Inject ({outcome.inject.trigger_reason.value}): "
                    f"{inject_card.name}. {inject_card.narrative}"
                ),
                turn=outcome.turn,
                timestamp=self._next_ts(sess),
            )
            self._push_chat(sess, inject_msg)

    def post_chat(self, session_id: str, content: str) -> list[dict]:
        """Append a human message to the game channel; teammates may reply.
        Returns the new messages (human's plus agent replies)."""
        if not content or not content.strip():
            raise EmptyContent("chat content is empty")
        with self.session(session_id) as sess:
            human_kind = (
                SenderKind.HUMAN_DEFENDER
                if any(p.role.kind is RoleKind.HUMAN_DEFENDER for p in sess.roster)
                else SenderKind.HUMAN
            )
            message = ChatMessage(
                channel=Channel.GAME,
                sender="Learner",
                role_kind=human_kind,
                content=content,
                turn=sess.game.turn,
                timestamp=self._next_ts(sess),
            )
            self._push_chat(sess, message)
            replies = [message]
            tutor = self._tutor_profile(sess)
            if tutor is not None:
                replies.append(self._agent_reply(sess, tutor))
            return [m.to_dict() for m in replies]

    def query_copilot(self, session_id: str, query: str) -> dict:
        """Run one copilot query; answers live on the copilot channel only."""
        if not query or not query.strip():
            raise EmptyContent("copilot query is empty")
        from .telemetry import classify_query_bloom

        with self.session(session_id) as sess:
            bloom = classify_query_bloom(query)
            ts = self._next_ts(sess)
            self._record(
                sess,
                EventKind.COPILOT_QUERY,
                {"query": query, "bloom_class": bloom.value, "turn": sess.game.turn},
                ts,
            )
            question = ChatMessage(
                channel=Channel.COPILOT,
                sender="Learner",
                role_kind=SenderKind.HUMAN,
                content=query,
                turn=sess.game.turn,
                timestamp=ts,
            )
            self._push_chat(sess, question)
            answer = answer_query(
                query, sess.game_channel, self.embedding, self.completion, self.index
            )
            ts = self._next_ts(sess)
            self._record(
                sess,
                EventKind.COPILOT_ANSWER,
                {
                    "turn": sess.game.turn,
                    "answer_text": answer.answer_text,
                    "cited_snippet_ids": list(answer.cited_snippet_ids),
                    "retrieved": [[sid, score] for sid, score in answer.retrieved],
                },
                ts,
            )
            reply = ChatMessage(
                channel=Channel.COPILOT,
                sender="copilot",
                role_kind=SenderKind.COPILOT,
                content=answer.answer_text,
                turn=sess.game.turn,
                timestamp=ts,
            )
            self._push_chat(sess, reply)
            return answer.to_dict()

    def frames_since(self, session_id: str, last_seq: int = 0) -> list[dict]:
        # Lock-free: frames are append-only and frame seq == index + 1, so a
        # slice is always a consistent prefix. Safe to call from the event
        # loop while a worker thread holds the session lock.
        sess = self.get_session(session_id)
        return [f.to_dict() for f in sess.frames[max(0, last_seq):]]

    def hud(self, session_id: str) -> dict:
        with self.session(session_id) as sess:
            return hud_view(sess.game).to_dict()
