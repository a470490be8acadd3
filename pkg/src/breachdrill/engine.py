"""Turn-based breach-drill ruleset engine.

One session hides four attack cards, one per adversary-lifecycle stage
(initial compromise, pivot & escalate, persistence, C2/exfiltration). Each
turn the defending side picks a procedure card; a single d20 decides the
outcome. Success at or above the threshold reveals the lowest unrevealed
attack card the procedure can detect. Pre-documented ("written") procedures
add a flat bonus to the roll. Used procedures go on cooldown. Critical
outcomes (natural 1, natural 20, or a run of consecutive failures) fire a
narrative inject. Reveal all four cards before the turn limit to win.

The engine is a pure state machine: `resolve_turn` returns a new state and
never mutates its input, so replays are deterministic given (decks, config,
seed, move list).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

from .rng import DiceRng


class AttackStage(IntEnum):
    """Adversary lifecycle stages, in lifecycle order."""

    INITIAL_COMPROMISE = 0
    PIVOT_ESCALATE = 1
    PERSISTENCE = 2
    C2_EXFILTRATION = 3

    @classmethod
    def from_str(cls, value: str) -> "AttackStage":
        key = value.strip().lower().replace("&", "and").replace("-", "_").replace(" ", "_")
        aliases = {
            "initial_compromise": cls.INITIAL_COMPROMISE,
            "pivot_escalate": cls.PIVOT_ESCALATE,
            "pivot_and_escalate": cls.PIVOT_ESCALATE,
            "persistence": cls.PERSISTENCE,
            "c2_exfiltration": cls.C2_EXFILTRATION,
            "c2_and_exfiltration": cls.C2_EXFILTRATION,
        }
        if key not in aliases:
            raise ValueError(f"unknown attack stage {value!r}")
        return aliases[key]


class GameStatus(str, Enum):
    IN_PROGRESS = "InProgress"
    WON = "Won"
    LOST = "Lost"


class InjectTrigger(str, Enum):
    NATURAL_1 = "Natural1"
    NATURAL_20 = "Natural20"
    FAILURE_STREAK = "FailureStreak"


class GameError(Exception):
    """Base class for ruleset violations."""


class MissingStage(GameError):
    def __init__(self, stage: AttackStage):
        self.stage = stage
        super().__init__(f"attack deck has no card for stage {stage.name}")


class DanglingDetectionRef(GameError):
    def __init__(self, proc_id: str):
        self.proc_id = proc_id
        super().__init__(f"detection set references unknown procedure {proc_id!r}")


class UnknownProcedure(GameError):
    def __init__(self, proc_id: str):
        self.proc_id = proc_id
        super().__init__(f"no procedure {proc_id!r} in this game")


class ProcedureOnCooldown(GameError):
    def __init__(self, proc_id: str, remaining: int):
        self.proc_id = proc_id
        self.remaining = remaining
        super().__init__(f"procedure {proc_id!r} is on cooldown for {remaining} more turn(s)")


class GameOver(GameError):
    def __init__(self, status: GameStatus):
        self.status = status
        super().__init__(f"game is over ({status.value})")


@dataclass(frozen=True)
class AttackCard:
    card_id: str
    name: str
    stage: AttackStage
    description: str = ""
    tools: tuple[str, ...] = ()
    detection: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.detection:
            raise ValueError(f"attack card {self.card_id!r} has an empty detection set")


@dataclass(frozen=True)
class ProcedureCard:
    proc_id: str
    name: str
    written: bool = False
    cooldown_turns: int = 0
    cooldown_remaining: int = 0

    def __post_init__(self) -> None:
        if self.cooldown_turns < 0 or self.cooldown_remaining < 0:
            raise ValueError(f"procedure {self.proc_id!r} has a negative cooldown")
        if self.cooldown_remaining > self.cooldown_turns:
            raise ValueError(
                f"procedure {self.proc_id!r}: cooldown_remaining exceeds cooldown_turns"
            )


@dataclass(frozen=True)
class InjectCard:
    inject_id: str
    name: str
    narrative: str = ""


@dataclass(frozen=True)
class DiceRoll:
    raw: int
    modifier: int
    total: int
    success: bool

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "modifier": self.modifier,
            "total": self.total,
            "success": self.success,
        }


@dataclass(frozen=True)
class GameConfig:
    """Tunable rule parameters.

    A success_threshold above 20 makes unmodified rolls unwinnable; that is
    allowed on purpose so harnesses can force guaranteed-loss runs.
    """

    success_threshold: int = 11
    written_bonus: int = 3
    max_turns: int = 10
    cooldown_turns_default: int = 3
    inject_on_streak: int = 3

    def __post_init__(self) -> None:
        if self.success_threshold < 1:
            raise ValueError("success_threshold must be >= 1")
        if self.max_turns < 4:
            raise ValueError("max_turns must be >= 4 (a win takes four reveals)")
        if self.cooldown_turns_default < 0:
            raise ValueError("cooldown_turns_default must be >= 0")
        if self.inject_on_streak < 1:
            raise ValueError("inject_on_streak must be >= 1")

    def to_dict(self) -> dict:
        return {
            "success_threshold": self.success_threshold,
            "written_bonus": self.written_bonus,
            "max_turns": self.max_turns,
            "cooldown_turns_default": self.cooldown_turns_default,
            "inject_on_streak": self.inject_on_streak,
        }


@dataclass(frozen=True)
class InjectOutcome:
    trigger_reason: InjectTrigger
    inject_id: str


@dataclass(frozen=True)
class TurnOutcome:
    turn: int
    proc_id: str
    roll: DiceRoll
    revealed_card_id: Optional[str] = None
    inject: Optional[InjectOutcome] = None
    failures_after: int = 0

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "proc_id": self.proc_id,
            "roll": self.roll.to_dict(),
            "revealed_card_id": self.revealed_card_id,
            "inject": (
                {"trigger_reason": self.inject.trigger_reason.value, "inject_id": self.inject.inject_id}
                if self.inject
                else None
            ),
            "failures_after": self.failures_after,
        }


@dataclass(frozen=True)
class GameState:
    config: GameConfig
    turn: int
    hidden_sequence: tuple[AttackCard, ...]
    revealed: tuple[bool, bool, bool, bool]
    procedures: dict[str, ProcedureCard]
    inject_deck: tuple[InjectCard, ...]
    consecutive_failures: int
    status: GameStatus
    rng_state: int
    history: tuple[TurnOutcome, ...] = ()

    def procedure(self, proc_id: str) -> ProcedureCard:
        try:
            return self.procedures[proc_id]
        except KeyError:
            raise UnknownProcedure(proc_id) from None

    def unrevealed_cards(self) -> list[AttackCard]:
        return [c for c, r in zip(self.hidden_sequence, self.revealed) if not r]

    def revealed_cards(self) -> list[AttackCard]:
        return [c for c, r in zip(self.hidden_sequence, self.revealed) if r]

    def to_dict(self) -> dict:
        """Full canonical serialization, hidden cards included. Server-side
        only; never expose this to a player-facing surface."""
        return {
            "config": self.config.to_dict(),
            "turn": self.turn,
            "hidden_sequence": [
                {
                    "card_id": c.card_id,
                    "name": c.name,
                    "stage": c.stage.name,
                    "description": c.description,
                    "tools": list(c.tools),
                    "detection": sorted(c.detection),
                }
                for c in self.hidden_sequence
            ],
            "revealed": list(self.revealed),
            "procedures": {
                pid: {
                    "proc_id": p.proc_id,
                    "name": p.name,
                    "written": p.written,
                    "cooldown_turns": p.cooldown_turns,
                    "cooldown_remaining": p.cooldown_remaining,
                }
                for pid, p in self.procedures.items()
            },
            "inject_deck": [
                {"inject_id": i.inject_id, "name": i.name, "narrative": i.narrative}
                for i in self.inject_deck
            ],
            "consecutive_failures": self.consecutive_failures,
            "status": self.status.value,
            "rng_state": self.rng_state,
            "history": [o.to_dict() for o in self.history],
        }


@dataclass(frozen=True)
class HudSnapshot:
    """Player-facing projection of the state. Carries nothing about
    unrevealed attack cards."""

    turn: int
    last_roll: Optional[DiceRoll]
    revealed_card_names: tuple[str, ...]
    cooldowns: dict[str, int]
    consecutive_failures: int
    remaining_procedures: tuple[str, ...]
    status: GameStatus

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "last_roll": self.last_roll.to_dict() if self.last_roll else None,
            "revealed_card_names": list(self.revealed_card_names),
            "cooldowns": dict(self.cooldowns),
            "consecutive_failures": self.consecutive_failures,
            "remaining_procedures": list(self.remaining_procedures),
            "status": self.status.value,
        }


def new_game(
    config: GameConfig,
    attack_deck: list[AttackCard],
    procedure_deck: list[ProcedureCard],
    inject_deck: list[InjectCard],
    seed: int,
) -> GameState:
    """Draw one attack card per stage (uniformly, in stage order) and start
    at turn 1 with every procedure off cooldown.

    Raises MissingStage if some stage has no candidate card and
    DanglingDetectionRef if a detection set names an unknown procedure.
    """
    if not procedure_deck:
        raise ValueError("procedure deck is empty")
    proc_ids = {p.proc_id for p in procedure_deck}
    if len(proc_ids) != len(procedure_deck):
        raise ValueError("duplicate proc_id in procedure deck")
    if len({c.card_id for c in attack_deck}) != len(attack_deck):
        raise ValueError("duplicate card_id in attack deck")
    for card in attack_deck:
        for ref in card.detection:
            if ref not in proc_ids:
                raise DanglingDetectionRef(ref)

    by_stage: dict[AttackStage, list[AttackCard]] = {stage: [] for stage in AttackStage}
    for card in attack_deck:
        by_stage[card.stage].append(card)

    rng = DiceRng(seed)
    drawn: list[AttackCard] = []
    for stage in AttackStage:
        candidates = by_stage[stage]
        if not candidates:
            raise MissingStage(stage)
        drawn.append(candidates[rng.randbelow(len(candidates))])

    procedures = {
        p.proc_id: replace(p, cooldown_remaining=0) for p in procedure_deck
    }
    return GameState(
        config=config,
        turn=1,
        hidden_sequence=tuple(drawn),
        revealed=(False, False, False, False),
        procedures=procedures,
        inject_deck=tuple(inject_deck),
        consecutive_failures=0,
        status=GameStatus.IN_PROGRESS,
        rng_state=rng.state,
    )


def check_inject_trigger(
    raw: int, failures_including_this_turn: int, config: GameConfig
) -> Optional[InjectTrigger]:
    """Which inject condition, if any, holds for this roll.

    Precedence: natural 1, natural 20, then failure streak. A natural 1 that
    also completes a streak reports Natural1.
    """
    if not 1 <= raw <= 20:
        raise ValueError(f"raw d20 value out of range: {raw}")
    if raw == 1:
        return InjectTrigger.NATURAL_1
    if raw == 20:
        return InjectTrigger.NATURAL_20
    if failures_including_this_turn == config.inject_on_streak:
        return InjectTrigger.FAILURE_STREAK
    return None


def legal_moves(state: GameState) -> list[str]:
    """Procedure ids selectable this turn, in deck order. Empty once the
    game is over."""
    if state.status is not GameStatus.IN_PROGRESS:
        return []
    return [pid for pid, p in state.procedures.items() if p.cooldown_remaining == 0]


def resolve_turn(state: GameState, proc_id: str) -> tuple[GameState, TurnOutcome]:
    """Resolve one turn with the chosen procedure and return the successor
    state plus what happened.

    Success (raw + written bonus >= threshold) reveals the lowest-ordinal
    unrevealed card whose detection set contains the procedure, and breaks
    the failure streak. Failure extends the streak. An inject is drawn on a
    natural 1, a natural 20, or when the streak reaches the configured
    length; a streak that fires is consumed (counter returns to 0). The used
    procedure starts its cooldown; every other cooling procedure ticks down.
    """
    if state.status is not GameStatus.IN_PROGRESS:
        raise GameOver(state.status)
    proc = state.procedure(proc_id)
    if proc.cooldown_remaining > 0:
        raise ProcedureOnCooldown(proc_id, proc.cooldown_remaining)

    rng = DiceRng(state.rng_state)
    raw = rng.roll_d20()
    modifier = state.config.written_bonus if proc.written else 0
    total = raw + modifier
    success = total >= state.config.success_threshold
    roll = DiceRoll(raw=raw, modifier=modifier, total=total, success=success)

    revealed = list(state.revealed)
    revealed_card_id: Optional[str] = None
    if success:
        for idx, card in enumerate(state.hidden_sequence):
            if not revealed[idx] and proc_id in card.detection:
                revealed[idx] = True
                revealed_card_id = card.card_id
                break
        failures = 0
    else:
        failures = state.consecutive_failures + 1

    inject: Optional[InjectOutcome] = None
    trigger = check_inject_trigger(raw, failures, state.config)
    if trigger is not None and state.inject_deck:
        drawn = state.inject_deck[rng.randbelow(len(state.inject_deck))]
        inject = InjectOutcome(trigger_reason=trigger, inject_id=drawn.inject_id)
    if failures == state.config.inject_on_streak:
        # The streak fired (whatever reason was reported); it is consumed.
        failures = 0

    procedures = {}
    for pid, p in state.procedures.items():
        if pid == proc_id:
            procedures[pid] = replace(p, cooldown_remaining=p.cooldown_turns)
        elif p.cooldown_remaining > 0:
            procedures[pid] = replace(p, cooldown_remaining=p.cooldown_remaining - 1)
        else:
            procedures[pid] = p

    next_turn = state.turn + 1
    if all(revealed):
        status = GameStatus.WON
    elif next_turn > state.config.max_turns:
        status = GameStatus.LOST
    else:
        status = GameStatus.IN_PROGRESS

    outcome = TurnOutcome(
        turn=state.turn,
        proc_id=proc_id,
        roll=roll,
        revealed_card_id=revealed_card_id,
        inject=inject,
        failures_after=failures,
    )
    next_state = GameState(
        config=state.config,
        turn=next_turn,
        hidden_sequence=state.hidden_sequence,
        revealed=tuple(revealed),
        procedures=procedures,
        inject_deck=state.inject_deck,
        consecutive_failures=failures,
        status=status,
        rng_state=rng.state,
        history=state.history + (outcome,),
    )
    return next_state, outcome


def hud_view(state: GameState) -> HudSnapshot:
    """Project the state onto what a player may see."""
    last_roll = state.history[-1].roll if state.history else None
    return HudSnapshot(
        turn=state.turn,
        last_roll=last_roll,
        revealed_card_names=tuple(c.name for c in state.revealed_cards()),
        cooldowns={pid: p.cooldown_remaining for pid, p in state.procedures.items()},
        consecutive_failures=state.consecutive_failures,
        remaining_procedures=tuple(legal_moves(state)),
        status=state.status,
    )
