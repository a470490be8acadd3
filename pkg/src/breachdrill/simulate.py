"""Headless simulation: scripted policies playing full games offline.

Per-game seeds derive from the master seed through the same generator the
dice use, so a whole batch replays identically from one integer. The
detection-greedy policy plays toward the lowest unrevealed card; the
random-legal policy picks uniformly among ready procedures with its own
seeded stream (policy draws never touch the engine's dice stream).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .agents import AgentContext, agent_respond
from .backends import MockCompletionBackend
from .decks import Decks
from .engine import (
    GameConfig,
    GameState,
    GameStatus,
    hud_view,
    legal_moves,
    new_game,
    resolve_turn,
)
from .rng import DiceRng
from .scaffolding import ScaffoldLevel
from .telemetry import EventKind, TelemetryEvent, TelemetrySink


class PolicyKind(str, Enum):
    DETECTION_GREEDY = "DetectionGreedy"
    RANDOM_LEGAL = "RandomLegal"


@dataclass(frozen=True)
class ScriptedPolicy:
    kind: PolicyKind
    seed: int = 0


def choose_move(state: GameState, policy: ScriptedPolicy, rng: DiceRng) -> str:
    """Pick this turn's procedure. The caller owns the policy rng stream."""
    legal = legal_moves(state)
    if not legal:
        raise RuntimeError("no legal moves: every procedure is on cooldown")
    if policy.kind is PolicyKind.RANDOM_LEGAL:
        return legal[rng.randbelow(len(legal))]
    # Detection-greedy: a ready procedure that detects the lowest unrevealed
    # card, else one detecting any unrevealed card, else whatever is ready.
    for card, revealed in zip(state.hidden_sequence, state.revealed):
        if revealed:
            continue
        detecting = [pid for pid in legal if pid in card.detection]
        if detecting:
            return detecting[0]
    return legal[0]


@dataclass
class GameResult:
    seed: int
    status: GameStatus
    turns: int
    injects: dict[str, int]
    moves: list[str]


@dataclass
class SimulationSummary:
    n_games: int
    win_rate: float
    mean_turns: float
    inject_counts: dict[str, int]
    elapsed_s: float = 0.0
    results: list[GameResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_games": self.n_games,
            "win_rate": self.win_rate,
            "mean_turns": self.mean_turns,
            "inject_counts": dict(sorted(self.inject_counts.items())),
            "elapsed_s": round(self.elapsed_s, 3),
        }


def run_game(
    decks: Decks,
    config: GameConfig,
    game_seed: int,
    policy: ScriptedPolicy,
    sink: Optional[TelemetrySink] = None,
    roster=None,
    clock=None,
) -> GameResult:
    """Play one full game. With a sink, emits the same event stream a live
    session would; with a roster, mock teammates comment each turn."""
    state = new_game(config, decks.attack, decks.procedures, decks.injects, game_seed)
    policy_rng = DiceRng(policy.seed)
    injects: dict[str, int] = {}
    moves: list[str] = []
    backend = MockCompletionBackend()
    level = ScaffoldLevel(1)
    now = clock or (lambda: int(time.time() * 1000))

    def record(kind: EventKind, payload: dict) -> None:
        if sink is not None:
            sink.record(
                TelemetryEvent(
                    seq=sink.next_seq(),
                    session_id=sink.session_id,
                    timestamp=now(),
                    kind=kind,
                    payload=payload,
                )
            )

    record(
        EventKind.SESSION_START,
        {
            "policy": policy.kind.value,
            "config": config.to_dict(),
            "deck_counts": {
                "attack": len(decks.attack),
                "procedures": len(decks.procedures),
                "injects": len(decks.injects),
            },
        },
    )
    while state.status is GameStatus.IN_PROGRESS:
        proc_id = choose_move(state, policy, policy_rng)
        moves.append(proc_id)
        state, outcome = resolve_turn(state, proc_id)
        record(EventKind.DICE_ROLL, {"turn": outcome.turn, **outcome.roll.to_dict()})
        record(
            EventKind.TURN_RESOLVED,
            {
                "turn": outcome.turn,
                "proc_id": outcome.proc_id,
                "success": outcome.roll.success,
                "revealed_card_id": outcome.revealed_card_id,
                "failures_after": outcome.failures_after,
                "status": state.status.value,
            },
        )
        if outcome.inject is not None:
            reason = outcome.inject.trigger_reason.value
            injects[reason] = injects.get(reason, 0) + 1
            record(
                EventKind.INJECT_FIRED,
                {
                    "turn": outcome.turn,
                    "trigger_reason": reason,
                    "inject_id": outcome.inject.inject_id,
                },
            )
        if roster:
            for profile in roster:
                message = agent_respond(
                    profile,
                    AgentContext(hud=hud_view(state), recent_messages=[], level=level),
                    backend,
                    timestamp_ms=now(),
                )
                record(EventKind.CHAT_TURN, message.to_dict())
    record(
        EventKind.SESSION_END,
        {
            "status": state.status.value,
            "turns_played": len(state.history),
            "seed": game_seed,
            "hidden_sequence": [c.card_id for c in state.hidden_sequence],
        },
    )
    return GameResult(
        seed=game_seed,
        status=state.status,
        turns=len(state.history),
        injects=injects,
        moves=moves,
    )


def simulate(
    n_games: int,
    policy_kind: PolicyKind,
    config: GameConfig,
    seed: int,
    decks: Decks,
    telemetry_dir: Optional[str | Path] = None,
    with_agents: bool = False,
    keep_results: bool = False,
) -> SimulationSummary:
    """Run n games headlessly and summarize win rate, pacing, and injects."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    seeder = DiceRng(seed)
    roster = None
    if with_agents:
        from .agents import TopologyTag, roster_for_topology

        roster = [
            p
            for p in roster_for_topology(TopologyTag.CENTRALIZED, human_slot=None)
            if p.role.kind.value != "HumanDefender"
        ]

    started = time.perf_counter()
    wins = 0
    total_turns = 0
    inject_counts: dict[str, int] = {}
    results: list[GameResult] = []
    for i in range(n_games):
        game_seed = seeder.next_u64()
        policy_seed = seeder.next_u64()
        sink = None
        if telemetry_dir is not None:
            sink = TelemetrySink(
                f"sim-{seed}-{i:05d}",
                Path(telemetry_dir) / f"sim-{seed}-{i:05d}.jsonl",
            )
        result = run_game(
            decks,
            config,
            game_seed,
            ScriptedPolicy(policy_kind, policy_seed),
            sink=sink,
            roster=roster,
        )
        if sink is not None:
            sink.close()
        wins += result.status is GameStatus.WON
        total_turns += result.turns
        for reason, count in result.injects.items():
            inject_counts[reason] = inject_counts.get(reason, 0) + count
        if keep_results:
            results.append(result)
    return SimulationSummary(
        n_games=n_games,
        win_rate=wins / n_games,
        mean_turns=total_turns / n_games,
        inject_counts=inject_counts,
        elapsed_s=time.perf_counter() - started,
        results=results,
    )
