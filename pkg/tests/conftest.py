from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from breachdrill.decks import Decks
from breachdrill.engine import AttackCard, AttackStage, GameConfig, InjectCard, ProcedureCard


def make_attack(card_id: str, stage: AttackStage, detection: set[str], name: str | None = None) -> AttackCard:
    return AttackCard(
        card_id=card_id,
        name=name or card_id.replace("-", " ").title(),
        stage=stage,
        description=f"{card_id} description",
        tools=("toolkit",),
        detection=frozenset(detection),
    )


def make_proc(proc_id: str, written: bool = False, cooldown: int = 3, name: str | None = None) -> ProcedureCard:
    return ProcedureCard(
        proc_id=proc_id,
        name=name or proc_id.replace("-", " ").title(),
        written=written,
        cooldown_turns=cooldown,
    )


@pytest.fixture
def tiny_decks() -> Decks:
    """One attack card per stage, four unwritten procedures, one detector
    per stage card, plus two injects."""
    procs = [make_proc(f"p{i}", cooldown=3) for i in range(4)]
    attack = [
        make_attack(f"a{i}", AttackStage(i), {f"p{i}"}) for i in range(4)
    ]
    injects = [
        InjectCard("inj-a", "Inject A", "narrative a"),
        InjectCard("inj-b", "Inject B", "narrative b"),
    ]
    return Decks(attack=attack, procedures=procs, injects=injects)


@pytest.fixture
def full_detect_decks() -> Decks:
    """Every procedure detects some card; used for forced-outcome runs."""
    procs = [make_proc(f"p{i}", cooldown=3) for i in range(5)]
    attack = [
        make_attack("a0", AttackStage.INITIAL_COMPROMISE, {"p0", "p4"}),
        make_attack("a1", AttackStage.PIVOT_ESCALATE, {"p1", "p4"}),
        make_attack("a2", AttackStage.PERSISTENCE, {"p2", "p4"}),
        make_attack("a3", AttackStage.C2_EXFILTRATION, {"p3", "p4"}),
    ]
    injects = [InjectCard("inj-a", "Inject A", "narrative a")]
    return Decks(attack=attack, procedures=procs, injects=injects)


@pytest.fixture
def default_config() -> GameConfig:
    return GameConfig()
