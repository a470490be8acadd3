"""Deck files: loading card records from a decks directory.

A decks directory holds three files, each either a JSON array or JSON Lines
(one record per line):

    attack_cards.json[l]     {card_id, name, stage, description?, tools?, detection}
    procedure_cards.json[l]  {proc_id, name, written?, cooldown_turns?}
    inject_cards.json[l]     {inject_id, name, narrative?}

`stage` accepts the lifecycle names (initial_compromise, pivot_escalate,
persistence, c2_exfiltration; "&"/"and"/spaces tolerated). A procedure with
no cooldown_turns gets the config default at game start.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .engine import AttackCard, AttackStage, InjectCard, ProcedureCard


class DeckError(Exception):
    """A deck file is missing, unparseable, or has bad records."""


@dataclass
class Decks:
    attack: list[AttackCard]
    procedures: list[ProcedureCard]
    injects: list[InjectCard]


def _read_records(path: Path) -> list[dict]:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        records = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DeckError(f"{path.name}:{lineno}: bad JSON line: {exc}") from exc
        return records
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeckError(f"{path.name}: bad JSON: {exc}") from exc
    if not isinstance(data, list):
        raise DeckError(f"{path.name}: expected a JSON array of records")
    return data


def _find_deck_file(decks_dir: Path, stem: str) -> Path:
    for suffix in (".json", ".jsonl"):
        candidate = decks_dir / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    raise DeckError(f"no {stem}.json or {stem}.jsonl in {decks_dir}")


def _attack_card(rec: dict, source: str) -> AttackCard:
    try:
        return AttackCard(
            card_id=str(rec["card_id"]),
            name=str(rec["name"]),
            stage=AttackStage.from_str(str(rec["stage"])),
            description=str(rec.get("description", "")),
            tools=tuple(rec.get("tools", ())),
            detection=frozenset(rec.get("detection", ())),
        )
    except (KeyError, ValueError) as exc:
        raise DeckError(f"{source}: bad attack card record {rec!r}: {exc}") from exc


def _procedure_card(rec: dict, source: str, default_cooldown: int) -> ProcedureCard:
    try:
        cooldown = rec.get("cooldown_turns")
        return ProcedureCard(
            proc_id=str(rec["proc_id"]),
            name=str(rec["name"]),
            written=bool(rec.get("written", False)),
            cooldown_turns=default_cooldown if cooldown is None else int(cooldown),
        )
    except (KeyError, ValueError) as exc:
        raise DeckError(f"{source}: bad procedure card record {rec!r}: {exc}") from exc


def _inject_card(rec: dict, source: str) -> InjectCard:
    try:
        return InjectCard(
            inject_id=str(rec["inject_id"]),
            name=str(rec["name"]),
            narrative=str(rec.get("narrative", "")),
        )
    except KeyError as exc:
        raise DeckError(f"{source}: bad inject card record {rec!r}: {exc}") from exc


def load_decks(decks_dir: str | Path, default_cooldown: int = 3) -> Decks:
    """Load the three deck files from a directory."""
    decks_dir = Path(decks_dir)
    if not decks_dir.is_dir():
        raise DeckError(f"decks directory not found: {decks_dir}")

    attack_path = _find_deck_file(decks_dir, "attack_cards")
    proc_path = _find_deck_file(decks_dir, "procedure_cards")
    inject_path = _find_deck_file(decks_dir, "inject_cards")

    attack = [_attack_card(r, attack_path.name) for r in _read_records(attack_path)]
    procedures = [
        _procedure_card(r, proc_path.name, default_cooldown)
        for r in _read_records(proc_path)
    ]
    injects = [_inject_card(r, inject_path.name) for r in _read_records(inject_path)]

    ids = [i.inject_id for i in injects]
    if len(set(ids)) != len(ids):
        raise DeckError(f"{inject_path.name}: duplicate inject_id")
    return Decks(attack=attack, procedures=procedures, injects=injects)


def bundled_decks_dir() -> Path:
    """Directory of the deck files shipped with the package."""
    return Path(str(resources.files("breachdrill").joinpath("data/decks")))


def load_bundled_decks(default_cooldown: int = 3) -> Decks:
    return load_decks(bundled_decks_dir(), default_cooldown=default_cooldown)
