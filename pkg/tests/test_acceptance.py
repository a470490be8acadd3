"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run `pytest tests/test_acceptance.py -v -s` to see one pass line per
criterion. Everything here runs offline against the deterministic mocks.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import replace

import numpy as np
import pytest
from fastapi.testclient import TestClient

import oracle_sim
from conftest import make_attack, make_proc
from test_index import brute_force_rank
from test_telemetry import rescan_metrics_oracle

from breachdrill.backends import MockCompletionBackend, MockEmbeddingBackend
from breachdrill.config import ServiceConfig
from breachdrill.copilot import KnowledgeSnippet, BloomTag, build_index, load_index
from breachdrill.copilot.chunking import proxy_tokens
from breachdrill.copilot.pipeline import build_corpus_index
from breachdrill.decks import Decks, load_bundled_decks
from breachdrill.engine import (
    AttackStage,
    GameConfig,
    GameStatus,
    InjectCard,
    hud_view,
    legal_moves,
    new_game,
    resolve_turn,
)
from breachdrill.scaffolding import LearnerSignals, ScaffoldLevel, scaffold_policy
from breachdrill.service import create_app
from breachdrill.sessions import SessionManager
from breachdrill.simulate import PolicyKind, simulate
from breachdrill.telemetry import (
    EventKind,
    derive_metrics_from_events,
    export_json,
    import_json,
    read_log,
)


def _ok(line: str) -> None:
    print(f"[acceptance] PASS — {line}", flush=True)


def _roll_only_decks(written: bool) -> Decks:
    """One usable zero-cooldown procedure that never reveals, so a single
    game can run for thousands of turns."""
    procs = [
        make_proc("p-roll", written=written, cooldown=0),
        make_proc("p-ghost", cooldown=0),
    ]
    attack = [make_attack(f"a{i}", AttackStage(i), {"p-ghost"}) for i in range(4)]
    return Decks(attack=attack, procedures=procs, injects=[InjectCard("i", "I", "")])


def _count_successes(written: bool, turns: int, seed: int) -> float:
    decks = _roll_only_decks(written)
    config = GameConfig(max_turns=turns)
    state = new_game(config, decks.attack, decks.procedures, decks.injects, seed)
    successes = 0
    for _ in range(turns):
        state, outcome = resolve_turn(state, "p-roll")
        successes += outcome.roll.success
        expected_mod = 3 if written else 0
        assert outcome.roll.modifier == expected_mod
    return successes / turns


def test_criterion_ruleset_statistics():
    started = time.perf_counter()
    unmodified = _count_successes(written=False, turns=10_000, seed=101)
    written = _count_successes(written=True, turns=10_000, seed=202)
    elapsed = time.perf_counter() - started
    assert 0.48 <= unmodified <= 0.52, unmodified
    assert 0.63 <= written <= 0.67, written
    assert elapsed < 5.0, elapsed
    _ok(
        f"ruleset statistics: 10,000 turns each; success rate {unmodified:.4f} "
        f"(target 0.50 ± 0.02), written {written:.4f} (target 0.65 ± 0.02), "
        f"{elapsed:.2f}s < 5s"
    )


def test_criterion_inject_exactness():
    decks = load_bundled_decks()
    config = GameConfig()
    rng = random.Random(17)
    turns_checked = 0
    games = 0
    while turns_checked < 10_000:
        games += 1
        state = new_game(config, decks.attack, decks.procedures, decks.injects,
                         rng.getrandbits(64))
        while state.status is GameStatus.IN_PROGRESS:
            move = rng.choice(legal_moves(state))
            state, _ = resolve_turn(state, move)
        # independent re-scan of the TurnOutcome log
        streak = 0
        for outcome in state.history:
            raw = outcome.roll.raw
            streak = 0 if outcome.roll.success else streak + 1
            if raw == 1:
                expected = "Natural1"
            elif raw == 20:
                expected = "Natural20"
            elif streak == config.inject_on_streak:
                expected = "FailureStreak"
            else:
                expected = None
            actual = outcome.inject.trigger_reason.value if outcome.inject else None
            assert actual == expected, (outcome, expected)
            if streak == config.inject_on_streak:
                streak = 0
            turns_checked += 1
    _ok(
        f"inject exactness: {turns_checked} turns over {games} games re-scanned; "
        "injects fired iff raw in {1, 20} or streak hit 3, zero mismatches"
    )


def test_criterion_replay_determinism():
    decks = load_bundled_decks()
    config = GameConfig()
    rng = random.Random(23)

    def record_moves(seed: int) -> list[str]:
        state = new_game(config, decks.attack, decks.procedures, decks.injects, seed)
        moves = []
        while state.status is GameStatus.IN_PROGRESS:
            move = rng.choice(legal_moves(state))
            moves.append(move)
            state, _ = resolve_turn(state, move)
        return moves

    def replay_bytes(seed: int, moves: list[str]) -> bytes:
        state = new_game(config, decks.attack, decks.procedures, decks.injects, seed)
        for move in moves:
            state, _ = resolve_turn(state, move)
        blob = {
            "history": [o.to_dict() for o in state.history],
            "final": state.to_dict(),
        }
        return json.dumps(blob, sort_keys=True).encode()

    for _ in range(100):
        seed = rng.getrandbits(64)
        moves = record_moves(seed)
        assert replay_bytes(seed, moves) == replay_bytes(seed, moves)
    _ok("replay determinism: 100 random (seed, move-list) pairs replayed twice, "
        "byte-identical histories")


def _oracle_rank(snippets, query, k):
    """Brute-force oracle at acceptance scale: one explicit cosine per
    candidate (np.dot per row, no shared matrix path with the index), sorted
    by the documented tie-break."""
    qnorm = float(np.linalg.norm(query))
    scored = []
    for s in snippets:
        dot = float(np.dot(s.embedding, query))
        norm = float(np.linalg.norm(s.embedding))
        scored.append((s.snippet_id, dot / (norm * qnorm)))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:k]


def test_criterion_retrieval_oracle_equivalence():
    dim = 1536
    embedder = MockEmbeddingBackend(dim=dim)
    tags = list(BloomTag)
    snippets = [
        KnowledgeSnippet(
            snippet_id=f"sn{i:04d}",
            doc_id=f"d{i % 31}",
            text=f"knowledge unit number {i}",
            bloom_tag=tags[i % 4],
            embedding=embedder.embed(f"knowledge unit number {i}"),
        )
        for i in range(1000)
    ]
    index = build_index(snippets, dim=dim)
    # the tiny-scale pure-python oracle agrees with the numpy oracle
    probe = np.random.default_rng(3).standard_normal(dim)
    assert [s for s, _ in _oracle_rank(snippets[:40], probe, 10)] == [
        s for s, _ in brute_force_rank(snippets[:40], probe, 10)
    ]
    rng = np.random.default_rng(77)
    worst = 0.0
    for q in range(1000):
        query = rng.standard_normal(dim)
        started = time.perf_counter()
        got = index.search(query, k=10)
        worst = max(worst, time.perf_counter() - started)
        expected = _oracle_rank(snippets, query, 10)
        assert [g[0] for g in got] == [e[0] for e in expected], f"query {q}"
    assert worst < 0.050, worst
    _ok(
        f"retrieval oracle equivalence: 1,000 queries x 1,000 snippets identical "
        f"to brute-force ranking; slowest query {worst * 1000:.2f}ms < 50ms"
    )


def test_criterion_offline_pipeline_shape(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    topics = ["phishing", "spraying", "tunneling", "roasting", "staging"]
    for i, topic in enumerate(topics):
        body = f"Notes on {topic}. " + " ".join(
            f"{topic} detail number {j} matters because of reason {j}." for j in range(40)
        )
        (corpus / f"doc{i}.txt").write_text(f"uri: https://corpus/{topic}\n{body}")

    index, failures = build_corpus_index(
        corpus, MockCompletionBackend(), MockEmbeddingBackend(dim=1536)
    )
    assert failures == []
    assert len(index) >= 5
    assert {s.doc_id for s in index.snippets} == {f"doc{i}" for i in range(5)}
    for s in index.snippets:
        assert s.bloom_tag in set(BloomTag)
        assert proxy_tokens(s.text) <= 300
        assert s.embedding.shape == (1536,)

    path = tmp_path / "corpus.idx"
    index.save(path)
    loaded = load_index(path)
    assert len(loaded) == len(index)
    for s in index.snippets:
        t = loaded.get(s.snippet_id)
        assert (t.doc_id, t.text, t.bloom_tag, t.metadata) == (
            s.doc_id, s.text, s.bloom_tag, s.metadata
        )
        assert np.array_equal(t.embedding, s.embedding)
    _ok(
        f"offline pipeline shape: 5 docs -> {len(index)} snippets, all 4 Bloom "
        "tags, <= 300 proxy tokens, 1536-dim embeddings; save/load exact"
    )


def test_criterion_scaffolding_policy():
    rng = random.Random(31)
    for _ in range(10_000):
        level = ScaffoldLevel(rng.randint(1, 7))
        for _ in range(rng.randint(1, 12)):
            signals = LearnerSignals(
                consecutive_failures=rng.randint(0, 3),
                successes_since_last_escalation=rng.randint(0, 3),
                explicit_help_requests=rng.randint(0, 2),
                objectives_met=rng.random() < 0.1,
                session_ending=rng.random() < 0.1,
            )
            level = scaffold_policy(level, signals)
            assert 1 <= level.level <= 8
            if level.level == 8:
                assert signals.objectives_met or signals.session_ending
    for start in range(1, 9):
        for k in range(0, 12):
            level = ScaffoldLevel(start)
            for _ in range(k):
                level = scaffold_policy(
                    level, LearnerSignals(successes_since_last_escalation=1)
                )
            assert level.level == max(1, start - k)
    _ok("scaffolding policy: 10,000 random signal sequences stayed in [1, 8], "
        "rung 8 only when gated, k successes fade L to max(1, L-k)")


def test_criterion_telemetry_roundtrip_and_metrics(tmp_path):
    decks = load_bundled_decks()
    tdir = tmp_path / "telemetry"
    summary = simulate(
        100, PolicyKind.RANDOM_LEGAL, GameConfig(), seed=5150, decks=decks,
        telemetry_dir=tdir, with_agents=False,
    )
    logs = sorted(tdir.glob("*.jsonl"))
    assert len(logs) == 100
    documented = {"seq", "session_id", "timestamp", "kind"}
    for log in logs:
        events, truncated = read_log(log)
        assert truncated is None
        out = export_json(log, log.with_suffix(".json"))
        assert import_json(out) == events

        metrics = derive_metrics_from_events(events)
        oracle = rescan_metrics_oracle(events)
        assert metrics.turn_durations == oracle["turn_durations"]
        assert metrics.hint_frequency == pytest.approx(oracle["hint_frequency"])
        assert metrics.max_error_streak == oracle["max_error_streak"]
        assert metrics.dice_outcome_histogram == oracle["dice"]
        assert metrics.bloom_query_histogram == oracle["bloom"]
        assert metrics.max_error_streak < GameConfig().inject_on_streak + 1
        rolls = sum(metrics.dice_outcome_histogram.values())
        assert rolls == sum(e.kind is EventKind.TURN_RESOLVED for e in events)

        from breachdrill.telemetry import export_csv

        csv_path = export_csv(log, log.with_suffix(".csv"))
        header = csv_path.read_text().splitlines()[0].split(",")
        assert documented <= set(header)
        assert "payload.raw" in header
    _ok(f"telemetry: 100 sessions ({summary.n_games} games) JSONL->JSON->import "
        "identity, metrics equal the independent rescan, CSV columns documented")


def _forced_decks() -> Decks:
    """Every procedure detects some card (the acceptance deck for forced
    win/loss runs); all procedures unwritten."""
    procs = [make_proc(f"p{i}", cooldown=3) for i in range(5)]
    attack = [
        make_attack("fw0", AttackStage.INITIAL_COMPROMISE, {"p0", "p4"}),
        make_attack("fw1", AttackStage.PIVOT_ESCALATE, {"p1", "p4"}),
        make_attack("fw2", AttackStage.PERSISTENCE, {"p2", "p4"}),
        make_attack("fw3", AttackStage.C2_EXFILTRATION, {"p3", "p4"}),
    ]
    return Decks(attack=attack, procedures=procs,
                 injects=[InjectCard("i0", "Inject", "")])


def test_criterion_headless_end_to_end(tmp_path):
    decks = _forced_decks()
    always = simulate(
        200, PolicyKind.DETECTION_GREEDY, GameConfig(success_threshold=1),
        seed=9, decks=decks, telemetry_dir=tmp_path / "win",
    )
    assert always.win_rate == 1.0
    assert always.mean_turns == 4.0

    never = simulate(
        200, PolicyKind.DETECTION_GREEDY, GameConfig(success_threshold=21),
        seed=9, decks=decks, telemetry_dir=tmp_path / "loss", keep_results=True,
    )
    assert never.win_rate == 0.0
    assert never.mean_turns == GameConfig().max_turns
    assert all(r.status is GameStatus.LOST for r in never.results)

    bundled = load_bundled_decks()
    ours = simulate(10_000, PolicyKind.RANDOM_LEGAL, GameConfig(), seed=1234,
                    decks=bundled)
    theirs = oracle_sim.simulate(10_000, "RandomLegal", GameConfig(), seed=1234,
                                 decks=bundled)
    diff = abs(ours.win_rate - theirs["win_rate"])
    assert diff <= 0.01, (ours.win_rate, theirs["win_rate"])
    _ok(
        "headless end-to-end: threshold 1 -> win rate 1.0 mean 4.0; threshold 21 "
        f"-> win rate 0.0 at max turns; RandomLegal 10,000 games {ours.win_rate:.4f} "
        f"vs independent sim {theirs['win_rate']:.4f} (diff {diff:.4f} <= 0.01); all offline"
    )


def _sentinel_decks() -> Decks:
    procs = [make_proc(f"p{i}", cooldown=2) for i in range(5)]
    attack = []
    for i in range(8):
        stage = AttackStage(i % 4)
        attack.append(
            make_attack(
                f"zzhidden{i}cardzz", stage, {f"p{i % 5}"},
                name=f"Sentinel Hidden Card {i} Zq",
            )
        )
    return Decks(attack=attack, procedures=procs,
                 injects=[InjectCard("inj-0", "Inject Zero", "pressure rises")])


def _scan_clean(blob: str, state) -> None:
    for card, revealed in zip(state.hidden_sequence, state.revealed):
        if not revealed:
            assert card.card_id not in blob, card.card_id
            assert card.name not in blob, card.name


def test_criterion_information_hiding(tmp_path):
    decks = _sentinel_decks()
    config = GameConfig()
    rng = random.Random(41)

    # 960 games at the HUD surface
    for _ in range(960):
        state = new_game(config, decks.attack, decks.procedures, decks.injects,
                         rng.getrandbits(64))
        while True:
            _scan_clean(json.dumps(hud_view(state).to_dict()), state)
            if state.status is not GameStatus.IN_PROGRESS:
                break
            state, outcome = resolve_turn(state, rng.choice(legal_moves(state)))
            _scan_clean(json.dumps(outcome.to_dict()), state)

    # 40 games through the full API and WebSocket stream
    manager = SessionManager(
        ServiceConfig(telemetry_dir=str(tmp_path / "telemetry")), decks=decks
    )
    client = TestClient(create_app(manager))
    for g in range(40):
        created = client.post("/sessions", json={"seed": rng.getrandbits(64)})
        assert created.status_code == 201
        sid = created.json()["session_id"]
        sess = manager.get_session(sid)
        _scan_clean(created.text, sess.game)
        hud = created.json()["hud"]
        while hud["status"] == "InProgress":
            move = rng.choice(hud["remaining_procedures"])
            resp = client.post(f"/sessions/{sid}/turn", json={"proc_id": move})
            assert resp.status_code == 200
            _scan_clean(resp.text, sess.game)
            hud = resp.json()["hud"]
        export = client.get(f"/sessions/{sid}/telemetry/export?format=json")
        _scan_clean(export.text, sess.game)
        with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
            total = len(sess.frames)
            frames = [ws.receive_json() for _ in range(total)]
            ws.send_text("close")
        _scan_clean(json.dumps(frames), sess.game)
    _ok("information hiding: 1,000 fuzzed games (960 HUD-level, 40 full "
        "API + WS + export) leaked no unrevealed card identity")
