"""Command line: serve the session API, simulate headless games, build the
knowledge index, and render session reports.

Exit codes: 0 on success, 1 on user error (bad flags, missing files), 2 on
internal failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import ConfigError, load_config, make_completion_backend, make_embedding_backend
from .decks import DeckError, load_decks, load_bundled_decks
from .engine import GameConfig
from .simulate import PolicyKind, simulate as run_simulation


class UserError(click.ClickException):
    pass


_POLICY_ALIASES = {
    "detection-greedy": PolicyKind.DETECTION_GREEDY,
    "detectiongreedy": PolicyKind.DETECTION_GREEDY,
    "random-legal": PolicyKind.RANDOM_LEGAL,
    "randomlegal": PolicyKind.RANDOM_LEGAL,
}


def _game_config(base: GameConfig, **overrides) -> GameConfig:
    merged = base.to_dict()
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return GameConfig(**merged)
    except ValueError as exc:
        raise UserError(str(exc)) from exc


@click.group()
def cli() -> None:
    """Incident-response breach-drill platform."""


@cli.command()
@click.option("--config-file", type=click.Path(path_type=Path), default=None,
              help="JSON config file (flags and env override it).")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--decks-dir", type=click.Path(path_type=Path), default=None)
@click.option("--index", "index_path", type=click.Path(path_type=Path), default=None)
@click.option("--telemetry-dir", type=click.Path(path_type=Path), default=None)
@click.option("--backend", type=click.Choice(["mock", "http"]), default=None,
              help="Completion and embedding backend kind.")
def serve(config_file, host, port, decks_dir, index_path, telemetry_dir, backend) -> None:
    """Run the session API server."""
    overrides: dict = {
        "host": host,
        "port": port,
        "decks_dir": str(decks_dir) if decks_dir else None,
        "index_path": str(index_path) if index_path else None,
        "telemetry_dir": str(telemetry_dir) if telemetry_dir else None,
    }
    if backend:
        overrides["completion"] = {"kind": backend}
        overrides["embedding"] = {"kind": backend}
    try:
        config = load_config(config_file, overrides=overrides)
    except ConfigError as exc:
        raise UserError(str(exc)) from exc

    from .service import create_app
    from .sessions import SessionManager

    try:
        manager = SessionManager(config)
    except (DeckError, ConfigError) as exc:
        raise UserError(str(exc)) from exc
    app = create_app(manager)

    import uvicorn

    click.echo(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@cli.command()
@click.option("--games", "n_games", type=int, default=100, show_default=True)
@click.option("--policy", default="detection-greedy", show_default=True,
              help="detection-greedy or random-legal.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--decks-dir", type=click.Path(path_type=Path), default=None,
              help="Deck directory (bundled decks when omitted).")
@click.option("--telemetry-dir", type=click.Path(path_type=Path), default=None,
              help="Write one JSONL log per game here.")
@click.option("--with-agents", is_flag=True, default=False,
              help="Have mock teammates comment every turn (slower, fuller logs).")
@click.option("--success-threshold", type=int, default=None)
@click.option("--written-bonus", type=int, default=None)
@click.option("--max-turns", type=int, default=None)
@click.option("--cooldown-turns-default", type=int, default=None)
@click.option("--inject-on-streak", type=int, default=None)
def simulate(n_games, policy, seed, decks_dir, telemetry_dir, with_agents,
             success_threshold, written_bonus, max_turns, cooldown_turns_default,
             inject_on_streak) -> None:
    """Play games headlessly with a scripted policy and print a summary."""
    kind = _POLICY_ALIASES.get(policy.strip().lower())
    if kind is None:
        raise UserError(f"unknown policy {policy!r} (use detection-greedy or random-legal)")
    config = _game_config(
        GameConfig(),
        success_threshold=success_threshold,
        written_bonus=written_bonus,
        max_turns=max_turns,
        cooldown_turns_default=cooldown_turns_default,
        inject_on_streak=inject_on_streak,
    )
    try:
        decks = (
            load_decks(decks_dir, default_cooldown=config.cooldown_turns_default)
            if decks_dir
            else load_bundled_decks(default_cooldown=config.cooldown_turns_default)
        )
    except DeckError as exc:
        raise UserError(str(exc)) from exc
    summary = run_simulation(
        n_games,
        kind,
        config,
        seed,
        decks,
        telemetry_dir=telemetry_dir,
        with_agents=with_agents,
    )
    click.echo(json.dumps(summary.to_dict(), indent=2))


@cli.group()
def corpus() -> None:
    """Knowledge corpus operations."""


@corpus.command("build")
@click.option("--corpus-dir", type=click.Path(path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True,
              help="Index file to write.")
@click.option("--backend", type=click.Choice(["mock", "http"]), default="mock",
              show_default=True)
@click.option("--config-file", type=click.Path(path_type=Path), default=None)
@click.option("--max-tokens", type=int, default=300, show_default=True,
              help="Chunk budget in proxy tokens (words).")
def corpus_build(corpus_dir, out_path, backend, config_file, max_tokens) -> None:
    """Expand, chunk, embed, and index every document in a corpus directory."""
    from .copilot import build_corpus_index

    try:
        config = load_config(config_file)
    except ConfigError as exc:
        raise UserError(str(exc)) from exc
    config.completion.kind = backend
    config.embedding.kind = backend
    try:
        completion = make_completion_backend(config.completion)
        embedding = make_embedding_backend(config.embedding, config.embedding_dim)
    except ConfigError as exc:
        raise UserError(str(exc)) from exc

    if not Path(corpus_dir).is_dir():
        raise UserError(f"corpus directory not found: {corpus_dir}")

    def progress(doc_id: str, count: int) -> None:
        click.echo(f"  {doc_id}: {count} snippets")

    index, failures = build_corpus_index(
        corpus_dir, completion, embedding, max_tokens=max_tokens, on_progress=progress
    )
    for doc_id, error in failures:
        click.echo(f"warning: {doc_id}: {error}", err=True)
    if len(index) == 0:
        raise UserError("no documents could be indexed")
    index.save(out_path)
    click.echo(f"indexed {len(index)} snippets from {corpus_dir} -> {out_path}")


@cli.command()
@click.argument("logs", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def report(logs, out_dir) -> None:
    """Render CSV plus figures for one or more session telemetry logs."""
    from .report import render_session_report
    from .telemetry import ParseError

    total = 0
    for log in logs:
        try:
            written = render_session_report(log, out_dir)
        except ParseError as exc:
            raise UserError(f"{log}: {exc}") from exc
        total += len(written)
        for path in written:
            click.echo(str(path))
    click.echo(f"wrote {total} file(s) to {out_dir}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        click.echo(f"internal error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
