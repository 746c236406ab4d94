"""Command-line interface: REPL, scenario replay, server, seed generation.

The REPL and the replay runner are thin clients of the HTTP API.  By default
they drive an in-process engine through the same FastAPI app the server
exposes; pass ``--server`` to talk to a running instance instead.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .client import SememClient, ServiceCallError
from .engine import Engine
from .errors import SememError
from .lexicon import default_lexicon, load_lexicon, save_lexicon
from .scenario import Scenario, ScenarioRunner, replay as run_replay
from .seed import write_seed_document

REPL_HELP = """\
Commands:
  <instruction>      ground and execute, e.g.  YuMi, pick the screw!
  :ingest <path>     ingest a scene document
  :prompt            show the open prompt
  :answer <json>     answer the open prompt, e.g.  :answer {"accepted": true}
  :accept / :reject  shorthand for confirm-object answers
  :graph             list scene instances and types
  :save <path>       save the prior knowledge to a .semem.json file
  :reset             clear the scene subgraph
  :help              this text
  :quit              exit
"""


def _build_client(server: Optional[str], prior: Optional[str],
                  lexicon_path: Optional[str],
                  prompt_timeout: Optional[float] = None) -> SememClient:
    if server:
        return SememClient(base_url=server)
    lexicon = load_lexicon(lexicon_path) if lexicon_path else default_lexicon()
    if prior:
        engine = Engine.from_document(prior, lexicon, prompt_timeout)
    else:
        engine = Engine(lexicon=lexicon, prompt_timeout=prompt_timeout)
    return SememClient(engine=engine)


@click.group()
@click.version_option(package_name="semem")
def main():
    """Semantic memory workbench for simulated industrial robots."""


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), default="seed.semem.json",
              show_default=True, help="Destination for the seed brain document.")
@click.option("--lexicon-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the default lexicon config here.")
def seed(out: str, lexicon_out: Optional[str]):
    """Write the seed prior knowledge (robot, part types, skills, signatures)."""
    n = write_seed_document(out)
    click.echo(f"wrote {out} ({n} bytes)")
    if lexicon_out:
        save_lexicon(default_lexicon(), lexicon_out)
        click.echo(f"wrote {lexicon_out}")


@main.command()
@click.option("--prior", type=click.Path(exists=True, dir_okay=False), default=None,
              envvar="PRIOR_GRAPH", help="Prior knowledge document to load.")
@click.option("--scene", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Scene document to ingest at startup.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False),
              default=None, envvar="LEXICON", help="Lexicon config file.")
@click.option("--strategy", type=click.Choice(["heuristic", "triplet"]),
              default="heuristic", show_default=True)
@click.option("--save-on-exit", type=click.Path(dir_okay=False), default=None,
              help="Save the prior knowledge here when the REPL exits.")
@click.option("--server", default=None,
              help="Talk to a running server instead of an in-process engine.")
def repl(prior, scene, lexicon_path, strategy, save_on_exit, server):
    """Interactive instruction loop against a live engine."""
    try:
        client = _build_client(server, prior, lexicon_path)
    except SememError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    runner = ScenarioRunner(client, echo=click.echo, strategy=strategy)
    if scene:
        try:
            runner.ingest(json.loads(Path(scene).read_text()))
        except (SememError, OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"cannot ingest {scene}: {exc}")
    click.echo('ready. type an instruction, or :help for commands.')
    while True:
        try:
            line = click.prompt("", prompt_suffix="semem> ", default="",
                                show_default=False).strip()
        except (EOFError, click.Abort):
            break
        if not line:
            continue
        if line in (":quit", ":exit", ":q"):
            break
        try:
            if line == ":help":
                click.echo(REPL_HELP)
            elif line == ":graph":
                export = client.graph()
                click.echo("scene: " + (", ".join(export["scene_labels"]) or "-"))
                types = [n["label"] for n in export["nodes"]
                         if n["kind"] == "type_concept"]
                click.echo("types: " + ", ".join(sorted(types)))
            elif line == ":prompt":
                prompt = client.open_prompt()
                click.echo(json.dumps(prompt, indent=2) if prompt else "no open prompt")
            elif line == ":reset":
                removed = client.reset_scene()["removed"]
                click.echo(f"scene cleared ({removed} nodes removed)")
            elif line in (":accept", ":reject"):
                runner.answer({"accepted": line == ":accept"})
            elif line.startswith(":answer"):
                runner.answer(json.loads(line[len(":answer"):].strip() or "{}"))
            elif line.startswith(":ingest"):
                path = line[len(":ingest"):].strip()
                runner.ingest(json.loads(Path(path).read_text()))
            elif line.startswith(":save"):
                path = line[len(":save"):].strip() or "brain.semem.json"
                Path(path).write_text(_render_export(client))
                click.echo(f"saved {path}")
            elif line.startswith(":"):
                click.echo(f"unknown command {line.split()[0]!r}; :help lists commands")
            else:
                runner.instruct(line)
        except ServiceCallError as exc:
            click.echo(f"error [{exc.code}]: {exc.message}")
        except (SememError, OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}")
    if save_on_exit:
        Path(save_on_exit).write_text(_render_export(client))
        click.echo(f"saved {save_on_exit}")
    client.close()


def _render_export(client: SememClient) -> str:
    return json.dumps(client.export(), indent=2, sort_keys=True) + "\n"


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--server", default=None,
              help="Replay against a running server instead of in-process.")
@click.option("--quiet", is_flag=True, help="Suppress the transcript output.")
def replay(scenario_path: str, server: Optional[str], quiet: bool):
    """Replay a scripted scenario; exit 0 only if every expectation holds."""
    try:
        scenario = Scenario.load(scenario_path)
        client = _build_client(server, str(scenario.prior) if not server else None,
                               str(scenario.lexicon) if scenario.lexicon else None)
    except SememError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    echo = (lambda line: None) if quiet else click.echo
    try:
        result = run_replay(scenario, client, echo=echo)
    finally:
        client.close()
    if result.passed:
        click.echo(f"PASS: {result.steps_run} steps")
        sys.exit(0)
    click.echo(f"FAIL: {result.failure}")
    sys.exit(1)


@main.command()
@click.option("--addr", default="127.0.0.1:8077", show_default=True, envvar="ADDR",
              help="host:port to bind.")
@click.option("--prior", type=click.Path(exists=True, dir_okay=False), default=None,
              envvar="PRIOR_GRAPH", help="Prior knowledge document to load.")
@click.option("--scene", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Scene document to ingest at startup.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False),
              default=None, envvar="LEXICON", help="Lexicon config file.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Serve the operator console from this directory at /ui.")
@click.option("--prompt-timeout", type=float, default=600.0, show_default=True,
              help="Seconds until an unanswered prompt expires.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None,
              help="Append executed-skill records to this JSON-lines file.")
def serve(addr, prior, scene, lexicon_path, ui_dir, prompt_timeout, log_path):
    """Run the HTTP service (REST + server-sent events)."""
    import uvicorn

    from .service import create_app

    try:
        lexicon = load_lexicon(lexicon_path) if lexicon_path else default_lexicon()
        if prior:
            engine = Engine.from_document(prior, lexicon, prompt_timeout, log_path)
        else:
            engine = Engine(lexicon=lexicon, prompt_timeout=prompt_timeout,
                            log_path=log_path)
        if scene:
            engine.ingest_scene_document(Path(scene).read_text())
    except (SememError, OSError) as exc:
        raise click.ClickException(str(exc))
    host, _, port = addr.partition(":")
    app = create_app(engine, ui_dir=ui_dir)
    click.echo(f"semem service on http://{addr}  (events at /events, docs at /docs)")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8077), log_level="info")


if __name__ == "__main__":
    main()
