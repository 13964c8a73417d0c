"""Command-line entry points.

`portal serve` runs the HTTP daemon; `portal repl` is a thin client for
text-mode desk sessions. The REPL speaks the same HTTP API as any other
client: against a remote daemon via --url, or against an in-process app
(identical engine code path) when no URL is given.
"""
from __future__ import annotations

import shlex
import sys

import click

from .config import DaemonConfig, load_config, mock_all_config

HELP_TEXT = """commands:
  awaken <image-file>   begin a session (photograph/bind the object)
  say <text>            speak to the object
  goodbye               end the session
  objects               list known objects
  memories <id> [query] browse an object's memories (query switches to search)
  quit                  leave the repl"""


def _build_config(config_path: str | None, mock_all: bool, data_dir: str | None) -> DaemonConfig:
    if config_path:
        cfg = load_config(config_path)
    elif mock_all:
        cfg = mock_all_config()
    else:
        cfg = DaemonConfig()
    overrides = {}
    if data_dir:
        overrides["data_dir"] = data_dir
    if mock_all and not config_path:
        pass  # already deterministic mock config
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


@click.group()
def main() -> None:
    """Portal daemon: personas, memory, and ritual conversation for objects."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mock-all", is_flag=True, help="use deterministic mock providers")
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, mock_all, data_dir, host, port) -> None:
    """Run the HTTP daemon."""
    import uvicorn

    from .api import create_app

    cfg = _build_config(config_path, mock_all, data_dir)
    app = create_app(cfg)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port)


class _HttpSession:
    """Minimal HTTP client wrapper shared by remote and in-process modes."""

    def __init__(self, url: str | None, cfg: DaemonConfig):
        if url:
            import httpx

            self._client = httpx.Client(base_url=url.rstrip("/"), timeout=60.0)
        else:
            from fastapi.testclient import TestClient

            from .api import create_app

            self._client = TestClient(create_app(cfg))

    def post(self, path: str, body: dict | None = None, params: dict | None = None) -> dict:
        resp = self._client.post(path, json=body, params=params or {})
        resp.raise_for_status()
        return resp.json()

    def get(self, path: str, params: dict | None = None) -> dict | list:
        resp = self._client.get(path, params=params or {})
        resp.raise_for_status()
        return resp.json()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mock-all", is_flag=True, help="use deterministic mock providers")
@click.option("--show-inner", is_flag=True, help="print the object's covert inner thoughts")
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--url", default=None, help="talk to a running daemon instead of in-process")
def repl(config_path, mock_all, show_inner, data_dir, url) -> None:
    """Interactive text-mode session (awaken / say / goodbye)."""
    cfg = _build_config(config_path, mock_all, data_dir)
    session = _HttpSession(url, cfg)
    echo = click.echo
    echo("portal repl. type 'help' for commands.")
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            parts = shlex.split(line)
        except ValueError:
            parts = line.split()
        cmd, args = parts[0].lower(), parts[1:]
        try:
            if cmd == "quit":
                break
            elif cmd == "help":
                echo(HELP_TEXT)
            elif cmd == "awaken":
                image_ref = args[0] if args else None
                out = session.post("/session/awaken", {"image_ref": image_ref})
                if out["status"] == "awakened":
                    meeting = "first meeting" if out.get("was_new") else "recognized"
                    echo(f"[{out['phase']}] bound to {out['name']} "
                         f"({out['object_id']}, {meeting})")
                else:
                    echo(f"[{out['phase']}] {out['status']}"
                         + (f": {out.get('reason')}" if out.get("reason") else ""))
            elif cmd == "say":
                if not args:
                    echo("usage: say <text>")
                    continue
                text = " ".join(args)
                out = session.post(
                    "/session/utterance",
                    {"text": text},
                    params={"include_inner": "true"} if show_inner else None,
                )
                if out["status"] == "ignored":
                    echo("error: no active session")
                    continue
                if show_inner and out.get("inner"):
                    echo(f"(inner {out['inner']['intent']:.2f}) {out['inner']['text']}")
                if out["status"] == "closed":
                    echo(f"[idle] session {out['session_id']} closed")
                elif out.get("spoke"):
                    echo(f"object: {out['response']}")
                elif out["status"] == "turn_failed":
                    echo("(the connection wavers; no reply)")
                else:
                    echo("... the object stays silent")
            elif cmd == "goodbye":
                out = session.post("/session/goodbye")
                if out["status"] == "closed":
                    echo(f"[idle] session {out['session_id']} closed")
                else:
                    echo("error: no active session")
            elif cmd == "objects":
                objs = session.get("/objects")
                if not objs:
                    echo("(none)")
                for o in objs:
                    echo(f"{o['object_id']}  {o['name']}  {o['description']}")
            elif cmd == "memories":
                if not args:
                    echo("usage: memories <object-id> [query]")
                    continue
                params = {"mode": "history", "limit": 50}
                if len(args) > 1:
                    params = {"mode": "search", "q": " ".join(args[1:]), "limit": 50}
                mems = session.get(f"/objects/{args[0]}/memories", params=params)
                if not mems:
                    echo("(none)")
                for m in mems:
                    score = f" [{m['score']:.3f}]" if m.get("score") is not None else ""
                    echo(f"{m['created_at']}  {m['speaker']}:{score} {m['text']}")
            else:
                echo(f"unknown command: {cmd}")
                echo(HELP_TEXT)
        except Exception as exc:  # keep the repl alive on request errors
            echo(f"error: {exc}")


if __name__ == "__main__":
    main()
