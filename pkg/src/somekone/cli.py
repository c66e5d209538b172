"""Command line entry points: serve, simulate, replay, export.

Every command is deterministic under a fixed --seed; simulate and the
replay/export pair are the regression workhorses (byte-identical outputs,
golden-file --check).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from importlib import resources
from pathlib import Path

from .catalog import load_catalog
from .config import EngineConfig, load_config
from .errors import SomekoneError
from .persistence import (
    export as export_doc,
    first_difference,
    load_export,
    read_event_log,
    replay,
)
from .scoring import weights_from_mapping
from .session import Session
from .simulate import load_personas, run_simulation, write_outputs


def _read_catalog(path: str):
    raw = Path(path).read_bytes()
    return load_catalog(raw), raw


def _build_config(args) -> EngineConfig:
    if getattr(args, "config", None):
        config = load_config(Path(args.config).read_bytes())
    else:
        config = EngineConfig()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if getattr(args, "weights", None):
        table = weights_from_mapping(
            json.loads(Path(args.weights).read_text(encoding="utf-8"))
        )
        config = dataclasses.replace(config, weights=table)
    config.validate()
    return config


def _resolve_personas(path: str) -> Path:
    candidate = Path(path)
    if candidate.exists():
        return candidate
    packaged = resources.files("somekone") / "fixtures" / candidate.name
    if packaged.is_file():
        return Path(str(packaged))
    raise FileNotFoundError(f"persona file not found: {path}")


def cmd_serve(args) -> int:
    from .server import EngineService

    catalog, raw = _read_catalog(args.catalog)
    config = _build_config(args)
    session = Session(catalog, config)
    try:
        service = EngineService(
            session,
            raw,
            port=args.port,
            http_port=args.http_port,
            host=args.host,
            data_dir=args.data,
            ui_dir=args.ui,
        )
        service.start()
    except OSError as exc:
        print(f"cannot bind: {exc}", file=sys.stderr)
        return 1
    print(f"session {session.session_id}")
    print(f"wire endpoint   tcp://{args.host}:{service.wire.port}")
    print(f"http endpoint   http://{args.host}:{service.http.port}/")
    print(f"websocket       ws://{args.host}:{service.http.port}/ws")
    print(f"admin token     {session.admin_token}")
    sys.stdout.flush()
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


def cmd_simulate(args) -> int:
    catalog, _ = _read_catalog(args.catalog)
    config = _build_config(args)
    personas = load_personas(_resolve_personas(args.personas))
    session = run_simulation(
        catalog, config, personas, agents=args.agents, steps=args.steps
    )
    paths = write_outputs(session, args.out)
    for name in sorted(paths):
        print(f"{name}\t{paths[name]}")
    return 0


def _rebuild(args) -> tuple[Session, dict | None]:
    catalog, _ = _read_catalog(args.catalog)
    config = _build_config(args)
    events = read_event_log(args.infile)
    golden = load_export(args.check) if getattr(args, "check", None) else None
    roster = golden.get("roster") if golden else None
    return replay(config, catalog, events, roster=roster), golden


def _check_against_golden(session: Session, golden: dict, check_path: str) -> int:
    produced = export_doc(session)
    golden_text = Path(check_path).read_text(encoding="utf-8")
    if produced == golden_text:
        print("round-trip OK: byte-identical")
        return 0
    diff = first_difference(json.loads(produced), json.loads(golden_text))
    print(f"round-trip MISMATCH at {diff or '$ (formatting)'}", file=sys.stderr)
    return 1


def cmd_replay(args) -> int:
    session, golden = _rebuild(args)
    if args.out:
        Path(args.out).write_text(export_doc(session), encoding="utf-8")
        print(f"export\t{args.out}")
    if golden is not None:
        return _check_against_golden(session, golden, args.check)
    if not args.out:
        print(f"replayed {session.seq_watermark} events, watermark {session.seq_watermark}")
    return 0


def cmd_export(args) -> int:
    session, golden = _rebuild(args)
    Path(args.out).write_text(export_doc(session), encoding="utf-8")
    print(f"export\t{args.out}")
    if golden is not None:
        return _check_against_golden(session, golden, args.check)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somekone",
        description="Classroom social-media engine: serve, simulate, replay, export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the live session service")
    serve.add_argument("--catalog", required=True)
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument("--http-port", type=int, default=None)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--seed", type=int, default=None)
    serve.add_argument("--data", default=None, help="event log directory")
    serve.add_argument("--config", default=None)
    serve.add_argument("--weights", default=None, help="weight table override (JSON)")
    serve.add_argument("--ui", default=None, help="static UI bundle directory")
    serve.set_defaults(func=cmd_serve)

    sim = sub.add_parser("simulate", help="run scripted agents headlessly")
    sim.add_argument("--catalog", required=True)
    sim.add_argument("--agents", type=int, required=True)
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--personas", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--config", default=None)
    sim.add_argument("--weights", default=None)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("replay", help="rebuild a session from an event log")
    rep.add_argument("--in", dest="infile", required=True)
    rep.add_argument("--config", default=None)
    rep.add_argument("--catalog", required=True)
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--weights", default=None)
    rep.add_argument("--check", default=None, help="golden export to verify against")
    rep.add_argument("--out", default=None)
    rep.set_defaults(func=cmd_replay)

    exp = sub.add_parser("export", help="replay a log and write its export document")
    exp.add_argument("--in", dest="infile", required=True)
    exp.add_argument("--config", default=None)
    exp.add_argument("--catalog", required=True)
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--weights", default=None)
    exp.add_argument("--check", default=None)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    except SomekoneError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
