"""Command-line entry point.

Every subcommand accepts ``--config FILE`` (YAML or JSON); explicit flags win
over values from the file. Exit codes: 0 success, 1 configuration error,
2 partial failure (some games aborted), 3 backend unreachable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import yaml

from .agents import AgentSpec, BackendTimeout, LLMParams, StrategyError, scripted
from .core import ScenarioKind
from .engine import InvalidEdit
from .experiments import MissingParam, UnknownExperiment, experiment_names, run_experiment
from .persistence import CorruptRecord, IoFailure, UnsupportedVersion, counterfactual_rerun, dumps, load, rerun, save
from .records import GameRecord, spec_from_dict
from .scenarios import InvalidOverride
from .tournament import PlanError, TournamentPlan, analyze, play, run_tournament

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_UNREACHABLE = 0, 1, 2, 3

log = logging.getLogger("bargainlab")


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return doc


def parse_assignments(items: Sequence[str] | None) -> dict[str, Any]:
    """``key=value`` pairs; values are read as YAML scalars or flow collections."""
    out: dict[str, Any] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key] = yaml.safe_load(value)
    return out


def agent_from_config(value: Any) -> AgentSpec:
    if isinstance(value, AgentSpec):
        return value
    if isinstance(value, Mapping):
        doc = dict(value)
        if doc.get("kind") == "llm" and isinstance(doc.get("llm"), Mapping):
            return AgentSpec(id=doc["id"], kind="llm", llm=LLMParams(**doc["llm"]), behavior=doc.get("behavior"))
        return spec_from_dict({"kind": "scripted", **doc})
    raise ConfigError(f"cannot read agent spec {value!r}")


def parse_agent(text: str, known: Mapping[str, AgentSpec]) -> AgentSpec:
    """An id from the config file, ``scripted:STRATEGY[:k=v,...]`` or ``llm:MODEL``."""
    if text in known:
        return known[text]
    kind, _, rest = text.partition(":")
    if kind == "scripted" and rest:
        strategy, _, params = rest.partition(":")
        values = parse_assignments(params.split(",") if params else ())
        return scripted(text, strategy, **values)
    if kind == "llm" and rest:
        return AgentSpec(id=text, kind="llm", llm=LLMParams(model=rest))
    raise ConfigError(f"unknown agent {text!r}: use a config id, scripted:STRATEGY or llm:MODEL")


def pick(flag: Any, config: Mapping[str, Any], key: str, default: Any = None) -> Any:
    return flag if flag is not None else config.get(key, default)


def _known_agents(config: Mapping[str, Any]) -> dict[str, AgentSpec]:
    specs = [agent_from_config(a) for a in config.get("agents", [])]
    return {s.id: s for s in specs}


def _exit_for(records: Sequence[GameRecord]) -> int:
    aborted = [r for r in records if r.aborted]
    if not aborted:
        return EXIT_OK
    if len(aborted) == len(records) and all((r.error or "").startswith(BackendTimeout.__name__) for r in aborted):
        return EXIT_UNREACHABLE
    return EXIT_PARTIAL


def _outcome_line(record: GameRecord) -> str:
    o = record.outcome
    payoffs = ", ".join(f"{p}={v}" for p, v in o.payoffs.items())
    return f"{record.record_id} status={o.status.value} winner={o.winner} payoffs: {payoffs}"


def cmd_run(args: argparse.Namespace, config: dict[str, Any]) -> int:
    known = _known_agents(config)
    kind = ScenarioKind(pick(args.scenario, config, "scenario", "seller_buyer"))
    overrides = {**config.get("overrides", {}), **parse_assignments(args.override)}
    names = [args.agent1, args.agent2]
    configured = list(known)
    for i, name in enumerate(names):
        if name is None:
            if len(configured) <= i:
                raise ConfigError("run needs two agents (--agent1/--agent2 or an agents list in the config)")
            names[i] = configured[i]
    red, blue = (parse_agent(n, known) for n in names)
    record = play(kind, overrides, red, blue, int(pick(args.seed, config, "seed", 0)))
    out = pick(args.out, config, "out")
    if out:
        save(record, out)
    else:
        sys.stdout.write(dumps(record))
    print(_outcome_line(record), file=sys.stderr)
    return _exit_for([record])


def cmd_tournament(args: argparse.Namespace, config: dict[str, Any]) -> int:
    known = _known_agents(config)
    agents = [parse_agent(a, known) for a in args.agent] if args.agent else list(known.values())
    out = pick(args.out, config, "out")
    if not out:
        raise ConfigError("tournament needs an output directory (--out)")
    plan = TournamentPlan(
        scenario=ScenarioKind(pick(args.scenario, config, "scenario", "resource_exchange")),
        agents=tuple(agents),
        games_per_pair=int(pick(args.games_per_pair, config, "games_per_pair", 60)),
        base_seed=int(pick(args.seed, config, "seed", 0)),
        overrides={**config.get("overrides", {}), **parse_assignments(args.override)},
        parallelism=int(pick(args.parallelism, config, "parallelism", 1)),
    )
    result = run_tournament(plan, out)
    sys.stdout.write(result.summary)
    code = _exit_for(result.records)
    if code != EXIT_OK:
        print(f"{len(result.aborted)} of {len(result.records)} games aborted; "
              f"metrics cover completed games only", file=sys.stderr)
    return code


def cmd_experiment(args: argparse.Namespace, config: dict[str, Any]) -> int:
    section = config.get("experiment", {})
    name = args.name or section.get("name")
    if not name:
        raise ConfigError(f"name an experiment: {', '.join(experiment_names())}")
    params = {**section.get("params", {}), **parse_assignments(args.param)}
    for key, value in list(params.items()):
        if isinstance(value, Mapping) and "id" in value:
            params[key] = agent_from_config(value)
    known = _known_agents(config)
    for key, value in list(params.items()):
        if isinstance(value, str) and (value in known or value.startswith(("scripted:", "llm:"))):
            params[key] = parse_agent(value, known)
    out = pick(args.out, config, "out")
    report = run_experiment(name, params, int(pick(args.seed, config, "seed", 0)), out)
    sys.stdout.write(report.files["summary.json"])
    return _exit_for(report.records)


def cmd_replay(args: argparse.Namespace, config: dict[str, Any]) -> int:
    record = load(args.record)
    again = rerun(record)
    same = [e.raw for e in again.transcript] == [e.raw for e in record.transcript]
    if args.out:
        save(again, args.out)
    print(_outcome_line(again))
    print("transcript identical" if same else "transcript differs from the stored record")
    return _exit_for([again])


def cmd_counterfactual(args: argparse.Namespace, config: dict[str, Any]) -> int:
    record = load(args.record)
    if (args.message is None) == (args.message_file is None):
        raise ConfigError("give exactly one of --message or --message-file")
    text = args.message if args.message is not None else Path(args.message_file).read_text(encoding="utf-8")
    derived = counterfactual_rerun(record, args.turn, text)
    if args.out:
        save(derived, args.out)
    else:
        sys.stdout.write(dumps(derived))
    print(_outcome_line(derived), file=sys.stderr)
    return _exit_for([derived])


def cmd_analyze(args: argparse.Namespace, config: dict[str, Any]) -> int:
    out = Path(args.directory)
    before = (out / "summary.json").read_text(encoding="utf-8") if (out / "summary.json").exists() else None
    files = analyze(out, write=not args.check)
    sys.stdout.write(files["summary.json"])
    if args.check and before != files["summary.json"]:
        print("recomputed summary differs from the stored one", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bargainlab", description="Two-player negotiation games and tournaments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = True) -> None:
        p.add_argument("--config", help="YAML or JSON config file; explicit flags take precedence")
        if seed:
            p.add_argument("--seed", type=int)

    p = sub.add_parser("run", help="play one game")
    common(p)
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--agent1", help="Player 1 (RED, the seller): config id, scripted:STRATEGY[:k=v,..] or llm:MODEL")
    p.add_argument("--agent2", help="Player 2 (BLUE)")
    p.add_argument("--override", action="append", metavar="KEY=VALUE", help="scenario override, repeatable")
    p.add_argument("--out", help="record path (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tournament", help="all ordered pairs of the given agents")
    common(p)
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--agent", action="append", help="agent, repeatable (default: the config's agents)")
    p.add_argument("--games-per-pair", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--override", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("experiment", help="run a named experiment")
    common(p)
    p.add_argument("name", nargs="?", help=f"one of: {', '.join(experiment_names())}")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="experiment parameter, repeatable")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("replay", help="re-run a saved game with the same config and seed")
    common(p, seed=False)
    p.add_argument("record")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("counterfactual", help="replace one turn of a saved game and continue")
    common(p, seed=False)
    p.add_argument("record")
    p.add_argument("--turn", type=int, required=True, help="0-based transcript index to replace")
    p.add_argument("--message", help="replacement raw message text")
    p.add_argument("--message-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("analyze", help="recompute reports of a tournament directory")
    common(p, seed=False)
    p.add_argument("directory")
    p.add_argument("--check", action="store_true", help="compare with the stored summary instead of rewriting")
    p.set_defaults(func=cmd_analyze)
    return parser


CONFIG_ERRORS = (
    ConfigError,
    InvalidOverride,
    PlanError,
    MissingParam,
    UnknownExperiment,
    StrategyError,
    InvalidEdit,
    CorruptRecord,
    UnsupportedVersion,
    IoFailure,
    KeyError,
    TypeError,
    ValueError,
)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which would read as a partial failure
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(getattr(args, "config", None))
        return args.func(args, config)
    except CONFIG_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
