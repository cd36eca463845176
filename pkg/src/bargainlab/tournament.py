"""Ordered-pair tournaments: plan, execute, persist, and report.

Output layout of a tournament directory::

    manifest.jsonl        plan header line, then one line per game in index order
    games/NNNNN.json      one self-contained game record per game
    cells.csv             one row per ordered (Player 1, Player 2) pair
    win_rate_red.csv      matrices: rows = Player 2 agent, columns = Player 1 agent
    win_rate_blue.csv
    mean_payoff_red.csv
    mean_payoff_blue.csv
    summary.json          exact metrics, aborted games and counts

Every report file is a pure function of the manifest and the saved records,
which is what ``analyze`` relies on.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any

from .agents import AgentSpec, make_agent
from .analysis import CellMetrics, metric_table
from .core import BLUE, RED, ScenarioKind
from .engine import run
from .persistence import IoFailure, load, save
from .records import GameRecord, spec_from_dict, spec_to_dict
from .scenarios import ScenarioConfig, build
from .seeding import derive_seed

log = logging.getLogger(__name__)

SUMMARY_VERSION = "1.0"


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class TournamentPlan:
    scenario: ScenarioKind
    agents: tuple[AgentSpec, ...]
    games_per_pair: int = 60
    base_seed: int = 0
    overrides: Mapping[str, Any] = field(default_factory=dict)
    parallelism: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", ScenarioKind(self.scenario))
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise PlanError("a tournament needs at least one agent")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise PlanError(f"agent ids must be unique, got {ids}")
        if self.games_per_pair < 1:
            raise PlanError("games_per_pair must be >= 1")
        if self.parallelism < 1:
            raise PlanError("parallelism must be >= 1")
        # fail early on a bad scenario override
        build(self.scenario, self.overrides, seed=self.base_seed)

    def pairs(self) -> list[tuple[AgentSpec, AgentSpec]]:
        """All ordered (Player 1, Player 2) pairs, self-play included."""
        return [(a, b) for a in self.agents for b in self.agents]

    def jobs(self) -> list[GameJob]:
        jobs = []
        for p, (red, blue) in enumerate(self.pairs()):
            for g in range(self.games_per_pair):
                seed = derive_seed(self.base_seed, p, g)
                jobs.append(GameJob(len(jobs), p, g, red, blue, seed))
        return jobs

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.value,
            "agents": [spec_to_dict(a) for a in self.agents],
            "games_per_pair": self.games_per_pair,
            "base_seed": self.base_seed,
            "overrides": json.loads(json.dumps(dict(self.overrides))),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], parallelism: int = 1) -> TournamentPlan:
        return cls(
            scenario=ScenarioKind(d["scenario"]),
            agents=tuple(spec_from_dict(a) for a in d["agents"]),
            games_per_pair=int(d.get("games_per_pair", 60)),
            base_seed=int(d.get("base_seed", 0)),
            overrides=dict(d.get("overrides", {})),
            parallelism=parallelism,
        )


@dataclass(frozen=True)
class GameJob:
    index: int
    pair_index: int
    game_index: int
    red: AgentSpec
    blue: AgentSpec
    seed: int


def game_config(kind: ScenarioKind, overrides: Mapping[str, Any], red: AgentSpec, blue: AgentSpec,
                seed: int) -> ScenarioConfig:
    config = build(kind, overrides, seed=seed)
    return config.with_behaviors({RED: red.behavior, BLUE: blue.behavior})


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def play(kind: ScenarioKind, overrides: Mapping[str, Any], red: AgentSpec, blue: AgentSpec, seed: int) -> GameRecord:
    """One game between fresh agents built from the specs."""
    config = game_config(kind, overrides, red, blue, seed)
    # wall-clock stamps would break byte-reproducibility of scripted games
    clock = _utc_now if "llm" in (red.kind, blue.kind) else None
    return run(config, make_agent(red), make_agent(blue), seed, clock=clock)


def run_games(jobs: Sequence[Any], fn: Callable[[Any], GameRecord], parallelism: int = 1) -> list[GameRecord]:
    """Map ``fn`` over ``jobs``; results come back in job order whatever the completion order."""
    if parallelism <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, jobs))


@dataclass(frozen=True)
class TournamentResult:
    plan: TournamentPlan
    records: tuple[GameRecord, ...]
    table: dict[tuple[str, str], CellMetrics]
    summary: str

    @property
    def aborted(self) -> list[int]:
        return [i for i, r in enumerate(self.records) if r.aborted]


def run_tournament(plan: TournamentPlan, out_dir: str | Path | None = None) -> TournamentResult:
    jobs = plan.jobs()

    def execute(job: GameJob) -> GameRecord:
        record = play(plan.scenario, plan.overrides, job.red, job.blue, job.seed)
        if out_dir is not None:
            save(record, Path(out_dir) / game_path(job.index))
        return record

    records = run_games(jobs, execute, plan.parallelism)
    for job, record in zip(jobs, records):
        if record.aborted:
            log.warning("game %d (%s vs %s) aborted: %s", job.index, job.red.id, job.blue.id, record.error)
    if out_dir is not None:
        write_manifest(Path(out_dir), plan, jobs, records)
    files = report_files(plan.to_dict(), records)
    if out_dir is not None:
        write_files(Path(out_dir), files)
    return TournamentResult(plan, tuple(records), metric_table(records), files["summary.json"])


def game_path(index: int) -> str:
    return f"games/{index:05d}.json"


def write_manifest(out: Path, plan: TournamentPlan, jobs: Sequence[GameJob], records: Sequence[GameRecord]) -> None:
    lines = [json.dumps({"type": "plan", **plan.to_dict()}, sort_keys=True)]
    for job, record in zip(jobs, records):
        lines.append(json.dumps({
            "type": "game",
            "index": job.index,
            "pair": job.pair_index,
            "game": job.game_index,
            "red": job.red.id,
            "blue": job.blue.id,
            "seed": job.seed,
            "path": game_path(job.index),
            "record_id": record.record_id,
            "status": record.outcome.status.value,
        }, sort_keys=True))
    write_files(out, {"manifest.jsonl": "\n".join(lines) + "\n"})


def write_files(out: Path, files: Mapping[str, str]) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write reports to {out}: {exc}") from exc


def exact(q: Fraction | None) -> str | None:
    return None if q is None else str(q)


def decimal(q: Fraction | None) -> str:
    """Report formatting is the only place rationals become decimals; blank means undefined."""
    return "" if q is None else f"{float(q):.6f}"


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


CELL_FIELDS = ("games", "aborted", "ties", "red_wins", "blue_wins",
               "win_rate_red", "win_rate_blue", "mean_payoff_red", "mean_payoff_blue")


def matrix_csv(ids: Sequence[str], table: Mapping[tuple[str, str], CellMetrics], metric: str) -> str:
    rows: list[list[Any]] = [["player2 \\ player1", *ids]]
    for blue in ids:
        row: list[Any] = [blue]
        for red in ids:
            cell = table.get((red, blue))
            row.append("" if cell is None else decimal(getattr(cell, metric)))
        rows.append(row)
    return _csv(rows)


def report_files(plan: Mapping[str, Any], records: Sequence[GameRecord]) -> dict[str, str]:
    ids = [a["id"] for a in plan["agents"]]
    table = metric_table(records)
    cells = [table[(r, b)] for r in ids for b in ids if (r, b) in table]

    rows: list[list[Any]] = [["player1", "player2", *CELL_FIELDS]]
    for c in cells:
        values = [getattr(c, f) for f in CELL_FIELDS]
        rows.append([c.red, c.blue, *(decimal(v) if isinstance(v, Fraction) or v is None else v for v in values)])

    summary = {
        "summary_version": SUMMARY_VERSION,
        "scenario": plan["scenario"],
        "agents": ids,
        "games_per_pair": plan["games_per_pair"],
        "base_seed": plan["base_seed"],
        "games": len(records),
        "completed": sum(not r.aborted for r in records),
        "aborted": [{"index": i, "record_id": r.record_id, "error": r.error}
                    for i, r in enumerate(records) if r.aborted],
        "cells": [
            {"player1": c.red, "player2": c.blue,
             **{f: exact(v) if isinstance(v, Fraction) or v is None else v
                for f in CELL_FIELDS for v in [getattr(c, f)]}}
            for c in cells
        ],
    }
    files = {"cells.csv": _csv(rows)}
    for metric in ("win_rate_red", "win_rate_blue", "mean_payoff_red", "mean_payoff_blue"):
        files[f"{metric}.csv"] = matrix_csv(ids, table, metric)
    files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    return files


def read_manifest(out: Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    try:
        lines = (out / "manifest.jsonl").read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read manifest in {out}: {exc}") from exc
    docs = [json.loads(line) for line in lines if line.strip()]
    if not docs or docs[0].get("type") != "plan":
        raise PlanError(f"{out}/manifest.jsonl does not start with a plan line")
    header = {k: v for k, v in docs[0].items() if k != "type"}
    return header, sorted(docs[1:], key=lambda d: d["index"])


def analyze(out_dir: str | Path, write: bool = False) -> dict[str, str]:
    """Recompute every report file from the manifest and saved records alone."""
    out = Path(out_dir)
    plan, games = read_manifest(out)
    records = [load(out / g["path"]) for g in games]
    files = report_files(plan, records)
    if write:
        write_files(out, files)
    return files
