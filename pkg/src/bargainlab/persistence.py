"""On-disk game records: atomic save, validated load, deterministic and counterfactual re-runs."""

from __future__ import annotations

import json
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path

from .agents import Agent, make_agent
from .core import BLUE, RED
from .engine import InvalidEdit, rederive, run
from .protocol import StructuredMessage, render_message
from .records import (
    CorruptRecord,
    GameRecord,
    Provenance,
    UnsupportedVersion,
    canonical_json,
    record_from_dict,
    record_to_dict,
)

__all__ = [
    "CorruptRecord",
    "IoFailure",
    "UnsupportedVersion",
    "counterfactual_rerun",
    "dumps",
    "load",
    "loads",
    "rerun",
    "save",
]


class IoFailure(OSError):
    pass


def dumps(record: GameRecord) -> str:
    return canonical_json(record_to_dict(record))


def loads(text: str, *, verify: bool = True) -> GameRecord:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"not a JSON document: {exc}") from None
    record = record_from_dict(doc)
    if verify:
        _cross_check(record)
    return record


def _cross_check(record: GameRecord) -> None:
    # holdings are not stored per turn; the transcript is the source of truth
    try:
        derived = rederive(record)
    except InvalidEdit as exc:
        raise CorruptRecord(f"transcript does not replay: {exc}") from None
    stored = record.outcome
    if derived.final_holdings != stored.final_holdings or derived.payoffs != stored.payoffs:
        raise CorruptRecord(
            f"stored outcome {stored.payoffs} disagrees with transcript-derived {derived.payoffs}"
        )


def save(record: GameRecord, path: str | os.PathLike[str]) -> None:
    """Write ``record`` atomically: readers see the old file or the new one, never a partial one."""
    path = Path(path)
    text = dumps(record)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException as exc:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        if isinstance(exc, OSError):
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        raise


def load(path: str | os.PathLike[str], *, verify: bool = True) -> GameRecord:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return loads(text, verify=verify)


def _agents_for(record: GameRecord, agents: Sequence[Agent] | None) -> tuple[Agent, Agent]:
    if agents is not None:
        red, blue = agents
        return red, blue
    return make_agent(record.agents[RED]), make_agent(record.agents[BLUE])


def rerun(record: GameRecord, agents: Sequence[Agent] | None = None) -> GameRecord:
    """Play ``record``'s (config, seed) again, by default with agents rebuilt from its specs."""
    red, blue = _agents_for(record, agents)
    return run(record.config, red, blue, record.seed)


def counterfactual_rerun(
    record: GameRecord,
    turn: int,
    replacement: StructuredMessage | str,
    agents: Sequence[Agent] | None = None,
    seed: int | None = None,
) -> GameRecord:
    """Replay turns before ``turn`` verbatim, substitute ``replacement`` there, continue live.

    The derived record points back to ``record`` through ``parent``.
    """
    if not 0 <= turn < len(record.transcript):
        raise InvalidEdit(f"turn {turn} outside transcript of length {len(record.transcript)}")
    raw = replacement if isinstance(replacement, str) else render_message(replacement)
    red, blue = _agents_for(record, agents)
    return run(
        record.config,
        red,
        blue,
        record.seed if seed is None else seed,
        replay=record.transcript[:turn],
        edits={turn: raw},
        parent=Provenance(record.record_id, turn),
    )
