"""Delimited observation/key files, scenario configs and report serialisation."""

from __future__ import annotations

import configparser
import csv
import json
import re
from pathlib import Path
from typing import Any

import numpy as np

from .core import MISSING, AnswerKey, LabelAlphabet, ObservationMatrix
from .simulate import CrowdScenario

OBS_HEADER = ["query_id", "agent_id", "label"]
KEY_HEADER = ["query_id", "label"]


class LoadError(ValueError):
    """A data file is malformed; the message carries ``path:line``."""


class ConfigError(ValueError):
    """A scenario description is invalid."""


def _rows(path: Path, header: list[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise LoadError(f"{path}:1: expected header {','.join(header)!r}, got {first!r}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise LoadError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            cells = [c.strip() for c in row]
            if any(c == "" for c in cells):
                raise LoadError(f"{path}:{reader.line_num}: empty field")
            yield reader.line_num, cells


def load_observations(path: str | Path, extra_labels: set[str] = frozenset()) -> ObservationMatrix:
    """Read ``query_id,agent_id,label`` records.

    Agents and queries get dense indices in order of first appearance.
    """
    path = Path(path)
    agents: dict[str, int] = {}
    queries: dict[str, int] = {}
    records = []
    seen: dict[tuple[str, str], int] = {}
    for line, (qid, aid, label) in _rows(path, OBS_HEADER):
        if (qid, aid) in seen:
            raise LoadError(
                f"{path}:{line}: duplicate response of agent {aid!r} to query {qid!r} "
                f"(first on line {seen[qid, aid]})"
            )
        seen[qid, aid] = line
        agents.setdefault(aid, len(agents))
        queries.setdefault(qid, len(queries))
        records.append((agents[aid], queries[qid], label))
    labels = {r[2] for r in records} | set(extra_labels)
    if len(labels) < 2:
        raise LoadError(f"{path}: need at least two distinct labels, found {sorted(labels)}")
    alphabet = LabelAlphabet(labels)
    return ObservationMatrix.from_entries(
        len(agents), len(queries), records, alphabet,
        agent_ids=tuple(agents), query_ids=tuple(queries),
    )


def read_key_rows(path: str | Path) -> list[tuple[int, str, str]]:
    path = Path(path)
    rows, seen = [], set()
    for line, (qid, label) in _rows(path, KEY_HEADER):
        if qid in seen:
            raise LoadError(f"{path}:{line}: query {qid!r} listed twice")
        seen.add(qid)
        rows.append((line, qid, label))
    return rows


def load_dataset(obs_path: str | Path, key_path: str | Path | None = None):
    """Load observations and (optionally) an answer key against them.

    Key labels nobody reported extend the alphabet.
    """
    if key_path is None:
        return load_observations(obs_path), None
    rows = read_key_rows(key_path)
    matrix = load_observations(obs_path, extra_labels={label for _, _, label in rows})
    index = {qid: j for j, qid in enumerate(matrix.query_ids)}
    entries = {}
    for line, qid, label in rows:
        if qid not in index:
            raise LoadError(f"{key_path}:{line}: query {qid!r} does not occur in {obs_path}")
        entries[index[qid]] = label
    return matrix, AnswerKey(entries)


def save_observations(matrix: ObservationMatrix, path: str | Path) -> None:
    """Write records sorted by query_id, then agent_id."""
    labels = matrix.alphabet.labels
    rows = [
        (matrix.query_ids[j], matrix.agent_ids[i], labels[matrix.codes[i, j]])
        for i, j in zip(*np.nonzero(matrix.codes != MISSING))
    ]
    rows.sort(key=lambda r: (_natural(r[0]), _natural(r[1])))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OBS_HEADER)
        w.writerows(rows)


def save_key(key: AnswerKey, matrix: ObservationMatrix, path: str | Path) -> None:
    rows = sorted(
        ((matrix.query_ids[j], label) for j, label in key.entries.items()),
        key=lambda r: _natural(r[0]),
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KEY_HEADER)
        w.writerows(rows)


def _natural(s: str):
    """Sort key that orders ``q2`` before ``q10``."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.findall(r"\d+|\D+", s)]


def _floats(text: str, n: int, name: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from None
    if len(vals) == 1:
        return np.full(n, vals[0])
    if len(vals) != n:
        raise ConfigError(f"{name}: expected 1 or {n} values, got {len(vals)}")
    return np.array(vals)


def load_scenario(path: str | Path, seed: int | None = None) -> CrowdScenario:
    """Parse a ``key = value`` scenario file.

    Keys: ``num_agents``, ``num_queries``, ``labels`` (comma list),
    ``reliability`` and ``participation`` (one value for every agent or one
    per agent), optional ``seed``. ``#`` starts a comment. An explicit
    ``seed`` argument overrides the file.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[scenario]\n" + Path(path).read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sec = parser["scenario"]
    required = {"num_agents", "num_queries", "labels", "reliability", "participation"}
    known = required | {"seed"}
    if missing := required - set(sec):
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    if unknown := set(sec) - known:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        m, n = int(sec["num_agents"]), int(sec["num_queries"])
        file_seed = int(sec.get("seed", "0"))
        labels = [lab.strip() for lab in sec["labels"].split(",") if lab.strip()]
        return CrowdScenario(
            m, n, LabelAlphabet(labels),
            _floats(sec["reliability"], m, "reliability"),
            _floats(sec["participation"], m, "participation"),
            seed=file_seed if seed is None else seed,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


_FLOAT_TAG = "\x00f"


def _tag_floats(obj: Any) -> Any:
    if isinstance(obj, (float, np.floating)):
        text = f"{float(obj):.4f}"
        return _FLOAT_TAG + ("0.0000" if text == "-0.0000" else text)
    if isinstance(obj, dict):
        return {str(k): _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_report(report: dict) -> str:
    """JSON with every float written to exactly four decimals."""
    text = json.dumps(_tag_floats(report), indent=2)
    return re.sub(r'"\\u0000f(-?[0-9.]+|nan|inf|-inf)"', r"\1", text) + "\n"
