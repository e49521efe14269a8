"""Readers and writers for graphs, populations and reports.

Formats
-------
edge list       CSV, one ``u,v`` pair per line (u < v, 0-indexed); an optional
                ``u,v`` header line is accepted on read.
membership      CSV with header ``vertex_id,block_id``.
manifest        JSON ``{"seed": int, "graphs": [{"edges": path, "membership": path}, ...]}``
                with paths relative to the manifest file.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .estimation import BicReport, LlrReport
from .sampling import GraphSample
from .testing import TestReport


class InputError(ValueError):
    """A file could not be parsed; the message carries the file and line."""


def _int(text: str, path: Path, line: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise InputError(f"{path}:{line}: expected an integer, got {text.strip()!r}") from None


def read_membership(path: str | Path) -> np.ndarray:
    path = Path(path)
    rows: dict[int, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for line, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not "".join(rec).strip():
                continue
            if line == 1 and rec[0].strip() == "vertex_id":
                continue
            if len(rec) != 2:
                raise InputError(f"{path}:{line}: expected 'vertex_id,block_id', got {len(rec)} fields")
            v, b = _int(rec[0], path, line), _int(rec[1], path, line)
            if v < 0 or b < 0:
                raise InputError(f"{path}:{line}: ids must be nonnegative")
            if v in rows:
                raise InputError(f"{path}:{line}: vertex {v} listed twice")
            rows[v] = b
    n = len(rows)
    if set(rows) != set(range(n)):
        missing = sorted(set(range(n)) - set(rows))[:5]
        raise InputError(f"{path}: vertex ids must be 0..{n - 1}; missing {missing}")
    return np.array([rows[v] for v in range(n)], dtype=np.int64)


def write_membership(path: str | Path, membership: Sequence[int]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex_id", "block_id"])
        w.writerows(enumerate(int(b) for b in membership))


def read_edges(path: str | Path) -> np.ndarray:
    path = Path(path)
    edges = []
    seen = set()
    with path.open(newline="", encoding="utf-8") as fh:
        for line, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not "".join(rec).strip():
                continue
            if line == 1 and rec[0].strip() == "u":
                continue
            if len(rec) != 2:
                raise InputError(f"{path}:{line}: expected 'u,v', got {len(rec)} fields")
            u, v = _int(rec[0], path, line), _int(rec[1], path, line)
            if u == v:
                raise InputError(f"{path}:{line}: self-loop on vertex {u}")
            if u < 0 or v < 0:
                raise InputError(f"{path}:{line}: vertex ids must be nonnegative")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InputError(f"{path}:{line}: duplicate edge {key}")
            seen.add(key)
            edges.append(key)
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def write_edges(path: str | Path, graph: GraphSample) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(graph.edges.tolist())


def read_graph(edges_path: str | Path, membership_path: str | Path) -> GraphSample:
    tau = read_membership(membership_path)
    edges = read_edges(edges_path)
    if edges.size and edges.max() >= len(tau):
        raise InputError(f"{edges_path}: edge endpoint {int(edges.max())} has no membership in {membership_path}")
    return GraphSample(len(tau), tau, edges)


def write_population(out_dir: str | Path, graphs: Sequence[GraphSample], seed: int) -> Path:
    """Write each graph's two CSVs plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, g in enumerate(graphs):
        e, m = f"graph_{i:04d}_edges.csv", f"graph_{i:04d}_membership.csv"
        write_edges(out / e, g)
        write_membership(out / m, g.membership)
        entries.append({"edges": e, "membership": m})
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"seed": int(seed), "graphs": entries}, indent=1) + "\n", encoding="utf-8")
    return manifest


def read_manifest(path: str | Path) -> tuple[list[GraphSample], int | None]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or not isinstance(data.get("graphs"), list):
        raise InputError(f"{path}: manifest needs a 'graphs' array")
    graphs = []
    for i, entry in enumerate(data["graphs"]):
        if not isinstance(entry, dict) or "edges" not in entry or "membership" not in entry:
            raise InputError(f"{path}: graphs[{i}] needs 'edges' and 'membership'")
        graphs.append(read_graph(path.parent / entry["edges"], path.parent / entry["membership"]))
    if not graphs:
        raise InputError(f"{path}: manifest lists no graphs")
    return graphs, data.get("seed")


def _dump(path: str | Path, payload: dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def write_test_report(path: str | Path, report: TestReport) -> None:
    _dump(path, report.to_dict())


def read_test_report(path: str | Path) -> TestReport:
    path = Path(path)
    try:
        return TestReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a test report ({exc})") from exc


def write_bic_report(path: str | Path, report: BicReport) -> None:
    _dump(path, report.to_dict())


def write_matrix_csv(path: str | Path, matrix: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(np.asarray(matrix).tolist())


def read_matrix_csv(path: str | Path) -> np.ndarray:
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for line, rec in enumerate(csv.reader(fh), start=1):
            rows.append([_int(x, path, line) for x in rec])
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise InputError(f"{path}: ragged matrix")
    return np.array(rows, dtype=np.int64)


def write_p_profile_csv(path: str | Path, profile: Iterable[tuple[float, float]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "p", "bh_line"])
        for rank, (p, line) in enumerate(profile, start=1):
            w.writerow([rank, repr(float(p)), repr(float(line))])


def write_outcomes_csv(path: str | Path, report: TestReport) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "decision", "statistic", "df", "p_value"])
        for o in report.outcomes:
            df = ";".join(map(str, o.df)) if isinstance(o.df, tuple) else o.df
            w.writerow([o.group_id, o.decision, repr(float(o.statistic)), df, "" if o.p_value is None else repr(o.p_value)])


def write_llr_csv(path: str | Path, report: LlrReport) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "df", "stat", "degenerate"])
        for row in report.rows():
            w.writerow([row["group_id"], row["df"], repr(row["stat"]), int(row["degenerate"])])
