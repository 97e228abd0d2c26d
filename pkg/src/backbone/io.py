"""Readers and writers for the on-disk formats.

Distribution JSON::

    {"variables": ["X1", "X2", "Y"], "alphabet_sizes": [2, 2, 2],
     "pmf": [{"state": [0, 0, 0], "p": 0.25}, ...]}

Gaussian JSON::

    {"mean": [...], "covariance": [[...], ...], "points": [[...], ...]}

Graph CSV: header ``u,v,w`` then one edge per row, zero-based node indices.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .distribution import GaussianModel, JointDistribution
from .errors import DomainError, InputError
from .graph import WeightedGraph

__all__ = [
    "load_json",
    "parse_distribution",
    "read_distribution",
    "distribution_to_json",
    "parse_gaussian",
    "read_gaussian",
    "parse_graph_rows",
    "read_graph",
    "graph_to_csv",
    "atomic_write",
    "format_number",
]


def format_number(x: float) -> str:
    """12 significant digits, the CSV precision."""
    return format(float(x), ".12g")


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object at the top level")
    return data


def parse_distribution(data: dict, source: str = "<input>") -> JointDistribution:
    for key in ("alphabet_sizes", "pmf"):
        if key not in data:
            raise InputError(f"{source}: missing required key '{key}'")
    try:
        sizes = [int(a) for a in data["alphabet_sizes"]]
        names = data.get("variables")
        entries = data["pmf"]
        states = [list(map(int, e["state"])) for e in entries]
        probs = [float(e["p"]) for e in entries]
    except (TypeError, KeyError, ValueError) as e:
        raise InputError(f"{source}: pmf entries must look like {{\"state\": [ints], \"p\": number}} ({e})") from None
    if not states:
        raise InputError(f"{source}: pmf is empty")
    if any(len(s) != len(sizes) for s in states):
        raise InputError(f"{source}: every state must have {len(sizes)} symbols")
    try:
        return JointDistribution(np.array(states, dtype=np.int64).reshape(len(states), len(sizes)),
                                 probs, sizes, names)
    except ValueError as e:
        raise InputError(f"{source}: {e}") from None


def read_distribution(path) -> JointDistribution:
    return parse_distribution(load_json(path), str(path))


def distribution_to_json(dist: JointDistribution) -> dict:
    return {
        "variables": list(dist.variable_names),
        "alphabet_sizes": list(dist.alphabet_sizes),
        "pmf": [{"state": list(s), "p": p} for s, p in dist.pmf().items()],
    }


def parse_gaussian(data: dict, source: str = "<input>") -> tuple[GaussianModel, np.ndarray]:
    for key in ("mean", "covariance"):
        if key not in data:
            raise InputError(f"{source}: missing required key '{key}'")
    try:
        model = GaussianModel(np.asarray(data["mean"], float), np.asarray(data["covariance"], float))
    except (DomainError, ValueError) as e:
        raise InputError(f"{source}: {e}") from None
    pts = np.asarray(data.get("points", [model.mean.tolist()]), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != model.dim:
        raise InputError(f"{source}: points must be a list of length-{model.dim} vectors")
    return model, pts


def read_gaussian(path) -> tuple[GaussianModel, np.ndarray]:
    return parse_gaussian(load_json(path), str(path))


def parse_graph_rows(text: str, source: str = "<input>") -> list[tuple[int, int, float]]:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{source}: empty file; expected a 'u,v,w' header")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["u", "v", "w"]:
        raise InputError(f"{source}: header must be 'u,v,w', got '{','.join(rows[0])}'")
    edges = []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != 3:
            raise InputError(f"{source}:{line}: expected 3 fields, got {len(r)}")
        try:
            edges.append((int(r[0]), int(r[1]), float(r[2])))
        except ValueError:
            raise InputError(f"{source}:{line}: cannot parse '{','.join(r)}' as int,int,real") from None
    return edges


def read_graph(path, num_nodes: int | None = None, directed: bool = False) -> WeightedGraph:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from None
    edges = parse_graph_rows(text, str(path))
    try:
        return WeightedGraph.from_edges(edges, num_nodes, directed)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None


def graph_to_csv(g: WeightedGraph) -> str:
    lines = ["u,v,w"] + [f"{e.u},{e.v},{e.w!r}" for e in g.edges]
    return "\n".join(lines) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
