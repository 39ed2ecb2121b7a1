"""Line-delimited graph dataset files.

One graph per line, each line a JSON object:

    {"num_nodes": 3, "edges": [[0,1],[1,2]],
     "node_features": [[...], ...],        # optional, n rows
     "targets": {"lambda_2": 1.0}}          # optional

UTF-8, LF line endings. Output files are written atomically (temp file in the
same directory, then rename) so an interrupted run never leaves a partial file.
"""

import json
import os
import tempfile

import numpy as np

from .errors import DatasetFormatError, InvalidGraph
from .graphs import Graph


def graph_to_record(g: Graph) -> dict:
    rec: dict = {"num_nodes": g.num_nodes, "edges": [[u, v] for u, v in g.edges]}
    if g.node_features is not None:
        rec["node_features"] = [list(map(float, row)) for row in g.node_features]
    if g.graph_targets:
        rec["targets"] = {k: float(v) for k, v in g.graph_targets.items()}
    return rec


def record_to_graph(rec: dict) -> Graph:
    if not isinstance(rec, dict):
        raise InvalidGraph("record must be an object")
    if "num_nodes" not in rec:
        raise InvalidGraph("missing num_nodes")
    num_nodes = rec["num_nodes"]
    if not isinstance(num_nodes, int) or isinstance(num_nodes, bool):
        raise InvalidGraph("num_nodes must be an integer")
    edges = rec.get("edges", [])
    if not isinstance(edges, list):
        raise InvalidGraph("edges must be an array of [u, v] pairs")
    features = rec.get("node_features")
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
    targets = rec.get("targets") or {}
    if not isinstance(targets, dict):
        raise InvalidGraph("targets must be an object")
    return Graph(num_nodes, tuple(tuple(e) for e in edges), features, dict(targets))


def loads_line(line: str, line_number: int) -> Graph:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(line_number, f"invalid JSON: {exc.msg}") from exc
    try:
        return record_to_graph(rec)
    except (InvalidGraph, TypeError, ValueError) as exc:
        raise DatasetFormatError(line_number, str(exc)) from exc


def load_dataset(path: str) -> list[Graph]:
    graphs = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            graphs.append(loads_line(line, i))
    return graphs


def dumps_graph(g: Graph) -> str:
    return json.dumps(graph_to_record(g), separators=(",", ":"))


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(path: str, graphs: list[Graph]) -> None:
    atomic_write_text(path, "".join(dumps_graph(g) + "\n" for g in graphs))
