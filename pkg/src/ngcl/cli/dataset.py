"""Line-oriented graph dataset files (``.gds``).

Header lines carry the graph count, node count, feature count, and feature
names; each graph block lists its label, sparse edge triplets
(``e <src> <dst> <weight>``), and one feature line per node
(``f <v1> ... <vF>``). Floats are written with ``repr`` so the format
round-trips bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..biomarkers import NodeFeatureMatrix
from ..errors import DataError, ParseError
from ..graphbuild import BrainGraph

MAGIC = "#ngcl-graphs v1"


def save_graphs(graphs, path) -> None:
    """Serialize a list of BrainGraphs sharing one node count."""
    if not graphs:
        raise DataError("refusing to write an empty graph dataset")
    n = graphs[0].n_nodes
    names = graphs[0].features.feature_names
    if any(g.n_nodes != n for g in graphs):
        raise DataError("all graphs in a dataset file must share the node count")
    lines = [
        MAGIC,
        f"n_graphs={len(graphs)}",
        f"n_nodes={n}",
        f"n_features={len(names)}",
        "feature_names=" + ",".join(names),
    ]
    for gi, g in enumerate(graphs):
        rows, cols = np.nonzero(g.adjacency)
        lines.append(f"graph {gi} label={g.label} edges={rows.size}")
        for i, j in zip(rows, cols):
            lines.append(f"e {i} {j} {g.adjacency[i, j]!r}")
        for row in g.features.values:
            lines.append("f " + " ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_graphs(path) -> list:
    """Parse a ``.gds`` file back into BrainGraphs."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"graph dataset not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"{path}: not a graph dataset file")

    header = {}
    pos = 1
    while pos < len(lines) and "=" in lines[pos] and not lines[pos].startswith("graph "):
        key, value = lines[pos].split("=", 1)
        header[key] = value
        pos += 1
    try:
        n_graphs = int(header["n_graphs"])
        n_nodes = int(header["n_nodes"])
        n_features = int(header["n_features"])
        names = tuple(header["feature_names"].split(","))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad or incomplete header: {exc}") from exc
    if len(names) != n_features:
        raise ParseError(f"{path}: {len(names)} feature names for n_features={n_features}")

    graphs = []
    for gi in range(n_graphs):
        if pos >= len(lines) or not lines[pos].startswith("graph "):
            raise ParseError(f"{path}:{pos + 1}: expected 'graph {gi} ...' block")
        fields = lines[pos].split()
        try:
            label = int(fields[2].split("=", 1)[1])
            n_edges = int(fields[3].split("=", 1)[1])
        except (IndexError, ValueError) as exc:
            raise ParseError(f"{path}:{pos + 1}: malformed graph header") from exc
        pos += 1
        adj = np.zeros((n_nodes, n_nodes))
        for _ in range(n_edges):
            parts = lines[pos].split()
            if len(parts) != 4 or parts[0] != "e":
                raise ParseError(f"{path}:{pos + 1}: expected edge line")
            adj[int(parts[1]), int(parts[2])] = float(parts[3])
            pos += 1
        feats = np.empty((n_nodes, n_features))
        for node in range(n_nodes):
            parts = lines[pos].split()
            if len(parts) != n_features + 1 or parts[0] != "f":
                raise ParseError(f"{path}:{pos + 1}: expected feature line with {n_features} values")
            feats[node] = [float(v) for v in parts[1:]]
            pos += 1
        graphs.append(
            BrainGraph(adj, NodeFeatureMatrix(values=feats, feature_names=names), label)
        )
    return graphs
