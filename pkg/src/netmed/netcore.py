"""Network data model, ingestion and descriptive statistics."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats


class NetworkFormatError(ValueError):
    """Raised when network or actor input fails validation."""


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Undirected binary network stored as a dense symmetric 0/1 matrix."""

    entries: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.int8, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NetworkFormatError(f"adjacency matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise NetworkFormatError("network needs at least 2 actors")
        if not np.isin(m, (0, 1)).all():
            raise NetworkFormatError("adjacency entries must be 0 or 1")
        if np.any(np.diag(m) != 0):
            raise NetworkFormatError("self-loops are not allowed (nonzero diagonal)")
        if not np.array_equal(m, m.T):
            raise NetworkFormatError("adjacency matrix is not symmetric; use symmetrize()")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        labels = tuple(str(s) for s in self.labels) or tuple(str(i + 1) for i in range(m.shape[0]))
        if len(labels) != m.shape[0]:
            raise NetworkFormatError("number of labels does not match matrix size")
        object.__setattr__(self, "labels", labels)

    @property
    def n_actors(self) -> int:
        return self.entries.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.entries, 1).sum())

    @property
    def n_dyads(self) -> int:
        n = self.n_actors
        return n * (n - 1) // 2

    def degrees(self) -> np.ndarray:
        return self.entries.sum(axis=1).astype(int)

    def complement(self) -> "AdjacencyMatrix":
        c = 1 - self.entries
        np.fill_diagonal(c, 0)
        return AdjacencyMatrix(c, self.labels)


@dataclass(frozen=True)
class ActorData:
    """Per-actor covariate ``x`` and outcome ``y``, in network row order."""

    x: np.ndarray
    y: np.ndarray
    actor_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        y = np.asarray(self.y, dtype=float).copy()
        if x.ndim != 1 or y.shape != x.shape:
            raise NetworkFormatError("x and y must be 1-d and of equal length")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise NetworkFormatError("actor data contains missing or non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        ids = tuple(str(s) for s in self.actor_ids) or tuple(str(i + 1) for i in range(len(x)))
        if len(ids) != len(x):
            raise NetworkFormatError("number of actor ids does not match data length")
        object.__setattr__(self, "actor_ids", ids)

    def __len__(self):
        return len(self.x)

    @property
    def is_binary(self) -> bool:
        return bool(np.isin(self.y, (0.0, 1.0)).all())

    def check_matches(self, net: AdjacencyMatrix) -> None:
        if len(self) != net.n_actors:
            raise NetworkFormatError(
                f"actor data has {len(self)} rows but network has {net.n_actors} actors")


def symmetrize(raw, rule: str = "max") -> AdjacencyMatrix:
    """Make a directed 0/1 matrix undirected.

    ``rule="max"`` keeps a tie if either direction is present (the
    strongest relation); ``rule="min"`` keeps it only if both are.
    """
    m = np.asarray(raw)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NetworkFormatError(f"cannot symmetrize non-square matrix of shape {m.shape}")
    if rule == "max":
        s = np.maximum(m, m.T)
    elif rule == "min":
        s = np.minimum(m, m.T)
    else:
        raise ValueError(f"unknown symmetrize rule {rule!r}")
    labels = raw.labels if isinstance(raw, AdjacencyMatrix) else ()
    return AdjacencyMatrix(s, labels)


def density(net: AdjacencyMatrix) -> float:
    """Proportion of present ties over all N(N-1)/2 possible ties."""
    return net.n_edges / net.n_dyads


def point_biserial(continuous, binary) -> tuple[float, float]:
    """Point-biserial correlation and its two-sided p-value."""
    c = np.asarray(continuous, dtype=float)
    b = np.asarray(binary, dtype=float)
    if c.shape != b.shape or c.ndim != 1:
        raise ValueError("inputs must be 1-d vectors of equal length")
    if len(c) < 3:
        raise ValueError("need at least 3 observations")
    if not np.isin(b, (0.0, 1.0)).all():
        raise ValueError("binary vector must contain only 0/1")
    if np.unique(b).size < 2:
        raise ValueError("binary vector is constant")
    if np.ptp(c) == 0:
        raise ValueError("continuous vector is constant")
    res = stats.pointbiserialr(b, c)
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------- parsing

_SPLIT = re.compile(r"[,\s]+")


def _data_lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def parse_matrix(text: str, symmetrize_rule: str | None = None) -> AdjacencyMatrix:
    rows = []
    for k, line in enumerate(_data_lines(text)):
        try:
            rows.append([int(tok) for tok in line.split(",")])
        except ValueError:
            raise NetworkFormatError(f"row {k + 1}: non-integer entry in {line!r}") from None
    if not rows:
        raise NetworkFormatError("empty matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise NetworkFormatError("ragged rows in adjacency matrix")
    m = np.array(rows)
    if m.shape[0] != m.shape[1]:
        raise NetworkFormatError(f"matrix is {m.shape[0]}x{m.shape[1]}, not square")
    if not np.isin(m, (0, 1)).all():
        raise NetworkFormatError("adjacency entries must be 0 or 1")
    if np.any(np.diag(m) != 0):
        raise NetworkFormatError("self-loops are not allowed (nonzero diagonal)")
    if symmetrize_rule is not None:
        return symmetrize(m, symmetrize_rule)
    return AdjacencyMatrix(m)


def parse_edge_list(text: str, labels: Sequence[str] | None = None,
                    symmetrize_rule: str | None = None) -> AdjacencyMatrix:
    """Build a dense network from an edge list of actor labels.

    Undirected by default: each listed pair is a tie both ways. Actor order
    follows ``labels`` when given (e.g. from the actor file), otherwise order
    of first appearance.
    """
    lines = _data_lines(text)
    if lines and [t.lower() for t in _SPLIT.split(lines[0])] == ["from", "to"]:
        lines = lines[1:]
    pairs = []
    for k, line in enumerate(lines):
        toks = [t for t in _SPLIT.split(line) if t]
        if len(toks) != 2:
            raise NetworkFormatError(f"edge line {k + 1}: expected 2 columns, got {line!r}")
        pairs.append((toks[0], toks[1]))
    if labels is None:
        order: dict[str, int] = {}
        for u, v in pairs:
            order.setdefault(u, len(order))
            order.setdefault(v, len(order))
        labels = list(order)
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    raw = np.zeros((n, n), dtype=np.int8)
    for u, v in pairs:
        if u not in index or v not in index:
            raise NetworkFormatError(f"edge ({u}, {v}) references an unknown actor")
        i, j = index[u], index[v]
        if i == j:
            raise NetworkFormatError(f"self-loop on actor {u}")
        raw[i, j] = 1
        if symmetrize_rule is None:
            raw[j, i] = 1
    if symmetrize_rule is not None:
        return AdjacencyMatrix(symmetrize(raw, symmetrize_rule).entries, labels)
    return AdjacencyMatrix(raw, labels)


def _looks_like_matrix(text: str) -> bool:
    lines = _data_lines(text)
    if not lines:
        return False
    first = lines[0].split(",")
    return len(first) > 2 or (len(first) == 2 and len(lines) == 2 and set("".join(lines)) <= set("01,"))


def load_network(path, fmt: str = "auto", symmetrize_rule: str | None = None,
                 labels: Sequence[str] | None = None) -> AdjacencyMatrix:
    """Read a network from a 0/1 matrix file or an edge-list file.

    ``fmt`` is one of ``"matrix"``, ``"edges"`` or ``"auto"``; auto treats
    comma-separated rows of more than two columns as a matrix.
    """
    text = Path(path).read_text()
    if fmt == "auto":
        fmt = "matrix" if _looks_like_matrix(text) else "edges"
    if fmt == "matrix":
        net = parse_matrix(text, symmetrize_rule)
        if labels is not None:
            net = AdjacencyMatrix(net.entries, tuple(labels))
        return net
    if fmt == "edges":
        return parse_edge_list(text, labels, symmetrize_rule)
    raise ValueError(f"unknown network format {fmt!r}")


def format_matrix(net: AdjacencyMatrix) -> str:
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in net.entries)


def format_edge_list(net: AdjacencyMatrix) -> str:
    out = ["from,to"]
    iu, ju = np.nonzero(np.triu(net.entries, 1))
    out += [f"{net.labels[i]},{net.labels[j]}" for i, j in zip(iu, ju)]
    return "\n".join(out) + "\n"


def save_network(net: AdjacencyMatrix, path, fmt: str = "matrix") -> None:
    text = format_matrix(net) if fmt == "matrix" else format_edge_list(net)
    Path(path).write_text(text)


def load_actors(path) -> ActorData:
    """Read the ``id,x,y`` actor CSV; row order is actor index order."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "x", "y"} <= set(reader.fieldnames):
            raise NetworkFormatError("actor file needs header with columns id,x,y")
        ids, xs, ys = [], [], []
        for k, row in enumerate(reader):
            try:
                xs.append(float(row["x"]))
                ys.append(float(row["y"]))
            except (TypeError, ValueError):
                raise NetworkFormatError(f"actor row {k + 1}: x and y must be numeric") from None
            ids.append(row["id"])
    return ActorData(np.array(xs), np.array(ys), tuple(ids))


def format_actors(data: ActorData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "x", "y"])
    binary = data.is_binary
    for i, x, y in zip(data.actor_ids, data.x, data.y):
        w.writerow([i, repr(float(x)), str(int(y)) if binary else repr(float(y))])
    return buf.getvalue()


def save_actors(data: ActorData, path) -> None:
    Path(path).write_text(format_actors(data))
