"""Text I/O for the ``curvegraph v1`` graph format and vertex measure files.

Graph files::

    curvegraph v1 <n>
    v <index> <measure> [label]
    e <u> <v> <weight>

Blank lines and ``#`` comments are ignored.  Measure files hold
``v <index> <mass>`` lines.
"""

from __future__ import annotations

import os
from typing import Iterable

import numpy as np

from .errors import FormatVersionMismatch, GraphError, ParseError
from .graph import WeightedGraph

MAGIC = "curvegraph"
VERSION = "v1"


def _lines(text: str):
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield k, line.split()


def _num(tok: str, k: int, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", line=k) from None
    if not np.isfinite(x):
        raise ParseError(f"{what} must be finite", line=k)
    return x


def _index(tok: str, k: int, n: int) -> int:
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(f"bad vertex index {tok!r}", line=k) from None
    if not 0 <= i < n:
        raise ParseError(f"vertex index {i} outside 0..{n - 1}", line=k)
    return i


def parse_graph(text: str) -> WeightedGraph:
    lines = _lines(text)
    try:
        k, head = next(lines)
    except StopIteration:
        raise ParseError("empty graph file", line=1) from None
    if head[0] != MAGIC:
        raise ParseError(f"expected header '{MAGIC} {VERSION} <n>'", line=k)
    if len(head) != 3:
        raise ParseError("header must be 'curvegraph v1 <n>'", line=k)
    if head[1] != VERSION:
        raise FormatVersionMismatch(f"unsupported format version {head[1]!r}", line=k)
    try:
        n = int(head[2])
    except ValueError:
        raise ParseError(f"bad vertex count {head[2]!r}", line=k) from None
    if n < 1:
        raise ParseError("vertex count must be positive", line=k)

    m = np.full(n, np.nan)
    labels: list = [None] * n
    w = np.zeros((n, n))
    for k, tok in lines:
        kind = tok[0]
        if kind == "v":
            if len(tok) not in (3, 4):
                raise ParseError("vertex line must be 'v <index> <measure> [label]'", line=k)
            i = _index(tok[1], k, n)
            if not np.isnan(m[i]):
                raise ParseError(f"vertex {i} declared twice", line=k)
            m[i] = _num(tok[2], k, "measure")
            if m[i] <= 0:
                raise ParseError(f"vertex {i} has nonpositive measure", line=k)
            if len(tok) == 4:
                labels[i] = tok[3]
        elif kind == "e":
            if len(tok) != 4:
                raise ParseError("edge line must be 'e <u> <v> <weight>'", line=k)
            u, v = _index(tok[1], k, n), _index(tok[2], k, n)
            if u == v:
                raise ParseError(f"self-loop at vertex {u}", line=k)
            wt = _num(tok[3], k, "weight")
            if wt <= 0:
                raise ParseError(f"edge ({u}, {v}) has nonpositive weight", line=k)
            if w[u, v]:
                raise ParseError(f"edge ({u}, {v}) declared twice", line=k)
            w[u, v] = w[v, u] = wt
        else:
            raise ParseError(f"unknown record type {kind!r}", line=k)
    missing = np.nonzero(np.isnan(m))[0]
    if missing.size:
        raise ParseError(f"vertex {int(missing[0])} has no 'v' line")
    lab = None
    if any(s is not None for s in labels):
        lab = [str(i) if s is None else s for i, s in enumerate(labels)]
    try:
        return WeightedGraph(w, m, lab)
    except GraphError as exc:
        raise ParseError(str(exc)) from exc


def format_graph(G: WeightedGraph, comments: Iterable[str] = ()) -> str:
    out = [f"{MAGIC} {VERSION} {G.n}"]
    out += [f"# {c}" for c in comments]
    for i in range(G.n):
        lab = f" {G.labels[i]}" if G.labels is not None else ""
        out.append(f"v {i} {float(G.m[i])!r}{lab}")
    for u, v in G.edges:
        out.append(f"e {u} {v} {float(G.w[u, v])!r}")
    return "\n".join(out) + "\n"


def read_graph(path: str | os.PathLike) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(path: str | os.PathLike, G: WeightedGraph, comments: Iterable[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(G, comments))


def parse_measure(text: str, n: int | None = None) -> dict:
    """Parse ``v <index> <mass>`` lines into a dict ``index -> mass``."""
    out: dict = {}
    for k, tok in _lines(text):
        if tok[0] != "v" or len(tok) != 3:
            raise ParseError("measure line must be 'v <index> <mass>'", line=k)
        i = _index(tok[1], k, n if n is not None else 1 << 62)
        if i in out:
            raise ParseError(f"vertex {i} listed twice", line=k)
        x = _num(tok[2], k, "mass")
        if x < 0:
            raise ParseError("mass must be nonnegative", line=k)
        out[i] = x
    return out


def read_measure(path: str | os.PathLike, n: int | None = None) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_measure(fh.read(), n)
