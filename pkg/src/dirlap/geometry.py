"""Metric-measure structure of the induced symmetric graph.

Distances, balls, and volumes all live on the symmetric skeleton: the
undirected graph whose edges are the pairs with strictly positive symmetric
weight.  Balls are enumerated breadth-first with sorted adjacency, which
makes the vertex order deterministic and gives the nesting property that the
vertex list of ``ball(v, r)`` is a prefix of the vertex list of
``ball(v, r+1)``.  Truncated simulations rely on that prefix property when
they compare runs at two radii.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import BudgetExceededError
from .graph import SymmetricView, Vertex, _as_view

DEFAULT_BALL_BUDGET = 1_000_000


@dataclass
class Ball:
    """A finite ball of the symmetric skeleton, with distances and measures.

    ``vertices[i]`` has index ``i`` in every array attached to the ball;
    ``index`` inverts that. Immutable after construction by convention.
    """

    center: Vertex
    radius: int
    vertices: list
    index: dict
    distances: np.ndarray
    measures: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.index

    def volume(self) -> float:
        return float(self.measures.sum())

    def rows(self) -> Iterator[tuple]:
        """Columnar debug view: (vertex key, distance, measure)."""
        for i, v in enumerate(self.vertices):
            yield v, int(self.distances[i]), float(self.measures[i])


def _bfs(view: SymmetricView, center: Vertex, radius: int, budget: int):
    """Deterministic BFS over the symmetric skeleton.

    Returns (vertices in discovery order, distance dict).  Vertices at the
    boundary distance are listed but not expanded.
    """
    dist = {center: 0}
    order = [center]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        d = dist[v]
        if d >= radius:
            continue
        for u in sorted(view.sym_neighbors(v)):
            if u not in dist:
                if len(order) >= budget:
                    raise BudgetExceededError(
                        f"ball({center}, {radius}) exceeded budget at {len(order)} vertices",
                        len(order))
                dist[u] = d + 1
                order.append(u)
    return order, dist


def ball(gen, center: Vertex, r: int, budget: int = DEFAULT_BALL_BUDGET) -> Ball:
    """Enumerate the radius-``r`` ball of the symmetric skeleton around ``center``."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    view = _as_view(gen)
    order, dist = _bfs(view, center, r, budget)
    measures = np.array([view.measure(v) for v in order], dtype=float)
    return Ball(center=center, radius=r, vertices=order,
                index={v: i for i, v in enumerate(order)},
                distances=np.array([dist[v] for v in order], dtype=np.int64),
                measures=measures)


def volume(gen, center: Vertex, r: int, budget: int = DEFAULT_BALL_BUDGET) -> float:
    """Total measure of the ball: sum of vertex measures over it."""
    return ball(gen, center, r, budget=budget).volume()


def distance(gen, a: Vertex, b: Vertex, cutoff: int,
             budget: int = DEFAULT_BALL_BUDGET) -> int | None:
    """Graph distance on the symmetric skeleton, or None beyond ``cutoff``."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    if a == b:
        return 0
    view = _as_view(gen)
    dist = {a: 0}
    frontier = [a]
    for d in range(1, cutoff + 1):
        nxt = []
        for v in frontier:
            for u in sorted(view.sym_neighbors(v)):
                if u not in dist:
                    if len(dist) >= budget:
                        raise BudgetExceededError(
                            f"distance({a}, {b}) exceeded budget at {len(dist)} vertices",
                            len(dist))
                    dist[u] = d
                    if u == b:
                        return d
                    nxt.append(u)
        frontier = nxt
        if not frontier:
            return None
    return None


def shells(gen, root: Vertex, max_shells: int,
           budget: int = DEFAULT_BALL_BUDGET) -> Iterator[tuple[int, list]]:
    """Yield ``(k, shell vertices)`` for k = 0..max_shells incrementally.

    Shell k is ``ball(root, k) minus ball(root, k-1)``.  Stops early (without
    raising) once the cumulative vertex count would pass the budget, so
    callers can distinguish "ran out of shells" from "ran out of budget" by
    counting what they received.
    """
    view = _as_view(gen)
    seen = {root}
    frontier = [root]
    total = 1
    k = 0
    while frontier and k <= max_shells:
        yield k, frontier
        nxt = []
        for v in frontier:
            for u in sorted(view.sym_neighbors(v)):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        total += len(nxt)
        if total > budget:
            return
        frontier = nxt
        k += 1
