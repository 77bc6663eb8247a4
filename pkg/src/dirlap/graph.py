"""Lazy directed weighted graphs and the symmetric/skew split of their weights.

A graph on a countably infinite vertex set is described by a pure adjacency
callback rather than stored.  Vertices are fixed-length tuples of integers,
which makes them hashable, totally ordered, and cheap to serialize.  For a
vertex ``v`` the callback returns both directions of incidence::

    adjacency(v) -> (out, inn)

where ``out`` maps ``v' -> w(v, v')`` for the edges leaving ``v`` and ``inn``
maps ``v'' -> w(v'', v)`` for the edges arriving at ``v``.  Absent edges carry
weight zero and must not be reported.  Both directions are required because
the symmetric weight ``(w(v,v') + w(v',v)) / 2`` needs the reverse weight
without a global reverse index.

Every operator derived here works with finitely supported vectors represented
as plain ``dict`` mappings from vertex to value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import BudgetExceededError, DegreeCapError

Vertex = tuple
AdjacencyFn = Callable[[Vertex], tuple[Mapping[Vertex, float], Mapping[Vertex, float]]]

#: Default bound on |out-edges| + |in-edges| reported for a single vertex.
#: Bounded degree is assumed by all the geometric estimators, so a runaway
#: generator should fail loudly instead of stalling a BFS.
DEFAULT_DEGREE_CAP = 64


@dataclass(frozen=True)
class GraphGenerator:
    """Lazy description of an infinite directed weighted graph.

    Parameters
    ----------
    adjacency:
        Pure function returning ``(out, inn)`` weight maps for a vertex.
        It must be cheap, deterministic, and safe to call from any thread.
    root:
        Enumeration origin used by ball construction and shell sums.
    name:
        Label used in reports.
    dimension_hint:
        Optional user-declared volume-growth order; informational only.
    degree_cap:
        Maximum number of distinct neighbours a single vertex may report.
    """

    adjacency: AdjacencyFn
    root: Vertex
    name: str = "custom"
    dimension_hint: float | None = None
    degree_cap: int = DEFAULT_DEGREE_CAP


def generator_from_edges(edges: Mapping[tuple[Vertex, Vertex], float], root: Vertex,
                         name: str = "finite") -> GraphGenerator:
    """Build a generator from an explicit finite edge map ``{(v, v'): w}``.

    Intended for tests and small custom graphs.  Zero weights and self-loops
    are rejected up front since they violate the edge convention.
    """
    out: dict[Vertex, dict[Vertex, float]] = {}
    inn: dict[Vertex, dict[Vertex, float]] = {}
    for (a, b), w in edges.items():
        if a == b:
            raise ValueError(f"self-loop on {a} not allowed")
        if w == 0:
            raise ValueError(f"edge ({a}, {b}) has zero weight; omit it instead")
        out.setdefault(a, {})[b] = float(w)
        inn.setdefault(b, {})[a] = float(w)

    def adjacency(v: Vertex):
        return dict(out.get(v, {})), dict(inn.get(v, {}))

    return GraphGenerator(adjacency=adjacency, root=root, name=name)


class SymmetricView:
    """Cached access to directed weights and their symmetric/skew parts.

    The symmetric weight of a pair is always computed from a single adjacency
    call, so ``w_sym(v, v') == w_sym(v', v)`` and
    ``w_skew(v, v') == -w_skew(v', v)`` hold exactly in floating point.

    The cache is bounded; sequential large scans simply recompute.
    """

    def __init__(self, gen: GraphGenerator, cache_size: int = 100_000):
        self.gen = gen
        self._cache: dict[Vertex, tuple[dict, dict]] = {}
        self._cache_size = cache_size

    @property
    def root(self) -> Vertex:
        return self.gen.root

    @property
    def name(self) -> str:
        return self.gen.name

    def edges(self, v: Vertex) -> tuple[dict, dict]:
        """Return ``(out, inn)`` weight maps for ``v``, self-loops removed."""
        hit = self._cache.get(v)
        if hit is not None:
            return hit
        out, inn = self.gen.adjacency(v)
        out = {u: float(w) for u, w in out.items() if u != v}
        inn = {u: float(w) for u, w in inn.items() if u != v}
        if len(out) > self.gen.degree_cap or len(inn) > self.gen.degree_cap:
            raise DegreeCapError(
                f"vertex {v} reports {max(len(out), len(inn))} edges, "
                f"cap is {self.gen.degree_cap}")
        if len(self._cache) >= self._cache_size:
            self._cache.clear()
        self._cache[v] = (out, inn)
        return out, inn

    def directed_pair(self, v: Vertex, v2: Vertex) -> tuple[float, float]:
        """Return ``(w(v, v2), w(v2, v))``, zeros where no edge exists."""
        out, inn = self.edges(v)
        return out.get(v2, 0.0), inn.get(v2, 0.0)

    def neighbors(self, v: Vertex) -> set:
        """All vertices connected to ``v`` by an edge in either direction."""
        out, inn = self.edges(v)
        return set(out) | set(inn)

    def sym_neighbors(self, v: Vertex) -> dict[Vertex, float]:
        """Map ``v' -> w_sym(v, v')`` over the strictly positive pairs.

        This is the neighbourhood of ``v`` in the induced undirected graph.
        """
        out, inn = self.edges(v)
        result = {}
        for u in set(out) | set(inn):
            ws = (out.get(u, 0.0) + inn.get(u, 0.0)) / 2.0
            if ws > 0.0:
                result[u] = ws
        return result

    def w_sym(self, v: Vertex, v2: Vertex) -> float:
        a, b = self.directed_pair(v, v2)
        return (a + b) / 2.0

    def w_skew(self, v: Vertex, v2: Vertex) -> float:
        a, b = self.directed_pair(v, v2)
        return (a - b) / 2.0

    def measure(self, v: Vertex) -> float:
        """Vertex measure: total symmetric weight incident to ``v``."""
        return sum(self.sym_neighbors(v).values())

    def skew_row_abs(self, v: Vertex) -> float:
        """Sum of ``|w_skew(v, v')|`` over every neighbour of ``v``."""
        out, inn = self.edges(v)
        total = 0.0
        for u in set(out) | set(inn):
            total += abs(out.get(u, 0.0) - inn.get(u, 0.0)) / 2.0
        return total


def _as_view(gen) -> SymmetricView:
    return gen if isinstance(gen, SymmetricView) else SymmetricView(gen)


def decompose_edge(v: Vertex, v2: Vertex, gen) -> tuple[float, float]:
    """Split the weights between ``v`` and ``v2`` into symmetric and skew parts.

    Returns ``((w(v,v2) + w(v2,v)) / 2, (w(v,v2) - w(v2,v)) / 2)``; both are
    zero when neither directed edge exists.
    """
    if v == v2:
        raise ValueError("decompose_edge requires two distinct vertices")
    view = _as_view(gen)
    a, b = view.directed_pair(v, v2)
    return (a + b) / 2.0, (a - b) / 2.0


def apply_laplacian(x: Mapping[Vertex, float], gen, part: str = "full") -> dict[Vertex, float]:
    """Apply the graph Laplacian of the selected weight part to a vector.

    ``[Lx]_v = sum_{v'} w(v, v') (x_{v'} - x_v)`` with ``w`` replaced by its
    symmetric or skew part when requested.  The result is evaluated on the
    support of ``x`` enlarged by one adjacency hop, outside of which it
    vanishes, so finitely supported input yields finitely supported output.
    """
    if part not in ("full", "sym", "skew"):
        raise ValueError(f"unknown part {part!r}")
    view = _as_view(gen)
    support = [v for v, val in x.items() if val != 0.0]
    targets = set(support)
    for v in support:
        targets.update(view.neighbors(v))
    result: dict[Vertex, float] = {}
    for v in targets:
        out, inn = view.edges(v)
        xv = x.get(v, 0.0)
        acc = 0.0
        for u in set(out) | set(inn):
            wf, wb = out.get(u, 0.0), inn.get(u, 0.0)
            if part == "full":
                w = wf
            elif part == "sym":
                w = (wf + wb) / 2.0
            else:
                w = (wf - wb) / 2.0
            if w != 0.0:
                acc += w * (x.get(u, 0.0) - xv)
        result[v] = acc
    return result


@dataclass(frozen=True)
class Violation:
    kind: str
    vertices: tuple
    detail: str


@dataclass
class ValidationReport:
    """Outcome of sampling a generator for contract violations.

    ``violations`` are hard failures of the graph contract; ``notes`` flag
    legal but unusual structure (for instance a negative directed weight
    whose symmetric average is still positive).
    """

    vertices_checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "vertices_checked": self.vertices_checked,
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "vertices": [list(u) for u in v.vertices], "detail": v.detail}
                for v in self.violations
            ],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ValidationConfig:
    weight_rtol: float = 1e-12
    vertex_budget: int = 200_000


def validate_generator(gen: GraphGenerator, sample_radius: int,
                       config: ValidationConfig | None = None) -> ValidationReport:
    """Enumerate a ball around the root and check the generator contract.

    Checks, per sampled vertex: out/in weight reports agree between the two
    endpoints of every edge, no reported weight is zero, degree stays under
    the cap, the symmetric weights are nonnegative (a pair with both directed
    edges present must average to a strictly positive weight), and every
    vertex keeps at least one symmetric neighbour.  Violations are returned,
    not raised; only blowing the vertex budget raises.
    """
    if sample_radius < 1:
        raise ValueError("sample_radius must be >= 1")
    cfg = config or ValidationConfig()
    report = ValidationReport()
    cap = gen.degree_cap

    def close(a: float, b: float) -> bool:
        return abs(a - b) <= cfg.weight_rtol * max(abs(a), abs(b))

    # BFS over the symmetric skeleton, tolerating per-vertex defects.
    dist = {gen.root: 0}
    order = [gen.root]
    head = 0
    adj_cache: dict[Vertex, tuple[dict, dict]] = {}

    def edges_of(v):
        if v not in adj_cache:
            adj_cache[v] = gen.adjacency(v)
        return adj_cache[v]

    while head < len(order):
        v = order[head]
        head += 1
        try:
            out, inn = edges_of(v)
        except Exception as exc:  # generator itself failed
            report.violations.append(Violation("adjacency-error", (v,), str(exc)))
            continue
        if len(out) > cap or len(inn) > cap:
            report.violations.append(Violation(
                "degree-cap", (v,), f"{max(len(out), len(inn))} edges exceeds cap {cap}"))
            continue
        for u, w in list(out.items()) + list(inn.items()):
            if w == 0.0:
                report.violations.append(Violation(
                    "zero-weight", (v, u), "zero weight reported; absent edges must be omitted"))
        sym_nbrs = []
        for u in set(out) | set(inn):
            if u == v:
                continue
            wf, wb = out.get(u, 0.0), inn.get(u, 0.0)
            ws = (wf + wb) / 2.0
            if ws < 0.0 or (wf * wb != 0.0 and ws <= 0.0):
                report.violations.append(Violation(
                    "negative-symmetric", (v, u),
                    f"w(v,v')={wf}, w(v',v)={wb} average to {ws}"))
            elif wf < 0.0 or wb < 0.0:
                report.notes.append(
                    f"negative directed weight on ({v}, {u}) with positive symmetric part")
            if ws > 0.0:
                sym_nbrs.append(u)
        if not sym_nbrs:
            report.violations.append(Violation(
                "isolated-vertex", (v,), "no strictly positive symmetric neighbour"))
        # Cross-check both endpoints of every incident edge.
        for u in set(out) | set(inn):
            if u == v:
                continue
            try:
                u_out, u_inn = edges_of(u)
            except Exception as exc:
                report.violations.append(Violation("adjacency-error", (u,), str(exc)))
                continue
            wf = out.get(u, 0.0)
            if not close(wf, u_inn.get(v, 0.0)):
                report.violations.append(Violation(
                    "weight-consistency", (v, u),
                    f"out-edge weight {wf} vs in-edge report {u_inn.get(v, 0.0)}"))
            wb = inn.get(u, 0.0)
            if not close(wb, u_out.get(v, 0.0)):
                report.violations.append(Violation(
                    "weight-consistency", (u, v),
                    f"in-edge report {wb} vs out-edge weight {u_out.get(v, 0.0)}"))
        if dist[v] < sample_radius:
            for u in sym_nbrs:
                if u not in dist:
                    if len(dist) >= cfg.vertex_budget:
                        raise BudgetExceededError(
                            f"validation ball exceeded {cfg.vertex_budget} vertices", len(dist))
                    dist[u] = dist[v] + 1
                    order.append(u)

    report.vertices_checked = len(order)
    # BFS reaches exactly the connected component of the root within the
    # sampled radius, so connectivity of the sample holds by construction;
    # disconnection can only manifest as isolated vertices above.
    return report
