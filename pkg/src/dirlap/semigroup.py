"""Heat-flow simulation on truncated balls, norms, and decay-exponent fits.

The flow ``x' = Lx`` (or its symmetric part) on an infinite graph is
simulated on a finite ball that is large enough for the initial condition's
influence not to reach the boundary before the final time.  Edges leaving
the ball are removed entirely, which keeps the restriction of the symmetric
part symmetric with vanishing row sums (so constants stay in its kernel and
counting mass is conserved).

Truncation adequacy is verified, not assumed: the run is repeated on a ball
enlarged by the truncation margin, *replaying the identical step sequence*,
and the two trajectories must agree on the smaller ball to within a small
multiple of the absolute tolerance.  Replaying the steps means the
comparison sees truncation error alone instead of step-controller noise.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse

from .errors import TruncationError
from .geometry import Ball, ball
from .graph import Vertex, _as_view, apply_laplacian
from .integrate import integrate

_PARTS = ("full", "sym", "skew")


@dataclass
class StateVector:
    """Finitely supported real vector over the vertices of a ball.

    Entries are implicitly zero outside the ball.  ``support_radius`` is the
    largest distance from the ball center carrying a nonzero value.
    """

    ball: Ball
    values: np.ndarray
    support_radius: int

    @classmethod
    def from_values(cls, b: Ball, values: np.ndarray) -> "StateVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(b),):
            raise ValueError("values must match the ball size")
        nz = np.nonzero(values)[0]
        radius = int(b.distances[nz].max()) if nz.size else 0
        return cls(ball=b, values=values, support_radius=radius)

    @classmethod
    def from_dict(cls, b: Ball, data: Mapping[Vertex, float]) -> "StateVector":
        values = np.zeros(len(b))
        for v, val in data.items():
            try:
                values[b.index[v]] = val
            except KeyError:
                raise ValueError(f"vertex {v} lies outside the ball") from None
        return cls.from_values(b, values)

    @classmethod
    def indicator(cls, b: Ball, v: Vertex) -> "StateVector":
        return cls.from_dict(b, {v: 1.0})

    def to_dict(self) -> dict[Vertex, float]:
        nz = np.nonzero(self.values)[0]
        return {self.ball.vertices[i]: float(self.values[i]) for i in nz}

    def value_at(self, v: Vertex) -> float:
        i = self.ball.index.get(v)
        return 0.0 if i is None else float(self.values[i])


class TruncatedOperator:
    """Sparse restrictions of L, its symmetric and skew parts, to a ball.

    Edges with an endpoint outside the ball are dropped from the weights and
    from the diagonal alike, so every row sums to zero and the off-diagonal
    of the symmetric part is a symmetric matrix.
    """

    def __init__(self, gen, b: Ball, parts: Sequence[str] = _PARTS):
        view = _as_view(gen)
        self.ball = b
        self.parts = tuple(parts)
        for p in self.parts:
            if p not in _PARTS:
                raise ValueError(f"unknown part {p!r}")
        n = len(b)
        builders = {p: (array("i"), array("i"), array("d"), np.zeros(n))
                    for p in self.parts}
        for i, v in enumerate(b.vertices):
            out, inn = view.edges(v)
            for u in set(out) | set(inn):
                j = b.index.get(u)
                if j is None:
                    continue  # edge leaves the ball: dropped entirely
                wf = out.get(u, 0.0)
                wb = inn.get(u, 0.0)
                for p in self.parts:
                    if p == "full":
                        w = wf
                    elif p == "sym":
                        w = (wf + wb) / 2.0
                    else:
                        w = (wf - wb) / 2.0
                    if w != 0.0:
                        rows, cols, vals, diag = builders[p]
                        rows.append(i)
                        cols.append(j)
                        vals.append(w)
                        diag[i] -= w
        self._mats = {}
        for p, (rows, cols, vals, diag) in builders.items():
            r = np.concatenate([np.frombuffer(rows, dtype=np.int32), np.arange(n)])
            c = np.concatenate([np.frombuffer(cols, dtype=np.int32), np.arange(n)])
            d = np.concatenate([np.frombuffer(vals, dtype=float), diag])
            self._mats[p] = scipy.sparse.csr_matrix(
                scipy.sparse.coo_matrix((d, (r, c)), shape=(n, n)))

    def matrix(self, part: str) -> scipy.sparse.csr_matrix:
        try:
            return self._mats[part]
        except KeyError:
            raise ValueError(f"operator was built without part {part!r}") from None

    def dense(self, part: str) -> np.ndarray:
        return self.matrix(part).toarray()

    def sym_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Ordered in-ball vertex pairs with positive symmetric weight."""
        m = self.matrix("sym").tocoo()
        mask = (m.data > 0) & (m.row != m.col)
        return m.row[mask], m.col[mask]


@dataclass
class SimConfig:
    """Settings for a truncated simulation.

    ``c_speed`` overrides the light-cone heuristic: the simulation radius is
    then ``support_radius + ceil(c_speed * t_max) + truncation_margin``.
    When unset, the radius combines a ballistic term from the skew mass seen
    at the edge of a probe ball with a diffusive term from the largest vertex
    measure.  Either way the enlarged-ball comparison below validates it.
    """

    t_max: float
    sample_times: Sequence[float] | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    truncation_margin: int = 8
    richardson_check: bool = True
    c_speed: float | None = None
    ball_budget: int = 4_000_000
    max_retries: int = 3

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.truncation_margin < 1:
            raise ValueError("truncation_margin must be >= 1")

    def resolved_sample_times(self) -> list[float]:
        if self.sample_times is not None:
            ts = sorted(float(t) for t in self.sample_times)
            if ts and ts[-1] > self.t_max:
                raise ValueError("sample times exceed t_max")
            if not ts or ts[-1] < self.t_max:
                ts.append(self.t_max)
            return ts
        lo = max(self.t_max / 200.0, 1e-3)
        grid = np.geomspace(lo, self.t_max, 40)
        return [0.0] + [float(t) for t in grid]


@dataclass
class EvolveResult:
    """Trajectory of a truncated run plus the truncation bookkeeping."""

    samples: list  # (t, StateVector)
    ball: Ball
    operator: TruncatedOperator
    radius: int
    retries: int
    n_steps: int
    richardson_diff: float | None

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def state_at(self, t: float) -> StateVector:
        for ts, s in self.samples:
            if abs(ts - t) <= 1e-9 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no sample at t={t}")


def _support_info(view, x0, center) -> tuple[dict, int]:
    if isinstance(x0, StateVector):
        return x0.to_dict(), x0.support_radius
    data = {v: float(val) for v, val in dict(x0).items() if val != 0.0}
    if not data:
        return data, 0
    missing = set(data) - {center}
    radius = 0
    r = 0
    seen = {center}
    frontier = [center]
    while missing:
        r += 1
        if r > 10_000:
            raise ValueError("initial support not reachable from the center")
        nxt = []
        for v in frontier:
            for u in view.sym_neighbors(v):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
                    if u in missing:
                        missing.discard(u)
                        radius = r
        frontier = nxt
    return data, radius


def _planned_radius(view, center, support_radius: int, cfg: SimConfig) -> int:
    if cfg.c_speed is not None:
        return support_radius + math.ceil(cfg.c_speed * cfg.t_max) + cfg.truncation_margin
    probe_r = support_radius + 12
    probe = ball(view, center, probe_r, budget=cfg.ball_budget)
    max_m = float(probe.measures.max())
    outer = [v for i, v in enumerate(probe.vertices) if probe.distances[i] == probe_r]
    c_ball = max((view.skew_row_abs(v) for v in outer), default=0.0)
    spread = c_ball * cfg.t_max + 8.0 * math.sqrt(max_m) * math.sqrt(cfg.t_max)
    return support_radius + math.ceil(spread) + cfg.truncation_margin


def evolve(gen, x0, cfg: SimConfig, part: str = "full") -> EvolveResult:
    """Integrate ``x' = Lx`` (or the symmetric part) from ``x0`` on a ball.

    ``x0`` may be a StateVector or a mapping from vertex to value; the ball
    is centered on ``x0``'s ball center (falling back to the graph root).
    With ``richardson_check`` the run is repeated on a ball enlarged by the
    truncation margin with the identical step sequence, and the max-norm
    disagreement on the shared vertices must stay within ``10 * atol``;
    otherwise the radius grows and the run is retried, a bounded number of
    times.  The returned trajectory is the enlarged run when the check is on.
    """
    if part not in ("full", "sym"):
        raise ValueError("part must be 'full' or 'sym'")
    view = _as_view(gen)
    center = x0.ball.center if isinstance(x0, StateVector) else gen.root
    data, support_radius = _support_info(view, x0, center)
    ts = cfg.resolved_sample_times()
    radius = _planned_radius(view, center, support_radius, cfg)

    parts = ("full", "sym") if part == "full" else ("sym",)
    retries = 0
    while True:
        b1 = ball(view, center, radius, budget=cfg.ball_budget)
        op1 = TruncatedOperator(view, b1, parts=parts)
        a1 = op1.matrix(part)
        y0 = StateVector.from_dict(b1, data).values
        res1 = integrate(lambda t, y: a1.dot(y), y0, ts, rtol=cfg.rtol, atol=cfg.atol)

        if not cfg.richardson_check:
            samples = [(t, StateVector.from_values(b1, y)) for t, y in res1.samples]
            return EvolveResult(samples=samples, ball=b1, operator=op1, radius=radius,
                                retries=retries, n_steps=res1.n_steps,
                                richardson_diff=None)

        b2 = ball(view, center, radius + cfg.truncation_margin, budget=cfg.ball_budget)
        n1 = len(b1)
        if b2.vertices[:n1] != b1.vertices:
            raise AssertionError("deterministic BFS prefix property violated")
        op2 = TruncatedOperator(view, b2, parts=parts)
        a2 = op2.matrix(part)
        y0b = StateVector.from_dict(b2, data).values
        res2 = integrate(lambda t, y: a2.dot(y), y0b, ts, rtol=cfg.rtol,
                         atol=cfg.atol, replay=res1.steps)
        diff = 0.0
        for (t1, ya), (t2, yb) in zip(res1.samples, res2.samples):
            diff = max(diff, float(np.max(np.abs(yb[:n1] - ya))))
        if diff <= 10.0 * cfg.atol:
            samples = [(t, StateVector.from_values(b2, y)) for t, y in res2.samples]
            return EvolveResult(samples=samples, ball=b2, operator=op2,
                                radius=radius + cfg.truncation_margin,
                                retries=retries, n_steps=res1.n_steps,
                                richardson_diff=diff)
        retries += 1
        if retries > cfg.max_retries:
            raise TruncationError(
                f"truncation not converged: radius {radius} vs "
                f"{radius + cfg.truncation_margin} still differ by {diff:.3e} "
                f"(> 10 * atol = {10 * cfg.atol:.3e}) after {cfg.max_retries} retries")
        radius += cfg.truncation_margin


def norms(x, ps: Iterable) -> list[float]:
    """lp norms of a state for each requested p in [1, inf]."""
    values = x.values if isinstance(x, StateVector) else np.asarray(list(x), dtype=float)
    out = []
    for p in ps:
        p = float(p)
        if p < 1:
            raise ValueError("p must be >= 1")
        if math.isinf(p):
            out.append(float(np.max(np.abs(values))) if values.size else 0.0)
        elif p == 1:
            out.append(float(np.sum(np.abs(values))))
        elif p == 2:
            out.append(float(np.linalg.norm(values)))
        else:
            out.append(float(np.sum(np.abs(values) ** p) ** (1.0 / p)))
    return out


def q_seminorm(x, gen, ps: Iterable, require_enlarged: bool = True) -> list[float]:
    """Discrete-gradient seminorms: p-norms of differences across symmetric edges.

    Sums ``|x_v' - x_v|^p`` over ordered pairs with ``v'`` in the symmetric
    neighbourhood of ``v``.  With ``require_enlarged`` the one-hop enlargement
    of the support must fit inside the state's ball (the sum is then exact
    for the infinite graph); otherwise only in-ball pairs are counted, which
    is the truncation-tolerant variant used on simulated trajectories.
    """
    view = _as_view(gen)
    if isinstance(x, StateVector):
        data = x.to_dict()
        domain = x.ball
    else:
        data = {v: float(val) for v, val in dict(x).items() if val != 0.0}
        domain = None
    ring = set(data)
    for v in list(data):
        ring.update(view.sym_neighbors(v))
    if domain is not None:
        outside = [v for v in ring if v not in domain]
        if outside and require_enlarged:
            raise ValueError(
                "support touches the ball boundary; enlarge the ball "
                "(increase truncation_margin) or pass require_enlarged=False")
        if outside:
            ring.difference_update(outside)

    diffs = []
    for v in ring:
        xv = data.get(v, 0.0)
        for u in view.sym_neighbors(v):
            if domain is not None and u not in domain:
                continue
            diffs.append(abs(data.get(u, 0.0) - xv))
    diffs = np.array(diffs) if diffs else np.zeros(1)
    out = []
    for p in ps:
        p = float(p)
        if p < 1:
            raise ValueError("p must be >= 1")
        if math.isinf(p):
            out.append(float(diffs.max()))
        else:
            out.append(float(np.sum(diffs ** p) ** (1.0 / p)))
    return out


def q_norm_fast(values: np.ndarray, pairs: tuple[np.ndarray, np.ndarray],
                p: float) -> float:
    """Q_p over precomputed ordered symmetric pairs (in-ball variant)."""
    rows, cols = pairs
    d = np.abs(values[cols] - values[rows])
    if math.isinf(p):
        return float(d.max()) if d.size else 0.0
    return float(np.sum(d ** p) ** (1.0 / p))


def skew_bound_check(x, gen) -> tuple[float, float]:
    """Evaluate both sides of the skew-part bound for one vector.

    Returns ``(|L_skew x|_1, W_local * Q_inf(x))`` where ``W_local`` sums
    ``|w_skew|`` over exactly the ordered pairs with a nonzero term, so the
    right side is a valid (sharpened) instance of the bound for finitely
    supported vectors.
    """
    view = _as_view(gen)
    data = x.to_dict() if isinstance(x, StateVector) else \
        {v: float(val) for v, val in dict(x).items() if val != 0.0}
    image = apply_laplacian(data, view, part="skew")
    lhs = sum(abs(val) for val in image.values())

    touched = set(data)
    for v in list(data):
        touched.update(view.neighbors(v))
    w_local = 0.0
    for v in touched:
        xv = data.get(v, 0.0)
        for u in view.neighbors(v):
            if xv != 0.0 or data.get(u, 0.0) != 0.0:
                w_local += abs(view.w_skew(v, u))
    q_inf = q_seminorm(data, view, [math.inf])[0]
    return float(lhs), float(w_local * q_inf)


@dataclass
class DecayFit:
    """Least-squares fit of log(norm) against log(1 + t) over a window."""

    times: list[float]
    norms: list[float]
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    label: str = "norm"

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "times": self.times,
            "norms": self.norms,
        }


def fit_power_law(times: Sequence[float], values: Sequence[float],
                  window: tuple[float, float] | None = None,
                  label: str = "norm") -> DecayFit:
    """Fit ``value ~ C (1+t)^exponent`` by ordinary least squares in logs."""
    times = [float(t) for t in times]
    values = [float(v) for v in values]
    if window is None:
        hi = max(times)
        window = (max(10.0, hi / 100.0), hi)
    lo, hi = window
    sel = [(t, v) for t, v in zip(times, values) if lo <= t <= hi]
    if len(sel) < 8:
        raise ValueError(f"need >= 8 samples in window [{lo}, {hi}], got {len(sel)}")
    if any(v == 0.0 for _, v in sel):
        raise ValueError("norm hits exact zero in the fit window "
                         "(trivial trajectory?)")
    if any(v < 0.0 for _, v in sel):
        raise ValueError("norms must be positive")
    xs = np.log1p([t for t, _ in sel])
    ys = np.log([v for _, v in sel])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return DecayFit(times=[t for t, _ in sel], norms=[v for _, v in sel],
                    exponent=float(slope), intercept=float(intercept),
                    r_squared=max(0.0, min(1.0, r2)), window=(lo, hi), label=label)


def trajectory_norms(trajectory, kind: str = "p", p: float = math.inf,
                     pairs=None) -> tuple[list[float], list[float]]:
    """Norm values along a trajectory.

    ``kind='p'`` gives lp norms; ``kind='q'`` gives the discrete-gradient
    seminorm over in-ball symmetric pairs (``pairs`` is taken from the
    trajectory's operator when available).
    """
    if kind not in ("p", "q"):
        raise ValueError("kind must be 'p' or 'q'")
    if kind == "q" and pairs is None:
        op = getattr(trajectory, "operator", None)
        if op is None or "sym" not in getattr(op, "parts", ()):
            raise ValueError("gradient norms need symmetric pairs; pass pairs= "
                             "or a trajectory carrying an operator with a sym part")
        pairs = op.sym_pairs()
    times, values = [], []
    for t, state in trajectory:
        times.append(float(t))
        if kind == "p":
            values.append(norms(state, [p])[0])
        else:
            values.append(q_norm_fast(state.values, pairs, p))
    return times, values


def fit_decay(trajectory, kind: str = "p", p: float = math.inf,
              window: tuple[float, float] | None = None, pairs=None) -> DecayFit:
    """Fit the decay exponent of a norm along a trajectory."""
    times, values = trajectory_norms(trajectory, kind=kind, p=p, pairs=pairs)
    prefix = "Q" if kind == "q" else "l"
    suffix = "inf" if math.isinf(p) else f"{p:g}"
    return fit_power_law(times, values, window=window, label=prefix + suffix)


def advection_oracle(i: int, t: float) -> float:
    """Closed-form axis solution of the advection flow from a point source.

    Returns ``t^i / i! * exp(-t)`` evaluated in log space, with value 1 at
    ``(i, t) = (0, 0)``.
    """
    if i < 0 or t < 0:
        raise ValueError("need i >= 0 and t >= 0")
    if i > 170:
        raise ValueError("i > 170 not supported")
    if t == 0.0:
        return 1.0 if i == 0 else 0.0
    return math.exp(i * math.log(t) - math.lgamma(i + 1) - t)


def advection_peak(i: int) -> float:
    """Maximum over time of the axis solution; attained at t = i."""
    if i < 0:
        raise ValueError("need i >= 0")
    if i == 0:
        return 1.0
    return math.exp(i * math.log(i) - math.lgamma(i + 1) - i)


def advection_stirling_lower(i: int) -> float:
    """Lower bound ``exp(-1) / sqrt(i)`` for the peak value, i >= 1."""
    if i < 1:
        raise ValueError("need i >= 1")
    return math.exp(-1.0) / math.sqrt(i)


def dense_expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core.

    Independent of the time-stepping code on purpose: it serves as the
    oracle that simulated trajectories are checked against.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("need a square matrix")
    nrm = float(np.linalg.norm(a, np.inf))
    s = 0
    if nrm > 0.5:
        s = int(math.ceil(math.log2(nrm / 0.5)))
    b = a / (2.0 ** s)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 60):
        term = term @ b / k
        out = out + term
        if np.linalg.norm(term, np.inf) < 1e-18 * np.linalg.norm(out, np.inf):
            break
    for _ in range(s):
        out = out @ out
    return out
