"""Shared oracles and fixtures for the test suite.

The oracles here deliberately avoid the package's own BFS / fitting / sparse
assembly code paths so that agreement between the two is meaningful.
"""

import itertools

import numpy as np

from dirlap.graph import generator_from_edges


def l1_ball_count(d: int, r: int) -> int:
    """Brute-force count of lattice points with l1 norm <= r."""
    return sum(1 for p in itertools.product(range(-r, r + 1), repeat=d)
               if sum(abs(c) for c in p) <= r)


def ols_loglog(xs, ys) -> float:
    """Plain covariance/variance least-squares slope in log-log."""
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.asarray(ys, dtype=float))
    xm, ym = xs.mean(), ys.mean()
    return float(((xs - xm) * (ys - ym)).sum() / ((xs - xm) ** 2).sum())


def k2_generator():
    """Two vertices joined by a unit edge in both directions."""
    return generator_from_edges(
        {((0,), (1,)): 1.0, ((1,), (0,)): 1.0}, root=(0,), name="K2")


def dense_laplacian(gen, b, part: str) -> np.ndarray:
    """Dense in-ball Laplacian assembled edge by edge from raw adjacency.

    Independent of TruncatedOperator's sparse assembly: pulls weights via
    direct generator calls and fills a dense matrix.
    """
    n = len(b)
    m = np.zeros((n, n))
    for i, v in enumerate(b.vertices):
        out, inn = gen.adjacency(v)
        for u in set(out) | set(inn):
            if u == v:
                continue
            j = b.index.get(u)
            if j is None:
                continue
            wf, wb = out.get(u, 0.0), inn.get(u, 0.0)
            w = {"full": wf, "sym": (wf + wb) / 2.0, "skew": (wf - wb) / 2.0}[part]
            m[i, j] += w
            m[i, i] -= w
    return m


def random_support_vector(gen, b, rng, n_points=5):
    """Random finitely supported vector well inside a ball (as a dict)."""
    interior = [v for k, v in enumerate(b.vertices)
                if b.distances[k] <= b.radius - 2]
    picks = rng.choice(len(interior), size=min(n_points, len(interior)),
                       replace=False)
    signs = rng.choice([-1.0, 1.0], size=len(picks))
    mags = rng.uniform(0.1, 1.0, size=len(picks))
    return {interior[int(i)]: float(s * m)
            for i, s, m in zip(picks, signs, mags)}
