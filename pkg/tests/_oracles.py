"""Independent brute-force references used by the test suite.

Everything here is deliberately naive: exhaustive enumeration and dense
linear algebra only, so results do not share code paths with the package
machinery they are checking.
"""
import itertools

import numpy as np


def vertex_enumeration_optimum(c, A, b, lower, upper):
    """Exact optimum of a boxed inequality LP by basic-point enumeration.

    Solves min c.x over {A x <= b, lower <= x <= upper} with finite boxes,
    so the feasible set is a polytope and any optimum sits on a vertex,
    i.e. on some n active rows of the stacked system [A; I; -I]. Returns
    ``(status, objective, x)`` with status "optimal" or "infeasible".
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("oracle needs finite boxes")
    n = len(c)
    G = np.vstack([A, np.eye(n), -np.eye(n)])
    h = np.concatenate([b, upper, -lower])
    best = None
    best_x = None
    for comb in itertools.combinations(range(len(h)), n):
        M = G[list(comb)]
        if np.linalg.cond(M) > 1e12:
            continue
        x = np.linalg.solve(M, h[list(comb)])
        if np.all(G @ x <= h + 1e-9):
            val = float(c @ x)
            if best is None or val < best:
                best, best_x = val, x
    if best is None:
        return "infeasible", None, None
    return "optimal", best, best_x


def random_boxed_lp(rng):
    """One random bounded LP: (c, A, b, lower, upper), at most 5x8.

    Finite boxes keep every instance bounded. Three quarters of the draws
    put the box center strictly inside the rows so the instance is
    feasible; the rest use unanchored right-hand sides and may be empty.
    """
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, 9))
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    center = rng.uniform(-2.0, 2.0, size=n)
    half = rng.uniform(0.5, 3.0, size=n)
    lower, upper = center - half, center + half
    if m and rng.uniform() < 0.25:
        b = rng.normal(size=m)
    else:
        b = A @ center + rng.uniform(0.1, 2.0, size=m)
    return c, A, b, lower, upper


def max_abs_slope(xs, vals):
    """Largest finite-difference slope of a sampled 1-d function."""
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    return float(np.max(np.abs(np.diff(vals)) / np.diff(xs)))
