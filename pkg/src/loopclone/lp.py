"""Inequality-form linear programs and a deterministic reference solver.

Problems are ``min c.x  s.t.  A x <= b,  lower <= x <= upper`` with a sparse
A. The learner's fitting problems have a few hundred variables but tens of
thousands of rows, so the simplex iterations run on the standard-form dual
``min b.lam  s.t.  A' lam = -c,  lam >= 0`` whose basis size equals the
variable count. The primal solution is read off the dual simplex
multipliers; primal slacks appear as dual reduced costs, so dual optimality
is exactly primal feasibility. Machinery: dense LU on the dual basis with
product-form eta updates between refactorizations, Dantzig pricing over
column blocks, Bland's rule as the anti-cycling fallback after a degenerate
stall. Identical inputs produce bitwise-identical outputs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, qr

__all__ = [
    "LinearProgram",
    "LpSolution",
    "SolverFailure",
    "solve",
    "reformulate_l1_min",
    "chebyshev_residual",
]

FEAS_TOL = 1e-8
OPT_TOL = 1e-8
PIVOT_TOL = 1e-10

_REFACTOR_EVERY = 64
_STALL_LIMIT = 40
_BLOCK = 8192


class SolverFailure(RuntimeError):
    """The solver hit its iteration cap or lost numerical footing."""


class _StallLimit(Exception):
    """Internal: too many consecutive degenerate pivots; caller restarts."""


@dataclass(frozen=True)
class LinearProgram:
    """min c.x subject to A x <= b and lower <= x <= upper (both optional).

    A is CSR with shape (m, n); bounds default to unbounded. Instances are
    immutable; build them through :meth:`from_dense` or
    :meth:`from_triplets`.
    """

    n: int
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_triplets(
        cls,
        n: int,
        c: Sequence[float],
        rows: Sequence[int],
        cols: Sequence[int],
        vals: Sequence[float],
        b: Sequence[float],
        lower: Sequence[float] | None = None,
        upper: Sequence[float] | None = None,
    ) -> "LinearProgram":
        """Build from row-major triplets (rows, cols, vals) of A."""
        b = np.asarray(b, dtype=float).ravel()
        A = sp.csr_matrix(
            (np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))),
            shape=(len(b), n),
        )
        return cls._make(n, c, A, b, lower, upper)

    @classmethod
    def from_dense(
        cls,
        c: Sequence[float],
        A: Sequence[Sequence[float]],
        b: Sequence[float],
        lower: Sequence[float] | None = None,
        upper: Sequence[float] | None = None,
    ) -> "LinearProgram":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        c = np.asarray(c, dtype=float).ravel()
        if A.size == 0:
            A = A.reshape(0, len(c))
        return cls._make(
            len(c), c, sp.csr_matrix(A), np.asarray(b, float).ravel(),
            lower, upper,
        )

    @classmethod
    def _make(cls, n, c, A, b, lower, upper) -> "LinearProgram":
        c = np.asarray(c, dtype=float).ravel()
        lo = (
            np.full(n, -np.inf)
            if lower is None
            else np.asarray(lower, float).ravel()
        )
        hi = (
            np.full(n, np.inf)
            if upper is None
            else np.asarray(upper, float).ravel()
        )
        p = cls(n=n, c=c, A=A.tocsr(), b=b, lower=lo, upper=hi)
        p.validate()
        return p

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one variable")
        if self.c.shape != (self.n,):
            raise ValueError(f"c has shape {self.c.shape}, expected ({self.n},)")
        m = self.A.shape[0]
        if self.A.shape[1] != self.n or self.b.shape != (m,):
            raise ValueError("A/b dimensions inconsistent")
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise ValueError("bounds must have one entry per variable")
        for name, arr in (("c", self.c), ("A", self.A.data), ("b", self.b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"nonfinite coefficient in {name}")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds may be infinite but not NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def to_text(self) -> str:
        """Debug dump: header, objective, then one ``i:coef`` row per constraint.

        Format: ``# loopclone-lp v1`` header; ``n``; ``c`` with all
        coefficients; one ``bound j lo hi`` line per bounded variable; rows
        as ``row idx:val idx:val ... <= rhs`` with 17-significant-digit
        floats.
        """
        out = ["# loopclone-lp v1", f"n {self.n}"]
        out.append("c " + " ".join(repr(float(v)) for v in self.c))
        for j in range(self.n):
            if np.isfinite(self.lower[j]) or np.isfinite(self.upper[j]):
                out.append(
                    f"bound {j} {float(self.lower[j])!r} "
                    f"{float(self.upper[j])!r}"
                )
        indptr, indices, data = self.A.indptr, self.A.indices, self.A.data
        for i in range(self.A.shape[0]):
            terms = " ".join(
                f"{indices[t]}:{float(data[t])!r}"
                for t in range(indptr[i], indptr[i + 1])
            )
            out.append(f"row {terms} <= {float(self.b[i])!r}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome. x and objective are meaningful only when optimal."""

    status: str  # optimal | infeasible | unbounded | failed
    x: np.ndarray | None
    objective: float
    max_violation: float
    iterations: int


def _fold_bounds(
    A: sp.csr_matrix, b: np.ndarray,
    lower: np.ndarray, upper: np.ndarray, n: int,
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Append finite variable bounds to (A, b) as single-entry rows."""
    rows, cols, vals, rhs = [], [], [], []
    for j in range(n):
        if np.isfinite(upper[j]):
            rows.append(len(rhs)), cols.append(j), vals.append(1.0)
            rhs.append(upper[j])
        if np.isfinite(lower[j]):
            rows.append(len(rhs)), cols.append(j), vals.append(-1.0)
            rhs.append(-lower[j])
    if not rhs:
        return A, b
    extra = sp.csr_matrix((vals, (rows, cols)), shape=(len(rhs), n))
    return sp.vstack([A, extra], format="csr"), np.concatenate(
        [b, np.asarray(rhs)]
    )


class _DualSimplex:
    """Revised simplex on the dual of an inequality-form primal.

    Rows of the dual system are the primal variables (n of them); dual
    variables are the primal rows. The caller appends a huge synthetic box
    ``|x_i| <= big`` as the last 2n rows: their dual columns are the signed
    unit vectors, so picking one per row by the sign of the dual RHS gives
    an identity starting basis and no phase-1 is ever needed. A primal
    optimum pressed against the synthetic box means the true problem is
    unbounded; a dual unbounded ray means it is infeasible.
    """

    def __init__(self, A: sp.csr_matrix, b: np.ndarray, c: np.ndarray,
                 opt_tol: float, pivot_tol: float, max_iter: int,
                 stall_budget: int | None = None, perturb: bool = False):
        self.A = A
        self.m, self.n = A.shape
        self.m_real = self.m - 2 * self.n
        self.g = b.astype(float)
        self.opt_tol = opt_tol
        self.pivot_tol = pivot_tol
        self.max_iter = max_iter
        self.stall_budget = stall_budget
        q = -c.astype(float)
        self.sign = np.where(q >= 0.0, 1.0, -1.0)
        self.qp = self.sign * q
        if perturb:
            # Deterministic positive jitter on the dual RHS breaks the
            # massive degeneracy of zero-cost variables. The jitter moves
            # only the pivot path: the optimality test and the recovered
            # primal x depend on costs and the final basis, not this RHS.
            scale = 1e-8 * max(1.0, float(np.abs(self.qp).max()))
            h = (np.arange(self.n, dtype=np.uint64) * np.uint64(2654435761)) \
                % np.uint64(2**32)
            self.qp = self.qp + scale * (1.0 + h.astype(float) / 2.0**32)
        # Crash basis: for dual row i take the upper box row (+e_i) when the
        # RHS is nonnegative, else the lower box row (-e_i); in the
        # sign-normalized system both appear as +e_i, so B = I and xB = qp.
        idx = np.arange(self.n)
        self.basis = np.where(
            q >= 0.0, self.m_real + idx, self.m_real + self.n + idx
        )
        self.in_basis = np.zeros(self.m, dtype=bool)
        self.in_basis[self.basis] = True
        norms = np.sqrt(np.asarray(A.power(2).sum(axis=1)).ravel())
        self.colnorm = np.maximum(norms, 1e-12)
        self.iterations = 0
        self.block_ptr = 0
        self.banned: set[int] = set()
        self.etas: list[tuple[int, np.ndarray]] = []
        self.lu = None
        self.xB = None
        self._refactor()

    # -- linear algebra ---------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        v = np.zeros(self.n)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        idx = self.A.indices[lo:hi]
        v[idx] = self.sign[idx] * self.A.data[lo:hi]
        return v

    def _refactor(self) -> None:
        B = np.empty((self.n, self.n))
        for i, j in enumerate(self.basis):
            B[:, i] = self._column(int(j))
        with warnings.catch_warnings():
            # A singular basis only warns here; the finiteness check
            # below turns it into a recoverable failure.
            warnings.simplefilter("ignore", LinAlgWarning)
            self.lu = lu_factor(B, check_finite=False)
        self.etas = []
        xB = self._ftran(self.qp.copy())
        if not np.all(np.isfinite(xB)):
            raise SolverFailure("singular basis at refactor")
        if xB.min() < -1e-3 * max(1.0, np.abs(self.qp).max()):
            raise SolverFailure("basic solution drifted negative at refactor")
        self.xB = np.maximum(xB, 0.0)

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        x = lu_solve(self.lu, v, check_finite=False)
        for r, w in self.etas:
            t = x[r] / w[r]
            x -= w * t
            x[r] = t
        return x

    def _btran(self, v: np.ndarray) -> np.ndarray:
        x = v.copy()
        for r, w in reversed(self.etas):
            x[r] = (x[r] - w @ x + w[r] * x[r]) / w[r]
        return lu_solve(self.lu, x, trans=1, check_finite=False)

    # -- pricing ----------------------------------------------------------

    def _find_entering(self, pi: np.ndarray, bland: bool) -> int:
        """Entering dual variable, or -1 when none prices out.

        The reduced cost of dual variable j is g_j - A_j.(sign*pi), the
        slack of primal row j at the current multipliers. Dantzig mode
        cycles over column blocks and takes the steepest norm-relative
        candidate in the first block holding one, so dense rows do not
        drown out short coupling rows. Bland mode scans from column 0 and
        takes the first eligible index.
        """
        y = self.sign * pi
        nblocks = max(1, -(-self.m // _BLOCK))
        order = range(nblocks) if bland else (
            (self.block_ptr + t) % nblocks for t in range(nblocks)
        )
        for bi in order:
            s, e = bi * _BLOCK, min((bi + 1) * _BLOCK, self.m)
            if s >= e:
                continue
            d = self.g[s:e] - self.A[s:e] @ y
            d[self.in_basis[s:e]] = np.inf
            for j in self.banned:
                if s <= j < e:
                    d[j - s] = np.inf
            neg = d < -self.opt_tol
            if not neg.any():
                continue
            if bland:
                return s + int(np.argmax(neg))
            rel = np.where(neg, d / self.colnorm[s:e], np.inf)
            self.block_ptr = bi
            return s + int(np.argmin(rel))
        return -1

    # -- ratio test -------------------------------------------------------

    def _ratio_test(
        self, w: np.ndarray, bland: bool, floor: bool = False
    ) -> tuple[int, float]:
        """Two-pass leaving-row choice with a small feasibility slack.

        Pass one finds the tightest ratio after letting each basic value
        dip a hair below zero; pass two picks the largest pivot entry
        among rows whose true ratio stays within that bound. Trading a
        harmless sliver of feasibility for pivot magnitude keeps the
        basis much better conditioned on degenerate problems.
        """
        tol_w = self.pivot_tol * max(1.0, float(np.abs(w).max()))
        pos = np.where(w > tol_w)[0]
        if pos.size == 0 and floor:
            # The relative tolerance can reject genuine but tiny pivots on
            # a badly conditioned basis; before misreading the column as a
            # ray, admit the best entry above an absolute floor.
            pos = np.where(w > max(self.pivot_tol, 1e-11))[0]
        if pos.size == 0:
            return -1, np.inf
        thetas = self.xB[pos] / w[pos]
        if bland:
            best = max(0.0, float(thetas.min()))
            ties = pos[thetas <= best + 1e-9 * (1.0 + best)]
            return int(ties[np.argmin(self.basis[ties])]), best
        slack = 1e-9 * (1.0 + float(np.abs(self.xB).max()))
        theta_max = float(((self.xB[pos] + slack) / w[pos]).min())
        cand = thetas <= max(theta_max, 0.0)
        if not cand.any():
            cand = thetas <= float(thetas.min())
        sub = pos[cand]
        r = int(sub[np.argmax(w[sub])])
        return r, max(0.0, float(self.xB[r] / w[r]))

    # -- main loop --------------------------------------------------------

    def _iterate(self) -> str:
        stall = 0
        bland = False
        while self.iterations < self.max_iter:
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()
            pi = self._btran(self.g[self.basis])
            j = self._find_entering(pi, bland)
            if j < 0:
                return "optimal"
            w = self._ftran(self._column(j))
            refresh_after = False
            r, theta = self._ratio_test(w, bland)
            if r < 0:
                # No leaving candidate. With ill-conditioned bases this is
                # often a spurious negative reduced cost; retest with fresh
                # factors and a recomputed reduced cost before concluding
                # the dual is truly unbounded (primal infeasible).
                if self.etas:
                    self._refactor()
                    w = self._ftran(self._column(j))
                    r, theta = self._ratio_test(w, bland)
                if r < 0:
                    pi = self._btran(self.g[self.basis])
                    # _column is already sign-normalized, so dot with pi.
                    d_fresh = self.g[j] - self._column(j) @ pi
                    if d_fresh >= -10.0 * self.opt_tol:
                        self.banned.add(j)
                        continue
                    r, theta = self._ratio_test(w, bland, floor=True)
                    if r < 0:
                        return "unbounded"
                    refresh_after = True
            if abs(w[r]) < 1e-7 * max(1.0, float(np.abs(w).max())) and self.etas:
                # Pivot too small through stale etas; refresh and retry.
                self._refactor()
                continue
            self.iterations += 1
            self.xB -= theta * w
            self.xB[r] = theta
            np.maximum(self.xB, 0.0, out=self.xB)
            self.in_basis[self.basis[r]] = False
            self.in_basis[j] = True
            self.basis[r] = j
            self.etas.append((r, w))
            self.banned.clear()
            if refresh_after:
                # A floored pivot is numerically fragile; rebuild at once.
                self._refactor()
            if theta <= 1e-12:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
                if self.stall_budget is not None and stall > self.stall_budget:
                    raise _StallLimit
            else:
                stall = 0
                bland = False
        raise SolverFailure(f"iteration cap {self.max_iter} reached")

    def run(self) -> tuple[str, np.ndarray | None]:
        """Returns (status, primal x); 'infeasible' carries no x."""
        status = self._iterate()
        if status == "unbounded":
            # Dual unbounded: the primal has no feasible point.
            return "infeasible", None
        x = self.sign * self._btran(self.g[self.basis])
        return "optimal", x


def _equilibrate(
    A: sp.csr_matrix, b: np.ndarray, feas_tol: float
) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray, bool]:
    """Scale rows to unit max-abs; drop empty rows.

    Returns (A, b, row_max, feasible) where row_max holds the original
    max-abs of each kept row, so scaled residuals can be mapped back to
    original row units.
    """
    m = A.shape[0]
    if m == 0:
        return A, b, np.ones(0), True
    row_max = np.asarray(abs(A).max(axis=1).toarray()).ravel()
    empty = row_max == 0.0
    if np.any(b[empty] < -feas_tol):
        return A, b, row_max, False
    keep = ~empty
    A = A[keep]
    b = b[keep]
    row_max = row_max[keep]
    scale = 1.0 / row_max
    A = sp.diags(scale) @ A
    return A.tocsr(), b * scale, row_max, True


_LAZY_SEED_ROWS = 1000
_LAZY_ADD_CAP = 4000
_LAZY_MAX_ROUNDS = 60


def solve(
    p: LinearProgram,
    *,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    pivot_tol: float = PIVOT_TOL,
    max_iter: int | None = None,
    lazy_rows: bool | None = None,
) -> LpSolution:
    """Solve an inequality-form LP. Deterministic for identical inputs.

    Statuses: ``optimal`` (x feasible within feas_tol, objective within
    opt_tol of the true optimum), ``infeasible``, ``unbounded``, ``failed``
    (iteration cap or numerical breakdown; distinct from infeasible).
    An infeasibility verdict is only reported after an elastic re-check
    confirms that no point satisfies the rows; a verdict that fails the
    re-check comes back as ``failed`` instead.

    For problems with many more rows than columns the engine activates
    rows lazily: it solves over a working subset and keeps adding the
    rows violated at the subset optimum until every row of the original
    problem is satisfied. ``lazy_rows`` forces the mode on or off; the
    default picks it by shape.
    """
    p.validate()
    A, b, rmax, ok = _equilibrate(p.A.tocsr(), p.b.astype(float), feas_tol)
    if not ok:
        return LpSolution("infeasible", None, np.nan, np.nan, 0)
    m_real = A.shape[0]
    A, b = _fold_bounds(A, b, p.lower, p.upper, p.n)
    rmax = np.concatenate([rmax, np.ones(len(b) - m_real)])
    # Synthetic box |x_i| <= big gives the engine its crash basis. It is
    # far outside any answer of interest, so an optimum pressed against it
    # exposes a genuinely unbounded problem.
    big = 1e7 * max(1.0, float(np.abs(b).max()) if len(b) else 1.0)
    if max_iter is None:
        max_iter = 200 * p.n + 5000
    if lazy_rows is None:
        lazy_rows = A.shape[0] > max(3000, 6 * p.n)
    if lazy_rows:
        status, x, iters = _lazy_rows_run(
            A, b, rmax, p.c, big, m_real,
            feas_tol, opt_tol, pivot_tol, max_iter,
        )
    else:
        status, x, iters = _boxed_run(
            A, b, p.c, big, opt_tol, pivot_tol, max_iter
        )
    if status == "infeasible" and not _confirm_infeasible(
        A, b, big, feas_tol, opt_tol, pivot_tol, max_iter
    ):
        # The verdict did not survive an elastic re-check; report a
        # solver failure rather than a feasibility claim that may be a
        # conditioning artifact.
        status = "failed"
    if status != "optimal":
        return LpSolution(status, None, np.nan, np.nan, iters)
    return LpSolution(
        "optimal", x, float(p.c @ x), _violation(p, x), iters
    )


def _boxed_run(
    A: sp.csr_matrix, b: np.ndarray, c: np.ndarray, big: float,
    opt_tol: float, pivot_tol: float, max_iter: int,
) -> tuple[str, np.ndarray | None, int]:
    """Two-tier run with the synthetic box appended.

    Returns (status, x, iterations); an ``unbounded`` verdict still
    carries the box-pressed point so callers can inspect it.
    """
    n = len(c)
    eye = sp.identity(n, format="csr")
    A_box = sp.vstack([A, eye, -eye], format="csr")
    b_box = np.concatenate([b, np.full(2 * n, big)])
    status, x, iters = _run_two_tier(
        A_box, b_box, c, opt_tol, pivot_tol, max_iter
    )
    if status == "optimal" and np.any(np.abs(x) >= 0.5 * big):
        return "unbounded", x, iters
    return status, x, iters


def _confirm_infeasible(
    A: sp.csr_matrix, b: np.ndarray, big: float,
    feas_tol: float, opt_tol: float, pivot_tol: float, max_iter: int,
) -> bool:
    """Re-check an infeasibility verdict with an elastic relaxation.

    Minimizes a single slack s over A x - s <= b, 0 <= s, inside the same
    synthetic box. That problem is always feasible and bounded below by
    zero, so a certified minimum above feas_tol proves no point satisfies
    the rows. Returns True when infeasibility stands, False when the
    relaxation reaches a near-feasible point or cannot be certified.
    """
    m, n = A.shape
    col = sp.csr_matrix(
        (np.full(m, -1.0), (np.arange(m), np.zeros(m, dtype=np.int64))),
        shape=(m, 1),
    )
    s_pos = sp.csr_matrix(
        (np.array([-1.0]), (np.array([0]), np.array([n]))),
        shape=(1, n + 1),
    )
    A_e = sp.vstack([sp.hstack([A, col]), s_pos], format="csr")
    b_e = np.concatenate([b, [0.0]])
    c_e = np.zeros(n + 1)
    c_e[n] = 1.0
    status, x, _ = _boxed_run(
        A_e, b_e, c_e, big, opt_tol, pivot_tol, max_iter
    )
    if status != "optimal":
        return False
    return float(x[n]) > feas_tol


def _lazy_rows_run(
    A: sp.csr_matrix, b: np.ndarray, rmax: np.ndarray, c: np.ndarray,
    big: float, m_real: int,
    feas_tol: float, opt_tol: float, pivot_tol: float, max_iter: int,
) -> tuple[str, np.ndarray | None, int]:
    """Row-activation loop for problems with many more rows than columns.

    Solves over a working subset of rows, checks every remaining row at
    the subset optimum in original row units, and activates the worst
    violated rows until none remain. Infeasibility of a subset already
    certifies the full problem infeasible, and a box-pressed subset
    optimum violating no inactive row certifies genuine unboundedness.
    """
    m, n = A.shape
    active = np.zeros(m, dtype=bool)
    active[: min(m_real, max(_LAZY_SEED_ROWS, 2 * n))] = True
    # Folded bound rows are cheap singletons; keep them always active.
    active[m_real:] = True
    total = 0
    for _ in range(_LAZY_MAX_ROUNDS):
        idx = np.flatnonzero(active)
        status, x, iters = _boxed_run(
            A[idx], b[idx], c, big, opt_tol, pivot_tol, max_iter
        )
        total += iters
        if status == "infeasible":
            # A subset infeasibility does imply full infeasibility, but a
            # misjudged ray on a hard subset must not; confirm on the
            # complete row set before reporting it.
            break
        if status == "failed":
            break
        viol = (np.asarray(A @ x).ravel() - b) * rmax
        viol[active] = -np.inf
        if float(viol.max()) <= 0.5 * feas_tol:
            return status, x, total
        cand = np.flatnonzero(viol > 0.5 * feas_tol)
        if cand.size > _LAZY_ADD_CAP:
            keep = np.argsort(-viol[cand], kind="stable")[:_LAZY_ADD_CAP]
            cand = cand[keep]
        active[cand] = True
    # Too many rounds or an inner failure: one shot over every row.
    status, x, iters = _boxed_run(
        A, b, c, big, opt_tol, pivot_tol, max_iter
    )
    return status, x, total + iters


def _run_two_tier(
    A: sp.csr_matrix, b: np.ndarray, c: np.ndarray,
    opt_tol: float, pivot_tol: float, max_iter: int,
) -> tuple[str, np.ndarray | None, int]:
    """Plain run first; on a stall or breakdown, restart with jittered costs.

    The jitter breaks the ties behind degenerate pivot walls and numerical
    drift, and it only tilts the objective: the recovered point is still an
    exact vertex of the unperturbed rows.
    """
    engine = None
    iters = 0
    try:
        engine = _DualSimplex(
            A, b, c, opt_tol, pivot_tol, max_iter, stall_budget=300
        )
        status, x = engine.run()
        return status, x, engine.iterations
    except (_StallLimit, SolverFailure):
        if engine is not None:
            iters = engine.iterations
    engine = None
    try:
        engine = _DualSimplex(
            A, b, c, opt_tol, pivot_tol, max_iter, perturb=True
        )
        status, x = engine.run()
        return status, x, iters + engine.iterations
    except SolverFailure:
        if engine is not None:
            iters += engine.iterations
        return "failed", None, iters


def _violation(p: LinearProgram, x: np.ndarray) -> float:
    """Max violation of rows and bounds of the original problem at x."""
    worst = 0.0
    if p.A.shape[0]:
        worst = max(worst, float((p.A @ x - p.b).max()))
    finite_lo = np.isfinite(p.lower)
    finite_hi = np.isfinite(p.upper)
    if finite_lo.any():
        worst = max(worst, float((p.lower[finite_lo] - x[finite_lo]).max()))
    if finite_hi.any():
        worst = max(worst, float((x[finite_hi] - p.upper[finite_hi]).max()))
    return worst


def reformulate_l1_min(
    A: sp.spmatrix | np.ndarray | None,
    b: Sequence[float],
    n_a: int,
) -> LinearProgram:
    """LP whose optimum is min ||a||_1 over {a : A a <= b}.

    Variables are stacked as x = (a, s) with s the elementwise absolute
    value bounds, so for a solution x the coefficient vector is x[:n_a]
    and the objective is sum(x[n_a:]). With no rows the optimum is a = 0.
    """
    b = np.asarray(b, dtype=float).ravel()
    m = len(b)
    if A is None:
        A = sp.csr_matrix((0, n_a))
    A = sp.csr_matrix(A)
    if A.shape != (m, n_a):
        raise ValueError(f"A has shape {A.shape}, expected ({m}, {n_a})")
    eye = sp.identity(n_a, format="csr")
    zero = sp.csr_matrix((m, n_a))
    # Coupling rows |a_i| <= s_i come first so that row-subset solvers
    # always carry them in their working set.
    big = sp.vstack(
        [
            sp.hstack([eye, -eye]),
            sp.hstack([-eye, -eye]),
            sp.hstack([A, zero]),
        ],
        format="csr",
    )
    rhs = np.concatenate([np.zeros(2 * n_a), b])
    c = np.concatenate([np.zeros(n_a), np.ones(n_a)])
    return LinearProgram._make(2 * n_a, c, big, rhs, None, None)


def chebyshev_residual(
    Phi: np.ndarray | sp.spmatrix, u: Sequence[float]
) -> tuple[float, np.ndarray]:
    """Minimal worst-case residual min_a ||u - Phi a||_inf and a minimizer.

    For numerically full-rank dictionaries the reported value is within
    1e-9*max(1, ||u||_inf) of the true minimum. When a least-squares fit
    already drives the uniform residual below that tolerance
    (interpolating dictionaries do), its witness is returned directly:
    the simplex machinery would otherwise have to work with the
    near-singular interpolation basis for no measurable gain. A
    numerically rank-deficient dictionary is restricted to a
    well-conditioned pivot subset of its columns first; shaving the last
    fraction of residual there would take coefficients of 1e8 and
    beyond, useless as a fit, so the reported value is the minimum over
    the subset and the witness attains it with representable
    coefficients. It over-states the exact-arithmetic minimum, which for
    the fit-budget selection this routine backs only loosens the band.
    Raises SolverFailure if the reference solver cannot certify optimality
    (the problem itself is always feasible and bounded below by zero).
    """
    Phi = sp.csr_matrix(Phi)
    u = np.asarray(u, dtype=float).ravel()
    N, M = Phi.shape
    if len(u) != N:
        raise ValueError(f"u has length {len(u)}, expected {N}")
    if N == 0 or M == 0:
        best = float(np.abs(u).max()) if N else 0.0
        return best, np.zeros(M)
    dense = Phi.toarray()
    a_ls, *_ = np.linalg.lstsq(dense, u, rcond=None)
    t_ls = float(np.abs(u - dense @ a_ls).max())
    if t_ls <= 1e-9 * max(1.0, float(np.abs(u).max())):
        return t_ls, a_ls
    _, R, perm = qr(dense, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return float(np.abs(u).max()), np.zeros(M)
    minus1 = sp.csr_matrix(
        (np.full(N, -1.0), (np.arange(N), np.zeros(N, dtype=int))),
        shape=(N, 1),
    )
    b = np.concatenate([u, -u])
    last = "failed"
    prev_rank = -1
    # Second pass caps the subset condition harder; a box-pressed optimum
    # at the first cutoff means the fit still wanted runaway coefficients.
    for rank_tol in (1e-8, 1e-5):
        rank = int(np.count_nonzero(diag > rank_tol * diag[0]))
        if rank == prev_rank:
            break
        prev_rank = rank
        keep = np.sort(perm[:rank])
        work = sp.csr_matrix(dense[:, keep])
        A = sp.vstack(
            [sp.hstack([work, minus1]), sp.hstack([-work, minus1])],
            format="csr",
        )
        c = np.zeros(rank + 1)
        c[rank] = 1.0
        sol = solve(LinearProgram._make(rank + 1, c, A, b, None, None))
        if sol.status == "optimal":
            a = np.zeros(M)
            a[keep] = sol.x[:rank]
            return float(sol.objective), a
        last = sol.status
    raise SolverFailure(f"residual subproblem ended {last}")
