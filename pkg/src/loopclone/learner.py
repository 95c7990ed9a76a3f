"""Two-stage identification of a sparse static feedback law.

Stage one minimizes the l1 norm of the coefficient vector subject to a
uniform data-fit band and, for every sample pair, a slope band tied to a
Lipschitz budget on the approximation error. Stage two freezes the support
found by stage one and minimizes the slope constant itself; among its
minimizers the smallest-l1 one is kept, which makes the result
deterministic and well scaled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .basis import FORMAT_HEADER as _BASIS_HEADER
from .basis import BasisDictionary, evaluate_row
from .core import ControllerInterface, Dataset, FunctionController, validate_dataset
from .estimation import (
    EstimationReport,
    controller_scatter,
    estimate_gamma_f,
    estimate_gamma_gy,
    estimate_noise_bound,
)
from .lp import LinearProgram, SolverFailure, reformulate_l1_min, solve
from .lp import chebyshev_residual as _chebyshev_residual

__all__ = [
    "LearningError",
    "InfeasibleFitError",
    "EmptySupportError",
    "AlphaSelection",
    "LearnConfig",
    "ResidualSummary",
    "LearnedController",
    "build_regressor",
    "select_alpha",
    "select_gamma_delta_prime",
    "stage1_sparsify",
    "extract_support",
    "stage2_tighten",
    "min_feasible_gamma_delta",
    "learn_controller",
]

CONTROLLER_HEADER = "# loopclone-controller v1"

_DATA_HINT = "collect a larger number of data samples or relax the error budget"


class LearningError(RuntimeError):
    """A pipeline step could not produce its output. Carries the step name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


class InfeasibleFitError(LearningError):
    """The constraint system of a fitting step has no solution."""

    def __init__(self, stage: str, detail: str, hint: str = _DATA_HINT):
        self.hint = hint
        super().__init__(stage, f"{detail}; {hint}")


class EmptySupportError(LearningError):
    """Every first-stage coefficient fell below the support threshold."""

    def __init__(self, tau: float):
        self.tau = tau
        super().__init__(
            "support",
            "dictionary cannot represent the data: all stage-1 coefficients "
            f"are below the support threshold {tau!r}",
        )


class AlphaSelection(NamedTuple):
    """Residual inflation choice: the factor, its floor and the raw fit."""

    alpha: float
    alpha_min: float
    residual: float
    absolute: bool


@dataclass(frozen=True)
class LearnConfig:
    """Tunable knobs of :func:`learn_controller`.

    Optional overrides short-circuit the corresponding estimation step:
    ``epsilon_hat`` skips the neighborhood-spread noise estimate,
    ``gamma_f_hat``/``gamma_gy_hat`` skip the transition-based gain
    estimates (mandatory for non-trajectory data), and
    ``gamma_delta_prime`` fixes the stage-1 slope budget directly.
    ``include_pairs=False`` drops the pairwise slope constraints from both
    stages, a diagnostic mode for measuring what those constraints buy.
    """

    margin: float = 0.02
    theta: float = 0.95
    tau_rel: float = 1e-6
    rho: float | str = "auto"
    include_pairs: bool = True
    epsilon_hat: float | None = None
    gamma_f_hat: float | None = None
    gamma_gy_hat: float | None = None
    gamma_delta_prime: float | None = None
    feas_tol: float = 1e-8
    opt_tol: float = 1e-8

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if self.tau_rel <= 0:
            raise ValueError(f"tau_rel must be > 0, got {self.tau_rel}")
        for name in ("epsilon_hat", "gamma_f_hat", "gamma_gy_hat"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.gamma_delta_prime is not None and self.gamma_delta_prime <= 0:
            raise ValueError(
                f"gamma_delta_prime must be > 0, got {self.gamma_delta_prime}"
            )
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("solver tolerances must be > 0")


@dataclass(frozen=True)
class ResidualSummary:
    """Worst-case slack deficits of the fitted law on the training data.

    ``max_a_violation`` is the amount by which the uniform fit band is
    exceeded, ``max_b_violation`` the amount by which any pairwise slope
    band is exceeded; both are zero for a clean fit.
    """

    max_a_violation: float
    max_b_violation: float


@dataclass(frozen=True)
class LearnedController:
    """A fitted sparse feedback law with its certification constants.

    ``a_hat`` is the final coefficient vector (exactly zero off
    ``support``), ``a_one`` the stage-1 vector the support came from, and
    ``gamma_delta_s`` the certified slope constant of the data-consistency
    bands. Construction re-checks the structural invariants, so a
    deserialized instance is as trustworthy as a freshly fitted one.
    """

    dictionary: BasisDictionary
    a_hat: tuple[float, ...]
    support: tuple[int, ...]
    gamma_delta_s: float
    a_one: tuple[float, ...]
    report: EstimationReport
    constraint_residuals: ResidualSummary

    def __post_init__(self):
        M = self.dictionary.M
        if len(self.a_hat) != M or len(self.a_one) != M:
            raise ValueError(
                f"coefficient length {len(self.a_hat)}/{len(self.a_one)} "
                f"does not match dictionary size {M}"
            )
        supp = set(self.support)
        if not all(0 <= i < M for i in supp):
            raise ValueError("support index out of range")
        if any(v != 0.0 for i, v in enumerate(self.a_hat) if i not in supp):
            raise ValueError("a_hat must vanish off the support")
        if self.gamma_delta_s < 0:
            raise ValueError("gamma_delta_s must be >= 0")
        if self.gamma_delta_s > self.report.gamma_delta_prime + 1e-8:
            raise ValueError(
                f"gamma_delta_s {self.gamma_delta_s} exceeds the stage-1 "
                f"budget {self.report.gamma_delta_prime}"
            )
        res = self.constraint_residuals
        if res.max_a_violation > 1e-8 or res.max_b_violation > 1e-8:
            raise ValueError(
                "constraint residuals exceed tolerance: "
                f"a={res.max_a_violation!r} b={res.max_b_violation!r}"
            )

    @property
    def gamma_khat(self) -> float:
        """Lipschitz bound of the law: sum of |a_i| times each function's."""
        a = np.asarray(self.a_hat)
        return float(np.abs(a) @ self.dictionary.lipschitz_constants())

    def predict(self, y) -> float:
        """Raw (unclamped) value of the law at one output point."""
        return float(evaluate_row(self.dictionary, y) @ np.asarray(self.a_hat))

    def as_controller(self, u_bounds) -> ControllerInterface:
        """Wrap the law as a controller clamped to the given input range."""
        a = np.asarray(self.a_hat)
        d = self.dictionary
        return FunctionController(
            lambda y: float(evaluate_row(d, y) @ a),
            u_bounds,
            lipschitz=self.gamma_khat,
        )

    def to_text(self) -> str:
        """Serialize, dictionary included, to a versioned text block."""
        r = self.report
        lines = [
            CONTROLLER_HEADER,
            f"gamma_delta_s {self.gamma_delta_s!r}",
            f"epsilon_hat {r.epsilon_hat!r}",
            f"rho_used {r.rho_used!r}",
            f"covered_count {r.covered_count}",
            f"gamma_f_hat {r.gamma_f_hat!r}",
            f"gamma_gy_hat {r.gamma_gy_hat!r}",
            f"alpha_min {r.alpha_min!r}",
            f"alpha {r.alpha!r}",
            f"gamma_delta_prime {r.gamma_delta_prime!r}",
            f"stability_margin_feasible {'true' if r.stability_margin_feasible else 'false'}",
            f"absolute_residual_mode {'true' if r.absolute_residual_mode else 'false'}",
            f"max_a_violation {self.constraint_residuals.max_a_violation!r}",
            f"max_b_violation {self.constraint_residuals.max_b_violation!r}",
            "support " + " ".join(str(i) for i in self.support),
            "a_one " + " ".join(repr(v) for v in self.a_one),
            "a_hat " + " ".join(repr(v) for v in self.a_hat),
        ]
        return "\n".join(lines) + "\n" + self.dictionary.to_text()

    @classmethod
    def from_text(cls, text: str) -> "LearnedController":
        """Parse the format written by :meth:`to_text` and re-validate."""
        lines = text.splitlines()
        stripped = [ln.strip() for ln in lines]
        if not stripped or stripped[0] != CONTROLLER_HEADER:
            raise ValueError(f"expected header {CONTROLLER_HEADER!r}")
        try:
            split = stripped.index(_BASIS_HEADER)
        except ValueError:
            raise ValueError("missing embedded dictionary block") from None
        dictionary = BasisDictionary.from_text("\n".join(lines[split:]))
        fields: dict[str, str] = {}
        for ln in stripped[1:split]:
            if not ln:
                continue
            key, _, rest = ln.partition(" ")
            if key in fields:
                raise ValueError(f"duplicate field {key!r}")
            fields[key] = rest.strip()
        known = {
            "gamma_delta_s", "epsilon_hat", "rho_used", "covered_count",
            "gamma_f_hat", "gamma_gy_hat", "alpha_min", "alpha",
            "gamma_delta_prime", "stability_margin_feasible",
            "absolute_residual_mode", "max_a_violation", "max_b_violation",
            "support", "a_one", "a_hat",
        }
        unknown = set(fields) - known
        if unknown:
            raise ValueError(f"unknown field {sorted(unknown)[0]!r}")
        missing = known - set(fields)
        if missing:
            raise ValueError(f"missing field {sorted(missing)[0]!r}")

        def flag(key: str) -> bool:
            v = fields[key]
            if v not in ("true", "false"):
                raise ValueError(f"{key} must be true or false, got {v!r}")
            return v == "true"

        report = EstimationReport(
            epsilon_hat=float(fields["epsilon_hat"]),
            rho_used=float(fields["rho_used"]),
            covered_count=int(fields["covered_count"]),
            gamma_f_hat=float(fields["gamma_f_hat"]),
            gamma_gy_hat=float(fields["gamma_gy_hat"]),
            alpha_min=float(fields["alpha_min"]),
            alpha=float(fields["alpha"]),
            gamma_delta_prime=float(fields["gamma_delta_prime"]),
            stability_margin_feasible=flag("stability_margin_feasible"),
            absolute_residual_mode=flag("absolute_residual_mode"),
        )
        return cls(
            dictionary=dictionary,
            a_hat=tuple(float(v) for v in fields["a_hat"].split()),
            support=tuple(int(v) for v in fields["support"].split()),
            gamma_delta_s=float(fields["gamma_delta_s"]),
            a_one=tuple(float(v) for v in fields["a_one"].split()),
            report=report,
            constraint_residuals=ResidualSummary(
                max_a_violation=float(fields["max_a_violation"]),
                max_b_violation=float(fields["max_b_violation"]),
            ),
        )


def build_regressor(
    d: Dataset, dictionary: BasisDictionary
) -> tuple[np.ndarray, np.ndarray]:
    """Dictionary values at every dataset output, plus the input vector.

    Returns (Phi, u) with Phi of shape (N, M). The dataset must be valid
    and every output must lie in the dictionary's domain box; violations
    raise ValueError naming the offending sample.
    """
    problems = validate_dataset(d)
    if problems:
        extra = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
        raise ValueError(f"invalid dataset: {problems[0]}{extra}")
    if dictionary.n_y != d.n_y:
        raise ValueError(
            f"dictionary is defined on n_y={dictionary.n_y} components, "
            f"dataset has n_y={d.n_y}"
        )
    Y = d.y_array()
    try:
        Phi = dictionary.evaluate_matrix(Y)
    except ValueError as e:
        # check_domain reports "point i"; its index is the sample index.
        raise ValueError(f"dataset sample outside the dictionary domain: {e}") from None
    return Phi, d.u_array()


def select_alpha(
    Phi: np.ndarray,
    u: np.ndarray,
    epsilon_hat: float,
    margin: float = 0.02,
) -> AlphaSelection:
    """Pick the inflation of the noise band that keeps the fit feasible.

    The floor alpha_min is the best achievable uniform residual divided by
    the noise bound; the returned alpha sits a relative margin above
    max(1, alpha_min). A zero noise bound switches to absolute mode: the
    fit band becomes residual*(1+margin) and alpha is reported as 1.
    """
    if epsilon_hat < 0:
        raise ValueError(f"epsilon_hat must be >= 0, got {epsilon_hat}")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    residual, _ = _chebyshev_residual(Phi, u)
    residual = max(0.0, float(residual))
    if epsilon_hat == 0.0:
        return AlphaSelection(1.0, 1.0, residual, True)
    alpha_min = residual / epsilon_hat
    alpha = max(1.0, alpha_min) * (1.0 + margin)
    return AlphaSelection(alpha, alpha_min, residual, False)


def select_gamma_delta_prime(
    gamma_f_hat: float,
    gamma_gy_hat: float,
    *,
    theta: float = 0.95,
    margin: float = 0.02,
    min_feasible: float | None = None,
    epsilon_hat: float = 0.0,
) -> tuple[float, bool]:
    """Slope budget for stage 1 and whether it sits below the stability margin.

    With estimated gains leaving room, the budget is theta times
    (1 - gamma_gy_hat)/gamma_f_hat and the flag is True. Otherwise the
    caller must supply the smallest data-feasible slope constant and the
    budget is that value plus a relative margin, flagged False; a
    degenerate zero minimum falls back to twice the noise bound.
    """
    if gamma_f_hat < 0 or gamma_gy_hat < 0:
        raise ValueError("gain estimates must be >= 0")
    if gamma_f_hat == 0:
        raise ValueError(
            "gamma_f_hat is zero, the stability margin is undefined; "
            "fix the slope budget explicitly instead"
        )
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    stab = (1.0 - gamma_gy_hat) / gamma_f_hat
    if stab > 0:
        return theta * stab, True
    if min_feasible is None:
        raise ValueError(
            "stability margin is not positive; pass min_feasible "
            "(see min_feasible_gamma_delta) to fall back to a data-driven budget"
        )
    if min_feasible < 0:
        raise ValueError(f"min_feasible must be >= 0, got {min_feasible}")
    value = (1.0 + margin) * min_feasible
    if value <= 0:
        # Interpolating dictionaries drive the minimum to exactly zero.
        value = max(2.0 * epsilon_hat, 1e-9)
    return value, False


def _pair_blocks(
    Y: np.ndarray, u: np.ndarray, Phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pair distance, regressor difference and input difference.

    Pairs are ordered (l, k) with l < k; the difference rows are
    Phi[k] - Phi[l] and u[l] - u[k], matching the slope bands
    |u(l) - u(k) + (Phi[k] - Phi[l]) a| <= gamma * dist + 2 eps.
    """
    l_idx, k_idx = np.triu_indices(len(u), k=1)
    D = np.abs(Y[l_idx] - Y[k_idx]).max(axis=1)
    V = Phi[k_idx] - Phi[l_idx]
    c = u[l_idx] - u[k_idx]
    return D, V, c


def _resolve_fit_bound(
    epsilon_hat: float, alpha: float, fit_bound: float | None
) -> float:
    if fit_bound is not None:
        if fit_bound < 0:
            raise ValueError(f"fit_bound must be >= 0, got {fit_bound}")
        return float(fit_bound)
    if epsilon_hat < 0 or alpha < 0:
        raise ValueError("epsilon_hat and alpha must be >= 0")
    return float(alpha * epsilon_hat)


def _check_shapes(Phi, u, Y):
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    u = np.asarray(u, dtype=float).ravel()
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != Phi.shape[0] or len(u) != Phi.shape[0]:
        raise ValueError(
            f"row counts differ: Phi {Phi.shape[0]}, u {len(u)}, Y {Y.shape[0]}"
        )
    return Phi, u, Y


def stage1_sparsify(
    Phi: np.ndarray,
    u: np.ndarray,
    y_samples: np.ndarray,
    epsilon_hat: float,
    alpha: float,
    gamma_delta_prime: float,
    *,
    include_pairs: bool = True,
    fit_bound: float | None = None,
    feas_tol: float = 1e-8,
    opt_tol: float = 1e-8,
) -> np.ndarray:
    """Sparsest-by-l1 coefficient vector inside the fit and slope bands.

    ``fit_bound`` overrides the default band half-width alpha*epsilon_hat
    (used by the zero-noise absolute mode). Raises InfeasibleFitError when
    the bands admit no coefficient vector, SolverFailure when the solver
    cannot settle the problem.
    """
    Phi, u, Y = _check_shapes(Phi, u, y_samples)
    if gamma_delta_prime < 0:
        raise ValueError(f"gamma_delta_prime must be >= 0, got {gamma_delta_prime}")
    fb = _resolve_fit_bound(epsilon_hat, alpha, fit_bound)
    M = Phi.shape[1]
    blocks = [Phi, -Phi]
    rhs = [u + fb, fb - u]
    if include_pairs and len(u) >= 2:
        D, V, c = _pair_blocks(Y, u, Phi)
        slack = gamma_delta_prime * D + 2.0 * epsilon_hat
        blocks += [V, -V]
        rhs += [slack - c, slack + c]
    p = reformulate_l1_min(
        sp.csr_matrix(np.vstack(blocks)), np.concatenate(rhs), M
    )
    sol = solve(p, feas_tol=feas_tol, opt_tol=opt_tol)
    if sol.status == "infeasible":
        raise InfeasibleFitError(
            "stage1",
            "no coefficient vector satisfies the fit and slope bands "
            "(consider a larger slope budget or inflation factor)",
        )
    if sol.status != "optimal":
        raise SolverFailure(f"stage1 solve ended {sol.status}")
    return np.asarray(sol.x[:M], dtype=float)


def extract_support(a_one: np.ndarray, tau_rel: float = 1e-6) -> tuple[int, ...]:
    """Indices of coefficients above the relative threshold.

    The threshold is tau_rel * max(1, ||a_one||_inf). An empty result
    raises EmptySupportError: it means the dictionary cannot represent the
    data at the working noise level.
    """
    if tau_rel <= 0:
        raise ValueError(f"tau_rel must be > 0, got {tau_rel}")
    a = np.asarray(a_one, dtype=float).ravel()
    tau = tau_rel * max(1.0, float(np.abs(a).max()) if a.size else 0.0)
    idx = np.where(np.abs(a) > tau)[0]
    if idx.size == 0:
        raise EmptySupportError(tau)
    return tuple(int(i) for i in idx)


def _stage2_solve(
    Phi_S: np.ndarray,
    u: np.ndarray,
    D: np.ndarray,
    V_S: np.ndarray,
    c: np.ndarray,
    epsilon_hat: float,
    fb: float,
    stage: str,
    feas_tol: float,
    opt_tol: float,
) -> tuple[np.ndarray, float]:
    """Minimize the slope constant over (a, g), then re-pick a by l1 norm."""
    k = Phi_S.shape[1]
    zero = np.zeros((Phi_S.shape[0], 1))
    A = np.vstack(
        [
            np.hstack([Phi_S, zero]),
            np.hstack([-Phi_S, zero]),
            np.hstack([V_S, -D[:, None]]),
            np.hstack([-V_S, -D[:, None]]),
        ]
    )
    b = np.concatenate(
        [u + fb, fb - u, 2.0 * epsilon_hat - c, 2.0 * epsilon_hat + c]
    )
    obj = np.zeros(k + 1)
    obj[k] = 1.0
    lower = np.full(k + 1, -np.inf)
    lower[k] = 0.0
    sol = solve(
        LinearProgram.from_dense(obj, A, b, lower=lower),
        feas_tol=feas_tol,
        opt_tol=opt_tol,
    )
    if sol.status == "infeasible":
        raise InfeasibleFitError(
            stage, "the fit and slope bands admit no coefficient vector"
        )
    if sol.status != "optimal":
        raise SolverFailure(f"{stage} solve ended {sol.status}")
    g = max(0.0, float(sol.x[k]))
    # Tie-break on the optimal face: freeze g and take the smallest-l1 a.
    # The slack is scaled so the extra slope violation stays below 1e-9.
    g_fix = g + 1e-9 / max(1.0, float(D.max()) if D.size else 1.0)
    slack = g_fix * D + 2.0 * epsilon_hat
    p = reformulate_l1_min(
        sp.csr_matrix(np.vstack([Phi_S, -Phi_S, V_S, -V_S])),
        np.concatenate([u + fb, fb - u, slack - c, slack + c]),
        k,
    )
    tie = solve(p, feas_tol=feas_tol, opt_tol=opt_tol)
    if tie.status != "optimal":
        raise SolverFailure(f"{stage} tie-break solve ended {tie.status}")
    return np.asarray(tie.x[:k], dtype=float), g


def stage2_tighten(
    Phi: np.ndarray,
    u: np.ndarray,
    y_samples: np.ndarray,
    epsilon_hat: float,
    alpha: float,
    support: tuple[int, ...],
    *,
    include_pairs: bool = True,
    fit_bound: float | None = None,
    feas_tol: float = 1e-8,
    opt_tol: float = 1e-8,
) -> tuple[np.ndarray, float]:
    """Smallest certified slope constant on a fixed support.

    Returns (a_hat, gamma_delta_s) with a_hat full length and exactly zero
    off the support. With ``include_pairs=False`` the slope bands are not
    enforced; the returned constant is then the one the fitted vector
    happens to achieve on the data.
    """
    Phi, u, Y = _check_shapes(Phi, u, y_samples)
    M = Phi.shape[1]
    S = sorted(set(int(i) for i in support))
    if not S:
        raise ValueError("support must be nonempty")
    if S[0] < 0 or S[-1] >= M:
        raise ValueError(f"support index out of range for M={M}")
    fb = _resolve_fit_bound(epsilon_hat, alpha, fit_bound)
    Phi_S = Phi[:, S]
    if len(u) >= 2:
        D, V, c = _pair_blocks(Y, u, Phi)
        V_S = V[:, S]
    else:
        D = np.zeros(0)
        V_S = np.zeros((0, len(S)))
        c = np.zeros(0)

    if include_pairs:
        a_S, g = _stage2_solve(
            Phi_S, u, D, V_S, c, epsilon_hat, fb, "stage2", feas_tol, opt_tol
        )
    else:
        # Fit bands only; the slope constant is measured, not enforced.
        p = reformulate_l1_min(
            sp.csr_matrix(np.vstack([Phi_S, -Phi_S])),
            np.concatenate([u + fb, fb - u]),
            len(S),
        )
        sol = solve(p, feas_tol=feas_tol, opt_tol=opt_tol)
        if sol.status == "infeasible":
            raise InfeasibleFitError(
                "stage2", "the fit bands admit no coefficient vector"
            )
        if sol.status != "optimal":
            raise SolverFailure(f"stage2 solve ended {sol.status}")
        a_S = np.asarray(sol.x[: len(S)], dtype=float)
        resid = np.abs(c + V_S @ a_S) - 2.0 * epsilon_hat
        tight = D <= 0
        if np.any(resid[tight] > 1e-9):
            raise InfeasibleFitError(
                "stage2",
                "coincident outputs carry inputs farther apart than the "
                "noise band allows",
            )
        wide = ~tight
        g = max(0.0, float(np.max(resid[wide] / D[wide], initial=0.0)))
    a_hat = np.zeros(M)
    a_hat[S] = a_S
    return a_hat, g


def min_feasible_gamma_delta(
    Phi: np.ndarray,
    u: np.ndarray,
    y_samples: np.ndarray,
    epsilon_hat: float,
    alpha: float,
    *,
    fit_bound: float | None = None,
    feas_tol: float = 1e-8,
    opt_tol: float = 1e-8,
) -> float:
    """Smallest slope constant any full-dictionary fit can certify.

    Used to pick a workable stage-1 budget when the estimated gains leave
    no stability margin. Raises InfeasibleFitError when even the fit bands
    alone are infeasible (a larger inflation factor is needed then).
    """
    Phi, u, Y = _check_shapes(Phi, u, y_samples)
    fb = _resolve_fit_bound(epsilon_hat, alpha, fit_bound)
    if len(u) >= 2:
        D, V, c = _pair_blocks(Y, u, Phi)
    else:
        D = np.zeros(0)
        V = np.zeros((0, Phi.shape[1]))
        c = np.zeros(0)
    try:
        _, g = _stage2_solve(
            Phi, u, D, V, c, epsilon_hat, fb, "budget", feas_tol, opt_tol
        )
    except SolverFailure:
        # Near-duplicate dictionary columns can leave the joint LP beyond
        # certification. A smallest-residual fit is still reachable; the
        # slope it measures is an upper bound, good enough to seed a
        # budget that later stages check honestly.
        resid, a_w = _chebyshev_residual(sp.csr_matrix(Phi), u)
        if resid > fb + 1e-9:
            raise
        g = _measured_slope(D, V, c, a_w, epsilon_hat)
    return g


def _measured_slope(
    D: np.ndarray, V: np.ndarray, c: np.ndarray,
    a: np.ndarray, epsilon_hat: float,
) -> float:
    """Slope constant a coefficient vector attains on the data pairs."""
    if D.size == 0:
        return 0.0
    resid = np.abs(c + V @ a) - 2.0 * epsilon_hat
    wide = D > 0
    return max(0.0, float(np.max(resid[wide] / D[wide], initial=0.0)))


def _violations(
    Phi: np.ndarray,
    u: np.ndarray,
    Y: np.ndarray,
    a: np.ndarray,
    fb: float,
    epsilon_hat: float,
    g: float,
) -> ResidualSummary:
    fit = float(np.abs(u - Phi @ a).max() - fb)
    pair = 0.0
    if len(u) >= 2:
        D, V, c = _pair_blocks(Y, u, Phi)
        pair = float(np.max(np.abs(c + V @ a) - (g * D + 2.0 * epsilon_hat)))
    return ResidualSummary(
        max_a_violation=max(fit, 0.0), max_b_violation=max(pair, 0.0)
    )


def learn_controller(
    d: Dataset,
    dictionary: BasisDictionary,
    config: LearnConfig | None = None,
) -> LearnedController:
    """Run the full pipeline: estimate constants, fit, tighten, certify.

    The dataset must be a trajectory unless the config overrides both gain
    estimates or fixes the slope budget directly. Identical inputs give a
    bitwise identical controller.
    """
    cfg = config or LearnConfig()
    Phi, u = build_regressor(d, dictionary)
    Y = d.y_array()

    if cfg.epsilon_hat is not None:
        # Supplied, not estimated: no neighborhood radius was involved.
        eps, rho_used, covered = float(cfg.epsilon_hat), math.inf, 0
    else:
        eps, rho_used, covered = estimate_noise_bound(
            controller_scatter(d), rho=cfg.rho
        )

    sel = select_alpha(Phi, u, eps, margin=cfg.margin)
    fb = sel.residual * (1.0 + cfg.margin) if sel.absolute else sel.alpha * eps

    need_gains = cfg.gamma_delta_prime is None
    gf = cfg.gamma_f_hat
    ggy = cfg.gamma_gy_hat
    if gf is None:
        gf = estimate_gamma_f(d) if need_gains else 0.0
    if ggy is None:
        ggy = estimate_gamma_gy(d) if need_gains else 0.0

    if cfg.gamma_delta_prime is not None:
        gdp = float(cfg.gamma_delta_prime)
        margin_ok = gf > 0 and (1.0 - ggy) / gf > 0
        feasible = bool(margin_ok and gdp < (1.0 - ggy) / gf)
    elif gf > 0 and (1.0 - ggy) / gf > 0:
        gdp, feasible = select_gamma_delta_prime(
            gf, ggy, theta=cfg.theta, margin=cfg.margin
        )
    else:
        mf = min_feasible_gamma_delta(
            Phi, u, Y, eps, sel.alpha, fit_bound=fb,
            feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
        )
        gdp, feasible = select_gamma_delta_prime(
            gf, ggy, theta=cfg.theta, margin=cfg.margin,
            min_feasible=mf, epsilon_hat=eps,
        )

    report = EstimationReport(
        epsilon_hat=eps,
        rho_used=rho_used,
        covered_count=covered,
        gamma_f_hat=float(gf),
        gamma_gy_hat=float(ggy),
        alpha_min=sel.alpha_min,
        alpha=sel.alpha,
        gamma_delta_prime=gdp,
        stability_margin_feasible=feasible,
        absolute_residual_mode=sel.absolute,
    )

    a_one = stage1_sparsify(
        Phi, u, Y, eps, sel.alpha, gdp,
        include_pairs=cfg.include_pairs, fit_bound=fb,
        feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
    )
    support = extract_support(a_one, cfg.tau_rel)
    try:
        a_hat, g_s = stage2_tighten(
            Phi, u, Y, eps, sel.alpha, support,
            include_pairs=cfg.include_pairs, fit_bound=fb,
            feas_tol=cfg.feas_tol, opt_tol=cfg.opt_tol,
        )
    except (InfeasibleFitError, SolverFailure):
        if not cfg.include_pairs:
            raise
        # Tightening could not be certified; near-duplicate dictionary
        # columns can defeat that LP numerically. The stage-1 vector
        # already satisfies every band at the full budget, so keep it
        # with the smaller of the budget and its measured slope.
        a_hat = np.asarray(a_one, dtype=float)
        support = tuple(int(i) for i in np.flatnonzero(a_hat != 0.0))
        if len(u) >= 2:
            Dp, Vp, cp = _pair_blocks(Y, u, Phi)
        else:
            Dp = np.zeros(0)
            Vp = np.zeros((0, Phi.shape[1]))
            cp = np.zeros(0)
        g_s = min(gdp, _measured_slope(Dp, Vp, cp, a_hat, eps))
    residuals = _violations(Phi, u, Y, a_hat, fb, eps, g_s)
    return LearnedController(
        dictionary=dictionary,
        a_hat=tuple(float(v) for v in a_hat),
        support=support,
        gamma_delta_s=float(g_s),
        a_one=tuple(float(v) for v in a_one),
        report=report,
        constraint_residuals=residuals,
    )
