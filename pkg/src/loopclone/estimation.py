"""Noise-bound and Lipschitz-constant estimation from scattered samples.

The estimators all operate on the same generic picture: noisy values
z(k) = F(w(k)) + e(k) of an unknown Lipschitz function F, with |e| bounded
by an unknown amplitude. The noise amplitude is recovered from the spread
of z over small neighborhoods in w, and the Lipschitz constant from the
steepest pairwise secant after discounting twice the noise bound. Two thin
wrappers apply this machinery to trajectory logs to bound the plant's
sensitivity to the input and the closed loop's output contraction rate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import min_pairwise_dist, neighborhood_spreads, secant_excess_max
from .core import Dataset

__all__ = [
    "ScatterData",
    "EstimationReport",
    "RhoTooSmallError",
    "NoInformativePairsError",
    "estimate_noise_bound",
    "estimate_lipschitz",
    "estimate_gamma_f",
    "estimate_gamma_gy",
    "controller_scatter",
]

_MAX_RHO_DOUBLINGS = 20


class RhoTooSmallError(ValueError):
    """Raised when an explicit neighborhood radius captures no pairs.

    Attributes
    ----------
    min_distance : float
        Smallest pairwise distance in the data; any radius at or above
        this value is guaranteed to cover at least one pair.
    """

    def __init__(self, rho: float, min_distance: float):
        super().__init__(
            f"rho too small: {rho!r} captures no neighbor pairs "
            f"(minimal pairwise distance is {min_distance!r})"
        )
        self.min_distance = min_distance


class NoInformativePairsError(ValueError):
    """Raised when every regressor point coincides with every other."""

    def __init__(self) -> None:
        super().__init__(
            "no informative pairs: all regressor points coincide, "
            "no secant slope can be formed"
        )


@dataclass(frozen=True)
class ScatterData:
    """Regression samples (w, z) with vector w and scalar z.

    Rows of ``w`` are regressor points; ``z`` holds the matching scalar
    responses. At least two points are required, all of one dimension.
    """

    w: tuple[tuple[float, ...], ...]
    z: tuple[float, ...]

    @classmethod
    def from_arrays(cls, w: np.ndarray, z: np.ndarray) -> "ScatterData":
        """Build from an (N, n_w) or (N,) regressor array and (N,) responses."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.ndim == 1:
            w = w[:, None]
        z = np.asarray(z, dtype=float).ravel()
        return cls(
            w=tuple(tuple(float(v) for v in row) for row in w),
            z=tuple(float(v) for v in z),
        )

    def __post_init__(self) -> None:
        if len(self.w) != len(self.z):
            raise ValueError(
                f"{len(self.w)} regressor rows but {len(self.z)} responses"
            )
        if len(self.w) < 2:
            raise ValueError("at least 2 points required")
        widths = {len(row) for row in self.w}
        if len(widths) != 1:
            raise ValueError(f"inconsistent regressor dimensions: {sorted(widths)}")
        flat = [v for row in self.w for v in row] + list(self.z)
        if not all(np.isfinite(flat)):
            raise ValueError("non-finite value in scatter data")

    def __len__(self) -> int:
        return len(self.z)

    def w_array(self) -> np.ndarray:
        return np.ascontiguousarray(self.w, dtype=np.float64)

    def z_array(self) -> np.ndarray:
        return np.ascontiguousarray(self.z, dtype=np.float64)


@dataclass(frozen=True)
class EstimationReport:
    """Estimated constants feeding the controller-learning pipeline.

    Fields
    ------
    epsilon_hat : noise amplitude estimate for the controller data.
    rho_used : neighborhood radius that produced epsilon_hat.
    covered_count : number of samples with at least one neighbor.
    gamma_f_hat : plant input-sensitivity Lipschitz estimate.
    gamma_gy_hat : closed-loop output-contraction Lipschitz estimate.
    alpha_min : smallest residual inflation that keeps the fit feasible.
    alpha : inflation actually used (alpha_min plus a safety margin).
    gamma_delta_prime : error-function Lipschitz budget for stage 1.
    stability_margin_feasible : True when (1 - gamma_gy_hat)/gamma_f_hat
        is positive, i.e. the budget could be taken below that margin.
    absolute_residual_mode : True when epsilon_hat was zero and the fit
        constraint fell back to an absolute residual bound.
    """

    epsilon_hat: float
    rho_used: float
    covered_count: int
    gamma_f_hat: float
    gamma_gy_hat: float
    alpha_min: float
    alpha: float
    gamma_delta_prime: float
    stability_margin_feasible: bool
    absolute_residual_mode: bool = False

    def __post_init__(self) -> None:
        if self.epsilon_hat < 0:
            raise ValueError("epsilon_hat must be >= 0")
        if self.rho_used <= 0:
            raise ValueError("rho_used must be > 0")
        if self.gamma_f_hat < 0 or self.gamma_gy_hat < 0:
            raise ValueError("Lipschitz estimates must be >= 0")
        if self.alpha < max(1.0, self.alpha_min * (1.0 - 1e-12)):
            raise ValueError(
                f"alpha {self.alpha} below max(1, alpha_min={self.alpha_min})"
            )
        if self.gamma_delta_prime <= 0:
            raise ValueError("gamma_delta_prime must be > 0")
        if self.stability_margin_feasible:
            margin = (1.0 - self.gamma_gy_hat) / self.gamma_f_hat
            if not self.gamma_delta_prime < margin:
                raise ValueError(
                    f"gamma_delta_prime {self.gamma_delta_prime} not below "
                    f"the stability margin {margin}"
                )


def _max_pairwise_dist(W: np.ndarray) -> float:
    """Largest pairwise inf-norm distance, chunked to bound memory."""
    n = W.shape[0]
    best = 0.0
    step = 512
    for s in range(0, n, step):
        block = W[s : s + step]
        d = np.abs(block[:, None, :] - W[None, :, :]).max(axis=2)
        best = max(best, float(d.max()))
    return best


def estimate_noise_bound(
    s: ScatterData, rho: float | str = "auto"
) -> tuple[float, float, int]:
    """Estimate the noise amplitude from neighborhood spreads of z.

    Each sample's neighborhood collects the other points within inf-norm
    radius rho of its regressor; the spread of z over the neighborhood
    (sample included) bounds twice the local noise, and the estimate
    averages half that spread over all covered samples.

    With rho="auto" the radius starts at 1% of the data diameter and is
    doubled (at most 20 times) until some sample has a neighbor. An
    explicit rho that captures no pairs raises :class:`RhoTooSmallError`.

    Returns (epsilon_hat, rho_used, covered_count).
    """
    W = s.w_array()
    z = s.z_array()
    auto = isinstance(rho, str)
    if auto:
        if rho != "auto":
            raise ValueError(f"rho must be a positive number or 'auto', got {rho!r}")
        current = 0.01 * _max_pairwise_dist(W)
    else:
        current = float(rho)
        if current <= 0:
            raise ValueError(f"rho must be > 0, got {current}")
    for _ in range(_MAX_RHO_DOUBLINGS + 1):
        spread, has = neighborhood_spreads(W, z, max(current, 0.0))
        covered = int(has.sum())
        if covered:
            eps = float(spread[has].sum()) / (2.0 * covered)
            return eps, max(current, 0.0), covered
        if not auto:
            raise RhoTooSmallError(current, min_pairwise_dist(W))
        # No sample has a neighbor yet; widen and retry.
        current = 2.0 * current if current > 0 else np.finfo(float).tiny
    raise RhoTooSmallError(current, min_pairwise_dist(W))


def estimate_lipschitz(s: ScatterData, epsilon_hat: float) -> float:
    """Steepest noise-discounted secant slope over all sample pairs.

    A pair contributes (|z(k) - z(l)| - 2*epsilon_hat) / dist(w(k), w(l))
    when the numerator is positive, and zero otherwise; the estimate is
    the maximum contribution. Raises :class:`NoInformativePairsError`
    when every pair of regressor points coincides.
    """
    if epsilon_hat < 0:
        raise ValueError(f"epsilon_hat must be >= 0, got {epsilon_hat}")
    best, found = secant_excess_max(s.w_array(), s.z_array(), 2.0 * epsilon_hat)
    if not found:
        raise NoInformativePairsError()
    return max(float(best), 0.0)


def _transition_views(d: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u(k), y(k), y(k+1)) arrays for the N-1 logged transitions."""
    if not d.is_trajectory:
        raise ValueError(
            "transition-based estimation needs trajectory data "
            "(dataset has is_trajectory=False)"
        )
    y = d.y_array()
    u = d.u_array()
    if len(d) < 2:
        raise ValueError("at least 2 samples required for transition estimates")
    return u[:-1], y[:-1], y[1:]


def _componentwise_gamma(
    w: np.ndarray, z_next: np.ndarray, epsilon_hat: float | None
) -> float:
    """Max over output components of the secant-based Lipschitz estimate.

    When no noise bound is supplied, one is estimated per component from
    the same scatter data and the componentwise maximum is shared, which
    matches reading the vector noise bound as an inf-norm ball radius.
    """
    scatters = [
        ScatterData.from_arrays(w, z_next[:, j]) for j in range(z_next.shape[1])
    ]
    if epsilon_hat is None:
        epsilon_hat = max(
            estimate_noise_bound(sc)[0] for sc in scatters
        )
    return max(estimate_lipschitz(sc, epsilon_hat) for sc in scatters)


def estimate_gamma_f(d: Dataset, epsilon_hat: float | None = None) -> float:
    """Plant input-sensitivity constant from (u(k), y(k+1)) transitions.

    Treats each next-output component as a noisy function of the applied
    input alone; whatever the current state contributes lands in the
    noise term. ``epsilon_hat`` overrides the internally estimated bound.
    """
    u_now, _, y_next = _transition_views(d)
    return _componentwise_gamma(u_now[:, None], y_next, epsilon_hat)


def estimate_gamma_gy(d: Dataset, epsilon_hat: float | None = None) -> float:
    """Closed-loop contraction constant from (y(k), y(k+1)) transitions.

    Same construction as :func:`estimate_gamma_f` with the current output
    as the regressor.
    """
    _, y_now, y_next = _transition_views(d)
    return _componentwise_gamma(y_now, y_next, epsilon_hat)


def controller_scatter(d: Dataset) -> ScatterData:
    """Scatter view (w=y(k), z=u(k)) of the data the controller acted on."""
    return ScatterData.from_arrays(d.y_array(), d.u_array())
