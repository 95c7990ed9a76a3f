"""Closed-loop simulation, deviation measurement and synthetic benchmarks.

The simulators here close the loop between a plant and a controller, log
trajectories, and measure how far a loop driven by a learned law drifts
from the reference loop under identical process noise. Grid measurement
of the controller mismatch and seeded synthetic data generators round out
the toolkit used by the certification experiments.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ControllerInterface,
    Dataset,
    FunctionController,
    NoiseSequences,
    PlantInterface,
)
from .stability import StabilityCertificate, deviation_bound

__all__ = [
    "SimulationError",
    "Trajectory",
    "DeviationSeries",
    "simulate",
    "deviation_run",
    "grid_error_lipschitz",
    "generate_example_dataset",
    "benchmark_plant",
    "BENCHMARK_KINDS",
]


class SimulationError(RuntimeError):
    """A loop left the numeric domain; the message names the step."""


@dataclass(frozen=True)
class Trajectory:
    """One closed-loop run: outputs, applied inputs, clamp log.

    ``y`` holds T+1 output vectors starting at the requested initial
    condition, ``u`` the T inputs actually applied, and ``clamp_events``
    the step indices t at which the plant clipped y(t+1) into its box.
    """

    y: tuple[tuple[float, ...], ...]
    u: tuple[float, ...]
    clamp_events: tuple[int, ...]

    def __post_init__(self):
        if len(self.y) != len(self.u) + 1:
            raise ValueError(
                f"{len(self.y)} outputs but {len(self.u)} inputs "
                "(need one more output than inputs)"
            )
        T = len(self.u)
        if any(not 0 <= t < T for t in self.clamp_events):
            raise ValueError("clamp event index outside 0..T-1")

    def y_array(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)

    def u_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float)


@dataclass(frozen=True)
class DeviationSeries:
    """Gap between the learned-law loop and the reference loop over time.

    ``xi[t]`` is the output difference at step t, ``bound[t]`` the
    analytic bound for that step, and ``dominated`` records whether the
    measured gap stayed below the bound (with 1e-9 slack) at every step.
    """

    xi: tuple[tuple[float, ...], ...]
    bound: tuple[float, ...]
    dominated: bool

    def __post_init__(self):
        if len(self.xi) != len(self.bound):
            raise ValueError(
                f"{len(self.xi)} deviations but {len(self.bound)} bounds"
            )
        measured = all(
            max(abs(v) for v in row) <= b + 1e-9
            for row, b in zip(self.xi, self.bound)
        )
        if self.dominated != measured:
            raise ValueError(
                f"dominated={self.dominated} inconsistent with the series"
            )

    def xi_array(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=float)


def _noise_block(seq, T: int, width: int, name: str) -> np.ndarray:
    """Normalize a noise sequence argument to a (T, width) float array."""
    if seq is None:
        return np.zeros((T, width))
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] < T:
        raise ValueError(
            f"{name} has {arr.shape[0]} entries, need at least T={T}"
        )
    if arr.shape[1] != width:
        raise ValueError(
            f"{name} has width {arr.shape[1]}, expected {width}"
        )
    return arr[:T]


def simulate(
    plant: PlantInterface,
    ctrl: ControllerInterface,
    y0: Sequence[float],
    es_seq,
    ey_seq,
    T: int,
) -> Trajectory:
    """Run the loop y(t+1) = plant(y(t), ctrl(y(t) + e_y(t)), e_s(t)).

    The feedback the controller sees is the noise-corrupted output; the
    plant is driven by the clamped control value. Deterministic for
    identical inputs. Pass None for a noise sequence to mean zeros.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    y = np.asarray(y0, dtype=float).reshape(plant.n_y)
    box = plant.y_box
    if np.any(y < box[:, 0] - 1e-9) or np.any(y > box[:, 1] + 1e-9):
        raise ValueError(f"y0 {y.tolist()} outside the plant output box")
    es = _noise_block(es_seq, T, plant.es_box.shape[0], "es_seq")
    ey = _noise_block(ey_seq, T, plant.n_y, "ey_seq")
    ys = [tuple(float(v) for v in y)]
    us: list[float] = []
    clamps: list[int] = []
    for t in range(T):
        u = ctrl.eval(y + ey[t])
        y, clamped = plant.step(y, u, es[t])
        if not np.all(np.isfinite(y)):
            raise SimulationError(f"non-finite output at step {t}")
        us.append(float(u))
        if clamped:
            clamps.append(t)
        ys.append(tuple(float(v) for v in y))
    return Trajectory(y=tuple(ys), u=tuple(us), clamp_events=tuple(clamps))


def deviation_run(
    plant: PlantInterface,
    kappa_ref: ControllerInterface,
    kappa_hat: ControllerInterface,
    y0: Sequence[float],
    xi0: Sequence[float],
    seqs: NoiseSequences,
    T: int,
    cert: StabilityCertificate,
) -> DeviationSeries:
    """Measure the gap between the two loops under shared process noise.

    The reference loop runs from y0 with exact feedback; the learned-law
    loop runs from y0 + xi0 with feedback corrupted by seqs.e_y. Both see
    the same seqs.e_s. Bounds come from the certificate, which must be
    contractive.
    """
    y0 = np.asarray(y0, dtype=float).reshape(plant.n_y)
    xi0 = np.asarray(xi0, dtype=float).reshape(plant.n_y)
    ref = simulate(plant, kappa_ref, y0, seqs.e_s, None, T)
    hat = simulate(plant, kappa_hat, y0 + xi0, seqs.e_s, seqs.e_y, T)
    xi = hat.y_array() - ref.y_array()
    es = _noise_block(seqs.e_s, T, plant.es_box.shape[0], "e_s")
    es_norm = float(np.abs(es).max()) if T > 0 else 0.0
    xi0_norm = float(np.abs(xi0).max())
    y0_norm = float(np.abs(y0).max())
    bounds = tuple(
        deviation_bound(cert, xi0_norm, y0_norm, es_norm, t)
        for t in range(T + 1)
    )
    dominated = bool(
        np.all(np.abs(xi).max(axis=1) <= np.asarray(bounds) + 1e-9)
    )
    return DeviationSeries(
        xi=tuple(tuple(float(v) for v in row) for row in xi),
        bound=bounds,
        dominated=dominated,
    )


_GRID_PAIR_SAMPLES = 200_000


def grid_error_lipschitz(
    kappa_ref: ControllerInterface,
    kappa_hat: ControllerInterface,
    grid,
) -> tuple[float, float, float]:
    """Measure the controller mismatch on a grid of output points.

    Returns (slope, at_origin, worst): the largest secant slope of the
    mismatch over point pairs, its magnitude at the grid point nearest the
    origin, and its largest magnitude anywhere on the grid. One-output
    grids use every pair; wider grids use all adjacent pairs plus 200000
    seeded random pairs.
    """
    G = np.asarray(grid, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    n = G.shape[0]
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    delta = np.array(
        [kappa_ref.eval(p) - kappa_hat.eval(p) for p in G]
    )
    if G.shape[1] == 1:
        l_idx, k_idx = np.triu_indices(n, k=1)
    else:
        adj = np.arange(n - 1)
        rng = np.random.default_rng(0)
        rl = rng.integers(0, n, _GRID_PAIR_SAMPLES)
        rk = rng.integers(0, n, _GRID_PAIR_SAMPLES)
        l_idx = np.concatenate([adj, rl])
        k_idx = np.concatenate([adj + 1, rk])
    dist = np.abs(G[l_idx] - G[k_idx]).max(axis=1)
    keep = dist > 0
    if not np.any(keep):
        raise ValueError("degenerate grid: all points coincide")
    slopes = np.abs(delta[l_idx[keep]] - delta[k_idx[keep]]) / dist[keep]
    origin = int(np.argmin(np.abs(G).max(axis=1)))
    return (
        float(slopes.max()),
        float(abs(delta[origin])),
        float(np.abs(delta).max()),
    )


def _example_law(y: np.ndarray) -> float:
    t = float(y[0])
    return 2.0 * t * np.exp(-t * t) * np.cos(8.0 * t)


def generate_example_dataset(
    N: int, seed: int, *, noise_amplitude: float = 0.05
) -> tuple[Dataset, ControllerInterface]:
    """Seeded scatter data from the bumpy reference law on [-3, 3].

    Outputs are drawn i.i.d. uniform on [-3, 3]; inputs are the reference
    law's value plus i.i.d. uniform noise of the given amplitude. Returns
    the dataset (is_trajectory=False) and the reference law wrapped as a
    controller.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if noise_amplitude < 0:
        raise ValueError("noise_amplitude must be >= 0")
    rng = np.random.default_rng(seed)
    y = rng.uniform(-3.0, 3.0, N)
    d = rng.uniform(-noise_amplitude, noise_amplitude, N)
    u = np.array([_example_law(np.array([t])) for t in y]) + d
    data = Dataset.from_arrays(y, u, is_trajectory=False)
    ref = FunctionController(_example_law, (-1.0, 1.0))
    return data, ref


class _TanhLoopPlant(PlantInterface):
    """Saturating scalar plant 0.5 tanh(y) + 0.5 u + e_s on [-2, 2]."""

    def _transition(self, y, u, e_s):
        return 0.5 * np.tanh(y) + 0.5 * u + e_s


BENCHMARK_KINDS = ("tanh-loop",)


def benchmark_plant(kind: str) -> tuple[PlantInterface, ControllerInterface]:
    """A registered synthetic plant plus its reference feedback law.

    kind "tanh-loop": scalar plant 0.5 tanh(y) + 0.5 u + e_s on the boxes
    Y = U = [-2, 2], E_s = [-0.01, 0.01], with the linear reference law
    u = -0.4 y. Declared gains: input sensitivity 0.5, closed-loop output
    contraction 0.7 (triangle bound 0.5 + 0.5 * 0.4), disturbance gain 1.
    """
    if kind != "tanh-loop":
        raise ValueError(
            f"unknown benchmark kind {kind!r}; registered: {BENCHMARK_KINDS}"
        )
    plant = _TanhLoopPlant(
        y_box=[(-2.0, 2.0)],
        u_bounds=(-2.0, 2.0),
        es_box=[(-0.01, 0.01)],
        gamma_f=0.5,
        gamma_gy=0.7,
        gamma_ge=1.0,
    )
    kappa = FunctionController(
        lambda y: -0.4 * float(y[0]), (-2.0, 2.0), lipschitz=0.4
    )
    return plant, kappa
