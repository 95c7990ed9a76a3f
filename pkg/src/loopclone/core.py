"""Shared data types: logged datasets, plant and controller interfaces, noise.

Everything downstream (estimation, learning, simulation) works in terms of
these types. Datasets are deliberately permissive at construction time so a
malformed log can be loaded and then described by :func:`validate_dataset`;
the array accessors refuse to run until the record list is rectangular.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "validate_dataset",
    "PlantInterface",
    "ControllerInterface",
    "FunctionController",
    "NoiseModel",
    "NoiseSequences",
]


def _as_tuple_rows(y: Sequence) -> tuple[tuple[float, ...], ...]:
    rows = []
    for row in y:
        if np.isscalar(row):
            rows.append((float(row),))
        else:
            rows.append(tuple(float(v) for v in row))
    return tuple(rows)


@dataclass(frozen=True)
class Dataset:
    """An ordered log of closed-loop samples (k, y_tilde, u_tilde).

    Parameters
    ----------
    k : tuple of int
        Sample indices, normally 0..N-1 but not enforced here.
    y : tuple of tuple of float
        Measured outputs, one row per sample. Rows may be ragged at
        construction; :func:`validate_dataset` reports that as a violation.
    u : tuple of float
        Measured scalar inputs, one per sample.
    n_y : int
        Declared output dimension.
    is_trajectory : bool
        True when consecutive samples come from one closed-loop run, i.e.
        y[t+1] is the successor state of (y[t], u[t]). Scatter data sets
        (independent samples) use False.
    """

    k: tuple[int, ...]
    y: tuple[tuple[float, ...], ...]
    u: tuple[float, ...]
    n_y: int
    is_trajectory: bool = True

    @classmethod
    def from_arrays(
        cls,
        y: np.ndarray,
        u: np.ndarray,
        *,
        is_trajectory: bool = True,
        k: Sequence[int] | None = None,
    ) -> "Dataset":
        """Build from an (N, n_y) or (N,) output array and an (N,) input array."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.ndim == 1:
            y = y[:, None]
        u = np.asarray(u, dtype=float).ravel()
        if k is None:
            k = range(len(u))
        return cls(
            k=tuple(int(i) for i in k),
            y=_as_tuple_rows(y),
            u=tuple(float(v) for v in u),
            n_y=int(y.shape[1]),
            is_trajectory=is_trajectory,
        )

    def __len__(self) -> int:
        return len(self.k)

    def y_array(self) -> np.ndarray:
        """Outputs as an (N, n_y) float array. Requires a valid dataset."""
        problems = validate_dataset(self)
        if problems:
            raise ValueError(
                "dataset is not rectangular/consistent: " + problems[0]
            )
        return np.array(self.y, dtype=float).reshape(len(self), self.n_y)

    def u_array(self) -> np.ndarray:
        """Inputs as an (N,) float array. Requires a valid dataset."""
        problems = validate_dataset(self)
        if problems:
            raise ValueError(
                "dataset is not rectangular/consistent: " + problems[0]
            )
        return np.array(self.u, dtype=float)

    def subset(self, n: int) -> "Dataset":
        """First n samples as a new dataset (same trajectory flag)."""
        if not 0 < n <= len(self):
            raise ValueError(f"subset size {n} outside 1..{len(self)}")
        return Dataset(
            k=self.k[:n],
            y=self.y[:n],
            u=self.u[:n],
            n_y=self.n_y,
            is_trajectory=self.is_trajectory,
        )


def validate_dataset(data: Dataset) -> list[str]:
    """Check a dataset record by record and return human-readable violations.

    An empty list means the dataset is usable by the array accessors. Each
    violation names the offending sample and the rule it breaks.
    """
    problems: list[str] = []
    n = len(data.k)
    if len(data.y) != n or len(data.u) != n:
        problems.append(
            f"field lengths differ: k has {n}, y has {len(data.y)}, "
            f"u has {len(data.u)} (rule: parallel fields)"
        )
        return problems
    if n == 0:
        problems.append("dataset is empty (rule: at least one sample)")
        return problems
    if data.n_y < 1:
        problems.append(f"n_y is {data.n_y} (rule: n_y >= 1)")
    seen: set[int] = set()
    for i in range(n):
        if data.k[i] in seen:
            problems.append(
                f"sample {i}: duplicate index k={data.k[i]} (rule: unique k)"
            )
        seen.add(data.k[i])
        row = data.y[i]
        if len(row) != data.n_y:
            problems.append(
                f"sample {i}: y has {len(row)} entries, expected n_y={data.n_y} "
                "(rule: rectangular outputs)"
            )
        for j, v in enumerate(row):
            if not math.isfinite(v):
                problems.append(
                    f"sample {i}: y[{j}] = {v} (rule: finite values)"
                )
        if not math.isfinite(data.u[i]):
            problems.append(
                f"sample {i}: u = {data.u[i]} (rule: finite values)"
            )
    if data.is_trajectory:
        for i in range(1, n):
            if data.k[i] != data.k[i - 1] + 1:
                problems.append(
                    f"sample {i}: k jumps from {data.k[i - 1]} to {data.k[i]} "
                    "(rule: consecutive k on trajectories)"
                )
    return problems


def _clamp_vec(x: np.ndarray, box: np.ndarray) -> tuple[np.ndarray, bool]:
    clipped = np.clip(x, box[:, 0], box[:, 1])
    return clipped, bool(np.any(clipped != x))


class PlantInterface(ABC):
    """A discrete-time plant y(t+1) = f(y(t), u(t), e_s(t)) on known boxes.

    Subclasses implement :meth:`_transition`; callers use :meth:`step`, which
    clamps the successor state into the output box and reports whether
    clamping occurred. Declared gain constants are optional and may be None
    when the modeller has nothing to declare.
    """

    def __init__(
        self,
        y_box: Sequence[Sequence[float]],
        u_bounds: Sequence[float],
        es_box: Sequence[Sequence[float]],
        *,
        gamma_f: float | None = None,
        gamma_gy: float | None = None,
        gamma_ge: float | None = None,
    ):
        self.y_box = np.asarray(y_box, dtype=float).reshape(-1, 2)
        self.u_bounds = np.asarray(u_bounds, dtype=float).reshape(2)
        self.es_box = np.asarray(es_box, dtype=float).reshape(-1, 2)
        for name, box in (("y_box", self.y_box), ("es_box", self.es_box)):
            if np.any(box[:, 0] > box[:, 1]) or not np.all(np.isfinite(box)):
                raise ValueError(f"{name} must be finite with lo <= hi")
        if not (self.u_bounds[0] < self.u_bounds[1]):
            raise ValueError("u_bounds must satisfy lo < hi")
        self.gamma_f = gamma_f
        self.gamma_gy = gamma_gy
        self.gamma_ge = gamma_ge

    @property
    def n_y(self) -> int:
        return self.y_box.shape[0]

    @abstractmethod
    def _transition(
        self, y: np.ndarray, u: float, e_s: np.ndarray
    ) -> np.ndarray:
        """Raw successor state, before any clamping."""

    def step(
        self, y: np.ndarray, u: float, e_s: np.ndarray
    ) -> tuple[np.ndarray, bool]:
        """One plant step. Returns (y_next, clamped).

        y_next is the raw transition clipped into the output box;
        ``clamped`` flags whether any coordinate hit a box edge.
        """
        y = np.asarray(y, dtype=float).reshape(self.n_y)
        e_s = np.asarray(e_s, dtype=float).reshape(self.es_box.shape[0])
        raw = np.asarray(
            self._transition(y, float(u), e_s), dtype=float
        ).reshape(self.n_y)
        return _clamp_vec(raw, self.y_box)


class ControllerInterface(ABC):
    """A static output-feedback law u = kappa(y) with a known input range."""

    def __init__(
        self, u_bounds: Sequence[float], *, lipschitz: float | None = None
    ):
        self.u_bounds = np.asarray(u_bounds, dtype=float).reshape(2)
        if not (self.u_bounds[0] < self.u_bounds[1]):
            raise ValueError("u_bounds must satisfy lo < hi")
        self.lipschitz = lipschitz

    @abstractmethod
    def _law(self, y: np.ndarray) -> float:
        """Raw control value, before clamping."""

    def eval(self, y: np.ndarray) -> float:
        """Control input for output y, clamped into the input range."""
        raw = float(self._law(np.atleast_1d(np.asarray(y, dtype=float))))
        return float(np.clip(raw, self.u_bounds[0], self.u_bounds[1]))


class FunctionController(ControllerInterface):
    """Wrap a plain callable y -> u as a controller."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], float],
        u_bounds: Sequence[float],
        *,
        lipschitz: float | None = None,
    ):
        super().__init__(u_bounds, lipschitz=lipschitz)
        self._fn = fn

    def _law(self, y: np.ndarray) -> float:
        return float(self._fn(y))


@dataclass(frozen=True)
class NoiseSequences:
    """Noise draws for one run: input noise, output noise, process noise."""

    e_u: np.ndarray
    e_y: np.ndarray
    e_s: np.ndarray


@dataclass(frozen=True)
class NoiseModel:
    """Seeded bounded noise for data generation and simulation.

    kind "uniform_box" draws every channel i.i.d. uniform on the symmetric
    interval given by its amplitude; kind "zero" returns zeros of the same
    shapes, ignoring the seed. Amplitudes are per-channel for e_y and e_s
    and scalar for e_u.

    Draws come from ``numpy.random.default_rng(seed)`` in a fixed order
    (the whole e_u block, then e_y channel by channel, then e_s channel by
    channel), so a (kind, amplitudes, seed, T) tuple pins the sequences
    bitwise.
    """

    kind: str
    eps_u: float = 0.0
    eps_y: tuple[float, ...] = field(default_factory=tuple)
    eps_s: tuple[float, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform_box", "zero"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.eps_u < 0 or any(a < 0 for a in self.eps_y) or any(
            a < 0 for a in self.eps_s
        ):
            raise ValueError("noise amplitudes must be nonnegative")

    def sequences(self, T: int) -> NoiseSequences:
        """Noise sequences of length T, shapes (T,), (T, n_y), (T, n_s)."""
        if T < 0:
            raise ValueError("T must be nonnegative")
        ny, ns = len(self.eps_y), len(self.eps_s)
        if self.kind == "zero":
            return NoiseSequences(
                e_u=np.zeros(T), e_y=np.zeros((T, ny)), e_s=np.zeros((T, ns))
            )
        rng = np.random.default_rng(self.seed)
        e_u = rng.uniform(-self.eps_u, self.eps_u, size=T)
        e_y = np.empty((T, ny))
        for j, amp in enumerate(self.eps_y):
            e_y[:, j] = rng.uniform(-amp, amp, size=T)
        e_s = np.empty((T, ns))
        for j, amp in enumerate(self.eps_s):
            e_s[:, j] = rng.uniform(-amp, amp, size=T)
        return NoiseSequences(e_u=e_u, e_y=e_y, e_s=e_s)
