"""Basis-function dictionaries for the parametric controller representation.

A dictionary is a homogeneous family (gaussian, polynomial, sigmoid or
trigonometric) of M scalar functions on a box. Each function carries a
closed-form Lipschitz constant with respect to the max norm on that box;
those constants feed the learned controller's gain bound.

Parameter layout per function, by family:

* gaussian        ``(width, c_1, ..., c_n)``   value ``exp(-width * ||y - c||_2^2)``
* polynomial      ``(b_1, ..., b_n)``          value ``prod_i y_i^{b_i}`` (integer b_i >= 0)
* sigmoid         ``(bias, w_1, ..., w_n)``    value ``1 / (1 + exp(-(w.y + bias)))``
* trigonometric   ``(phase, w_1, ..., w_n)``   value ``sin(w.y + phase)``
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset

__all__ = [
    "BasisDictionary",
    "BasisDiagnosis",
    "evaluate_row",
    "gaussian_from_data",
    "polynomial_dictionary",
    "diagnose_basis",
]

_FAMILIES = ("gaussian", "polynomial", "sigmoid", "trigonometric")

FORMAT_HEADER = "# loopclone-basis v1"


def _box_radii(y_box: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(y_box[:, 0]), np.abs(y_box[:, 1]))


def _lipschitz_one(family: str, p: tuple[float, ...], y_box: np.ndarray) -> float:
    """Max-norm Lipschitz constant of one basis function on the box.

    Each bound is the maximum 1-norm of the gradient: gaussian uses the
    global radial maximum (box-independent), polynomial bounds each partial
    derivative by the componentwise box radii, sigmoid uses the 1/4 slope
    cap of the logistic, and the sinusoid's derivative is capped by 1.
    """
    n = y_box.shape[0]
    if family == "gaussian":
        width = p[0]
        return float(np.sqrt(2.0 * width / np.e) * np.sqrt(n))
    if family == "polynomial":
        radii = _box_radii(y_box)
        total = 0.0
        for i in range(n):
            b = p[i]
            if b == 0:
                continue
            term = b * radii[i] ** (b - 1)
            for j in range(n):
                if j != i:
                    term *= radii[j] ** p[j]
            total += term
        return float(total)
    if family == "sigmoid":
        return float(np.sum(np.abs(p[1:])) / 4.0)
    if family == "trigonometric":
        return float(np.sum(np.abs(p[1:])))
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class BasisDictionary:
    """An ordered, immutable family of M Lipschitz basis functions on a box.

    ``params[i]`` holds the i-th function's parameters in the family's
    layout (see module docstring); ``y_box`` is the domain as ``((lo, hi),
    ...)`` per output component. ``lipschitz_constants()`` returns the
    recorded closed-form constants, one per function.
    """

    family: str
    params: tuple[tuple[float, ...], ...]
    y_box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if len(self.params) < 1:
            raise ValueError("dictionary needs at least one function")
        n = len(self.y_box)
        expected = n if self.family == "polynomial" else n + 1
        for i, p in enumerate(self.params):
            if len(p) != expected:
                raise ValueError(
                    f"function {i}: {len(p)} parameters, expected {expected} "
                    f"for family {self.family!r} with n_y={n}"
                )
        if self.family == "gaussian" and any(p[0] <= 0 for p in self.params):
            raise ValueError("gaussian width must be positive")
        if self.family == "polynomial":
            for i, p in enumerate(self.params):
                if any(b != int(b) or b < 0 for b in p):
                    raise ValueError(
                        f"function {i}: polynomial exponents must be "
                        "nonnegative integers"
                    )
        box = self._box()
        if np.any(box[:, 0] > box[:, 1]) or not np.all(np.isfinite(box)):
            raise ValueError("y_box must be finite with lo <= hi")

    def _box(self) -> np.ndarray:
        return np.asarray(self.y_box, dtype=float).reshape(-1, 2)

    @property
    def M(self) -> int:
        return len(self.params)

    @property
    def n_y(self) -> int:
        return len(self.y_box)

    def __len__(self) -> int:
        return self.M

    def check_domain(self, Y: np.ndarray) -> None:
        """Raise ValueError naming the first out-of-box component of Y."""
        box = self._box()
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        # 1e-9 per-component tolerance on the box edges.
        low = Y < box[None, :, 0] - 1e-9
        high = Y > box[None, :, 1] + 1e-9
        bad = low | high
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(
                f"point {r}: component {c} = {float(Y[r, c])!r} outside "
                f"domain [{float(box[c, 0])!r}, {float(box[c, 1])!r}]"
            )

    def evaluate_matrix(self, Y: np.ndarray) -> np.ndarray:
        """Evaluate all functions at all rows of Y. Returns (N, M).

        Rows must lie in the domain box up to a 1e-9 tolerance.
        """
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.n_y:
            raise ValueError(
                f"points have {Y.shape[1]} components, expected {self.n_y}"
            )
        self.check_domain(Y)
        P = np.asarray(self.params, dtype=float)
        if self.family == "gaussian":
            widths, centers = P[:, 0], P[:, 1:]
            sq = (
                np.sum(Y**2, axis=1)[:, None]
                - 2.0 * Y @ centers.T
                + np.sum(centers**2, axis=1)[None, :]
            )
            # Rounding may drive tiny squared distances negative.
            return np.exp(-widths[None, :] * np.maximum(sq, 0.0))
        if self.family == "polynomial":
            cols = [
                np.prod(Y ** P[j][None, :], axis=1) for j in range(self.M)
            ]
            return np.stack(cols, axis=1)
        offsets, weights = P[:, 0], P[:, 1:]
        Z = Y @ weights.T + offsets[None, :]
        if self.family == "sigmoid":
            return 1.0 / (1.0 + np.exp(-Z))
        return np.sin(Z)

    def lipschitz_constants(self) -> np.ndarray:
        """Recorded closed-form max-norm Lipschitz constant per function."""
        box = self._box()
        return np.array(
            [_lipschitz_one(self.family, p, box) for p in self.params]
        )

    def to_text(self) -> str:
        """Serialize to the versioned plain-text format (exact round-trip)."""
        lines = [FORMAT_HEADER, f"family {self.family}", f"n_y {self.n_y}"]
        for lo, hi in self.y_box:
            lines.append(f"box {lo!r} {hi!r}")
        lines.append(f"M {self.M}")
        for p in self.params:
            lines.append("fn " + " ".join(repr(v) for v in p))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BasisDictionary":
        """Parse the format written by :meth:`to_text`."""
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError(f"expected header {FORMAT_HEADER!r}")
        fields: dict[str, str] = {}
        box: list[tuple[float, float]] = []
        fns: list[tuple[float, ...]] = []
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            if key == "box":
                lo, hi = rest.split()
                box.append((float(lo), float(hi)))
            elif key == "fn":
                fns.append(tuple(float(v) for v in rest.split()))
            else:
                fields[key] = rest
        try:
            family = fields["family"]
            n_y = int(fields["n_y"])
            M = int(fields["M"])
        except KeyError as exc:
            raise ValueError(f"missing field {exc.args[0]!r}") from None
        if len(box) != n_y:
            raise ValueError(f"{len(box)} box lines, expected n_y={n_y}")
        if len(fns) != M:
            raise ValueError(f"{len(fns)} function lines, expected M={M}")
        return cls(family=family, params=tuple(fns), y_box=tuple(box))


def evaluate_row(dictionary: BasisDictionary, y: Sequence[float]) -> np.ndarray:
    """All M basis values at a single point y inside the domain box."""
    return dictionary.evaluate_matrix(np.atleast_1d(np.asarray(y, float))[None, :])[0]


def gaussian_from_data(
    d: Dataset, width: float, *, y_box: Sequence[Sequence[float]] | None = None
) -> BasisDictionary:
    """One gaussian per data point, centered there, with a shared width.

    The domain defaults to the data's bounding box; pass ``y_box`` to widen
    it (e.g. to the plant's output box) so the dictionary can be evaluated
    on a full grid.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    Y = d.y_array()
    if y_box is None:
        box = np.stack([Y.min(axis=0), Y.max(axis=0)], axis=1)
    else:
        box = np.asarray(y_box, dtype=float).reshape(-1, 2)
    params = tuple((float(width), *map(float, row)) for row in Y)
    return BasisDictionary(
        family="gaussian",
        params=params,
        y_box=tuple((float(lo), float(hi)) for lo, hi in box),
    )


def polynomial_dictionary(
    y_box: Sequence[Sequence[float]], max_degree: int
) -> BasisDictionary:
    """All monomials of total degree <= max_degree on the box.

    Multi-indices are enumerated by total degree, then lexicographically,
    so for one output the functions are 1, y, y^2, ..., y^max_degree.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    box = np.asarray(y_box, dtype=float).reshape(-1, 2)
    n = box.shape[0]
    exps: list[tuple[float, ...]] = []
    for total in range(max_degree + 1):
        for combo in itertools.product(range(total + 1), repeat=n):
            if sum(combo) == total:
                exps.append(tuple(float(b) for b in combo))
    return BasisDictionary(
        family="polynomial",
        params=tuple(exps),
        y_box=tuple((float(lo), float(hi)) for lo, hi in box),
    )


@dataclass(frozen=True)
class BasisDiagnosis:
    """Outcome of the basis-family sanity check after a learning run."""

    verdict: str
    alpha: float
    sparsity_ratio: float


def diagnose_basis(
    result,
    report,
    alpha_small: float = 1.2,
    sparsity_max: float = 0.3,
) -> BasisDiagnosis:
    """Judge whether the basis family fits the data.

    A well-matched family needs only a small inflation of the noise bound
    (alpha close to 1) and a sparse coefficient vector. A large alpha
    dominates: it means the dictionary cannot reproduce the data at the
    noise level no matter the support.
    """
    alpha = float(report.alpha)
    ratio = len(result.support) / result.dictionary.M
    if alpha > alpha_small:
        verdict = "reject_large_alpha"
    elif ratio > sparsity_max:
        verdict = "reject_not_sparse"
    else:
        verdict = "accept"
    return BasisDiagnosis(verdict=verdict, alpha=alpha, sparsity_ratio=ratio)
