"""Closed-form stability bounds for the identified feedback loop.

All operations are pure arithmetic on a small set of gain constants. The
central quantity is gamma = gamma_f * gamma_delta + gamma_gy: with gamma
below one, the loop driven by the learned law inherits a geometric decay
of the initial condition plus bounded amplification of the disturbances,
and the trajectory deviation from the reference loop obeys a similar
four-term bound.
"""
from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "CertificateError",
    "StabilityCertificate",
    "baseline_bound",
    "certify",
    "learned_loop_bound",
    "deviation_bound",
]


class CertificateError(ValueError):
    """A bound was requested outside its validity conditions."""


def _check_time(t) -> int:
    if t != int(t) or t < 0:
        raise CertificateError(f"t must be an integer >= 0, got {t!r}")
    return int(t)


def _check_norm(name: str, v: float) -> float:
    v = float(v)
    if not v >= 0.0:
        raise CertificateError(f"{name} must be >= 0, got {v}")
    return v


@dataclass(frozen=True)
class StabilityCertificate:
    """Gain constants of a learned loop and the contraction test result.

    ``gamma`` is gamma_f * gamma_delta + gamma_gy and ``certified`` is
    gamma < 1, equivalently gamma_delta < (1 - gamma_gy)/gamma_f with
    gamma_gy < 1. Construction re-derives both and rejects inconsistent
    records, with a small tolerance right at the contraction boundary
    where the two float evaluations can part ways.
    """

    gamma_f: float
    gamma_gy: float
    gamma_ge: float
    gamma_delta: float
    gamma_khat: float
    delta0_abs: float
    g0_norm: float
    epsilon_y: float
    gamma: float
    certified: bool

    def __post_init__(self):
        for name in (
            "gamma_f", "gamma_gy", "gamma_ge", "gamma_delta",
            "gamma_khat", "delta0_abs", "g0_norm", "epsilon_y",
        ):
            v = getattr(self, name)
            if not v >= 0.0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        recomputed = self.gamma_f * self.gamma_delta + self.gamma_gy
        if abs(self.gamma - recomputed) > 1e-12 * max(1.0, recomputed):
            raise ValueError(
                f"gamma {self.gamma} does not match "
                f"gamma_f*gamma_delta + gamma_gy = {recomputed}"
            )
        direct = self.gamma < 1.0
        # Margin form of the same test; division-free to dodge gamma_f=0.
        margin = self.gamma_gy < 1.0 and (
            self.gamma_f * self.gamma_delta < 1.0 - self.gamma_gy
        )
        if self.certified != direct:
            raise ValueError(
                f"certified={self.certified} but gamma={self.gamma}"
            )
        if direct != margin and abs(self.gamma - 1.0) > 1e-9:
            raise ValueError(
                "contraction test disagrees between its two forms"
            )


def certify(
    gamma_f: float,
    gamma_gy: float,
    gamma_ge: float,
    gamma_delta: float,
    *,
    gamma_khat: float = 0.0,
    delta0_abs: float = 0.0,
    g0_norm: float = 0.0,
    epsilon_y: float = 0.0,
) -> StabilityCertificate:
    """Assemble a certificate from nonnegative gain constants.

    Never raises for a failed contraction test; it simply records
    certified=False so the caller can report why.
    """
    gamma = float(gamma_f) * float(gamma_delta) + float(gamma_gy)
    return StabilityCertificate(
        gamma_f=float(gamma_f),
        gamma_gy=float(gamma_gy),
        gamma_ge=float(gamma_ge),
        gamma_delta=float(gamma_delta),
        gamma_khat=float(gamma_khat),
        delta0_abs=float(delta0_abs),
        g0_norm=float(g0_norm),
        epsilon_y=float(epsilon_y),
        gamma=gamma,
        certified=bool(gamma < 1.0),
    )


def baseline_bound(
    gamma_gy: float,
    gamma_ge: float,
    g0_norm: float,
    es_norm: float,
    y0_norm: float,
    t,
) -> float:
    """Trajectory norm bound for the reference loop at step t.

    Three terms: disturbance amplification, geometric decay of the initial
    condition, and the steady offset from the origin value of the loop map.
    Requires 0 < gamma_gy < 1.
    """
    if not 0.0 < gamma_gy < 1.0:
        raise CertificateError(
            f"gamma_gy must lie in (0, 1), got {gamma_gy}"
        )
    t = _check_time(t)
    gamma_ge = _check_norm("gamma_ge", gamma_ge)
    g0_norm = _check_norm("g0_norm", g0_norm)
    es_norm = _check_norm("es_norm", es_norm)
    y0_norm = _check_norm("y0_norm", y0_norm)
    return (
        gamma_ge / (1.0 - gamma_gy) * es_norm
        + gamma_gy**t * y0_norm
        + g0_norm / (1.0 - gamma_gy)
    )


def learned_loop_bound(
    cert: StabilityCertificate, es_norm: float, y0_norm: float, t
) -> float:
    """Trajectory norm bound for the loop driven by the learned law.

    Same shape as the baseline bound but with the combined gain gamma in
    place of gamma_gy, and an offset enlarged by the learned law's error
    at the origin and its amplification of the feedback noise.
    """
    if not cert.certified:
        raise CertificateError(
            f"certificate is not contractive (gamma={cert.gamma}); "
            "no trajectory bound is available"
        )
    t = _check_time(t)
    es_norm = _check_norm("es_norm", es_norm)
    y0_norm = _check_norm("y0_norm", y0_norm)
    offset = (
        cert.g0_norm
        + cert.gamma_f * cert.delta0_abs
        + cert.gamma_f * cert.gamma_khat * cert.epsilon_y
    )
    one_minus = 1.0 - cert.gamma
    return (
        cert.gamma_ge / one_minus * es_norm
        + cert.gamma**t * y0_norm
        + offset / one_minus
    )


def deviation_bound(
    cert: StabilityCertificate,
    xi0_norm: float,
    y0_norm: float,
    es_norm: float,
    t,
) -> float:
    """Bound on the gap between the learned-law loop and the reference loop.

    Four terms: disturbance amplification, geometric decay of the initial
    gap, a cross term fed by the reference trajectory decaying at rate
    gamma_gy, and the same steady offset as the trajectory bound.
    """
    if not cert.certified:
        raise CertificateError(
            f"certificate is not contractive (gamma={cert.gamma}); "
            "no deviation bound is available"
        )
    t = _check_time(t)
    xi0_norm = _check_norm("xi0_norm", xi0_norm)
    y0_norm = _check_norm("y0_norm", y0_norm)
    es_norm = _check_norm("es_norm", es_norm)
    one_minus = 1.0 - cert.gamma
    offset = (
        cert.g0_norm
        + cert.gamma_f * cert.delta0_abs
        + cert.gamma_f * cert.gamma_khat * cert.epsilon_y
    )
    return (
        cert.gamma_ge / one_minus * es_norm
        + cert.gamma**t * xi0_norm
        + cert.gamma_f * cert.gamma_delta / one_minus
        * cert.gamma_gy**t * y0_norm
        + offset / one_minus
    )
