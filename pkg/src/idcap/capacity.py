"""Fixed-code capacity quantities for threshold verification on the sphere.

Given a cosine threshold tau and a within-identity concentration radius rho,
the effective separation arccos(tau) + 2*rho between identity centers is
sufficient for admissibility of concentrated identity distributions.  This
module issues sufficient-condition certificates, exact verdicts (with
violating witness pairs) under the stronger full-cap-support model, packing
based capacity reports, asymptotic rate lower bounds, and threshold
calibration from an ROC table.

Certificates here never claim inadmissibility under the concentration-only
model (the condition is sufficient, not necessary); only the full-cap
checker issues negative verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .packing import PackingBounds, packing_bounds
from .sphere import (
    ANGLE_TIE_TOL,
    min_pairwise_angle,
    threshold_to_angle,
    unit_vector,
    unit_vectors,
)

REGION_POSITIVE = "admissible-positive-rate"
REGION_ZERO = "admissible-zero-rate-bound"
REGION_INADMISSIBLE = "inadmissible"


@dataclass(frozen=True)
class OperatingPoint:
    """Verification decision rule: threshold plus tail tolerances."""

    tau: float
    eps_in: float = 0.0
    eps_out: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        for name in ("eps_in", "eps_out"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")


@dataclass(frozen=True)
class CenteredParams:
    """Within-identity concentration: cap radius rho and escape mass eta."""

    rho: float
    eta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho < math.pi:
            raise ValueError(f"rho must lie in [0, pi), got {self.rho}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")

    @property
    def guarantee(self) -> float:
        """Tail tolerance 1 - (1 - eta)^2 delivered by the sufficient condition."""
        return 1.0 - (1.0 - self.eta) ** 2


class EffectiveSeparation(NamedTuple):
    psi: float
    degenerate: bool  # true when arccos(tau) + 2 rho exceeded pi (capped)


def effective_separation(tau: float, rho: float) -> EffectiveSeparation:
    """Center separation arccos(tau) + 2*rho, capped at pi.

    The degenerate flag marks a capped value: no pair of points can be
    separated by more than pi, so requirements beyond pi admit only a
    single identity.
    """
    if not 0.0 <= rho < math.pi:
        raise ValueError(f"rho must lie in [0, pi), got {rho}")
    raw = threshold_to_angle(tau) + 2.0 * rho
    if raw > math.pi:
        return EffectiveSeparation(math.pi, True)
    return EffectiveSeparation(raw, False)


@dataclass(frozen=True)
class FailedCondition:
    """Which sufficient-condition inequality failed, with a witness."""

    kind: str  # "intra" (2 rho > arccos tau) or "inter" (a center pair too close)
    required: float
    achieved: float
    pair: tuple[int, int] | None = None


@dataclass(frozen=True)
class AdmissibilityCertificate:
    """Outcome of the sufficient admissibility check.

    A refusal (guaranteed=False) is NOT a claim of inadmissibility; the
    underlying condition is sufficient only.
    """

    guaranteed: bool
    eps_in_guarantee: float | None
    eps_out_guarantee: float | None
    failing: FailedCondition | None = None


def sufficient_admissibility_check(centers, tau: float,
                                   params: CenteredParams) -> AdmissibilityCertificate:
    """Certify admissibility of identity centers at (tau, rho, eta).

    Guaranteed iff 2*rho <= arccos(tau) and every pairwise center angle is
    at least the effective separation; boundary equality counts as
    satisfied.  The delivered tolerances are 1 - (1 - eta)^2 on both tails.
    """
    pts = unit_vectors(centers)
    verify_angle = threshold_to_angle(tau)
    if 2.0 * params.rho > verify_angle + ANGLE_TIE_TOL:
        return AdmissibilityCertificate(
            False, None, None,
            FailedCondition("intra", required=verify_angle,
                            achieved=2.0 * params.rho),
        )
    psi = effective_separation(tau, params.rho).psi
    if pts.shape[0] >= 2:
        achieved, pair = min_pairwise_angle(pts)
        if achieved < psi - ANGLE_TIE_TOL:
            return AdmissibilityCertificate(
                False, None, None,
                FailedCondition("inter", required=psi, achieved=achieved,
                                pair=pair),
            )
    g = params.guarantee
    return AdmissibilityCertificate(True, g, g, None)


@dataclass(frozen=True)
class FullCapVerdict:
    """Exact verdict under full-cap support, with a violating pair if any.

    When inadmissible, ``witness`` holds two points (one per row), each
    inside its identity's cap, whose similarity crosses the threshold on
    the wrong side; ``kind`` says which constraint they break.
    """

    admissible: bool
    kind: str | None = None  # "intra" or "inter"
    pair: tuple[int, int] | None = None
    witness: np.ndarray | None = None


def _tangent_toward(u: np.ndarray, v: np.ndarray, angle: float) -> np.ndarray:
    """Unit tangent at u along the minimizing geodesic toward v."""
    t = v - math.cos(angle) * u
    norm = float(np.linalg.norm(t))
    if norm < 1e-12:
        raise ValueError("geodesic direction undefined for (near-)parallel points")
    return t / norm


def _any_tangent(u: np.ndarray) -> np.ndarray:
    """Some unit vector orthogonal to u (D >= 2)."""
    basis = np.zeros_like(u)
    basis[int(np.argmin(np.abs(u)))] = 1.0
    t = basis - (basis @ u) * u
    return t / np.linalg.norm(t)


def full_cap_admissibility(centers, tau: float, rho: float) -> FullCapVerdict:
    """Exact admissibility test when every identity fills its whole cap.

    Admissible iff 2*rho <= arccos(tau) and all pairwise center angles reach
    arccos(tau) + 2*rho.  On failure the verdict carries an explicit
    violating pair: two points of one cap at angle 2*rho (intra), points at
    colatitude rho along the connecting geodesic (inter, disjoint caps), or
    a shared point of overlapping caps.
    """
    pts = unit_vectors(centers)
    if pts.shape[1] < 2:
        raise ValueError("full-cap analysis needs dimension >= 2")
    if not 0.0 <= rho < math.pi / 2.0:
        raise ValueError(f"cap radius must lie in [0, pi/2), got {rho}")
    verify_angle = threshold_to_angle(tau)

    if 2.0 * rho > verify_angle + ANGLE_TIE_TOL:
        u = pts[0]
        w = _any_tangent(u)
        x = math.cos(rho) * u + math.sin(rho) * w
        y = math.cos(rho) * u - math.sin(rho) * w
        return FullCapVerdict(False, "intra", (0, 0), np.vstack([x, y]))

    psi = verify_angle + 2.0 * rho
    if pts.shape[0] >= 2:
        achieved, (i, j) = min_pairwise_angle(pts)
        if achieved < psi - ANGLE_TIE_TOL:
            ui, uj = pts[i], pts[j]
            if achieved < 2.0 * rho or achieved < 1e-9:
                # overlapping caps: the geodesic midpoint belongs to both
                mid = ui + uj
                norm = float(np.linalg.norm(mid))
                mid = ui if norm < 1e-12 else mid / norm
                witness = np.vstack([mid, mid])
            else:
                ti = _tangent_toward(ui, uj, achieved)
                tj = _tangent_toward(uj, ui, achieved)
                x = math.cos(rho) * ui + math.sin(rho) * ti
                y = math.cos(rho) * uj + math.sin(rho) * tj
                witness = np.vstack([x, y])
            return FullCapVerdict(False, "inter", (i, j), witness)
    return FullCapVerdict(True)


@dataclass(frozen=True)
class FixedCapacityReport:
    """Packing-based capacity bracket at an operating point.

    ``log_lower`` is achievable under full angular expressivity;
    ``log_upper`` applies to the full-cap-support model only.  Tolerances
    are the tails 1 - (1 - eta)^2 delivered alongside the lower bound.
    """

    dimension: int
    tau: float
    params: CenteredParams
    refused: bool
    reason: str | None = None
    psi: float | None = None
    log_lower: float | None = None
    log_upper: float | None = None
    eps_in_guarantee: float | None = None
    eps_out_guarantee: float | None = None


def fixed_capacity_report(dim: int, tau: float,
                          params: CenteredParams) -> FixedCapacityReport:
    """Bracket the fixed-code capacity via the packing sandwich at psi.

    Refuses (rather than reporting bounds) when 2*rho > arccos(tau): the
    achievability hypothesis fails there and the lower bound is void.
    """
    verify_angle = threshold_to_angle(tau)
    if 2.0 * params.rho > verify_angle + ANGLE_TIE_TOL:
        return FixedCapacityReport(
            dim, tau, params, refused=True,
            reason=f"2*rho = {2.0 * params.rho} exceeds arccos(tau) = {verify_angle}",
        )
    sep = effective_separation(tau, params.rho)
    if sep.degenerate:
        return FixedCapacityReport(
            dim, tau, params, refused=True,
            reason="effective separation exceeds pi (single-identity regime)",
        )
    bounds = packing_bounds(dim, sep.psi)
    g = params.guarantee
    return FixedCapacityReport(
        dim, tau, params, refused=False, psi=sep.psi,
        log_lower=bounds.log_lower, log_upper=bounds.log_upper,
        eps_in_guarantee=g, eps_out_guarantee=g,
    )


@dataclass(frozen=True)
class RateCurvePoint:
    """Asymptotic rate lower bounds (nats per dimension) at one (tau, rho)."""

    tau: float
    rho: float
    psi: float
    r_fixed: float | None
    r_random: float | None
    region: str


def rate_point(tau: float, rho: float) -> RateCurvePoint:
    """Rate lower bounds -log sin(psi) (fixed codes) and half of it (random).

    Defined for psi = arccos(tau) + 2*rho in (0, pi/2]; the value is 0 at
    exactly pi/2 and undefined beyond (the bound gives nothing there).  The
    region labels the admissibility/positive-rate classification of the
    point.
    """
    sep = effective_separation(tau, rho)
    verify_angle = threshold_to_angle(tau)
    if 2.0 * rho > verify_angle + ANGLE_TIE_TOL:
        return RateCurvePoint(tau, rho, sep.psi, None, None, REGION_INADMISSIBLE)
    if sep.psi > math.pi / 2.0:
        return RateCurvePoint(tau, rho, sep.psi, None, None, REGION_ZERO)
    r_fixed = -math.log(math.sin(sep.psi))
    r_random = 0.5 * r_fixed
    region = REGION_ZERO if sep.psi == math.pi / 2.0 else REGION_POSITIVE
    return RateCurvePoint(tau, rho, sep.psi, r_fixed, r_random, region)


class BoundaryPoint(NamedTuple):
    tau: float
    rho_admissibility: float
    rho_positive_rate: float | None


def boundary_curves(taus: Sequence[float]) -> list[BoundaryPoint]:
    """Admissibility and positive-rate boundaries in rho, per threshold.

    The admissibility boundary solves 2*rho = arccos(tau); the positive-rate
    boundary solves arccos(tau) + 2*rho = pi/2 (0 at tau = 0, where the
    verification angle alone already reaches pi/2).
    """
    out = []
    for tau in taus:
        verify_angle = threshold_to_angle(tau)
        rho_adm = verify_angle / 2.0
        gap = math.pi / 2.0 - verify_angle
        rho_pos = gap / 2.0 if gap >= 0.0 else None
        out.append(BoundaryPoint(tau, rho_adm, rho_pos))
    return out


def calibrate_threshold(roc: Sequence[tuple[float, float]], alpha: float) -> float:
    """Threshold at false-match rate alpha by interpolating an ROC table.

    ``roc`` lists (tau, fmr) rows sorted by increasing tau with strictly
    decreasing fmr.  Interpolation is linear in (log fmr, tau) — FMR spans
    decades, and log-alpha interpolation is the standard biometric
    convention.  Exact table hits return the tabulated tau unchanged.
    """
    rows = [(float(t), float(f)) for t, f in roc]
    if not rows:
        raise ValueError("ROC table is empty")
    for tau, fmr in rows:
        if not 0.0 <= tau < 1.0:
            raise ValueError(f"table threshold {tau} outside [0, 1)")
        if fmr <= 0.0 or fmr > 1.0:
            raise ValueError(f"table FMR {fmr} outside (0, 1]")
    for (t0, f0), (t1, f1) in zip(rows, rows[1:]):
        if t1 <= t0:
            raise ValueError("table thresholds must be strictly increasing")
        if f1 >= f0:
            raise ValueError("table FMR must be strictly decreasing in tau")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"target FMR must lie in (0, 1], got {alpha}")
    fmr_lo = rows[-1][1]
    fmr_hi = rows[0][1]
    for tau, fmr in rows:
        if fmr == alpha:
            return tau
    if alpha < fmr_lo or alpha > fmr_hi:
        raise ValueError(
            f"target FMR {alpha} outside the table range [{fmr_lo}, {fmr_hi}]"
        )
    log_a = math.log(alpha)
    for (t0, f0), (t1, f1) in zip(rows, rows[1:]):
        if f1 < alpha < f0:
            w = (log_a - math.log(f0)) / (math.log(f1) - math.log(f0))
            return t0 + w * (t1 - t0)
    raise ValueError(f"target FMR {alpha} not bracketed by the table")
