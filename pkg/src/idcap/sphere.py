"""Angular geometry, normalized cap measures, and seeded sampling on S^{D-1}.

Conventions
-----------
- Unit vectors are 1-D float64 arrays; batches are (n, D) arrays with unit
  rows.  Inputs within 1e-6 of unit norm are silently renormalized; anything
  farther off is rejected (embedding files carry rounding noise, but a
  non-normalized embedding indicates a wrong pipeline).
- Angles are radians in [0, pi], always.
- The normalized cap measure V_D(alpha) is the fraction of the sphere's
  surface within geodesic angle alpha of a point.  It is carried in log
  domain (`LogMeasure`) because it underflows double precision near D ~ 700
  at fixed angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import first_violation  # re-exported for convenience
from .rng import Seed
from .special import log_betainc, log_sin_power_integral

__all__ = [
    "NORM_ACCEPT_TOL",
    "ANGLE_TIE_TOL",
    "LogMeasure",
    "unit_vector",
    "unit_vectors",
    "angle_between",
    "pairwise_angles",
    "min_pairwise_angle",
    "threshold_to_angle",
    "angle_to_threshold",
    "log_cap_measure",
    "cap_measure",
    "sample_uniform_sphere",
    "sample_cap",
    "first_violation",
]

# Inputs farther than this from unit norm are rejected rather than rescaled.
NORM_ACCEPT_TOL = 1e-6
# Non-strict angle comparisons treat |difference| below this as a tie.
ANGLE_TIE_TOL = 1e-9
# Smallest measure whose linear value is representable in float64.
_LINEAR_FLOOR_LOG = math.log(1e-300)


def unit_vector(x) -> np.ndarray:
    """Validate and renormalize a single direction vector.

    Raises ValueError when the input is not 1-D, is empty, is non-finite,
    or its norm deviates from 1 by more than ``NORM_ACCEPT_TOL``.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if v.shape[0] < 1:
        raise ValueError("vectors must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_ACCEPT_TOL:
        raise ValueError(
            f"vector norm {norm!r} deviates from 1 by more than {NORM_ACCEPT_TOL}"
        )
    return v / norm


def unit_vectors(x) -> np.ndarray:
    """Validate and renormalize a batch of directions into an (n, D) array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected an (n, D) array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("need at least one vector of dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("batch has non-finite entries")
    norms = np.linalg.norm(arr, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_ACCEPT_TOL)
    if bad.size:
        raise ValueError(
            f"row {int(bad[0])} has norm {norms[bad[0]]!r}, more than "
            f"{NORM_ACCEPT_TOL} from 1"
        )
    return arr / norms[:, None]


def angle_between(u, v) -> float:
    """Geodesic angle between two unit vectors, in [0, pi].

    The inner product is clamped to [-1, 1] before arccos; floating-point
    drift otherwise yields NaN at near-duplicate vectors.
    """
    uu = unit_vector(u)
    vv = unit_vector(v)
    if uu.shape[0] != vv.shape[0]:
        raise ValueError(
            f"dimension mismatch: {uu.shape[0]} vs {vv.shape[0]}"
        )
    return math.acos(min(1.0, max(-1.0, float(uu @ vv))))


def pairwise_angles(points: np.ndarray) -> np.ndarray:
    """Condensed upper-triangle angles of an (n, D) batch (n >= 2)."""
    pts = unit_vectors(points)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    iu = np.triu_indices(n, k=1)
    return np.arccos(gram[iu])


def min_pairwise_angle(points: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Minimum pairwise angle of a batch and the pair achieving it.

    A single point has no pairs; by convention the minimum is pi with the
    degenerate pair (0, 0).
    """
    pts = unit_vectors(points)
    n = pts.shape[0]
    if n < 2:
        return math.pi, (0, 0)
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    np.fill_diagonal(gram, -2.0)
    flat = int(np.argmax(gram))
    i, j = divmod(flat, n)
    if i > j:
        i, j = j, i
    return math.acos(float(gram[i, j])), (i, j)


def threshold_to_angle(tau: float) -> float:
    """Verification angle arccos(tau) for a cosine threshold tau in [0, 1)."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"threshold must lie in [0, 1), got {tau}")
    return math.acos(tau)


def angle_to_threshold(psi: float) -> float:
    """Cosine threshold cos(psi) for an angle psi in [0, pi]."""
    if not 0.0 <= psi <= math.pi:
        raise ValueError(f"angle must lie in [0, pi], got {psi}")
    return math.cos(psi)


@dataclass(frozen=True)
class LogMeasure:
    """A probability-like measure in (0, 1], carried in log domain."""

    log_value: float

    def __post_init__(self):
        if math.isnan(self.log_value) or self.log_value > 1e-12:
            raise ValueError(f"log measure must be <= 0, got {self.log_value}")

    @property
    def linear(self) -> float | None:
        """Linear value, or None when it underflows float64 (< 1e-300)."""
        if self.log_value < _LINEAR_FLOOR_LOG:
            return None
        return math.exp(min(self.log_value, 0.0))


def _log_cap_half(dim: int, alpha: float, method: str) -> float:
    """log V_D(alpha) for alpha in (0, pi/2]."""
    if method == "beta":
        # V_D(alpha) = I_{sin^2 alpha}((D-1)/2, 1/2) / 2 for alpha <= pi/2.
        a = (dim - 1) / 2.0
        s = math.sin(alpha)
        c = math.cos(alpha)
        x = s * s
        if x >= 1.0:
            return -math.log(2.0)
        log_x = 2.0 * math.log(s)
        log1m_x = 2.0 * math.log(abs(c))  # avoids cancellation in 1 - sin^2
        return log_betainc(a, 0.5, x, log_x=log_x, log1m_x=log1m_x) - math.log(2.0)
    if method == "quadrature":
        power = float(dim - 2)
        log_num = log_sin_power_integral(power, alpha)
        log_den = math.log(2.0) + log_sin_power_integral(power, math.pi / 2.0)
        return log_num - log_den
    raise ValueError(f"unknown method {method!r}; expected 'beta' or 'quadrature'")


def log_cap_measure(dim: int, alpha: float, method: str = "beta") -> LogMeasure:
    """Normalized cap measure V_D(alpha) in log domain.

    ``method="beta"`` evaluates the regularized incomplete-beta identity via
    a log-domain continued fraction (the primary path; exact deep into the
    tail, no underflow for D at least up to 4096).  ``method="quadrature"``
    integrates the sine-power density by adaptive Simpson and exists as an
    independent cross-check.  Angles above pi/2 use the exact symmetry
    V_D(pi - alpha) = 1 - V_D(alpha) in either case.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {dim!r}")
    if not 0.0 <= alpha <= math.pi:
        raise ValueError(f"cap angle must lie in [0, pi], got {alpha}")
    if alpha == 0.0:
        return LogMeasure(-math.inf)
    if alpha >= math.pi:
        return LogMeasure(0.0)
    if alpha <= math.pi / 2.0:
        return LogMeasure(_log_cap_half(int(dim), alpha, method))
    complement = math.exp(_log_cap_half(int(dim), math.pi - alpha, method))
    return LogMeasure(math.log1p(-complement))


def cap_measure(dim: int, alpha: float) -> float:
    """Linear V_D(alpha); 0.0 when the true value underflows float64."""
    lin = log_cap_measure(dim, alpha).linear
    return 0.0 if lin is None else lin


def _resolve_gen(seed: Seed | np.random.Generator, purpose: str) -> np.random.Generator:
    if isinstance(seed, Seed):
        return seed.stream(purpose)
    if isinstance(seed, np.random.Generator):
        return seed
    raise TypeError(
        f"expected Seed or numpy Generator, got {type(seed).__name__}"
    )


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    # A zero Gaussian row has probability ~0; map it to the first axis
    # rather than dividing by zero.
    degenerate = norms < 1e-12
    if degenerate.any():
        x[degenerate] = 0.0
        x[degenerate, 0] = 1.0
        norms[degenerate] = 1.0
    return x / norms[:, None]


def sample_uniform_sphere(dim: int, count: int,
                          seed: Seed | np.random.Generator) -> np.ndarray:
    """``count`` independent draws from the uniform law on S^{D-1}.

    Standard-normal vectors normalized to unit length; deterministic given
    the seed (stream purpose "uniform-sphere" when a Seed is passed).
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    gen = _resolve_gen(seed, "uniform-sphere")
    if count == 0:
        return np.empty((0, dim))
    return _normalize_rows(gen.standard_normal((count, dim)))


def _sample_colatitudes(dim: int, rho: float, count: int,
                        gen: np.random.Generator) -> np.ndarray:
    """Colatitudes with density proportional to sin^{D-2} on [0, rho], D >= 2."""
    from scipy.special import betainc, betaincinv

    if dim == 2:
        # sin^0 is flat
        return rho * gen.random(count)
    a = (dim - 1) / 2.0
    u = gen.random(count)
    if rho >= math.pi / 2.0:
        # Split at the hemisphere; no underflow possible since total mass >= 1/2.
        if rho >= math.pi:
            total = 1.0
        else:
            total = 1.0 - 0.5 * betainc(a, 0.5, math.sin(math.pi - rho) ** 2)
        y = u * total
        theta = np.empty(count)
        low = y <= 0.5
        t = betaincinv(a, 0.5, 2.0 * y[low])
        theta[low] = np.arcsin(np.sqrt(t))
        t = betaincinv(a, 0.5, np.maximum(2.0 * (1.0 - y[~low]), 5e-324))
        theta[~low] = math.pi - np.arcsin(np.sqrt(t))
        return theta
    s = math.sin(rho) ** 2
    log_mass = log_betainc(a, 0.5, s,
                           log_x=2.0 * math.log(math.sin(rho)),
                           log1m_x=2.0 * math.log(math.cos(rho)))
    if log_mass >= math.log(1e-280):
        target = np.maximum(math.exp(log_mass) * u, 5e-324)
        t = betaincinv(a, 0.5, target)
        return np.arcsin(np.sqrt(t))
    # Deep tail: the truncated Beta((D-1)/2, 1/2) mass on [0, s] underflows
    # the inverse-CDF domain.  Rejection-sample t = s * w^{1/a} (exact law
    # proportional to t^{a-1} on [0, s]) against the (1-t)^{-1/2} factor;
    # acceptance probability is at least cos(rho).
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        t = s * gen.random(need) ** (1.0 / a)
        keep = gen.random(need) <= np.sqrt((1.0 - s) / (1.0 - t))
        kept = t[keep]
        out[filled:filled + kept.size] = kept
        filled += kept.size
    return np.arcsin(np.sqrt(out))


def sample_cap(center, rho: float, count: int,
               seed: Seed | np.random.Generator) -> np.ndarray:
    """``count`` uniform draws from the geodesic cap of radius rho at center.

    Colatitude by exact inverse CDF (density proportional to sin^{D-2} on
    [0, rho]), tangent direction uniform on the orthogonal (D-1)-sphere,
    rotated onto the center by a Householder reflection.  Every output lies
    within ``rho + 1e-9`` of the center.

    For D = 1 with rho < pi the cap is the single point {center}.
    """
    c = unit_vector(center)
    dim = c.shape[0]
    if not 0.0 <= rho <= math.pi:
        raise ValueError(f"cap radius must lie in [0, pi], got {rho}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    gen = _resolve_gen(seed, "cap")
    if count == 0:
        return np.empty((0, dim))
    if dim == 1:
        if rho < math.pi:
            return np.tile(c, (count, 1))
        return np.where(gen.random((count, 1)) < 0.5, -1.0, 1.0)
    if rho == 0.0:
        return np.tile(c, (count, 1))

    theta = _sample_colatitudes(dim, rho, count, gen)
    tangent = _normalize_rows(gen.standard_normal((count, dim - 1)))
    local = np.empty((count, dim))
    local[:, 0] = np.cos(theta)
    local[:, 1:] = np.sin(theta)[:, None] * tangent

    # Householder reflection mapping e_1 onto the center.
    v = -c.copy()
    v[0] += 1.0
    vnorm2 = float(v @ v)
    if vnorm2 > 1e-24:
        local -= np.outer(local @ v, v) * (2.0 / vnorm2)
    out = _normalize_rows(local)

    worst = float(np.min(out @ c))
    if math.acos(min(1.0, max(-1.0, worst))) > rho + 1e-9:
        raise RuntimeError("cap sampler produced a point outside the cap")
    return out
