"""Log-domain special functions backing the spherical cap measure.

The regularized incomplete beta function I_x(a, b) is evaluated directly in
log space through its continued-fraction expansion, so tail values far below
the double-precision underflow threshold stay usable (cap measures at
dimension ~4096 reach exp(-5000) and beyond).  An adaptive-Simpson quadrature
of the defining sine-power integral provides an independent evaluation path
for cross-checking; the two must agree to 1e-10 relative in log domain.
"""

from __future__ import annotations

import math

from scipy.special import betaln

_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_CF_TINY = 1e-300


def beta_continued_fraction(a: float, b: float, x: float) -> float:
    """O(1) continued-fraction factor of I_x(a, b) (modified Lentz).

    Converges fast for x < (a + 1)/(a + b + 2); callers switch to the
    complementary arguments outside that range.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete-beta continued fraction failed to converge for "
        f"a={a!r}, b={b!r}, x={x!r}"
    )


def log_betainc(a: float, b: float, x: float,
                log_x: float | None = None,
                log1m_x: float | None = None) -> float:
    """log I_x(a, b), accurate deep into the lower tail.

    ``log_x`` and ``log1m_x`` may be supplied when the caller can compute
    log(x) and log(1 - x) without cancellation (e.g. x = sin^2(t), where
    log(1 - x) = 2 log|cos t|).
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"beta parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return 0.0
    if log_x is None:
        log_x = math.log(x)
    if log1m_x is None:
        log1m_x = math.log1p(-x)
    if x < (a + 1.0) / (a + b + 2.0):
        return (a * log_x + b * log1m_x - math.log(a) - betaln(a, b)
                + math.log(beta_continued_fraction(a, b, x)))
    # Complementary branch: I_x(a,b) = 1 - I_{1-x}(b,a).  Here I_x is not
    # small, so the subtraction is well conditioned.
    log_j = (b * log1m_x + a * log_x - math.log(b) - betaln(b, a)
             + math.log(beta_continued_fraction(b, a, 1.0 - x)))
    return math.log1p(-math.exp(log_j))


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-13,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    ``tol`` is an absolute tolerance on the integral value.
    """
    fa = f(a)
    fm = f(0.5 * (a + b))
    fb = f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return (_simpson_step(f, a, m, fa, flm, fm, left, half, depth - 1)
            + _simpson_step(f, m, b, fm, frm, fb, right, half, depth - 1))


def log_sin_power_integral(power: float, alpha: float,
                           tol: float = 1e-13) -> float:
    """log of the integral of sin(t)^power over t in (0, alpha], alpha <= pi/2.

    The integrand is rescaled by its maximum before quadrature so the
    computation never under- or overflows, whatever the power.
    """
    if alpha <= 0.0 or alpha > math.pi / 2.0 + 1e-12:
        raise ValueError(f"alpha must lie in (0, pi/2], got {alpha}")
    if power < 0.0:
        raise ValueError(f"power must be nonnegative, got {power}")
    peak = power * math.log(math.sin(min(alpha, math.pi / 2.0)))

    def rescaled(t: float) -> float:
        if t <= 0.0:
            return 1.0 if power == 0.0 else 0.0
        return math.exp(power * math.log(math.sin(t)) - peak)

    return peak + math.log(adaptive_simpson(rescaled, 0.0, alpha, tol))
