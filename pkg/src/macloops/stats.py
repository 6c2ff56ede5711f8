"""Scalar Gaussian machinery: densities, one-sided truncated moments, the
compound (truncated-source plus Gaussian noise) density, adaptive quadrature
and bracketed root finding.

Closed forms (via erf/erfc) are the primary implementation for single
truncations; quadrature exists as an independent cross-check and as the only
route for the compound density, which has no closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    BracketingError,
    ConfigurationError,
    DegenerateTruncationError,
    QuadratureError,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

# Conditioning probabilities below this are treated as degenerate.
MIN_TRUNCATION_PROB = 1e-12


def std_normal_pdf(x: float) -> float:
    """Standard normal density."""
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def std_normal_cdf(x: float) -> float:
    """Standard normal distribution function, accurate in both tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_pdf(x: float, mean: float = 0.0, var: float = 1.0) -> float:
    """Density of N(mean, var) at x."""
    if var <= 0.0:
        raise ConfigurationError(f"variance must be positive, got {var}")
    s = math.sqrt(var)
    z = (x - mean) / s
    return math.exp(-0.5 * z * z) / (s * _SQRT_2PI)


@dataclass(frozen=True)
class TruncatedGaussian:
    """A Gaussian X ~ N(mean, var) conditioned on X < upper."""

    mean: float
    var: float
    upper: float

    def __post_init__(self):
        if not (self.var > 0.0 and math.isfinite(self.var)):
            raise ConfigurationError(f"var must be positive and finite, got {self.var}")
        if not (math.isfinite(self.mean) and math.isfinite(self.upper)):
            raise ConfigurationError("mean and upper bound must be finite")
        if self.keep_prob() <= 0.0:
            raise ConfigurationError(
                "truncation keeps no probability mass "
                f"(upper={self.upper}, mean={self.mean}, var={self.var})"
            )

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)

    def keep_prob(self) -> float:
        """Pr(X < upper) under the untruncated Gaussian."""
        return std_normal_cdf((self.upper - self.mean) / self.sigma)

    def pdf(self, x: float) -> float:
        """Density of the truncated variable (zero above the bound)."""
        if x >= self.upper:
            return 0.0
        return normal_pdf(x, self.mean, self.var) / self.keep_prob()


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the adaptive Simpson integrator.

    `window` is expressed in standard deviations around the integrand's
    natural center; integrands here decay like Gaussians, so +/-10 sigma
    leaves tail mass around 1e-23, far below the default tolerance.
    """

    tol: float = 1e-8
    max_subdivisions: int = 20000
    window: tuple[float, float] = (-10.0, 10.0)

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tol}")
        if self.max_subdivisions < 1:
            raise ConfigurationError("max_subdivisions must be at least 1")
        if not self.window[0] < self.window[1]:
            raise ConfigurationError(f"window must satisfy lo < hi, got {self.window}")


DEFAULT_QUAD = QuadratureSpec()


def integrate(f, lo: float, hi: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Adaptive Simpson integration of f over [lo, hi].

    Panels are bisected until the Richardson error estimate of each panel
    falls under its share of the absolute tolerance.  Raises QuadratureError
    if the subdivision budget is exhausted.
    """
    if hi <= lo:
        return 0.0
    flo, fhi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    # stack entries: (a, b, fa, fm, fb, simpson(a,b), tol share)
    stack = [(lo, hi, flo, fmid, fhi, whole, spec.tol)]
    total = 0.0
    used = 0
    while stack:
        a, b, fa, fm, fb, s_ab, tol = stack.pop()
        used += 1
        if used > spec.max_subdivisions:
            raise QuadratureError(
                f"quadrature did not converge within {spec.max_subdivisions} subdivisions"
            )
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        s_left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        s_right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = s_left + s_right - s_ab
        if abs(err) <= 15.0 * tol or (b - a) < 1e-14 * max(1.0, abs(a)):
            total += s_left + s_right + err / 15.0
        else:
            half = 0.5 * tol
            stack.append((a, m, fa, flm, fm, s_left, half))
            stack.append((m, b, fm, frm, fb, s_right, half))
    return total


def truncated_moments(tg: TruncatedGaussian) -> tuple[float, float]:
    """Mean and variance of X ~ N(mean, var) given X < upper, in closed form.

    Uses the standard hazard-ratio identities; erfc keeps the ratio stable
    deep into the lower tail.  Raises DegenerateTruncationError when the
    kept probability falls below MIN_TRUNCATION_PROB.
    """
    alpha = (tg.upper - tg.mean) / tg.sigma
    keep = std_normal_cdf(alpha)
    if keep < MIN_TRUNCATION_PROB:
        raise DegenerateTruncationError(
            f"truncation keeps probability {keep:.3e} < {MIN_TRUNCATION_PROB}"
        )
    lam = std_normal_pdf(alpha) / keep
    mean = tg.mean - tg.sigma * lam
    var = tg.var * (1.0 - alpha * lam - lam * lam)
    return mean, var


def compound_density(
    a: float,
    tg: TruncatedGaussian,
    noise_var: float,
    eps: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Density at eps of e = a*X + W with X the truncated Gaussian and
    W ~ N(0, noise_var) independent.

    Computed by quadrature of the truncated density against the shifted
    noise kernel.  a == 0 collapses exactly to the noise density.
    """
    if not noise_var > 0.0:
        raise ConfigurationError(f"noise_var must be positive, got {noise_var}")
    if a == 0.0:
        return normal_pdf(eps, 0.0, noise_var)
    lo = tg.mean + spec.window[0] * tg.sigma
    hi = min(tg.upper, tg.mean + spec.window[1] * tg.sigma)
    if hi <= lo:
        return 0.0
    keep = tg.keep_prob()
    mu, var = tg.mean, tg.var

    def integrand(x: float) -> float:
        return normal_pdf(x, mu, var) / keep * normal_pdf(eps - a * x, 0.0, noise_var)

    return integrate(integrand, lo, hi, spec)


def _compound_support(a: float, tg: TruncatedGaussian, noise_var: float,
                      spec: QuadratureSpec) -> tuple[float, float]:
    x_lo = tg.mean + spec.window[0] * tg.sigma
    x_hi = min(tg.upper, tg.mean + spec.window[1] * tg.sigma)
    noise_pad = abs(spec.window[0]) * math.sqrt(noise_var)
    lo = min(a * x_lo, a * x_hi) - noise_pad
    hi = max(a * x_lo, a * x_hi) + noise_pad
    return lo, hi


def conditional_moments_compound(
    a: float,
    tg: TruncatedGaussian,
    noise_var: float,
    upper: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Mean and variance of e = a*X + W conditioned on e < upper.

    Moments are taken by quadrature against compound_density.  The inner
    density evaluations run with a tighter tolerance than the outer moment
    integrals so inner error does not masquerade as outer signal.
    """
    if a == 0.0:
        return truncated_moments(TruncatedGaussian(0.0, noise_var, upper))
    inner = QuadratureSpec(tol=spec.tol * 1e-2,
                           max_subdivisions=spec.max_subdivisions,
                           window=spec.window)
    lo, hi = _compound_support(a, tg, noise_var, spec)
    hi = min(hi, upper)
    if hi <= lo:
        raise DegenerateTruncationError(
            f"conditioning bound {upper} lies below the support window [{lo}, {hi}]"
        )

    def dens(e: float) -> float:
        return compound_density(a, tg, noise_var, e, inner)

    mass = integrate(dens, lo, hi, spec)
    if mass < MIN_TRUNCATION_PROB:
        raise DegenerateTruncationError(
            f"conditioning probability {mass:.3e} < {MIN_TRUNCATION_PROB}"
        )
    mean = integrate(lambda e: e * dens(e), lo, hi, spec) / mass
    var = integrate(lambda e: (e - mean) ** 2 * dens(e), lo, hi, spec) / mass
    return mean, var


def find_root(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Root of f in [lo, hi] by bisection refined with secant steps.

    The bracket is maintained at every step, so convergence is guaranteed;
    secant candidates are only accepted when they fall strictly inside the
    current bracket.  Stops when |f| <= tol or the bracket width <= tol.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketingError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}"
        )
    width_two_ago = math.inf
    width_one_ago = hi - lo
    for _ in range(max_iter):
        width = hi - lo
        if width <= tol:
            return 0.5 * (lo + hi)
        x = None
        # Secant steps are only allowed while the bracket keeps halving;
        # otherwise fall back to bisection so termination stays guaranteed.
        if fhi != flo and width <= 0.5 * width_two_ago:
            cand = hi - fhi * (hi - lo) / (fhi - flo)
            margin = 0.01 * width
            if lo + margin < cand < hi - margin:
                x = cand
        if x is None:
            x = 0.5 * (lo + hi)
        width_two_ago, width_one_ago = width_one_ago, width
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if flo * fx < 0.0:
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
    return 0.5 * (lo + hi)
