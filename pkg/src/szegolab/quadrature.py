"""Adaptive quadrature, convex minimization, and the convex-Laplace surrogate.

The integrators here are deliberately self-contained: every result carries an
error estimate, an evaluation count, and an honest ``converged`` flag, which
the kernel and geometry modules compose into their own error reports.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergenceError,
    InfiniteWidthError,
    IntegralFailureError,
    IntegrandError,
    InvalidArgumentError,
    UnboundedBelowError,
)

__all__ = [
    "QuadratureConfig",
    "IntegralResult",
    "ConvexLaplaceResult",
    "integrate_1d",
    "minimize_convex",
    "level_set_width",
    "convex_laplace",
    "integrate_halfline_damped",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits shared by the adaptive integrators.

    ``truncation_log_cut`` bounds every exponential-tail truncation: integrands
    are cut where their log-magnitude falls this far below the running maximum
    (exp(-40) ~ 4e-18 is below double-precision relevance).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_depth: int = 50
    truncation_log_cut: float = 40.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InvalidArgumentError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise InvalidArgumentError("max_depth must be >= 1")


@dataclass
class IntegralResult:
    """Value + error estimate + cost of a quadrature."""

    value: complex
    error_estimate: float
    evaluations: int
    converged: bool

    def __post_init__(self):
        if self.error_estimate < 0:
            raise InvalidArgumentError("error_estimate must be >= 0")

    def __add__(self, other):
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )


# Embedded Gauss-Legendre pair: the 15-point rule supplies the value, the
# 7-point rule the error estimate.  Nodes are generated, not transcribed.
_X7, _W7 = np.polynomial.legendre.leggauss(7)
_X15, _W15 = np.polynomial.legendre.leggauss(15)


def _panel(f, a, b):
    """One embedded-pair pass over [a, b]; returns (I15, err, evals)."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    xs7 = mid + half * _X7
    xs15 = mid + half * _X15
    f7 = np.asarray([f(x) for x in xs7])
    f15 = np.asarray([f(x) for x in xs15])
    bad7 = ~np.isfinite(np.abs(f7))
    bad15 = ~np.isfinite(np.abs(f15))
    if bad7.any() or bad15.any():
        loc = xs7[bad7][0] if bad7.any() else xs15[bad15][0]
        raise IntegrandError("non-finite integrand value", location=float(loc))
    i7 = half * np.sum(_W7 * f7)
    i15 = half * np.sum(_W15 * f15)
    return i15, abs(i15 - i7), 22


def integrate_1d(f, interval, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """Adaptively integrate ``f`` over ``interval = (a, b)``.

    Panels with the largest error estimates are split first; subdivision stops
    once the summed estimate meets ``abs_tol`` or ``rel_tol``, or when the
    deepest panel reaches ``max_depth`` bisections (in which case the result is
    returned with ``converged=False``).
    """
    cfg = cfg or QuadratureConfig()
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidArgumentError("integrate_1d needs a finite interval; map infinite ranges first")
    if a == b:
        return IntegralResult(0.0, 0.0, 0, True)

    value, err, evals = _panel(f, a, b)
    # heap entries: (-err, counter, a, b, value, err, depth)
    counter = 0
    heap = [(-err, counter, a, b, value, err, 0)]
    total_value, total_err = value, err
    depth_exceeded = False
    while True:
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total_value))
        if total_err <= tol or not heap:
            break
        neg_err, _, pa, pb, pval, perr, depth = heapq.heappop(heap)
        if depth >= cfg.max_depth:
            depth_exceeded = True
            # put it back conceptually: keep its contribution, stop refining it
            total_err += 0.0
            if all(entry[6] >= cfg.max_depth for entry in heap) or not heap:
                break
            continue
        pm = 0.5 * (pa + pb)
        lv, le, ev1 = _panel(f, pa, pm)
        rv, re, ev2 = _panel(f, pm, pb)
        evals += ev1 + ev2
        total_value += lv + rv - pval
        total_err += le + re - perr
        counter += 1
        heapq.heappush(heap, (-le, counter, pa, pm, lv, le, depth + 1))
        counter += 1
        heapq.heappush(heap, (-re, counter, pm, pb, rv, re, depth + 1))

    tol = max(cfg.abs_tol, cfg.rel_tol * abs(total_value))
    converged = bool(total_err <= tol and not depth_exceeded)
    if not np.iscomplexobj(np.asarray(total_value)):
        total_value = float(total_value)
    else:
        total_value = complex(total_value)
    return IntegralResult(total_value, float(total_err), evals, converged)


def minimize_convex(phi, bracket=None, tol: float = 1e-10, max_expand: int = 200):
    """Locate the minimizer of a convex function on the line.

    The initial bracket is grown by doubling until the finite-difference slope
    changes sign across it; golden-section then refines the minimizer to
    ``|theta - theta0| <= tol * max(1, |theta0|)``.  Convexity is trusted, not
    verified.  Returns ``(theta0, phi(theta0))``.
    """
    if bracket is None:
        bracket = (-1.0, 1.0)
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo >= hi:
        lo, hi = min(lo, hi) - 1.0, max(lo, hi) + 1.0

    def slope(x):
        h = 1e-7 * max(1.0, abs(x))
        return phi(x + h) - phi(x - h)

    # grow each end by doubling until the finite-difference slope brackets a minimum
    width = hi - lo
    expand = 0
    while slope(lo) >= 0:
        lo -= width
        width *= 2
        expand += 1
        if expand > max_expand:
            raise UnboundedBelowError("no interior minimum: left slope never negative")
    width = hi - lo
    expand = 0
    while slope(hi) <= 0:
        hi += width
        width *= 2
        expand += 1
        if expand > max_expand:
            raise UnboundedBelowError("no interior minimum: right slope never positive")

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = phi(c), phi(d)
    while (b - a) > tol * max(1.0, abs(a) + abs(b)) / 2.0:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi(d)
    theta0 = 0.5 * (a + b)
    return theta0, phi(theta0)


def level_set_width(phi, theta0, tol: float = 1e-10, max_expand: int = 400):
    """Half-widths of the unit sublevel set L = {phi <= phi(theta0) + 1}.

    Returns ``(theta_minus, theta_plus, width)`` with
    ``phi(theta0 + theta_plus) = phi(theta0) + 1`` (and symmetrically on the
    left), found by doubling + bisection on each side.
    """
    f0 = phi(theta0)
    target = f0 + 1.0

    def one_side(sign):
        step = max(1e-8, 1e-8 * abs(theta0))
        prev = 0.0
        for _ in range(max_expand):
            if phi(theta0 + sign * step) >= target:
                break
            prev = step
            step *= 2.0
        else:
            raise InfiniteWidthError("level phi(theta0)+1 never reached on one side")
        lo, hi = prev, step
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if phi(theta0 + sign * mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    tplus = one_side(+1.0)
    tminus = one_side(-1.0)
    return tminus, tplus, tminus + tplus


@dataclass
class ConvexLaplaceResult:
    """Both faces of the convex-Laplace approximation of ``\\int e^{-phi}``."""

    surrogate: float
    refined: IntegralResult
    minimizer: float
    min_value: float
    level_width: float

    @property
    def value(self) -> float:
        return float(np.real(self.refined.value))


def convex_laplace(phi, cfg: QuadratureConfig | None = None, bracket=None) -> ConvexLaplaceResult:
    """Approximate ``\\int_R e^{-phi}`` for convex ``phi``.

    The fast surrogate is ``|L| * exp(-phi(theta0))`` with L the unit sublevel
    set above the minimum.  The refined value integrates ``exp`` directly over
    the window where ``phi <= phi(theta0) + truncation_log_cut`` (beyond the
    unit sublevel set, convexity makes phi grow at least linearly, so the
    discarded tail is below ``exp(-truncation_log_cut)`` relative).
    """
    cfg = cfg or QuadratureConfig()
    theta0, fmin = minimize_convex(phi, bracket=bracket)
    tminus, tplus, width = level_set_width(phi, theta0)
    surrogate = width * math.exp(-fmin)
    cut = cfg.truncation_log_cut
    lo = theta0 - tminus * cut
    hi = theta0 + tplus * cut
    shifted = integrate_1d(lambda t: math.exp(-(min(phi(t) - fmin, 700.0))), (lo, hi), cfg)
    refined = IntegralResult(
        shifted.value * math.exp(-fmin),
        shifted.error_estimate * math.exp(-fmin),
        shifted.evaluations,
        shifted.converged,
    )
    return ConvexLaplaceResult(surrogate, refined, theta0, fmin, width)


def integrate_halfline_damped(f, damping: float, cfg: QuadratureConfig | None = None) -> IntegralResult:
    """Integrate ``f`` over [0, inf) assuming eventual exponential decay.

    The caller asserts ``|f(t)| <= M exp(-damping*t/2)`` eventually.  Panels
    [0,1], [1,2], [2,4], ... are integrated until their contributions fall
    below tolerance; if contributions stop shrinking well past the decay scale
    ``1/damping``, a DivergenceError is raised.
    """
    cfg = cfg or QuadratureConfig()
    if damping <= 0:
        raise DivergenceError("damping exponent must be positive")
    total = integrate_1d(f, (0.0, 1.0), cfg)
    a = 1.0
    prev_contrib = None
    grew = 0
    while True:
        b = 2.0 * a
        part = integrate_1d(f, (a, b), cfg)
        total = total + part
        contrib = abs(part.value) + part.error_estimate
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total.value))
        if contrib <= tol and a * damping >= 2.0:
            break
        if prev_contrib is not None and contrib > prev_contrib and a * damping > 8.0:
            grew += 1
            if grew >= 2:
                raise DivergenceError(
                    f"half-line panel contributions not shrinking past t={a:g} "
                    f"(panel {contrib:.3e} > previous {prev_contrib:.3e})"
                )
        else:
            grew = 0
        prev_contrib = contrib
        a = b
        if a > 1e18:
            raise IntegralFailureError("half-line integral did not settle below t=1e18", result=total)
    return total
