"""Non-isotropic geometry of the boundary: Lambda, mu, distances, directions.

Everything is expressed through the disk integrals Lambda(z, delta) of the
weight and their polynomial approximants; the Carnot-Caratheodory distance is
computed through the comparable closed form |z-w| + mu(w, twisted t-gap), not
by path optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Potential, TubeProfile, Weight, potential_from_profile
from ._cutoffs import chi_down
from .errors import (
    BracketOverflowError,
    InvalidArgumentError,
    SingularSystemError,
)
from .normalize import normalize_potential, recenter_boundary, twist_T, twist_Tkappa
from .quadrature import QuadratureConfig, integrate_1d

__all__ = [
    "BoundaryPoint",
    "MetricContext",
    "lambda_integral",
    "lambda_poly",
    "mu_invert",
    "mu_star",
    "cc_distance",
    "ball_volume",
    "smooth_distance",
    "sigma_tau",
    "rho_tilde",
    "VandermondeCoeffs",
    "vandermonde_coeffs",
    "max_direction",
]


@dataclass(frozen=True)
class BoundaryPoint:
    """(z, t) identifying the boundary point (z, t + iP(z))."""

    z: complex
    t: float


@dataclass
class MetricContext:
    """Weight + potential + type order, with tolerances and a Lambda memo table.

    The memo maps (z, delta) to computed disk integrals; it is plain per-context
    state, so share contexts across threads only with ``enable_memo=False``.
    """

    weight: Weight
    potential: Potential | None = None
    type_order: int = 2
    nu_exponent: float | None = None
    n_theta: int = 256
    mu_rel_tol: float = 1e-10
    mu_bracket_cap: float = 1e9
    delta0: float = 1.0
    enable_memo: bool = True
    memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.nu_exponent is None:
            self.nu_exponent = 1.0 / self.type_order
        if not (0.0 < self.nu_exponent <= 1.0):
            raise InvalidArgumentError("nu_exponent must lie in (0, 1]")

    @classmethod
    def heisenberg(cls, **kw):
        from .domain import make_heisenberg

        w, p = make_heisenberg()
        return cls(weight=w, potential=p, type_order=2, **kw)

    @classmethod
    def from_profile(cls, profile: TubeProfile, **kw):
        p = potential_from_profile(profile)
        return cls(weight=p.weight, potential=p, type_order=2, **kw)


def lambda_integral(ctx: MetricContext, z: complex, delta: float) -> float:
    """Disk integral of the weight: Lambda(z, delta) = int_{|eta-z|<delta} h dm."""
    if delta <= 0:
        raise InvalidArgumentError("delta must be positive")
    z = complex(z)
    key = (z, float(delta))
    if ctx.enable_memo and key in ctx.memo:
        return ctx.memo[key]
    theta = 2.0 * np.pi * np.arange(ctx.n_theta) / ctx.n_theta
    ring = np.exp(1j * theta)
    dtheta = 2.0 * np.pi / ctx.n_theta

    def shell(s):
        vals = np.asarray(ctx.weight.eval(z + s * ring), dtype=float)
        return s * float(vals.sum()) * dtheta

    res = integrate_1d(shell, (0.0, float(delta)),
                       QuadratureConfig(abs_tol=1e-13, rel_tol=1e-11, max_depth=30))
    out = float(np.real(res.value))
    if ctx.enable_memo:
        ctx.memo[key] = out
    return out


def _default_directions(m: int) -> np.ndarray:
    return np.exp(1j * np.pi * np.arange(m + 1) / (m + 1))


def lambda_poly(ctx: MetricContext, z: complex, delta: float, variant: int) -> float:
    """Polynomial-in-delta approximants of Lambda for delta <= delta0.

    variant 2: sup over a 256-direction grid of sum_j |grad_nu^{j-2} h| delta^j;
    variant 3: the (m+1)-direction sum at nu_n = exp(i pi n/(m+1));
    variant 4: mixed-partial absolute sums.
    """
    if delta <= 0:
        raise InvalidArgumentError("delta must be positive")
    if delta > ctx.delta0:
        raise InvalidArgumentError(f"lambda_poly is valid for delta <= delta0 = {ctx.delta0}")
    m = ctx.type_order
    z = complex(z)
    if variant == 2:
        nus = np.exp(2j * np.pi * np.arange(256) / 256)
        best = max(
            sum(abs(ctx.weight.dir_deriv(j - 2, nu, z)) * delta**j for j in range(2, m + 1))
            for nu in nus
        )
        return float(best)
    if variant == 3:
        nus = _default_directions(m)
        return float(sum(
            sum(abs(ctx.weight.dir_deriv(j - 2, nu, z)) for nu in nus) * delta**j
            for j in range(2, m + 1)
        ))
    if variant == 4:
        return float(sum(
            sum(abs(ctx.weight.partial(k, j - 2 - k, z)) for k in range(j - 1)) * delta**j
            for j in range(2, m + 1)
        ))
    raise InvalidArgumentError("variant must be one of 2, 3, 4")


def mu_invert(ctx: MetricContext, z: complex, target: float) -> float:
    """Inverse of delta -> Lambda(z, delta): the delta with Lambda = target.

    Brackets by doubling from 1e-12, then bisects until the Lambda value
    matches ``target`` to ``ctx.mu_rel_tol`` relative.
    """
    if target < 0:
        raise InvalidArgumentError("target must be >= 0")
    if target == 0.0:
        return 0.0  # continuous extension mu(z, 0) = 0
    z = complex(z)
    hi = 1e-12
    while lambda_integral(ctx, z, hi) < target:
        hi *= 2.0
        if hi > ctx.mu_bracket_cap:
            raise BracketOverflowError(
                f"Lambda({z}, delta) never reaches {target} below delta = {ctx.mu_bracket_cap}")
    lo = hi / 2.0 if hi > 1e-12 else 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = lambda_integral(ctx, z, mid)
        if abs(val - target) <= ctx.mu_rel_tol * target:
            return mid
        if val < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return 0.5 * (lo + hi)


class _PiecewiseModel:
    """Lambda*(delta) = sum a_j delta^j (delta <= 1) and delta^2 (delta >= 1).

    The coefficients are the normalized direction-sum magnitudes of the weight
    jets at z, so sum a_j = 1 and the two branches agree at delta = 1.  The
    inverse satisfies mu*(2t) <= sqrt(2) mu*(t) by construction.
    """

    def __init__(self, ctx: MetricContext, z: complex):
        m = ctx.type_order
        nus = _default_directions(m)
        raw = np.zeros(m + 1)
        for j in range(2, m + 1):
            raw[j] = sum(abs(ctx.weight.dir_deriv(j - 2, nu, z)) for nu in nus)
        total = raw.sum()
        if total <= 0:
            raise InvalidArgumentError(
                f"weight jets vanish to order {m - 2} at {z}; no fitted model")
        self.a = raw / total  # a[j] multiplies delta^j

    def value(self, delta: float) -> float:
        if delta >= 1.0:
            return delta * delta
        return float(sum(self.a[j] * delta**j for j in range(2, len(self.a))))

    def inverse(self, t: float) -> float:
        if t <= 0:
            return 0.0
        if t >= 1.0:
            return math.sqrt(t)
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.value(mid) < t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def _model_for(ctx: MetricContext, z: complex) -> _PiecewiseModel:
    key = ("model", complex(z))
    if ctx.enable_memo and key in ctx.memo:
        return ctx.memo[key]
    model = _PiecewiseModel(ctx, complex(z))
    if ctx.enable_memo:
        ctx.memo[key] = model
    return model


def mu_star(ctx: MetricContext, z: complex, target: float) -> float:
    """Regularized inverse mu* through the piecewise model (sqrt(2)-doubling)."""
    if target <= 0:
        raise InvalidArgumentError("target must be positive")
    return _model_for(ctx, z).inverse(float(target))


_TWISTS = ("T", "T1", "T2", "Tkappa")


def cc_distance(ctx: MetricContext, a: BoundaryPoint, b: BoundaryPoint,
                twist: str = "T", kappa: int | None = None) -> float:
    """Comparable Carnot-Caratheodory distance |z-w| + mu(w, twisted t-gap)."""
    if twist not in _TWISTS:
        raise InvalidArgumentError(f"twist must be one of {_TWISTS}")
    if ctx.potential is None:
        raise InvalidArgumentError("cc_distance needs a context with a potential")
    if twist == "T":
        tval = twist_T(ctx.potential, a.z, b.z)
    elif twist == "T1":
        tval = twist_Tkappa(ctx.potential, a.z, b.z, 1)
    elif twist == "T2":
        tval = twist_Tkappa(ctx.potential, a.z, b.z, 2)
    else:
        k = ctx.type_order if kappa is None else kappa
        if k < ctx.type_order:
            raise InvalidArgumentError(
                f"Tkappa needs kappa >= type order m = {ctx.type_order}")
        tval = twist_Tkappa(ctx.potential, a.z, b.z, k)
    gap = abs(a.t - b.t - tval)
    d = abs(a.z - b.z)
    if gap > 0:
        d += mu_invert(ctx, b.z, gap)
    return d


def ball_volume(ctx: MetricContext, a: BoundaryPoint, delta: float) -> float:
    """Comparable volume of the CC ball: delta^2 * Lambda(z, delta)."""
    if delta <= 0:
        raise InvalidArgumentError("delta must be positive")
    return delta * delta * lambda_integral(ctx, a.z, delta)


def sigma_tau(ctx: MetricContext, w: BoundaryPoint, tau: float) -> float:
    """Degeneracy scale of the tau-weighted problem: mu(w, 1/tau)."""
    if tau <= 0:
        raise InvalidArgumentError("tau must be positive")
    return mu_invert(ctx, w.z, 1.0 / tau)


def rho_tilde(ctx: MetricContext, a: BoundaryPoint, b: BoundaryPoint, tau: float) -> float:
    """Quasimetric (tau Lambda(w,|z-w|) + tau Lambda(z,|z-w|))^nu; exactly symmetric."""
    if tau <= 0:
        raise InvalidArgumentError("tau must be positive")
    r = abs(a.z - b.z)
    if r == 0.0:
        return 0.0
    s = tau * lambda_integral(ctx, b.z, r) + tau * lambda_integral(ctx, a.z, r)
    return float(s ** ctx.nu_exponent)


def smooth_distance(ctx: MetricContext, a: BoundaryPoint, w0: BoundaryPoint,
                    eps: float = 0.25) -> float:
    """Smooth surrogate d*(a, w0), comparable to the CC distance.

    The computation recenters at w0 (normal form to order 2), forms
    d*_small = mu~((Lambda~(|z|^2) + g^2)^(1/2)) with g = t - T(z, 0) and the
    fitted piecewise model Lambda~, and d*_large = (|z|^4 + t^2)^(1/4), then
    splices them with a partition of unity in the single argument
    eps * d*_large (weights chi and 1 - chi of the same quantity, so the two
    comparable branches can never vanish simultaneously).
    """
    z0 = complex(w0.z)
    p_w = normalize_potential(ctx.potential, z0, 2)
    z_t, t_t = recenter_boundary(ctx.potential, a.z, a.t, z0, w0.t, kappa=2)
    if z_t == 0 and t_t == 0.0:
        return 0.0
    model = _model_for(ctx, z0)
    g = t_t - twist_T(p_w, z_t, 0.0)
    arg = math.sqrt(model.value(abs(z_t) ** 2) + g * g)
    d_small = model.inverse(arg)
    d_large = (abs(z_t) ** 4 + t_t * t_t) ** 0.25
    wgt = float(chi_down(eps * d_large, 1.0, 2.0))
    return wgt * d_small + (1.0 - wgt) * d_large


@dataclass
class VandermondeCoeffs:
    """Coefficients a(n, k) expressing mixed partials through directional derivatives."""

    order: int
    directions: np.ndarray
    table: np.ndarray  # shape (j+1, j+1); [n, k]
    bound: float

    @property
    def bound_ok(self) -> bool:
        return bool(np.max(np.abs(self.table)) <= self.bound * (1 + 1e-12))

    def reconstruct(self, dir_derivs) -> np.ndarray:
        """Mixed partials d^j f / dz^k dzbar^{j-k} (k = 0..j) from grad_nu^j f values."""
        d = np.asarray(dir_derivs, dtype=complex)
        if d.shape != (self.order + 1,):
            raise InvalidArgumentError(
                f"expected {self.order + 1} directional derivatives")
        return self.table.T @ d


def vandermonde_coeffs(j: int, directions=None) -> VandermondeCoeffs:
    """Solve the direction-to-mixed-partial system of order j.

    The matrix rows are nu_n^{2k-j}; its determinant is a Vandermonde
    determinant in the nu_n^2, so the system is solvable exactly when those
    squares are pairwise distinct.  The coefficient bound
    (j!)^2 (min |nu_a^2 - nu_b^2|)^(-j(j+1)/2) is recorded alongside.
    """
    if j < 0:
        raise InvalidArgumentError("order j must be >= 0")
    if directions is None:
        directions = _default_directions(j)
    nus = np.asarray(directions, dtype=complex)
    if nus.shape != (j + 1,):
        raise InvalidArgumentError(f"need exactly {j + 1} directions for order {j}")
    sq = nus**2
    seps = [abs(sq[p] - sq[q]) for p in range(j + 1) for q in range(p)]
    minsep = min(seps) if seps else math.inf
    if j >= 1 and minsep < 1e-12:
        raise SingularSystemError("coincident squared directions make the system singular")
    A = np.empty((j + 1, j + 1), dtype=complex)
    for n in range(j + 1):
        for k in range(j + 1):
            A[n, k] = nus[n] ** k * np.conj(nus[n]) ** (j - k)
    Ainv = np.linalg.inv(A)
    table = np.empty((j + 1, j + 1), dtype=complex)
    for n in range(j + 1):
        for k in range(j + 1):
            table[n, k] = Ainv[k, n] / math.comb(j, k)
    bound = math.factorial(j) ** 2 * (minsep ** (-j * (j + 1) / 2.0) if j >= 1 else 1.0)
    return VandermondeCoeffs(j, nus, table, float(bound))


def max_direction(w: Weight, z: complex, J: int, n_grid: int = 1024) -> complex:
    """Direction nu* whose derivatives |grad_nu^j h| are near-maximal for all j <= J.

    Searches an angular grid for the maximizer of
    min_j |grad_nu^j h(z)| / sum_k |d^j h / dz^k dzbar^{j-k}(z)| (ratio +inf
    when the denominator vanishes); ties break to the smallest angle.
    """
    z = complex(z)
    angles = 2.0 * np.pi * np.arange(n_grid) / n_grid
    nus = np.exp(1j * angles)
    score = np.full(n_grid, np.inf)
    for j in range(J + 1):
        partials = [w.partial(k, j - k, z) for k in range(j + 1)]
        denom = sum(abs(p) for p in partials)
        if denom == 0.0:
            continue  # ratio +inf for every direction; no constraint
        grad = np.zeros(n_grid, dtype=complex)
        for k, p in enumerate(partials):
            grad += math.comb(j, k) * nus**k * np.conj(nus) ** (j - k) * p
        score = np.minimum(score, np.abs(grad) / denom)
    best = int(np.argmax(score))
    return complex(nus[best])
