"""Tube-domain Szego kernel, its tangential derivatives, and the experiments.

The kernel of the regularization at height eps is the double integral

    S_eps(z, w) = (1/4 pi^2) int_0^inf int_R e^{i tau (z2 + i eps - conj(w2))
                  + eta (z + conj(w))} / I(eta, tau)  d eta d tau,

with I(eta, tau) = int_R exp(2[eta theta - tau b(theta)]) d theta.  Everything
here works in log space: I can overflow double precision for moderate eta, but
the combined tau-integrand is always damped by at least exp(-tau * eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import TubeProfile, potential_from_profile
from .errors import DivergenceError, InvalidArgumentError
from .geometry import BoundaryPoint, MetricContext, ball_volume, mu_invert
from .normalize import twist_T
from .quadrature import (
    QuadratureConfig,
    convex_laplace,
    integrate_halfline_damped,
)

__all__ = [
    "KernelQuery",
    "KernelValue",
    "inner_weight_integral",
    "tube_szego_kernel",
    "tube_szego_derivative",
    "bergman_kernel",
    "sharpness_scan",
    "SharpnessRow",
    "growth_envelope",
    "EnvelopeReport",
]


@dataclass(frozen=True)
class KernelQuery:
    """A kernel evaluation request; epsilon must be strictly positive."""

    profile: TubeProfile
    a: BoundaryPoint
    b: BoundaryPoint
    epsilon: float
    deriv_order_k: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidArgumentError("epsilon must be > 0 (the kernel is never evaluated at 0)")
        if self.deriv_order_k < 0:
            raise InvalidArgumentError("derivative order must be >= 0")


@dataclass
class KernelValue:
    value: complex
    inner_integral_stats: dict
    error_estimate: float

    def __post_init__(self):
        if self.error_estimate < 0:
            raise InvalidArgumentError("error_estimate must be >= 0")


def inner_weight_integral(profile: TubeProfile, eta: float, tau: float) -> float:
    """I(eta, tau) = int exp(2[eta theta - tau b(theta)]) d theta (refined value)."""
    if tau <= 0:
        raise InvalidArgumentError("tau must be positive")

    def phi(theta):
        return 2.0 * (tau * float(profile.b(theta)) - eta * theta)

    res = convex_laplace(phi, QuadratureConfig(abs_tol=1e-13, rel_tol=1e-11))
    return float(res.value)


class _EtaIntegrals:
    """Vectorized eta-integrals J(tau) = int g(eta) e^{eta s + i eta v} / I d eta.

    theta0(eta) solves b'(theta) = eta/tau by vectorized bisection inside the
    convexity bracket [u/A, u/a]; I is a tensor Gauss-Legendre quadrature of the
    Gaussian-like bump around theta0, carried as log I.  The eta window is
    centered at tau b'(s/2) with half-width sqrt(cut * tau * A), where the
    convexity upper bound A certifies -phi(theta0) >= eta^2/(tau A) growth.
    """

    def __init__(self, profile, s, v, weight="one", x_ref=0.0,
                 theta_panels=4, theta_order=15, eta_panels=8, eta_order=20,
                 log_cut=40.0):
        self.profile = profile
        self.s = float(s)
        self.v = float(v)
        self.weight = weight
        self.x_ref = float(x_ref)
        self.a_lo, self.a_hi = profile.convexity_bounds
        self.log_cut = float(log_cut)
        gx, gw = np.polynomial.legendre.leggauss(theta_order)
        self.theta_nodes, self.theta_weights = self._composite(gx, gw, theta_panels)
        gx, gw = np.polynomial.legendre.leggauss(eta_order)
        self.eta_gx, self.eta_gw = gx, gw
        self.eta_panels = eta_panels
        self.cache = {}
        self.evals = 0

    @staticmethod
    def _composite(gx, gw, panels):
        # composite rule on [-1, 1] with `panels` equal panels
        edges = np.linspace(-1.0, 1.0, panels + 1)
        nodes, weights = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx)
            weights.append(0.5 * (hi - lo) * gw)
        return np.concatenate(nodes), np.concatenate(weights)

    def theta0(self, eta, tau):
        """Vectorized inverse of b' at eta/tau (bisection in the convexity bracket)."""
        u = np.asarray(eta, dtype=float) / tau
        lo = np.minimum(u / self.a_lo, u / self.a_hi) - 1e-9
        hi = np.maximum(u / self.a_lo, u / self.a_hi) + 1e-9
        d1 = self.profile.deriv
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            go_right = np.asarray(d1(1, mid)) < u
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        return 0.5 * (lo + hi)

    def log_inner(self, eta, tau):
        """log I(eta, tau) for an eta array."""
        eta = np.asarray(eta, dtype=float)
        th0 = self.theta0(eta, tau)
        b0 = np.asarray(self.profile.b(th0))
        phimin = 2.0 * (tau * b0 - eta * th0)
        w_half = math.sqrt(self.log_cut / (tau * self.a_lo)) * 1.05
        theta = th0[:, None] + w_half * self.theta_nodes[None, :]
        expo = 2.0 * (tau * np.asarray(self.profile.b(theta)) - eta[:, None] * theta) - phimin[:, None]
        self.evals += expo.size
        vals = np.exp(-np.minimum(np.maximum(expo, -2.0), 700.0))
        i_tilde = w_half * (vals * self.theta_weights[None, :]).sum(axis=1)
        return np.log(i_tilde) - phimin

    def _g(self, eta, tau):
        if self.weight == "one":
            return 1.0
        if self.weight == "zderiv":
            return eta - tau * float(self.profile.deriv(1, self.x_ref))
        raise InvalidArgumentError(f"unknown eta weight {self.weight!r}")

    def __call__(self, tau, resolution=1.0):
        """Returns (log_scale, complex mantissa) of J(tau)."""
        key = (float(tau), float(resolution))
        got = self.cache.get(key)
        if got is not None:
            return got
        A = self.a_hi
        center = tau * float(self.profile.deriv(1, self.s / 2.0))
        half = math.sqrt(self.log_cut * tau * A) * 1.05 + 1e-300
        n_osc = abs(self.v) * 2.0 * half / (2.0 * math.pi)
        panels = max(self.eta_panels, int(2 + 1.5 * n_osc))
        panels = int(math.ceil(panels * resolution))
        nodes, weights = self._composite(self.eta_gx, self.eta_gw, panels)
        eta = center + half * nodes
        logI = self.log_inner(eta, tau)
        psi = eta * self.s - logI
        psim = float(np.max(psi))
        mant = np.exp(psi - psim) * self._g(eta, tau)
        if self.v != 0.0:
            mant = mant * np.exp(1j * eta * self.v)
        val = complex(np.sum(weights * mant) * half)
        out = (psim, val)
        self.cache[key] = out
        return out


def _effective_damping(profile, xa, xb, eps):
    gap = float(profile.b(xa)) + float(profile.b(xb)) - 2.0 * float(profile.b((xa + xb) / 2.0))
    return gap + eps


def _tube_integral(q: KernelQuery, tau_power: int, eta_weight: str,
                   cfg: QuadratureConfig | None = None) -> KernelValue:
    """(1/4 pi^2) int_0^inf tau^p e^{i tau dt - tau(B + eps)} J(tau) d tau."""
    profile = q.profile
    xa, xb = q.a.z.real, q.b.z.real
    s = xa + xb
    v = q.a.z.imag - q.b.z.imag
    dt = q.a.t - q.b.t
    B = float(profile.b(xa)) + float(profile.b(xb))
    eps_eff = _effective_damping(profile, xa, xb, q.epsilon)
    if eps_eff <= 0:
        raise DivergenceError("damping exponent <= 0: points not on/above the boundary")
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-8, truncation_log_cut=40.0)
    ji = _EtaIntegrals(profile, s, v, weight=eta_weight, x_ref=xa,
                       log_cut=cfg.truncation_log_cut)
    tau_evals = [0]

    def f(tau):
        if tau <= 0.0:
            return 0.0j
        tau_evals[0] += 1
        logscale, mant = ji(tau)
        expo = -tau * (B + q.epsilon) + logscale
        if expo < -745.0:
            return 0.0j
        out = math.exp(expo) * mant * tau**tau_power
        if dt != 0.0:
            out *= complex(math.cos(tau * dt), math.sin(tau * dt))
        return out

    res = integrate_halfline_damped(f, eps_eff, cfg)
    value = complex(res.value) / (4.0 * math.pi**2)

    # probe the inner resolution at the tau that dominates the integral
    tau_star = max((1.0 + tau_power) / eps_eff, 0.5)
    l1, m1 = ji(tau_star)
    l2, m2 = ji(tau_star, resolution=1.6)
    inner_rel = abs(m1 * math.exp(l1 - max(l1, l2)) - m2 * math.exp(l2 - max(l1, l2))) / (
        abs(m2 * math.exp(l2 - max(l1, l2))) + 1e-300)
    err = res.error_estimate / (4.0 * math.pi**2) + inner_rel * abs(value)
    stats = {
        "tau_evaluations": tau_evals[0],
        "integrand_evaluations": ji.evals,
        "inner_rel_probe": inner_rel,
        "effective_damping": eps_eff,
        "converged": res.converged,
    }
    return KernelValue(value, stats, float(err))


def tube_szego_kernel(q: KernelQuery, cfg: QuadratureConfig | None = None) -> KernelValue:
    """The regularized Szego kernel S_eps(a, b) of the tube domain."""
    return _tube_integral(q, tau_power=0, eta_weight="one", cfg=cfg)


def tube_szego_derivative(q: KernelQuery, cfg: QuadratureConfig | None = None) -> KernelValue:
    """The kernel of Zbar^k Z applied to S_eps (k = q.deriv_order_k).

    For k >= 1 the commutator structure collapses to a prefactor
    -(b^{(k+1)}(Re z)/2^k) against the kernel integral with an extra factor
    tau.  For k = 0 the Z-derivative is the same integral weighted by
    (eta - tau b'(Re z)).
    """
    k = q.deriv_order_k
    xa = q.a.z.real
    if k == 0:
        return _tube_integral(q, tau_power=0, eta_weight="zderiv", cfg=cfg)
    pref = float(q.profile.deriv(k + 1, xa))
    if pref == 0.0:
        return KernelValue(0.0j, {"prefactor": 0.0}, 0.0)
    base = _tube_integral(q, tau_power=1, eta_weight="one", cfg=cfg)
    scale = -pref / 2.0**k
    base.value = scale * base.value
    base.error_estimate = abs(scale) * base.error_estimate
    base.inner_integral_stats["prefactor"] = pref
    return base


def bergman_kernel(q: KernelQuery, cfg: QuadratureConfig | None = None) -> KernelValue:
    """Bergman kernel via the boundary relation: 2i d/d(conj w2) of the Szego kernel.

    The conjugate-w2 derivative of the kernel exponent contributes -i tau, so
    the Bergman integrand is the Szego one with an extra factor 2 tau.
    """
    base = _tube_integral(q, tau_power=1, eta_weight="one", cfg=cfg)
    base.value = 2.0 * base.value
    base.error_estimate = 2.0 * base.error_estimate
    return base


@dataclass
class SharpnessRow:
    n: int
    value: float
    gap: float


def sharpness_scan(profile: TubeProfile, k: int, n_range, eps: float,
                   cfg: QuadratureConfig | None = None):
    """Reduced antipodal derivative values at z_n = (n, i b(n)), z_{-n}.

    At these points z + conj(w) = 0, so the eta-exponential drops and the
    reduced quantity is int_0^inf tau e^{-tau(b(n)+b(-n)+eps)} int I^{-1} d eta
    d tau, the derivative kernel stripped of its -b^{(k+1)}(n)/2^{k+2}pi^2
    prefactor.  Returns one row (n, value, gap) per n.
    """
    if k < 1:
        raise InvalidArgumentError("the sharpness scan needs k >= 1 (no clean k = 0 reduction)")
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-8, truncation_log_cut=40.0)
    ji = _EtaIntegrals(profile, 0.0, 0.0, log_cut=cfg.truncation_log_cut)
    rows = []
    for n in n_range:
        gap = float(profile.b(float(n))) + float(profile.b(float(-n))) + eps

        def f(tau, gap=gap):
            if tau <= 0.0:
                return 0.0
            logscale, mant = ji(tau)
            expo = -tau * gap + logscale
            if expo < -745.0:
                return 0.0
            return math.exp(expo) * float(np.real(mant)) * tau

        res = integrate_halfline_damped(f, gap, cfg)
        rows.append(SharpnessRow(int(n), float(np.real(res.value)), gap))
    return rows


@dataclass
class EnvelopeReport:
    rows: list
    max_ratio: float
    eps: float
    seed: int
    config: dict = field(default_factory=dict)


def growth_envelope(profile: TubeProfile, n_pairs: int = 50, eps: float = 0.5,
                    seed: int = 0, pairs=None, ctx: MetricContext | None = None,
                    cfg: QuadratureConfig | None = None) -> EnvelopeReport:
    """Size-estimate envelope check: R = |S_eps(a,b)| * |B_d(a, d_eps(a,b))|.

    ``d_eps`` augments the twisted t-gap by eps before inverting mu, matching
    the regularized kernel's effective separation.  Reports every pair and the
    maximal ratio; the estimate behind it says R should stay bounded.
    """
    ctx = ctx or MetricContext.from_profile(profile)
    pot = ctx.potential
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = []
        for _ in range(n_pairs):
            xa = rng.uniform(-2.0, 2.0)
            xb = xa + rng.uniform(-3.0, 3.0)
            ta = rng.uniform(-2.5, 2.5)
            tb = ta + rng.uniform(-5.0, 5.0)
            pairs.append((BoundaryPoint(complex(xa, 0.0), ta),
                          BoundaryPoint(complex(xb, 0.0), tb)))
    rows = []
    for a, b in pairs:
        kv = tube_szego_kernel(KernelQuery(profile, a, b, eps), cfg=cfg)
        tgap = abs(a.t - b.t - twist_T(pot, a.z, b.z)) + eps
        d_eps = abs(a.z - b.z) + mu_invert(ctx, b.z, tgap)
        vol = ball_volume(ctx, a, d_eps)
        rows.append({
            "x_a": a.z.real, "t_a": a.t, "x_b": b.z.real, "t_b": b.t,
            "abs_kernel": abs(kv.value), "d_eps": d_eps, "ball_volume": vol,
            "ratio": abs(kv.value) * vol,
        })
    max_ratio = max(r["ratio"] for r in rows)
    return EnvelopeReport(rows, float(max_ratio), float(eps), int(seed),
                          config={"n_pairs": len(rows)})
