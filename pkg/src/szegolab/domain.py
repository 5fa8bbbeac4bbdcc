"""Weights h, subharmonic potentials P, tube profiles b, and the example domains.

The weight h = (Laplacian of P) generates all of the non-isotropic geometry;
this module houses its evaluators, the concrete example domains, the sampled
verification of the uniform finite-type hypotheses, and the construction of a
potential with prescribed Laplacian via logarithmic kernels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._cutoffs import bump, chi_down, smoothstep, smoothstep_prime
from .errors import (
    CapabilityError,
    IntegralFailureError,
    InvalidArgumentError,
)
from .quadrature import IntegralResult, QuadratureConfig, integrate_1d

__all__ = [
    "Weight",
    "Potential",
    "TubeProfile",
    "UftThresholds",
    "UftReport",
    "make_heisenberg",
    "make_parabolic_tube",
    "make_sharpness_tube",
    "make_smoothed_polynomial",
    "make_h3_counterexample",
    "weight_from_profile",
    "potential_from_profile",
    "verify_uft",
    "build_potential",
]

_FD_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


class Weight:
    """A nonnegative density h with mixed Wirtinger-derivative evaluators.

    ``eval`` must accept complex scalars or ndarrays.  ``partial(a, b, z)``
    returns d^{a+b} h / dz^a dzbar^b; when no analytic evaluator is supplied it
    falls back to tensor central differences with step ``fd_step`` (default
    1e-4).  Round-off grows like eps/step^order, so finite-difference-backed
    weights should not advertise ``max_order`` beyond 3.
    """

    def __init__(self, eval, partial=None, max_order=3, *, name="weight",
                 sup_norm=None, fd_step=1e-4):
        self._eval = eval
        self._partial = partial
        self.max_order = int(max_order)
        self.name = name
        self._sup = sup_norm
        self.fd_step = float(fd_step)

    def __call__(self, z):
        return self._eval(z)

    @property
    def eval(self):
        return self._eval

    @property
    def sup_norm(self) -> float:
        """Sup of |h| (exact for the built-ins, sampled otherwise)."""
        if self._sup is None:
            xs = np.linspace(-20.0, 20.0, 81)
            grid = xs[:, None] + 1j * xs[None, :]
            self._sup = 1.5 * float(np.max(np.abs(self._eval(grid))))
        return self._sup

    def partial(self, alpha: int, beta: int, z: complex) -> complex:
        order = alpha + beta
        if alpha < 0 or beta < 0:
            raise InvalidArgumentError("derivative orders must be >= 0")
        if order > self.max_order:
            raise CapabilityError(
                f"weight '{self.name}' trusts derivatives up to order {self.max_order}, got {order}"
            )
        if self._partial is not None:
            return self._partial(alpha, beta, z)
        if order == 0:
            return complex(self._eval(complex(z)))
        return self._fd_partial(alpha, beta, complex(z))

    def _fd_partial(self, alpha, beta, z):
        # d_z^a d_zbar^b = 2^-(a+b) * sum_{p,q} C(a,p)C(b,q)(-i)^{a-p} i^{b-q} d_x^{p+q} d_y^{a+b-p-q}
        h = self.fd_step
        total = 0.0 + 0.0j
        for p in range(alpha + 1):
            for q in range(beta + 1):
                coeff = (
                    math.comb(alpha, p)
                    * math.comb(beta, q)
                    * (-1j) ** (alpha - p)
                    * (1j) ** (beta - q)
                )
                total += coeff * self._fd_xy(p + q, (alpha - p) + (beta - q), z, h)
        return total / 2 ** (alpha + beta)

    def _fd_xy(self, p, q, z, h):
        if p > 4 or q > 4:
            raise CapabilityError("finite-difference fallback supports orders <= 4 per axis")
        ox, cx = _FD_STENCILS[p]
        oy, cy = _FD_STENCILS[q]
        pts = z + h * (np.asarray(ox)[:, None] + 1j * np.asarray(oy)[None, :])
        vals = np.asarray(self._eval(pts), dtype=float)
        acc = np.asarray(cx)[:, None] * np.asarray(cy)[None, :] * vals
        return complex(acc.sum() / h ** (p + q))

    def dir_deriv(self, j: int, nu: complex, z: complex) -> complex:
        """j-th directional derivative along the unit vector nu.

        Uses grad_nu^j f = sum_k C(j,k) nu^k nubar^{j-k} d^j f / dz^k dzbar^{j-k}.
        """
        if j == 0:
            return complex(self._eval(complex(z)))
        total = 0.0 + 0.0j
        for k in range(j + 1):
            total += math.comb(j, k) * nu**k * np.conj(nu) ** (j - k) * self.partial(k, j - k, z)
        return total


class Potential:
    """A subharmonic potential P with gradient and holomorphic-derivative access.

    ``grad_z`` is the Wirtinger derivative dP/dz (so |grad P| = 2|grad_z|).
    ``holo_deriv(j, z)`` returns d^j P / dz^j; without an analytic evaluator it
    uses trapezoid Fourier coefficients on a circle of radius 0.5 (64 nodes),
    with the leading mixed-term contamination removed through the weight
    (d^{j+1} dzbar P = (1/4) d^j h / dz^j).  The estimator is exact on
    polynomials, which makes re-normalization idempotent to round-off.
    """

    def __init__(self, eval, grad_z=None, holo_deriv=None, weight=None, *, name="potential",
                 circle_radius=0.5, circle_nodes=64):
        self._eval = eval
        self._grad = grad_z
        self._holo = holo_deriv
        self.weight = weight
        self.name = name
        self.circle_radius = float(circle_radius)
        self.circle_nodes = int(circle_nodes)

    def __call__(self, z):
        return self._eval(z)

    @property
    def eval(self):
        return self._eval

    def grad_z(self, z: complex) -> complex:
        if self._grad is not None:
            return self._grad(z)
        h = 5e-3
        z = complex(z)
        px = (self._eval(z + h) - self._eval(z - h)) / (2 * h)
        py = (self._eval(z + 1j * h) - self._eval(z - 1j * h)) / (2 * h)
        return 0.5 * (px - 1j * py)

    def holo_deriv(self, j: int, z: complex) -> complex:
        if j < 1:
            raise InvalidArgumentError("holo_deriv needs j >= 1")
        if self._holo is not None:
            return self._holo(j, z)
        return self._holo_circle(j, complex(z))

    def _holo_circle(self, j, z0):
        r = self.circle_radius
        n = self.circle_nodes
        theta = 2.0 * np.pi * np.arange(n) / n
        ring = z0 + r * np.exp(1j * theta)
        vals = np.asarray([self._eval(w) for w in ring], dtype=complex)
        cj = np.sum(vals * np.exp(-1j * j * theta)) / n
        est = math.factorial(j) * cj / r**j
        if self.weight is not None:
            # c_j picks up sum_{b>=1} d^{j+b} dzbar^b P * r^{j+2b}/((j+b)! b!);
            # one d dzbar converts P to h/4, leaving weight partials we can query.
            for b in (1, 2):
                if (j + b - 1) + (b - 1) > self.weight.max_order:
                    break
                mixed = self.weight.partial(j + b - 1, b - 1, z0) / 4.0
                est -= math.factorial(j) * r ** (2 * b) / (
                    math.factorial(j + b) * math.factorial(b)
                ) * mixed
        return est

    def fd_laplacian(self, z: complex, step: float = 0.05) -> float:
        """5-point finite-difference Laplacian of P at z."""
        z = complex(z)
        s = (
            self._eval(z + step)
            + self._eval(z - step)
            + self._eval(z + 1j * step)
            - 4.0 * self._eval(z)
            + self._eval(z - 1j * step)
        )
        return float(np.real(s)) / step**2


class TubeProfile:
    """A convex one-variable profile b defining the tube domain Im z2 > b(Re z)."""

    def __init__(self, b, deriv, convexity_bounds, *, name="tube"):
        self.b = b
        self._deriv = deriv
        self.convexity_bounds = (float(convexity_bounds[0]), float(convexity_bounds[1]))
        self.name = name

    def __call__(self, x):
        return self.b(x)

    def deriv(self, k: int, x):
        if k < 1:
            raise InvalidArgumentError("profile derivatives start at k = 1")
        return self._deriv(k, x)


def make_heisenberg():
    """The model domain with P(z) = |z|^2, h = 4."""

    def h_eval(z):
        z = np.asarray(z)
        return np.broadcast_to(4.0, z.shape).copy() if z.shape else 4.0

    def h_partial(a, b, z):
        return 4.0 + 0.0j if a == b == 0 else 0.0 + 0.0j

    w = Weight(h_eval, h_partial, max_order=99, name="heisenberg", sup_norm=4.0)

    def p_eval(z):
        z = np.asarray(z)
        return (z.real**2 + z.imag**2) if z.shape else abs(complex(z)) ** 2

    def p_holo(j, z):
        return np.conj(z) if j == 1 else 0.0 + 0.0j

    p = Potential(p_eval, grad_z=np.conj, holo_deriv=p_holo, weight=w, name="heisenberg")
    return w, p


def make_parabolic_tube() -> TubeProfile:
    """Oracle tube profile b(x) = x^2/2, so b'' = 1 and h = 1."""

    def b(x):
        return np.asarray(x, dtype=float) ** 2 / 2.0

    def deriv(k, x):
        x = np.asarray(x, dtype=float)
        if k == 1:
            return x if x.shape else float(x)
        if k == 2:
            out = np.ones_like(x)
        else:
            out = np.zeros_like(x)
        return out if x.shape else float(out)

    return TubeProfile(b, deriv, (1.0, 1.0), name="parabolic-tube")


# -- sharpness tube -----------------------------------------------------------

_SHARP_LO, _SHARP_HI = 0.25, 0.45


def _sharp_beta(t):
    """b'' as a function of the centered fractional part: exp(t * chi(|t|))."""
    t = np.asarray(t, dtype=float)
    return np.exp(t * chi_down(np.abs(t), _SHARP_LO, _SHARP_HI))


def _sharp_beta_prime(t):
    t = np.asarray(t, dtype=float)
    r = np.abs(t)
    u = (r - _SHARP_LO) / (_SHARP_HI - _SHARP_LO)
    chi = 1.0 - smoothstep(u)
    dchi = -smoothstep_prime(u) / (_SHARP_HI - _SHARP_LO)
    return _sharp_beta(t) * (chi + r * dchi)


class _SharpTables:
    """Cumulative integrals of the periodic b'' on [-1/2, 1/2] (linear interp)."""

    def __init__(self, n=16385):
        ts = np.linspace(-0.5, 0.5, n)
        beta = _sharp_beta(ts)
        h = ts[1] - ts[0]
        # cumulative trapezoid refined by Richardson against half resolution
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (beta[1:] + beta[:-1]) * h)])
        # anchor g(0) = 0
        i0 = n // 2
        g = cum - cum[i0]
        cum2 = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * h)])
        G = cum2 - cum2[i0]
        self.ts = ts
        self.g = g
        self.G = G
        self.M = g[-1] - g[0]
        self.dG = G[-1] - G[0]

    def eval_g(self, t):
        return np.interp(t, self.ts, self.g)

    def eval_G(self, t):
        return np.interp(t, self.ts, self.G)


def make_sharpness_tube() -> TubeProfile:
    """The 1-periodic-curvature profile with b''(x) = exp(x - n) near every integer n.

    b'' is exp(t * chi(|t|)) in the centered fractional part t = x - round(x),
    with chi = 1 for |t| <= 1/4 and 0 for |t| >= 0.45, so a = exp(-1/2) <=
    b'' <= exp(1/2).  b' and b come from cumulative integration with
    b(0) = b'(0) = 0, assembled from per-period tables.
    """
    tab = _SharpTables()

    def split(x):
        x = np.asarray(x, dtype=float)
        n = np.round(x)
        return n, x - n

    def b(x):
        scalar = np.isscalar(x) or np.asarray(x).shape == ()
        n, t = split(x)
        out = tab.M * n**2 / 2.0 + n * tab.dG + n * tab.M * t + tab.eval_G(t)
        return float(out) if scalar else out

    def deriv(k, x):
        scalar = np.isscalar(x) or np.asarray(x).shape == ()
        n, t = split(x)
        if k == 1:
            out = n * tab.M + tab.eval_g(t)
        elif k == 2:
            out = _sharp_beta(t)
        elif k == 3:
            out = _sharp_beta_prime(t)
        else:
            # modest-accuracy fallback; only needed for high-order Zbar^k Z
            h = 1e-5
            out = (_nth_fd(_sharp_beta_prime, t, k - 3, h))
        return float(out) if scalar else out

    return TubeProfile(b, deriv, (math.exp(-0.5), math.exp(0.5)), name="sharpness-tube")


def _nth_fd(f, x, k, h):
    if k == 0:
        return f(x)
    offs, coefs = _FD_STENCILS[min(k, 4)]
    x = np.asarray(x, dtype=float)
    acc = sum(c * f(x + o * h) for o, c in zip(offs, coefs))
    return acc / h**k


# -- smoothed polynomial and the (H3) counterexample --------------------------

class _ChiTable:
    """chi(t) = integral_0^t rho, rho = 1 - smoothstep(s-1): t for t<=1, 3/2 for t>=2."""

    def __init__(self, n=4097):
        us = np.linspace(0.0, 1.0, n)
        s = smoothstep(us)
        h = us[1] - us[0]
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * h)])
        self.us = us
        self.cum = cum

    def chi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= 1.0, t, 0.0)
        mid = (t > 1.0) & (t < 2.0)
        out = np.where(mid, t - np.interp(t - 1.0, self.us, self.cum), out)
        return np.where(t >= 2.0, 1.5, out)


_CHI = _ChiTable()


def make_smoothed_polynomial(Q_laplacian: Weight) -> Weight:
    """Weight chi(Delta Q) for a subharmonic non-harmonic polynomial Q.

    chi is a fixed smooth non-decreasing function with chi(t) = t for t <= 1
    and chi = 3/2 for t >= 2; derivatives of the composite come from the
    finite-difference fallback.
    """

    def h_eval(z):
        return _CHI.chi(np.asarray(Q_laplacian.eval(z), dtype=float))

    return Weight(h_eval, None, max_order=3,
                  name=f"smoothed({Q_laplacian.name})", sup_norm=1.5)


def make_h3_counterexample() -> Weight:
    """Weight 1 + chi(r) f(theta): satisfies (H1)-(H2) but not (H3).

    f is a smooth bump supported in |theta| <= 1/100 with f(0) = 1, and chi
    rises smoothly from 0 (r <= 1) to 1 (r >= 2); the annulus integrals of
    h(z+eta)/eta^2 then grow logarithmically in the outer radius.
    """

    def h_eval(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        theta = np.angle(z)
        rise = smoothstep(r - 1.0)
        out = 1.0 + rise * bump(100.0 * theta)
        return out if out.shape else float(out)

    return Weight(h_eval, None, max_order=2, name="h3-counterexample", sup_norm=2.0)


def weight_from_profile(profile: TubeProfile) -> Weight:
    """The Laplacian weight of a tube potential: h(z) = b''(Re z)."""
    max_order = 99 if profile.name == "parabolic-tube" else 1

    def h_eval(z):
        z = np.asarray(z)
        return profile.deriv(2, z.real)

    def h_partial(a, b, z):
        return complex(profile.deriv(2 + a + b, np.real(z))) / 2 ** (a + b)

    a, A = profile.convexity_bounds
    return Weight(h_eval, h_partial, max_order=max_order,
                  name=f"tube({profile.name})", sup_norm=A)


def potential_from_profile(profile: TubeProfile) -> Potential:
    """The tube potential P(z) = b(Re z) with analytic derivative evaluators."""
    w = weight_from_profile(profile)

    def p_eval(z):
        z = np.asarray(z)
        return profile.b(z.real)

    def p_grad(z):
        return complex(profile.deriv(1, np.real(z))) / 2.0

    def p_holo(j, z):
        return complex(profile.deriv(j, np.real(z))) / 2**j

    return Potential(p_eval, grad_z=p_grad, holo_deriv=p_holo, weight=w,
                     name=f"tube({profile.name})")


# -- UFT hypothesis verification ----------------------------------------------

@dataclass(frozen=True)
class UftThresholds:
    """Verdict thresholds; the paper's constants are abstract, so these are policy."""

    c1_min: float = 1e-6
    ck_max: float = 1e6
    c2_max: float = 50.0
    h3_growth_tol: float = 1e-3  # per-octave growth flagged as unbounded
    h3_growth_window: int = 4


@dataclass
class UftReport:
    h1_infimum: float
    ck_norms: list
    h3_supremum: float
    h3_curve: list  # [(r, sup over centers of |annulus integral up to r|)]
    grid: list
    thresholds: dict
    verdicts: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "h1_infimum": self.h1_infimum,
                "ck_norms": self.ck_norms,
                "h3_supremum": self.h3_supremum,
                "h3_curve": self.h3_curve,
                "grid": self.grid,
                "thresholds": self.thresholds,
                "verdicts": self.verdicts,
            },
            indent=2,
        )


def verify_uft(w: Weight, m: int, grid, *, directions: int = 64,
               ck_order: int | None = None, h3_rmax_log2: int = 10,
               h3_centers=None, h3_angular: int = 4096,
               thresholds: UftThresholds | None = None) -> UftReport:
    """Sampled evidence for the hypotheses (H1)-(H3) of order m.

    All suprema/infima are over the declared sample grid, which is recorded in
    the report together with the thresholds used.  (H3) is additionally flagged
    as failing when its dyadic annulus-integral curve keeps growing across the
    last ``h3_growth_window`` octaves, since a bounded supremum cannot be
    separated from slow logarithmic growth at any finite radius.
    """
    grid = [complex(z) for z in grid]
    if not grid:
        raise InvalidArgumentError("verify_uft needs a nonempty grid")
    if m < 2:
        raise InvalidArgumentError("type order m must be >= 2")
    if w.max_order < m - 2:
        raise CapabilityError(f"(H1) at order m={m} needs derivatives to order {m - 2}")
    th = thresholds or UftThresholds()

    nus = np.exp(2j * np.pi * np.arange(directions) / directions)
    h1_vals = []
    for z in grid:
        best = 0.0
        for nu in nus:
            tot = sum(abs(w.dir_deriv(j - 2, nu, z)) for j in range(2, m + 1))
            best = max(best, tot)
        h1_vals.append(best)
    h1_inf = float(min(h1_vals))

    kmax = ck_order if ck_order is not None else min(w.max_order, m)
    ck = []
    for k in range(kmax + 1):
        worst = 0.0
        for z in grid:
            tot = sum(abs(w.partial(a, k - a, z)) for a in range(k + 1))
            worst = max(worst, tot)
        ck.append(float(worst))

    centers = [complex(z) for z in (h3_centers if h3_centers is not None else grid[:9])]
    radii = [2.0**j for j in range(h3_rmax_log2 + 1)]
    curve = _h3_curve(w, centers, radii, h3_angular)
    h3_sup = max(v for _, v in curve)

    grew = _sustained_growth([v for _, v in curve], th.h3_growth_tol, th.h3_growth_window)
    verdicts = {
        "h1": "pass" if h1_inf >= th.c1_min else "fail",
        "h2": "pass" if all(math.isfinite(c) and c <= th.ck_max for c in ck) else "fail",
        "h3": "pass" if (h3_sup <= th.c2_max and not grew) else "fail",
    }
    return UftReport(
        h1_infimum=h1_inf,
        ck_norms=ck,
        h3_supremum=float(h3_sup),
        h3_curve=[[float(r), float(v)] for r, v in curve],
        grid=[[z.real, z.imag] for z in grid],
        thresholds={
            "c1_min": th.c1_min,
            "ck_max": th.ck_max,
            "c2_max": th.c2_max,
            "h3_growth_tol": th.h3_growth_tol,
            "h3_growth_window": th.h3_growth_window,
        },
        verdicts=verdicts,
    )


def _h3_curve(w, centers, radii, n_angular):
    """sup over centers of |int_{1<=|eta|<=r} h(z+eta)/eta^2 dm| at each dyadic r."""
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    phase = np.exp(-2j * theta)
    dtheta = 2.0 * np.pi / n_angular
    gx, gw = np.polynomial.legendre.leggauss(24)
    per_center = np.zeros((len(centers), len(radii)), dtype=complex)
    for j in range(1, len(radii)):
        a, b = radii[j - 1], radii[j]
        s = 0.5 * (a + b) + 0.5 * (b - a) * gx
        ws = 0.5 * (b - a) * gw
        ring = np.exp(1j * theta)[None, :] * s[:, None]
        for ci, z in enumerate(centers):
            vals = np.asarray(w.eval(z + ring), dtype=float)
            ang = (vals * phase[None, :]).sum(axis=1) * dtheta
            per_center[ci, j] = per_center[ci, j - 1] + np.sum(ws * ang / s)
    curve = [(radii[j], float(np.max(np.abs(per_center[:, j])))) for j in range(len(radii))]
    return curve


def _sustained_growth(values, tol, window):
    if len(values) < window + 1:
        return False
    tail = values[-(window + 1):]
    deltas = [tail[i + 1] - tail[i] for i in range(window)]
    return all(d > tol for d in deltas)


# -- potential construction (logarithmic kernels) ------------------------------

def _angular_integral_regular(kernel_log_terms, h_vals, theta, dtheta):
    return float(np.sum(kernel_log_terms * h_vals) * dtheta)


def _k_kernel(z, s, theta, with_quad_term):
    """K1 (disk) or K2 (annulus) at eta = s e^{i theta}, without the 1/2pi."""
    eta = s * np.exp(1j * theta)
    out = np.log(np.abs(z - eta)) - math.log(s) + np.real(z / eta)
    if with_quad_term:
        out = out + 0.5 * np.real((z / eta) ** 2)
    return out


def _circle_regular(w, z, s, with_quad_term, n_theta=256):
    """Angular integral of K * h over a circle well separated from |z|."""
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    hv = np.asarray(w.eval(s * np.exp(1j * theta)), dtype=float)
    k = _k_kernel(z, s, theta, with_quad_term)
    return float(np.sum(k * hv) * (2.0 * np.pi / n_theta))


def _circle_sliver_reg(w, z, s, with_quad_term):
    """Angular integral of K * (h - h(near point)) with panels graded to arg z."""
    a = abs(z)
    theta0 = math.atan2(z.imag, z.real)
    h0 = float(w.eval(s * np.exp(1j * theta0)))
    scale = max(abs(s - a) / math.sqrt(max(s * a, 1e-300)), 1e-12)
    widths = [math.pi]
    while widths[-1] > 0.25 * scale and len(widths) < 48:
        widths.append(widths[-1] / 2.0)
    gx, gw = np.polynomial.legendre.leggauss(15)
    nodes = []
    wts = []
    for i in range(len(widths) - 1):
        hi, lo = widths[i], widths[i + 1]
        for sign in (+1.0, -1.0):
            mid = sign * 0.5 * (hi + lo)
            half = 0.5 * (hi - lo)
            nodes.append(theta0 + mid + sign * half * gx)
            wts.append(half * gw)
    # central panel
    wc = widths[-1]
    nodes.append(theta0 + wc * gx)
    wts.append(wc * gw)
    nodes = np.concatenate(nodes)
    wts = np.concatenate(wts)
    hv = np.asarray(w.eval(s * np.exp(1j * nodes)), dtype=float)
    k = _k_kernel(z, s, nodes, with_quad_term)
    return float(np.sum(k * (hv - h0) * wts))


def build_potential(w: Weight, q: QuadratureConfig | None = None, *,
                    verify: bool = True) -> Potential:
    """Construct a potential with Laplacian h from logarithmic kernels.

    The value at z is the integral of K1(z,.) h over the unit disk plus the
    integral of K2(z,.) h over an annulus truncated where the cubic kernel
    bound |K2| <= (2/3)|z/eta|^3 puts the tail below tolerance.  Angular
    integrals use the exact circle average of the kernels (log max(|z|,s)/s)
    so that only the h-fluctuation part needs graded quadrature near the
    singular circle s = |z|.
    """
    cfg = q or QuadratureConfig(abs_tol=1e-9, rel_tol=1e-9)
    sup = w.sup_norm
    if sup == 0.0:
        return Potential(lambda z: 0.0 * np.real(np.asarray(z)),
                         grad_z=lambda z: 0.0j, weight=w, name="ptilde(0)")

    cache = {}

    def ptilde(z):
        z = complex(z)
        got = cache.get(z)
        if got is None:
            got = _ptilde_value(w, z, cfg, sup)
            cache[z] = got
        return got

    pot = Potential(ptilde, weight=w, name=f"ptilde({w.name})")
    if verify:
        probes = [0.3 + 0.2j, -0.7 + 1.1j]
        for zp in probes:
            lap = pot.fd_laplacian(zp, step=0.05)
            want = float(np.real(w.eval(zp)))
            scale = max(1.0, abs(want))
            if abs(lap - want) > 2e-3 * scale:
                raise IntegralFailureError(
                    f"constructed potential fails Laplacian check at {zp}: "
                    f"fd={lap:.6e} vs h={want:.6e}"
                )
    return pot


def _radial_adaptive(f, a, b, cfg):
    if b <= a:
        return 0.0
    res = integrate_1d(f, (a, b), QuadratureConfig(
        abs_tol=max(cfg.abs_tol / 8.0, 1e-13), rel_tol=cfg.rel_tol, max_depth=24))
    return float(np.real(res.value))


def _ptilde_value(w, z, cfg, sup):
    a = abs(z)
    if a == 0.0:
        return 0.0  # both kernels vanish identically at z = 0

    def regular_integrand(with_quad):
        def f(s):
            return s * _circle_regular(w, z, s, with_quad)
        return f

    def sliver_parts(lo, hi, with_quad_term):
        # explicit circle-average piece + graded fluctuation piece
        theta0 = math.atan2(z.imag, z.real)

        def f_exp(s):
            h0 = float(w.eval(s * np.exp(1j * theta0)))
            return s * h0 * 2.0 * math.pi * math.log(max(a, s) / s)

        def f_reg(s):
            return s * _circle_sliver_reg(w, z, s, with_quad_term)

        total = 0.0
        for f in (f_exp, f_reg):
            if lo < a < hi:
                total += _radial_adaptive(f, lo, a, cfg) + _radial_adaptive(f, a, hi, cfg)
            else:
                total += _radial_adaptive(f, lo, hi, cfg)
        return total

    lo_band, hi_band = 0.9 * a, 1.1 * a
    total = 0.0

    # unit disk with K1
    disk_breaks = sorted({0.0, 1.0, min(max(lo_band, 0.0), 1.0), min(max(hi_band, 0.0), 1.0)})
    for lo, hi in zip(disk_breaks[:-1], disk_breaks[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        if lo_band < mid < hi_band:
            total += sliver_parts(lo, hi, with_quad_term=False)
        else:
            total += _radial_adaptive(regular_integrand(False), lo, hi, cfg)

    # annulus with K2, adaptive dyadic octaves with the cubic tail bound
    r_tail = (4.0 * math.pi / 3.0) * max(a, 1.0) ** 3 * sup / max(cfg.abs_tol, 1e-12)
    r_bound = max(2.0 * a, r_tail, 4.0)
    s_lo = 1.0
    small_streak = 0
    while s_lo < r_bound:
        s_hi = min(2.0 * s_lo, r_bound)
        breaks = sorted({s_lo, s_hi} | {x for x in (lo_band, a, hi_band) if s_lo < x < s_hi})
        octave = 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            mid = 0.5 * (lo + hi)
            if lo_band < mid < hi_band:
                octave += sliver_parts(lo, hi, with_quad_term=True)
            else:
                octave += _radial_adaptive(regular_integrand(True), lo, hi, cfg)
        total += octave
        if abs(octave) < cfg.abs_tol / 4.0 and s_hi >= max(4.0 * a, 8.0):
            small_streak += 1
            if small_streak >= 2:
                break
        else:
            small_streak = 0
        s_lo = s_hi
    return total / (2.0 * math.pi)
