"""Recentered potentials, twist functions, and boundary-point recentering.

``normalize_potential`` produces the potential with value, gradient, and the
holomorphic derivatives up to a chosen order removed at a center, which is the
normal form in which all small-scale geometry formulas are stated.  The twist
``T`` is the line-integral correction aligning the Re(z2) coordinate with the
CR structure; ``T_kappa`` is its Taylor-polynomial version.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import Potential, Weight
from .errors import InvalidArgumentError
from .quadrature import QuadratureConfig, integrate_1d

__all__ = [
    "NormalizedPotential",
    "normalize_potential",
    "twist_T",
    "twist_Tkappa",
    "recenter_boundary",
]


class NormalizedPotential(Potential):
    """A potential recentered at ``center`` with holomorphic jets killed to ``order``."""

    def __init__(self, base: Potential, center: complex, order: int,
                 eval, grad_z, holo_deriv, weight):
        super().__init__(eval, grad_z=grad_z, holo_deriv=holo_deriv, weight=weight,
                         name=f"{base.name}^({center:.3g},{order})")
        self.base = base
        self.center = complex(center)
        self.order = int(order)


def normalize_potential(p: Potential, sigma: complex, kappa: int) -> NormalizedPotential:
    """Recenter ``p`` at sigma and strip the harmonic jet up to order kappa.

    Returns P(z+sigma) - P(sigma) - 2Re(P_z(sigma) z)
    - 2Re(sum_{j=2}^kappa (1/j!) (d^j P/dz^j)(sigma) z^j).
    The result vanishes at 0 along with its gradient and its holomorphic
    derivatives through order kappa, while the Laplacian is h(z + sigma).
    """
    if kappa < 2:
        raise InvalidArgumentError("normalization order kappa must be >= 2")
    sigma = complex(sigma)
    p0 = float(np.real(p.eval(sigma)))
    coeffs = {1: complex(p.grad_z(sigma))}
    for j in range(2, kappa + 1):
        coeffs[j] = complex(p.holo_deriv(j, sigma)) / math.factorial(j)

    def jet(z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for j, c in coeffs.items():
            acc = acc + c * z**j
        return 2.0 * np.real(acc)

    def n_eval(z):
        z = np.asarray(z, dtype=complex)
        return np.real(p.eval(z + sigma)) - p0 - jet(z)

    def n_grad(z):
        z = complex(z)
        acc = sum(j * c * z ** (j - 1) for j, c in coeffs.items())
        return p.grad_z(z + sigma) - acc

    def n_holo(j, z):
        z = complex(z)
        base = p.holo_deriv(j, z + sigma)
        corr = 0.0 + 0.0j
        for jj, c in coeffs.items():
            if jj >= j:
                corr += c * math.factorial(jj) / math.factorial(jj - j) * z ** (jj - j)
        return base - corr

    w = p.weight
    n_weight = None
    if w is not None:
        n_weight = Weight(
            lambda z: w.eval(np.asarray(z, dtype=complex) + sigma),
            lambda a, b, z: w.partial(a, b, complex(z) + sigma),
            max_order=w.max_order,
            name=f"{w.name}@{sigma:.3g}",
            sup_norm=getattr(w, "_sup", None),
        )
    return NormalizedPotential(p, sigma, kappa, n_eval, n_grad, n_holo, n_weight)


def twist_T(p: Potential, z: complex, w: complex,
            q: QuadratureConfig | None = None) -> float:
    """Line-integral twist T(z,w) = -2 Im( int_0^1 (z-w) P_z(w + (z-w)r) dr )."""
    z, w = complex(z), complex(w)
    if z == w:
        return 0.0
    dz = z - w
    cfg = q or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11)
    res = integrate_1d(lambda r: dz * p.grad_z(w + dz * r), (0.0, 1.0), cfg)
    return -2.0 * float(np.imag(res.value))


def twist_Tkappa(p: Potential, zeta: complex, sigma: complex, kappa: int) -> float:
    """Taylor twist T_kappa = -2 Im( sum_{j=1}^kappa (1/j!) (d^j P/dz^j)(sigma) (zeta-sigma)^j ).

    Callers should have ``p`` in normal form at 0 to order 2 (the library's
    convention for kappa-twists); the formula itself is evaluated verbatim.
    """
    zeta, sigma = complex(zeta), complex(sigma)
    if kappa < 1:
        raise InvalidArgumentError("twist order kappa must be >= 1")
    dz = zeta - sigma
    if dz == 0:
        return 0.0
    acc = complex(p.grad_z(sigma)) * dz
    for j in range(2, kappa + 1):
        acc += complex(p.holo_deriv(j, sigma)) / math.factorial(j) * dz**j
    return -2.0 * float(np.imag(acc))


def recenter_boundary(p: Potential, a_z: complex, a_t: float,
                      w_z: complex, w_t: float, kappa: int = 2):
    """Coordinates of the boundary point (a_z, a_t) after recentering at (w_z, w_t).

    Under the biholomorphism that sends the w-point to the origin and the
    potential to its (w,kappa)-normal form, (z, t) maps to
    (z - w_z, t - w_t - T_kappa(z, w_z)).
    """
    return a_z - w_z, a_t - w_t - twist_Tkappa(p, a_z, w_z, kappa)
