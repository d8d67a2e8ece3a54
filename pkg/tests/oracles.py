"""Independent reference solutions used by the tests.

Each oracle is derived by hand from a quadratic ansatz (or a scalar equation)
and evaluated with scipy's ODE/root solvers, never with package code.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def riccati_a(t):
    """``a' = 1 - 4a^2, a(0) = 1`` in closed form (``u = a x^2`` on "quadratic")."""
    return 0.5 / np.tanh(2.0 * np.asarray(t, dtype=float) + 0.5 * np.log(3.0))


def riccati_a_ivp(t_eval):
    sol = solve_ivp(lambda t, y: [1.0 - 4.0 * y[0] ** 2], (0.0, float(np.max(t_eval))), [1.0],
                    t_eval=np.atleast_1d(t_eval), rtol=1e-11, atol=1e-12)
    return sol.y[0]


class MovingOptimum:
    """``u = a (x - b)^2`` with ``a' = 1 - 4a^2``, ``b' = (1 - b)/a``, ``I = 2 - (1 - b)^2``."""

    def __init__(self, T: float = 2.0):
        self.sol = solve_ivp(lambda t, y: [1.0 - 4.0 * y[0] ** 2, (1.0 - y[1]) / y[0]], (0.0, T), [1.0, 0.0],
                             dense_output=True, rtol=1e-11, atol=1e-12)

    def a(self, t):
        return self.sol.sol(t)[0]

    def b(self, t):
        return self.sol.sol(t)[1]

    def I(self, t):
        return 2.0 - (1.0 - self.b(t)) ** 2


class JumpOracle:
    """Double well under ``R = 2 + x/2 - I``.

    Each branch stays ``a (x - b_i)^2 + c_i`` with ``a = 1/(1 + 4t)`` and
    ``b_i = b_i(0) + t/4 + t^2/2``.  The left well is active until its rival's
    offset ``0.2 - t`` reaches zero; then the multiplier jumps by
    ``(b_R - b_L)/2 = 1``.
    """

    t_jump = 0.2
    size = 1.0

    def b_left(self, t):
        t = np.asarray(t, dtype=float)
        return -1.0 + t / 4.0 + t**2 / 2.0

    def I(self, t):
        t = np.asarray(t, dtype=float)
        b = self.b_left(t)
        return np.where(t < self.t_jump, 2.0 + b / 2.0, 2.0 + (b + 2.0) / 2.0)


def kernel_stationary_I(amp: float = 1.0, floor: float = 0.1, decay: float = 1.0, coef: float = 1.0) -> float:
    """Root of ``amp e^{-decay I} + floor = coef I`` (argmin pinned at x = 0, p = 0)."""
    return brentq(lambda I: amp * np.exp(-decay * I) + floor - coef * I, 0.0, 10.0, xtol=1e-14)


def gaussian_conjugate(w: float, sigma: float = 1.0) -> float:
    """``sup_p (p w - exp(sigma^2 p^2 / 2))`` via the scalar root of the first-order condition."""
    f = lambda p: sigma**2 * p * np.exp(0.5 * sigma**2 * p**2) - w  # noqa: E731
    if w == 0:
        return -1.0
    lo, hi = (0.0, 10.0) if w > 0 else (-10.0, 0.0)
    p = brentq(f, lo, hi, xtol=1e-15)
    return p * w - np.exp(0.5 * sigma**2 * p**2)


class ViscousQuadratic:
    """Viscous "quadratic" scenario with ``psi = 1``: ``u_eps = a x^2 + c``.

    ``c' = sqrt(pi eps / a) exp(-c/eps) - 1 + 2 eps a`` and
    ``I_eps = sqrt(pi eps / a) exp(-c/eps)``; ``a`` is :func:`riccati_a`.
    """

    def __init__(self, eps: float, T: float = 0.5):
        self.eps = eps

        def rhs(t, y):
            a = riccati_a(t)
            return [np.sqrt(np.pi * eps / a) * np.exp(-y[0] / eps) - 1.0 + 2.0 * eps * a]

        self.sol = solve_ivp(rhs, (0.0, T), [0.0], dense_output=True, rtol=1e-10, atol=1e-12,
                             max_step=T / 2000)

    def c(self, t):
        return self.sol.sol(t)[0]

    def I(self, t):
        return np.sqrt(np.pi * self.eps / riccati_a(t)) * np.exp(-self.c(t) / self.eps)
