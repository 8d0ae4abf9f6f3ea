"""Closed-form benchmark problems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PoissonProblem:
    """Laplace-type problem on the unit disc with solution ``exp(-alpha |x - x_s|^2)``."""

    alpha: float = 1e3
    x_s: tuple = (0.5, 0.5)

    def u(self, x):
        r2 = ((np.asarray(x, float) - np.asarray(self.x_s)) ** 2).sum(axis=-1)
        return np.exp(-self.alpha * r2)

    def f_lap(self, x):
        r2 = ((np.asarray(x, float) - np.asarray(self.x_s)) ** 2).sum(axis=-1)
        a = self.alpha
        return 4.0 * (a * a * r2 - a) * np.exp(-a * r2)


@dataclass(frozen=True)
class BoussinesqProblem:
    """Point load ``P`` normal to an elastic half-space, load at the origin.

    ``form="classical"`` uses the textbook vertical displacement with the
    ``2(1 - nu) / |x|`` term; ``form="printed"`` uses ``2(1 - nu) / |x|**3``,
    which does not satisfy the Navier equations and is kept for comparison.
    """

    E: float = 1.0
    nu: float = 0.33
    P: float = 1.0
    form: str = "classical"

    @property
    def lam(self):
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def mu(self):
        return self.E / (2 * (1 + self.nu))

    def displacement(self, x):
        x = np.asarray(x, dtype=float)
        X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
        R = np.sqrt(X * X + Y * Y + Z * Z)
        c = self.P / (4 * np.pi * self.mu)
        nu = self.nu
        radial = c * (Z / R**3 - (1 - 2 * nu) / (R * (R + Z)))
        far = 2 * (1 - nu) / (R if self.form == "classical" else R**3)
        uz = c * (Z * Z / R**3 + far)
        return np.stack([X * radial, Y * radial, uz], axis=-1)

    def magnitude(self, x):
        return np.linalg.norm(self.displacement(x), axis=-1)


def navier_residual_fd(field, lam, mu, x, h):
    """``(lam + mu) grad(div u) + mu lap(u)`` by 4th-order central differences with step ``h``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[1]
    eye = np.eye(d) * h

    def d2(a, b):
        # 4th-order accurate mixed/pure second derivative stencil
        if a == b:
            e = eye[a]
            return (-field(x + 2 * e) + 16 * field(x + e) - 30 * field(x) + 16 * field(x - e)
                    - field(x - 2 * e)) / (12 * h * h)
        ea, eb = eye[a], eye[b]

        def g(i, j):
            return field(x + i * ea + j * eb)

        return (8 * (g(1, -2) + g(2, -1) + g(-2, 1) + g(-1, 2))
                - 8 * (g(-1, -2) + g(-2, -1) + g(1, 2) + g(2, 1))
                - (g(2, -2) + g(-2, 2) - g(-2, -2) - g(2, 2))
                + 64 * (g(-1, -1) + g(1, 1) - g(1, -1) - g(-1, 1))) / (144 * h * h)

    H = {(a, b): d2(a, b) for a in range(d) for b in range(a, d)}
    out = np.zeros_like(x)
    for i in range(d):
        lap_i = sum(H[a, a][:, i] for a in range(d))
        graddiv_i = sum(H[min(i, j), max(i, j)][:, j] for j in range(d))
        out[:, i] = (lam + mu) * graddiv_i + mu * lap_i
    return out
