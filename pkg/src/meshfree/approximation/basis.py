"""Linear operators, monomial and polyharmonic spline bases."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np

_AXES = "xyz"


@dataclass(frozen=True)
class Operator:
    """A linear differential operator from the supported set.

    ``kind`` is one of ``identity``, ``laplacian``, ``partial`` (``axes=(a,)``)
    or ``second_partial`` (``axes=(a, b)`` with ``a <= b``).
    """

    kind: str
    axes: tuple = ()

    def __post_init__(self):
        expected = {"identity": 0, "laplacian": 0, "partial": 1, "second_partial": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if len(self.axes) != expected[self.kind]:
            raise ValueError(f"{self.kind} takes {expected[self.kind]} axes, got {self.axes}")
        if self.kind == "second_partial":
            object.__setattr__(self, "axes", tuple(sorted(self.axes)))

    @property
    def order(self):
        return {"identity": 0, "partial": 1}.get(self.kind, 2)

    @property
    def name(self):
        if self.kind == "identity":
            return "id"
        if self.kind == "laplacian":
            return "lap"
        return "d" + "".join(_AXES[a] for a in self.axes)

    @classmethod
    def from_name(cls, name):
        if name == "id":
            return IDENTITY
        if name == "lap":
            return LAPLACIAN
        if name.startswith("d") and 2 <= len(name) <= 3:
            axes = tuple(_AXES.index(c) for c in name[1:])
            return partial(*axes) if len(axes) == 1 else second_partial(*axes)
        raise ValueError(f"cannot parse operator name {name!r}")

    def derivative_terms(self, d):
        """(coefficient, multi-index) pairs whose sum is the operator."""
        if self.kind == "laplacian":
            return [(1.0, tuple(2 if i == a else 0 for i in range(d))) for a in range(d)]
        beta = [0] * d
        for a in self.axes:
            beta[a] += 1
        return [(1.0, tuple(beta))]

    def __repr__(self):
        return f"Operator({self.name})"


IDENTITY = Operator("identity")
LAPLACIAN = Operator("laplacian")


def partial(axis):
    return Operator("partial", (axis,))


def second_partial(a, b):
    return Operator("second_partial", (a, b))


def first_partials(d):
    return [partial(a) for a in range(d)]


def second_partials(d):
    return [second_partial(a, b) for a, b in combinations_with_replacement(range(d), 2)]


class MonomialBasis:
    """All monomials of total degree <= m in d variables, graded order."""

    def __init__(self, m, d):
        if m < 0 or d < 1:
            raise ValueError("need m >= 0 and d >= 1")
        self.m, self.d = m, d
        exps = []
        for deg in range(m + 1):
            for combo in combinations_with_replacement(range(d), deg):
                e = [0] * d
                for a in combo:
                    e[a] += 1
                exps.append(tuple(e))
        self.exponents = np.array(exps, dtype=int).reshape(-1, d)
        assert len(self.exponents) == comb(m + d, d)

    @property
    def size(self):
        return len(self.exponents)

    def __len__(self):
        return self.size

    def evaluate(self, x):
        """Monomial values, shape ``x.shape[:-1] + (s,)``."""
        x = np.asarray(x, dtype=float)
        powers = [np.ones_like(x)]
        for _ in range(self.m):
            powers.append(powers[-1] * x)
        powers = np.stack(powers, axis=-1)  # (..., d, m+1)
        out = np.ones(x.shape[:-1] + (self.size,))
        for a in range(self.d):
            out = out * powers[..., a, self.exponents[:, a]]
        return out

    def apply_operator(self, op, at=None):
        """``op`` applied to every basis monomial, evaluated at ``at`` (default origin)."""
        return np.array([apply_operator_to_monomial(op, e, at) for e in self.exponents])


def eval_monomial(exponent, x):
    x = np.asarray(x, dtype=float)
    return float(np.prod([x[a] ** int(p) for a, p in enumerate(exponent)]))


def apply_operator_to_monomial(op, exponent, at=None):
    d = len(exponent)
    at = np.zeros(d) if at is None else np.asarray(at, dtype=float)
    total = 0.0
    for coef, beta in op.derivative_terms(d):
        term = coef
        for a in range(d):
            p, q = int(exponent[a]), beta[a]
            if q > p:
                term = 0.0
                break
            term *= factorial(p) // factorial(p - q) * at[a] ** (p - q)
        total += term
    return total


def phs_eval(k, r):
    """Polyharmonic spline: ``r**k`` for odd k, ``r**k log r`` for even k, 0 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = _ipow(r, k)
    if k % 2 == 0:
        out = out * np.log(np.where(r > 0, r, 1.0))
    return out


def _ipow(r, k):
    # repeated multiplication: bitwise reproducible irrespective of array layout
    out = np.ones_like(r)
    for _ in range(k):
        out = out * r
    return out


def _phs_radial(k, r):
    """``g1 = phi'(r)/r`` and ``g2 = (phi'' - phi'/r)/r**2``, zero at r = 0."""
    pos = r > 0
    rs = np.where(pos, r, 1.0)
    if k % 2:
        g1 = k * _ipow(rs, k - 2) if k >= 2 else k / rs
        g2 = k * (k - 2) * _ipow(rs, k - 4) if k >= 4 else k * (k - 2) / _ipow(rs, 4 - k)
    else:
        lg = np.log(rs)
        base = k * lg + 1.0
        g1 = _ipow(rs, k - 2) * base if k >= 2 else base / rs
        g2 = ((k - 2) * base + k) * (_ipow(rs, k - 4) if k >= 4 else 1.0 / _ipow(rs, 4 - k))
    return np.where(pos, g1, 0.0), np.where(pos, g2, 0.0)


def phs_apply_operator(op, k, diff):
    """``op`` applied to ``phi(|x - x_i|)`` where ``diff = x - x_i``, shape ``(..., d)``."""
    diff = np.asarray(diff, dtype=float)
    d = diff.shape[-1]
    r = np.sqrt((diff * diff).sum(axis=-1))
    if op.kind == "identity":
        return phs_eval(k, r)
    g1, g2 = _phs_radial(k, r)
    if op.kind == "partial":
        return g1 * diff[..., op.axes[0]]
    if op.kind == "second_partial":
        a, b = op.axes
        return g2 * diff[..., a] * diff[..., b] + (g1 if a == b else 0.0)
    return g2 * (r * r) + d * g1
