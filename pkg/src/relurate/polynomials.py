"""Multivariate polynomials in coefficient form on the unit cube.

A polynomial is a map ``[0,1]^k -> R`` stored as ``{exponents: coefficient}``
with integer exponent tuples.  This is the boundary-function family used by
the constructive builders and the synthetic task generators: every quantity
we need from the boundary (values, gradients, smoothness-norm upper bounds)
is computable from the coefficients.
"""
from __future__ import annotations

import math
from itertools import product

import numpy as np

from .errors import InputError


class Polynomial:
    """Polynomial on ``k`` variables, terms keyed by exponent multi-indices."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms):
        if nvars < 0:
            raise InputError("nvars must be nonnegative")
        clean = {}
        for exps, coeff in dict(terms).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise InputError(f"exponent tuple {exps} does not match nvars={nvars}")
            if any(e < 0 for e in exps):
                raise InputError("exponents must be nonnegative")
            c = float(coeff)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self.nvars = int(nvars)
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    @classmethod
    def constant(cls, value: float, nvars: int = 1) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def affine(cls, const: float, slopes) -> "Polynomial":
        slopes = list(slopes)
        k = len(slopes)
        terms = {(0,) * k: const}
        for i, s in enumerate(slopes):
            e = [0] * k
            e[i] = 1
            terms[tuple(e)] = s
        return cls(k, terms)

    @classmethod
    def from_term_list(cls, nvars: int, term_list) -> "Polynomial":
        """Build from ``[[coeff, [e1, ..., ek]], ...]`` (the config file format)."""
        return cls(nvars, {tuple(e): c for c, e in term_list})

    def to_term_list(self):
        return [[c, list(e)] for e, c in sorted(self.terms.items())]

    def __call__(self, U):
        U = np.asarray(U, dtype=float)
        squeeze = U.ndim == 1
        if squeeze:
            U = U[None, :]
        if self.nvars == 0:
            out = np.full(U.shape[0], sum(self.terms.values(), 0.0))
        else:
            if U.shape[1] != self.nvars:
                raise InputError(f"expected {self.nvars} columns, got {U.shape[1]}")
            out = np.zeros(U.shape[0])
            for exps, coeff in self.terms.items():
                term = np.full(U.shape[0], coeff)
                for i, e in enumerate(exps):
                    if e:
                        term *= U[:, i] ** e
                out += term
        return out[0] if squeeze else out

    def partial(self, i: int) -> "Polynomial":
        """Partial derivative with respect to variable ``i`` (0-based)."""
        terms = {}
        for exps, coeff in self.terms.items():
            if exps[i] == 0:
                continue
            newexp = list(exps)
            newexp[i] -= 1
            terms[tuple(newexp)] = terms.get(tuple(newexp), 0.0) + coeff * exps[i]
        return Polynomial(self.nvars, terms)

    def gradient(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        grad = np.zeros((U.shape[0], self.nvars))
        for i in range(self.nvars):
            grad[:, i] = self.partial(i)(U)
        return grad

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def coeff_abs_sum(self) -> float:
        """Upper bound on ``sup |p|`` over the unit cube (each monomial <= 1)."""
        return sum(abs(c) for c in self.terms.values())

    def is_affine(self) -> bool:
        return self.total_degree() <= 1

    def affine_parts(self):
        """Return ``(const, slopes)``; requires total degree <= 1."""
        if not self.is_affine():
            raise InputError("polynomial is not affine")
        const = self.terms.get((0,) * self.nvars, 0.0)
        slopes = np.zeros(self.nvars)
        for exps, coeff in self.terms.items():
            if sum(exps) == 1:
                slopes[exps.index(1)] = coeff
        return const, slopes

    def holder_norm_bound(self, alpha: float) -> float:
        """Coefficient-based upper bound on the order-``alpha`` smoothness norm.

        The norm is the max sup-norm of partial derivatives up to order
        ``ceil(alpha-1)`` plus the worst fractional seminorm of the top-order
        derivatives.  Sup norms are bounded by coefficient l1 sums; the
        seminorm with exponent s in (0,1] is bounded by
        ``min(Lip^s (2 sup)^(1-s), Lip * k^((1-s)/2))`` where Lip bounds the
        Euclidean gradient norm.
        """
        if alpha <= 0:
            raise InputError("alpha must be positive")
        kfloor = math.ceil(alpha - 1)
        s = alpha - kfloor

        def deriv(poly, exps):
            for i, e in enumerate(exps):
                for _ in range(e):
                    poly = poly.partial(i)
            return poly

        max_sup = 0.0
        top_semi = 0.0
        k = max(self.nvars, 1)
        for order in range(kfloor + 1):
            for exps in _multi_indices(self.nvars, order):
                d = deriv(self, exps)
                sup = d.coeff_abs_sum()
                max_sup = max(max_sup, sup)
                if order == kfloor:
                    lip = math.sqrt(sum(d.partial(i).coeff_abs_sum() ** 2
                                        for i in range(self.nvars)))
                    if lip == 0.0:
                        semi = 0.0
                    elif s >= 1.0:
                        semi = lip
                    else:
                        via_sup = lip ** s * (2.0 * sup) ** (1.0 - s)
                        via_diam = lip * k ** ((1.0 - s) / 2.0)
                        semi = min(via_sup, via_diam)
                    top_semi = max(top_semi, semi)
        return max_sup + top_semi

    def __repr__(self):
        return f"Polynomial(nvars={self.nvars}, terms={self.terms!r})"


def _multi_indices(nvars: int, order: int):
    if nvars == 0:
        if order == 0:
            yield ()
        return
    for combo in product(range(order + 1), repeat=nvars):
        if sum(combo) == order:
            yield combo
