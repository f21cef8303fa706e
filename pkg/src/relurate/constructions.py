"""Constructive builders: squaring and multiplication units, polynomial
approximators, threshold ("horizon") indicators, piecewise-constant
classifiers, and plug-in thresholding.

All builders return explicit :class:`~relurate.network.ReluNetwork` objects
assembled with the composition calculus, and all come with quantitative
accuracy guarantees that the test suite verifies against independent
oracles.  The indicator builders are *exact* (bit-level 0/1 outputs) outside
a gap of width ``xi`` around the decision surface.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import faults
from .errors import CapacityError, InputError
from .network import (
    ReluNetwork,
    affine_network,
    concat,
    masking_network,
    pad_depth,
    stack,
)
from .polynomials import Polynomial

#: sup error of the squaring unit at accuracy parameter m (attained at cell
#: midpoints of the dyadic grid with spacing 2^-m).
def square_error_bound(m: int) -> float:
    return 2.0 ** (-2 * m - 2)


def product_error_bound(m: int, bound: float) -> float:
    """Sup error of the multiplication unit on [-M, M]^2 (polarization with
    two squaring units; conservative constant 6)."""
    return 6.0 * bound * bound * square_error_bound(m)


def build_square(m: int) -> ReluNetwork:
    """Network on [0,1] approximating x^2 with sup error <= 2^(-2m-2).

    Piecewise-linear interpolation of x^2 refined m times: each hidden layer
    applies the sawtooth map and subtracts its scaled copy from a running
    value, so layer s realizes the interpolation on the dyadic grid of
    spacing 2^-s.  Width 4, depth m, parameters bounded by 4.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    layers = []
    # units per hidden layer: A = sigma(g), B = sigma(g - 1/2), C = sigma(g - 1),
    # K = running interpolant (stays nonnegative on [0,1])
    W1 = np.array([[1.0], [1.0], [1.0], [1.0]])
    b1 = np.array([0.0, -0.5, -1.0, 0.0])
    layers.append((W1, b1))
    for s in range(2, m + 1):
        tooth = np.array([2.0, -4.0, 2.0, 0.0])
        scale = 4.0 ** -(s - 1)
        W = np.vstack([tooth, tooth, tooth, -scale * tooth])
        W[3, 3] = 1.0
        b = np.array([0.0, -0.5, -1.0, 0.0])
        layers.append((W, b))
    scale = 4.0 ** -m
    Wout = np.array([[-2.0 * scale, 4.0 * scale, -2.0 * scale, 1.0]])
    layers.append((Wout, np.zeros(1)))
    return ReluNetwork(layers)


def build_product(m: int, bound: float = 1.0) -> ReluNetwork:
    """Two-input network approximating x*y on [-M, M]^2, M = ``bound``.

    Polarization x*y = M^2 [ sq(|x+y|/2M) - sq(|x-y|/2M) ] with two squaring
    units; sup error <= 6 M^2 2^(-2m-2) and exact antisymmetry under
    argument swap.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    if bound <= 0:
        raise InputError("bound must be positive")
    M = float(bound)
    s = 0.5 / M
    # |u| and |v| for u = (x+y)/2M, v = (x-y)/2M via the +- trick
    abs_block = ReluNetwork([
        (np.array([[s, s], [-s, -s], [s, -s], [-s, s]]), np.zeros(4)),
        (np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]), np.zeros(2)),
    ])
    sq = build_square(m)
    p1 = stack(sq, affine_network(np.array([[1.0, 0.0]])))
    p2 = stack(sq, affine_network(np.array([[0.0, 1.0]])))
    pair = concat(p1, p2)
    out = affine_network(np.array([[M * M, -M * M]]))
    return stack(out, stack(pair, abs_block))


_GRID_1D = 4097
_GRID_2D = 129
_GRID_3D = 33
_MC_VERIFY = 40_000


def _verification_points(k: int, rng: np.random.Generator) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0))
    if k == 1:
        return np.linspace(0.0, 1.0, _GRID_1D)[:, None]
    if k == 2:
        g = np.linspace(0.0, 1.0, _GRID_2D)
        mesh = np.meshgrid(g, g, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if k == 3:
        g = np.linspace(0.0, 1.0, _GRID_3D)
        mesh = np.meshgrid(g, g, g, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    return rng.random((_MC_VERIFY, k))


def _monomial_net(k: int, exps, m: int) -> ReluNetwork:
    """Network computing prod_i u_i^{e_i} on [0,1]^k via a chain of
    multiplication units with headroom M = 1.25."""
    factors: List[int] = []
    for i, e in enumerate(exps):
        factors.extend([i] * e)
    sel = [affine_network(np.eye(k)[i:i + 1]) for i in range(k)]
    net = sel[factors[0]]
    prod = build_product(m, bound=1.25)
    for idx in factors[1:]:
        nxt = pad_depth(sel[idx], net.depth)
        net = stack(prod, concat(net, nxt))
    return net


M_CEILING = 16


def build_smooth_approx(g: Polynomial, xi: float, m_start: Optional[int] = None) -> ReluNetwork:
    """Network approximating the polynomial ``g`` on the unit cube with
    verified sup error <= ``xi``.

    Affine polynomials are realized exactly.  Higher-degree terms are built
    from monomial chains of multiplication units; the accuracy parameter is
    raised until a dense verification grid certifies the target, up to a
    ceiling (CapacityError beyond it).
    """
    if xi <= 0:
        raise InputError("xi must be positive")
    k = g.nvars
    if g.is_affine():
        const, slopes = g.affine_parts()
        return affine_network(slopes[None, :], np.array([const]))

    lin_terms = {e: c for e, c in g.terms.items() if sum(e) <= 1}
    poly_terms = [(e, c) for e, c in g.terms.items() if sum(e) >= 2]
    rng = np.random.default_rng(7042)
    pts = _verification_points(k, rng)
    target = g(pts)

    if m_start is None:
        # per-step product error ~ 6 M^2 2^(-2m-2); degree-p chains take p-1 steps
        budget = sum(abs(c) * max(sum(e) - 1, 1) for e, c in poly_terms)
        need = xi / (4.0 * max(budget, 1e-12))
        m_start = max(2, int(np.ceil(0.5 * np.log2(9.375 / need) - 1)))

    for m in range(m_start, M_CEILING + 1):
        parts = [_monomial_net(k, e, m) for e, _ in poly_terms]
        lin = Polynomial(k, lin_terms) if lin_terms else Polynomial.constant(0.0, k)
        const, slopes = lin.affine_parts()
        parts.append(affine_network(slopes[None, :], np.array([const])))
        depth = max(p.depth for p in parts)
        parts = [pad_depth(p, depth) for p in parts]
        combined = parts[0]
        for p in parts[1:]:
            combined = concat(combined, p)
        coeffs = [c for _, c in poly_terms] + [1.0]
        net = stack(affine_network(np.array([coeffs])), combined)
        err = float(np.max(np.abs(net(pts)[:, 0] - target)))
        if err <= xi:
            return net
    raise CapacityError(
        f"cannot reach sup error {xi:g} for degree-{g.total_degree()} "
        f"polynomial within accuracy ceiling m={M_CEILING}"
    )


@dataclass(frozen=True)
class HorizonSpec:
    """One half-space-like indicator 1(x_j >= g(x_-j)) with a smooth
    single-coordinate boundary.

    ``j`` is 1-based; ``g`` maps the remaining d-1 coordinates (in their
    original order) to the threshold for coordinate j.  ``holder_radius``
    must dominate the coefficient-computed smoothness norm of ``g``.
    """

    j: int
    g: Polynomial
    holder_alpha: float
    holder_radius: float

    def __post_init__(self):
        d = self.g.nvars + 1
        if not 1 <= self.j <= d:
            raise InputError(f"j must be in 1..{d}")
        if self.holder_alpha <= 0:
            raise InputError("holder_alpha must be positive")
        bound = self.g.holder_norm_bound(self.holder_alpha)
        if bound > self.holder_radius + 1e-12:
            raise InputError(
                f"stated radius {self.holder_radius} below the computed "
                f"smoothness norm bound {bound:.6g}"
            )

    @property
    def dim(self) -> int:
        return self.g.nvars + 1

    def margins(self, X) -> np.ndarray:
        """x_j - g(x_-j) for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rest = np.delete(X, self.j - 1, axis=1)
        return X[:, self.j - 1] - self.g(rest)

    def oracle(self, X) -> np.ndarray:
        return (self.margins(X) >= 0.0).astype(float)


@dataclass(frozen=True)
class PieceSpec:
    """Intersection of K horizon sets."""

    horizons: tuple

    def __post_init__(self):
        if not self.horizons:
            raise InputError("a piece needs at least one horizon")
        dims = {h.dim for h in self.horizons}
        if len(dims) != 1:
            raise InputError("all horizons in a piece must share the input dimension")

    @property
    def dim(self) -> int:
        return self.horizons[0].dim

    def margins(self, X) -> np.ndarray:
        """(n, K) margins, one column per horizon."""
        return np.stack([h.margins(X) for h in self.horizons], axis=1)

    def contains(self, X) -> np.ndarray:
        return np.all(self.margins(X) >= 0.0, axis=1)


@dataclass(frozen=True)
class ClassifierSpec:
    """+-1 classifier equal to +1 on the union of T disjoint pieces.

    Disjointness is the caller's responsibility; the builder spot-checks it
    on a sample.
    """

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise InputError("a classifier needs at least one piece")
        dims = {p.dim for p in self.pieces}
        if len(dims) != 1:
            raise InputError("all pieces must share the input dimension")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def oracle(self, X) -> np.ndarray:
        inside = np.stack([p.contains(X) for p in self.pieces], axis=1)
        return 2.0 * np.any(inside, axis=1).astype(float) - 1.0


@dataclass(frozen=True)
class SafeRegion:
    """Points whose every piece margin is strictly negative or exceeds the
    gap -- the set where the built classifier is exact."""

    spec: ClassifierSpec
    gap: float

    def membership(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for piece in self.spec.pieces:
            m = piece.margins(X)
            mmin = m.min(axis=1)
            ok &= (mmin < 0.0) | (m > self.gap).all(axis=1)
        return ok

    def sample(self, n: int, seed: int = 0, max_tries: int = 200) -> np.ndarray:
        """Rejection-sample n points of the unit cube inside the region."""
        rng = np.random.default_rng(seed)
        out = []
        have = 0
        for _ in range(max_tries):
            X = rng.random((max(2 * n, 1000), self.spec.dim))
            X = X[self.membership(X)]
            out.append(X)
            have += X.shape[0]
            if have >= n:
                break
        X = np.concatenate(out, axis=0)
        if X.shape[0] < n:
            raise CapacityError("safe region too small to sample from")
        return X[:n]


def _threshold_block(in_dim: int, col: int, slope: float) -> ReluNetwork:
    """Saturating ramp of input coordinate ``col``: 0 for z <= 0, 1 for
    z >= 1/slope, linear in between -- with bit-exact saturation.

    The input is first materialized as (sigma(z), sigma(-z)); the two ramp
    units then share an identical weight row and differ only by an integer
    bias, so their pre-activations round identically and the saturated
    difference is exactly 1 (or exactly 0 below the ramp).  The ramp value
    passes through one more ReLU so downstream affine merges consume an
    exact 0/1 activation.
    """
    W1 = np.zeros((2, in_dim))
    W1[0, col] = 1.0
    W1[1, col] = -1.0
    W2 = np.array([[slope, -slope], [slope, -slope]])
    b2 = np.array([0.0, -1.0])
    W3 = np.array([[1.0, -1.0]])
    return ReluNetwork([
        (W1, np.zeros(2)),
        (W2, b2),
        (W3, np.zeros(1)),
        (np.array([[1.0]]), np.zeros(1)),
    ])


def build_horizon(spec: HorizonSpec, xi: float) -> ReluNetwork:
    """Network equal to the indicator 1(x_j >= g(x_-j)) whenever the margin
    x_j - g(x_-j) is negative or exceeds ``xi``; output in [0,1] everywhere.

    Assembly: a boundary approximator with sup error <= xi/8 is combined
    with masking networks into Phi(x) = (x_j - g~(x_-j) - xi/4, masked rest),
    then a two-unit ramp of width xi/2 thresholds the first coordinate.
    """
    if xi <= 0:
        raise InputError("xi must be positive")
    d = spec.dim
    j = spec.j
    gnet = build_smooth_approx(spec.g, xi / 8.0)
    # route x_-j into the approximator (a zero column is inserted at slot j)
    sel = np.delete(np.eye(d), j - 1, axis=0)
    gfull = stack(gnet, affine_network(sel))

    mask_j = masking_network(d, {j}, gfull.depth + 1)
    inner = concat(mask_j, gfull)  # outputs (masked x, g~) in R^{d+1}
    Wpm = np.zeros((1, d + 1))
    Wpm[0, j - 1] = 1.0
    Wpm[0, d] = -1.0
    shifted = stack(affine_network(Wpm, np.array([-xi / 4.0])), inner)

    rest = sorted(set(range(1, d + 1)) - {j})
    mask_rest = masking_network(d, rest, shifted.depth + 1)
    phi = concat(shifted, mask_rest)  # (x_j - g~ - xi/4, masked rest)

    slope = 2.0 / xi
    if faults.is_active("horizon-gap"):
        slope = 1.0 / xi
    return stack(_threshold_block(phi.output_dim, 0, slope), phi)


_DISJOINT_SAMPLE = 10_000


def build_piecewise_classifier(spec: ClassifierSpec, xi: float,
                               seed: int = 1234) -> ReluNetwork:
    """Network equal to the +-1 piecewise classifier outside the margin gap.

    Per piece, the K horizon networks are concatenated and fed through
    sigma(sum z_k - (K-1)), which is exactly the piece indicator on safe
    points; the piece indicators are summed (valid for disjoint pieces) and
    mapped through 2z - 1.  Output lies in [-1, 1] everywhere and equals the
    classifier exactly on the safe region.
    """
    if xi <= 0:
        raise InputError("xi must be positive")
    rng = np.random.default_rng(seed)
    X = rng.random((_DISJOINT_SAMPLE, spec.dim))
    inside = np.stack([p.contains(X) for p in spec.pieces], axis=1)
    if np.any(inside.sum(axis=1) > 1):
        raise InputError("pieces overlap on a verification sample")

    indicators = []
    for piece in spec.pieces:
        nets = [build_horizon(h, xi) for h in piece.horizons]
        depth = max(n.depth for n in nets)
        nets = [pad_depth(n, depth) for n in nets]
        combined = nets[0]
        for n in nets[1:]:
            combined = concat(combined, n)
        K = len(piece.horizons)
        gate = ReluNetwork([
            (np.ones((1, K)), np.array([-(K - 1.0)])),
            (np.eye(1), np.zeros(1)),
        ])
        indicators.append(stack(gate, combined))

    depth = max(ind.depth for ind in indicators)
    indicators = [pad_depth(ind, depth) for ind in indicators]
    combined = indicators[0]
    for ind in indicators[1:]:
        combined = concat(combined, ind)
    T = len(spec.pieces)
    out = affine_network(2.0 * np.ones((1, T)), np.array([-1.0]))
    return stack(out, combined)


def build_plugin_threshold(eta_net: ReluNetwork, xi: float) -> ReluNetwork:
    """Turn a class-probability estimate into a +-1 classifier with one extra
    ramp: +1 where the estimate >= 1/2 + xi, -1 where it is < 1/2, linear in
    between.  New parameters are bounded by 1/xi (requires xi <= 1/2)."""
    if eta_net.output_dim != 1:
        raise InputError("plug-in thresholding requires a scalar estimate")
    if not 0 < xi <= 0.5:
        raise InputError("xi must lie in (0, 1/2]")
    s = 1.0 / xi
    # same exact-saturation layout as the threshold block, shifted by 1/2
    # and mapped through 2z - 1 at the end
    block = ReluNetwork([
        (np.array([[1.0], [-1.0]]), np.array([-0.5, 0.5])),
        (np.array([[s, -s], [s, -s]]), np.array([0.0, -1.0])),
        (np.array([[1.0, -1.0]]), np.zeros(1)),
        (np.array([[2.0]]), np.array([-1.0])),
    ])
    return stack(block, eta_net)
