"""Explicit sparse ReLU networks: representation, evaluation, accounting,
and the composition calculus (masking, stacking, concatenation, padding,
output clamping).

A network is an ordered list of affine maps ``(W, b)``; evaluation applies
ReLU after every map except the last.  ``depth`` counts hidden layers, so a
network with ``depth L`` has ``L + 1`` affine maps.  Networks are immutable
after construction and safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import CompositionError, InputError

SERIAL_FORMAT = "relurate-net"
SERIAL_VERSION = 1


class ReluNetwork:
    """Immutable ReLU network with dense parameter storage.

    Zeros are stored explicitly; the nonzero count used for sparsity
    accounting is an exact-zero test on the stored entries.
    """

    __slots__ = ("weights", "biases")

    def __init__(self, layers: Iterable[tuple]):
        weights = []
        biases = []
        for W, b in layers:
            W = np.ascontiguousarray(W, dtype=float)
            b = np.ascontiguousarray(b, dtype=float)
            if W.ndim != 2 or b.ndim != 1 or b.shape[0] != W.shape[0]:
                raise InputError("each layer needs a 2-d weight matrix and matching bias vector")
            weights.append(W)
            biases.append(b)
        if not weights:
            raise InputError("a network needs at least one affine map")
        for l in range(1, len(weights)):
            if weights[l].shape[1] != weights[l - 1].shape[0]:
                raise CompositionError(
                    f"layer {l} expects {weights[l].shape[1]} inputs but layer "
                    f"{l - 1} produces {weights[l - 1].shape[0]}"
                )
        for W in weights:
            W.setflags(write=False)
        for b in biases:
            b.setflags(write=False)
        object.__setattr__(self, "weights", tuple(weights))
        object.__setattr__(self, "biases", tuple(biases))

    def __setattr__(self, name, value):
        raise AttributeError("ReluNetwork is immutable")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def depth(self) -> int:
        """Number of hidden layers (affine maps minus one)."""
        return len(self.weights) - 1

    @property
    def n_affine_maps(self) -> int:
        return len(self.weights)

    def layers(self):
        return list(zip(self.weights, self.biases))

    def __call__(self, X):
        """Batched evaluation; X is (n, input_dim), result (n, output_dim)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise InputError(f"expected {self.input_dim} inputs, got {X.shape[1]}")
        return _kernels.forward(list(self.weights), list(self.biases), X)

    def __repr__(self):
        widths = "-".join(str(W.shape[0]) for W in self.weights)
        return (f"ReluNetwork(in={self.input_dim}, maps={self.n_affine_maps}, "
                f"widths={widths})")


def evaluate(net: ReluNetwork, x) -> np.ndarray:
    """Evaluate on a single input vector; returns the output vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise InputError(f"expected a vector of length {net.input_dim}")
    h = x
    last = net.depth
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        h = W @ h + b
        if l != last:
            h = np.maximum(h, 0.0)
    return h


def evaluate_batch(net: ReluNetwork, X) -> np.ndarray:
    return net(X)


@dataclass(frozen=True)
class NetStats:
    """Size accounting for one network.

    ``sup_norm_estimate`` is a finite-sample lower bound on the true sup of
    |f| over the unit cube (grid for input dimension <= 3, Monte Carlo
    otherwise); ``None`` when estimation was skipped.
    """

    depth: int
    max_width: int
    nnz: int
    max_abs_param: float
    sup_norm_estimate: Optional[float]


@dataclass(frozen=True)
class ArchBudget:
    """Constraints (depth, width, nonzeros, parameter size, sup norm) that a
    network class imposes on its members."""

    max_depth: float
    max_width: float
    max_nnz: float
    max_abs: float
    max_sup: float

    def satisfied_by(self, st: NetStats) -> bool:
        if st.depth > self.max_depth or st.max_width > self.max_width:
            return False
        if st.nnz > self.max_nnz or st.max_abs_param > self.max_abs:
            return False
        if st.sup_norm_estimate is not None and st.sup_norm_estimate > self.max_sup:
            return False
        return True


_SUP_MC_SAMPLES = 100_000


def stats(net: ReluNetwork, grid_resolution: int = 0, seed: int = 0) -> NetStats:
    """Exact depth/width/nonzero/parameter-size accounting plus a sup-norm
    estimate over the unit cube.

    ``grid_resolution`` is the number of points per axis (>= 2); pass 0 to
    skip sup estimation.  For input dimension > 3 the grid is replaced by
    100k Monte Carlo samples drawn from ``seed``.
    """
    nnz = 0
    max_abs = 0.0
    for W, b in zip(net.weights, net.biases):
        nnz += int(np.count_nonzero(W)) + int(np.count_nonzero(b))
        if W.size:
            max_abs = max(max_abs, float(np.max(np.abs(W))))
        if b.size:
            max_abs = max(max_abs, float(np.max(np.abs(b))))
    hidden_widths = [W.shape[0] for W in net.weights[:-1]]
    max_width = max(hidden_widths) if hidden_widths else 0

    sup = None
    if grid_resolution:
        if grid_resolution < 2:
            raise InputError("grid_resolution must be >= 2 (or 0 to skip)")
        d = net.input_dim
        if d <= 3:
            axes = [np.linspace(0.0, 1.0, grid_resolution)] * d
            mesh = np.meshgrid(*axes, indexing="ij")
            X = np.stack([m.ravel() for m in mesh], axis=1)
        else:
            rng = np.random.default_rng(seed)
            X = rng.random((_SUP_MC_SAMPLES, d))
        sup = float(np.max(np.abs(net(X))))

    return NetStats(depth=net.depth, max_width=max_width, nnz=nnz,
                    max_abs_param=max_abs, sup_norm_estimate=sup)


def check_budget(net: ReluNetwork, budget: ArchBudget, grid_resolution: int = 33) -> bool:
    return budget.satisfied_by(stats(net, grid_resolution=grid_resolution))


def affine_network(W, b=None) -> ReluNetwork:
    """Single affine map as a depth-0 network."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if b is None:
        b = np.zeros(W.shape[0])
    return ReluNetwork([(W, b)])


def identity_network(d: int) -> ReluNetwork:
    return affine_network(np.eye(d))


def stack(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """Functional composition ``x -> outer(inner(x))``.

    The output map of ``inner`` and the input map of ``outer`` merge into a
    single affine map, so the result has depth(outer) + depth(inner).
    """
    if outer.input_dim != inner.output_dim:
        raise CompositionError(
            f"outer expects {outer.input_dim} inputs, inner produces {inner.output_dim}"
        )
    layers = list(zip(inner.weights[:-1], inner.biases[:-1]))
    W_mid = outer.weights[0] @ inner.weights[-1]
    b_mid = outer.weights[0] @ inner.biases[-1] + outer.biases[0]
    layers.append((W_mid, b_mid))
    layers.extend(zip(outer.weights[1:], outer.biases[1:]))
    return ReluNetwork(layers)


def concat(a: ReluNetwork, b: ReluNetwork) -> ReluNetwork:
    """Parallel combination ``x -> (a(x), b(x))`` of two equal-depth networks.

    Operand depths must already match; pad the shallower one with
    ``pad_depth`` first.  The nonzero count is exactly additive.
    """
    if a.input_dim != b.input_dim:
        raise CompositionError("concat operands must share the input dimension")
    if a.depth != b.depth:
        raise CompositionError(
            f"concat needs equal depths (got {a.depth} and {b.depth}); pad first"
        )
    layers = []
    n_maps = a.n_affine_maps
    for l in range(n_maps):
        Wa, Wb = a.weights[l], b.weights[l]
        ba, bb = a.biases[l], b.biases[l]
        if l == 0:
            W = np.vstack([Wa, Wb])
        else:
            W = np.zeros((Wa.shape[0] + Wb.shape[0], Wa.shape[1] + Wb.shape[1]))
            W[:Wa.shape[0], :Wa.shape[1]] = Wa
            W[Wa.shape[0]:, Wa.shape[1]:] = Wb
        layers.append((W, np.concatenate([ba, bb])))
    return ReluNetwork(layers)


def masking_network(d: int, D, n_maps: int) -> ReluNetwork:
    """Network computing the masked identity: coordinate j is kept iff
    ``j in D`` (1-based), other coordinates map to zero -- for every real
    input, via sigma(x) - sigma(-x) = x.

    ``n_maps`` counts affine maps; the hidden width is 2d and the nonzero
    count is ``2d(n_maps - 2) + 4|D|`` for n_maps >= 2 (``|D|`` for a bare
    masked identity map, n_maps = 1).
    """
    D = set(int(j) for j in D)
    if n_maps < 1:
        raise InputError("n_maps must be >= 1")
    if not D <= set(range(1, d + 1)):
        raise InputError(f"D must be a subset of 1..{d}")
    ID = np.zeros((d, d))
    for j in D:
        ID[j - 1, j - 1] = 1.0
    if n_maps == 1:
        return affine_network(ID)
    first = np.vstack([ID, -ID])
    layers = [(first, np.zeros(2 * d))]
    for _ in range(n_maps - 2):
        layers.append((np.eye(2 * d), np.zeros(2 * d)))
    last = np.hstack([ID, -ID])
    layers.append((last, np.zeros(d)))
    return ReluNetwork(layers)


def pad_depth(net: ReluNetwork, target_depth: int) -> ReluNetwork:
    """Deepen a network to exactly ``target_depth`` hidden layers while
    preserving its function, by appending masked-identity blocks on the
    output side (hidden width doubles to 2 * output_dim in the padding)."""
    if target_depth < net.depth:
        raise InputError(f"target depth {target_depth} below current {net.depth}")
    if target_depth == net.depth:
        return net
    extra = target_depth - net.depth
    block = masking_network(net.output_dim, range(1, net.output_dim + 1), extra + 1)
    return stack(block, net)


def clamp_output(net: ReluNetwork, F: float) -> ReluNetwork:
    """Append two ReLU layers computing ``min(F, max(-F, f(x)))`` for a
    scalar-output network: max(-F, z) = sigma(z + F) - F and
    min(F, w) = F - sigma(F - w)."""
    if F <= 0:
        raise InputError("F must be positive")
    if net.output_dim != 1:
        raise InputError("clamp_output requires a scalar output")
    block = ReluNetwork([
        (np.array([[1.0]]), np.array([F])),        # u = sigma(z + F)
        (np.array([[-1.0]]), np.array([2.0 * F])),  # v = sigma(2F - u)
        (np.array([[-1.0]]), np.array([F])),        # out = F - v
    ])
    return stack(block, net)


def to_doc(net: ReluNetwork, meta: Optional[dict] = None) -> dict:
    """Versioned plain-data document; round-trips bit-exactly for finite
    doubles (floats are serialized via shortest round-trip repr)."""
    return {
        "format": SERIAL_FORMAT,
        "version": SERIAL_VERSION,
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [
            {"weights": W.tolist(), "bias": b.tolist()}
            for W, b in zip(net.weights, net.biases)
        ],
        "meta": dict(meta or {}),
    }


def from_doc(doc: dict) -> ReluNetwork:
    if doc.get("format") != SERIAL_FORMAT:
        raise InputError(f"not a {SERIAL_FORMAT} document")
    if doc.get("version") != SERIAL_VERSION:
        raise InputError(f"unsupported document version {doc.get('version')!r}")
    net = ReluNetwork([(layer["weights"], layer["bias"]) for layer in doc["layers"]])
    if net.input_dim != doc["input_dim"] or net.output_dim != doc["output_dim"]:
        raise InputError("document dimensions do not match its layers")
    return net


def save(net: ReluNetwork, path, meta: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_doc(net, meta), fh)


def load(path) -> ReluNetwork:
    with open(path, encoding="utf-8") as fh:
        return from_doc(json.load(fh))
