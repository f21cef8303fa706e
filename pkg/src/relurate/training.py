"""Surrogate losses and constrained empirical-risk training for sparse ReLU
classifiers, plus data-split model selection.

The optimizer is minibatch projected subgradient descent with a cosine
learning-rate decay: parameters are clipped into [-B, B] after every step,
global magnitude pruning (no regrowth) keeps at most S nonzeros, and the
returned network is output-clamped into [-F, F].  Runs are bit-reproducible
from (config, seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import DivergenceError, InputError
from .network import ArchBudget, ReluNetwork, clamp_output

HINGE = "hinge"
LOGISTIC = "logistic"
_KIND_ID = {HINGE: _kernels.HINGE, LOGISTIC: _kernels.LOGISTIC}

#: depth / nonzero cost of the output clamp appended at exit
CLAMP_DEPTH = 2
CLAMP_NNZ = 6


def loss_value(kind: str, z):
    """hinge(z) = max(1 - z, 0); logistic(z) = log(1 + e^-z), overflow-safe."""
    return _kernels.loss_values(_kind_id(kind), np.asarray(z, dtype=float))


def loss_subgrad(kind: str, z):
    """A subgradient of the loss at margin z; the hinge kink at z = 1 uses 0."""
    return _kernels.loss_subgrad(_kind_id(kind), np.asarray(z, dtype=float))


def _kind_id(kind: str) -> int:
    try:
        return _KIND_ID[kind]
    except KeyError:
        raise InputError(f"kind must be one of {sorted(_KIND_ID)}") from None


def empirical_phi_risk(net: ReluNetwork, data, kind: str) -> float:
    """Mean surrogate loss of the network over a labelled sample."""
    X, y = data
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise InputError("empty data")
    f = net(X)[:, 0]
    return float(np.mean(loss_value(kind, y * f)))


def loss_gradients(net: ReluNetwork, X, y, kind: str):
    """Mean-loss subgradients w.r.t. every parameter (reference backend);
    returns (loss, [dW...], [db...])."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    ws = [np.array(W) for W in net.weights]
    bs = [np.array(b) for b in net.biases]
    return _kernels.gradients(ws, bs, X, y, _kind_id(kind))


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.  The budget fixes the network
    class; the prune target is ``budget.max_nnz``."""

    budget: ArchBudget
    epochs: int = 200
    lr: float = 0.2
    minibatch: int = 64
    prune_every: int = 50
    seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.minibatch < 1 or self.prune_every < 1:
            raise InputError("epochs, minibatch and prune_every must be positive")
        if self.lr <= 0 or self.init_scale <= 0:
            raise InputError("lr and init_scale must be positive")


def _architecture(d: int, budget: ArchBudget) -> Tuple[int, int, bool]:
    """Trainable core shape.  Depth budgets of at least 3 reserve two layers
    for the output clamp; shallower budgets skip the clamp and rescale the
    output map into the sup bound instead."""
    depth = int(min(budget.max_depth, 64))
    use_clamp = depth >= 1 + CLAMP_DEPTH
    core_depth = max(1, depth - CLAMP_DEPTH) if use_clamp else max(1, depth)
    width = int(max(1, min(budget.max_width, 4096)))
    return core_depth, width, use_clamp


def _init_params(d: int, core_depth: int, width: int, scale: float, rng):
    dims = [d] + [width] * core_depth + [1]
    ws, bs = [], []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        bound = scale / math.sqrt(fan_in)
        ws.append(rng.uniform(-bound, bound, size=(dims[i + 1], dims[i])))
        bs.append(rng.uniform(-bound, bound, size=dims[i + 1]))
    return ws, bs


def _prune_to(ws, bs, wmasks, bmasks, target_nnz: int) -> None:
    """Global magnitude pruning: keep the ``target_nnz`` largest surviving
    parameters, zero the rest, and tighten the masks (no regrowth)."""
    mags = np.concatenate([np.abs(w).ravel() * m.ravel()
                           for w, m in zip(ws, wmasks)]
                          + [np.abs(b).ravel() * m.ravel()
                             for b, m in zip(bs, bmasks)])
    total = mags.size
    if target_nnz >= total:
        return
    if target_nnz <= 0:
        thresh = math.inf
    else:
        # stable global threshold: value of the target-th largest magnitude
        order = np.sort(mags)[::-1]
        thresh = order[target_nnz - 1]
        if thresh == 0.0:
            thresh = np.nextafter(0.0, 1.0)
    kept = 0
    for arr, mask in list(zip(ws, wmasks)) + list(zip(bs, bmasks)):
        keep = (np.abs(arr) * mask) >= thresh
        # ties at the threshold: keep in fixed flat order until the target
        flat = keep.ravel()
        for i in np.flatnonzero(flat):
            if kept >= target_nnz:
                flat[i] = False
            else:
                kept += 1
        mask[...] = np.where(keep, mask, 0.0)
        arr *= mask


def erm_train(data, kind: str, config: TrainConfig,
              trace: Optional[list] = None) -> ReluNetwork:
    """Minimize the empirical surrogate risk over the budgeted network class.

    Returns a network satisfying every budget constraint: the core depth and
    width are fixed at construction (two layers are reserved for the output
    clamp when the depth budget is at least 3), parameters are clipped into
    [-B, B] after every step, magnitude pruning (no regrowth) runs every
    ``prune_every`` epochs and at exit, and the output is clamped into
    [-F, F].  The sparse state with the lowest full-sample loss is returned,
    with the pruned starting point always a candidate, so the final core
    loss never exceeds the starting one.  ``trace`` (optional list) receives
    (epoch, phi_risk, nnz, max_abs) rows.
    """
    X, y = data
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise InputError("data must be a nonempty (X, y) pair")
    n, d = X.shape
    budget = config.budget
    kid = _kind_id(kind)

    core_depth, width, use_clamp = _architecture(d, budget)
    core_nnz = int(budget.max_nnz) - (CLAMP_NNZ if use_clamp else 0)
    if core_nnz <= 0:
        # budget too small for any clamped nonzero core: the zero network
        # satisfies every constraint as-is
        zero = ReluNetwork([(np.zeros((1, d)), np.zeros(1))])
        if trace is not None:
            trace.append((0, float(np.mean(loss_value(kind, np.zeros(n)))), 0, 0.0))
        return zero

    rng = np.random.default_rng(config.seed)
    ws, bs = _init_params(d, core_depth, width, config.init_scale, rng)
    clip = float(budget.max_abs)
    for w in ws:
        np.clip(w, -clip, clip, out=w)
    for b in bs:
        np.clip(b, -clip, clip, out=b)
    wmasks = [np.ones_like(w) for w in ws]
    bmasks = [np.ones_like(b) for b in bs]

    def full_loss(w_list, b_list) -> float:
        f = _kernels.forward(w_list, b_list, X)[:, 0]
        return float(np.mean(loss_value(kind, y * f)))

    def pruned_copy(w_list, b_list):
        wc = [w.copy() for w in w_list]
        bc = [b.copy() for b in b_list]
        _prune_to(wc, bc, [np.ones_like(w) for w in wc],
                  [np.ones_like(b) for b in bc], core_nnz)
        return wc, bc

    # the pruned initial state is always a return candidate, which pins the
    # final loss at or below the (sparse) starting point
    best_params = pruned_copy(ws, bs)
    best_loss = full_loss(*best_params)
    loss0 = full_loss(ws, bs)
    if trace is not None:
        trace.append((0, loss0, _live_nnz(ws, bs), _max_abs(ws, bs)))

    steps_per_epoch = max(1, n // config.minibatch)
    total_steps = config.epochs * steps_per_epoch
    step = 0
    pruned_live = False
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        for k in range(steps_per_epoch):
            idx = perm[k * config.minibatch:(k + 1) * config.minibatch]
            lr = 0.5 * config.lr * (1.0 + math.cos(math.pi * step / total_steps))
            loss = _kernels.train_step(ws, bs, wmasks, bmasks, X[idx], y[idx],
                                       kid, lr, clip)
            if not math.isfinite(loss):
                raise DivergenceError("non-finite minibatch loss", config=config)
            step += 1
        if epoch % config.prune_every == 0:
            _prune_to(ws, bs, wmasks, bmasks, core_nnz)
            pruned_live = True
        epoch_loss = full_loss(ws, bs)
        if not math.isfinite(epoch_loss):
            raise DivergenceError("non-finite training loss", config=config)
        if trace is not None:
            trace.append((epoch, epoch_loss, _live_nnz(ws, bs), _max_abs(ws, bs)))
        if pruned_live and epoch_loss < best_loss:
            best_loss = epoch_loss
            best_params = ([w.copy() for w in ws], [b.copy() for b in bs])
    if not pruned_live:
        cand = pruned_copy(ws, bs)
        cand_loss = full_loss(*cand)
        if cand_loss < best_loss:
            best_loss, best_params = cand_loss, cand

    ws, bs = best_params
    wmasks = [np.ones_like(w) for w in ws]
    bmasks = [np.ones_like(b) for b in bs]
    _prune_to(ws, bs, wmasks, bmasks, core_nnz)
    core = ReluNetwork(list(zip(ws, bs)))
    if all(np.count_nonzero(w) == 0 for w in ws) and \
            all(np.count_nonzero(b) == 0 for b in bs):
        return core  # identically zero; already inside every sup bound
    if use_clamp:
        return clamp_output(core, float(budget.max_sup))
    # shallow budget: project into the sup bound by scaling the output map
    from .network import stats as _stats
    sup = _stats(core, grid_resolution=33).sup_norm_estimate
    F = float(budget.max_sup)
    if sup is not None and sup > F:
        scale = F / sup
        ws[-1] = ws[-1] * scale
        bs[-1] = bs[-1] * scale
        core = ReluNetwork(list(zip(ws, bs)))
    return core


def _live_nnz(ws, bs) -> int:
    return int(sum(np.count_nonzero(a) for a in ws)
               + sum(np.count_nonzero(a) for a in bs))


def _max_abs(ws, bs) -> float:
    vals = [np.max(np.abs(a)) for a in ws if a.size] + \
           [np.max(np.abs(a)) for a in bs if a.size]
    return float(max(vals)) if vals else 0.0


@dataclass(frozen=True)
class SelectionReport:
    rows: tuple  # (index, val_error, nnz, depth) per candidate
    chosen: int


def model_select(candidates: Sequence[tuple], data, split_fraction: float):
    """Data-split selection: train every candidate on the first part, pick
    the lowest hold-out 0-1 error on the second; ties break to smaller
    nonzero count, then smaller depth, then candidate order.

    ``candidates`` holds (config_builder, TrainConfig) pairs where
    ``config_builder(n1)`` maps the train-split size to the budget, or plain
    TrainConfig entries used as-is.
    """
    from .network import stats  # local import to avoid cycle at module load

    X, y = data
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 0.0 < split_fraction < 1.0:
        raise InputError("split_fraction must lie in (0, 1)")
    if len(candidates) < 2:
        raise InputError("need at least two candidates")
    n1 = int(round(X.shape[0] * split_fraction))
    if n1 == 0 or n1 == X.shape[0]:
        raise InputError("split leaves an empty part")
    X1, y1, X2, y2 = X[:n1], y[:n1], X[n1:], y[n1:]

    rows = []
    nets = []
    for idx, cand in enumerate(candidates):
        if isinstance(cand, TrainConfig):
            cfg = cand
        else:
            builder, cfg = cand
            cfg = replace(cfg, budget=builder(n1))
        net = erm_train((X1, y1), HINGE, cfg)
        pred = np.where(net(X2)[:, 0] > 0.0, 1.0, -1.0)
        err = float(np.mean(pred != y2))
        st = stats(net)
        rows.append((idx, err, st.nnz, st.depth))
        nets.append(net)
    chosen = min(rows, key=lambda r: (r[1], r[2], r[3], r[0]))[0]
    return nets[chosen], SelectionReport(rows=tuple(rows), chosen=chosen)
