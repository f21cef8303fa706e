"""Invariant suites behind the ``verify`` command: composition calculus,
builder exactness, formula spot checks, generator fidelity, surrogate-loss
inequalities and gradient correctness.

Each check yields a :class:`CheckResult`; gated failures drive a nonzero
exit status.  Monte Carlo checks carry their standard errors in the result
row.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .config import HarnessConfig
from .constructions import (
    ClassifierSpec,
    HorizonSpec,
    PieceSpec,
    SafeRegion,
    build_horizon,
    build_piecewise_classifier,
    build_plugin_threshold,
    build_product,
    build_smooth_approx,
    build_square,
    product_error_bound,
    square_error_bound,
)
from .network import (
    ArchBudget,
    ReluNetwork,
    affine_network,
    clamp_output,
    concat,
    evaluate,
    from_doc,
    masking_network,
    pad_depth,
    stack,
    stats,
    to_doc,
)
from .polynomials import Polynomial
from .rates import (
    RateSpec,
    architecture_schedule,
    entropy_bound,
    hinge_variance_params,
    logistic_risk_bound_rhs,
    minimax_exponent,
    rate_exponent,
    variance_bound_rhs,
)
from .tasks import excess_risk, estimate_exponent, make_extreme_eta_task
from .training import (
    HINGE,
    LOGISTIC,
    TrainConfig,
    empirical_phi_risk,
    erm_train,
    loss_gradients,
    loss_value,
)

REL_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    gated: bool
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    se: Optional[float] = None
    details: str = ""

    def row(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, np.bool_):
                v = bool(v)
            elif isinstance(v, np.floating):
                v = float(v)
            elif isinstance(v, np.integer):
                v = int(v)
            out[k] = v
        return out


def _rel_close(a, b, tol=REL_TOL) -> float:
    scale = 1.0 + max(abs(float(np.max(np.abs(a)))), abs(float(np.max(np.abs(b)))))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / scale


def _random_net(rng, in_dim, out_dim, depth, width, scale=1.0, density=0.7):
    dims = [in_dim] + [width] * depth + [out_dim]
    layers = []
    for i in range(len(dims) - 1):
        W = rng.normal(0.0, scale / math.sqrt(dims[i]), (dims[i + 1], dims[i]))
        W[rng.random(W.shape) > density] = 0.0
        b = rng.normal(0.0, 0.1, dims[i + 1])
        layers.append((W, b))
    return ReluNetwork(layers)


# ---------------------------------------------------------------------------
# composition calculus


def composition_suite(n_pairs: int = 100, seed: int = 5150) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    nnz_ok = True
    depth_ok = True
    for _ in range(n_pairs):
        k = int(rng.integers(1, 5))
        inner = _random_net(rng, int(rng.integers(1, 5)), k,
                            int(rng.integers(0, 3)), int(rng.integers(2, 7)))
        outer = _random_net(rng, k, int(rng.integers(1, 4)),
                            int(rng.integers(0, 3)), int(rng.integers(2, 7)))
        comp = stack(outer, inner)
        X = rng.uniform(-2.0, 2.0, (100, inner.input_dim))
        direct = comp(X)
        nested = outer(inner(X))
        worst = max(worst, _rel_close(direct, nested))
        depth_ok &= comp.depth == outer.depth + inner.depth
        # merged-interface sparsity bound: the replaced affine map has at
        # most rows(first of outer) x cols(last of inner) weights
        c_merge = outer.weights[0].shape[0] * inner.weights[-1].shape[1]
        nnz_ok &= stats(comp).nnz <= stats(outer).nnz + stats(inner).nnz + 2 * c_merge
    out.append(CheckResult("stack/nested-evaluation", True, worst <= 1e-12,
                           value=worst, threshold=1e-12,
                           details=f"{n_pairs} random compositions"))
    out.append(CheckResult("stack/depth-additive", True, depth_ok))
    out.append(CheckResult("stack/nnz-bound", True, nnz_ok,
                           details="merged-interface constant"))

    worst = 0.0
    additive = True
    for _ in range(n_pairs):
        d = int(rng.integers(1, 5))
        depth = int(rng.integers(0, 3))
        a = _random_net(rng, d, int(rng.integers(1, 4)), depth, int(rng.integers(2, 6)))
        b = _random_net(rng, d, int(rng.integers(1, 4)), depth, int(rng.integers(2, 6)))
        cc = concat(a, b)
        X = rng.uniform(-2.0, 2.0, (50, d))
        got = cc(X)
        worst = max(worst, _rel_close(got[:, :a.output_dim], a(X)))
        worst = max(worst, _rel_close(got[:, a.output_dim:], b(X)))
        additive &= stats(cc).nnz == stats(a).nnz + stats(b).nnz
    out.append(CheckResult("concat/block-evaluation", True, worst <= 1e-12,
                           value=worst, threshold=1e-12))
    out.append(CheckResult("concat/nnz-additive", True, additive))

    worst = 0.0
    exact_depth = True
    for _ in range(n_pairs):
        d = int(rng.integers(1, 4))
        net = _random_net(rng, d, int(rng.integers(1, 4)),
                          int(rng.integers(0, 3)), int(rng.integers(2, 6)))
        target = net.depth + int(rng.integers(0, 4))
        padded = pad_depth(net, target)
        X = rng.uniform(-2.0, 2.0, (100, d))
        worst = max(worst, _rel_close(padded(X), net(X)))
        exact_depth &= padded.depth == target
    out.append(CheckResult("pad/evaluation", True, worst <= 1e-12,
                           value=worst, threshold=1e-12))
    out.append(CheckResult("pad/depth-exact", True, exact_depth))

    mask_exact = True
    formula = True
    for d in (2, 3, 5):
        for trial in range(6):
            size = int(rng.integers(0, d + 1))
            D = set(rng.choice(np.arange(1, d + 1), size=size, replace=False).tolist())
            n_maps = int(rng.integers(1, 5))
            net = masking_network(d, D, n_maps)
            X = rng.uniform(-3.0, 3.0, (64, d))
            X[0] = 0.0
            want = X.copy()
            for j in range(1, d + 1):
                if j not in D:
                    want[:, j - 1] = 0.0
            mask_exact &= bool(np.array_equal(net(X), want))
            if n_maps >= 2:
                formula &= stats(net).nnz == 2 * d * (n_maps - 2) + 4 * len(D)
            else:
                formula &= stats(net).nnz == len(D)
    out.append(CheckResult("masking/exact-identity", True, mask_exact,
                           details="negative, zero and positive inputs"))
    out.append(CheckResult("masking/nnz-formula", True, formula))

    spot = stats(masking_network(3, {1}, 3)).nnz
    out.append(CheckResult("masking/nnz-spot-d3", True, spot == 10,
                           value=float(spot), threshold=10.0))

    clamp_ok = True
    for _ in range(20):
        net = _random_net(rng, 2, 1, 2, 6, scale=2.0)
        F = float(rng.uniform(0.3, 2.0))
        cl = clamp_output(net, F)
        X = rng.random((1000, 2))
        f = net(X)[:, 0]
        g = cl(X)[:, 0]
        clamp_ok &= bool(np.all(np.abs(g) <= F + 1e-12))
        inside = np.abs(f) <= F
        clamp_ok &= bool(np.allclose(g[inside], f[inside], rtol=0, atol=1e-12))
    out.append(CheckResult("clamp/range-and-identity", True, clamp_ok))

    mono = True
    for _ in range(40):
        net = _random_net(rng, 2, 1, 2, 5)
        st = stats(net, grid_resolution=9)
        budget = ArchBudget(max_depth=rng.integers(0, 5),
                            max_width=rng.integers(1, 8),
                            max_nnz=rng.integers(0, 40),
                            max_abs=rng.uniform(0.1, 2.0),
                            max_sup=rng.uniform(0.1, 2.0))
        relaxed = ArchBudget(budget.max_depth + 1, budget.max_width + 2,
                             budget.max_nnz + 5, budget.max_abs * 2,
                             budget.max_sup * 2)
        if budget.satisfied_by(st):
            mono &= relaxed.satisfied_by(st)
    out.append(CheckResult("budget/monotone", True, mono))

    rt = True
    for _ in range(20):
        net = _random_net(rng, 3, 2, 2, 5)
        back = from_doc(to_doc(net))
        rt &= all(np.array_equal(a, b) for a, b in zip(net.weights, back.weights))
        rt &= all(np.array_equal(a, b) for a, b in zip(net.biases, back.biases))
    out.append(CheckResult("serialization/bit-exact-roundtrip", True, rt))
    return out


# ---------------------------------------------------------------------------
# approximator accuracy


def approx_suite() -> List[CheckResult]:
    out = []
    grid = np.linspace(0.0, 1.0, 10_001)[:, None]
    errs = {}
    for m in (4, 8, 12):
        net = build_square(m)
        errs[m] = float(np.max(np.abs(net(grid)[:, 0] - grid[:, 0] ** 2)))
        out.append(CheckResult(f"square/error-m{m}", True,
                               errs[m] <= square_error_bound(m),
                               value=errs[m], threshold=square_error_bound(m)))
    e4 = float(np.max(np.abs(build_square(5)(grid)[:, 0] - grid[:, 0] ** 2)))
    ratio = e4 / errs[4]
    out.append(CheckResult("square/quartic-decay", True, ratio <= 0.25 * 1.1,
                           value=ratio, threshold=0.275))
    z = build_square(6)(np.array([[0.0], [1.0]]))[:, 0]
    out.append(CheckResult("square/endpoints-exact", True,
                           z[0] == 0.0 and z[1] == 1.0,
                           details=f"f(0)={z[0]}, f(1)={z[1]}"))

    rng = np.random.default_rng(99)
    for M in (1.0, 2.0):
        m = 8
        net = build_product(m, M)
        U = rng.uniform(-M, M, (20_000, 2))
        err = float(np.max(np.abs(net(U)[:, 0] - U[:, 0] * U[:, 1])))
        out.append(CheckResult(f"product/error-M{M:g}", True,
                               err <= product_error_bound(m, M),
                               value=err, threshold=product_error_bound(m, M)))
    net = build_product(8, 1.0)
    U = rng.uniform(-1.0, 1.0, (5000, 2))
    sym = float(np.max(np.abs(net(U)[:, 0] - net(U[:, ::-1].copy())[:, 0])))
    out.append(CheckResult("product/symmetry", True, sym <= 1e-12,
                           value=sym, threshold=1e-12))
    zero = float(np.max(np.abs(net(np.stack([np.zeros(100),
                                             np.linspace(-1, 1, 100)], axis=1))[:, 0])))
    out.append(CheckResult("product/zero-factor", True,
                           zero <= product_error_bound(8, 1.0),
                           value=zero, threshold=product_error_bound(8, 1.0)))

    const = build_smooth_approx(Polynomial.constant(0.37, 1), 1e-9)
    cerr = float(np.max(np.abs(const(grid)[:, 0] - 0.37)))
    out.append(CheckResult("smooth/constant-exact", True, cerr == 0.0, value=cerr))
    lin = build_smooth_approx(Polynomial.affine(0.2, [0.5]), 1e-9)
    lerr = float(np.max(np.abs(lin(grid)[:, 0] - (0.2 + 0.5 * grid[:, 0]))))
    out.append(CheckResult("smooth/linear-exact", True, lerr == 0.0, value=lerr))
    sq = build_smooth_approx(Polynomial(1, {(2,): 1.0}), 1e-3)
    serr = float(np.max(np.abs(sq(grid)[:, 0] - grid[:, 0] ** 2)))
    out.append(CheckResult("smooth/quadratic-1e-3", True, serr <= 1e-3,
                           value=serr, threshold=1e-3))

    # size scaling of the horizon budget as the gap shrinks
    g = Polynomial(1, {(0,): 0.45, (1,): 0.2, (2,): 0.15})
    spec = HorizonSpec(j=1, g=g, holder_alpha=1.0, holder_radius=4.0)
    xis = np.array([0.1, 0.05, 0.025, 0.0125])
    nnzs = np.array([stats(build_horizon(spec, x)).nnz for x in xis],
                    dtype=float)
    slope = float(np.polyfit(np.log(1.0 / xis), np.log(nnzs), 1)[0])
    limit = (2 - 1) / 1.0 + 0.5
    out.append(CheckResult("horizon/nnz-scaling-slope", True, slope <= limit,
                           value=slope, threshold=limit))
    return out


# ---------------------------------------------------------------------------
# builder exactness on safe regions


def _horizon_cases(d: int):
    if d == 2:
        polys = [
            Polynomial(1, {(0,): 0.5}),
            Polynomial(1, {(0,): 0.35, (1,): 0.3}),
            Polynomial(1, {(0,): 0.3, (1,): 0.25, (2,): 0.2}),
        ]
        return [HorizonSpec(1, p, 1.0 if p.is_affine() else 2.0, 4.0) for p in polys]
    polys = [
        Polynomial(2, {(0, 0): 0.45, (1, 0): 0.2, (0, 1): -0.15}),
        Polynomial(2, {(0, 0): 0.35, (1, 1): 0.3}),
    ]
    return [HorizonSpec(1, p, 1.0 if p.is_affine() else 2.0, 4.0) for p in polys]


def horizon_exactness(d: int, xi: float, n_points: int, seed: int = 0) -> CheckResult:
    mism = 0
    range_ok = True
    rng = np.random.default_rng(seed)
    for hs in _horizon_cases(d):
        net = build_horizon(hs, xi)
        spec = ClassifierSpec((PieceSpec((hs,)),))
        region = SafeRegion(spec, xi)
        X = region.sample(n_points, seed=int(rng.integers(2 ** 31)))
        f = net(X)[:, 0]
        mism += int(np.count_nonzero(f != hs.oracle(X)))
        Xall = rng.random((20_000, d))
        fa = net(Xall)[:, 0]
        range_ok &= bool(np.all((fa >= 0.0) & (fa <= 1.0)))
    return CheckResult(f"horizon/exactness-d{d}-xi{xi:g}", True,
                       mism == 0 and range_ok, value=float(mism), threshold=0.0,
                       details=f"{n_points} safe points per boundary; range in [0,1]")


def _classifier_case(d: int, K: int, T: int) -> ClassifierSpec:
    """Disjoint pieces used by the exactness checks."""
    if T == 1:
        if K == 1:
            return ClassifierSpec((PieceSpec((_horizon_cases(d)[1],)),))
        box = (
            HorizonSpec(1, Polynomial.constant(0.3, d - 1), 1.0, 2.0),
            HorizonSpec(2, Polynomial.constant(0.7, d - 1), 1.0, 2.0),
        )
        return ClassifierSpec((PieceSpec(box[:K]),))
    # two pieces separated along coordinate 1
    if K == 1:
        upper = HorizonSpec(1, Polynomial.constant(0.62, d - 1), 1.0, 2.0)
        # lower piece: x2 above a parabola that exits the cube for x1 > ~0.5
        terms = {(0,) * (d - 1): 0.2, (2,) + (0,) * (d - 2): 4.0}
        lower = HorizonSpec(2, Polynomial(d - 1, terms), 2.0, 30.0)
        return ClassifierSpec((PieceSpec((upper,)), PieceSpec((lower,))))
    band = 0.45
    p1 = (
        HorizonSpec(1, Polynomial.constant(0.55, d - 1), 1.0, 2.0),
        HorizonSpec(2, Polynomial.constant(band, d - 1), 1.0, 2.0),
    )
    # second piece sits strictly below the first in coordinate 1;
    # its first horizon keeps x1 >= 0.05 so pieces stay disjoint via x1 <= 0.45
    neg = {(0,) * (d - 1): 0.05}
    p2 = (
        HorizonSpec(1, Polynomial(d - 1, neg), 1.0, 2.0),
        HorizonSpec(2, Polynomial(d - 1, {(0,) * (d - 1): 0.3,
                                          (1,) + (0,) * (d - 2): 1.4}), 1.0, 4.0),
    )
    return ClassifierSpec((PieceSpec(p1[:K]), PieceSpec(p2[:K])))


def piecewise_exactness(d: int, K: int, T: int, xi: float, n_points: int,
                        seed: int = 0) -> CheckResult:
    spec = _classifier_case(d, K, T)
    net = build_piecewise_classifier(spec, xi)
    region = SafeRegion(spec, xi)
    X = region.sample(n_points, seed=seed)
    f = net(X)[:, 0]
    mism = int(np.count_nonzero(f != spec.oracle(X)))
    rng = np.random.default_rng(seed + 1)
    Xall = rng.random((20_000, d))
    fa = net(Xall)[:, 0]
    range_ok = bool(np.all((fa >= -1.0) & (fa <= 1.0)))
    return CheckResult(f"piecewise/exactness-d{d}-K{K}-T{T}-xi{xi:g}", True,
                       mism == 0 and range_ok, value=float(mism), threshold=0.0,
                       details=f"{n_points} safe points; range in [-1,1]")


def exactness_suite(cfg: HarnessConfig) -> List[CheckResult]:
    pts = cfg.verify.exactness_points
    out = []
    for d in (2, 3):
        for xi in (0.1, 0.05, 0.02):
            out.append(horizon_exactness(d, xi, pts, seed=hash((d, xi)) % 10_000))
    for K in (1, 2):
        for T in (1, 2):
            for xi in (0.1, 0.05, 0.02):
                out.append(piecewise_exactness(2, K, T, xi, pts,
                                               seed=hash((K, T, xi)) % 10_000))
    out.append(piecewise_exactness(3, 2, 2, 0.05, pts, seed=33))

    # plug-in thresholding of a constant probability estimate
    vals = {0.8: 1.0, 0.5: -1.0, 0.3: -1.0}
    okay = True
    for eta0, want in vals.items():
        net = build_plugin_threshold(affine_network(np.zeros((1, 2)),
                                                    np.array([eta0])), 0.1)
        got = float(evaluate(net, np.array([0.4, 0.6]))[0])
        okay &= got == want
    out.append(CheckResult("plugin/threshold-values", True, okay,
                           details="estimates 0.8 / 0.5 / 0.3 at gap 0.1"))

    # complement of the safe region hugs the decision boundary
    hs = _horizon_cases(2)[1]
    cls = ClassifierSpec((PieceSpec((hs,)),))
    region = SafeRegion(cls, 0.05)
    rng = np.random.default_rng(8)
    X = rng.random((200_000, 2))
    Xc = X[~region.membership(X)]
    from .tasks import boundary_projection_distance
    dist = boundary_projection_distance(hs.g, Xc[:2000])
    out.append(CheckResult("safe-region/complement-near-boundary", True,
                           bool(np.all(dist <= 0.05 + 1e-6)),
                           value=float(np.max(dist)) if dist.size else 0.0,
                           threshold=0.05,
                           details=f"{Xc.shape[0]} complement points sampled"))

    # parameter growth stays polynomial in 1/xi
    worst = 0.0
    for xi in (0.1, 0.05, 0.02):
        st = stats(build_horizon(hs, xi))
        worst = max(worst, st.max_abs_param * xi ** 3)
    out.append(CheckResult("horizon/max-param-flag", False, worst <= 1.0,
                           value=worst, threshold=1.0,
                           details="max |param| * xi^3 across gaps"))
    return out


# ---------------------------------------------------------------------------
# formula spot checks


def theory_suite() -> List[CheckResult]:
    out = []
    v = entropy_bound(1, 1, 0, 1, 1)
    out.append(CheckResult("entropy/spot-2log4", True,
                           abs(v - 2.0 * math.log(4.0)) <= 1e-12, value=v,
                           threshold=2.0 * math.log(4.0)))
    out.append(CheckResult("entropy/B-clamp", True,
                           entropy_bound(2, 3, 5, 0.5, 0.1)
                           == entropy_bound(2, 3, 5, 1.0, 0.1)))
    out.append(CheckResult("entropy/monotone-S", True,
                           entropy_bound(2, 3, 6, 2, 0.1)
                           > entropy_bound(2, 3, 5, 2, 0.1)))

    ok = abs(rate_exponent(RateSpec("smooth_boundary", d=2, alpha=1.0, q=0.0))
             - 1.0 / 3.0) <= 1e-12
    out.append(CheckResult("rate/case1-spot", True, ok))
    ok = abs(rate_exponent(RateSpec("cross_entropy", d=2, alpha=1.0, gamma=1.0))
             - 0.5) <= 1e-12
    out.append(CheckResult("rate/kappa-spot", True, ok))

    worst = 0.0
    for q in (0.0, 1.0, 5.0):
        big = rate_exponent(RateSpec("margin", d=3, alpha=1.5, q=q, gamma=1e9))
        worst = max(worst, abs(big - (q + 1) / (q + 2)))
    out.append(CheckResult("rate/margin-gamma-limit", True, worst <= 1e-6,
                           value=worst, threshold=1e-6))

    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for q in (0.0, 0.7, 3.0, math.inf):
            for d in (2, 4, 7):
                c3 = rate_exponent(RateSpec("margin", d=d, alpha=a, q=q, gamma=1.0))
                c1 = rate_exponent(RateSpec("smooth_boundary", d=d, alpha=a, q=q))
                worst = max(worst, abs(c3 - c1))
    out.append(CheckResult("rate/margin-gamma1-equals-case1", True, worst <= 1e-12,
                           value=worst, threshold=1e-12))

    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for g in (1.0, 2.0, 5.0):
            for d in (2, 4, 7):
                kap = rate_exponent(RateSpec("cross_entropy", d=d, alpha=a, gamma=g))
                lim = rate_exponent(RateSpec("margin", d=d, alpha=a, q=math.inf,
                                             gamma=g))
                worst = max(worst, abs(kap - lim))
    out.append(CheckResult("rate/kappa-equals-margin-qinf", True, worst <= 1e-12,
                           value=worst, threshold=1e-12))

    mono = True
    qs = [0.0, 0.5, 1.0, 2.0, 5.0, 20.0, math.inf]
    for d in (2, 3, 6):
        for a in (0.5, 1.0, 3.0):
            for case, kw in (("smooth_boundary", dict(alpha=a)),
                             ("smooth_eta", dict(beta=a)),
                             ("margin", dict(alpha=a, gamma=2.0))):
                vals = [rate_exponent(RateSpec(case, d=d, q=q, **kw)) for q in qs]
                mono &= all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
        gs = [1.0, 1.5, 3.0, 10.0, math.inf]
        vals = [rate_exponent(RateSpec("margin", d=d, alpha=1.0, q=1.0, gamma=g))
                for g in gs]
        mono &= all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
    ds = [2, 3, 5, 9]
    for case, kw in (("smooth_boundary", dict(alpha=1.0, q=1.0)),
                     ("smooth_eta", dict(beta=1.0, q=1.0)),
                     ("margin", dict(alpha=1.0, q=1.0, gamma=2.0)),
                     ("cross_entropy", dict(alpha=1.0, gamma=2.0))):
        vals = [rate_exponent(RateSpec(case, d=d, **kw)) for d in ds]
        mono &= all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    out.append(CheckResult("rate/monotone-grid", True, mono))

    worst = 0.0
    for b in (0.5, 1.0, 2.0):
        for q in (0.0, 1.0, 4.0):
            for d in (2, 5):
                worst = max(worst, abs(minimax_exponent("eta_lower", beta=b, q=q, d=d)
                                       - rate_exponent(RateSpec("smooth_eta", d=d,
                                                                beta=b, q=q))))
    out.append(CheckResult("minimax/eta-matches-rate", True, worst <= 1e-12,
                           value=worst, threshold=1e-12))

    dominated = True
    gap_inf = 0.0
    for q in np.linspace(0.0, 12.0, 25):
        lower = minimax_exponent("boundary_lower", alpha=1.0, q=float(q), d=5)
        upper = rate_exponent(RateSpec("smooth_boundary", d=5, alpha=1.0, q=float(q)))
        dominated &= lower >= upper - 1e-12
    gap_inf = abs(minimax_exponent("boundary_lower", alpha=1.0, q=math.inf, d=5)
                  - rate_exponent(RateSpec("smooth_boundary", d=5, alpha=1.0,
                                           q=math.inf)))
    out.append(CheckResult("minimax/boundary-dominates", True,
                           dominated and gap_inf <= 1e-12, value=gap_inf,
                           details="lower bound >= achieved exponent; equal at q=inf"))

    spec = RateSpec("smooth_boundary", d=2, alpha=1.0, q=1.0)
    ratios = []
    slopes = []
    for log2n in range(10, 21):
        sch = architecture_schedule(spec, 2 ** log2n)
        ratio = entropy_bound(sch.L_n, sch.N_n, sch.S_n, sch.B_n,
                              sch.epsilon_n_sq) \
            / (2 ** log2n * sch.epsilon_n_sq ** ((1.0 + 2.0) / (1.0 + 1.0)))
        ratios.append(ratio)
        slopes.append(math.log(sch.N_n) / math.log(1.0 / sch.xi_n))
    out.append(CheckResult("schedule/entropy-ratio-bounded", True,
                           max(ratios) <= 3.0, value=max(ratios), threshold=3.0,
                           details="n from 2^10 to 2^20"))
    big = architecture_schedule(spec, 2 ** 40)
    slope = math.log(big.N_n) / math.log(1.0 / big.xi_n)
    out.append(CheckResult("schedule/width-exponent", True,
                           abs(slope - 1.0) <= 0.05, value=slope,
                           threshold=1.05, details="target (d-1)/alpha = 1"))

    fs = [architecture_schedule(RateSpec(c, d=2, alpha=1.0, beta=1.0, q=1.0,
                                         gamma=2.0), 4096).F_n
          for c in ("smooth_boundary", "smooth_eta", "margin")]
    out.append(CheckResult("schedule/hinge-F-is-1", True,
                           all(f == 1.0 for f in fs)))
    f4 = architecture_schedule(RateSpec("cross_entropy", d=2, alpha=1.0,
                                        gamma=1.0), 16).F_n
    out.append(CheckResult("schedule/ce-F-floor", True, f4 > 0.0, value=f4))
    mono_ln = True
    prev = None
    for n in (32, 128, 512, 2048, 8192, 2 ** 15, 2 ** 18):
        sch = architecture_schedule(spec, n)
        if prev is not None:
            mono_ln &= sch.L_n >= prev.L_n and sch.S_n >= prev.S_n
        prev = sch
    out.append(CheckResult("schedule/L-S-nondecreasing", True, mono_ln))

    got = variance_bound_rhs(hinge_variance_params(q=1.0, F=1.0, c_eta_q=2.0), 0.25)
    out.append(CheckResult("variance/hinge-spot", True,
                           abs(got - 2.0 * math.sqrt(2.0)) <= 1e-12, value=got,
                           threshold=2.0 * math.sqrt(2.0)))
    zero = variance_bound_rhs(hinge_variance_params(q=2.0, F=1.0, c_eta_q=3.0), 0.0)
    out.append(CheckResult("variance/zero-excess", True, zero == 0.0))
    p = hinge_variance_params(q=math.inf, F=1.0, c_eta_q=3.0)
    out.append(CheckResult("variance/q-inf-limits", True,
                           p.nu == 1.0 and variance_bound_rhs(p, 0.5)
                           == 3.0 * 2.0 * 0.5))
    return out


# ---------------------------------------------------------------------------
# generator fidelity


def generator_suite(cfg: HarnessConfig) -> List[CheckResult]:
    from .polynomials import Polynomial
    from .tasks import (
        make_margin_task,
        make_smooth_boundary_task,
        make_smooth_eta_task,
    )

    n_mc = cfg.verify.generator_points
    out = []
    g = Polynomial(1, {(0,): 0.45, (1,): 0.2})

    for q in (0.5, 1.0, 2.0):
        task = make_smooth_boundary_task(2, 1.0, q, g, noise_width=0.25)
        est = estimate_exponent(task, "noise_q", n_mc=n_mc, seed=int(100 * q))
        out.append(CheckResult(f"generator/noise-exponent-q{q:g}", True,
                               abs(est.slope - q) <= 0.25, value=est.slope,
                               threshold=q, se=est.stderr))

    for gamma in (1.0, 2.0, 3.0):
        task = make_margin_task(2, 1.0, gamma, g, eps0=0.2)
        est = estimate_exponent(task, "margin_gamma", n_mc=n_mc,
                                seed=int(10 * gamma))
        out.append(CheckResult(f"generator/margin-exponent-g{gamma:g}", True,
                               abs(est.slope - gamma) <= 0.3, value=est.slope,
                               threshold=gamma, se=est.stderr))

    hard = make_margin_task(2, 1.0, math.inf, g, eps0=0.2)
    X = hard.sample_x(3, 10 ** 6)
    inside = int(np.count_nonzero(hard.boundary_distance(X) <= 0.2))
    out.append(CheckResult("generator/hard-margin-exclusion", True, inside == 0,
                           value=float(inside), threshold=0.0))
    est = estimate_exponent(hard, "margin_gamma", n_mc=10 ** 5, seed=3)
    out.append(CheckResult("generator/hard-margin-sentinel", True,
                           est.note is not None and math.isnan(est.slope),
                           details=est.note or ""))

    checks = []
    task_b = make_smooth_boundary_task(2, 1.0, 1.0, g, noise_width=0.25)
    eta_lin = Polynomial(2, {(0, 0): 0.0, (1, 0): 1.0})
    task_e = make_smooth_eta_task(2, 1.0, 1.0, eta_lin)
    task_x = make_extreme_eta_task(2, math.log(99.0), 0.05)
    for task in (task_b, task_e, task_x):
        est, se = task.mc_bayes_risk(seed=17, n=n_mc)
        ok = abs(est - task.bayes_risk) <= 4.0 * max(se, 1e-12)
        checks.append(ok)
        out.append(CheckResult(f"generator/bayes-risk-mc/{task.name}", True, ok,
                               value=est, threshold=task.bayes_risk, se=se))
    out.append(CheckResult("generator/eta-linear-closed-form", True,
                           abs(task_e.bayes_risk - 0.25) <= 1e-3,
                           value=task_e.bayes_risk, threshold=0.25))

    flat = make_smooth_eta_task(2, 1.0, 1.0, Polynomial.constant(0.5, 2))
    out.append(CheckResult("generator/pure-noise-risk", True,
                           abs(flat.bayes_risk - 0.5) <= 1e-12,
                           value=flat.bayes_risk, threshold=0.5))

    # noise profile spot value: q=1, w=0.2, margin 0.1 -> eta = 0.75
    t = make_smooth_boundary_task(2, 1.0, 1.0, Polynomial.constant(0.5, 1),
                                  noise_width=0.2)
    e = float(t.eta(np.array([[0.6, 0.3]]))[0])
    out.append(CheckResult("generator/eta-profile-spot", True,
                           abs(e - 0.75) <= 1e-12, value=e, threshold=0.75))
    mid = float(t.eta(np.array([[0.5, 0.3]]))[0])
    out.append(CheckResult("generator/eta-on-boundary", True, mid == 0.5,
                           value=mid, threshold=0.5))

    # near-deterministic labels: logit inversion and extreme-mass coverage
    lam = 0.05
    xt = make_extreme_eta_task(2, math.log(99.0), lam)
    probe = xt.eta(np.array([[0.9, 0.5], [0.1, 0.5]]))
    ok = abs(probe[0] - 0.99) <= 1e-6 and abs(probe[1] - 0.01) <= 1e-6
    out.append(CheckResult("extreme/logit-inversion", True, ok,
                           details=f"eta at strong logits: {probe}"))
    batches = []
    for child in np.random.SeedSequence(5).spawn(20):
        rng = np.random.default_rng(child)
        X = rng.random((n_mc // 20, 2))
        batches.append(np.mean(np.abs(xt.logit(X)) > math.log(99.0)))
    mass = float(np.mean(batches))
    se = float(np.std(batches, ddof=1) / math.sqrt(20))
    out.append(CheckResult("extreme/condition-mass", True,
                           mass >= 1.0 - lam - 3.0 * se, value=mass,
                           threshold=1.0 - lam, se=se))

    X1, y1 = task_b.sample(123, 5000)
    X2, y2 = task_b.sample(123, 5000)
    out.append(CheckResult("generator/sampler-deterministic", True,
                           np.array_equal(X1, X2) and np.array_equal(y1, y2)))
    return out


# ---------------------------------------------------------------------------
# surrogate-loss inequality suites


def _logistic_value(z):
    return np.logaddexp(0.0, -np.asarray(z, dtype=float))


def _conditional_sq_gap(kind_values, f, fstar, eta):
    """E[(phi(Yf) - phi(Yf*))^2 | X] without sampling labels."""
    plus = (kind_values(f) - kind_values(fstar)) ** 2
    minus = (kind_values(-f) - kind_values(-fstar)) ** 2
    return eta * plus + (1.0 - eta) * minus


def inequality_suite(cfg: HarnessConfig, seed: int = 77) -> List[CheckResult]:
    from .polynomials import Polynomial
    from .tasks import make_smooth_boundary_task

    out = []
    rng = np.random.default_rng(seed)
    n_nets = cfg.verify.n_random_nets
    n_mc = cfg.verify.mc_points
    n_batches = 20
    g = Polynomial(1, {(0,): 0.45, (1,): 0.2})
    tasks = [
        make_smooth_boundary_task(2, 1.0, 1.0, g, noise_width=0.25),
        make_smooth_boundary_task(2, 1.0, 2.0, g, noise_width=0.2),
    ]

    for task in tasks:
        nets = [clamp_output(_random_net(rng, task.d, 1, 2, 8, scale=2.0), 1.0)
                for _ in range(n_nets)]
        zhang_ok = True
        var_ok = True
        worst_gap = -math.inf
        worst_var = -math.inf
        params_F1 = hinge_variance_params(task.nominal_q, 1.0,
                                          task.hinge_variance_constant)
        for i, net in enumerate(nets):
            rows01, rowsH, rowsV = [], [], []
            for child in np.random.SeedSequence((seed, i)).spawn(n_batches):
                b_rng = np.random.default_rng(child)
                X = b_rng.random((n_mc // n_batches, task.d))
                f = net(X)[:, 0]
                eta = task.eta(X)
                cb = task.bayes(X)
                w = np.abs(2.0 * eta - 1.0)
                pred = np.where(f > 0.0, 1.0, -1.0)
                rows01.append(np.mean(w * (pred != cb)))
                rowsH.append(np.mean(np.abs(f - cb) * w))
                rowsV.append(np.mean(_conditional_sq_gap(
                    lambda z: np.maximum(1.0 - z, 0.0), f, cb, eta)))
            e01 = float(np.mean(rows01))
            eH = float(np.mean(rowsH))
            se01 = float(np.std(rows01, ddof=1) / math.sqrt(n_batches))
            seH = float(np.std(rowsH, ddof=1) / math.sqrt(n_batches))
            zhang_ok &= e01 <= eH + 3.0 * math.hypot(se01, seH)
            worst_gap = max(worst_gap, e01 - eH)
            lhs = float(np.mean(rowsV))
            se_lhs = float(np.std(rowsV, ddof=1) / math.sqrt(n_batches))
            rhs_rows = [variance_bound_rhs(params_F1, max(v, 0.0)) for v in rowsH]
            rhs = variance_bound_rhs(params_F1, eH)
            se_rhs = float(np.std(rhs_rows, ddof=1) / math.sqrt(n_batches))
            var_ok &= lhs <= rhs + 3.0 * math.hypot(se_lhs, se_rhs)
            worst_var = max(worst_var, lhs - rhs)
        out.append(CheckResult(f"zhang/pointwise-domination/{task.name}", True,
                               zhang_ok, value=worst_gap, threshold=0.0,
                               details=f"{n_nets} random clamped networks"))
        out.append(CheckResult(
            f"variance/hinge-bound/{task.name}", True, var_ok, value=worst_var,
            threshold=0.0,
            details=f"C_noise={task.hinge_variance_constant:g}, {n_nets} networks"))

    # logistic variance bound: fitted constant, reported
    task = make_extreme_eta_task(2, math.log(99.0), 0.05)
    F = 6.0
    fitted = 0.0
    for i in range(n_nets // 2):
        net = clamp_output(_random_net(rng, 2, 1, 2, 8, scale=3.0), F)
        rng_mc = np.random.default_rng((seed, 999, i))
        X = rng_mc.random((n_mc, 2))
        f = net(X)[:, 0]
        eta = task.eta(X)
        fstar = task.logit(X)
        lhs = float(np.mean(_conditional_sq_gap(_logistic_value, f, fstar, eta)))
        egap = float(np.mean(eta * (_logistic_value(f) - _logistic_value(fstar))
                     + (1.0 - eta) * (_logistic_value(-f) - _logistic_value(-fstar))))
        if egap > 1e-9:
            fitted = max(fitted, lhs / (F * egap))
    out.append(CheckResult("variance/logistic-fitted-C", False, fitted <= 4.0,
                           value=fitted, threshold=4.0,
                           details="LHS / (F * excess) across random networks"))

    # risk bounds at the log-odds optimum and at the scaled Bayes classifier
    f_tilde = math.log(99.0)
    lam = math.exp(-f_tilde)
    taskE = make_extreme_eta_task(2, f_tilde, lam)
    rng_mc = np.random.default_rng(4242)
    X = rng_mc.random((n_mc, 2))
    eta = taskE.eta(X)
    fstar = taskE.logit(X)
    risk_star = float(np.mean(eta * _logistic_value(fstar)
                              + (1.0 - eta) * _logistic_value(-fstar)))
    fbar = f_tilde * taskE.bayes(X)
    risk_bar = float(np.mean(eta * _logistic_value(fbar)
                             + (1.0 - eta) * _logistic_value(-fbar)))
    scale = logistic_risk_bound_rhs(f_tilde)
    c1, c2 = risk_star / scale, risk_bar / scale
    out.append(CheckResult("cebound/fitted-constants", False,
                           c1 <= 20.0 and c2 <= 20.0, value=max(c1, c2),
                           threshold=20.0,
                           details=f"C1={c1:.3f}, C2={c2:.3f} at F~={f_tilde:.3f}"))
    return out


# ---------------------------------------------------------------------------
# gradient correctness


def gradient_suite(n_probes: int = 1000, seed: int = 31337) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    h = 1e-6
    while checked < n_probes:
        kind = HINGE if rng.random() < 0.5 else LOGISTIC
        net = _random_net(rng, int(rng.integers(1, 4)), 1,
                          int(rng.integers(1, 4)), int(rng.integers(2, 7)),
                          density=1.0)
        X = rng.uniform(0.0, 1.0, (1, net.input_dim))
        y = np.array([1.0 if rng.random() < 0.5 else -1.0])
        # skip probes near ReLU or hinge kinks
        near_kink = False
        hcur = X
        for l in range(net.depth):
            z = hcur @ net.weights[l].T + net.biases[l]
            if np.any(np.abs(z) < 1e-6):
                near_kink = True
            hcur = np.maximum(z, 0.0)
        f = float((hcur @ net.weights[-1].T + net.biases[-1])[0, 0])
        if kind == HINGE and abs(y[0] * f - 1.0) < 1e-6:
            near_kink = True
        if near_kink:
            continue
        _, gws, gbs = loss_gradients(net, X, y, kind)
        dirs_w = [rng.normal(size=w.shape) for w in net.weights]
        dirs_b = [rng.normal(size=b.shape) for b in net.biases]
        nrm = math.sqrt(sum(float(np.sum(d * d)) for d in dirs_w)
                        + sum(float(np.sum(d * d)) for d in dirs_b))
        dirs_w = [d / nrm for d in dirs_w]
        dirs_b = [d / nrm for d in dirs_b]
        ana = sum(float(np.sum(g * d)) for g, d in zip(gws, dirs_w)) \
            + sum(float(np.sum(g * d)) for g, d in zip(gbs, dirs_b))

        def shifted(sign):
            layers = [(W + sign * h * dw, b + sign * h * db)
                      for W, b, dw, db in zip(net.weights, net.biases,
                                              dirs_w, dirs_b)]
            return empirical_phi_risk(ReluNetwork(layers), (X, y), kind)

        num = (shifted(+1.0) - shifted(-1.0)) / (2.0 * h)
        worst = max(worst, abs(num - ana) / (1.0 + abs(ana)))
        checked += 1
    return [CheckResult("gradient/directional-fd", True, worst <= 1e-5,
                        value=worst, threshold=1e-5,
                        details=f"{n_probes} probes away from kinks")]


# ---------------------------------------------------------------------------
# training contracts (fast smoke-level checks; the heavy runs live in the
# study commands)


def training_suite(seed: int = 21) -> List[CheckResult]:
    from .network import check_budget

    out = []
    rng = np.random.default_rng(seed)
    X = rng.random((400, 1))
    y = np.where(X[:, 0] > 0.5, 1.0, -1.0)
    keep = np.abs(X[:, 0] - 0.5) > 0.25
    X, y = X[keep], y[keep]
    budget = ArchBudget(max_depth=4, max_width=8, max_nnz=60, max_abs=8.0,
                        max_sup=1.0)
    cfg = TrainConfig(budget=budget, epochs=120, lr=0.3, minibatch=32,
                      prune_every=40, seed=3)
    trace: list = []
    net = erm_train((X, y), HINGE, cfg, trace=trace)
    pred = np.where(net(X)[:, 0] > 0.0, 1.0, -1.0)
    out.append(CheckResult("train/separable-zero-error", True,
                           float(np.mean(pred != y)) == 0.0,
                           value=float(np.mean(pred != y))))
    out.append(CheckResult("train/budget-conformance", True,
                           check_budget(net, budget)))
    out.append(CheckResult("train/loss-contract", True,
                           empirical_phi_risk(net, (X, y), HINGE)
                           <= trace[0][1] + 1e-9,
                           value=empirical_phi_risk(net, (X, y), HINGE),
                           threshold=trace[0][1]))
    net2 = erm_train((X, y), HINGE, cfg)
    same = all(np.array_equal(a, b) for a, b in zip(net.weights, net2.weights)) \
        and all(np.array_equal(a, b) for a, b in zip(net.biases, net2.biases))
    out.append(CheckResult("train/deterministic", True, same))

    zero_budget = ArchBudget(max_depth=3, max_width=4, max_nnz=0, max_abs=1.0,
                             max_sup=1.0)
    znet = erm_train((X, y), HINGE, TrainConfig(budget=zero_budget, epochs=5))
    zrisk = empirical_phi_risk(znet, (X, y), HINGE)
    out.append(CheckResult("train/zero-budget", True,
                           stats(znet).nnz == 0 and zrisk == 1.0, value=zrisk,
                           threshold=1.0))
    return out


SUITES = {
    "composition": lambda cfg: composition_suite(),
    "approximators": lambda cfg: approx_suite(),
    "exactness": exactness_suite,
    "theory": lambda cfg: theory_suite(),
    "generators": generator_suite,
    "inequalities": inequality_suite,
    "gradients": lambda cfg: gradient_suite(cfg.verify.gradient_probes),
    "training": lambda cfg: training_suite(),
}


def run_all(cfg: HarnessConfig, only: Optional[List[str]] = None) -> List[CheckResult]:
    rows: List[CheckResult] = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        rows.extend(fn(cfg))
    return rows
