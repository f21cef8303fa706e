"""Synthetic binary classification tasks with oracle class probabilities,
Bayes classifiers, boundary-distance oracles and tunable noise/margin
exponents, plus Monte Carlo risk functionals.

Conventions: inputs live on the unit cube, labels are +-1 drawn as +1 with
probability eta(x), and classifier ties break to -1 (sign(0) = -1).  All
samplers are deterministic given their seed, and batched Monte Carlo
estimates use a fixed batch-to-stream assignment so results do not depend
on execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ContractError, EstimationError, InputError
from .network import ReluNetwork
from .polynomials import Polynomial

LOGIT_CLAMP = 40.0


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


class SyntheticTask:
    """A joint distribution on (X, Y) with full oracle access.

    Built by the ``make_*`` factories below; carries the conditional class
    probability, the Bayes classifier, a Euclidean distance-to-boundary
    oracle, nominal exponents and a cached high-precision Bayes risk.
    """

    def __init__(self, name, kind, d, eta_fn, bayes_fn, distance_fn, sample_x_fn,
                 bayes_risk_fn, nominal_q, nominal_gamma, nominal_smoothness,
                 hinge_variance_constant=None, logit_fn=None, meta=None):
        self.name = name
        self.kind = kind
        self.d = d
        self._eta = eta_fn
        self._bayes = bayes_fn
        self._distance = distance_fn
        self._sample_x = sample_x_fn
        self._bayes_risk_fn = bayes_risk_fn
        self._bayes_risk: Optional[float] = None
        self.nominal_q = nominal_q
        self.nominal_gamma = nominal_gamma
        self.nominal_smoothness = nominal_smoothness
        self.hinge_variance_constant = hinge_variance_constant
        self._logit = logit_fn
        self.meta = dict(meta or {})

    def eta(self, X) -> np.ndarray:
        return self._eta(np.atleast_2d(np.asarray(X, dtype=float)))

    def bayes(self, X) -> np.ndarray:
        return self._bayes(np.atleast_2d(np.asarray(X, dtype=float)))

    def boundary_distance(self, X) -> np.ndarray:
        return self._distance(np.atleast_2d(np.asarray(X, dtype=float)))

    def logit(self, X) -> np.ndarray:
        """Log odds of eta, clamped to +-LOGIT_CLAMP where eta hits 0 or 1."""
        if self._logit is not None:
            return self._logit(np.atleast_2d(np.asarray(X, dtype=float)))
        e = np.clip(self.eta(X), _sigmoid(-LOGIT_CLAMP), _sigmoid(LOGIT_CLAMP))
        return np.log(e / (1.0 - e))

    @property
    def bayes_risk(self) -> float:
        if self._bayes_risk is None:
            self._bayes_risk = float(self._bayes_risk_fn())
        return self._bayes_risk

    def sample_x(self, seed, n: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self._sample_x(rng, n)

    def sample(self, seed, n: int):
        """Draw n labelled points; the label stream follows the X stream on
        the same generator, so (X, y) is reproducible from the seed alone."""
        rng = np.random.default_rng(seed)
        X = self._sample_x(rng, n)
        u = rng.random(n)
        y = np.where(u < self._eta(X), 1.0, -1.0)
        return X, y

    def mc_bayes_risk(self, seed, n: int = 10 ** 6, n_batches: int = 20):
        """Label-based Monte Carlo estimate of the Bayes risk, with SE."""
        means = []
        for child in np.random.SeedSequence(seed).spawn(n_batches):
            rng = np.random.default_rng(child)
            X = self._sample_x(rng, n // n_batches)
            u = rng.random(X.shape[0])
            y = np.where(u < self._eta(X), 1.0, -1.0)
            means.append(np.mean(y != self._bayes(X)))
        means = np.array(means)
        return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))

    def __repr__(self):
        return f"SyntheticTask({self.name!r}, kind={self.kind!r}, d={self.d})"


def _uniform_sampler(d):
    def sample(rng, n):
        return rng.random((n, d))
    return sample


def _affine_distance_fn(g: Polynomial):
    const, slopes = g.affine_parts()
    nrm = math.sqrt(1.0 + float(slopes @ slopes))

    def dist(X):
        delta = X[:, 0] - const - X[:, 1:] @ slopes
        return np.abs(delta) / nrm
    return dist


def boundary_projection_distance(g: Polynomial, X, restarts: int = 10,
                                 iters: int = 300, tol: float = 1e-10,
                                 seed: int = 0) -> np.ndarray:
    """Distance from rows of X to the graph {x1 = g(x_rest)} by projected
    gradient descent on the squared distance over the cube, with random
    restarts.  Intended for boundaries where the projection is
    well-conditioned; used by the distance oracles of non-affine tasks."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x1 = X[:, 0]
    rest = X[:, 1:]
    k = rest.shape[1]
    rng = np.random.default_rng(seed)
    grad_sup = math.sqrt(sum(g.partial(i).coeff_abs_sum() ** 2 for i in range(k)))
    lr = 0.25 / (1.0 + grad_sup ** 2)
    best = None
    for r in range(restarts):
        v = rest.copy() if r == 0 else rng.random(rest.shape)
        for _ in range(iters):
            gv = g(v)
            grad = -2.0 * (x1 - gv)[:, None] * g.gradient(v) + 2.0 * (v - rest)
            vn = np.clip(v - lr * grad, 0.0, 1.0)
            move = np.max(np.abs(vn - v)) if v.size else 0.0
            v = vn
            if move < tol:
                break
        dist = np.sqrt((x1 - g(v)) ** 2 + np.sum((rest - v) ** 2, axis=1))
        best = dist if best is None else np.minimum(best, dist)
    return best


def _make_distance_fn(g: Polynomial):
    if g.is_affine():
        return _affine_distance_fn(g)
    return lambda X: boundary_projection_distance(g, X)


def _noise_profile(q: float, w: float):
    """|2 eta - 1| as a function of the signed boundary margin: the tail mass
    of points with |2 eta - 1| <= t scales like t^q under a uniform input
    law."""
    if math.isinf(q):
        def eta(delta):
            return 0.5 + 0.5 * np.sign(delta)
    else:
        inv_q = 1.0 / q

        def eta(delta):
            mag = np.minimum(1.0, np.abs(delta) / w) ** inv_q
            return 0.5 + 0.5 * np.sign(delta) * mag
    return eta


def _boundary_bayes_risk(g: Polynomial, w: float, q: float, d: int) -> float:
    """E[min(eta, 1-eta)] for the margin-profile tasks: the inner integral
    over x1 has a closed form; the outer integral over the remaining
    coordinates uses tensor Gauss-Legendre nodes (Monte Carlo beyond d=3)."""
    if math.isinf(q):
        return 0.0
    p = 1.0 / q
    cap = w / (2.0 * (q + 1.0))  # integral of r over a full half-tube

    def r_integral(u):
        # signed primitive of r(t) = (1 - min(1, |t|/w)^(1/q)) / 2
        u = np.asarray(u, dtype=float)
        a = np.minimum(np.abs(u), w)
        inner = a / 2.0 - w * (a / w) ** (p + 1.0) / (2.0 * (p + 1.0))
        return np.sign(u) * np.where(np.abs(u) <= w, inner, cap)

    if d == 2:
        nodes, weights = np.polynomial.legendre.leggauss(400)
        U = (nodes[:, None] + 1.0) / 2.0
        wts = weights / 2.0
    elif d == 3:
        nodes, weights = np.polynomial.legendre.leggauss(120)
        u = (nodes + 1.0) / 2.0
        wt = weights / 2.0
        U = np.stack([m.ravel() for m in np.meshgrid(u, u, indexing="ij")], axis=1)
        wts = np.outer(wt, wt).ravel()
    else:
        rng = np.random.default_rng(90210)
        U = rng.random((2 * 10 ** 6, d - 1))
        wts = np.full(U.shape[0], 1.0 / U.shape[0])
    c = g(U)
    inner = r_integral(1.0 - c) + r_integral(c)
    return float(np.sum(wts * inner))


def _hinge_variance_constant(q: float, w: float) -> float:
    """Upper bound on the noise constant of the hinge variance inequality
    for the margin-profile tasks: the weak-norm term is at most max(1, 2w)."""
    if math.isinf(q):
        return 3.0  # |2 eta - 1| = 1 almost surely
    return max(1.0, 2.0 * w) + 2.0


def make_smooth_boundary_task(d: int, alpha: float, q: float,
                              boundary: Polynomial, noise_width: float,
                              name: Optional[str] = None) -> SyntheticTask:
    """Uniform inputs on the cube; the Bayes classifier is +1 above the
    graph x1 = boundary(x_rest); |2 eta - 1| ramps like (|margin|/w)^(1/q),
    so the noise-exponent tail P(|2 eta - 1| <= t) scales as t^q."""
    if d < 2:
        raise InputError("d must be >= 2")
    if boundary.nvars != d - 1:
        raise InputError(f"boundary must have {d - 1} variables")
    if noise_width <= 0:
        raise InputError("noise_width must be positive")
    if not q > 0:
        raise InputError("q must lie in (0, inf]")
    profile = _noise_profile(q, noise_width)

    def delta(X):
        return X[:, 0] - boundary(X[:, 1:])

    def eta(X):
        return profile(delta(X))

    def bayes(X):
        return np.where(delta(X) > 0.0, 1.0, -1.0)

    return SyntheticTask(
        name=name or f"boundary-d{d}-q{q:g}",
        kind="smooth_boundary",
        d=d,
        eta_fn=eta,
        bayes_fn=bayes,
        distance_fn=_make_distance_fn(boundary),
        sample_x_fn=_uniform_sampler(d),
        bayes_risk_fn=lambda: _boundary_bayes_risk(boundary, noise_width, q, d),
        nominal_q=q,
        nominal_gamma=1.0,
        nominal_smoothness=alpha,
        hinge_variance_constant=_hinge_variance_constant(q, noise_width),
        meta={"noise_width": noise_width, "boundary": boundary.to_term_list()},
    )


_ETA_GRID = 64


def make_smooth_eta_task(d: int, beta: float, q: float, eta_poly: Polynomial,
                         name: Optional[str] = None) -> SyntheticTask:
    """Uniform inputs with a smooth polynomial class probability.

    The polynomial must stay inside [0, 1] on the cube (checked on a grid);
    values are clipped only to absorb rounding.
    """
    if d < 2:
        raise InputError("d must be >= 2")
    if eta_poly.nvars != d:
        raise InputError(f"eta polynomial must have {d} variables")
    rng = np.random.default_rng(411)
    if d <= 3:
        gaxis = np.linspace(0.0, 1.0, _ETA_GRID)
        mesh = np.meshgrid(*([gaxis] * d), indexing="ij")
        G = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        G = rng.random((200_000, d))
    vals = eta_poly(G)
    if vals.min() < -1e-9 or vals.max() > 1.0 + 1e-9:
        raise InputError(
            f"eta polynomial leaves [0,1] (range [{vals.min():.4g}, {vals.max():.4g}])"
        )
    # midpoint-rule quadrature nodes (the Bayes-risk integrand has a kink at
    # eta = 1/2, so avoid endpoint bias)
    if d == 2:
        per_axis = 1024
    elif d == 3:
        per_axis = 101
    else:
        per_axis = 0
    if per_axis:
        mid = (np.arange(per_axis) + 0.5) / per_axis
        mesh = np.meshgrid(*([mid] * d), indexing="ij")
        Q = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        Q = rng.random((2_000_000, d))

    def eta(X):
        return np.clip(eta_poly(X), 0.0, 1.0)

    def bayes(X):
        return np.where(eta_poly(X) > 0.5, 1.0, -1.0)

    if eta_poly.is_affine():
        const, slopes = eta_poly.affine_parts()
        nrm = math.sqrt(float(slopes @ slopes))
        if nrm == 0.0:
            def distance(X):
                return np.full(X.shape[0], np.inf)
        else:
            def distance(X):
                return np.abs(eta_poly(X) - 0.5) / nrm
    else:
        def distance(X):
            return _level_set_distance(eta_poly, X)

    def bayes_risk():
        v = np.clip(eta_poly(Q), 0.0, 1.0)
        return float(np.mean(np.minimum(v, 1.0 - v)))

    task = SyntheticTask(
        name=name or f"smooth-eta-d{d}",
        kind="smooth_eta",
        d=d,
        eta_fn=eta,
        bayes_fn=bayes,
        distance_fn=distance,
        sample_x_fn=_uniform_sampler(d),
        bayes_risk_fn=bayes_risk,
        nominal_q=q,
        nominal_gamma=1.0,
        nominal_smoothness=beta,
        meta={"eta_poly": eta_poly.to_term_list()},
    )
    return task


def _level_set_distance(poly: Polynomial, X, restarts: int = 10,
                        iters: int = 400, seed: int = 0) -> np.ndarray:
    """Distance to {poly = 1/2} by penalized projected descent with random
    restarts; for well-conditioned level sets only."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = np.random.default_rng(seed)
    best = None
    for r in range(restarts):
        Z = X.copy() if r == 0 else rng.random(X.shape)
        rho = 100.0
        for it in range(iters):
            resid = poly(Z) - 0.5
            grad = 2.0 * (Z - X) + 2.0 * rho * resid[:, None] * poly.gradient(Z)
            Z = np.clip(Z - 0.02 * grad / (1.0 + rho * 0.05), 0.0, 1.0)
            if it % 50 == 49:
                rho *= 4.0
        dist = np.sqrt(np.sum((Z - X) ** 2, axis=1))
        dist = np.where(np.abs(poly(Z) - 0.5) < 1e-4, dist, np.inf)
        best = dist if best is None else np.minimum(best, dist)
    return best


def make_margin_task(d: int, alpha: float, gamma: float, boundary: Polynomial,
                     eps0: float, noise_q: float = math.inf,
                     noise_width: float = 0.25,
                     name: Optional[str] = None) -> SyntheticTask:
    """Inputs thinned near the decision boundary so that the mass within
    distance eps scales like eps^gamma.

    Sampling is by rejection with acceptance min(1, (dist/eps0)^(gamma-1));
    an infinite margin exponent excludes a hard tube of radius eps0.  Labels
    are noiseless by default (|2 eta - 1| = 1) or follow the noise profile.
    """
    if d < 2:
        raise InputError("d must be >= 2")
    if boundary.nvars != d - 1:
        raise InputError(f"boundary must have {d - 1} variables")
    if not gamma >= 1:
        raise InputError("gamma must lie in [1, inf]")
    if not 0 < eps0 < 0.5:
        raise InputError("eps0 must lie in (0, 0.5)")
    distance = _make_distance_fn(boundary)
    profile = _noise_profile(noise_q, noise_width)

    def delta(X):
        return X[:, 0] - boundary(X[:, 1:])

    def eta(X):
        return profile(delta(X))

    def bayes(X):
        return np.where(delta(X) > 0.0, 1.0, -1.0)

    def sample_x(rng, n):
        out = []
        have = 0
        proposed = 0
        accepted = 0
        while have < n:
            m = max(2 * (n - have), 1024)
            X = rng.random((m, d))
            dist = distance(X)
            if math.isinf(gamma):
                keep = dist > eps0
            elif gamma == 1.0:
                keep = np.ones(m, dtype=bool)
            else:
                acc = np.minimum(1.0, (dist / eps0) ** (gamma - 1.0))
                keep = rng.random(m) < acc
            proposed += m
            accepted += int(keep.sum())
            if proposed >= 50_000 and accepted < 0.01 * proposed:
                raise ConfigurationError(
                    f"rejection acceptance rate {accepted / proposed:.2%} below 1%"
                )
            X = X[keep]
            out.append(X)
            have += X.shape[0]
        return np.concatenate(out, axis=0)[:n]

    def bayes_risk():
        if math.isinf(noise_q):
            return 0.0
        rng = np.random.default_rng(271828)
        X = sample_x(rng, 2 * 10 ** 6)
        e = eta(X)
        return float(np.mean(np.minimum(e, 1.0 - e)))

    return SyntheticTask(
        name=name or f"margin-d{d}-g{gamma:g}",
        kind="margin",
        d=d,
        eta_fn=eta,
        bayes_fn=bayes,
        distance_fn=distance,
        sample_x_fn=sample_x,
        bayes_risk_fn=bayes_risk,
        nominal_q=noise_q,
        nominal_gamma=gamma,
        nominal_smoothness=alpha,
        hinge_variance_constant=3.0 if math.isinf(noise_q) else None,
        meta={"eps0": eps0, "boundary": boundary.to_term_list()},
    )


MID_LOGIT = 0.1


def make_extreme_eta_task(d: int, f_tilde: float, lam: float,
                          name: Optional[str] = None) -> SyntheticTask:
    """Near-deterministic labels: on mass 1 - lam the log odds exceed
    ``f_tilde`` in absolute value; on the remaining band (width lam around
    the midplane x1 = 1/2) eta stays near 1/2."""
    if f_tilde <= 0:
        raise InputError("f_tilde must be positive")
    if not 0 <= lam < 1:
        raise InputError("lam must lie in [0, 1)")
    strong = f_tilde * (1.0 + 1e-6)  # strictly above the threshold

    def signed(X):
        return X[:, 0] - 0.5

    def logit(X):
        s = np.sign(signed(X))
        mid = np.abs(signed(X)) <= lam / 2.0
        return np.where(mid, s * MID_LOGIT, s * strong)

    def eta(X):
        return _sigmoid(logit(X))

    def bayes(X):
        return np.where(signed(X) > 0.0, 1.0, -1.0)

    def distance(X):
        return np.abs(signed(X))

    eta_strong = _sigmoid(-strong)
    eta_mid = _sigmoid(-MID_LOGIT)
    risk = (1.0 - lam) * eta_strong + lam * eta_mid
    min_margin = 2.0 * (_sigmoid(strong) if lam == 0 else _sigmoid(MID_LOGIT)) - 1.0

    return SyntheticTask(
        name=name or f"extreme-d{d}",
        kind="extreme_eta",
        d=d,
        eta_fn=eta,
        bayes_fn=bayes,
        distance_fn=distance,
        sample_x_fn=_uniform_sampler(d),
        bayes_risk_fn=lambda: risk,
        nominal_q=math.inf,
        nominal_gamma=1.0,
        nominal_smoothness=math.inf,
        hinge_variance_constant=1.0 / min_margin + 2.0,
        logit_fn=logit,
        meta={
            "f_tilde": f_tilde,
            "lambda": lam,
            "extreme_mass": 1.0 - lam,
            "eta_extreme": float(_sigmoid(strong)),
        },
    )


@dataclass(frozen=True)
class RiskReport:
    """Monte Carlo excess-risk estimates with batch standard errors."""

    excess_01: float
    se_01: float
    excess_hinge: float
    se_hinge: float
    n_mc: int
    hinge_method: str = "identity"


def excess_risk(task: SyntheticTask, net: ReluNetwork, n_mc: int = 200_000,
                seed: int = 0, n_batches: int = 20) -> RiskReport:
    """Estimate the 0-1 and hinge excess risks of a scalar-output network.

    Both estimates are label-free: the 0-1 excess integrates
    |2 eta - 1| over the disagreement region with the Bayes classifier, and
    the hinge excess integrates |f - bayes| |2 eta - 1| (valid for
    ||f||_inf <= 1; when the sampled sup exceeds 1 the estimator falls back
    to a labelled surrogate-risk difference).
    """
    if n_mc < 10 ** 4:
        raise InputError("n_mc must be at least 10^4")
    if net.output_dim != 1:
        raise InputError("excess_risk requires a scalar-output network")
    bsize = n_mc // n_batches
    rows_01 = []
    batches = []
    sup = 0.0
    for child in np.random.SeedSequence(seed).spawn(n_batches):
        rng = np.random.default_rng(child)
        X = task._sample_x(rng, bsize)
        u = rng.random(bsize)  # label stream, used only by the fallback
        f = net(X)[:, 0]
        e = task._eta(X)
        cb = task._bayes(X)
        sup = max(sup, float(np.max(np.abs(f))) if f.size else 0.0)
        margin_weight = np.abs(2.0 * e - 1.0)
        pred = np.where(f > 0.0, 1.0, -1.0)
        rows_01.append(np.mean(margin_weight * (pred != cb)))
        batches.append((f, e, cb, u))
    rows_01 = np.array(rows_01)

    if sup <= 1.0 + 1e-9:
        method = "identity"
        rows_h = np.array([
            np.mean(np.abs(f - cb) * np.abs(2.0 * e - 1.0))
            for f, e, cb, _ in batches
        ])
    else:
        method = "labelled-fallback"
        rows_h = []
        for f, e, cb, u in batches:
            y = np.where(u < e, 1.0, -1.0)
            rows_h.append(np.mean(np.maximum(1.0 - y * f, 0.0)
                                  - np.maximum(1.0 - y * cb, 0.0)))
        rows_h = np.array(rows_h)

    rt = math.sqrt(n_batches)
    return RiskReport(
        excess_01=float(rows_01.mean()),
        se_01=float(rows_01.std(ddof=1) / rt),
        excess_hinge=float(rows_h.mean()),
        se_hinge=float(rows_h.std(ddof=1) / rt),
        n_mc=bsize * n_batches,
        hinge_method=method,
    )


@dataclass(frozen=True)
class ExponentEstimate:
    slope: float
    stderr: float
    note: Optional[str] = None


def estimate_exponent(task: SyntheticTask, which: str, grid=None,
                      n_mc: int = 10 ** 6, seed: int = 0) -> ExponentEstimate:
    """Least-squares slope of log tail probability against log threshold.

    ``which`` selects the noise tail P(|2 eta - 1| <= t) or the margin tail
    P(dist <= eps).  Empty tail cells trigger one widened retry, then an
    EstimationError.  A hard-margin task reports a sentinel, not a slope.
    """
    if which not in ("noise_q", "margin_gamma"):
        raise InputError("which must be 'noise_q' or 'margin_gamma'")
    rng = np.random.default_rng(seed)
    X = task._sample_x(rng, n_mc)
    if which == "noise_q":
        stat = np.abs(2.0 * task._eta(X) - 1.0)
        default = np.geomspace(0.08, 0.8, 6)
    else:
        stat = task._distance(X)
        eps0 = task.meta.get("eps0", 0.25)
        if math.isinf(task.nominal_gamma):
            frac = float(np.mean(stat <= eps0))
            return ExponentEstimate(math.nan, math.nan,
                                    note=f"no mass below eps0 (observed {frac:.2g})")
        default = np.geomspace(0.1, 1.0, 6) * eps0
    grid = np.asarray(default if grid is None else grid, dtype=float)
    if grid.size < 5:
        raise InputError("need at least 5 thresholds")

    for attempt, g in enumerate((grid, np.clip(grid * 2.0, None, 1.0))):
        tail = np.array([np.mean(stat <= t) for t in g])
        if np.all(tail > 0):
            lx = np.log(g)
            ly = np.log(tail)
            A = np.stack([lx, np.ones_like(lx)], axis=1)
            coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
            slope = float(coef[0])
            dof = len(g) - 2
            rss = float(res[0]) if res.size else float(np.sum((ly - A @ coef) ** 2))
            var = rss / max(dof, 1) / float(np.sum((lx - lx.mean()) ** 2))
            return ExponentEstimate(slope, math.sqrt(var))
    raise EstimationError("tail cells stayed empty after widening the grid")


def zhang_gap(task: SyntheticTask, net: ReluNetwork, n_mc: int = 100_000,
              seed: int = 0) -> RiskReport:
    """Convenience wrapper: the two excess risks on a shared sample stream
    (the 0-1 excess never exceeds the hinge excess pointwise when
    ||f||_inf <= 1)."""
    report = excess_risk(task, net, n_mc=n_mc, seed=seed)
    if report.hinge_method != "identity":
        raise ContractError("network sup norm exceeds 1; clamp before comparing")
    return report
