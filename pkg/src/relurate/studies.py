"""Study drivers behind the CLI: excess-risk rate measurements against the
theoretical exponents, hinge-versus-logistic comparisons, estimated
class-probability histograms, and schedule tables.

Output discipline: CSV bodies are byte-reproducible from (config, seed) --
wall-clock timings go to the JSON run manifest, never into a CSV.  Study
cells are independent; failures are recorded per row and never abort a run.
"""
from __future__ import annotations

import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import SCHEMA_VERSION, HarnessConfig, TaskDecl
from .constructions import ClassifierSpec, HorizonSpec, PieceSpec, build_piecewise_classifier
from .errors import InputError, RelurateError
from .network import ArchBudget, check_budget, stats
from .polynomials import Polynomial
from .rates import RateSpec, Schedule, architecture_schedule, rate_exponent
from .tasks import SyntheticTask, excess_risk
from .training import HINGE, LOGISTIC, TrainConfig, erm_train


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, kind: str, header: Sequence[str], rows) -> None:
    lines = [f"# schema={SCHEMA_VERSION}/{kind}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_manifest(out_dir: Path, command: str, cfg: HarnessConfig,
                   extras: Optional[dict] = None) -> Path:
    manifest = {
        "command": command,
        "schema": SCHEMA_VERSION,
        "config_hash": cfg.content_hash(),
        "seed": cfg.seed,
        "versions": {
            "relurate": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernel_backend": BACKEND,
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    manifest.update(extras or {})
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def spec_for_task(decl: TaskDecl) -> RateSpec:
    if decl.case == "smooth_boundary":
        return RateSpec("smooth_boundary", d=decl.d, alpha=decl.alpha, q=decl.q)
    if decl.case == "smooth_eta":
        return RateSpec("smooth_eta", d=decl.d, beta=decl.beta, q=decl.q)
    if decl.case == "margin":
        return RateSpec("margin", d=decl.d, alpha=decl.alpha, q=decl.q,
                        gamma=decl.gamma)
    if decl.case == "extreme_eta":
        return RateSpec("cross_entropy", d=decl.d, alpha=decl.alpha,
                        gamma=decl.gamma)
    raise InputError(f"no rate regime for task case {decl.case!r}")


def effective_budget(sched: Schedule, rs, spec: RateSpec) -> tuple:
    """Scale and cap the theoretical schedule into a trainable budget.

    Proportionality constants are free in the growth rules, so fixed scale
    factors and desk-scale ceilings/floors preserve the exponents; any
    adjustment is recorded in the returned flags.  Width and sparsity are
    rescaled from the raw growth laws (before integer ceilings) so that
    consecutive sample sizes get strictly growing budgets.
    """
    flags = []
    L = sched.L_n
    if L < rs.min_depth:
        L = rs.min_depth
        flags.append("depth-floored")
    if spec.case == "smooth_eta":
        width_pow = spec.d / spec.beta
    else:
        width_pow = (spec.d - 1) / spec.alpha
    n_raw = sched.xi_n ** -width_pow
    s_raw = n_raw * max(math.log(1.0 / sched.xi_n), 0.1)
    N = int(math.ceil(n_raw * rs.scale_width))
    S = int(math.ceil(s_raw * rs.scale_nnz))
    if rs.scale_width != 1 or rs.scale_nnz != 1:
        flags.append("scaled")
    if N > rs.width_ceiling:
        N = rs.width_ceiling
        flags.append("width-capped")
    if S > rs.nnz_ceiling:
        S = rs.nnz_ceiling
        flags.append("nnz-capped")
    B = float(sched.B_n)
    if B < rs.min_abs_bound:
        B = rs.min_abs_bound
        flags.append("abs-floored")
    budget = ArchBudget(max_depth=L, max_width=N, max_nnz=S, max_abs=B,
                        max_sup=sched.F_n)
    return budget, "+".join(flags) if flags else "exact"


RECORD_HEADER = [
    "task", "case", "n", "seed", "loss", "xi", "L", "N", "S", "B", "F",
    "flags", "excess_01", "se_01", "excess_hinge", "se_hinge", "depth",
    "max_width", "nnz", "max_abs", "budget_ok", "error",
]


def _rate_cell(args) -> tuple:
    """One (n, seed) training cell; returns (sort_key, row, wall_seconds)."""
    (decl_dict, rs_dict, n, seed_idx, root_seed, mc_points, mc_batches) = args
    decl = TaskDecl(**decl_dict)
    rs = _RateStudyView(**rs_dict)
    t0 = time.perf_counter()
    key = (decl.name, n, seed_idx)
    try:
        task = decl.build()
        spec = spec_for_task(decl)
        sched = architecture_schedule(spec, n)
        budget, flags = effective_budget(sched, rs, spec)
        train_rng = np.random.default_rng(
            np.random.SeedSequence([root_seed, n, seed_idx, 1]))
        data = task.sample(int(train_rng.integers(2 ** 62)), n)
        cfg = TrainConfig(budget=budget, epochs=min(rs.epochs, rs.epochs_ceiling),
                          lr=rs.lr, minibatch=rs.minibatch,
                          prune_every=rs.prune_every, seed=seed_idx,
                          init_scale=rs.init_scale)
        net = erm_train(data, rs.loss, cfg)
        eval_seed = np.random.SeedSequence([root_seed, n, seed_idx, 2])
        report = excess_risk(task, net, n_mc=mc_points,
                             seed=int(np.random.default_rng(eval_seed).integers(2 ** 62)),
                             n_batches=mc_batches)
        st = stats(net, grid_resolution=33)
        row = [decl.name, decl.case, n, seed_idx, rs.loss,
               sched.xi_n, budget.max_depth, budget.max_width, budget.max_nnz,
               budget.max_abs, budget.max_sup, flags,
               report.excess_01, report.se_01, report.excess_hinge,
               report.se_hinge, st.depth, st.max_width, st.nnz,
               st.max_abs_param, check_budget(net, budget), ""]
    except RelurateError as exc:
        row = [decl.name, decl.case, n, seed_idx, rs.loss,
               math.nan, 0, 0, 0, math.nan, math.nan, "",
               math.nan, math.nan, math.nan, math.nan, 0, 0, 0, math.nan,
               False, type(exc).__name__ + ": " + str(exc)]
    return key, row, time.perf_counter() - t0


@dataclass
class _RateStudyView:
    """Picklable slice of RateStudyConfig used inside worker processes."""

    loss: str
    epochs: int
    lr: float
    minibatch: int
    prune_every: int
    init_scale: float
    scale_width: float
    scale_nnz: float
    min_depth: int
    width_ceiling: int
    nnz_ceiling: int
    epochs_ceiling: int
    min_abs_bound: float


def _study_view(rs) -> dict:
    return dict(loss=rs.loss, epochs=rs.epochs, lr=rs.lr, minibatch=rs.minibatch,
                prune_every=rs.prune_every, init_scale=rs.init_scale,
                scale_width=rs.scale_width, scale_nnz=rs.scale_nnz,
                min_depth=rs.min_depth, width_ceiling=rs.width_ceiling,
                nnz_ceiling=rs.nnz_ceiling, epochs_ceiling=rs.epochs_ceiling,
                min_abs_bound=rs.min_abs_bound)


def _classifier_from_decl(decl: TaskDecl) -> ClassifierSpec:
    g = Polynomial.from_term_list(decl.d - 1, decl.boundary
                                  or [[0.35, [0] * (decl.d - 1)]])
    radius = g.holder_norm_bound(decl.alpha) + 1.0
    hs = HorizonSpec(j=1, g=g, holder_alpha=decl.alpha, holder_radius=radius)
    return ClassifierSpec((PieceSpec((hs,)),))


def run_rate_study(cfg: HarnessConfig, out_dir: Path, jobs: int = 1) -> dict:
    rs = cfg.rate_study
    decl = cfg.tasks[rs.task] if rs.task in cfg.tasks else None
    if decl is None:
        raise InputError(f"rate_study.task {rs.task!r} is not declared")
    out_dir.mkdir(parents=True, exist_ok=True)

    cells = [(asdict(decl), _study_view(rs), n, s, cfg.seed, cfg.mc_points,
              cfg.mc_batches)
             for n in rs.n_grid for s in range(rs.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rate_cell, cells))
    else:
        results = [_rate_cell(c) for c in cells]
    results.sort(key=lambda t: t[0])
    rows = [r for _, r, _ in results]
    timings = {f"{k[0]}/n{k[1]}/s{k[2]}": w for k, _, w in results}

    # deterministic constructive baseline: the built classifier at the
    # schedule gap, one row per n
    if rs.constructive_baseline and decl.case in ("smooth_boundary", "margin"):
        spec = spec_for_task(decl)
        task = decl.build()
        cls = _classifier_from_decl(decl)
        for n in rs.n_grid:
            sched = architecture_schedule(spec, n)
            t0 = time.perf_counter()
            try:
                net = build_piecewise_classifier(cls, sched.xi_n)
                report = excess_risk(
                    task, net, n_mc=cfg.mc_points,
                    seed=int(np.random.default_rng(
                        np.random.SeedSequence([cfg.seed, n, 9000])).integers(2 ** 62)),
                    n_batches=cfg.mc_batches)
                st = stats(net)
                rows.append([decl.name, decl.case, n, 0, "constructive",
                             sched.xi_n, st.depth, st.max_width, st.nnz,
                             st.max_abs_param, 1.0, "built",
                             report.excess_01, report.se_01,
                             report.excess_hinge, report.se_hinge,
                             st.depth, st.max_width, st.nnz, st.max_abs_param,
                             True, ""])
            except RelurateError as exc:
                rows.append([decl.name, decl.case, n, 0, "constructive",
                             sched.xi_n, 0, 0, 0, math.nan, math.nan, "built",
                             math.nan, math.nan, math.nan, math.nan, 0, 0, 0,
                             math.nan, False, type(exc).__name__ + ": " + str(exc)])
            timings[f"{decl.name}/n{n}/constructive"] = time.perf_counter() - t0

    records_path = out_dir / "rate_records.csv"
    write_csv(records_path, "rate-records", RECORD_HEADER, rows)

    fit_rows, median_rows = fit_rates(rows, spec_for_task(decl))
    write_csv(out_dir / "rate_medians.csv", "rate-medians",
              ["task", "loss", "n", "median_excess_01", "n_seeds"], median_rows)
    write_csv(out_dir / "rate_fit.csv", "rate-fit",
              ["task", "loss", "slope", "slope_stderr", "theory_exponent",
               "gap", "n_points"], fit_rows)
    write_manifest(out_dir, "rate-study", cfg, {"cell_seconds": timings,
                                                "jobs": jobs})
    return {"records": records_path, "fit": out_dir / "rate_fit.csv",
            "medians": out_dir / "rate_medians.csv", "rows": rows,
            "fits": fit_rows, "medians_rows": median_rows}


def fit_rates(rows: List[list], spec: RateSpec):
    """Group records by (task, loss), take the per-n median excess across
    seeds, and fit log median against log n."""
    expo = rate_exponent(spec)
    groups: dict = {}
    for r in rows:
        if r[-1]:
            continue  # failed cell
        key = (r[0], r[4])
        groups.setdefault(key, {}).setdefault(int(r[2]), []).append(float(r[12]))
    fit_rows = []
    median_rows = []
    for (task, loss), by_n in sorted(groups.items()):
        ns = sorted(by_n)
        meds = [float(np.median(by_n[n])) for n in ns]
        for n, m in zip(ns, meds):
            median_rows.append([task, loss, n, m, len(by_n[n])])
        positive = [(n, m) for n, m in zip(ns, meds) if m > 0]
        if len(positive) >= 3:
            lx = np.log([n for n, _ in positive])
            ly = np.log([m for _, m in positive])
            A = np.stack([lx, np.ones_like(lx)], axis=1)
            coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
            slope = float(coef[0])
            dof = len(positive) - 2
            rss = float(res[0]) if res.size else float(np.sum((ly - A @ coef) ** 2))
            stderr = math.sqrt(rss / max(dof, 1)
                               / float(np.sum((lx - lx.mean()) ** 2)))
        else:
            slope, stderr = math.nan, math.nan
        fit_rows.append([task, loss, slope, stderr, expo, slope + expo,
                         len(positive)])
    return fit_rows, median_rows


# ---------------------------------------------------------------------------
# hinge versus logistic on near-deterministic labels


def sample_balanced(task: SyntheticTask, seed, n_per_class: int):
    """First n_per_class stream points of each class, in stream order."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    pos = neg = 0
    while pos < n_per_class or neg < n_per_class:
        X = task._sample_x(rng, max(4 * n_per_class, 256))
        u = rng.random(X.shape[0])
        y = np.where(u < task._eta(X), 1.0, -1.0)
        keep = ((y > 0) & (pos + np.cumsum(y > 0) <= n_per_class)) | \
               ((y < 0) & (neg + np.cumsum(y < 0) <= n_per_class))
        pos += int(np.sum((y > 0) & keep))
        neg += int(np.sum((y < 0) & keep))
        xs.append(X[keep])
        ys.append(y[keep])
    return np.concatenate(xs), np.concatenate(ys)


def _loss_cell(args) -> tuple:
    (decl_dict, lc_dict, n_pc, loss, seed_idx, root_seed) = args
    decl = TaskDecl(**decl_dict)
    lc = _LossCompareView(**lc_dict)
    t0 = time.perf_counter()
    key = (decl.name, n_pc, loss, seed_idx)
    try:
        task = decl.build()
        data_seed = np.random.SeedSequence([root_seed, n_pc, seed_idx, 3])
        X, y = sample_balanced(task, data_seed, n_pc)
        F = 1.0 if loss == HINGE else lc.f_bound
        budget = ArchBudget(max_depth=lc.depth + 2, max_width=lc.width,
                            max_nnz=10 ** 9, max_abs=lc.max_abs, max_sup=F)
        cfg = TrainConfig(budget=budget, epochs=lc.epochs, lr=lc.lr,
                          minibatch=lc.minibatch, seed=seed_idx,
                          prune_every=10 ** 6)
        net = erm_train((X, y), loss, cfg)
        rng = np.random.default_rng(
            np.random.SeedSequence([root_seed, n_pc, seed_idx, 4]))
        Xt = task._sample_x(rng, lc.n_test)
        eta = task._eta(Xt)
        pred_pos = net(Xt)[:, 0] > 0.0
        acc = float(np.mean(np.where(pred_pos, eta, 1.0 - eta)))
        return key, acc, "", time.perf_counter() - t0
    except RelurateError as exc:
        return key, math.nan, type(exc).__name__ + ": " + str(exc), \
            time.perf_counter() - t0


@dataclass
class _LossCompareView:
    epochs: int
    lr: float
    minibatch: int
    width: int
    depth: int
    max_abs: float
    f_bound: float
    n_test: int


def run_loss_compare(cfg: HarnessConfig, out_dir: Path, jobs: int = 1) -> dict:
    lc = cfg.loss_compare
    if lc.task not in cfg.tasks:
        raise InputError(f"loss_compare.task {lc.task!r} is not declared")
    decl = cfg.tasks[lc.task]
    out_dir.mkdir(parents=True, exist_ok=True)
    view = dict(epochs=lc.epochs, lr=lc.lr, minibatch=lc.minibatch,
                width=lc.width, depth=lc.depth, max_abs=lc.max_abs,
                f_bound=lc.f_bound, n_test=lc.n_test)
    cells = [(asdict(decl), view, n, loss, s, cfg.seed)
             for n in lc.n_per_class for loss in (HINGE, LOGISTIC)
             for s in range(lc.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_loss_cell, cells))
    else:
        results = [_loss_cell(c) for c in cells]
    results.sort(key=lambda t: t[0])
    timings = {f"{k[0]}/n{k[1]}/{k[2]}/s{k[3]}": w for k, _, _, w in results}

    grouped: dict = {}
    for (task, n, loss, _), acc, err, _ in results:
        grouped.setdefault((task, n, loss), []).append((acc, err))
    rows = []
    for (task, n, loss), vals in sorted(grouped.items()):
        accs = np.array([a for a, e in vals if not e and not math.isnan(a)])
        if accs.size:
            mean = float(accs.mean())
            se = float(accs.std(ddof=1) / math.sqrt(accs.size)) if accs.size > 1 \
                else math.nan
        else:
            mean = se = math.nan
        rows.append([task, n, loss, mean, se, accs.size])
    path = out_dir / "loss_compare.csv"
    write_csv(path, "loss-compare",
              ["task", "n", "loss", "mean_acc", "se_acc", "seeds"], rows)
    write_manifest(out_dir, "loss-compare", cfg, {"cell_seconds": timings,
                                                  "jobs": jobs})
    return {"csv": path, "rows": rows}


# ---------------------------------------------------------------------------
# histogram of estimated class probabilities


def run_cond_e_hist(cfg: HarnessConfig, out_dir: Path) -> dict:
    ch = cfg.cond_e_hist
    if ch.task not in cfg.tasks:
        raise InputError(f"cond_e_hist.task {ch.task!r} is not declared")
    decl = cfg.tasks[ch.task]
    out_dir.mkdir(parents=True, exist_ok=True)
    task = decl.build()
    t0 = time.perf_counter()
    X, y = sample_balanced(task, np.random.SeedSequence([cfg.seed, 5]),
                           ch.n_train // 2)
    budget = ArchBudget(max_depth=ch.depth + 2, max_width=ch.width,
                        max_nnz=10 ** 9, max_abs=ch.max_abs, max_sup=ch.f_bound)
    net = erm_train((X, y), LOGISTIC,
                    TrainConfig(budget=budget, epochs=ch.epochs, lr=ch.lr,
                                minibatch=ch.minibatch, seed=cfg.seed % 2 ** 31,
                                prune_every=10 ** 6))
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 6]))
    Xe = task._sample_x(rng, ch.n_eval)
    u = rng.random(ch.n_eval)
    ye = np.where(u < task._eta(Xe), 1.0, -1.0)
    f = net(Xe)[:, 0]
    prob = 1.0 / (1.0 + np.exp(-np.clip(f, -60.0, 60.0)))
    edges = np.linspace(0.0, 1.0, ch.bins + 1)
    pos, _ = np.histogram(prob[ye > 0], bins=edges)
    neg, _ = np.histogram(prob[ye < 0], bins=edges)
    rows = [[edges[i], edges[i + 1], int(pos[i]), int(neg[i])]
            for i in range(ch.bins)]
    path = out_dir / "cond_e_hist.csv"
    write_csv(path, "cond-e-hist", ["bin_lo", "bin_hi", "count_pos", "count_neg"],
              rows)
    write_manifest(out_dir, "cond-e-hist", cfg,
                   {"train_seconds": time.perf_counter() - t0})
    return {"csv": path, "rows": rows, "edges": edges, "pos": pos, "neg": neg}


# ---------------------------------------------------------------------------
# schedule tables


def _exponent_direct(case: str, alpha, beta, q, gamma, d) -> float:
    """Independent arithmetic path used to cross-check the exponent column."""
    if case == "smooth_boundary":
        if math.isinf(q):
            return alpha / (alpha + d - 1.0)
        return (alpha * q + alpha) / (alpha * q + 2.0 * alpha
                                      + (d - 1.0) * q + (d - 1.0))
    if case == "smooth_eta":
        if math.isinf(q):
            return 1.0
        return (beta * q + beta) / (beta * q + 2.0 * beta + d)
    if case == "margin":
        if math.isinf(q) and math.isinf(gamma):
            return 1.0
        if math.isinf(q):
            return alpha / (alpha + (d - 1.0) / gamma)
        if math.isinf(gamma):
            return (q + 1.0) / (q + 2.0)
        return (alpha * q + alpha) / (alpha * q + 2.0 * alpha
                                      + ((d - 1.0) * q + (d - 1.0)) / gamma)
    if math.isinf(gamma):
        return 1.0
    return (alpha * gamma) / (alpha * gamma + d - 1.0)


SCHEDULE_HEADER = ["n", "xi", "eps_sq", "L", "N", "S", "B", "F", "exponent"]


def schedule_rows(spec: RateSpec, n_grid: Sequence[int]) -> List[list]:
    rows = []
    for n in n_grid:
        s = architecture_schedule(spec, int(n))
        expo = _exponent_direct(spec.case, spec.alpha, spec.beta, spec.q,
                                spec.gamma, spec.d)
        rows.append([s.n, s.xi_n, s.epsilon_n_sq, s.L_n, s.N_n, s.S_n, s.B_n,
                     s.F_n, expo])
    return rows


def run_schedule(spec: RateSpec, n_grid: Sequence[int],
                 out_path: Optional[Path] = None) -> List[list]:
    rows = schedule_rows(spec, n_grid)
    if out_path is not None:
        write_csv(out_path, "schedule", SCHEDULE_HEADER, rows)
    return rows
