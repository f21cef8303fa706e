"""Harness configuration: INI-style files with sections, plus built-in
defaults so every command runs without a config file.

Task sections are named ``[task:<name>]`` and declare the generator case,
dimension, exponents and polynomial coefficients (JSON term lists
``[[coeff, [e1, ...]], ...]``).
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from .errors import InputError
from .polynomials import Polynomial
from .tasks import (
    SyntheticTask,
    make_extreme_eta_task,
    make_margin_task,
    make_smooth_boundary_task,
    make_smooth_eta_task,
)

SCHEMA_VERSION = "relurate.v1"


@dataclass
class TaskDecl:
    name: str
    case: str
    d: int = 2
    alpha: float = 1.0
    beta: float = 1.0
    q: float = 1.0
    gamma: float = 1.0
    noise_width: float = 0.25
    eps0: float = 0.2
    f_tilde: float = math.log(99.0)
    lam: float = 0.05
    boundary: Optional[list] = None   # polynomial term list on d-1 variables
    eta_poly: Optional[list] = None   # polynomial term list on d variables

    def build(self) -> SyntheticTask:
        if self.case == "smooth_boundary":
            terms = self.boundary or [[0.35, [0] * (self.d - 1)]]
            g = Polynomial.from_term_list(self.d - 1, terms)
            return make_smooth_boundary_task(self.d, self.alpha, self.q, g,
                                             self.noise_width, name=self.name)
        if self.case == "smooth_eta":
            terms = self.eta_poly or [[0.0, [0] * self.d]]
            p = Polynomial.from_term_list(self.d, terms)
            return make_smooth_eta_task(self.d, self.beta, self.q, p, name=self.name)
        if self.case == "margin":
            terms = self.boundary or [[0.5, [0] * (self.d - 1)]]
            g = Polynomial.from_term_list(self.d - 1, terms)
            return make_margin_task(self.d, self.alpha, self.gamma, g, self.eps0,
                                    noise_q=self.q, noise_width=self.noise_width,
                                    name=self.name)
        if self.case == "extreme_eta":
            return make_extreme_eta_task(self.d, self.f_tilde, self.lam,
                                         name=self.name)
        raise InputError(f"unknown task case {self.case!r}")


@dataclass
class RateStudyConfig:
    task: str = "boundary-q1"
    n_grid: List[int] = field(default_factory=lambda: [512, 1024, 2048, 4096, 8192])
    seeds: int = 3
    loss: str = "hinge"
    epochs: int = 300
    lr: float = 0.25
    minibatch: int = 64
    prune_every: int = 100
    init_scale: float = 1.0
    scale_width: float = 8.0
    scale_nnz: float = 12.0
    min_depth: int = 3
    min_abs_bound: float = 8.0
    width_ceiling: int = 512
    nnz_ceiling: int = 100_000
    epochs_ceiling: int = 2000
    constructive_baseline: bool = True


@dataclass
class LossCompareConfig:
    task: str = "extreme-default"
    n_per_class: List[int] = field(default_factory=lambda: [100, 1000, 5000])
    seeds: int = 3
    epochs: int = 150
    lr: float = 0.2
    minibatch: int = 32
    width: int = 32
    depth: int = 3
    max_abs: float = 10.0
    f_bound: float = 8.0
    n_test: int = 100_000


@dataclass
class CondEHistConfig:
    task: str = "extreme-default"
    n_train: int = 4000
    bins: int = 20
    n_eval: int = 20_000
    epochs: int = 200
    lr: float = 0.2
    minibatch: int = 32
    width: int = 32
    depth: int = 3
    max_abs: float = 10.0
    f_bound: float = 8.0


@dataclass
class VerifyConfig:
    mc_points: int = 100_000
    exactness_points: int = 100_000
    generator_points: int = 1_000_000
    n_random_nets: int = 50
    gradient_probes: int = 1000


@dataclass
class HarnessConfig:
    seed: int = 20240601
    out: str = "runs"
    jobs: int = 1
    mc_points: int = 200_000
    mc_batches: int = 20
    tasks: Dict[str, TaskDecl] = field(default_factory=dict)
    rate_study: RateStudyConfig = field(default_factory=RateStudyConfig)
    loss_compare: LossCompareConfig = field(default_factory=LossCompareConfig)
    cond_e_hist: CondEHistConfig = field(default_factory=CondEHistConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)

    def task(self, name: str) -> SyntheticTask:
        if name not in self.tasks:
            raise InputError(f"task {name!r} not declared (have {sorted(self.tasks)})")
        return self.tasks[name].build()

    def canonical(self) -> str:
        blob = {
            "seed": self.seed,
            "mc_points": self.mc_points,
            "mc_batches": self.mc_batches,
            "tasks": {k: asdict(v) for k, v in sorted(self.tasks.items())},
            "rate_study": asdict(self.rate_study),
            "loss_compare": asdict(self.loss_compare),
            "cond_e_hist": asdict(self.cond_e_hist),
            "verify": asdict(self.verify),
        }
        return json.dumps(blob, sort_keys=True)

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def default_tasks() -> Dict[str, TaskDecl]:
    return {
        "boundary-q1": TaskDecl(
            name="boundary-q1", case="smooth_boundary", d=2, alpha=1.0, q=1.0,
            noise_width=0.25, boundary=[[0.35, [0]], [0.3, [1]]],
        ),
        "extreme-default": TaskDecl(
            name="extreme-default", case="extreme_eta", d=2,
            f_tilde=math.log(99.0), lam=0.05,
        ),
    }


def default_config() -> HarnessConfig:
    return HarnessConfig(tasks=default_tasks())


_FLOAT_KEYS = {"alpha", "beta", "q", "gamma", "noise_width", "eps0", "f_tilde",
               "lam", "lr", "init_scale", "scale_width", "scale_nnz", "max_abs",
               "f_bound"}
_INT_LIST_KEYS = {"n_grid", "n_per_class"}
_JSON_KEYS = {"boundary", "eta_poly"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _JSON_KEYS:
        return json.loads(raw)
    if key in _INT_LIST_KEYS:
        return [int(tok) for tok in raw.replace(",", " ").split()]
    if key in _FLOAT_KEYS:
        return math.inf if raw.lower() in ("inf", "infinity") else float(raw)
    return raw


def _apply(obj, section: configparser.SectionProxy, context: str) -> None:
    for key, raw in section.items():
        if not hasattr(obj, key):
            raise InputError(f"unknown key {key!r} in [{context}]")
        current = getattr(obj, key)
        if key in _JSON_KEYS or key in _INT_LIST_KEYS or key in _FLOAT_KEYS:
            value = _parse_value(key, raw)
        elif isinstance(current, bool):
            value = raw.strip().lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = math.inf if raw.strip().lower() in ("inf", "infinity") \
                else float(raw)
        else:
            value = raw.strip()
        setattr(obj, key, value)


def load_config(path: Optional[str]) -> HarnessConfig:
    """Parse an INI config over the built-in defaults; None gives defaults."""
    cfg = default_config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise InputError(f"cannot read config file {path!r}")
    for section in parser.sections():
        if section == "common":
            _apply(cfg, parser[section], section)
        elif section == "rate_study":
            _apply(cfg.rate_study, parser[section], section)
        elif section == "loss_compare":
            _apply(cfg.loss_compare, parser[section], section)
        elif section == "cond_e_hist":
            _apply(cfg.cond_e_hist, parser[section], section)
        elif section == "verify":
            _apply(cfg.verify, parser[section], section)
        elif section.startswith("task:"):
            name = section.split(":", 1)[1]
            decl = cfg.tasks.get(name) or TaskDecl(name=name, case="smooth_boundary")
            _apply(decl, parser[section], section)
            cfg.tasks[name] = decl
        else:
            raise InputError(f"unknown config section [{section}]")
    return cfg
