"""Monte Carlo experiments: error probabilities over (n, beta) grids and KL decay."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__, kernels
from .core import ForestModel, forest_kl, project_onto_structure
from .estimation import SampleMatrix
from .learning import RegSchedule, chow_liu, clthres, min_true_mi
from .synthgen import (
    SeededRng,
    StarForestSpec,
    build_random_forest,
    build_star_forest,
    sample,
)

ORACLE = "oracle"


@dataclass
class ExperimentConfig:
    """One experiment grid.

    ``topology`` is a mapping with ``kind`` in ``{"star", "random"}``; a star
    takes ``d``, ``k``, ``crossover``; a random forest takes ``d``, ``k``,
    ``r`` and ``seed`` (plus optional ``kappa`` and ``min_mi``). Add the string
    ``"oracle"`` to ``betas`` to include the eps = I_min / 2 schedule.
    """

    topology: dict
    ns: list[int]
    betas: list
    trials: int = 100
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.ns or any(int(n) < 1 for n in self.ns):
            raise ValueError("n grid must contain positive sample sizes")
        self.ns = [int(n) for n in self.ns]
        betas = []
        for b in self.betas:
            if b == ORACLE:
                betas.append(ORACLE)
            else:
                RegSchedule.power(b)
                betas.append(float(b))
        if not betas:
            raise ValueError("beta grid is empty")
        self.betas = betas
        build_truth(self.topology)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


PROFILES = {
    # d = 101 star with 30000 trials per cell; far too slow for routine runs
    "full-scale": dict(
        topology={"kind": "star", "d": 101, "k": 50, "crossover": 0.3},
        ns=[500, 1000, 2000, 4000, 8000, 16000],
        betas=[0.25, 0.375, 0.5, 0.625, 0.75, 0.875],
        trials=30000,
    ),
    "desk": dict(
        topology={"kind": "star", "d": 21, "k": 10, "crossover": 0.3},
        ns=[1000, 4000],
        betas=[0.2, 0.5, 0.8],
        trials=400,
    ),
    "kl-decay": dict(
        topology={"kind": "star", "d": 21, "k": 10, "crossover": 0.3},
        ns=[256, 512, 1024, 2048, 4096, 8192],
        betas=[0.625],
        trials=50,
    ),
}


def profile(name: str, **overrides) -> ExperimentConfig:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    doc = dict(PROFILES[name])
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(doc)


def build_truth(topology: dict) -> ForestModel:
    kind = topology.get("kind")
    if kind == "star":
        return build_star_forest(
            StarForestSpec(int(topology["d"]), int(topology["k"]), float(topology.get("crossover", 0.3)))
        )
    if kind == "random":
        rng = SeededRng(int(topology.get("seed", 0)), 0).generator()
        return build_random_forest(
            int(topology["d"]), int(topology["k"]), int(topology.get("r", 2)), rng,
            kappa=float(topology.get("kappa", 0.02)), min_mi=float(topology.get("min_mi", 0.01)),
        )
    raise ValueError(f"unknown topology kind {kind!r}")


def schedule_for(beta, truth: ForestModel) -> RegSchedule:
    if beta == ORACLE:
        i_min = min_true_mi(truth)
        if math.isinf(i_min):
            raise ValueError("oracle threshold needs a truth with at least one edge")
        return RegSchedule.oracle(i_min / 2)
    return RegSchedule.power(beta)


def _beta_key(beta) -> int:
    # stable integer stream component; the oracle gets its own
    return 2_000_000 if beta == ORACLE else int(round(float(beta) * 1_000_000))


def trial_rng(master: int, n: int, beta, trial: int) -> SeededRng:
    return SeededRng(int(master), (int(n), _beta_key(beta), int(trial)))


@dataclass(frozen=True)
class ExperimentRecord:
    trial: int
    n: int
    beta: str
    eps: float
    k: int
    k_hat: int
    error: int
    over: int
    under: int
    top_k_wrong: int
    kl: float
    risk: float


RECORD_FIELDS = [f.name for f in fields(ExperimentRecord)]


def run_trial(
    truth: ForestModel,
    n: int,
    beta,
    trial: int,
    master: int,
    learner: Callable[[SampleMatrix], ForestModel] | None = None,
    baseline_kl: float = 0.0,
) -> ExperimentRecord:
    """Generate, learn and compare once.

    ``baseline_kl`` is D(P || forest projection of P); zero for forest truths.
    """
    s = sample(truth, n, trial_rng(master, n, beta, trial))
    true_edges = set(truth.edges)
    k = len(true_edges)
    if learner is None:
        learned = clthres(s, schedule_for(beta, truth))
        model, k_hat, eps = learned.model, learned.k_hat, learned.eps
        top_k = set(learned.ranking.edges[:k])
    else:
        model = learner(s)
        k_hat, eps = len(model.edges), float("nan")
        top_k = set(chow_liu(s).edges[:k])
    kl = forest_kl(truth, model)
    return ExperimentRecord(
        trial=trial,
        n=n,
        beta=str(beta),
        eps=eps,
        k=k,
        k_hat=k_hat,
        error=int(set(model.edges) != true_edges),
        over=int(k_hat > k),
        under=int(k_hat < k),
        top_k_wrong=int(top_k != true_edges),
        kl=kl,
        risk=kl - baseline_kl,
    )


def wilson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(records: Sequence[ExperimentRecord]) -> list[dict]:
    cells: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        cells.setdefault((rec.n, rec.beta), []).append(rec)
    rows = []
    for (n, beta), recs in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        row = {"n": n, "beta": beta, "trials": len(recs)}
        for name in ("error", "over", "under", "top_k_wrong"):
            hits = sum(getattr(r, name) for r in recs)
            lo, hi = wilson(hits, len(recs))
            row[f"p_{name}"] = hits / len(recs)
            row[f"{name}_lo"] = lo
            row[f"{name}_hi"] = hi
        kls = np.array([r.kl for r in recs])
        row["mean_kl"] = float(kls.mean())
        row["mean_k_hat"] = float(np.mean([r.k_hat for r in recs]))
        rows.append(row)
    return rows


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list[ExperimentRecord]
    summary: list[dict]

    def cell(self, n: int, beta) -> dict:
        for row in self.summary:
            if row["n"] == n and row["beta"] == str(beta):
                return row
        raise KeyError((n, beta))


def mc_error_sweep(cfg: ExperimentConfig, truth: ForestModel | None = None) -> SweepResult:
    """Error-event frequencies with Wilson intervals for every (n, beta) cell."""
    truth = truth if truth is not None else build_truth(cfg.topology)
    baseline = forest_kl(truth, project_onto_structure(truth, truth.edges))
    records = [
        run_trial(truth, n, beta, t, cfg.seed, baseline_kl=baseline)
        for n in cfg.ns
        for beta in cfg.betas
        for t in range(cfg.trials)
    ]
    records.sort(key=lambda r: (r.n, _beta_key(r.beta if r.beta == ORACLE else float(r.beta)), r.trial))
    result = SweepResult(cfg, records, summarize(records))
    if cfg.out_dir:
        write_outputs(result, cfg.out_dir, "mc-error")
    return result


@dataclass
class KLDecayResult:
    beta: float
    rows: list[dict]
    slope: float
    intercept: float
    residuals: list[float] = field(default_factory=list)


def fit_loglog_slope(xs, ys) -> tuple[float, float, np.ndarray]:
    """OLS fit of log(y) on log(x); raises when the fit is undefined."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < 2:
        raise ValueError("need at least two distinct x values for a slope")
    if np.any(~np.isfinite(ys)) or np.any(ys <= 0):
        raise ValueError("log-log slope undefined: values must be finite and positive")
    lx, ly = np.log(xs), np.log(ys)
    fit = stats.linregress(lx, ly)
    return float(fit.slope), float(fit.intercept), ly - (fit.intercept + fit.slope * lx)


def kl_decay(
    cfg: ExperimentConfig,
    truth: ForestModel | None = None,
    learner: Callable[[SampleMatrix], ForestModel] | None = None,
) -> KLDecayResult:
    """Mean/min/max of D(P || P*) per n and the fitted log-log slope.

    Uses the first beta of the config. ``learner`` replaces CLThres, e.g. to
    inject a fixed model.
    """
    truth = truth if truth is not None else build_truth(cfg.topology)
    beta = cfg.betas[0]
    rows = []
    records = []
    for n in cfg.ns:
        recs = [run_trial(truth, n, beta, t, cfg.seed, learner=learner) for t in range(cfg.trials)]
        records.extend(recs)
        kls = np.array([r.kl for r in recs])
        rows.append({"n": n, "mean": float(kls.mean()), "min": float(kls.min()), "max": float(kls.max())})
    slope, intercept, resid = fit_loglog_slope([r["n"] for r in rows], [r["mean"] for r in rows])
    result = KLDecayResult(beta, rows, slope, intercept, resid.tolist())
    if cfg.out_dir:
        write_outputs(SweepResult(cfg, records, rows), cfg.out_dir, "kl-decay",
                      extra={"slope": slope, "intercept": intercept})
    return result


def manifest(cfg: ExperimentConfig, command: str, extra: dict | None = None) -> dict:
    doc = {
        "command": command,
        "config": asdict(cfg),
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        doc.update(extra)
    return doc


def write_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)


def write_outputs(result: SweepResult, out_dir, command: str, extra: dict | None = None) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_csv([asdict(r) for r in result.records], out / "records.csv", RECORD_FIELDS)
        write_csv(result.summary, out / "summary.csv")
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest(result.config, command, extra), fh, indent=2)
    except OSError as exc:
        raise OSError(f"writing results to {out}: {exc}") from exc
