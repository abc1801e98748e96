"""Real-data workflow: CSV loading with binarisation, held-out likelihood, beta selection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ForestModel
from .estimation import SampleMatrix
from .learning import learn_path
from .synthgen import SeededRng

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


class DatasetError(ValueError):
    pass


@dataclass
class DatasetSpec:
    """Where the data lives and how to split it.

    Give either ``train_fraction`` (rows shuffled with ``seed``) or explicit
    ``train_count``/``test_count`` (taken in file order).
    """

    path: str
    column_types: Sequence[str]
    header: bool = True
    train_fraction: float | None = 0.8
    seed: int = 0
    train_count: int | None = None
    test_count: int | None = None


@dataclass
class EncodingReport:
    r: int
    thresholds: dict[int, float] = field(default_factory=dict)
    categories: dict[int, dict[str, int]] = field(default_factory=dict)
    train_rows: list[int] = field(default_factory=list)
    test_rows: list[int] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)


def _read_cells(spec: DatasetSpec):
    with open(spec.path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    names = None
    start = 1
    if spec.header:
        if not rows:
            raise DatasetError(f"{spec.path}: empty file")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        start = 2
    rows = [(start + k, r) for k, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{spec.path}: no data rows")
    width = len(spec.column_types)
    for lineno, r in rows:
        if len(r) != width:
            raise DatasetError(f"{spec.path}:{lineno}: expected {width} columns, found {len(r)}")
    return names or [f"x{i}" for i in range(width)], rows


def _split(n: int, spec: DatasetSpec):
    if spec.train_count is not None:
        test = spec.test_count if spec.test_count is not None else n - spec.train_count
        if spec.train_count < 1 or test < 0 or spec.train_count + test > n:
            raise DatasetError(f"split {spec.train_count}+{test} does not fit {n} rows")
        return np.arange(spec.train_count), np.arange(spec.train_count, spec.train_count + test)
    if spec.train_fraction is None or not 0 < spec.train_fraction <= 1:
        raise DatasetError("train_fraction must lie in (0, 1]")
    perm = SeededRng(spec.seed, 1).generator().permutation(n)
    n_train = max(1, int(round(spec.train_fraction * n)))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def load_dataset(spec: DatasetSpec) -> tuple[SampleMatrix, SampleMatrix | None, EncodingReport]:
    """Encode a mixed CSV into integer symbols and split it.

    Continuous columns become 1 above the training-split mean and 0 otherwise.
    Categorical values are coded by sorted order over the whole file so both
    splits share one code book.
    """
    types = list(spec.column_types)
    bad = [t for t in types if t not in (CATEGORICAL, CONTINUOUS)]
    if bad:
        raise DatasetError(f"unknown column types {bad}")
    names, rows = _read_cells(spec)
    n, d = len(rows), len(types)
    train_idx, test_idx = _split(n, spec)
    encoded = np.zeros((n, d), dtype=np.intp)
    report = EncodingReport(r=2, columns=names, train_rows=train_idx.tolist(), test_rows=test_idx.tolist())
    for j, kind in enumerate(types):
        cells = [(lineno, r[j].strip()) for lineno, r in rows]
        if all(c == "" for _, c in cells):
            raise DatasetError(f"{spec.path}: column {j} ({names[j]}) is empty")
        for lineno, c in cells:
            if c == "":
                raise DatasetError(f"{spec.path}:{lineno}: column {j} ({names[j]}) is blank")
        if kind == CONTINUOUS:
            vals = np.empty(n)
            for k, (lineno, c) in enumerate(cells):
                try:
                    vals[k] = float(c)
                except ValueError:
                    raise DatasetError(
                        f"{spec.path}:{lineno}: column {j} ({names[j]}): cannot parse {c!r} as a number"
                    ) from None
            threshold = float(vals[train_idx].mean())
            report.thresholds[j] = threshold
            encoded[:, j] = vals > threshold
        else:
            codes = {v: k for k, v in enumerate(sorted({c for _, c in cells}))}
            report.categories[j] = codes
            encoded[:, j] = [codes[c] for _, c in cells]
    report.r = max([2] + [len(c) for c in report.categories.values()])
    train = SampleMatrix(encoded[train_idx], report.r)
    test = SampleMatrix(encoded[test_idx], report.r) if len(test_idx) else None
    return train, test, report


def floored_log_likelihood(model: ForestModel, s: SampleMatrix, n_train: int) -> tuple[float, int]:
    """Total log-likelihood with zero-probability factors floored.

    Every node or edge probability that is zero is replaced by
    ``1 / (2 n_train)``. Returns the total and the number of floored factors.
    """
    floor = math.log(1.0 / (2 * n_train))
    x = s.data
    floored = 0
    total = 0.0
    with np.errstate(divide="ignore"):
        node_logs = []
        for i in range(model.d):
            lp = np.log(model.node_marginals[i].probs)[x[:, i]]
            bad = np.isinf(lp)
            floored += int(bad.sum())
            lp[bad] = floor
            node_logs.append(lp)
            total += float(lp.sum())
        for (i, j), pd in model.edge_marginals.items():
            lp = np.log(pd.table[x[:, i], x[:, j]])
            bad = np.isinf(lp)
            floored += int(bad.sum())
            lp[bad] = floor
            total += float(np.sum(lp - node_logs[i] - node_logs[j]))
    return total, floored


def beta_profile(train: SampleMatrix, test: SampleMatrix | None, betas: Sequence[float]) -> list[dict]:
    """Average train/test log-likelihood per sample of CLThres models, per beta."""
    if test is not None and (test.d != train.d or test.r != train.r):
        raise ValueError("train and test must share d and r")
    rows = []
    for beta, learned in learn_path(train, betas).items():
        tr, _ = floored_log_likelihood(learned.model, train, train.n)
        row = {"beta": beta, "k_hat": learned.k_hat, "eps": learned.eps, "train_ll": tr / train.n}
        if test is not None:
            te, nf = floored_log_likelihood(learned.model, test, train.n)
            row["test_ll"] = te / test.n
            row["test_floored"] = nf
        rows.append(row)
    return rows


@dataclass
class CVResult:
    beta: float
    mean_scores: dict[float, float]
    table: list[dict]


def fold_assignment(n: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = SeededRng(seed, 2).generator().permutation(n)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def cross_validate_beta(train: SampleMatrix, folds: int, betas: Sequence[float], seed: int = 0) -> CVResult:
    """Pick the beta with the best mean held-out log-likelihood per sample.

    Ties go to the smaller beta (the sparser model).
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if train.n < 2 * folds:
        raise ValueError(f"{train.n} samples are too few for {folds} folds")
    parts = fold_assignment(train.n, folds, seed)
    table = []
    for f, held in enumerate(parts):
        fit_rows = np.setdiff1d(np.arange(train.n), held)
        fit, val = train.subset(fit_rows), train.subset(held)
        for row in beta_profile(fit, val, betas):
            table.append({"fold": f, "beta": row["beta"], "k_hat": row["k_hat"], "score": row["test_ll"]})
    means = {b: float(np.mean([t["score"] for t in table if t["beta"] == b])) for b in betas}
    best = max(sorted(means), key=lambda b: (means[b], -b))
    return CVResult(best, means, table)
