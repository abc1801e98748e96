"""Empirical types and empirical mutual information from sample matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .core import PairwiseDist, mutual_information


class SampleFormatError(ValueError):
    """A samples file failed validation; the message carries the line number."""


@dataclass(frozen=True)
class SampleMatrix:
    """``n`` i.i.d. samples of ``d`` variables over the alphabet ``range(r)``."""

    data: np.ndarray
    r: int

    def __post_init__(self):
        data = np.array(self.data, dtype=np.intp, order="C")
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 2:
            raise ValueError("sample matrix must be n x d with n >= 1 and d >= 2")
        if self.r < 2:
            raise ValueError("alphabet size r must be at least 2")
        if data.min() < 0 or data.max() >= self.r:
            raise ValueError(f"symbols must lie in 0..{self.r - 1}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def subset(self, rows) -> SampleMatrix:
        return SampleMatrix(self.data[rows], self.r)


@dataclass(frozen=True)
class EmpiricalPair:
    pair: tuple[int, int]
    type_table: PairwiseDist


def empirical_pairwise(s: SampleMatrix, i: int, j: int) -> EmpiricalPair:
    if i == j:
        raise ValueError("empirical_pairwise needs two distinct columns")
    counts = np.zeros((s.r, s.r))
    np.add.at(counts, (s.data[:, i], s.data[:, j]), 1.0)
    return EmpiricalPair((i, j), PairwiseDist(counts / s.n))


def node_types(s: SampleMatrix) -> np.ndarray:
    """``(d, r)`` array of single-column empirical distributions."""
    out = np.zeros((s.d, s.r))
    for i in range(s.d):
        out[i] = np.bincount(s.data[:, i], minlength=s.r)
    return out / s.n


def pair_counts(s: SampleMatrix) -> np.ndarray:
    """All co-occurrence counts in one pass, shape ``(d, d, r, r)``."""
    return kernels.pair_counts(s.data, s.r)


def mi_from_counts(counts: np.ndarray, n: int) -> np.ndarray:
    """Empirical MI for every pair from a ``(d, d, r, r)`` count array."""
    d = counts.shape[0]
    c = counts.astype(np.float64)
    ci = c.sum(axis=3, keepdims=True)
    cj = c.sum(axis=2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c > 0, c * np.log(c * n / (ci * cj)), 0.0)
    mi = terms.sum(axis=(2, 3)) / n
    mi = np.where((mi < 0) & (mi > -1e-12), 0.0, mi)
    mi[np.diag_indices(d)] = 0.0
    # the two triangles come from transposed tables; force exact symmetry
    upper = np.triu(mi, 1)
    return upper + upper.T


def all_empirical_mi(s: SampleMatrix) -> np.ndarray:
    """Symmetric ``d x d`` matrix of empirical MI (nats); diagonal is zero."""
    return mi_from_counts(pair_counts(s), s.n)


def empirical_mi(s: SampleMatrix, i: int, j: int) -> float:
    return mutual_information(empirical_pairwise(s, i, j).type_table)


def read_samples_csv(path, header: bool = False, r: int | None = None) -> SampleMatrix:
    """Read one integer-coded sample per line.

    ``r`` defaults to one more than the largest symbol seen (at least 2).
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and header:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [int(c) for c in row]
            except ValueError:
                raise SampleFormatError(f"{path}:{lineno}: non-integer symbol in {row}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise SampleFormatError(
                    f"{path}:{lineno}: expected {width} columns, found {len(values)}"
                )
            if min(values) < 0 or (r is not None and max(values) >= r):
                raise SampleFormatError(f"{path}:{lineno}: symbol outside alphabet")
            rows.append(values)
    if not rows:
        raise SampleFormatError(f"{path}: no samples")
    data = np.array(rows, dtype=np.intp)
    if data.shape[1] < 2:
        raise SampleFormatError(f"{path}: need at least two columns")
    return SampleMatrix(data, r if r is not None else max(2, int(data.max()) + 1))


def write_samples_csv(s: SampleMatrix, path, header: bool = False) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(s.d)])
        w.writerows(s.data.tolist())
