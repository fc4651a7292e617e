"""Positive-partial-transpose test over all party subsets, plus biranks."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NotBipartite
from .states import MultiState, partial_transpose, rank_of, spectral, _rank_from_eigenvalues


@dataclass(frozen=True)
class SubsetRecord:
    """Min eigenvalue and rank of one representative partial transpose."""

    subset: tuple[int, ...]
    min_eigenvalue: float
    rank: int


@dataclass(frozen=True)
class PptReport:
    is_ppt: bool
    records: tuple[SubsetRecord, ...]
    worst_subset: tuple[int, ...]


def subset_representatives(n: int) -> list[tuple[int, ...]]:
    """One subset per complement pair: every S within parties 1..n-1.

    S and its complement give transpose-related operators with identical
    spectra, so only subsets avoiding party n are evaluated; the empty
    set (the state itself) is included.  Ordered by size then
    lexicographically.
    """
    out: list[tuple[int, ...]] = []
    for size in range(0, n):
        out.extend(combinations(range(1, n), size))
    return out


def is_ppt(state: MultiState) -> PptReport:
    """Evaluate every representative partial transpose of ``state``.

    PPT holds iff each minimum eigenvalue is at least
    ``-tol_psd * lambda_max`` of the input state.
    """
    lam_max = float(spectral(state).eigenvalues[0])
    threshold = -state.cfg.tol_psd * lam_max
    records = []
    worst: tuple[int, ...] = ()
    worst_val = np.inf
    for subset in subset_representatives(state.n):
        pt = partial_transpose(state, subset)
        eigs = np.linalg.eigvalsh(pt.matrix)
        rank = _rank_from_eigenvalues(eigs, state.cfg.tol_rank)
        mn = float(eigs[0])
        records.append(SubsetRecord(subset=subset, min_eigenvalue=mn, rank=rank))
        if mn < worst_val:
            worst_val = mn
            worst = subset
    ok = all(rec.min_eigenvalue >= threshold for rec in records)
    return PptReport(is_ppt=ok, records=tuple(records), worst_subset=worst)


def birank(state: MultiState) -> tuple[int, int]:
    """(rank of the state, rank of its party-1 partial transpose)."""
    if state.n != 2:
        raise NotBipartite(f"birank needs 2 parties, state has {state.n}")
    return rank_of(state), rank_of(partial_transpose(state, (1,)))


def ppt_report_to_dict(report: PptReport) -> dict:
    return {
        "is_ppt": report.is_ppt,
        "worst_subset": list(report.worst_subset),
        "records": [
            {
                "subset": list(rec.subset),
                "min_eigenvalue": rec.min_eigenvalue,
                "rank": rec.rank,
            }
            for rec in report.records
        ],
    }


def ppt_report_from_dict(obj: dict) -> PptReport:
    return PptReport(
        is_ppt=bool(obj["is_ppt"]),
        worst_subset=tuple(obj["worst_subset"]),
        records=tuple(
            SubsetRecord(
                subset=tuple(rec["subset"]),
                min_eigenvalue=float(rec["min_eigenvalue"]),
                rank=int(rec["rank"]),
            )
            for rec in obj["records"]
        ),
    )
