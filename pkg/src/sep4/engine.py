"""The headline classifier for states of rank at most four.

Pipeline: compress the support, settle rank-one states by a product
check, reject NPT states, accept PPT states of rank two or three, and at
rank four decide by the Chow form when the compressed shape is 3x3 or
2x2x2 (any other shape is separable).  Rank above four is out of the
decision scope and reported as such, never guessed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chow import builtin_chow, eval_chow
from .errors import AllPartiesTrivial, NotSeparableVerdict
from .grassmann import pluecker
from .oracle import (
    Decomposition,
    DecompositionTerm,
    decomposition_from_dict,
    decomposition_to_dict,
    greedy_decompose,
)
from .ppt import PptReport, is_ppt, ppt_report_from_dict, ppt_report_to_dict
from .states import (
    MultiState,
    assemble_product,
    compress_support,
    is_product,
    local_ranks,
    range_basis,
    rank_of,
    reduced_state,
    spectral,
)

SEPARABLE = "Separable"
ENTANGLED = "Entangled"
OUT_OF_SCOPE = "OutOfScope"

RULE_NPT = "NPT"
RULE_RANK1_PRODUCT = "Rank1Product"
RULE_RANK1_NON_PRODUCT = "Rank1NonProduct"
RULE_PPT_RANK2 = "PPTRank2"
RULE_PPT_RANK3 = "PPTRank3"
RULE_PPT_RANK4_SHAPE = "PPTRank4Shape"
RULE_CHOW_33 = "Chow33"
RULE_CHOW_222 = "Chow222"
RULE_RANK_ABOVE_4 = "RankAbove4"

_RULE_NOTES = {
    RULE_NPT: "a partial transpose has a negative eigenvalue",
    RULE_RANK1_PRODUCT: "pure product state",
    RULE_RANK1_NON_PRODUCT: "pure state that does not factor across every party",
    RULE_PPT_RANK2: "PPT with rank 2: separable, length exactly 2",
    RULE_PPT_RANK3: "PPT with rank 3: separable",
    RULE_PPT_RANK4_SHAPE: "PPT rank-4 state not supported on 3x3 or 2x2x2: separable",
    RULE_CHOW_33: "rank-4 support on 3x3: decided by the Chow-form value on the range",
    RULE_CHOW_222: "rank-4 support on 2x2x2: decided by the Chow-form value on the range",
    RULE_RANK_ABOVE_4: "rank exceeds four: outside the decision scope",
}


@dataclass(frozen=True)
class ClassificationReport:
    verdict: str
    rule: str
    dims: tuple[int, ...]
    compressed_dims: tuple[int, ...]
    dropped_parties: tuple[int, ...]
    rank: int
    local_ranks: tuple[int, ...]
    ppt: PptReport | None
    chow_system: tuple[int, ...] | None
    chow_value: complex | None
    chow_abs: float | None
    low_confidence: bool
    decomposition: Decomposition | None
    length_bounds: tuple[int, int] | None
    notes: tuple[str, ...]


def _bounds_for(rank: int, compressed_dims: tuple[int, ...]) -> tuple[int, int]:
    """Length bounds for a separable verdict from rank and compressed shape.

    Lower bound is the rank.  Upper bounds: rank 2 -> 2; rank 3 -> 4,
    tightened to 3 unless the support is a two-qubit one; rank 4 -> 6,
    tightened to 5 for three or more parties with some local rank above
    2, and to 4 when some local rank is 4 (or the support is the full
    two-qubit space).
    """
    n = len(compressed_dims)
    if rank <= 1:
        return max(rank, 1), max(rank, 1)
    if rank == 2:
        return 2, 2
    if rank == 3:
        if n == 2 and all(r == 2 for r in compressed_dims):
            return 3, 4
        return 3, 3
    if rank == 4:
        if any(r == 4 for r in compressed_dims) or compressed_dims == (2, 2):
            return 4, 4
        if n > 2 and max(compressed_dims) > 2:
            return 4, 5
        return 4, 6
    return rank, rank


def length_bounds(report: ClassificationReport) -> tuple[int, int]:
    """(lower, upper) bounds on the minimal product-state length."""
    if report.verdict != SEPARABLE:
        raise NotSeparableVerdict(f"verdict is {report.verdict}")
    return _bounds_for(report.rank, report.compressed_dims)


def _pure_product_decomposition(state: MultiState) -> Decomposition:
    factors = []
    for p in range(1, state.n + 1):
        sd = spectral(reduced_state(state, (p,)))
        factors.append(sd.eigenvectors[:, 0])
    vec = assemble_product(factors)
    weight = state.trace
    recon = weight * np.outer(vec, vec.conj())
    residual = float(np.linalg.norm(state.matrix - recon))
    return Decomposition(
        terms=(DecompositionTerm(weight=weight, factors=tuple(factors), vector=vec),),
        residual=residual,
        length_upper_bound=1,
    )


def classify(
    state: MultiState, seed: int = 0, decompose: bool = True, restarts: int = 200
) -> ClassificationReport:
    """Decide separable / entangled / out-of-scope for ``state``.

    On separable verdicts a greedy decomposition is attempted
    (best-effort; its absence never changes the verdict) and length
    bounds are attached.
    """
    ranks = tuple(local_ranks(state))
    base = dict(
        dims=state.dims,
        local_ranks=ranks,
        ppt=None,
        chow_system=None,
        chow_value=None,
        chow_abs=None,
        low_confidence=False,
        decomposition=None,
        length_bounds=None,
    )

    try:
        comp = compress_support(state)
    except AllPartiesTrivial:
        report = ClassificationReport(
            verdict=SEPARABLE,
            rule=RULE_RANK1_PRODUCT,
            compressed_dims=(),
            dropped_parties=tuple(range(1, state.n + 1)),
            rank=1,
            notes=(_RULE_NOTES[RULE_RANK1_PRODUCT],),
            **base,
        )
        dec = _pure_product_decomposition(state) if decompose else None
        return replace(report, decomposition=dec, length_bounds=(1, 1))

    small = comp.state
    cdims = small.dims
    rank = rank_of(small)

    def finish(verdict, rule, **extra):
        notes = (_RULE_NOTES[rule],)
        report = ClassificationReport(
            verdict=verdict,
            rule=rule,
            compressed_dims=cdims,
            dropped_parties=comp.dropped,
            rank=rank,
            **{**base, **extra},
            notes=notes,
        )
        if verdict == SEPARABLE:
            bounds = _bounds_for(rank, cdims)
            dec = None
            if decompose:
                dec = greedy_decompose(
                    state, max_terms=bounds[1], seed=seed, restarts=restarts
                )
                if dec is None:
                    # greedy peels may spend extra terms lowering transpose
                    # ranks before the state rank drops
                    dec = greedy_decompose(
                        state, max_terms=bounds[1] + 2, seed=seed + 1, restarts=restarts
                    )
            return replace(report, decomposition=dec, length_bounds=bounds)
        return report

    if rank == 1:
        vec = range_basis(small).rows[0]
        ok, _ = is_product(vec, cdims, small.cfg.tol_product)
        if ok:
            return finish(SEPARABLE, RULE_RANK1_PRODUCT)
        return finish(ENTANGLED, RULE_RANK1_NON_PRODUCT, ppt=is_ppt(small))

    ppt_report = is_ppt(small)
    base["ppt"] = ppt_report
    if not ppt_report.is_ppt:
        return finish(ENTANGLED, RULE_NPT)

    if rank == 2:
        return finish(SEPARABLE, RULE_PPT_RANK2)
    if rank == 3:
        return finish(SEPARABLE, RULE_PPT_RANK3)

    if rank == 4:
        if cdims in ((3, 3), (2, 2, 2)):
            rule = RULE_CHOW_33 if cdims == (3, 3) else RULE_CHOW_222
            form = builtin_chow(cdims)
            value = eval_chow(form, pluecker(range_basis(small)), normalized=True)
            mag = abs(value)
            tol = small.cfg.tol_chow
            extra = dict(
                chow_system=cdims,
                chow_value=value,
                chow_abs=mag,
                low_confidence=bool(tol / 10 < mag < tol * 10),
            )
            if mag <= tol:
                return finish(SEPARABLE, rule, **extra)
            if rule == RULE_CHOW_222:
                bad = [rec for rec in ppt_report.records if rec.rank != 4]
                if bad:
                    raise RuntimeError(
                        "tolerance bug: entangled 2x2x2 rank-4 state has a partial "
                        f"transpose of rank != 4: {bad}"
                    )
            return finish(ENTANGLED, rule, **extra)
        return finish(SEPARABLE, RULE_PPT_RANK4_SHAPE)

    return finish(OUT_OF_SCOPE, RULE_RANK_ABOVE_4)


# --- report serialization ---------------------------------------------------


def _complex_pair(z: complex | None):
    if z is None:
        return None
    return [float(z.real), float(z.imag)]


def report_to_dict(report: ClassificationReport) -> dict:
    return {
        "verdict": report.verdict,
        "rule": report.rule,
        "dims": list(report.dims),
        "compressed_dims": list(report.compressed_dims),
        "dropped_parties": list(report.dropped_parties),
        "rank": report.rank,
        "local_ranks": list(report.local_ranks),
        "ppt": None if report.ppt is None else ppt_report_to_dict(report.ppt),
        "chow_system": None if report.chow_system is None else list(report.chow_system),
        "chow_value": _complex_pair(report.chow_value),
        "chow_abs": report.chow_abs,
        "low_confidence": report.low_confidence,
        "decomposition": (
            None if report.decomposition is None else decomposition_to_dict(report.decomposition)
        ),
        "length_bounds": (
            None if report.length_bounds is None else list(report.length_bounds)
        ),
        "notes": list(report.notes),
    }


def report_from_dict(obj: dict) -> ClassificationReport:
    chow_value = obj.get("chow_value")
    return ClassificationReport(
        verdict=obj["verdict"],
        rule=obj["rule"],
        dims=tuple(obj["dims"]),
        compressed_dims=tuple(obj["compressed_dims"]),
        dropped_parties=tuple(obj["dropped_parties"]),
        rank=int(obj["rank"]),
        local_ranks=tuple(obj["local_ranks"]),
        ppt=None if obj["ppt"] is None else ppt_report_from_dict(obj["ppt"]),
        chow_system=None if obj["chow_system"] is None else tuple(obj["chow_system"]),
        chow_value=None if chow_value is None else complex(chow_value[0], chow_value[1]),
        chow_abs=None if obj["chow_abs"] is None else float(obj["chow_abs"]),
        low_confidence=bool(obj["low_confidence"]),
        decomposition=(
            None
            if obj["decomposition"] is None
            else decomposition_from_dict(obj["decomposition"])
        ),
        length_bounds=(
            None if obj["length_bounds"] is None else tuple(obj["length_bounds"])
        ),
        notes=tuple(obj["notes"]),
    )
