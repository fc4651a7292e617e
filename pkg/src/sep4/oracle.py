"""Chow-free detection of product vectors and separable decompositions.

The searches here are numerical and one-sided: a hit certifies that a
product vector exists (it is exhibited), while "none found" is evidence,
not proof, of a completely entangled subspace.  The exact counting
routine for 5-dimensional kernels in 3 x 3 eliminates one party with
resultants and is reliable up to explicitly detected degeneracies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import combinations

import numpy as np

from .chow import subspace_meets_segre
from .errors import DegenerateConfiguration, NotApplicable, WrongDimension
from .grassmann import SubspaceBasis
from .ppt import is_ppt
from .states import (
    DEFAULT_TOLERANCES,
    MultiState,
    assemble_product,
    product_factors,
    spectral,
    _rank_from_eigenvalues,
)

MAX_SWEEPS = 200
SWEEP_EPS = 1e-14
DEDUP_OVERLAP = 1 - 1e-8


@dataclass(frozen=True)
class ProductVectorHit:
    """A product vector found inside a subspace.

    ``residual`` is the largest second-to-first singular value ratio over
    the party flattenings of ``vector``.
    """

    coefficients: np.ndarray
    vector: np.ndarray
    factors: tuple[np.ndarray, ...]
    residual: float


@dataclass(frozen=True)
class DecompositionTerm:
    weight: float
    factors: tuple[np.ndarray, ...]
    vector: np.ndarray


@dataclass(frozen=True)
class Decomposition:
    """Sum of pure product states reproducing a state up to ``residual``.

    ``length_upper_bound`` is the number of terms achieved, an upper
    bound on the true minimal length.
    """

    terms: tuple[DecompositionTerm, ...]
    residual: float
    length_upper_bound: int

    def reconstruct(self) -> np.ndarray:
        d = self.terms[0].vector.shape[0]
        out = np.zeros((d, d), dtype=complex)
        for term in self.terms:
            out += term.weight * np.outer(term.vector, term.vector.conj())
        return out


def _vector_pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex).ravel()]


def _vector_from_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def hit_to_dict(hit: ProductVectorHit) -> dict:
    return {
        "coefficients": _vector_pairs(hit.coefficients),
        "vector": _vector_pairs(hit.vector),
        "factors": [_vector_pairs(f) for f in hit.factors],
        "residual": hit.residual,
    }


def hit_from_dict(obj: dict) -> ProductVectorHit:
    return ProductVectorHit(
        coefficients=_vector_from_pairs(obj["coefficients"]),
        vector=_vector_from_pairs(obj["vector"]),
        factors=tuple(_vector_from_pairs(f) for f in obj["factors"]),
        residual=float(obj["residual"]),
    )


def decomposition_to_dict(dec: Decomposition) -> dict:
    return {
        "residual": dec.residual,
        "length_upper_bound": dec.length_upper_bound,
        "terms": [
            {
                "weight": term.weight,
                "factors": [_vector_pairs(f) for f in term.factors],
            }
            for term in dec.terms
        ],
    }


def decomposition_from_dict(obj: dict) -> Decomposition:
    terms = []
    for record in obj["terms"]:
        factors = tuple(_vector_from_pairs(f) for f in record["factors"])
        terms.append(
            DecompositionTerm(
                weight=float(record["weight"]),
                factors=factors,
                vector=assemble_product(factors),
            )
        )
    return Decomposition(
        terms=tuple(terms),
        residual=float(obj["residual"]),
        length_upper_bound=int(obj["length_upper_bound"]),
    )


def _product_residuals(x: np.ndarray, dims) -> tuple[np.ndarray, float, list[np.ndarray]]:
    """Batched per-party SVD pass: leading factors, gap measure, ratios."""
    rows = x.shape[0]
    ratios = np.zeros(rows)
    gap = np.zeros(rows)
    leads = []
    for axis, dp in enumerate(dims):
        t = x.reshape((rows,) + tuple(dims))
        m = np.moveaxis(t, 1 + axis, 1).reshape(rows, dp, -1)
        u, s, _ = np.linalg.svd(m, full_matrices=False)
        leads.append(u[:, :, 0])
        gap += np.maximum(0.0, 1.0 - s[:, 0] ** 2)
        if s.shape[1] > 1:
            ratios = np.maximum(ratios, s[:, 1] / np.maximum(s[:, 0], 1e-300))
    return ratios, gap, leads


def _alternate_to_product(
    coeffs: np.ndarray, onb: np.ndarray, dims, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Alternate nearest-product and subspace-projection steps.

    ``coeffs`` are rows of unit coefficient vectors in the orthonormal
    row basis ``onb``; returns the final subspace vectors and their
    product residuals.  Convergence near tangential intersections is
    slow, so callers follow up with :func:`_newton_product_polish`.
    """
    onb_proj = onb.conj().T
    x = coeffs @ onb
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    gap_prev = np.full(x.shape[0], np.inf)
    for _ in range(max_sweeps):
        ratios, gap, leads = _product_residuals(x, dims)
        if np.all(np.abs(gap_prev - gap) < SWEEP_EPS):
            return x, ratios
        gap_prev = gap
        y = reduce(lambda a, b: (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1), leads)
        c = y @ onb_proj
        norms = np.linalg.norm(c, axis=1)
        stuck = norms < 1e-12
        if np.any(stuck):
            c[stuck] = x[stuck] @ onb_proj
            norms[stuck] = np.linalg.norm(c[stuck], axis=1)
        x = (c / norms[:, None]) @ onb
    ratios, _, _ = _product_residuals(x, dims)
    return x, ratios


def _truncated_step(jac: np.ndarray, rhs: np.ndarray, residual: float):
    """Gauss-Newton step keeping only well-separated singular directions.

    Rescaling gauges (and, near tangential roots, their neighbours)
    produce singular values that scale with the residual itself; keeping
    them turns the minimum-norm step into a useless radial move, so
    everything below ``10 * residual`` (capped) is cut.
    """
    u, s, vh = np.linalg.svd(jac, full_matrices=False)
    if s[0] == 0.0:
        return None
    thresh = min(0.25 * s[0], 10.0 * residual)
    keep = s > thresh
    if not np.any(keep):
        return None
    coeffs = (u[:, keep].conj().T @ rhs) / s[keep]
    return vh[keep].conj().T @ coeffs


def _newton_product_polish(factors, comp_conj: np.ndarray, dims, max_iters: int = 40):
    """Drive per-party factors onto the subspace with Gauss-Newton steps.

    Solves the holomorphic system comp_conj @ (f_1 x ... x f_n) = 0 whose
    zeros are exactly the product vectors of the subspace; converges
    quadratically from the seeds the alternating sweeps provide.  Returns
    unit factors or ``None``.
    """
    factors = [np.asarray(f, dtype=complex).copy() for f in factors]
    for i, f in enumerate(factors):
        nrm = np.linalg.norm(f)
        if nrm < 1e-12:
            return None
        factors[i] = f / nrm
    if comp_conj.shape[0] == 0:
        return tuple(factors)
    for _ in range(max_iters):
        prod = assemble_product(factors)
        fval = comp_conj @ prod
        if np.linalg.norm(fval) < 1e-13:
            break
        blocks = []
        for i, dp in enumerate(dims):
            pieces = [f[:, None] for f in factors]
            pieces[i] = np.eye(dp, dtype=complex)
            blocks.append(comp_conj @ reduce(np.kron, pieces))
        step = _truncated_step(np.hstack(blocks), fval, np.linalg.norm(fval))
        if step is None or not np.all(np.isfinite(step)) or np.linalg.norm(step) > 10.0:
            return None
        offset = 0
        for i, dp in enumerate(dims):
            factors[i] = factors[i] - step[offset : offset + dp]
            offset += dp
        for i, f in enumerate(factors):
            nrm = np.linalg.norm(f)
            if nrm < 1e-8:
                return None
            factors[i] = f / nrm
    prod = assemble_product(factors)
    if np.linalg.norm(comp_conj @ prod) > 1e-12:
        return None
    return tuple(factors)


def find_product_vector(
    basis: SubspaceBasis,
    restarts: int = 200,
    seed: int = 0,
    tol_product: float = DEFAULT_TOLERANCES.tol_product,
    chunk_size: int = 64,
) -> ProductVectorHit | None:
    """Search for a product vector in the span of ``basis``.

    Runs alternating leading-singular-vector iterations from ``restarts``
    seeded random starts and returns the first (in restart order) whose
    residual reaches ``tol_product``; ``None`` after exhausting all
    starts.  A ``None`` is evidence, not proof, that the subspace is
    completely entangled.
    """
    k = basis.k
    if k == 0:
        return None
    dims = basis.dims
    _, _, vh = np.linalg.svd(basis.rows, full_matrices=True)
    onb = vh[:k]
    comp_conj = vh[k:].conj()
    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((restarts, k)) + 1j * rng.standard_normal((restarts, k))
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    for lo in range(0, restarts, chunk_size):
        block = starts[lo : lo + chunk_size]
        x, ratios = _alternate_to_product(block, onb, dims)
        candidates = [int(i) for i in np.argsort(ratios)[:12] if ratios[i] <= 0.25]
        for idx in sorted(candidates):
            vec = x[idx]
            polished = _newton_product_polish(product_factors(vec, dims), comp_conj, dims)
            if polished is not None:
                vec = assemble_product(polished)
                vec = (vec @ onb.conj().T) @ onb
                vec /= np.linalg.norm(vec)
            elif ratios[idx] > tol_product:
                continue
            final_ratio, _, _ = _product_residuals(vec[None, :], dims)
            if final_ratio[0] > tol_product:
                continue
            coeff = np.linalg.lstsq(basis.rows.T, vec, rcond=None)[0]
            return ProductVectorHit(
                coefficients=coeff,
                vector=vec,
                factors=product_factors(vec, dims),
                residual=float(final_ratio[0]),
            )
    return None


def check_general_position(
    factor_lists, dims, rtol: float = 1e-8
) -> bool:
    """General-position test for a tuple of product vectors.

    For every party j and every subset of at most ``d_j`` vectors, the
    party-j factors must be linearly independent (smallest singular value
    above ``rtol`` times the largest).
    """
    dims = tuple(int(x) for x in dims)
    m = len(factor_lists)
    if m == 0:
        return True
    for j, dj in enumerate(dims):
        vecs = []
        for factors in factor_lists:
            f = np.asarray(factors[j], dtype=complex).ravel()
            vecs.append(f / np.linalg.norm(f))
        size = min(dj, m)
        for pick in combinations(range(m), size):
            mat = np.column_stack([vecs[i] for i in pick])
            sv = np.linalg.svd(mat, compute_uv=False)
            if sv[-1] <= rtol * sv[0]:
                return False
    return True


# --- greedy separable decomposition ---------------------------------------


def _compatible_newton(factors, condition_blocks, dims, max_iters: int = 80):
    """Gauss-Newton for product vectors obeying conjugate-membership conditions.

    ``condition_blocks`` is a list of (subset, rows) pairs: the product of
    the factors, with the factors of the named parties conjugated, must be
    annihilated by ``rows.conj()``.  The subset () block keeps the vector
    inside the working subspace; nonempty subsets keep its conjugates
    inside the ranges of the corresponding partial transposes.  The mixed
    holomorphic/antiholomorphic system is solved over real and imaginary
    parts.  Returns unit factors or ``None``.
    """
    factors = [np.asarray(f, dtype=complex).copy() for f in factors]
    for i, f in enumerate(factors):
        nrm = np.linalg.norm(f)
        if nrm < 1e-12:
            return None
        factors[i] = f / nrm
    sizes = [int(d) for d in dims]
    total = sum(sizes)
    for _ in range(max_iters):
        fvals = []
        jac_real_rows = []
        for subset, rows in condition_blocks:
            if rows.shape[0] == 0:
                continue
            conj_factors = [
                np.conj(f) if (i + 1) in subset else f for i, f in enumerate(factors)
            ]
            annihilator = rows.conj()
            fvals.append(annihilator @ assemble_product(conj_factors))
            hol = np.zeros((rows.shape[0], total), dtype=complex)
            antihol = np.zeros((rows.shape[0], total), dtype=complex)
            offset = 0
            for i, dp in enumerate(sizes):
                pieces = [g[:, None] for g in conj_factors]
                pieces[i] = np.eye(dp, dtype=complex)
                block = annihilator @ reduce(np.kron, pieces)
                if (i + 1) in subset:
                    antihol[:, offset : offset + dp] = block
                else:
                    hol[:, offset : offset + dp] = block
                offset += dp
            jac_real_rows.append(
                np.block(
                    [
                        [np.real(hol + antihol), -np.imag(hol - antihol)],
                        [np.imag(hol + antihol), np.real(hol - antihol)],
                    ]
                )
            )
        fval = np.concatenate(fvals) if fvals else np.zeros(0, dtype=complex)
        if np.linalg.norm(fval) < 1e-13:
            break
        jac = np.vstack(jac_real_rows)
        rhs = np.concatenate([np.concatenate([v.real, v.imag]) for v in fvals])
        step = _truncated_step(jac, rhs, float(np.linalg.norm(fval)))
        if step is None or not np.all(np.isfinite(step)):
            return None
        nrm = np.linalg.norm(step)
        if nrm > 1.0:
            step = step / nrm
        delta = step[:total] + 1j * step[total:]
        offset = 0
        for i, dp in enumerate(sizes):
            factors[i] = factors[i] - delta[offset : offset + dp]
            offset += dp
        for i, f in enumerate(factors):
            nrm = np.linalg.norm(f)
            if nrm < 1e-8:
                return None
            factors[i] = f / nrm
    fvals = []
    for subset, rows in condition_blocks:
        if rows.shape[0] == 0:
            continue
        conj_factors = [np.conj(f) if (i + 1) in subset else f for i, f in enumerate(factors)]
        fvals.append(rows.conj() @ assemble_product(conj_factors))
    if fvals and np.linalg.norm(np.concatenate(fvals)) > 1e-11:
        return None
    return tuple(factors)


def _peel_weight(matrix: np.ndarray, vec: np.ndarray, tol_rank: float) -> float:
    """Largest t with matrix - t |vec><vec| still PSD; 0 if vec leaves the range."""
    eigs, vecs = np.linalg.eigh(matrix)
    scale = np.abs(eigs).max()
    if scale == 0.0:
        return 0.0
    keep = eigs > tol_rank * scale
    comp = vecs[:, keep].conj().T @ vec
    outside = np.linalg.norm(vec) ** 2 - np.linalg.norm(comp) ** 2
    if outside > 1e-12 * np.linalg.norm(vec) ** 2:
        return 0.0
    denom = float(np.sum(np.abs(comp) ** 2 / eigs[keep]).real)
    if denom <= 0.0:
        return 0.0
    return 1.0 / denom


def _subset_conjugate(factors, subset) -> np.ndarray:
    pieces = [np.conj(f) if (i + 1) in subset else f for i, f in enumerate(factors)]
    return assemble_product(pieces)


def _find_peelable_product_vector(
    rem_state: MultiState, subsets, restarts: int, seed: int, tol_product: float
):
    """Product vector in the range whose conjugates fit every transpose range.

    A product vector can be subtracted without breaking the PPT property
    only when, for each party subset, its subset-conjugate lies in the
    range of the corresponding partial transpose; random members of the
    range's product-vector family generally fail this, so the alternating
    candidates are polished against the full compatibility system.
    """
    from .states import partial_transpose

    dims = rem_state.dims
    tol_rank = rem_state.cfg.tol_rank
    sd = spectral(rem_state)
    rank = _rank_from_eigenvalues(sd.eigenvalues, tol_rank)
    if rank == 0:
        return None
    onb = np.ascontiguousarray(sd.eigenvectors[:, :rank].T)
    blocks = [((), np.ascontiguousarray(sd.eigenvectors[:, rank:].T))]
    for subset in subsets:
        if not subset:
            continue
        eigs, vecs = np.linalg.eigh(partial_transpose(rem_state, subset).matrix)
        keep = np.abs(eigs) <= tol_rank * np.abs(eigs).max()
        blocks.append((subset, np.ascontiguousarray(vecs[:, keep].T)))
    if all(rows.shape[0] == 0 for _, rows in blocks):
        blocks = blocks[:1]

    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((restarts, rank)) + 1j * rng.standard_normal((restarts, rank))
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    chunk_size = 64
    for lo in range(0, restarts, chunk_size):
        block = starts[lo : lo + chunk_size]
        x, ratios = _alternate_to_product(block, onb, dims)
        candidates = [int(i) for i in np.argsort(ratios)[:12] if ratios[i] <= 0.3]
        for idx in sorted(candidates):
            polished = _compatible_newton(product_factors(x[idx], dims), blocks, dims)
            if polished is None:
                continue
            vec = assemble_product(polished)
            vec = (vec @ onb.conj().T) @ onb
            nrm = np.linalg.norm(vec)
            if nrm < 1e-8:
                continue
            vec /= nrm
            final_ratio, _, _ = _product_residuals(vec[None, :], dims)
            if final_ratio[0] > tol_product:
                continue
            return ProductVectorHit(
                coefficients=np.linalg.lstsq(onb.T, vec, rcond=None)[0],
                vector=vec,
                factors=product_factors(vec, dims),
                residual=float(final_ratio[0]),
            )
    return None


def greedy_decompose(
    state: MultiState,
    max_terms: int = 8,
    seed: int = 0,
    restarts: int = 200,
    attempts: int = 5,
) -> Decomposition | None:
    """Peel pure product states off ``state`` until nothing remains.

    Each round finds a product vector phi in the range of the remainder
    and subtracts it with the largest weight that keeps every partial
    transpose of the remainder positive (phi being product, its
    projector transposes to the projector onto the party-conjugated
    vector, so each bound is a pseudo-inverse quadratic form).  Keeping
    the remainder PPT rather than merely positive prevents the peel from
    overshooting into entangled remainders.  Success requires a
    Frobenius residual at most ``1e-8 * trace``; a ``None`` does not
    refute separability.
    """
    from .ppt import subset_representatives
    from .states import partial_transpose

    target = 1e-8 * state.trace
    tol_rank = state.cfg.tol_rank
    subsets = subset_representatives(state.n)
    for attempt in range(attempts):
        remainder = np.array(state.matrix)
        terms: list[DecompositionTerm] = []
        for step in range(max_terms):
            if np.linalg.norm(remainder) <= target:
                break
            rem_state = MultiState(remainder, state.dims, state.cfg)
            hit = _find_peelable_product_vector(
                rem_state,
                subsets,
                restarts=restarts,
                seed=seed + 7919 * attempt + 101 * step,
                tol_product=state.cfg.tol_product,
            )
            if hit is None:
                if step == 0 and attempt >= 1:
                    # the full range yielded nothing twice; further
                    # attempts would search the same subspace again
                    return None
                break
            weight = np.inf
            for subset in subsets:
                target_vec = hit.vector if not subset else _subset_conjugate(hit.factors, subset)
                nrm = np.linalg.norm(target_vec)
                if nrm == 0.0:
                    weight = 0.0
                    break
                target_vec = target_vec / nrm
                bound = _peel_weight(
                    partial_transpose(rem_state, subset).matrix, target_vec, tol_rank
                )
                weight = min(weight, bound)
                if weight == 0.0:
                    break
            if not np.isfinite(weight) or weight <= 0.0:
                break
            phi = hit.vector
            remainder = remainder - weight * np.outer(phi, phi.conj())
            remainder = 0.5 * (remainder + remainder.conj().T)
            terms.append(
                DecompositionTerm(weight=weight, factors=hit.factors, vector=phi)
            )
        residual = float(np.linalg.norm(remainder))
        if terms and residual <= target:
            return Decomposition(
                terms=tuple(terms), residual=residual, length_upper_bound=len(terms)
            )
    return None


# --- exact kernel product-vector counting on 3 x 3 -------------------------
#
# Product vectors |a, b> in a 5-dim kernel K satisfy four bilinear
# conditions a^T M_j b = 0 built from the 4-dim orthocomplement.  A
# nontrivial b exists iff the 4 x 3 matrix C(a) with rows a^T M_j has all
# four 3 x 3 minors zero.  After a random projective change of
# coordinates a = T (1, s, t), two of the four cubic minor curves are
# eliminated by a resultant in t, giving a univariate polynomial in s of
# degree at most 9.

_FFT_SAMPLES = 32
_COEFF_TRIM = 1e-9
_CLUSTER_GAP = 1e-6


def _poly2_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
    for (i, j), val in np.ndenumerate(a):
        if val != 0.0:
            out[i : i + b.shape[0], j : j + b.shape[1]] += val * b
    return out


def _det3_poly(rows) -> np.ndarray:
    """Determinant of a 3 x 3 matrix of bivariate coefficient arrays."""
    acc = np.zeros((1, 1), dtype=complex)
    for perm, sign in (
        ((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
        ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1),
    ):
        term = reduce(_poly2_mul, (rows[r][perm[r]] for r in range(3)))
        if term.shape[0] > acc.shape[0] or term.shape[1] > acc.shape[1]:
            grown = np.zeros(
                (max(term.shape[0], acc.shape[0]), max(term.shape[1], acc.shape[1])),
                dtype=complex,
            )
            grown[: acc.shape[0], : acc.shape[1]] = acc
            acc = grown
        acc[: term.shape[0], : term.shape[1]] += sign * term
    return acc


def _poly2_eval(coeffs: np.ndarray, s: complex, t: complex) -> complex:
    val = 0.0 + 0.0j
    for (i, j), c in np.ndenumerate(coeffs):
        if c != 0.0:
            val += c * s**i * t**j
    return val


def _poly2_eval_grad(coeffs: np.ndarray, s: complex, t: complex) -> tuple[complex, complex, complex]:
    f = _poly2_eval(coeffs, s, t)
    fs = 0.0 + 0.0j
    ft = 0.0 + 0.0j
    for (i, j), c in np.ndenumerate(coeffs):
        if c == 0.0:
            continue
        if i > 0:
            fs += i * c * s ** (i - 1) * t**j
        if j > 0:
            ft += j * c * s**i * t ** (j - 1)
    return f, fs, ft


def _tpoly_at_s(coeffs: np.ndarray, s: complex) -> np.ndarray:
    """Coefficients in t of a bivariate polynomial at fixed s."""
    powers = s ** np.arange(coeffs.shape[0])
    return powers @ coeffs


def _trim_poly(c: np.ndarray, rel: float = _COEFF_TRIM) -> np.ndarray:
    scale = np.abs(c).max()
    if scale == 0.0:
        return c[:1]
    keep = np.flatnonzero(np.abs(c) > rel * scale)
    return c[: keep[-1] + 1]


def _resultant_in_t(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Resultant of two cubics in t, as a polynomial in s (low-to-high)."""
    samples = np.exp(2j * np.pi * np.arange(_FFT_SAMPLES) / _FFT_SAMPLES)
    values = np.empty(_FFT_SAMPLES, dtype=complex)
    for m, s in enumerate(samples):
        cp = _tpoly_at_s(p, s)
        cq = _tpoly_at_s(q, s)
        syl = np.zeros((6, 6), dtype=complex)
        for r in range(3):
            syl[r, r : r + 4] = cp[::-1]
            syl[3 + r, r : r + 4] = cq[::-1]
        values[m] = np.linalg.det(syl)
    # samples sit at exp(+2 pi i m / N), so the forward transform recovers
    # the coefficients in increasing degree
    return np.fft.fft(values) / _FFT_SAMPLES


def _newton_refine(p: np.ndarray, q: np.ndarray, s: complex, t: complex, scale: float):
    for _ in range(25):
        f1, f1s, f1t = _poly2_eval_grad(p, s, t)
        f2, f2s, f2t = _poly2_eval_grad(q, s, t)
        res = math.hypot(abs(f1), abs(f2))
        if res < 1e-14 * scale:
            break
        jac = np.array([[f1s, f1t], [f2s, f2t]])
        rhs = np.array([f1, f2])
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or max(abs(step[0]), abs(step[1])) > 1.0:
            break
        s, t = s - step[0], t - step[1]
    return s, t


def _polish_in_subspace(vec: np.ndarray, onb: np.ndarray, dims) -> tuple[np.ndarray, float]:
    coeff = (vec @ onb.conj().T)[None, :]
    nrm = np.linalg.norm(coeff)
    if nrm < 1e-12:
        return vec, np.inf
    x, ratios = _alternate_to_product(coeff / nrm, onb, dims, max_sweeps=60)
    return x[0], float(ratios[0])


def _dedup_append(vectors: list[np.ndarray], vec: np.ndarray) -> bool:
    for known in vectors:
        if abs(np.vdot(known, vec)) > DEDUP_OVERLAP:
            return False
    vectors.append(vec)
    return True


def _kernel_pv_round(bilinear, onb, dims, rng, membership_tol):
    """One coordinate-change round; returns (hits, reliable flag)."""
    t_mat, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    rotated = [t_mat.T @ m for m in bilinear]

    # cubic minor curves of the 4 x 3 coefficient matrix C(s, t)
    entry_polys = []
    for nj in rotated:
        row = []
        for c in range(3):
            coeff = np.zeros((2, 2), dtype=complex)
            coeff[0, 0] = nj[0, c]
            coeff[1, 0] = nj[1, c]
            coeff[0, 1] = nj[2, c]
            row.append(coeff)
        entry_polys.append(row)
    minors = []
    for drop in range(4):
        rows = [entry_polys[r] for r in range(4) if r != drop]
        minors.append(_det3_poly(rows))

    m1, m2 = minors[0], minors[1]
    scale = max(np.abs(m1).max(), np.abs(m2).max())
    if scale == 0.0:
        return [], False
    # t-degree drop makes the Sylvester eliminant unreliable
    if abs(m1[0, 3]) < 1e-10 * np.abs(m1).max() or abs(m2[0, 3]) < 1e-10 * np.abs(m2).max():
        return [], False

    res = _trim_poly(_resultant_in_t(m1, m2))
    if np.abs(res).max() < 1e-12:
        return [], False
    if res.shape[0] < 2:
        return [], True
    s_roots = np.roots(res[::-1])

    reliable = True
    for i in range(len(s_roots)):
        for j in range(i + 1, len(s_roots)):
            if abs(s_roots[i] - s_roots[j]) < _CLUSTER_GAP:
                reliable = False

    hits_vecs: list[np.ndarray] = []
    hits: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for s0 in s_roots:
        tc = _trim_poly(_tpoly_at_s(m1, s0))
        if tc.shape[0] < 2:
            continue
        for t0 in np.roots(tc[::-1]):
            if abs(_poly2_eval(m2, s0, t0)) > 1e-4 * scale * max(1.0, abs(s0), abs(t0)) ** 3:
                continue
            s1, t1 = _newton_refine(m1, m2, s0, t0, scale)
            a = t_mat @ np.array([1.0, s1, t1])
            a /= np.linalg.norm(a)
            coeff_mat = np.array([a @ m for m in bilinear])
            _, sv, vh = np.linalg.svd(coeff_mat)
            if sv[2] > 1e-6 * sv[0]:
                continue
            b = vh[2].conj()
            vec = np.kron(a, b)
            vec, ratio = _polish_in_subspace(vec, onb, dims)
            membership = np.linalg.norm(vec - (vec @ onb.conj().T) @ onb)
            if ratio > membership_tol or membership > membership_tol:
                continue
            if _dedup_append(hits_vecs, vec):
                fac = product_factors(vec, dims)
                hits.append((vec, fac[0], fac[1]))
    return hits, reliable


def count_kernel_product_vectors_3x3(
    kernel: SubspaceBasis, seed: int = 0, membership_tol: float = 1e-8
) -> list[ProductVectorHit]:
    """All product vectors in a 5-dimensional kernel of a 3 x 3 system.

    Three independent random coordinate changes vote on the count;
    :class:`DegenerateConfiguration` is raised when root clusters make
    every round unreliable or the reliable rounds disagree.
    """
    if kernel.dims != (3, 3) or kernel.k != 5:
        raise WrongDimension(
            f"expected a 5-dim subspace of dims (3, 3), got k={kernel.k}, dims={kernel.dims}"
        )
    _, _, vh = np.linalg.svd(kernel.rows)
    complement = vh[5:]
    bilinear = [complement[j].conj().reshape(3, 3) for j in range(4)]
    onb = vh[:5]

    rng = np.random.default_rng(seed)
    rounds = []
    for _ in range(3):
        hits, reliable = _kernel_pv_round(bilinear, onb, kernel.dims, rng, membership_tol)
        rounds.append((hits, reliable))

    reliable_rounds = [hits for hits, ok in rounds if ok]
    if not reliable_rounds:
        raise DegenerateConfiguration(
            "root clusters closer than 1e-6 in all three coordinate changes"
        )
    counts = [len(hits) for hits in reliable_rounds]
    winner = None
    for count in counts:
        if counts.count(count) >= 2 or len(counts) == 1:
            winner = count
            break
    if winner is None:
        raise DegenerateConfiguration(f"coordinate-change rounds disagree on count: {counts}")
    chosen = next(hits for hits in reliable_rounds if len(hits) == winner)

    ordered = sorted(
        chosen, key=lambda h: tuple(np.round(np.concatenate([h[0].real, h[0].imag]), 6))
    )
    out = []
    for vec, fa, fb in ordered:
        coeff = np.linalg.lstsq(kernel.rows.T, vec, rcond=None)[0]
        ratios, _, _ = _product_residuals(vec[None, :], kernel.dims)
        out.append(
            ProductVectorHit(
                coefficients=coeff,
                vector=vec,
                factors=(fa, fb),
                residual=float(ratios[0]),
            )
        )
    return out


# --- the four bipartite kernel product vectors of a 2x2x2 entangled state --


def _permute_party_vector(vec: np.ndarray, dims, order) -> np.ndarray:
    return np.ascontiguousarray(
        np.asarray(vec).reshape(tuple(dims)).transpose(order)
    ).ravel()


def bipartite_kernel_product_vectors_2x2x2(
    state: MultiState, cut: int, seed: int = 0
) -> list[np.ndarray]:
    """The four kernel product vectors across one cut of a three-qubit PPTES.

    Writes the state as a sum of four pure product states across the
    ``cut`` : rest split (the four product vectors its range contains),
    builds the basis reciprocal to the rest-side vectors, and returns the
    four kernel vectors (orthogonal cut factor) x (reciprocal vector) in
    the original party order.  Raises :class:`NotApplicable` unless the
    state is a 2x2x2 PPT state of rank four with completely entangled
    range.
    """
    if state.dims != (2, 2, 2):
        raise NotApplicable(f"state dims {state.dims} are not (2, 2, 2)")
    if cut not in (1, 2, 3):
        raise NotApplicable(f"cut must be 1, 2 or 3, got {cut}")
    sd = spectral(state)
    if _rank_from_eigenvalues(sd.eigenvalues, state.cfg.tol_rank) != 4:
        raise NotApplicable("state does not have rank four")
    if not is_ppt(state).is_ppt:
        raise NotApplicable("state is not PPT")
    meets, _ = subspace_meets_segre(
        SubspaceBasis(sd.eigenvectors[:, :4].T, state.dims), state.cfg
    )
    if meets:
        raise NotApplicable("range contains a product vector (state is separable)")

    order = (cut - 1,) + tuple(i for i in range(3) if i != cut - 1)
    perm_idx = _permute_party_vector(np.arange(8), (2, 2, 2), order)
    matrix = state.matrix[np.ix_(perm_idx, perm_idx)]

    eigs, vecs = np.linalg.eigh(matrix)
    kernel_rows = vecs[:, np.abs(eigs) <= state.cfg.tol_rank * np.abs(eigs).max()].T
    if kernel_rows.shape[0] != 4:
        raise NotApplicable("kernel is not four-dimensional")
    bilinear = [kernel_rows[j].conj().reshape(2, 4) for j in range(4)]

    rng = np.random.default_rng(seed)
    for _ in range(3):
        u, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        samples = np.exp(2j * np.pi * np.arange(8) / 8)
        values = np.empty(8, dtype=complex)
        for m, z in enumerate(samples):
            a = u @ np.array([1.0, z])
            values[m] = np.linalg.det(np.array([a @ mj for mj in bilinear]))
        quartic = _trim_poly(np.fft.fft(values) / 8)
        if quartic.shape[0] == 5:
            break
    else:
        raise NotApplicable("could not isolate four range product vectors")

    cut_factors = []
    rest_vectors = []
    for z in np.roots(quartic[::-1]):
        a = u @ np.array([1.0, z])
        a /= np.linalg.norm(a)
        coeff_mat = np.array([a @ mj for mj in bilinear])
        _, sv, vh = np.linalg.svd(coeff_mat)
        if sv[3] > 1e-6 * sv[0]:
            raise NotApplicable("range product vector is not isolated")
        cut_factors.append(a)
        rest_vectors.append(vh[3].conj())

    # positive weights reconstructing the state certify the decomposition
    columns = [
        np.outer(np.kron(a, psi), np.kron(a, psi).conj()).ravel()
        for a, psi in zip(cut_factors, rest_vectors)
    ]
    weights, *_ = np.linalg.lstsq(np.column_stack(columns), matrix.ravel(), rcond=None)
    recon = np.column_stack(columns) @ weights
    if np.linalg.norm(recon - matrix.ravel()) > 1e-7 * np.linalg.norm(matrix):
        raise NotApplicable("state is not a sum of four product states across the cut")
    if np.any(weights.real <= 0) or np.abs(weights.imag).max() > 1e-7 * weights.real.max():
        raise NotApplicable("decomposition weights are not positive")

    psi_mat = np.column_stack(rest_vectors)
    reciprocal = np.linalg.inv(psi_mat).conj().T
    inverse_order = tuple(np.argsort(order))
    out = []
    for i, a in enumerate(cut_factors):
        a_perp = np.array([-np.conj(a[1]), np.conj(a[0])])
        vec = np.kron(a_perp, reciprocal[:, i])
        vec /= np.linalg.norm(vec)
        out.append(_permute_party_vector(vec, (2, 2, 2), inverse_order))
    return out
