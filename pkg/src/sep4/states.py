"""Multipartite operators and the tensor-index arithmetic they need.

States live on a tensor product of finite-dimensional parties.  The
composite index is row-major mixed-radix over ``dims`` with party 1 most
significant; every module in the package shares that convention.
Parties are numbered 1..n and subsets of parties are passed as iterables
of 1-based indices.  States are stored dense and are not normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import (
    AllPartiesTrivial,
    DimensionMismatch,
    EigFailure,
    EmptySubset,
    NotHermitian,
    NotPositive,
    StateFormatError,
    ZeroVector,
)
from .grassmann import SubspaceBasis

MAX_TOTAL_DIM = 4096


@dataclass(frozen=True)
class ToleranceConfig:
    """Relative tolerances for every numerical decision the package makes."""

    tol_herm: float = 1e-10
    tol_psd: float = 1e-9
    tol_rank: float = 1e-9
    tol_orth: float = 1e-9
    tol_recon: float = 1e-9
    tol_product: float = 1e-8
    tol_chow: float = 1e-8

    def __post_init__(self):
        for name, value in vars(self).items():
            v = float(value)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")


DEFAULT_TOLERANCES = ToleranceConfig()


@dataclass(frozen=True)
class MultiState:
    """Hermitian PSD operator on a tensor product of parties, unnormalized.

    Construct through :func:`new_state`, which validates; operations such
    as :func:`partial_transpose` build instances directly and may return
    operators that are Hermitian but not PSD.  Instances are immutable
    (the matrix buffer is frozen) and safe to share across threads.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    cfg: ToleranceConfig = DEFAULT_TOLERANCES

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues sorted descending with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class CompressionResult:
    """Support-compressed state plus the per-party isometries used."""

    state: MultiState
    isometries: tuple[np.ndarray, ...]
    kept: tuple[int, ...]
    dropped: tuple[int, ...]


def new_state(matrix, dims, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> MultiState:
    """Validate and build a :class:`MultiState`.

    Hermiticity is enforced by symmetrization when the asymmetry is below
    ``tol_herm`` (relative to the largest entry); larger asymmetry is an
    error, as is any eigenvalue below ``-tol_psd * lambda_max``.
    """
    m = np.asarray(matrix, dtype=complex)
    dims = tuple(int(x) for x in dims)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch("matrix contains non-finite entries")
    d = m.shape[0]
    if any(x < 1 for x in dims) or math.prod(dims) != d:
        raise DimensionMismatch(f"dims {dims} do not multiply to matrix size {d}")
    if d > MAX_TOTAL_DIM:
        raise DimensionMismatch(f"total dimension {d} exceeds supported {MAX_TOTAL_DIM}")

    scale = np.abs(m).max()
    if scale == 0.0:
        raise NotPositive("zero matrix is not a state")
    asym = np.abs(m - m.conj().T).max()
    if asym > cfg.tol_herm * scale:
        raise NotHermitian(f"relative asymmetry {asym / scale:.3e} exceeds tol_herm")
    m = 0.5 * (m + m.conj().T)

    eigs = np.linalg.eigvalsh(m)
    lam_max = eigs[-1]
    if lam_max <= 0.0:
        raise NotPositive("largest eigenvalue is not positive")
    if eigs[0] < -cfg.tol_psd * lam_max:
        raise NotPositive(
            f"eigenvalue {eigs[0]:.3e} below -tol_psd * lambda_max = "
            f"{-cfg.tol_psd * lam_max:.3e}"
        )
    return MultiState(m, dims, cfg)


def normalize_subset(subset, n: int) -> tuple[int, ...]:
    """Sorted tuple of distinct 1-based party indices within [1, n]."""
    s = sorted({int(x) for x in subset})
    if any(x < 1 or x > n for x in s):
        raise DimensionMismatch(f"subset {s} not within parties 1..{n}")
    return tuple(s)


def partial_transpose(state: MultiState, subset) -> MultiState:
    """Transpose the row/column indices of every party in ``subset``.

    Applying the same subset twice returns the input bit-exactly; the
    result is Hermitian but in general not PSD.
    """
    s = normalize_subset(subset, state.n)
    if not s:
        return state
    n = state.n
    t = state.matrix.reshape(state.dims + state.dims)
    perm = list(range(2 * n))
    for p in s:
        perm[p - 1], perm[n + p - 1] = perm[n + p - 1], perm[p - 1]
    out = np.ascontiguousarray(t.transpose(perm)).reshape(state.d, state.d)
    return MultiState(out, state.dims, state.cfg)


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def reduced_state(state: MultiState, keep) -> MultiState:
    """Partial trace over the complement of ``keep``; preserves the trace."""
    k = normalize_subset(keep, state.n)
    if not k:
        raise EmptySubset("keep must name at least one party")
    n = state.n
    if len(k) == n:
        return state
    if 2 * n > len(_LETTERS):
        raise DimensionMismatch("too many parties for the einsum path")
    row = list(_LETTERS[:n])
    col = list(_LETTERS[n:2 * n])
    for p in range(1, n + 1):
        if p not in k:
            col[p - 1] = row[p - 1]
    out_sub = "".join(row[p - 1] for p in k) + "".join(_LETTERS[n + p - 1] for p in k)
    spec = "".join(row) + "".join(col) + "->" + out_sub
    t = state.matrix.reshape(state.dims + state.dims)
    dk = math.prod(state.dims[p - 1] for p in k)
    out = np.einsum(spec, t).reshape(dk, dk)
    new_dims = tuple(state.dims[p - 1] for p in k)
    return MultiState(out, new_dims, state.cfg)


def spectral(state: MultiState) -> SpectralData:
    """Full Hermitian eigendecomposition, eigenvalues descending."""
    try:
        w, v = np.linalg.eigh(state.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK hiccup
        raise EigFailure(str(exc)) from exc
    order = np.argsort(w)[::-1]
    return SpectralData(eigenvalues=w[order], eigenvectors=v[:, order])


def _rank_from_eigenvalues(eigs: np.ndarray, tol_rank: float) -> int:
    scale = np.abs(eigs).max() if eigs.size else 0.0
    if scale == 0.0:
        return 0
    return int(np.count_nonzero(np.abs(eigs) > tol_rank * scale))


def rank_of(state: MultiState) -> int:
    """Number of eigenvalues above ``tol_rank * lambda_max`` in magnitude."""
    return _rank_from_eigenvalues(spectral(state).eigenvalues, state.cfg.tol_rank)


def range_basis(state: MultiState) -> SubspaceBasis:
    """Eigenvectors of the significant eigenvalues, as basis rows."""
    sd = spectral(state)
    r = _rank_from_eigenvalues(sd.eigenvalues, state.cfg.tol_rank)
    return SubspaceBasis(sd.eigenvectors[:, :r].T, state.dims)


def kernel_basis(state: MultiState) -> SubspaceBasis:
    """Eigenvectors of the negligible eigenvalues, as basis rows."""
    sd = spectral(state)
    r = _rank_from_eigenvalues(sd.eigenvalues, state.cfg.tol_rank)
    return SubspaceBasis(sd.eigenvectors[:, r:].T, state.dims)


def local_ranks(state: MultiState) -> list[int]:
    """Rank of each single-party reduced state."""
    return [rank_of(reduced_state(state, (p,))) for p in range(1, state.n + 1)]


def compress_support(state: MultiState) -> CompressionResult:
    """Restrict every party to the range of its reduced state.

    Parties whose reduced state has rank one are removed entirely; rank,
    PPT status and separability are unaffected.  Raises
    :class:`AllPartiesTrivial` when nothing would remain (the state is a
    pure product state).
    """
    n = state.n
    isometries = []
    ranks = []
    for p in range(1, n + 1):
        sd = spectral(reduced_state(state, (p,)))
        r = _rank_from_eigenvalues(sd.eigenvalues, state.cfg.tol_rank)
        isometries.append(np.ascontiguousarray(sd.eigenvectors[:, :r]))
        ranks.append(r)
    if all(r == 1 for r in ranks):
        raise AllPartiesTrivial("every single-party reduced state has rank one")
    w = reduce(np.kron, isometries)
    m = w.conj().T @ state.matrix @ w
    m = 0.5 * (m + m.conj().T)
    kept = tuple(p for p in range(1, n + 1) if ranks[p - 1] > 1)
    dropped = tuple(p for p in range(1, n + 1) if ranks[p - 1] == 1)
    new_dims = tuple(ranks[p - 1] for p in kept)
    return CompressionResult(
        state=MultiState(m, new_dims, state.cfg),
        isometries=tuple(isometries),
        kept=kept,
        dropped=dropped,
    )


def party_flattening(v: np.ndarray, dims, party_axis: int) -> np.ndarray:
    """Matrix view of ``v`` with the given 0-based party index as rows."""
    dims = tuple(dims)
    t = np.asarray(v).reshape(dims)
    return np.moveaxis(t, party_axis, 0).reshape(dims[party_axis], -1)


def product_factors(v: np.ndarray, dims) -> tuple[np.ndarray, ...]:
    """Per-party factors via sequential leading-singular-vector extraction.

    The tensor product of the returned factors is the best rank-one
    approximation of ``v`` in each sequential split; it reconstructs ``v``
    exactly when ``v`` is a product vector.
    """
    dims = tuple(dims)
    cur = np.asarray(v, dtype=complex).ravel()
    factors = []
    for dp in dims[:-1]:
        m = cur.reshape(dp, -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        factors.append(u[:, 0])
        cur = s[0] * vh[0]
    factors.append(cur)
    return tuple(factors)


def is_product(v, dims, tol_product: float = DEFAULT_TOLERANCES.tol_product):
    """Decide whether ``v`` factorizes across every party.

    True iff for each party the flattening with that party's index as rows
    has second singular value at most ``tol_product * ||v||``.  Factors are
    returned on success, ``None`` otherwise.
    """
    dims = tuple(int(x) for x in dims)
    vec = np.asarray(v, dtype=complex).ravel()
    if vec.shape[0] != math.prod(dims):
        raise DimensionMismatch(f"vector length {vec.shape[0]} != prod{dims}")
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ZeroVector("cannot factor the zero vector")
    for axis, dp in enumerate(dims):
        if dp == 1:
            continue
        sv = np.linalg.svd(party_flattening(vec, dims, axis), compute_uv=False)
        if sv.shape[0] >= 2 and sv[1] > tol_product * norm:
            return False, None
    return True, product_factors(vec, dims)


def assemble_product(factors) -> np.ndarray:
    """Tensor product of per-party factor vectors."""
    return reduce(np.kron, [np.asarray(f, dtype=complex).ravel() for f in factors])


# --- state JSON -----------------------------------------------------------

def state_to_dict(state: MultiState) -> dict:
    """Dense row-major JSON form: entries as [re, im] pairs."""
    return {
        "dims": list(state.dims),
        "matrix": [
            [[float(z.real), float(z.imag)] for z in row] for row in state.matrix
        ],
    }


def state_from_dict(obj, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> MultiState:
    """Parse and validate the state JSON form; rejects NaN/Inf."""
    if not isinstance(obj, dict) or "dims" not in obj or "matrix" not in obj:
        raise StateFormatError("state JSON must carry 'dims' and 'matrix'")
    dims = obj["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(x, int) for x in dims):
        raise StateFormatError("'dims' must be a nonempty list of integers")
    raw = obj["matrix"]
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateFormatError(f"'matrix' is not a dense [re, im] grid: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise StateFormatError(f"'matrix' has shape {arr.shape}, expected (d, d, 2)")
    if not np.all(np.isfinite(arr)):
        raise StateFormatError("'matrix' contains NaN or Inf")
    m = arr[:, :, 0] + 1j * arr[:, :, 1]
    try:
        return new_state(m, dims, cfg)
    except (DimensionMismatch, NotHermitian, NotPositive) as exc:
        raise StateFormatError(str(exc)) from exc
