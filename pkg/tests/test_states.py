import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sep4.errors import (
    AllPartiesTrivial,
    DimensionMismatch,
    EmptySubset,
    NotHermitian,
    NotPositive,
    StateFormatError,
    ZeroVector,
)
from sep4.states import (
    MultiState,
    assemble_product,
    compress_support,
    is_product,
    kernel_basis,
    local_ranks,
    new_state,
    partial_transpose,
    range_basis,
    rank_of,
    reduced_state,
    spectral,
    state_from_dict,
    state_to_dict,
)


def ket(*amps):
    return np.asarray(amps, dtype=complex)


def product_state(factors, dims):
    v = assemble_product(factors)
    return new_state(np.outer(v, v.conj()), dims)


def random_state(dims, rank, seed):
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    m = np.zeros((d, d), dtype=complex)
    for _ in range(rank):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        m += np.outer(v, v.conj())
    return new_state(m, dims)


class TestNewState:
    def test_identity_two_qubits(self):
        st_ = new_state(np.eye(4), (2, 2))
        assert st_.trace == pytest.approx(4.0)
        assert st_.dims == (2, 2)

    def test_basis_projector_three_qubits(self):
        v = np.zeros(8)
        v[0] = 1.0
        st_ = new_state(np.outer(v, v), (2, 2, 2))
        assert rank_of(st_) == 1

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(NotPositive):
            new_state(np.diag([1.0, -0.1]), (2,))

    def test_dims_product_mismatch(self):
        with pytest.raises(DimensionMismatch):
            new_state(np.eye(4), (2, 3))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            new_state(np.ones((2, 3)), (2,))

    def test_large_asymmetry_rejected(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 0.5
        with pytest.raises(NotHermitian):
            new_state(m, (2, 2))

    def test_small_asymmetry_symmetrized(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 1e-12
        st_ = new_state(m, (2, 2))
        assert np.abs(st_.matrix - st_.matrix.conj().T).max() == 0.0

    def test_zero_matrix_rejected(self):
        with pytest.raises(NotPositive):
            new_state(np.zeros((2, 2)), (2,))

    def test_nan_rejected(self):
        m = np.eye(4)
        m[0, 0] = np.nan
        with pytest.raises(DimensionMismatch):
            new_state(m, (2, 2))


class TestPartialTranspose:
    def test_empty_subset_is_identity(self):
        st_ = random_state((2, 3), 2, seed=0)
        assert partial_transpose(st_, ()) is st_

    def test_product_state_formula(self):
        a = ket(1, 2j)
        b = ket(3, 1 - 1j, 0.5)
        rho1 = np.outer(a, a.conj())
        rho2 = np.outer(b, b.conj())
        st_ = new_state(np.kron(rho1, rho2), (2, 3))
        got = partial_transpose(st_, (1,)).matrix
        assert np.allclose(got, np.kron(rho1.T, rho2))

    def test_real_symmetric_full_transpose_unchanged(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((4, 4))
        m = m @ m.T
        st_ = new_state(m, (2, 2))
        assert np.array_equal(partial_transpose(st_, (1, 2)).matrix, st_.matrix)

    def test_involution_bit_exact(self):
        st_ = random_state((2, 2, 2), 3, seed=2)
        twice = partial_transpose(partial_transpose(st_, (1, 3)), (1, 3))
        assert np.array_equal(twice.matrix, st_.matrix)

    def test_matches_bruteforce_loops(self):
        st_ = random_state((2, 3), 4, seed=3)
        d1, d2 = 2, 3
        expected = np.zeros_like(st_.matrix)
        for i in range(d1):
            for k in range(d2):
                for j in range(d1):
                    for l in range(d2):
                        expected[i * d2 + k, j * d2 + l] = st_.matrix[j * d2 + k, i * d2 + l]
        assert np.array_equal(partial_transpose(st_, (1,)).matrix, expected)

    @given(st.integers(0, 200), st.integers(0, 7), st.integers(0, 7))
    @settings(max_examples=40, deadline=None)
    def test_group_law(self, seed, mask_a, mask_b):
        st_ = random_state((2, 2, 2), 2, seed=seed)
        sub_a = tuple(p for p in (1, 2, 3) if mask_a & (1 << (p - 1)))
        sub_b = tuple(p for p in (1, 2, 3) if mask_b & (1 << (p - 1)))
        xor = tuple(sorted(set(sub_a) ^ set(sub_b)))
        lhs = partial_transpose(partial_transpose(st_, sub_a), sub_b)
        rhs = partial_transpose(st_, xor)
        assert np.array_equal(lhs.matrix, rhs.matrix)

    def test_complement_is_full_transpose(self):
        st_ = random_state((2, 2, 3), 4, seed=4)
        lhs = partial_transpose(st_, (2, 3)).matrix
        rhs = partial_transpose(st_, (1,)).matrix.T
        assert np.array_equal(lhs, rhs)
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(lhs)), np.sort(np.linalg.eigvalsh(rhs))
        )

    def test_local_rank_invariance(self):
        st_ = random_state((2, 3, 2), 3, seed=5)
        base = local_ranks(st_)
        for subset in [(1,), (2,), (1, 3), (1, 2, 3)]:
            pt = partial_transpose(st_, subset)
            assert local_ranks(MultiState(pt.matrix, pt.dims, pt.cfg)) == base


class TestReducedState:
    def test_ghz_single_party(self):
        v = np.zeros(8)
        v[0] = 1.0
        v[7] = 1.0
        st_ = new_state(np.outer(v, v), (2, 2, 2))
        red = reduced_state(st_, (1,))
        assert np.allclose(red.matrix, np.diag([1.0, 1.0]))

    def test_product_state_factor(self):
        a = ket(1, 1j) / np.sqrt(2)
        b = ket(2, 1, 1)
        st_ = product_state((a, b), (2, 3))
        red = reduced_state(st_, (2,))
        expect = np.outer(b, b.conj()) * np.vdot(a, a)
        assert np.allclose(red.matrix, expect)

    def test_keep_all_is_identity(self):
        st_ = random_state((2, 2), 2, seed=6)
        assert reduced_state(st_, (1, 2)) is st_

    def test_empty_keep_rejected(self):
        st_ = random_state((2, 2), 2, seed=7)
        with pytest.raises(EmptySubset):
            reduced_state(st_, ())

    def test_trace_preserved(self):
        st_ = random_state((2, 3, 2), 4, seed=8)
        for keep in [(1,), (2,), (3,), (1, 3)]:
            assert reduced_state(st_, keep).trace == pytest.approx(st_.trace)

    def test_trace_of_transpose_commutes(self):
        st_ = random_state((2, 3), 3, seed=9)
        lhs = reduced_state(partial_transpose(st_, (1,)), (1,)).matrix
        rhs = reduced_state(st_, (1,)).matrix.T
        assert np.allclose(lhs, rhs)


class TestSpectral:
    def test_diagonal(self):
        sd = spectral(new_state(np.diag([3.0, 1.0]), (2,)))
        assert np.allclose(sd.eigenvalues, [3.0, 1.0])

    def test_all_ones(self):
        sd = spectral(new_state(np.ones((2, 2)), (2,)))
        assert np.allclose(sd.eigenvalues, [2.0, 0.0])

    def test_reconstruction_and_orthonormality(self):
        st_ = random_state((2, 2, 2), 5, seed=10)
        sd = spectral(st_)
        recon = (sd.eigenvectors * sd.eigenvalues) @ sd.eigenvectors.conj().T
        lam = sd.eigenvalues[0]
        assert np.linalg.norm(recon - st_.matrix) <= 1e-9 * lam
        gram = sd.eigenvectors.conj().T @ sd.eigenvectors
        assert np.abs(gram - np.eye(st_.d)).max() <= 1e-9


class TestRanks:
    def test_rank_one_projector(self):
        v = np.zeros(8)
        v[0] = 1.0
        assert rank_of(new_state(np.outer(v, v), (2, 2, 2))) == 1

    def test_range_plus_kernel_dims(self):
        st_ = random_state((3, 3), 4, seed=11)
        assert range_basis(st_).k + kernel_basis(st_).k == 9
        assert range_basis(st_).k == 4

    def test_local_ranks_product(self):
        st_ = product_state((ket(1, 0), ket(1, 0), ket(1, 0)), (2, 2, 2))
        assert local_ranks(st_) == [1, 1, 1]

    def test_scale_invariant(self):
        st_ = random_state((3, 3), 2, seed=12)
        small = new_state(st_.matrix * 1e-6, st_.dims)
        assert rank_of(small) == rank_of(st_) == 2


class TestCompressSupport:
    def test_drops_rank_one_party(self):
        sigma = random_state((3, 3), 9, seed=13)
        m = np.kron(np.diag([1.0, 0.0, 0.0]).astype(complex), sigma.matrix)
        st_ = new_state(m, (3, 3, 3))
        comp = compress_support(st_)
        assert comp.dropped == (1,)
        assert comp.state.dims == (3, 3)
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(comp.state.matrix)),
            np.sort(np.linalg.eigvalsh(sigma.matrix)),
        )

    def test_full_support_keeps_spectrum(self):
        st_ = random_state((2, 2), 4, seed=14)
        comp = compress_support(st_)
        assert comp.state.dims == (2, 2)
        assert comp.dropped == ()
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(comp.state.matrix)),
            np.sort(np.linalg.eigvalsh(st_.matrix)),
        )

    def test_zero_padded_embedding_round_trip(self):
        small = random_state((2, 2, 2), 3, seed=15)
        iso = np.zeros((3, 2), dtype=complex)
        iso[:2, :] = np.eye(2)
        w = np.kron(np.kron(iso, iso), iso)
        big = new_state(w @ small.matrix @ w.conj().T, (3, 3, 3))
        comp = compress_support(big)
        assert comp.state.dims == (2, 2, 2)
        assert rank_of(comp.state) == rank_of(small) == 3

    def test_pure_product_raises(self):
        st_ = product_state((ket(1, 1j), ket(0, 1)), (2, 2))
        with pytest.raises(AllPartiesTrivial):
            compress_support(st_)

    def test_rank_preserved(self):
        st_ = random_state((2, 3, 2), 4, seed=16)
        comp = compress_support(st_)
        assert rank_of(comp.state) == rank_of(st_)


class TestIsProduct:
    def test_basis_product(self):
        ok, factors = is_product(assemble_product((ket(1, 0), ket(1, 0), ket(1, 0))), (2, 2, 2))
        assert ok
        assert len(factors) == 3

    def test_ghz_not_product(self):
        v = np.zeros(8)
        v[0] = 1.0
        v[7] = 1.0
        ok, factors = is_product(v, (2, 2, 2))
        assert not ok
        assert factors is None

    def test_upb_member_with_factors(self):
        plus = ket(1, 1) / np.sqrt(2)
        one = ket(0, 1)
        minus = ket(1, -1) / np.sqrt(2)
        v = assemble_product((plus, one, minus))
        ok, factors = is_product(v, (2, 2, 2))
        assert ok
        assert np.linalg.norm(assemble_product(factors) - v) <= 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            is_product(np.zeros(4), (2, 2))

    @given(st.integers(0, 500))
    @settings(max_examples=30, deadline=None)
    def test_random_products_factorize(self, seed):
        rng = np.random.default_rng(seed)
        factors = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in (2, 3, 2)]
        v = assemble_product(factors)
        ok, got = is_product(v, (2, 3, 2))
        assert ok
        assert np.linalg.norm(assemble_product(got) - v) <= 1e-10 * np.linalg.norm(v)


class TestStateJson:
    def test_round_trip(self):
        st_ = random_state((2, 3), 3, seed=17)
        back = state_from_dict(state_to_dict(st_))
        assert back.dims == st_.dims
        assert np.array_equal(back.matrix, st_.matrix)

    def test_rejects_nan(self):
        obj = state_to_dict(random_state((2,), 1, seed=18))
        obj["matrix"][0][0][0] = float("nan")
        with pytest.raises(StateFormatError):
            state_from_dict(obj)

    def test_rejects_missing_keys(self):
        with pytest.raises(StateFormatError):
            state_from_dict({"dims": [2]})

    def test_rejects_ragged(self):
        with pytest.raises(StateFormatError):
            state_from_dict({"dims": [2], "matrix": [[[1, 0]], [[0, 0], [1, 0]]]})
