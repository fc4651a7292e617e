import json

import numpy as np
import pytest

from sep4.engine import (
    ClassificationReport,
    classify,
    length_bounds,
    report_from_dict,
    report_to_dict,
)
from sep4.errors import NotSeparableVerdict
from sep4.gallery import (
    conjugate_local,
    divincenzo_state,
    random_local_unitaries,
    random_separable,
    two_qutrit_ab_state,
)
from sep4.oracle import find_product_vector
from sep4.states import assemble_product, new_state, partial_transpose, range_basis


def ket(*amps):
    return np.asarray(amps, dtype=complex)


def ghz_projector():
    v = np.zeros(8)
    v[0] = 1.0
    v[7] = 1.0
    return new_state(np.outer(v, v), (2, 2, 2))


class TestClassifyRules:
    def test_divincenzo_chow222(self):
        rep = classify(divincenzo_state())
        assert rep.verdict == "Entangled"
        assert rep.rule == "Chow222"
        assert rep.rank == 4
        assert rep.local_ranks == (2, 2, 2)
        assert all(rec.rank == 4 for rec in rep.ppt.records)

    def test_family_chow33_entangled(self):
        rep = classify(two_qutrit_ab_state(2.0, 0.5))
        assert rep.verdict == "Entangled"
        assert rep.rule == "Chow33"
        assert rep.chow_abs > 1e-5
        assert not rep.low_confidence

    def test_family_chow33_separable_with_decomposition(self):
        rep = classify(two_qutrit_ab_state(0.0, 1.0))
        assert rep.verdict == "Separable"
        assert rep.rule == "Chow33"
        assert rep.chow_abs <= 1e-8
        assert rep.decomposition is not None
        assert rep.decomposition.length_upper_bound <= 6

    def test_two_products_on_mixed_dims(self):
        rep = classify(random_separable((2, 3, 4), 2, seed=11))
        assert rep.verdict == "Separable"
        assert rep.rule == "PPTRank2"
        assert rep.decomposition.length_upper_bound == 2

    def test_ghz_projector_rank1_non_product(self):
        rep = classify(ghz_projector())
        assert rep.verdict == "Entangled"
        assert rep.rule == "Rank1NonProduct"
        assert rep.ppt is not None and not rep.ppt.is_ppt

    def test_pure_product(self):
        v = assemble_product((ket(1, 1j) / np.sqrt(2), ket(0, 1)))
        rep = classify(new_state(np.outer(v, v.conj()), (2, 2)))
        assert rep.verdict == "Separable"
        assert rep.rule == "Rank1Product"
        assert rep.length_bounds == (1, 1)
        assert rep.decomposition.length_upper_bound == 1

    def test_npt_rank_two(self):
        ghz = np.zeros(8)
        ghz[0] = ghz[7] = 1.0
        prod = np.zeros(8)
        prod[1] = 1.0
        m = np.outer(ghz, ghz) + np.outer(prod, prod)
        rep = classify(new_state(m, (2, 2, 2)))
        assert rep.verdict == "Entangled"
        assert rep.rule == "NPT"

    def test_full_rank_two_qubit_shape_branch(self):
        rep = classify(new_state(np.eye(4), (2, 2)))
        assert rep.verdict == "Separable"
        assert rep.rule == "PPTRank4Shape"
        assert rep.length_bounds == (4, 4)

    def test_rank4_on_2x4_shape_branch(self):
        rep = classify(random_separable((2, 4), 4, seed=9))
        assert rep.verdict == "Separable"
        assert rep.rule == "PPTRank4Shape"
        assert rep.length_bounds == (4, 4)

    def test_rank_above_four_out_of_scope(self):
        rep = classify(new_state(np.eye(6), (2, 3)))
        assert rep.verdict == "OutOfScope"
        assert rep.rule == "RankAbove4"
        assert rep.length_bounds is None

    def test_embedded_3x3_classified_after_compression(self):
        st = two_qutrit_ab_state(1.0, 1.0)
        rng = np.random.default_rng(0)

        def isometry(dout, din, seed):
            g = np.random.default_rng(seed)
            q, _ = np.linalg.qr(
                g.standard_normal((dout, din)) + 1j * g.standard_normal((dout, din))
            )
            return q

        w = np.kron(isometry(4, 3, 1), isometry(5, 3, 2))
        big = new_state(w @ st.matrix @ w.conj().T, (4, 5))
        rep = classify(big)
        assert rep.compressed_dims == (3, 3)
        assert rep.verdict == "Entangled"
        assert rep.rule == "Chow33"

    def test_product_times_qutrit_pair_compresses(self):
        sigma = random_separable((3, 3), 2, seed=13)
        m = np.kron(np.diag([1.0, 0.0]).astype(complex), sigma.matrix)
        rep = classify(new_state(m, (2, 3, 3)))
        assert rep.dropped_parties == (1,)
        assert rep.verdict == "Separable"
        assert rep.rule == "PPTRank2"


class TestLengthBounds:
    def test_rank2(self):
        rep = classify(random_separable((2, 2, 2), 2, seed=1))
        assert length_bounds(rep) == (2, 2)

    def test_rank3_two_qubit_support(self):
        rep = classify(random_separable((2, 2), 3, seed=2))
        assert length_bounds(rep) == (3, 4)

    def test_rank3_wider_support(self):
        rep = classify(random_separable((3, 3), 3, seed=3))
        assert length_bounds(rep) == (3, 3)

    def test_rank4_three_qubit(self):
        rep = classify(random_separable((2, 2, 2), 4, seed=4))
        assert rep.rank == 4 and rep.compressed_dims == (2, 2, 2)
        assert length_bounds(rep) == (4, 6)

    def test_rank4_with_local_rank_four(self):
        rep = classify(random_separable((2, 4), 4, seed=9))
        assert length_bounds(rep) == (4, 4)

    def test_rank4_tripartite_with_qutrit(self):
        rep = classify(random_separable((2, 2, 3), 4, seed=6))
        assert rep.rank == 4 and rep.compressed_dims == (2, 2, 3)
        assert length_bounds(rep) == (4, 5)

    def test_entangled_verdict_rejected(self):
        rep = classify(divincenzo_state())
        with pytest.raises(NotSeparableVerdict):
            length_bounds(rep)


class TestEngineConsistency:
    def test_chow_entangled_means_oracle_finds_nothing(self):
        st = two_qutrit_ab_state(1.0, 1.0)
        rep = classify(st)
        assert rep.verdict == "Entangled"
        assert find_product_vector(range_basis(st), restarts=300, seed=0) is None

    def test_chow_separable_means_oracle_finds_vector(self):
        st = two_qutrit_ab_state(0.0, 1.0)
        rep = classify(st)
        assert rep.verdict == "Separable"
        assert find_product_vector(range_basis(st), restarts=300, seed=0) is not None

    def test_verdict_invariant_under_local_unitaries(self):
        for seed, state in [(0, divincenzo_state()), (1, two_qutrit_ab_state(0.0, 1.0))]:
            base = classify(state).verdict
            rotated = conjugate_local(state, random_local_unitaries(state.dims, seed + 10))
            assert classify(rotated).verdict == base

    def test_verdict_invariant_under_partial_transposes(self):
        st = divincenzo_state()
        base = classify(st).verdict
        for subset in [(1,), (2,), (3,), (1, 2), (1, 2, 3)]:
            pt = partial_transpose(st, subset)
            assert classify(new_state(pt.matrix, pt.dims)).verdict == base

    def test_verdict_invariant_under_scaling(self):
        st = two_qutrit_ab_state(1.0, 1.0)
        base = classify(st).verdict
        for factor in (1e-3, 1e3):
            assert classify(new_state(st.matrix * factor, st.dims)).verdict == base


class TestReportSerialization:
    @pytest.mark.parametrize(
        "state",
        [
            divincenzo_state(),
            two_qutrit_ab_state(0.0, 1.0),
            new_state(np.eye(6), (2, 3)),
        ],
        ids=["entangled", "separable", "out-of-scope"],
    )
    def test_json_round_trip(self, state):
        report = classify(state)
        first = report_to_dict(report)
        back = report_from_dict(json.loads(json.dumps(first)))
        assert isinstance(back, ClassificationReport)
        assert report_to_dict(back) == first

    def test_rule_matches_enum_string(self):
        payload = report_to_dict(classify(divincenzo_state()))
        assert payload["rule"] == "Chow222"
        assert payload["verdict"] == "Entangled"


class TestBorderlineFlag:
    def test_low_confidence_near_threshold(self):
        from sep4.states import ToleranceConfig

        state = divincenzo_state()
        base = classify(state)
        assert not base.low_confidence
        # pick the threshold so the Chow value lands within a factor 10
        cfg = ToleranceConfig(tol_chow=base.chow_abs / 3)
        shifted = new_state(state.matrix, state.dims, cfg)
        rep = classify(shifted, decompose=False)
        assert rep.verdict == "Entangled"
        assert rep.low_confidence
