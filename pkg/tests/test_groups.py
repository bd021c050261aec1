import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from unicomp import (
    ComplexMatrix,
    Group,
    ParameterRangeWarning,
    ParamMatrix,
    apply_factor,
    build_array,
    build_unitary,
    factor_sequence,
    frame_mask,
    generator,
)
from unicomp.haar import HaarStream, sample_params

from helpers import assert_params_in_range

U, SU = Group.UNITARY, Group.SPECIAL_UNITARY


class TestGenerator:
    def test_projector(self):
        assert generator("P", 1, None, 2).allclose(np.diag([1.0, 0.0]))

    def test_y(self):
        assert generator("Y", 1, 2, 2).allclose(np.array([[0, -1j], [1j, 0]]))

    def test_z(self):
        assert generator("Z", 1, 2, 2).allclose(np.diag([1.0, -1.0]))

    @pytest.mark.parametrize("d,m,n", [(3, 1, 3), (5, 2, 4), (4, 3, 4)])
    def test_structure(self, d, m, n):
        p = generator("P", m, None, d).entries
        assert np.allclose(p @ p, p) and np.isclose(np.trace(p), 1.0)
        y = generator("Y", m, n, d).entries
        assert np.allclose(y.T, -y) and np.allclose(y.real, 0.0)
        z = generator("Z", m, n, d).entries
        assert np.allclose(np.diag(np.diagonal(z)), z) and np.isclose(np.trace(z), 0.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            generator("P", 0, None, 2)
        with pytest.raises(ValueError):
            generator("Y", 2, 1, 3)
        with pytest.raises(ValueError):
            generator("Z", 2, 2, 3)
        with pytest.raises(ValueError):
            generator("Q", 1, 2, 3)


class TestApplyFactor:
    def test_rotation_on_identity(self):
        out = apply_factor(ComplexMatrix.identity(2), "Y", 1, 2, math.pi / 2, "right")
        assert out.allclose(np.array([[0.0, 1.0], [-1.0, 0.0]]))

    def test_projector_phase(self):
        out = apply_factor(ComplexMatrix.identity(2), "P", 2, None, math.pi, "right")
        assert out.allclose(np.diag([1.0, -1.0]))

    def test_two_level_phase(self):
        out = apply_factor(ComplexMatrix.identity(2), "Z", 1, 2, math.pi / 2, "right")
        assert out.allclose(np.diag([1j, -1j]))

    @pytest.mark.parametrize("kind", ["P", "Y", "Z"])
    @pytest.mark.parametrize("side", ["left", "right"])
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_matches_dense_exponential(self, kind, side, d):
        rng = np.random.default_rng(hash((kind, side, d)) % 2**32)
        u0 = ComplexMatrix(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
        m, n = (1, d) if d > 1 else (1, None)
        angle = float(rng.uniform(-4, 4))
        g = generator(kind, m, n, d).entries
        e = expm(1j * g * angle)
        expected = e @ u0.entries if side == "left" else u0.entries @ e
        got = apply_factor(u0, kind, m, n, angle, side)
        assert np.allclose(got.entries, expected, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            apply_factor(ComplexMatrix.identity(2), "Y", 1, 3, 0.1, "right")
        with pytest.raises(ValueError):
            apply_factor(ComplexMatrix.identity(2), "Y", 1, 2, math.nan, "right")
        with pytest.raises(ValueError):
            apply_factor(ComplexMatrix.identity(2), "Y", 1, 2, 0.1, "up")


class TestFactorSequence:
    def test_unitary_d2(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(2, U)]
        assert seq == [
            ("P", 2, None, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("P", 1, None, 1, 1),
            ("P", 2, None, 2, 2),
        ]

    def test_unitary_d3(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(3, U)]
        assert seq == [
            ("P", 2, None, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("P", 3, None, 3, 1),
            ("Y", 1, 3, 1, 3),
            ("P", 3, None, 3, 2),
            ("Y", 2, 3, 2, 3),
            ("P", 1, None, 1, 1),
            ("P", 2, None, 2, 2),
            ("P", 3, None, 3, 3),
        ]

    def test_unitary_d4(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(4, U)]
        assert seq == [
            ("P", 2, None, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("P", 3, None, 3, 1),
            ("Y", 1, 3, 1, 3),
            ("P", 4, None, 4, 1),
            ("Y", 1, 4, 1, 4),
            ("P", 3, None, 3, 2),
            ("Y", 2, 3, 2, 3),
            ("P", 4, None, 4, 2),
            ("Y", 2, 4, 2, 4),
            ("P", 4, None, 4, 3),
            ("Y", 3, 4, 3, 4),
            ("P", 1, None, 1, 1),
            ("P", 2, None, 2, 2),
            ("P", 3, None, 3, 3),
            ("P", 4, None, 4, 4),
        ]

    def test_special_d2(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(2, SU)]
        assert seq == [
            ("Z", 1, 2, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("Z", 1, 2, 1, 1),
        ]

    def test_special_d3(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(3, SU)]
        assert seq == [
            ("Z", 1, 2, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("Z", 1, 3, 3, 1),
            ("Y", 1, 3, 1, 3),
            ("Z", 2, 3, 3, 2),
            ("Y", 2, 3, 2, 3),
            ("Z", 1, 3, 1, 1),
            ("Z", 2, 3, 2, 2),
        ]

    def test_special_d4(self):
        seq = [(f.kind, f.i, f.j, f.row, f.col) for f in factor_sequence(4, SU)]
        assert seq == [
            ("Z", 1, 2, 2, 1),
            ("Y", 1, 2, 1, 2),
            ("Z", 1, 3, 3, 1),
            ("Y", 1, 3, 1, 3),
            ("Z", 1, 4, 4, 1),
            ("Y", 1, 4, 1, 4),
            ("Z", 2, 3, 3, 2),
            ("Y", 2, 3, 2, 3),
            ("Z", 2, 4, 4, 2),
            ("Y", 2, 4, 2, 4),
            ("Z", 3, 4, 4, 3),
            ("Y", 3, 4, 3, 4),
            ("Z", 1, 4, 1, 1),
            ("Z", 2, 4, 2, 2),
            ("Z", 3, 4, 3, 3),
        ]


class TestBuildUnitary:
    def test_all_zero_is_identity(self):
        assert build_unitary(ParamMatrix.zeros(3, U)).allclose(np.eye(3))

    def test_single_rotation(self):
        p = ParamMatrix.zeros(2, U).with_value(1, 2, math.pi / 2)
        assert build_unitary(p).allclose(np.array([[0.0, 1.0], [-1.0, 0.0]]))

    def test_special_diagonal_phase(self):
        p = ParamMatrix.zeros(2, SU).with_value(1, 1, math.pi / 2)
        assert build_unitary(p).allclose(np.diag([1j, -1j]))

    @pytest.mark.parametrize("group", [U, SU])
    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_unitarity(self, group, d):
        lam = sample_params(d, group, 40, HaarStream(11, d))
        mats = build_array(lam, group)
        eye = np.eye(d)
        for m in mats:
            assert np.linalg.norm(m.conj().T @ m - eye) < 1e-10
        if group is SU:
            assert np.max(np.abs(np.linalg.det(mats) - 1.0)) < 1e-10

    @pytest.mark.parametrize("group", [U, SU])
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_matches_dense_exponential_product(self, group, d):
        lam = sample_params(d, group, 3, HaarStream(5, d))
        for row in lam:
            dense = np.eye(d, dtype=complex)
            for f in factor_sequence(d, group):
                g = generator(f.kind, f.i, f.j, d).entries
                dense = dense @ expm(1j * g * row[f.row - 1, f.col - 1])
            fast = build_array(row, group)
            assert np.allclose(fast, dense, atol=1e-12)

    def test_out_of_range_warns_but_builds(self):
        p = ParamMatrix.zeros(2, U).with_value(1, 2, 2.0)  # above pi/2
        with pytest.warns(ParameterRangeWarning):
            out = build_unitary(p)
        assert out.unitarity_defect() < 1e-12

    def test_trailing_block_fixes_leading_columns(self):
        d, k = 4, 2
        mask = frame_mask(d, k, "trailing_block", U)
        lam = np.zeros((d, d))
        rng = np.random.default_rng(2)
        for m, n in mask.relevant:
            lam[m - 1, n - 1] = rng.uniform(0.1, 1.2)
        out = build_array(lam, U)
        assert np.allclose(out[:, :k], np.eye(d)[:, :k], atol=1e-12)


class TestFrameMask:
    def test_frame_d4_k1(self):
        mask = frame_mask(4, 1, "frame")
        assert mask.relevant == frozenset({(1, 2), (1, 3), (1, 4), (2, 1), (3, 1), (4, 1)})
        assert len(mask) == 1 * (2 * 4 - 1 - 1)

    def test_subspace_d4_k2(self):
        assert len(frame_mask(4, 2, "subspace")) == 2 * 2 * (4 - 2)

    def test_trailing_d3_k1(self):
        mask = frame_mask(3, 1, "trailing_block", U)
        assert mask.relevant == frozenset({(2, 2), (2, 3), (3, 2), (3, 3)})

    @pytest.mark.parametrize("d,k", [(2, 1), (4, 2), (6, 3), (6, 5)])
    def test_count_formulas(self, d, k):
        assert len(frame_mask(d, k, "frame")) == k * (2 * d - k - 1)
        assert len(frame_mask(d, k, "subspace")) == 2 * k * (d - k)
        assert len(frame_mask(d, k, "trailing_block", U)) == (d - k) ** 2
        expected_su = (d - k) ** 2 - 1 if k < d else 0
        assert len(frame_mask(d, k, "trailing_block", SU)) == expected_su

    def test_errors(self):
        with pytest.raises(ValueError):
            frame_mask(3, 0, "frame")
        with pytest.raises(ValueError):
            frame_mask(3, 4, "frame")
        with pytest.raises(ValueError):
            frame_mask(3, 1, "diagonal")


class TestParamMatrix:
    def test_special_slot_pinned(self):
        lam = np.full((3, 3), 0.5)
        p = ParamMatrix(SU, lam)
        assert p.lam[2, 2] == 0.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ParamMatrix(U, [[0.0, math.inf], [0.0, 0.0]])

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError):
            ParamMatrix(U, [[0.0]])

    def test_range_violations(self):
        p = ParamMatrix.zeros(2, U).with_value(2, 1, 7.0)  # above 2 pi
        assert p.range_violations() == [(2, 1, 7.0)]
        assert not p.in_range()

    def test_param_counts(self):
        assert U.param_count(4) == 16
        assert SU.param_count(4) == 15


@settings(max_examples=25, deadline=None)
@given(
    d=st.integers(min_value=2, max_value=5),
    group=st.sampled_from([U, SU]),
    seed=st.integers(min_value=0, max_value=2**32),
)
def test_build_always_unitary(d, group, seed):
    lam = sample_params(d, group, 1, HaarStream(seed))[0]
    assert_params_in_range(lam, group)
    m = build_array(lam, group)
    assert np.linalg.norm(m.conj().T @ m - np.eye(d)) < 1e-10
