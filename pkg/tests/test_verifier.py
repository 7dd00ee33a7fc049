import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from iac.errors import ZeroVector
from iac.graph import AlignmentEquationSet, IacGraph
from iac.solver import PrecoderSet, design_receivers
from iac.system_model import SystemConfig, generate_channels
from iac.verifier import (DesignReport, Tolerances, check_dimension_condition, numerical_rank,
                          span_residual, verify_design)
from oracles import rank_gauss, sin_angle, sin_angle_cosine_form

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def cvec(n):
    return st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite)).map(
        lambda p: p[0] + 1j * p[1]).filter(lambda v: np.linalg.norm(v) > 1e-3)


class TestSpanResidual:
    def test_complex_scaling(self):
        v = np.array([1 + 2j, -0.5, 3j])
        assert span_residual(v, 3j * v) < 1e-15

    def test_orthogonal(self):
        assert abs(span_residual(np.array([1, 0j]), np.array([0, 1j])) - 1) < 1e-15

    def test_45_degrees(self):
        r = span_residual(np.array([1, 0]), np.array([1, 1]) / math.sqrt(2))
        assert abs(r - 0.7071067811865476) < 1e-12

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            span_residual(np.zeros(3), np.ones(3))

    @given(cvec(4), cvec(4))
    def test_symmetric(self, a, b):
        assert span_residual(a, b) == span_residual(b, a)

    @given(cvec(4), cvec(4), st.floats(0, 2 * math.pi))
    def test_phase_invariant(self, a, b, th):
        assert abs(span_residual(a, b) - span_residual(np.exp(1j * th) * a, b)) < 1e-14

    @given(cvec(3), cvec(3))
    def test_matches_oracle(self, a, b):
        r = span_residual(a, b)
        assert 0 <= r <= 1
        assert abs(r - sin_angle(a, b)) < 1e-12
        if r > 1e-3:
            assert abs(r - sin_angle_cosine_form(a, b)) < 1e-9

    def test_accurate_near_zero(self):
        a = np.array([1.0, 0, 0], dtype=complex)
        b = np.array([1.0, 1e-12, 0], dtype=complex)
        assert abs(span_residual(a, b) - 1e-12) < 1e-20


class TestRank:
    @given(st.integers(1, 5), st.integers(1, 5), st.data())
    def test_matches_gaussian_elimination(self, n, m, data):
        # low-rank integer matrices built as products of small factors
        r = data.draw(st.integers(0, min(n, m)))
        A = np.array(data.draw(st.lists(st.lists(st.integers(-3, 3), min_size=r, max_size=r),
                                         min_size=n, max_size=n)), dtype=float).reshape(n, r)
        B = np.array(data.draw(st.lists(st.lists(st.integers(-3, 3), min_size=m, max_size=m),
                                         min_size=r, max_size=r)), dtype=float).reshape(r, m)
        M = A @ B if r else np.zeros((n, m))
        assert numerical_rank(M) == rank_gauss(M.astype(int).tolist())

    def test_empty(self):
        assert numerical_rank(np.zeros((3, 0))) == 0


class TestVerifyDesign:
    def test_optimal_passes(self, optimal_design):
        r = optimal_design.report
        assert r.passed, r.failures
        assert r.total_dof_claimed == 12
        assert all(q["sin_angle"] < 1e-8 for q in r.per_equation_residuals)
        assert all(c.sigma_min_effective > 1e-6 for c in r.per_receiver)
        assert [c.signal_rank for c in r.per_receiver] == [3, 3, 2, 2, 2]

    def test_random_precoders_fail(self, optimal_design):
        D = optimal_design
        rng = np.random.default_rng(0)
        V = PrecoderSet(tuple(
            (lambda X: X / np.linalg.norm(X, axis=0))(
                rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape))
            for v in D.precoders.V))
        r = verify_design(D.channels, V, D.receivers, D.equations, D.config)
        assert not r.passed
        assert max(c.max_zf_residual for c in r.per_receiver) > 1e-2

    def test_zf_only_design(self):
        c = SystemConfig.from_tuple(6, (2, 2, 2))
        ch = generate_channels(c, 0)
        rng = np.random.default_rng(0)
        V = PrecoderSet(tuple(np.linalg.qr(rng.standard_normal((6, 2)) + 0j)[0] for _ in range(3)))
        U = design_receivers(ch, V, c)
        eqs = AlignmentEquationSet.from_graph(IacGraph(tuple(c.streams_of_users(2)), ()))
        r = verify_design(ch, V, U, eqs, c)
        assert r.passed and r.per_equation_residuals == []

    def test_fig2_dimensions(self, fig2_design):
        D = fig2_design
        dim = check_dimension_condition(D.channels, D.precoders, 1)
        assert dim == {"signal_rank": 3, "interference_rank": 3, "ok": True}
        for k in (4, 5):
            dim = check_dimension_condition(D.channels, D.precoders, k)
            assert dim["ok"] and dim["interference_rank"] <= 6 - D.config.dof(k)

    def test_two_user_no_interference_rank(self):
        c = SystemConfig.from_tuple(4, (2, 2))
        ch = generate_channels(c, 1)
        V = PrecoderSet((np.eye(4)[:, :2] + 0j, np.eye(4)[:, 2:] + 0j))
        # receiver 2 decodes after cancelling nobody, so it sees user 1 only
        assert check_dimension_condition(ch, V, 1)["interference_rank"] == 2

    def test_tight_tolerance_fails(self, fig2_design):
        D = fig2_design
        r = verify_design(D.channels, D.precoders, D.receivers, D.equations, D.config,
                          Tolerances(alignment=0.0))
        assert not r.passed

    def test_report_round_trip(self, fig2_design):
        doc = fig2_design.report.to_dict()
        assert "pass" in doc and "passed" not in doc
        back = DesignReport.from_dict(doc)
        assert back.to_dict() == doc

    def test_tolerances_from_env(self):
        t = Tolerances.from_env({"IAC_TOL_ALIGNMENT": "1e-6", "OTHER": "x"})
        assert t.alignment == 1e-6 and t.zero_forcing == 1e-8
