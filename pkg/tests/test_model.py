"""Generator validation, assumption checks and value bounds."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from ctsg.errors import CertificateError, StructureError
from ctsg.model import (
    GameModel,
    LyapunovCertificate,
    check_assumptions,
    compute_value_bounds,
    validate_generator,
)


def two_state(rows0, rows1, **kw) -> GameModel:
    """One action per player; rows are the generator rows of the two states."""
    g0 = np.array(rows0, dtype=float).reshape(1, 1, 2)
    g1 = np.array(rows1, dtype=float).reshape(1, 1, 2)
    defaults = dict(
        actions_p1=[[0], [0]],
        actions_p2=[[0], [0]],
        payoff=[np.zeros((1, 1)), np.zeros((1, 1))],
        generator=[g0, g1],
        terminal=np.zeros(2),
        theta=1.0,
        horizon=1.0,
    )
    defaults.update(kw)
    return GameModel(**defaults)


def unit_cert(n: int = 2, **kw) -> LyapunovCertificate:
    defaults = dict(v0=np.ones(n), v1=np.ones(n), rho0=1.0, l0=1.0, m0=1.0, rho1=1.0, b1=1.0, m1=1.0)
    defaults.update(kw)
    return LyapunovCertificate(**defaults)


class TestValidateGenerator:
    def test_conservative_rows_are_valid(self):
        model = two_state([-1.0, 1.0], [2.0, -2.0])
        report = validate_generator(model)
        assert report.is_valid
        assert report.q_star.tolist() == [1.0, 2.0]

    def test_row_sum_violation(self):
        model = two_state([-1.0, 0.5], [1.0, -1.0])
        report = validate_generator(model)
        kinds = {v.kind for v in report.violations}
        assert kinds == {"not_conservative"}
        assert report.violations[0].residual == pytest.approx(-0.5)
        assert (report.violations[0].x, report.violations[0].a, report.violations[0].b) == (0, 0, 0)

    def test_negative_offdiagonal_with_witness(self):
        model = two_state([0.1, -0.1], [1.0, -1.0])
        report = validate_generator(model)
        offdiag = [v for v in report.violations if v.kind == "offdiag_negative"]
        assert len(offdiag) == 1
        assert (offdiag[0].x, offdiag[0].y) == (0, 1)
        assert offdiag[0].residual == pytest.approx(-0.1)

    def test_positive_diagonal_flags_stability(self):
        model = two_state([0.5, -0.5], [1.0, -1.0])
        report = validate_generator(model)
        kinds = {v.kind for v in report.violations}
        assert "not_stable" in kinds

    def test_dimension_mismatch_is_structural(self):
        model = two_state([-1.0, 1.0], [1.0, -1.0])
        model.payoff[0] = np.zeros((2, 1))
        with pytest.raises(StructureError):
            validate_generator(model)

    def test_empty_action_set_is_structural(self):
        model = two_state([-1.0, 1.0], [1.0, -1.0])
        model.actions_p1[0] = []
        model.payoff[0] = np.zeros((0, 1))
        model.generator[0] = np.zeros((0, 1, 2))
        with pytest.raises(StructureError):
            validate_generator(model)

    def test_nonfinite_entry_flagged(self):
        model = two_state([-1.0, 1.0], [1.0, -1.0])
        model.generator[1][0, 0, 0] = np.inf
        report = validate_generator(model)
        assert any(v.kind == "not_finite" for v in report.violations)


class TestModelInvariants:
    def test_theta_must_be_positive(self):
        with pytest.raises(ValueError, match="theta"):
            two_state([-1.0, 1.0], [1.0, -1.0], theta=-0.5)

    def test_norms(self):
        model = two_state([-1.0, 1.0], [2.0, -2.0])
        model.payoff[0][0, 0] = -3.0
        assert model.norm_q == 2.0
        assert model.norm_r == 3.0


class TestCheckAssumptions:
    def test_everything_vanishes_passes(self):
        model = two_state([0.0, 0.0], [0.0, 0.0])
        cert = check_assumptions(model, unit_cert(), tol=0.0)
        assert cert.all_ok
        # passing checks have no positive violation component
        assert all(max(0.0, r) == 0.0 for r in cert.residuals.values())
        assert cert.residuals["squeeze"] == pytest.approx(0.0)

    def test_drift_failure_detected(self):
        # rate 5 out of state 0 against v0 = (1, 10) blows past rho0 v0
        model = two_state([-5.0, 5.0], [0.0, 0.0])
        cert = unit_cert(v0=np.array([1.0, 10.0]), v1=np.array([1.0, 100.0]), rho1=100.0, m1=100.0)
        out = check_assumptions(model, cert, tol=1e-9)
        assert out.drift0_ok is False
        assert out.residuals["drift0"] == pytest.approx(5.0 * 10 - 5.0 * 1 - 1.0)

    def test_monotone_in_tol(self):
        model = two_state([-5.0, 5.0], [0.0, 0.0])
        cert = unit_cert(v0=np.array([1.0, 2.0]), v1=np.array([1.0, 4.0]), rho1=50.0, m1=10.0)
        loose = check_assumptions(model, cert, tol=10.0)
        tight = check_assumptions(model, cert, tol=1e-12)
        for name in ("drift0_ok", "rate_bound_ok", "payoff_bound_ok", "drift1_ok", "squeeze_ok"):
            if getattr(tight, name):
                assert getattr(loose, name)

    def test_invalid_certificate_rejected(self):
        model = two_state([0.0, 0.0], [0.0, 0.0])
        with pytest.raises(CertificateError):
            check_assumptions(model, unit_cert(v0=np.array([0.5, 1.0])), tol=0.0)
        with pytest.raises(CertificateError):
            check_assumptions(model, unit_cert(rho0=0.0), tol=0.0)


class TestValueBounds:
    def test_closed_form_constant(self):
        # T = 1, theta = 1, m0 -> 0, rho0 -> 0, v0 = 1: L -> e^4
        model = two_state([0.0, 0.0], [0.0, 0.0])
        cert = unit_cert(rho0=1e-12, m0=1e-12)
        cert = check_assumptions(model, cert, tol=1e-6)
        bounds = compute_value_bounds(model, cert)
        assert bounds.upper_const == pytest.approx(math.exp(4.0), rel=1e-9)
        assert np.all(bounds.lower <= bounds.upper)
        assert np.all(bounds.lower > 0)

    def test_trivial_value_inside_bounds(self):
        # r = 0, g = 0: the true value is 1
        model = two_state([0.0, 0.0], [0.0, 0.0])
        cert = check_assumptions(model, unit_cert(), tol=0.0)
        bounds = compute_value_bounds(model, cert)
        assert np.all(bounds.lower <= 1.0) and np.all(1.0 <= bounds.upper)

    def test_overflow_reported_not_raised(self):
        model = two_state([0.0, 0.0], [0.0, 0.0], theta=30.0)
        cert = check_assumptions(model, unit_cert(m0=2.0), tol=0.0)
        bounds = compute_value_bounds(model, cert)
        assert not bounds.representable
        assert np.all(np.isinf(bounds.upper))

    def test_requires_passed_checks(self):
        model = two_state([0.0, 0.0], [0.0, 0.0])
        with pytest.raises(CertificateError):
            compute_value_bounds(model, unit_cert())
        failing = check_assumptions(model, unit_cert(v0=np.array([1.0, 1e9]), m1=1e18), tol=0.0)
        failing = replace(failing, payoff_bound_ok=False)
        with pytest.raises(CertificateError):
            compute_value_bounds(model, failing)
