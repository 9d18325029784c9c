import dataclasses

import numpy as np
import pytest

from app.engines.felicity_engine import crra
from app.engines.market_engine import characteristic_polynomial
from app.engines.resolvent_engine import ResolventKernel
from app.shared.errors import ProbeTooCloseError, QuadratureError

M_REF1 = 0.0328125
PROBES = np.logspace(-2, 2, 20)


class TestResolventClosedForms:
    """Test Xi and Gamma against power-law closed forms"""

    def test_xi_of_crra_conjugate(self, ref1_kernel):
        """Test Xi_{u~}(y) = (1/M) G y^q for gamma = 2"""
        u = crra(2.0)
        for y in PROBES:
            expected = -2.0 * y**0.5 / M_REF1
            assert ref1_kernel.xi(u.conjugate, y) == pytest.approx(expected, rel=1e-8)

    def test_gamma_of_crra_inverse_marginal(self, ref1_kernel):
        """Test Gamma_{I_u}(y) = (1/M) y^{-1/gamma}"""
        u = crra(2.0)
        for y in PROBES:
            expected = y**-0.5 / M_REF1
            value = ref1_kernel.gamma(u.inverse_marginal, y)
            assert value == pytest.approx(expected, rel=1e-8)

    def test_ref1_values_at_one(self, ref1_kernel):
        """Test the REF1 reference values at y = 1"""
        u = crra(2.0)
        assert ref1_kernel.xi(u.conjugate, 1.0) == pytest.approx(-60.95238095, rel=1e-8)
        value = ref1_kernel.gamma(u.inverse_marginal, 1.0)
        assert value == pytest.approx(30.47619048, rel=1e-8)

    @pytest.mark.parametrize(
        "power",
        [
            pytest.param(0.0, id="constant"),
            pytest.param(1.0, id="linear"),
            pytest.param(-0.5, id="negative_power"),
        ],
    )
    def test_power_functions(self, ref1_market, ref1_kernel, power):
        """Test Xi_{y^a} = -y^a / Q(a) for n2 < a < n1"""
        # Arrange
        q = characteristic_polynomial(ref1_market, power)

        # Act
        value = ref1_kernel.xi(lambda v: v**power, 2.5)

        # Assert
        assert value == pytest.approx(-(2.5**power) / q, rel=1e-8)

    def test_constant_and_linear_shortcuts(self, ref1_kernel):
        """Test Xi_1 = 1/rho and Xi_y = y/r"""
        assert ref1_kernel.xi(lambda v: 1.0, 0.7) == pytest.approx(1.0 / 0.03, rel=1e-9)
        assert ref1_kernel.xi(lambda v: v, 0.7) == pytest.approx(0.7 / 0.02, rel=1e-9)

    def test_breakpoints_do_not_change_smooth_results(self, ref1_kernel):
        """Test extra split points leave a smooth integral unchanged"""
        u = crra(2.0)
        split = ref1_kernel.with_breakpoints(0.3, 3.0, 30.0)
        assert split.xi(u.conjugate, 1.0) == pytest.approx(
            ref1_kernel.xi(u.conjugate, 1.0), rel=1e-9
        )
        assert split.breakpoints == (0.3, 3.0, 30.0)

    def test_kinked_integrand(self, ref1_market, ref1_roots):
        """Test an indicator integrand split at its kink"""
        # Arrange: Xi of 1{v <= c} evaluated above c is K y^{n2} c^{-n2}/(-n2)
        c = 0.5
        kernel = ResolventKernel.from_market(ref1_market, ref1_roots, (c,))
        y = 2.0
        n2 = ref1_roots.n2
        expected = kernel.prefactor * y**n2 * c ** (-n2) / (-n2)

        # Act
        value = kernel.xi(lambda v: 1.0 if v <= c else 0.0, y)

        # Assert
        assert value == pytest.approx(expected, rel=1e-9)

    def test_invalid_breakpoint(self, ref1_market, ref1_roots):
        """Test non-positive breakpoints are rejected"""
        with pytest.raises(ValueError):
            ResolventKernel.from_market(ref1_market, ref1_roots, (0.0,))


class TestResolventDerivatives:
    """Test analytic derivatives of Xi and Gamma"""

    @pytest.mark.parametrize("y", [0.05, 1.0, 40.0])
    def test_xi_derivatives_of_crra(self, ref1_kernel, y):
        """Test (Xi, Xi', Xi'') of u~ against the closed form"""
        u = crra(2.0)
        value, first, second = ref1_kernel.xi_derivatives(u.conjugate, y)
        assert value == pytest.approx(-2.0 * y**0.5 / M_REF1, rel=1e-8)
        assert first == pytest.approx(-(y**-0.5) / M_REF1, rel=1e-8)
        assert second == pytest.approx(0.5 * y**-1.5 / M_REF1, rel=1e-7)

    def test_derivative_identity(self, ref1_kernel):
        """Test Xi'_{u~} = -Gamma_{I_u}"""
        u = crra(2.0)
        for y in PROBES:
            _, first, _ = ref1_kernel.xi_derivatives(u.conjugate, y)
            gamma = ref1_kernel.gamma(u.inverse_marginal, y)
            assert first == pytest.approx(-gamma, rel=1e-8)

    def test_gamma_derivatives(self, ref1_kernel):
        """Test Gamma'_{I_u}(y) = -(1/gamma) y^{-1/gamma - 1} / M"""
        u = crra(2.0)
        value, slope = ref1_kernel.gamma_derivatives(u.inverse_marginal, 3.0)
        assert value == pytest.approx(3.0**-0.5 / M_REF1, rel=1e-8)
        assert slope == pytest.approx(-0.5 * 3.0**-1.5 / M_REF1, rel=1e-8)

    def test_hjb_residual_of_closed_form(self, ref1_kernel):
        """Test L Xi + f = 0 with finite differences of the closed form"""
        u = crra(2.0)
        residual = ref1_kernel.hjb_residual(
            u.conjugate, lambda v: -2.0 * v**0.5 / M_REF1, 1.3
        )
        assert abs(residual) < 1e-7

    def test_hjb_probe_too_close_to_kink(self, ref1_kernel):
        """Test a stencil straddling a breakpoint raises ProbeTooCloseError"""
        kernel = ref1_kernel.with_breakpoints(1.0)
        with pytest.raises(ProbeTooCloseError):
            kernel.hjb_residual(lambda v: v, lambda v: v / 0.02, 1.05)

    def test_growth_bound(self, ref1_kernel):
        """Test |Xi'| <= C (y^{n1-1} + y^{n2-1}) extends to a wider grid"""
        u = crra(2.0)
        fit = ref1_kernel.fit_growth_bound(
            u.conjugate, np.logspace(-1, 1, 41), np.logspace(-3, 3, 31)
        )
        assert fit.constant > 0.0
        assert fit.holds


class TestGammaShape:
    """Test Gamma_{I_u} is strictly decreasing from +inf to 0"""

    GRID = np.logspace(-8, 8, 17)

    def test_strictly_decreasing(self, ref1_kernel):
        """Test Gamma_{I_u} falls across sixteen decades"""
        u = crra(2.0)
        values = [ref1_kernel.gamma(u.inverse_marginal, y) for y in self.GRID]
        assert all(a > b > 0.0 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize(
        "y,bound,above",
        [
            pytest.param(1e-8, 1e5, True, id="unbounded_at_zero"),
            pytest.param(1e8, 1e-2, False, id="vanishes_at_infinity"),
        ],
    )
    def test_limits(self, ref1_kernel, y, bound, above):
        """Test Gamma_{I_u}(0+) = inf and Gamma_{I_u}(inf) = 0 on the extreme probes"""
        u = crra(2.0)
        value = ref1_kernel.gamma(u.inverse_marginal, y)
        assert value == pytest.approx(y**-0.5 / M_REF1, rel=1e-8)
        assert (value > bound) == above


class TestResolventFailures:
    """Test quadrature failure modes"""

    def test_growing_integrand_raises(self, ref1_kernel):
        """Test f = y^2 (above n1) has no resolvent"""
        kernel = dataclasses.replace(ref1_kernel, max_doublings=8)
        with pytest.raises(QuadratureError) as exc_info:
            kernel.xi(lambda v: v * v, 1.0)
        assert exc_info.value.partial_estimate is not None
        assert exc_info.value.exit_code == 3

    def test_non_positive_y(self, ref1_kernel):
        """Test y <= 0 is rejected"""
        with pytest.raises(ValueError):
            ref1_kernel.xi(lambda v: 1.0, 0.0)

    def test_power_integrals(self, ref1_kernel):
        """Test the plain power integrals used for G and D"""
        lower = ref1_kernel.lower_power_integral(lambda v: 1.0, 2.0, 0.5)
        upper = ref1_kernel.upper_power_integral(lambda v: 1.0, 2.0, -2.0)
        assert lower == pytest.approx(2.0**1.5 / 1.5, rel=1e-10)
        assert upper == pytest.approx(0.5, rel=1e-10)
