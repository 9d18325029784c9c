import numpy as np
import pytest

from app.engines.felicity_engine import PreferencePair, crra
from app.engines.policy_engine import build_policy
from app.engines.retirement_engine import (
    RetirementEngine,
    find_zbar,
    labor_flow,
    marginal_benefit,
)
from app.schemas.market_schemas import MarketParams
from app.shared.errors import AssumptionViolationError

Z_R_REF1 = 0.136922
D_REF1 = 2.4557


def closed_form_z_R(l: float, eps: float, n1: float) -> float:
    return (l / eps) * (n1 - 1.0) / n1


class TestMarginalBenefit:
    """Test Psi, h and z_bar"""

    def test_ref1_z_bar(self, ref1_pair):
        """Test Psi(y) = -l/y + eps vanishes at l/eps"""
        assert find_zbar(ref1_pair, 1.0) == pytest.approx(0.5, rel=1e-12)

    def test_psi_at_z_R(self, ref1_pair):
        """Test Psi(z_R) for REF1"""
        psi = marginal_benefit(ref1_pair, 1.0, Z_R_REF1)
        assert psi == pytest.approx(-2.65171, abs=1e-4)

    def test_labor_flow_is_y_psi(self, ref1_pair):
        """Test h(y) = y Psi(y)"""
        y = 0.8
        expected = y * marginal_benefit(ref1_pair, 1.0, y)
        assert labor_flow(ref1_pair, 1.0, y) == pytest.approx(expected)

    def test_psi_strictly_increasing(self, ref1_pair):
        """Test Psi increases strictly across a wide log grid"""
        values = [marginal_benefit(ref1_pair, 1.0, y) for y in np.logspace(-8, 8, 33)]
        assert all(a < b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize(
        "eps",
        [pytest.param(0.5, id="half_wage"), pytest.param(1.0, id="ref1_wage")],
    )
    def test_psi_tends_to_wage(self, ref1_pair, eps):
        """Test Psi(y) -> eps as y grows"""
        assert marginal_benefit(ref1_pair, eps, 1e8) == pytest.approx(eps, rel=1e-7)
        assert marginal_benefit(ref1_pair, eps, 1e8) < eps

    def test_leisure_only_z_bar(self):
        """Test l = 0, k = 2, gamma = 2 gives z_bar = (2 - sqrt 2)^2"""
        pair = PreferencePair.from_example_family(crra(2.0), l=0.0, k=2.0, b=0.0)
        expected = (2.0 - np.sqrt(2.0)) ** 2
        assert find_zbar(pair, 1.0) == pytest.approx(expected, rel=1e-11)


class TestBoundaryFunction:
    """Test the shape of G(y) = int_y^inf nu^{-n1-1} h(nu) d nu"""

    @pytest.fixture
    def engine(self, ref1_market, ref1_pair, ref1_kernel) -> RetirementEngine:
        return RetirementEngine(ref1_kernel, ref1_pair, ref1_market.epsilon)

    @staticmethod
    def closed_form(y: float, n1: float) -> float:
        # h(nu) = nu - 1/2 for REF1
        return y ** (1.0 - n1) / (n1 - 1.0) - 0.5 * y ** (-n1) / n1

    @pytest.mark.parametrize(
        "lo,hi,increasing",
        [
            pytest.param(1e-6, 0.45, True, id="below_z_bar"),
            pytest.param(0.55, 1e3, False, id="above_z_bar"),
        ],
    )
    def test_monotone_around_z_bar(self, engine, lo, hi, increasing):
        """Test G rises on (0, z_bar) and falls beyond z_bar = 0.5"""
        values = [engine.gee(y) for y in np.logspace(np.log10(lo), np.log10(hi), 15)]
        pairs = list(zip(values, values[1:]))
        if increasing:
            assert all(a < b for a, b in pairs)
        else:
            assert all(a > b for a, b in pairs)

    def test_negative_near_zero(self, engine, ref1_roots):
        """Test G(1e-8) < 0 and matches the power-law closed form"""
        value = engine.gee(1e-8)
        assert value < 0.0
        assert value == pytest.approx(self.closed_form(1e-8, ref1_roots.n1), rel=1e-6)

    @pytest.mark.parametrize("y", [0.05, 0.5, 2.0, 40.0])
    def test_matches_closed_form(self, engine, ref1_roots, y):
        """Test G against its closed form on both sides of z_bar"""
        expected = self.closed_form(y, ref1_roots.n1)
        assert engine.gee(y) == pytest.approx(expected, rel=1e-8)

    def test_sign_change_at_z_R(self, engine, ref1_solution):
        """Test G vanishes at z_R and is positive at z_bar"""
        assert engine.gee(ref1_solution.z_R) == pytest.approx(0.0, abs=1e-6)
        assert engine.gee(ref1_solution.z_bar) > 0.0


class TestFreeBoundary:
    """Test solve_free_boundary and the labor value"""

    def test_ref1_boundary(self, ref1_solution, ref1_roots):
        """Test z_R and D against the closed form and reference values"""
        assert ref1_solution.z_bar == pytest.approx(0.5, rel=1e-12)
        assert ref1_solution.z_R == pytest.approx(
            closed_form_z_R(0.5, 1.0, ref1_roots.n1), rel=1e-9
        )
        assert ref1_solution.z_R == pytest.approx(Z_R_REF1, abs=1e-6)
        assert ref1_solution.D == pytest.approx(D_REF1, abs=1e-3)
        assert 0.0 < ref1_solution.z_R < ref1_solution.z_bar

    def test_smooth_pasting(self, ref1_solution):
        """Test P(z_R) = P'(z_R+) = 0"""
        scale = max(1.0, 1.0 / 0.02)
        assert ref1_solution.smooth_pasting_value <= 1e-8 * scale
        assert ref1_solution.smooth_pasting_slope <= 1e-8 * scale

    def test_labor_value_zero_in_stopping_region(self, ref1_solution):
        """Test P = P' = 0 for y <= z_R"""
        y = 0.5 * ref1_solution.z_R
        assert ref1_solution.labor_value(y) == 0.0
        assert ref1_solution.labor_value_prime(y) == 0.0
        assert ref1_solution.labor_value_derivatives(y) == (0.0, 0.0, 0.0)

    def test_labor_value_at_one(self, ref1_solution):
        """Test P(1) = D + Xi_{u~_B}(1) - Xi_{u~_A}(1) + eps/r"""
        expected = ref1_solution.D - 0.5 / 0.03 + 1.0 / 0.02
        assert ref1_solution.labor_value(1.0) == pytest.approx(expected, rel=1e-8)
        assert ref1_solution.labor_value(1.0) == pytest.approx(35.79, abs=0.01)

    def test_labor_value_positive_and_continuous(self, ref1_solution):
        """Test P > 0 just above z_R and small near it"""
        y = ref1_solution.z_R * 1.0001
        value = ref1_solution.labor_value(y)
        assert 0.0 < value < 1e-5

    def test_labor_value_prime_matches_finite_difference(self, ref1_solution):
        """Test the analytic P' against a central difference"""
        y, h = 2.0, 1e-4
        value = ref1_solution.labor_value
        numeric = (value(y + h) - value(y - h)) / (2 * h)
        assert ref1_solution.labor_value_prime(y) == pytest.approx(numeric, rel=1e-5)

    @pytest.mark.parametrize("y", [1e4, 1e6, 1e8])
    def test_labor_value_slope_tends_to_wage_value(self, ref1_solution, y):
        """Test P'(y) -> eps/r for large y"""
        assert ref1_solution.labor_value_prime(y) == pytest.approx(1.0 / 0.02, rel=1e-6)

    def test_labor_value_slope_increasing(self, ref1_solution):
        """Test P' grows from zero at z_R towards eps/r"""
        grid = ref1_solution.z_R * np.logspace(0.1, 3, 12)
        slopes = [ref1_solution.labor_value_prime(y) for y in grid]
        assert all(0.0 < a < b for a, b in zip(slopes, slopes[1:]))
        assert slopes[-1] < 1.0 / 0.02

    def test_growth_bound(self, ref1_solution):
        """Test |P(y)| stays below its growth bound"""
        for y in (0.2, 1.0, 10.0, 100.0):
            assert abs(ref1_solution.labor_value(y)) <= ref1_solution.growth_bound(y)

    def test_cutoff_classification(
        self, ref1_market, ref1_pair, ref1_kernel, ref1_solution
    ):
        """Test G(point) > 0 exactly when the boundary lies below point"""
        engine = RetirementEngine(ref1_kernel, ref1_pair, ref1_market.epsilon)
        assert engine.cutoff_classification(2.0 * ref1_solution.z_R)
        assert not engine.cutoff_classification(0.5 * ref1_solution.z_R)

    @pytest.mark.parametrize(
        "eps,expected",
        [
            pytest.param(0.5, 0.273845, id="half_wage"),
            pytest.param(2.0, 0.068461, id="double_wage"),
        ],
    )
    def test_wage_changes_boundary(self, ref1_market, ref1_pair, eps, expected):
        """Test z_R = (l/eps)(n1 - 1)/n1 across wages"""
        policy = build_policy(ref1_market.with_updates(epsilon=eps), ref1_pair)
        assert policy.z_R == pytest.approx(expected, abs=1e-6)

    def test_case_two_boundary_above_cutoff(self, ref1_market):
        """Test b = 5 puts z_R above the floor cutoff 0.04"""
        pair = PreferencePair.from_example_family(crra(2.0), l=0.5, k=1.0, b=5.0)
        policy = build_policy(ref1_market, pair)
        assert policy.z_R > 0.04
        assert policy.solution.smooth_pasting_value <= 1e-8 * 50.0

    def test_no_sign_change_raises(self):
        """Test a scenario without a zero of Psi raises AssumptionViolationError"""
        # Arrange: tiny disutility and huge wage push z_bar below the search cap
        market = MarketParams(r=0.02, mu=0.07, sigma=0.2, rho=0.03, epsilon=1e15)
        pair = PreferencePair.from_example_family(crra(2.0), l=1e-3, k=1.0, b=0.0)

        # Act & Assert
        with pytest.raises(AssumptionViolationError):
            find_zbar(pair, market.epsilon)


class TestVariationalInequality:
    """Test verify_variational_inequality"""

    def test_ref1_passes(self, ref1_market, ref1_pair, ref1_solution):
        """Test h <= 0 on stopping probes and L P + h = 0 on continuation probes"""
        # Arrange
        engine = RetirementEngine(ref1_solution.kernel, ref1_pair, ref1_market.epsilon)
        z_R = ref1_solution.z_R
        grid = np.logspace(np.log10(z_R / 50), np.log10(z_R * 50), 24)

        # Act
        report = engine.verify_variational_inequality(ref1_solution, grid)

        # Assert
        assert report.passed
        assert report.n_stopping > 0
        assert report.n_continuation > 0
        assert report.max_stopping_violation <= 0.0
        assert report.max_continuation_residual <= 1e-6

    def test_probes_near_boundary_skipped(self, ref1_market, ref1_pair, ref1_solution):
        """Test probes within ten steps of z_R are skipped"""
        engine = RetirementEngine(ref1_solution.kernel, ref1_pair, ref1_market.epsilon)
        report = engine.verify_variational_inequality(
            ref1_solution, [ref1_solution.z_R * 1.01, ref1_solution.z_R * 0.99]
        )
        assert report.n_skipped == 2
