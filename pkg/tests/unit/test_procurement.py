"""Unit tests for core/procurement.py.

The linear-programming oracle uses deterministic bids (every higher PCE
coefficient zero), which turns the cone program into an LP with a known
optimum: eight bids of 60 covering R_X = R_Y = 100 need 200/60 = 10/3 shares.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import optimize

from copula_pce.core.pce import PceMatrix
from copula_pce.core.procurement import (
    CONSTRAINT_NAMES,
    ProcurementSolution,
    ProcurementSpec,
    QuantilePair,
    analytic_quantile_check,
    assemble,
    chance_constraints,
    quantile_factor,
    quantile_pair,
    solve,
)
from copula_pce.exceptions import PceConfigError, PceDomainError, PceParameterError


def _spec(**overrides) -> ProcurementSpec:
    values = {
        "n_x": 4,
        "n_y": 4,
        "reserve_x": 100.0,
        "reserve_y": 100.0,
        "tie_xy": 1e6,
        "tie_yx": 1e6,
        "costs": (1.0,) * 8,
        "epsilon": 0.01,
    }
    values.update(overrides)
    return ProcurementSpec(**values)


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------


class TestProcurementSpec:
    def test_n_bids(self, lp_spec: ProcurementSpec) -> None:
        assert lp_spec.n_bids == 8

    @pytest.mark.parametrize("epsilon", [0.0, 0.5, 0.7, -0.1])
    def test_epsilon_range(self, epsilon: float) -> None:
        with pytest.raises(PceConfigError, match="epsilon"):
            _spec(epsilon=epsilon)

    def test_empty_zone(self) -> None:
        with pytest.raises(PceConfigError, match="each zone"):
            _spec(n_x=0, n_y=8)

    def test_cost_count(self) -> None:
        with pytest.raises(PceConfigError, match="costs"):
            _spec(costs=(1.0,) * 7)

    def test_negative_reserve(self) -> None:
        with pytest.raises(PceConfigError, match="reserve_y"):
            _spec(reserve_y=-1.0)

    def test_scaled(self, lp_spec: ProcurementSpec) -> None:
        scaled = lp_spec.scaled(0.5)
        assert scaled.reserve_x == 50.0
        assert scaled.tie_yx == 5e5
        assert scaled.costs == lp_spec.costs


class TestQuantileFactors:
    def test_one_percent(self) -> None:
        lam = quantile_pair(0.01)
        assert lam.lambda_lo == pytest.approx(-2.3263478740408408, rel=1e-14)
        assert lam.lambda_hi == pytest.approx(2.3263478740408408, rel=1e-14)

    def test_unsupported_distribution(self) -> None:
        with pytest.raises(PceParameterError):
            quantile_factor(0.1, "student")

    def test_probability_domain(self) -> None:
        with pytest.raises(PceDomainError):
            quantile_factor(1.0)


class TestChanceConstraints:
    def test_tie_line_weights_are_masked_by_zone(self) -> None:
        spec = _spec(n_x=2, n_y=2, costs=(1.0,) * 4)
        x = np.array([0.1, 0.2, 0.3, 0.4])
        y = np.array([0.5, 0.6, 0.7, 0.8])
        cons = {c.name: c for c in chance_constraints(spec, x, y)}
        assert tuple(cons) == CONSTRAINT_NAMES
        np.testing.assert_array_equal(cons["reserve_x"].weights, x)
        np.testing.assert_array_equal(cons["reserve_y"].weights, y)
        np.testing.assert_array_equal(cons["tie_xy"].weights, [0.5, 0.6, 0.0, 0.0])
        np.testing.assert_array_equal(cons["tie_yx"].weights, [0.0, 0.0, 0.3, 0.4])
        assert cons["reserve_x"].sense == "lower"
        assert cons["tie_yx"].sense == "upper"


# ---------------------------------------------------------------------------
# Assembly and solving
# ---------------------------------------------------------------------------


class TestAssemble:
    def test_column_count_mismatch(self, lp_spec: ProcurementSpec) -> None:
        pce = PceMatrix(a0=np.ones(3), A=np.zeros((1, 3)))
        with pytest.raises(PceParameterError, match="columns"):
            assemble(lp_spec, pce, quantile_pair(0.01))

    def test_factors_must_straddle_zero(
        self, lp_spec: ProcurementSpec, constant_bids_pce: PceMatrix
    ) -> None:
        with pytest.raises(PceParameterError, match="lambda"):
            assemble(lp_spec, constant_bids_pce, QuantilePair(0.5, 1.0))

    def test_four_cones(self, lp_spec: ProcurementSpec, constant_bids_pce: PceMatrix) -> None:
        program = assemble(lp_spec, constant_bids_pce, quantile_pair(0.01))
        assert tuple(program.cones) == CONSTRAINT_NAMES
        assert program.problem.is_dcp()


class TestSolve:
    def test_linear_programming_oracle(
        self, lp_spec: ProcurementSpec, constant_bids_pce: PceMatrix
    ) -> None:
        solution = solve(assemble(lp_spec, constant_bids_pce, quantile_pair(0.01)))
        assert solution.is_optimal
        assert solution.objective == pytest.approx(10.0 / 3.0, rel=1e-6)
        assert 60.0 * solution.x.sum() == pytest.approx(100.0, rel=1e-6)
        assert 60.0 * solution.y.sum() == pytest.approx(100.0, rel=1e-6)
        assert np.all(solution.x + solution.y <= 1.0 + 1e-7)

    def test_zero_requirement_buys_nothing(self, constant_bids_pce: PceMatrix) -> None:
        spec = _spec(reserve_x=0.0, reserve_y=0.0)
        solution = solve(assemble(spec, constant_bids_pce, quantile_pair(0.01)))
        assert solution.is_optimal
        assert solution.objective == pytest.approx(0.0, abs=1e-6)

    def test_cheaper_bids_preferred(self, constant_bids_pce: PceMatrix) -> None:
        costs = (1.0, 1.0, 5.0, 5.0, 1.0, 1.0, 5.0, 5.0)
        solution = solve(assemble(_spec(costs=costs), constant_bids_pce, quantile_pair(0.01)))
        assert solution.is_optimal
        # Bids 0, 1, 4 and 5 offer 240 at unit cost, enough for both zones.
        assert solution.objective == pytest.approx(10.0 / 3.0, rel=1e-6)
        np.testing.assert_allclose((solution.x + solution.y)[[2, 3, 6, 7]], 0.0, atol=1e-6)

    def test_infeasible_is_reported_with_diagnosis(self, constant_bids_pce: PceMatrix) -> None:
        spec = _spec(reserve_x=1000.0)
        solution = solve(assemble(spec, constant_bids_pce, quantile_pair(0.01)))
        assert solution.status == "infeasible"
        assert not solution.is_optimal
        assert solution.objective is None
        assert solution.diagnosis["constraint"] == "reserve_x"
        assert solution.diagnosis["relaxation"] >= 520.0 - 1e-4

    def test_tight_tie_line_is_infeasible(self, constant_bids_pce: PceMatrix) -> None:
        """Zone Y needs 300, holds 240 locally, and may import at most 50 from zone X."""
        spec = _spec(reserve_y=300.0, tie_xy=50.0)
        solution = solve(assemble(spec, constant_bids_pce, quantile_pair(0.01)))
        assert solution.status == "infeasible"
        assert solution.diagnosis["constraint"] in CONSTRAINT_NAMES


class TestAnalyticQuantileCheck:
    @pytest.fixture()
    def gaussian_case(self) -> tuple[ProcurementSpec, PceMatrix, QuantilePair]:
        spec = ProcurementSpec(
            n_x=1, n_y=1, reserve_x=50.0, reserve_y=50.0, tie_xy=1e4, tie_yx=1e4,
            costs=(1.0, 1.0), epsilon=0.01,
        )
        pce = PceMatrix(a0=[100.0, 100.0], A=[[10.0, 0.0], [0.0, 10.0]], bid_ids=("x0", "y0"))
        return spec, pce, quantile_pair(spec.epsilon)

    def test_reserve_constraints_bind(self, gaussian_case) -> None:
        spec, pce, lam = gaussian_case
        solution = solve(assemble(spec, pce, lam))
        assert solution.is_optimal
        margins = {m.name: m for m in analytic_quantile_check(solution, pce, spec, lam)}
        for name in ("reserve_x", "reserve_y"):
            assert margins[name].active
            assert margins[name].quantile == pytest.approx(50.0, rel=1e-5)
        assert not margins["tie_xy"].active
        assert not margins["tie_yx"].active

    def test_sigma_matches_cone_norm(self, gaussian_case) -> None:
        spec, pce, lam = gaussian_case
        solution = ProcurementSolution(
            x=np.array([0.5, 0.5]), y=np.array([0.25, 0.25]), objective=1.5, status="optimal"
        )
        margins = {m.name: m for m in analytic_quantile_check(solution, pce, spec, lam)}
        assert margins["reserve_x"].mu == pytest.approx(100.0)
        assert margins["reserve_x"].sigma == pytest.approx(10.0 * math.sqrt(0.5))
        assert margins["reserve_x"].lam == lam.lambda_lo
        assert margins["tie_xy"].mu == pytest.approx(25.0)
        assert margins["tie_xy"].lam == lam.lambda_hi


class TestProcurementSolution:
    def test_from_dict(self) -> None:
        sol = ProcurementSolution(
            x=np.array([1.0, 0.0]),
            y=np.array([0.0, 0.5]),
            objective=1.5,
            status="optimal",
            residuals={"reserve_x": 0.0},
            stats={"num_iters": 7},
        )
        data = sol.to_dict()
        data["x"] = data["x"].tolist()
        data["y"] = data["y"].tolist()
        again = ProcurementSolution.from_dict(data)
        np.testing.assert_array_equal(again.y, sol.y)
        assert again.objective == 1.5
        assert again.is_optimal
        assert again.stats == {"num_iters": 7}


# ---------------------------------------------------------------------------
# Program properties
# ---------------------------------------------------------------------------

_A0 = np.array([60.0, 50.0, 40.0, 30.0, 55.0, 45.0, 35.0, 25.0])
_COSTS = (1.0, 1.2, 0.9, 1.5, 1.1, 0.8, 1.3, 1.0)


def _uncertain_pce(scale: float = 1.0) -> PceMatrix:
    spread = np.random.default_rng(5).uniform(-4.0, 4.0, size=(3, 8))
    return PceMatrix(a0=scale * _A0, A=scale * spread)


def _mixed_spec(**overrides) -> ProcurementSpec:
    values = {
        "reserve_x": 120.0,
        "reserve_y": 90.0,
        "tie_xy": 40.0,
        "tie_yx": 30.0,
        "costs": _COSTS,
    }
    values.update(overrides)
    return _spec(**values)


class TestProgramProperties:
    def test_objective_monotone_in_reserve(self) -> None:
        pce = _uncertain_pce()
        lam = quantile_pair(0.01)
        objectives = []
        for reserve_x in np.linspace(0.0, 120.0, 7):
            solution = solve(assemble(_mixed_spec(reserve_x=float(reserve_x)), pce, lam))
            assert solution.is_optimal, reserve_x
            objectives.append(solution.objective)
        assert np.all(np.diff(objectives) >= -1e-7)
        assert objectives[-1] > objectives[0]

    def test_scaled_instance(self) -> None:
        lam = quantile_pair(0.01)
        spec, pce = _mixed_spec(), _uncertain_pce()
        base = solve(assemble(spec, pce, lam))
        big = solve(assemble(spec.scaled(10.0), _uncertain_pce(10.0), lam))
        assert base.is_optimal and big.is_optimal
        assert big.objective == pytest.approx(base.objective, rel=1e-6)
        np.testing.assert_allclose(big.x, base.x, atol=1e-5)
        np.testing.assert_allclose(big.y, base.y, atol=1e-5)
        small_margins = analytic_quantile_check(base, pce, spec, lam)
        big_margins = analytic_quantile_check(big, _uncertain_pce(10.0), spec.scaled(10.0), lam)
        for small, large in zip(small_margins, big_margins, strict=True):
            assert large.margin == pytest.approx(10.0 * small.margin, abs=1e-3), small.name

    def test_deterministic_bids_match_linear_program(self) -> None:
        spec = _mixed_spec()
        pce = PceMatrix(a0=_A0, A=np.zeros((3, 8)))
        solution = solve(assemble(spec, pce, quantile_pair(0.01)))
        assert solution.is_optimal

        n, nx = spec.n_bids, spec.n_x
        costs = np.concatenate([_COSTS, _COSTS])
        zeros = np.zeros(n)
        in_x = np.where(np.arange(n) < nx, _A0, 0.0)
        in_y = np.where(np.arange(n) >= nx, _A0, 0.0)
        a_ub = np.vstack(
            [
                np.concatenate([-_A0, zeros]),
                np.concatenate([zeros, -_A0]),
                np.concatenate([zeros, in_x]),
                np.concatenate([in_y, zeros]),
                np.hstack([np.eye(n), np.eye(n)]),
            ]
        )
        b_ub = np.concatenate(
            [[-spec.reserve_x, -spec.reserve_y, spec.tie_xy, spec.tie_yx], np.ones(n)]
        )
        oracle = optimize.linprog(costs, A_ub=a_ub, b_ub=b_ub, bounds=(0.0, None), method="highs")
        assert oracle.status == 0
        assert solution.objective == pytest.approx(oracle.fun, rel=1e-8)
