"""Unit tests for core/pce.py."""

from __future__ import annotations

import math

import numpy as np
import pytest

from copula_pce.core.basis import build_basis, generate_monomials
from copula_pce.core.copula import JointModel, copula_new, sample
from copula_pce.core.distributions import Beta, Normal
from copula_pce.core.pce import (
    BidFunction,
    PceMatrix,
    PolyTerm,
    combine,
    default_order,
    expand,
    expand_all,
    expansion_error,
    moments,
    relative_error,
)
from copula_pce.exceptions import PceConfigError, PceParameterError


def _linear(bid_id: str, *pairs: tuple[float, int], zone: str = "X") -> BidFunction:
    return BidFunction(bid_id, tuple(PolyTerm(c, ((v, 1),)) for c, v in pairs), zone)


# ---------------------------------------------------------------------------
# Bid functions
# ---------------------------------------------------------------------------


class TestPolyTerm:
    def test_zero_powers_dropped_and_sorted(self) -> None:
        term = PolyTerm(2.0, ((3, 1), (0, 0), (1, 2)))
        assert term.powers == ((1, 2), (3, 1))
        assert term.degree == 3
        assert term.exponents(4) == (0, 2, 0, 1)

    def test_repeated_variable(self) -> None:
        with pytest.raises(PceConfigError, match="twice"):
            PolyTerm(1.0, ((0, 1), (0, 2)))

    def test_negative_power(self) -> None:
        with pytest.raises(PceConfigError):
            PolyTerm(1.0, ((0, -1),))

    def test_non_finite_coefficient(self) -> None:
        with pytest.raises(PceConfigError):
            PolyTerm(math.nan)


class TestBidFunction:
    def test_evaluate(self) -> None:
        bid = BidFunction("q", (PolyTerm(3.0), PolyTerm(2.0, ((0, 1), (1, 2)))))
        pts = np.array([[1.0, 2.0], [0.5, -1.0]])
        np.testing.assert_allclose(bid.evaluate(pts), [11.0, 4.0])
        assert bid.degree == 3
        assert bid.support == (0, 1)

    def test_scaled(self) -> None:
        bid = _linear("q", (2.0, 0)).scaled(1.5)
        assert bid.terms[0].coeff == 3.0

    def test_needs_terms(self) -> None:
        with pytest.raises(PceConfigError):
            BidFunction("q", ())

    def test_zone(self) -> None:
        with pytest.raises(PceConfigError, match="zone"):
            BidFunction("q", (PolyTerm(1.0),), zone="Z")

    def test_from_dict(self) -> None:
        bid = BidFunction("q", (PolyTerm(1.5, ((0, 2),)),), zone="Y", cost=2.0)
        assert BidFunction.from_dict(bid.to_dict()) == bid


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


class TestExpand:
    def test_constant_bid(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 2), correlated_normal_model, 4)
        coeffs = expand(BidFunction("c", (PolyTerm(60.0),)), basis, correlated_normal_model)
        assert coeffs[0] == pytest.approx(60.0, rel=1e-12)
        np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-10)

    def test_linear_bid_moments(self, correlated_normal_model: JointModel) -> None:
        """q = 2ξ_0 + ξ_1 has variance 4 + 1 + 2·2·0.5 = 7."""
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        q = _linear("q", (2.0, 0), (1.0, 1))
        mean, sigma = moments(expand(q, basis, correlated_normal_model))
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert sigma == pytest.approx(math.sqrt(7.0), rel=1e-12)

    def test_expansion_is_exact_inside_span(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 2), correlated_normal_model, 4)
        q = BidFunction(
            "q", (PolyTerm(10.0), PolyTerm(0.5, ((0, 1), (2, 1))), PolyTerm(2.0, ((1, 2),)))
        )
        coeffs = expand(q, basis, correlated_normal_model, 4)
        err = expansion_error(q, coeffs, basis, correlated_normal_model, 2000, 5)
        assert err < 1e-9

    def test_default_order(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 2), correlated_normal_model, 4)
        q = BidFunction("q", (PolyTerm(1.0, ((0, 3),)),))
        assert default_order(q, basis) == math.ceil((3 + 2) / 2) + 1

    def test_variable_outside_model(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        with pytest.raises(PceParameterError, match="outside"):
            expand(_linear("q", (1.0, 5)), basis, correlated_normal_model)

    def test_dimension_mismatch(
        self, correlated_normal_model: JointModel, std_normal_model: JointModel
    ) -> None:
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        with pytest.raises(PceParameterError, match="dimension"):
            expand(_linear("q", (1.0, 0)), basis, std_normal_model)


class TestExpandAll:
    def test_shared_pass_matches_single_expansions(self, correlated_normal_model: JointModel) -> None:
        basis, table = build_basis(generate_monomials(3, 2), correlated_normal_model, 4)
        bids = [_linear("a", (1.0, 0)), _linear("b", (0.5, 1), (0.5, 2), zone="Y")]
        pce = expand_all(bids, basis, correlated_normal_model, 4, table=table, basis_ref="abc")
        assert pce.bid_ids == ("a", "b")
        assert pce.basis_ref == "abc"
        assert pce.A.shape == (basis.size - 1, 2)
        for j, bid in enumerate(bids):
            single = expand(bid, basis, correlated_normal_model, 4)
            np.testing.assert_allclose(pce.column(j), single, atol=1e-13)

    def test_no_bids(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        with pytest.raises(PceParameterError):
            expand_all([], basis, correlated_normal_model)


# ---------------------------------------------------------------------------
# Moments and weighted sums
# ---------------------------------------------------------------------------


class TestMoments:
    def test_sigma_is_norm_of_higher_coefficients(self) -> None:
        assert moments([5.0, 3.0, 4.0]) == (5.0, 5.0)

    def test_empty(self) -> None:
        with pytest.raises(PceParameterError):
            moments([])


class TestCombine:
    def test_weighted_sum_property(self, correlated_normal_model: JointModel) -> None:
        """The expansion of Σ z_j E_j is Σ z_j a_j, and its σ equals the sample std."""
        basis, table = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        bids = [_linear("a", (1.0, 0)), _linear("b", (1.0, 1)), _linear("c", (2.0, 2))]
        pce = expand_all(bids, basis, correlated_normal_model, 3, table=table)
        z = np.array([0.5, 1.0, 0.25])
        terms = tuple(
            PolyTerm(zj * t.coeff, t.powers)
            for zj, b in zip(z, bids, strict=True)
            for t in b.terms
        )
        summed = BidFunction("s", terms)
        direct = expand(summed, basis, correlated_normal_model, 3)
        np.testing.assert_allclose(combine(z, pce), direct, atol=1e-13)

        pts = sample(correlated_normal_model, 100_000, 21)
        values = summed.evaluate(pts)
        _, sigma = moments(combine(z, pce))
        assert sigma == pytest.approx(values.std(), rel=0.01)

    def test_weight_count(self) -> None:
        pce = PceMatrix(a0=np.ones(2), A=np.zeros((1, 2)))
        with pytest.raises(PceParameterError):
            combine([1.0], pce)


class TestPceMatrix:
    def test_default_ids(self) -> None:
        pce = PceMatrix(a0=[1.0, 2.0], A=[[0.0, 1.0]])
        assert pce.bid_ids == ("bid0", "bid1")
        np.testing.assert_array_equal(pce.full(), [[1.0, 2.0], [0.0, 1.0]])

    def test_shape_mismatch(self) -> None:
        with pytest.raises(PceParameterError):
            PceMatrix(a0=[1.0, 2.0], A=np.zeros((3, 3)))

    def test_from_dict(self) -> None:
        pce = PceMatrix(a0=[1.0, 2.0], A=[[0.5, 1.0], [0.0, 3.0]], bid_ids=("p", "q"), basis_ref="h")
        data = {k: np.asarray(v).tolist() if k in ("a0", "A") else v for k, v in pce.to_dict().items()}
        again = PceMatrix.from_dict(data)
        np.testing.assert_array_equal(again.A, pce.A)
        assert again.bid_ids == ("p", "q")


class TestRelativeError:
    def test_floor_applies_near_zero(self) -> None:
        err = relative_error(np.array([0.0, 2.0]), np.array([1e-13, 2.2]), floor=1e-12)
        np.testing.assert_allclose(err, [0.1, 0.1])


# ---------------------------------------------------------------------------
# Projection properties
# ---------------------------------------------------------------------------


def _random_bid(bid_id: str, rng: np.random.Generator, d: int) -> BidFunction:
    powers = [(), ((0, 1),), ((1, 1),), ((0, 2),), ((0, 1), (1, 1)), ((1, 3),)]
    if d > 2:
        powers += [((2, 1),), ((1, 1), (2, 1))]
    return BidFunction(bid_id, tuple(PolyTerm(float(rng.normal()), p) for p in powers))


def _three_betas(sigma) -> JointModel:
    return JointModel(
        copula_new(sigma), (Beta(2.0, 5.0, 0.0, 2.0), Beta(3.0, 2.0), Beta(2.0, 2.0, -1.0, 1.0))
    )


class TestProjectionProperties:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_linearity(self, beta_pair_model: JointModel, seed: int) -> None:
        rng = np.random.default_rng(seed)
        basis, table = build_basis(generate_monomials(2, 2), beta_pair_model, 10)
        q1, q2 = _random_bid("q1", rng, 2), _random_bid("q2", rng, 2)
        alpha, beta = rng.normal(size=2)
        mixed = BidFunction("mix", q1.scaled(alpha).terms + q2.scaled(beta).terms)
        expected = alpha * expand(q1, basis, beta_pair_model, 10, table=table) + beta * expand(
            q2, basis, beta_pair_model, 10, table=table
        )
        np.testing.assert_allclose(
            expand(mixed, basis, beta_pair_model, 10, table=table), expected, atol=1e-10
        )

    def test_later_variable_coefficient_is_zero(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        coeffs = expand(_linear("q", (2.0, 0), (-1.0, 1)), basis, correlated_normal_model, 3)
        # ψ_3 leads with ξ_2, which q does not use
        assert abs(coeffs[3]) <= 1e-10

    def test_independent_variable_gets_zero_coefficients(self) -> None:
        sigma = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
        model = _three_betas(sigma)
        basis, table = build_basis(generate_monomials(3, 2), model, 8)
        q = _random_bid("q", np.random.default_rng(11), 2)
        coeffs = expand(q, basis, model, 8, table=table)
        touches_2 = [i for i, m in enumerate(basis.monomials) if 2 in m.support]
        assert touches_2
        np.testing.assert_allclose(coeffs[touches_2], 0.0, atol=1e-10)

    def test_outside_marginal_does_not_move_moments(self) -> None:
        sigma = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, -0.3], [0.2, -0.3, 1.0]])
        model = _three_betas(sigma)
        swapped = JointModel(model.copula, (*model.marginals[:2], Normal(0.5, 0.3)))
        q = BidFunction(
            "q", (PolyTerm(3.0), PolyTerm(1.0, ((0, 2),)), PolyTerm(-0.5, ((0, 1), (1, 1))))
        )
        results = []
        for m in (model, swapped):
            basis, table = build_basis(generate_monomials(3, 2), m, 8)
            results.append(moments(expand(q, basis, m, 8, table=table)))
        assert results[1][0] == pytest.approx(results[0][0], rel=1e-10)
        assert results[1][1] == pytest.approx(results[0][1], rel=1e-10)

    def test_parseval(self, beta_pair_model: JointModel) -> None:
        """Σ a_l² is the second moment of q when q lies in the span."""
        basis, table = build_basis(generate_monomials(2, 2), beta_pair_model, 15)
        q = BidFunction(
            "q",
            (
                PolyTerm(1.0),
                PolyTerm(2.0, ((0, 1),)),
                PolyTerm(-1.0, ((1, 2),)),
                PolyTerm(0.5, ((0, 1), (1, 1))),
            ),
        )
        coeffs = expand(q, basis, beta_pair_model, 15, table=table)
        squares = q.evaluate(sample(beta_pair_model, 100_000, 77)) ** 2
        stderr = squares.std(ddof=1) / math.sqrt(squares.size)
        assert abs(float(coeffs @ coeffs) - squares.mean()) <= 5.0 * stderr
