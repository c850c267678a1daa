"""Unit tests for core/basis.py."""

from __future__ import annotations

import dataclasses
import math
import threading

import numpy as np
import pytest

from copula_pce.core.basis import (
    MomentTable,
    Monomial,
    MonomialFilter,
    OrthonormalBasis,
    build_basis,
    evaluate_basis,
    generate_monomials,
    gram_matrix,
    monomial_expectations,
    moment_table,
    orthonormalize,
    sampled_gram,
)
from copula_pce.core.copula import JointModel, copula_new, sample
from copula_pce.core.distributions import Beta, Normal
from copula_pce.core.progress import ProgressEvent
from copula_pce.exceptions import (
    IllConditionedBasisError,
    PceCancellationError,
    PceConfigError,
    PceParameterError,
    PceResourceError,
)

_LOCATION_GROUPS = ((0, 1), (2, 3), (4, 5), (6, 7))


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------


class TestMonomial:
    def test_properties(self) -> None:
        m = Monomial((2, 0, 1))
        assert m.degree == 3
        assert m.support == (0, 2)
        assert m.powers() == ((0, 2), (2, 1))
        assert m.label() == "x0^2*x2"

    def test_constant_label(self) -> None:
        assert Monomial((0, 0)).label() == "1"

    def test_product_adds_exponents(self) -> None:
        assert (Monomial((1, 0)) * Monomial((1, 2))).exponents == (2, 2)

    def test_product_dimension_mismatch(self) -> None:
        with pytest.raises(PceParameterError):
            Monomial((1,)) * Monomial((1, 0))

    def test_negative_exponent(self) -> None:
        with pytest.raises(PceParameterError):
            Monomial((1, -1))

    def test_evaluate(self) -> None:
        pts = np.array([[2.0, 3.0], [-1.0, 0.5]])
        np.testing.assert_allclose(Monomial((2, 1)).evaluate(pts), [12.0, 0.5])


class TestGenerateMonomials:
    def test_graded_order(self) -> None:
        labels = [m.label() for m in generate_monomials(2, 2)]
        assert labels == ["1", "x0", "x1", "x0^2", "x0*x1", "x1^2"]

    def test_full_count(self) -> None:
        # C(d + nu, nu) monomials without a filter.
        assert len(generate_monomials(8, 2)) == math.comb(10, 2)

    def test_linear_eight_variables(self) -> None:
        assert len(generate_monomials(8, 1)) == 9

    def test_location_groups_quadratic(self) -> None:
        """Constant, 8 linear, 8 squares and 4 within-location cross terms."""
        monomials = generate_monomials(8, 2, MonomialFilter(groups=_LOCATION_GROUPS))
        assert len(monomials) == 21
        cross = [m for m in monomials if len(m.support) == 2]
        assert {m.support for m in cross} == set(_LOCATION_GROUPS)

    def test_no_cross_terms(self) -> None:
        monomials = generate_monomials(2, 2, MonomialFilter(keep_cross_terms=False))
        assert [m.label() for m in monomials] == ["1", "x0", "x1", "x0^2", "x1^2"]

    def test_whitelist_survives_filter(self) -> None:
        f = MonomialFilter(keep_cross_terms=False, whitelist=((1, 1),))
        assert "x0*x1" in [m.label() for m in generate_monomials(2, 2, f)]

    def test_overlapping_groups(self) -> None:
        with pytest.raises(PceConfigError, match="more than one group"):
            MonomialFilter(groups=((0, 1), (1, 2)))

    @pytest.mark.parametrize(("d", "nu"), [(0, 1), (3, 0)])
    def test_invalid_sizes(self, d: int, nu: int) -> None:
        with pytest.raises(PceParameterError):
            generate_monomials(d, nu)


# ---------------------------------------------------------------------------
# Moments and Gram matrix
# ---------------------------------------------------------------------------


class TestMomentTable:
    def test_standard_normal_moments(self, std_normal_model: JointModel) -> None:
        table = monomial_expectations([(0,), (1,), (2,), (3,), (4,)], std_normal_model, 3)
        assert table[(0,)] == 1.0
        assert table[(1,)] == pytest.approx(0.0, abs=1e-14)
        assert table[(2,)] == pytest.approx(1.0, abs=1e-12)
        assert table[(4,)] == pytest.approx(3.0, abs=1e-12)

    def test_shared_products_integrated_once(self, std_normal_model: JointModel) -> None:
        monomials = generate_monomials(1, 2)
        table = moment_table(monomials, std_normal_model, 3)
        # Products of {1, x, x^2}: x^0 .. x^4.
        assert len(table) == 5

    def test_threads_do_not_change_values(self, correlated_normal_model: JointModel) -> None:
        monomials = generate_monomials(3, 2)
        serial = moment_table(monomials, correlated_normal_model, 4)
        threaded = moment_table(monomials, correlated_normal_model, 4, threads=4)
        assert dict(serial.values) == dict(threaded.values)
        assert list(serial.values) == list(threaded.values)

    def test_known_table_is_reused(self, correlated_normal_model: JointModel) -> None:
        known = MomentTable(d=3, k=4, backend="hermite", values={(1, 1, 0): 123.0})
        table = monomial_expectations([(1, 1, 0)], correlated_normal_model, 4, known=known)
        assert table[(1, 1, 0)] == 123.0

    def test_incompatible_known_table_is_ignored(self, correlated_normal_model: JointModel) -> None:
        known = MomentTable(d=3, k=9, backend="hermite", values={(1, 1, 0): 123.0})
        table = monomial_expectations([(1, 1, 0)], correlated_normal_model, 4, known=known)
        assert table[(1, 1, 0)] == pytest.approx(0.5, abs=1e-12)

    def test_progress_events(self, correlated_normal_model: JointModel) -> None:
        events: list[ProgressEvent] = []
        moment_table(
            generate_monomials(3, 1), correlated_normal_model, 3, progress_callback=events.append
        )
        assert events
        assert all(e.phase == "moments" for e in events)
        assert [e.items_completed for e in events] == list(range(1, len(events) + 1))
        assert events[-1].items_total == len(events)

    def test_progress_event_fields(self) -> None:
        names = [f.name for f in dataclasses.fields(ProgressEvent)]
        assert names == ["phase", "items_total", "items_completed", "current", "message"]

    def test_cancellation(self, correlated_normal_model: JointModel) -> None:
        cancel = threading.Event()
        cancel.set()
        with pytest.raises(PceCancellationError):
            moment_table(generate_monomials(3, 1), correlated_normal_model, 3, cancel_event=cancel)

    def test_budget_names_monomial(self, correlated_normal_model: JointModel) -> None:
        with pytest.raises(PceResourceError, match=r"x0\*x1\*x2"):
            monomial_expectations([(1, 1, 1)], correlated_normal_model, 10, node_budget=999)

    def test_dimension_mismatch(self, correlated_normal_model: JointModel) -> None:
        with pytest.raises(PceParameterError):
            monomial_expectations([(1, 0)], correlated_normal_model, 3)

    def test_missing_entry(self) -> None:
        table = MomentTable(d=1, k=3, backend="hermite", values={(0,): 1.0})
        with pytest.raises(KeyError, match="exponents"):
            table[(5,)]

    def test_from_dict_restores_values(self, correlated_normal_model: JointModel) -> None:
        table = moment_table(generate_monomials(3, 1), correlated_normal_model, 3)
        again = MomentTable.from_dict(table.to_dict())
        assert dict(again.values) == dict(table.values)
        assert again.compatible(3, 3, "hermite")


class TestGramMatrix:
    def test_standard_normal_quadratic(self, std_normal_model: JointModel) -> None:
        monomials = generate_monomials(1, 2)
        gram = gram_matrix(monomials, moment_table(monomials, std_normal_model, 3))
        expected = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 3.0]]
        np.testing.assert_allclose(gram, expected, atol=1e-12)

    def test_correlated_linear(self, correlated_normal_model: JointModel) -> None:
        monomials = generate_monomials(3, 1)
        gram = gram_matrix(monomials, moment_table(monomials, correlated_normal_model, 2))
        np.testing.assert_allclose(gram[1:, 1:], correlated_normal_model.copula.sigma, atol=1e-12)
        np.testing.assert_allclose(gram[0], [1.0, 0.0, 0.0, 0.0], atol=1e-14)

    def test_filter_keeps_remaining_entries(self) -> None:
        sigma = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, -0.3], [0.2, -0.3, 1.0]])
        model = JointModel(
            copula_new(sigma), (Beta(2.0, 5.0, 0.0, 2.0), Normal(1.0, 0.5), Beta(3.0, 3.0))
        )
        full = generate_monomials(3, 2)
        kept = generate_monomials(3, 2, MonomialFilter(groups=((0, 1),)))
        assert 0 < len(kept) < len(full)
        index = [full.index(m) for m in kept]
        full_gram = gram_matrix(full, moment_table(full, model, 6))
        kept_gram = gram_matrix(kept, moment_table(kept, model, 6))
        np.testing.assert_array_equal(kept_gram, full_gram[np.ix_(index, index)])


# ---------------------------------------------------------------------------
# Orthonormalization
# ---------------------------------------------------------------------------


class TestOrthonormalize:
    def test_hermite_polynomials(self, std_normal_model: JointModel) -> None:
        """{1, ξ, ξ²} whitens to {1, ξ, (ξ² - 1)/√2}."""
        basis, _ = build_basis(generate_monomials(1, 2), std_normal_model, 3)
        r = 1.0 / math.sqrt(2.0)
        expected = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-r, 0.0, r]]
        np.testing.assert_allclose(basis.coeffs, expected, atol=1e-12)
        assert basis.gram_residual < 1e-12
        assert basis.condition_number == pytest.approx((4.0 + math.sqrt(8.0)) / (4.0 - math.sqrt(8.0)), rel=1e-10)

    def test_lower_triangular(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 2), correlated_normal_model, 4)
        assert np.allclose(np.triu(basis.coeffs, 1), 0.0)

    def test_orthonormal_under_dependent_beta(self, beta_pair_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(2, 2), beta_pair_model, 15)
        check = basis.coeffs @ basis.gram @ basis.coeffs.T
        np.testing.assert_allclose(check, np.eye(basis.size), atol=1e-8)
        assert basis.gram_residual <= 1e-8

    def test_sampled_gram_matches_identity(self, beta_pair_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(2, 2), beta_pair_model, 15)
        mean, stderr = sampled_gram(basis, sample(beta_pair_model, 200_000, 99))
        assert np.all(np.abs(mean - np.eye(basis.size)) <= 6.0 * stderr + 1e-3)

    def test_singular_gram(self) -> None:
        monomials = generate_monomials(1, 1)
        with pytest.raises(IllConditionedBasisError) as exc_info:
            orthonormalize(np.array([[1.0, 1.0], [1.0, 1.0]]), monomials)
        assert exc_info.value.pivot == 1
        assert "x0" in str(exc_info.value)

    def test_condition_limit_enforced(self) -> None:
        gram = np.diag([1.0, 1e-9])
        with pytest.raises(IllConditionedBasisError) as exc_info:
            orthonormalize(gram, generate_monomials(1, 1), condition_limit=1e6)
        assert exc_info.value.condition == pytest.approx(1e9)

    def test_condition_limit_warning_only(self, caplog: pytest.LogCaptureFixture) -> None:
        gram = np.diag([1.0, 1e-9])
        with caplog.at_level("WARNING", logger="copula_pce.core.basis"):
            basis = orthonormalize(
                gram, generate_monomials(1, 1), condition_limit=1e6, enforce_condition_limit=False
            )
        assert basis.size == 2
        assert "condition number" in caplog.text

    def test_asymmetric_gram(self) -> None:
        with pytest.raises(PceParameterError, match="symmetric"):
            orthonormalize(np.array([[1.0, 0.2], [0.1, 1.0]]), generate_monomials(1, 1))

    def test_wrong_shape(self) -> None:
        with pytest.raises(PceParameterError):
            orthonormalize(np.eye(3), generate_monomials(1, 1))


class TestEvaluateBasis:
    def test_single_point(self, std_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(1, 2), std_normal_model, 3)
        values = evaluate_basis(basis, [2.0])
        np.testing.assert_allclose(values, [1.0, 2.0, 3.0 / math.sqrt(2.0)], atol=1e-12)

    def test_batch(self, std_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(1, 2), std_normal_model, 3)
        assert evaluate_basis(basis, np.zeros((5, 1))).shape == (5, 3)

    def test_from_dict_round_trip(self, correlated_normal_model: JointModel) -> None:
        basis, _ = build_basis(generate_monomials(3, 1), correlated_normal_model, 3)
        again = OrthonormalBasis.from_dict(
            {key: np.asarray(v).tolist() if key in ("coeffs", "gram") else v
             for key, v in basis.to_dict().items()}
        )
        np.testing.assert_array_equal(again.coeffs, basis.coeffs)
        assert again.monomials == basis.monomials

    def test_from_dict_shape_mismatch(self) -> None:
        data = {
            "monomials": [[0], [1]],
            "coeffs": [[1.0]],
            "gram": [[1.0]],
            "gram_residual": 0.0,
            "condition_number": 1.0,
        }
        with pytest.raises(PceConfigError):
            OrthonormalBasis.from_dict(data)
