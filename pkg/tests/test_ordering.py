import math

import numpy as np
import pytest

from illposed import ordering
from illposed.errors import (
    DimensionMismatch,
    NonOrthonormalSubspace,
    RangeInclusionViolated,
    RankOrderViolation,
    RankZero,
    SolveFailure,
)
from illposed.gallery import build_diagonal, build_integration


def test_sigma_order_diagonal_hand_values():
    v = ordering.sigma_order(np.diag([1.0, 0.25, 1 / 9]), np.diag([1.0, 0.5, 1 / 3]))
    assert v.forward_constant == pytest.approx(1.0)
    assert v.backward_constant == pytest.approx(3.0)
    assert v.relation == ordering.EQUIVALENT
    v = ordering.sigma_order(np.diag([1.0, 0.25, 1 / 9]), np.diag([1.0, 0.5, 1 / 3]), tolerance_budget=2)
    assert v.relation == ordering.A_PRIME_MORE


def test_sigma_order_budget_makes_power_laws_comparable():
    v = ordering.sigma_order(build_diagonal("power2", 64), build_diagonal("harmonic", 64))
    assert v.relation == ordering.A_PRIME_MORE
    assert v.backward_constant == pytest.approx(64.0)


def test_sigma_order_rank_mismatch_is_infinite():
    v = ordering.sigma_order(np.diag([1.0, 1.0]), np.diag([1.0, 0.0]))
    assert v.forward_constant == math.inf
    assert v.relation == ordering.A_MORE


def test_sigma_order_zero_operator():
    with pytest.raises(RankZero):
        ordering.sigma_order(np.zeros((3, 3)), np.eye(3))


def test_sigma_order_levels_records_every_level():
    v = ordering.sigma_order_levels(lambda n: build_integration(2, n), lambda n: build_integration(1, n),
                                    (32, 64))
    assert len(v.constants_per_level) == 2 and len(v.backward_per_level) == 2


def test_connecting_factors_diagonal():
    Ap, A = np.diag([0.5, 0.1]), np.diag([1.0, 0.5])
    f = ordering.construct_connecting_factors(Ap, A)
    assert np.allclose(f.left_factor @ A @ f.right_factor, Ap, atol=1e-15)
    assert f.right_norm == pytest.approx(0.5)


def test_connecting_factors_rank_order():
    with pytest.raises(RankOrderViolation):
        ordering.construct_connecting_factors(np.eye(2), np.diag([1.0, 0.0]))


def test_connecting_factors_lower_rank_prime():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((6, 6))
    Ap = np.outer(rng.standard_normal(6), rng.standard_normal(6))
    f = ordering.construct_connecting_factors(Ap, A)
    assert f.residual < 1e-12
    assert f.left_isometry_defect < 1e-12


def test_norm_order_constant_hand_values():
    assert ordering.norm_order_constant(np.diag([1.0, 0.1]), np.diag([2.0, 0.05])) == pytest.approx(2.0)
    assert ordering.norm_order_constant(np.eye(2), np.diag([1.0, 0.0])) == math.inf
    with pytest.raises(DimensionMismatch):
        ordering.norm_order_constant(np.eye(2), np.eye(3))


def test_douglas_recovers_and_rejects():
    A = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    S0 = np.array([[1.0, 2.0], [3.0, 4.0]])
    f = ordering.douglas_factorize(A @ S0, A)
    assert np.allclose(f.right_factor, S0, atol=1e-14)
    assert f.range_constant == pytest.approx(np.linalg.norm(S0, 2))
    bad = A @ S0
    bad[2, 0] = 1.0
    with pytest.raises(RangeInclusionViolated) as exc:
        ordering.douglas_factorize(bad, A)
    assert exc.value.range_constant == math.inf


def test_douglas_row_mismatch():
    with pytest.raises(DimensionMismatch):
        ordering.douglas_factorize(np.eye(2), np.eye(3))


def test_modulus_of_injectivity_diagonal():
    A = np.diag([1.0, 0.5, 0.25])
    vals = ordering.modulus_of_injectivity(A, ordering.coordinate_family(3), delta=0.1)
    assert [j for j, _ in vals] == pytest.approx([1.0, 0.5, 0.25])
    assert vals[-1][1] == pytest.approx(0.4)


def test_modulus_of_injectivity_checks_family():
    with pytest.raises(NonOrthonormalSubspace):
        ordering.modulus_of_injectivity(np.eye(2), [np.array([[1.0], [1.0]])])
    fam = [np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])]
    with pytest.raises(NonOrthonormalSubspace):
        ordering.modulus_of_injectivity(np.eye(2), fam)


def test_tikhonov_solution_normal_equations():
    A = np.array([[2.0, 0.0], [0.0, 1.0]])
    x = ordering.tikhonov_solution(A, np.array([2.0, 1.0]), 1.0)
    assert np.allclose(x, [4 / 5, 1 / 2])


def test_tikhonov_compare_rows_and_margin():
    rep = ordering.tikhonov_compare(np.diag([0.5, 0.1]), np.diag([1.0, 0.5]), [np.ones(2)], [1e-3, 1e-1])
    rows = rep.rows()
    assert len(rows) == 2 and rows[0][0] == 0
    assert all(r[2] >= r[3] for r in rows)
    assert rep.spectral_criterion_margin == pytest.approx(1 - 0.25)
    with pytest.raises(SolveFailure):
        ordering.tikhonov_compare(np.eye(2), np.eye(2), [np.ones(2)], [0.0])


def test_sigma_order_worked_examples():
    A, Ap = np.diag([1, 1 / 2, 1 / 3, 1 / 4]), np.diag([1, 1 / 4, 1 / 9, 1 / 16])
    v = ordering.sigma_order(Ap, A, tolerance_budget=2)
    assert v.forward_constant == pytest.approx(1.0) and v.relation == ordering.A_PRIME_MORE
    v = ordering.sigma_order(2 * A, A, tolerance_budget=2)
    assert v.forward_constant == pytest.approx(2) and v.backward_constant == pytest.approx(0.5)
    assert v.relation == ordering.EQUIVALENT
    v = ordering.sigma_order(np.diag([1e-2, 1e-2]), np.diag([1.0, 1e-4]), tolerance_budget=10)
    assert v.forward_constant == pytest.approx(100) and v.backward_constant == pytest.approx(100)
    assert v.relation == ordering.NON_COMPARABLE


def test_sigma_order_transpose_invariance():
    rng = np.random.default_rng(5)
    A, Ap = rng.standard_normal((9, 6)), rng.standard_normal((9, 6))
    v, w = ordering.sigma_order(Ap, A), ordering.sigma_order(Ap.T, A.T)
    assert abs(v.forward_constant - w.forward_constant) <= 1e-12 * v.forward_constant
    assert abs(v.backward_constant - w.backward_constant) <= 1e-12 * v.backward_constant


def test_connecting_factors_diagonal_example():
    n = np.arange(1, 9)
    f = ordering.construct_connecting_factors(np.diag(1 / n**2), np.diag(1 / n))
    assert np.allclose(f.right_factor, np.diag(1 / n), atol=1e-15)
    assert np.allclose(f.left_factor, np.eye(8), atol=1e-15)
    assert f.residual <= 1e-14


def test_connecting_factors_conjugation():
    rng = np.random.default_rng(6)
    from scipy.stats import ortho_group

    A = rng.standard_normal((12, 12))
    U0, V0 = ortho_group.rvs(12, random_state=rng), ortho_group.rvs(12, random_state=rng)
    f = ordering.construct_connecting_factors(U0 @ A @ V0, A)
    assert f.residual <= 1e-10 and f.right_norm <= 1 + 1e-9
    with pytest.raises(RankOrderViolation):
        ordering.construct_connecting_factors(np.diag([1, 1 / 2, 1 / 3]), np.diag([1, 1 / 2, 0]))


def test_douglas_worked_examples():
    A = np.array([[1.0, 0.0], [0.0, 0.0]])
    f = ordering.douglas_factorize(np.array([[0.5, 0.0], [0.0, 0.0]]), A)
    assert np.allclose(f.right_factor, [[0.5, 0], [0, 0]], atol=0) and f.residual <= 1e-15
    with pytest.raises(RangeInclusionViolated) as exc:
        ordering.douglas_factorize(np.array([[0.0, 0.0], [0.0, 1.0]]), A)
    assert exc.value.range_constant == math.inf


def test_douglas_full_rank_recovers_s0_and_constant_matches():
    rng = np.random.default_rng(7)
    A, S0 = rng.standard_normal((32, 32)), rng.standard_normal((32, 32))
    f = ordering.douglas_factorize(A @ S0, A)
    assert np.linalg.norm(A @ f.right_factor - A @ S0, 2) <= 1e-9 * np.linalg.norm(A @ S0, 2)
    assert np.linalg.norm(f.right_factor - S0, 2) <= 1e-8
    assert f.range_constant == pytest.approx(f.right_norm, rel=1e-6)


def test_douglas_factor_maps_into_row_space():
    A = np.array([[1.0, 1.0], [2.0, 2.0]])
    f = ordering.douglas_factorize(A @ np.eye(2), A)
    null = np.array([1.0, -1.0]) / np.sqrt(2)
    assert np.max(np.abs(null @ f.right_factor)) <= 1e-10


def test_norm_order_worked_examples():
    A = np.diag([1.0, 0.5])
    assert ordering.norm_order_constant(A, A) == pytest.approx(1.0)
    assert ordering.norm_order_constant(np.diag([0.5, 0.5]), A) == pytest.approx(1.0)
    assert ordering.norm_order_constant(np.eye(2), np.diag([1.0, 0.0])) == math.inf


def test_modulus_of_injectivity_is_monotone():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((10, 10))
    Q = np.linalg.qr(rng.standard_normal((10, 10)))[0]
    js = [j for j, _ in ordering.modulus_of_injectivity(A, [Q[:, :k] for k in range(1, 11)])]
    assert all(a >= b - 1e-14 for a, b in zip(js, js[1:]))
    vals = ordering.modulus_of_injectivity(np.diag([1, 1 / 2, 1 / 3]), ordering.coordinate_family(3), 0.1)
    assert [om for _, om in vals] == pytest.approx([0.1, 0.2, 0.3])
