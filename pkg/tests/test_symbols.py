import numpy as np
import pytest

from pdz import (DomainMismatchError, NonFiniteValueError, SampledSymbol,
                 SymbolClassParams, SymbolDefinition, TorusFunction, constant_symbol,
                 ellipticity_check, forward_difference, generalized_difference,
                 order_fit, periodic_taylor, sample, seminorm_estimate, x_derivative)
from pdz.symbols import falling_derivative, multi_factorial, multi_indices_below

import helpers
import oracles


# ---------------------------------------------------------------------------
# sampling


def test_sample_constant_definition():
    box, grid = helpers.box_and_grid(1, 3)
    sym = sample(SymbolDefinition(lambda k, x: np.ones(
        np.broadcast_shapes(k.shape[:-1], x.shape[:-1]))), box, grid)
    np.testing.assert_allclose(sym.samples, 1.0)


def test_sample_first_difference_symbol_rows_constant_in_k():
    box, grid = helpers.box_and_grid(2, 2)
    sym = sample(SymbolDefinition(
        lambda k, x: np.exp(2j * np.pi * x[..., 0]) - 1.0 + 0.0 * k[..., 0]), box, grid)
    expected = np.exp(2j * np.pi * grid.nodes[:, 0]) - 1.0
    for row in sym.samples:
        np.testing.assert_allclose(row, expected, atol=1e-15)


def test_sample_example3_matches_closed_form():
    box, grid = helpers.box_and_grid(1, 4)
    a = 3.0
    sym = sample(SymbolDefinition(
        lambda k, x: 2j * np.sin(2 * np.pi * x[..., 0]) + a + 0.0 * k[..., 0]), box, grid)
    np.testing.assert_allclose(
        sym.samples[0], 2j * np.sin(2 * np.pi * grid.nodes[:, 0]) + a, atol=1e-15)


def test_sample_rejects_nonfinite_with_location():
    box, grid = helpers.box_and_grid(1, 2)

    def bad(k, x):
        out = np.ones(np.broadcast_shapes(k.shape[:-1], x.shape[:-1]), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return out / (k[..., 0] - 1)  # infinite at k = 1

    with pytest.raises(NonFiniteValueError) as err:
        sample(SymbolDefinition(bad), box, grid)
    assert err.value.where[0] == (1,)


# ---------------------------------------------------------------------------
# lattice differences


def test_zero_difference_is_identity():
    box, grid = helpers.box_and_grid(2, 2)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(0))
    out = forward_difference(sym, (0, 0))
    np.testing.assert_array_equal(out.samples, sym.samples)


def test_first_difference_of_linear_profile():
    box, grid = helpers.box_and_grid(1, 5)
    k1 = box.points[:, 0].astype(complex)
    sym = SampledSymbol(box, grid, np.repeat(k1[:, None], grid.size, axis=1))
    out = forward_difference(sym, (1,))
    interior = np.abs(box.points[:, 0]) <= box.N - 1
    np.testing.assert_allclose(out.samples[interior], 1.0, atol=1e-15)


def test_second_difference_of_square_profile():
    box, grid = helpers.box_and_grid(1, 6)
    k1 = box.points[:, 0].astype(float)
    sym = SampledSymbol(box, grid, np.repeat((k1**2 + 0j)[:, None], grid.size, axis=1))
    out = forward_difference(sym, (2,))
    # direct double-difference oracle on the interior
    direct = (k1 + 2.0) ** 2 - 2.0 * (k1 + 1.0) ** 2 + k1**2
    interior = np.abs(k1) <= box.N - 2
    np.testing.assert_allclose(out.samples[interior, 0], direct[interior], atol=1e-13)
    np.testing.assert_allclose(out.samples[interior], 2.0, atol=1e-13)


def test_differences_commute_across_axes():
    box, grid = helpers.box_and_grid(2, 3)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(1))
    a = forward_difference(forward_difference(sym, (1, 0)), (0, 1))
    b = forward_difference(forward_difference(sym, (0, 1)), (1, 0))
    np.testing.assert_allclose(a.samples, b.samples, atol=1e-13)


def test_leibniz_identity_for_first_difference():
    box, grid = helpers.box_and_grid(1, 4)
    rng = np.random.default_rng(2)
    s, t = helpers.random_symbol(box, grid, rng), helpers.random_symbol(box, grid, rng)
    prod = SampledSymbol(box, grid, s.samples * t.samples)
    lhs = forward_difference(prod, (1,)).samples
    shifted_s = np.roll(s.samples.reshape(box.shape + (grid.size,)), -1, axis=0)
    rhs = (forward_difference(s, (1,)).samples * t.samples
           + shifted_s.reshape(box.size, grid.size) * forward_difference(t, (1,)).samples)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_generalized_difference_with_constant_weight_is_identity():
    box, grid = helpers.box_and_grid(1, 4)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(3))
    out = generalized_difference(sym, TorusFunction.ones(grid))
    np.testing.assert_allclose(out.samples, sym.samples, atol=1e-13)


@pytest.mark.parametrize("n,axis", [(1, 0), (2, 0), (2, 1)])
def test_generalized_difference_reproduces_first_difference(n, axis):
    box, grid = helpers.box_and_grid(n, 3)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(4))
    q = TorusFunction(grid, np.exp(2j * np.pi * grid.nodes[:, axis]) - 1.0)
    alpha = tuple(1 if i == axis else 0 for i in range(n))
    lhs = generalized_difference(sym, q).samples
    rhs = forward_difference(sym, alpha).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_generalized_difference_with_character_is_pure_shift():
    box, grid = helpers.box_and_grid(1, 4)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(5))
    q = TorusFunction(grid, np.exp(2j * np.pi * grid.nodes[:, 0]))
    out = generalized_difference(sym, q).samples
    shifted = np.roll(sym.samples.reshape(box.shape + (grid.size,)), -1, axis=0)
    np.testing.assert_allclose(out, shifted.reshape(box.size, grid.size), atol=1e-13)


# ---------------------------------------------------------------------------
# torus derivatives


def test_character_is_derivative_eigenfunction():
    box, grid = helpers.box_and_grid(1, 4)
    sym = helpers.shift_symbol(box, grid)
    out = x_derivative(sym, (1,))
    np.testing.assert_allclose(out.samples, sym.samples, atol=1e-13)


def test_derivative_of_constant_vanishes():
    box, grid = helpers.box_and_grid(2, 2)
    sym = constant_symbol(box, grid, 2.5 - 1j)
    for beta in [(1, 0), (0, 1), (2, 1)]:
        np.testing.assert_allclose(x_derivative(sym, beta).samples, 0.0, atol=1e-13)


def test_second_derivative_against_stencil_oracle():
    box, grid = helpers.box_and_grid(1, 8)
    sym = helpers.multiplier_symbol(box, grid,
                                    lambda x: np.exp(2j * np.pi * 3 * x[:, 0]))
    out = x_derivative(sym, (2,))
    fn = lambda t: np.exp(2j * np.pi * 3 * t)
    stencil = oracles.second_derivative_stencil(fn, grid.nodes[:, 0])
    expected = stencil / (2j * np.pi) ** 2
    assert np.max(np.abs(out.samples[0] - expected)) <= 1e-6
    np.testing.assert_allclose(out.samples, 9.0 * sym.samples, atol=1e-12)


def test_falling_derivative_order_one_equals_plain_derivative():
    box, grid = helpers.box_and_grid(1, 5)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(6))
    np.testing.assert_allclose(falling_derivative(sym, (1,)).samples,
                               x_derivative(sym, (1,)).samples, atol=1e-13)


@pytest.mark.parametrize("d,ell", [(0, 1), (0, 2), (1, 2), (2, 3)])
def test_falling_derivative_annihilates_low_degree_characters(d, ell):
    box, grid = helpers.box_and_grid(1, 6)
    sym = helpers.multiplier_symbol(box, grid,
                                    lambda x: np.exp(2j * np.pi * d * x[:, 0]))
    out = falling_derivative(sym, (ell,))
    assert np.max(np.abs(out.samples)) <= 1e-12


def test_falling_derivative_multiplier_value():
    box, grid = helpers.box_and_grid(1, 6)
    sym = helpers.multiplier_symbol(box, grid,
                                    lambda x: np.exp(2j * np.pi * 2 * x[:, 0]))
    out = falling_derivative(sym, (2,))
    np.testing.assert_allclose(out.samples, 2.0 * sym.samples, atol=1e-12)


def test_falling_derivative_annihilation_of_one_sided_polynomials():
    # per-axis degree < 2 with only nonnegative frequencies
    box, grid = helpers.box_and_grid(1, 5)
    rng = np.random.default_rng(7)
    c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    sym = helpers.multiplier_symbol(
        box, grid, lambda x: c[0] + c[1] * np.exp(2j * np.pi * x[:, 0]))
    assert np.max(np.abs(falling_derivative(sym, (2,)).samples)) <= 1e-12


# ---------------------------------------------------------------------------
# seminorms, orders, ellipticity


def test_seminorm_of_first_difference_symbol():
    box, grid = helpers.box_and_grid(1, 16)
    sym = helpers.forward_diff_symbol(box, grid)
    got = seminorm_estimate(sym, (0,), (0,), SymbolClassParams(0.0))
    # max over the grid of |e^{2 pi i x} - 1|; the grid max tends to 2
    assert got == pytest.approx(2.0, abs=0.01)
    assert got <= 2.0


def test_seminorm_vanishes_for_lattice_constant_rows():
    box, grid = helpers.box_and_grid(1, 8)
    sym = helpers.forward_diff_symbol(box, grid)
    assert seminorm_estimate(sym, (1,), (0,), SymbolClassParams(0.0)) <= 1e-14


def test_seminorm_of_weight_is_one():
    box, grid = helpers.box_and_grid(1, 8)
    sym = helpers.weight_symbol(box, grid, 1.0)
    got = seminorm_estimate(sym, (0,), (0,), SymbolClassParams(1.0))
    assert got == pytest.approx(1.0, rel=1e-12)


def test_seminorm_monotone_and_stable_under_refinement():
    params = SymbolClassParams(2.0)
    histories = {(0, 0): [], (1, 0): [], (1, 1): [], (2, 0): []}
    for N in (4, 8, 16):
        box, grid = helpers.box_and_grid(1, N)
        k1 = box.points[:, 0].astype(float)
        sym = SampledSymbol(
            box, grid,
            np.outer(1.0 + k1**2, 2.0 + np.cos(2 * np.pi * grid.nodes[:, 0])),
            params=params)
        for (a, b) in histories:
            histories[(a, b)].append(
                seminorm_estimate(sym, (a,), (b,), params, interior=(a >= 2)))
    for key, hist in histories.items():
        assert hist[0] <= hist[1] + 1e-12 and hist[1] <= hist[2] + 1e-12, (key, hist)
        assert hist[2] <= 4.0 * max(hist[0], 1e-12), (key, hist)  # bounded, not blowing up


@pytest.mark.parametrize("s,expected,tol", [(2.0, 2.0, 0.1), (0.0, 0.0, 0.05),
                                            (-1.0, -1.0, 0.1)])
def test_order_fit_on_pure_weights(s, expected, tol):
    box, grid = helpers.box_and_grid(1, 16)
    sym = helpers.weight_symbol(box, grid, s)
    assert abs(order_fit(sym) - expected) <= tol


def test_order_fit_requires_large_box():
    box, grid = helpers.box_and_grid(1, 3)
    with pytest.raises(DomainMismatchError):
        order_fit(constant_symbol(box, grid))


def test_order_fit_rejects_zero_symbol():
    box, grid = helpers.box_and_grid(1, 8)
    with pytest.raises(DomainMismatchError):
        order_fit(constant_symbol(box, grid, 0.0))


def test_order_fit_skips_zero_shells():
    box, grid = helpers.box_and_grid(1, 8)
    vals = np.zeros((box.size, grid.size), dtype=complex)
    mask = np.abs(box.points[:, 0]) >= 1  # zero out the innermost shell
    vals[mask] = (1.0 + box.norms[mask])[:, None] ** 2
    assert abs(order_fit(SampledSymbol(box, grid, vals)) - 2.0) <= 0.1


def test_ellipticity_of_example3():
    box, grid = helpers.box_and_grid(1, 8)
    rep = ellipticity_check(helpers.example3_symbol(box, grid, a=3.0), 0.0)
    assert rep.ok
    assert rep.constant == pytest.approx(3.0, rel=1e-12)


def test_first_difference_symbol_is_not_elliptic():
    box, grid = helpers.box_and_grid(1, 8)
    rep = ellipticity_check(helpers.forward_diff_symbol(box, grid), 0.0)
    assert not rep.ok
    assert rep.constant == pytest.approx(0.0, abs=1e-14)
    assert rep.witness_x == (0.0,)


def test_ellipticity_of_quadratic_weight():
    box, grid = helpers.box_and_grid(1, 8)
    rep = ellipticity_check(helpers.weight_symbol(box, grid, 2.0), 2.0)
    assert rep.ok
    assert rep.constant == pytest.approx(1.0, rel=1e-12)


def test_ellipticity_cutoff_must_stay_inside_box():
    box, grid = helpers.box_and_grid(1, 4)
    with pytest.raises(DomainMismatchError):
        ellipticity_check(constant_symbol(box, grid), 0.0, m_cut=4)


# ---------------------------------------------------------------------------
# periodic Taylor expansion


def test_taylor_of_constant():
    grid = helpers.box_and_grid(1, 4)[1]
    pt = periodic_taylor(TorusFunction(grid, np.full(grid.size, 2.5 + 1j)), 3)
    assert pt.coefficients[(0,)] == pytest.approx(2.5 + 1j)
    assert all(abs(c) <= 1e-13 for a, c in pt.coefficients.items() if a != (0,))
    assert all(np.max(np.abs(r)) <= 1e-13 for r in pt.remainders.values())


def test_taylor_of_difference_character():
    grid = helpers.box_and_grid(1, 8)[1]
    h = TorusFunction(grid, np.exp(2j * np.pi * grid.nodes[:, 0]) - 1.0)
    pt = periodic_taylor(h, 2)
    assert abs(pt.coefficients[(0,)]) <= 1e-13
    assert pt.coefficients[(1,)] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(pt.remainders[(2,)])) <= 1e-12
    assert np.max(np.abs(pt.reconstruct() - h.values)) <= 1e-10


@pytest.mark.parametrize("n,M,order", [(1, 9, 3), (2, 9, 2), (2, 9, 3)])
def test_taylor_reconstruction_of_random_trig_polynomial(n, M, order):
    grid = helpers.box_and_grid(n, (M - 1) // 2)[1]
    rng = np.random.default_rng(10 * n + order)
    vals = np.zeros(grid.size, dtype=complex)
    for _ in range(5):
        freq = rng.integers(-2, 3, size=n)
        coef = rng.standard_normal() + 1j * rng.standard_normal()
        vals += coef * np.exp(2j * np.pi * (grid.nodes @ freq.astype(float)))
    h = TorusFunction(grid, vals)
    pt = periodic_taylor(h, order)
    assert np.max(np.abs(pt.reconstruct() - h.values)) <= 1e-10


def test_taylor_coefficients_match_spectral_oracle():
    grid = helpers.box_and_grid(2, 4)[1]
    rng = np.random.default_rng(11)
    vals = np.zeros(grid.size, dtype=complex)
    for _ in range(4):
        freq = rng.integers(-2, 3, size=2)
        vals += (rng.standard_normal() + 1j * rng.standard_normal()) * np.exp(
            2j * np.pi * (grid.nodes @ freq.astype(float)))
    h = TorusFunction(grid, vals)
    pt = periodic_taylor(h, 3)
    for alpha, got in pt.coefficients.items():
        want = oracles.falling_coefficient_at_zero(h.values, grid, alpha)
        assert abs(got - want) <= 1e-10 * max(1.0, abs(want)), alpha


def test_taylor_order_validation():
    grid = helpers.box_and_grid(1, 3)[1]
    with pytest.raises(DomainMismatchError):
        periodic_taylor(TorusFunction.ones(grid), 0)


# ---------------------------------------------------------------------------
# multi-index plumbing


def test_multi_index_enumeration_and_factorials():
    idx = multi_indices_below(2, 3)
    assert idx[0] == (0, 0)
    assert set(idx) == {(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)}
    assert multi_factorial((3, 2)) == 12
    assert multi_factorial((0, 0)) == 1


def test_kappa_cache_consistency():
    box, grid = helpers.box_and_grid(1, 5)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(12))
    assert sym.kappa_defect() <= 1e-12


def test_x_coefficients_are_reflected_kappa_rows():
    box, grid = helpers.box_and_grid(1, 4)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(13))
    c = sym.x_coefficients()
    kap = sym.kappa()
    for l in range(-box.N, box.N + 1):
        np.testing.assert_allclose(c[:, box.index_of(np.array([l]))],
                                   kap[:, box.index_of(np.array([-l]))],
                                   atol=1e-14)
    # rows reconstruct through the coefficient convention
    E = np.exp(2j * np.pi * np.outer(box.points[:, 0], grid.nodes[:, 0]))
    np.testing.assert_allclose(c @ E, sym.samples, atol=1e-12)


def test_symbol_class_params_validation():
    SymbolClassParams(1.0, rho=1.0, delta=0.0).validate_for_calculus()
    with pytest.raises(DomainMismatchError):
        SymbolClassParams(1.0, rho=0.5, delta=0.5).validate_for_calculus()
    with pytest.raises(DomainMismatchError):
        SymbolClassParams(1.0, rho=1.5, delta=0.0).validate_for_calculus()


def test_mixed_axis_falling_derivative():
    box, grid = helpers.box_and_grid(2, 3)
    phase = np.exp(2j * np.pi * (2 * grid.nodes[:, 0] + grid.nodes[:, 1]))
    sym = SampledSymbol(box, grid,
                        np.broadcast_to(phase, (box.size, grid.size)).copy())
    # multipliers: 2*(2-1) = 2 on axis one, 1 on axis two
    out = falling_derivative(sym, (2, 1))
    np.testing.assert_allclose(out.samples, 2.0 * sym.samples, atol=1e-12)
    assert np.max(np.abs(falling_derivative(sym, (3, 0)).samples)) <= 1e-11


def test_taylor_reconstruction_exact_for_rough_grid_functions():
    # the expansion is an on-grid identity: no smoothness of h is needed for
    # reconstruction (only the coefficient values use the interpolant)
    grid = helpers.box_and_grid(1, 6)[1]
    rng = np.random.default_rng(19)
    h = TorusFunction(grid, rng.standard_normal(grid.size)
                      + 1j * rng.standard_normal(grid.size))
    pt = periodic_taylor(h, 3)
    assert np.max(np.abs(pt.reconstruct() - h.values)) <= 1e-10


def test_generalized_difference_with_squared_weight_is_second_difference():
    box, grid = helpers.box_and_grid(1, 5)
    sym = helpers.random_symbol(box, grid, np.random.default_rng(21))
    q = TorusFunction(grid, (np.exp(2j * np.pi * grid.nodes[:, 0]) - 1.0) ** 2)
    lhs = generalized_difference(sym, q).samples
    rhs = forward_difference(sym, (2,)).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-11
