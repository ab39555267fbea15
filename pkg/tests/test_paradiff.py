import numpy as np
import pytest

import dispersio as dp
from dispersio.grid import (GridField, TWO_PI, abs_xi_grid, inner, l2_norm,
                            mode_field, random_field)
from dispersio.paradiff import (CutoffSpec, SandwichTerm, SeparableTerm,
                                band_input, band_operator_norms, besov_norm,
                                decompose, fit_band_slope, scheme_for,
                                slope_band_range, smoothstep)


N, D, L = 128, 1, TWO_PI


@pytest.fixture(scope="module")
def scheme():
    return scheme_for(N, D, L)


@pytest.fixture(scope="module")
def scheme512():
    # wide grid: enough dyadic bands for a meaningful slope fit
    return scheme_for(512, D, L)


def test_smoothstep_profile():
    assert smoothstep(-1.0) == 0.0
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(2.0) == 1.0
    assert smoothstep(0.5) == pytest.approx(0.5)
    # flat joins at both ends
    h = 1e-5
    assert smoothstep(h) < 1e-12
    assert smoothstep(1.0 - h) > 1.0 - 1e-12


def test_partition_of_unity_exact(scheme):
    total = sum(scheme.phi(k) for k in scheme.bands)
    assert np.abs(total - 1.0).max() < 1e-14


def test_reconstruction_exact(rng, scheme):
    u = random_field(rng, N, D, L, 2)
    rec = u.values.copy()
    for k in scheme.bands:
        rec = rec - scheme.band_project(u, k).values
    assert np.abs(rec).max() < 1e-12 * np.abs(u.values).max()


def test_single_mode_lands_in_its_block(scheme):
    # a pure mode at |xi| = 2^m sits in the core of block m and nowhere else
    for m in (3, 5):
        u = mode_field(N, D, L, 1, 0, (2 ** m,))
        blocks = decompose(u, scheme)
        for k, blk in enumerate(blocks):
            e = l2_norm(blk)
            if k == m:
                assert e == pytest.approx(l2_norm(u), rel=1e-12)
            else:
                assert e < 1e-12, (m, k, e)
        assert scheme.band_core_mask(m)[2 ** m]


def test_besov_norm_single_mode(scheme):
    u = mode_field(N, D, L, 1, 0, (8,), amplitude=2.0)
    # mode 8 = 2^3 lives in block 3 alone, sup magnitude 2
    assert besov_norm(u, scheme) == pytest.approx(2.0 / 8.0, rel=1e-10)


def test_multiplier_path_exact(rng, scheme):
    u = random_field(rng, N, D, L, 2)
    mult = np.sqrt(1.0 + abs_xi_grid(N, D, L) ** 2)
    sym = dp.multiplier_symbol(mult, 1.0, N, D, L)
    assert sym.is_multiplier
    got = dp.apply_T(sym, u, scheme)
    want = GridField.from_hat(mult[None] * u.hat, L)
    assert l2_norm(got - want) < 1e-12 * l2_norm(want)


def test_paraproduct_input_validation(rng):
    two = random_field(rng, N, D, L, 2)
    with pytest.raises(ValueError):
        dp.paraproduct_symbol(two)
    with pytest.raises(TypeError):
        dp.paraproduct_symbol(two.values[0])


def test_adjoint_pairing_separable(rng, scheme):
    a = random_field(rng, N, D, L, 1, decay=2.0)
    sym = dp.paraproduct_symbol(a)
    u = random_field(rng, N, D, L, 3)
    v = random_field(rng, N, D, L, 3)
    lhs = inner(dp.apply_T(sym, u, scheme), v)
    rhs = inner(u, dp.apply_T_adjoint(sym, v, scheme))
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)


def test_adjoint_pairing_matrix_field(rng, scheme):
    arr = rng.normal(size=(2, 2, N)) + 1j * rng.normal(size=(2, 2, N))
    hat = np.fft.fft(arr, axis=-1)
    hat *= (1.0 + abs_xi_grid(N, D, L)) ** -3.0
    arr = np.fft.ifft(hat, axis=-1)
    sym = dp.matrix_symbol(arr, N, D, L)
    u = random_field(rng, N, D, L, 2)
    v = random_field(rng, N, D, L, 2)
    lhs = inner(dp.apply_T(sym, u, scheme), v)
    rhs = inner(u, dp.apply_T_adjoint(sym, v, scheme))
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)


def test_adjoint_pairing_sandwich(rng, scheme):
    g = (rng.normal(size=(2, 2, 2, 2, N))
         + 1j * rng.normal(size=(2, 2, 2, 2, N)))
    xf = rng.normal(size=(2, 2, N)) + 1j * rng.normal(size=(2, 2, N))
    sym = dp.PdoSymbol(N, D, L, -1.0, (SandwichTerm(g, xf),))
    u = random_field(rng, N, D, L, 2)
    v = random_field(rng, N, D, L, 2)
    lhs = inner(dp.apply_T(sym, u, scheme), v)
    rhs = inner(u, dp.apply_T_adjoint(sym, v, scheme))
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)


def test_multiplier_adjoint_is_conjugate(rng, scheme):
    mult = (1.0 + abs_xi_grid(N, D, L)) * np.exp(0.3j)
    sym = dp.multiplier_symbol(mult, 1.0, N, D, L)
    star = dp.symbol_adjoint(sym)
    u = random_field(rng, N, D, L, 2)
    got = dp.apply_T(star, u, scheme)
    want = GridField.from_hat(np.conj(mult)[None] * u.hat, L)
    assert l2_norm(got - want) < 1e-13 * l2_norm(u)
    # and the symbol adjoint agrees with the operator adjoint exactly here
    assert l2_norm(got - dp.apply_T_adjoint(sym, u, scheme)) == 0.0


def test_compose_with_multiplier_right_factor_is_tiny(rng, scheme):
    # product against a pure multiplier incurs only reassociation rounding
    a = random_field(rng, N, D, L, 1, decay=2.0)
    pa = dp.paraproduct_symbol(a)
    mult = 1.0 / (1.0 + abs_xi_grid(N, D, L) ** 2)
    pf = dp.multiplier_symbol(mult, -2.0, N, D, L)
    u = random_field(rng, N, D, L, 2)
    defect = dp.compose_defect(pa, pf, u, scheme)
    assert l2_norm(defect) < 1e-13 * l2_norm(u)
    assert dp.symbol_product(pa, pf).order == pytest.approx(-2.0)


def test_symbol_product_rejects_entangled_matrices(rng):
    fmat = rng.normal(size=(2, 2, N)) + 0j
    xmat = rng.normal(size=(2, 2, N)) + 0j
    left = dp.PdoSymbol(N, D, L, 1.0, (SeparableTerm(None, fmat),))
    right = dp.matrix_symbol(xmat, N, D, L)
    with pytest.raises(NotImplementedError):
        dp.symbol_product(left, right)
    sand = dp.PdoSymbol(
        N, D, L, 0.0,
        (SandwichTerm(rng.normal(size=(2, 2, 2, 2, N)) + 0j, xmat),))
    with pytest.raises(NotImplementedError):
        dp.symbol_product(sand, right)
    with pytest.raises(NotImplementedError):
        dp.symbol_adjoint(dp.PdoSymbol(
            N, D, L, 1.0, (SeparableTerm(xmat, fmat),)))


def test_compose_defect_band_decay(rng, scheme512):
    # T_f T_a - T_{fa} with f of order 1 drops a full order on bands
    n = scheme512.n
    a = random_field(rng, n, D, L, 1, decay=3.0)
    pa = dp.paraproduct_symbol(a)
    mult = np.sqrt(1.0 + abs_xi_grid(n, D, L) ** 2)
    pf = dp.multiplier_symbol(mult, 1.0, n, D, L)

    def defect(u):
        return dp.compose_defect(pf, pa, u, scheme512)

    ks = list(slope_band_range(scheme512))
    norms = band_operator_norms(defect, scheme512, 2, ks, rng, trials=3)
    assert fit_band_slope(norms) < 1.0 - 0.8


def test_adjoint_defect_band_decay(rng, scheme512):
    n = scheme512.n
    a = random_field(rng, n, D, L, 1, decay=3.0)
    pa = dp.paraproduct_symbol(a)

    def defect(u):
        return dp.adjoint_defect(pa, u, scheme512)

    ks = list(slope_band_range(scheme512))
    norms = band_operator_norms(defect, scheme512, 2, ks, rng, trials=3)
    assert fit_band_slope(norms) < 0.0 - 0.8


def test_cutoff_difference_band_decay(rng, scheme512):
    n = scheme512.n
    a = random_field(rng, n, D, L, 1, decay=3.0)
    pa = dp.paraproduct_symbol(a)

    def defect(u):
        return dp.cutoff_difference(pa, u, scheme512.cutoff,
                                    CutoffSpec(nsep=4))

    ks = list(slope_band_range(scheme512))
    norms = band_operator_norms(defect, scheme512, 2, ks, rng, trials=3)
    assert fit_band_slope(norms) < 0.0 - 0.8


def test_paralinearization_constant_bounded(rng):
    a = random_field(rng, N, D, L, 1, decay=2.0)
    u = random_field(rng, N, D, L, 1)
    c = dp.paralinearization_constant(a, u)
    assert 0.0 <= c < 2.0


def test_band_input_confined_and_normalized(rng, scheme):
    f = band_input(rng, scheme, 5, 2, L)
    assert l2_norm(f) == pytest.approx(1.0, rel=1e-10)
    mask = scheme.band_core_mask(5)
    assert np.abs(f.hat[:, ~mask]).max() < 1e-12


def test_fit_band_slope_recovers_power_law():
    norms = {k: 2.0 ** (-1.5 * k) for k in range(4, 8)}
    assert fit_band_slope(norms) == pytest.approx(-1.5, abs=1e-9)
    with pytest.raises(ValueError):
        fit_band_slope({4: 1.0})


def test_time_commutator_linear_and_bounded(rng, scheme):
    u = random_field(rng, N, D, L, 2, decay=3.0)
    a1 = random_field(rng, N, D, L, 1, decay=1.0)
    out1 = dp.time_commutator(a1, u, scheme)
    out2 = dp.time_commutator(a1 * 2.0, u, scheme)
    assert l2_norm(out2 - out1 * 2.0) < 1e-12
    # a coefficient slope of unit Besov size keeps the output controlled
    spike = mode_field(N, D, L, 1, 0, (4,), amplitude=4.0)
    assert besov_norm(spike, scheme) == pytest.approx(1.0, rel=1e-9)
    out = dp.time_commutator(spike, u, scheme)
    assert 0.0 < l2_norm(out) < 10.0 * l2_norm(u)


def test_admissibility_constants():
    eps1, eps2 = dp.measure_admissibility()
    assert 0.0 < eps1 < eps2 < 1.0


def test_paracheck_report_fast_smoke():
    rep = dp.paracheck_report(n=256, d=1, trials=4, seed=1)
    assert rep["multiplier_rel_err"] < 1e-12
    assert rep["reconstruction_rel_err"] < 1e-12
    assert rep["partition_max_dev"] < 1e-13
    assert 0.0 < rep["eps1"] < rep["eps2"] < 1.0
    for entry in rep["defect_slopes"].values():
        assert entry["slope"] <= entry["naive_order"] - 0.8


def test_two_dim_scheme_and_operators(rng):
    n2 = 32
    sch = scheme_for(n2, 2, L)
    u = random_field(rng, n2, 2, L, 2)
    rec = u.values.copy()
    for k in sch.bands:
        rec = rec - sch.band_project(u, k).values
    assert np.abs(rec).max() < 1e-12
    a = random_field(rng, n2, 2, L, 1, decay=2.0)
    sym = dp.paraproduct_symbol(a)
    v = random_field(rng, n2, 2, L, 2)
    lhs = inner(dp.apply_T(sym, u, sch), v)
    rhs = inner(u, dp.apply_T_adjoint(sym, v, sch))
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)
