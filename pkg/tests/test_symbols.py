import numpy as np
import pytest

import dispersio as dp
from dispersio.symbols import herm_defect, skew_part

from conftest import random_passing_system


def test_quadratic_symbol_values(ex11):
    a = ex11.dispersion
    assert np.allclose(a.at(np.array([2.0])),
                       np.diag([-4.0, 4.0]), atol=1e-14)
    assert np.allclose(a.at(np.array([-2.0])),
                       np.diag([-4.0, 4.0]), atol=1e-14)


def test_quadratic_symbol_hermiticity_enforced():
    coeffs = np.zeros((1, 1, 2, 2), dtype=complex)
    coeffs[0, 0] = [[0.0, 1.0], [0.0, 0.0]]   # not Hermitian
    sym = dp.QuadraticSymbol(1, coeffs)
    with pytest.raises(dp.StructuralError):
        sym.at(np.array([1.0]))


def test_eigenstructure_branches(ex11):
    es = dp.eigenstructure(ex11.dispersion, np.array([1.0]))
    assert np.allclose(es.eigenvalues, [-1.0, 1.0], atol=1e-12)
    assert np.allclose(es.projectors[0], np.diag([1.0, 0.0]), atol=1e-12)
    assert np.allclose(es.projectors[1], np.diag([0.0, 1.0]), atol=1e-12)
    assert es.multiplicities == (1, 1)
    # projector completeness and idempotence
    total = sum(es.projectors)
    assert np.allclose(total, np.eye(2), atol=1e-12)


def test_eigenstructure_rejects_origin(ex11):
    with pytest.raises(dp.OriginFrequencyError):
        dp.eigenstructure(ex11.dispersion, np.zeros(1))


def test_eigenstructure_clusters_multiplicity():
    coeffs = np.zeros((1, 1, 3, 3), dtype=complex)
    coeffs[0, 0] = np.diag([1.0, 1.0, 2.0])
    es = dp.eigenstructure(dp.QuadraticSymbol(1, coeffs), np.array([1.5]))
    assert es.multiplicities == (2, 1)
    assert np.trace(es.projectors[0]).real == pytest.approx(2.0)


def test_track_branches_continuity(ex11):
    dirs = [np.array([np.cos(t), ]) for t in (0.0,)]
    dirs = [np.array([1.0]), np.array([-1.0])]
    branches = dp.track_branches(ex11.dispersion, dirs)
    assert len(branches) >= 1


def test_conjugator_frozen_value(ex11):
    es = dp.eigenstructure(ex11.dispersion, np.array([2.0]))
    v = dp.conjugator(es, ex11.coupling.at(np.array([2.0])))
    assert np.allclose(v, [[0.0, 0.25], [0.25, 0.0]], atol=1e-13)
    # Hermitian-valued and degree -1: scaling xi by 2 halves the entries
    assert herm_defect(v) < 1e-14
    es4 = dp.eigenstructure(ex11.dispersion, np.array([4.0]))
    v4 = dp.conjugator(es4, ex11.coupling.at(np.array([4.0])))
    assert np.allclose(v4, 0.5 * v, atol=1e-13)


def test_conjugation_remainder_hermitian_exact(ex11):
    xi = np.array([2.0])
    es = dp.eigenstructure(ex11.dispersion, xi)
    b = ex11.coupling.at(xi)
    rem = dp.conjugation_remainder(es, b)
    # for this system the skew part is fully removed
    assert np.abs(rem).max() < 1e-13


def test_conjugator_zero_for_hermitian_coupling(ex11):
    const = np.array([[[0.0, 1.0], [1.0, 0.0]]], dtype=complex)
    coupling = dp.FirstOrderSymbol(1, const)
    xi = np.array([3.0])
    es = dp.eigenstructure(ex11.dispersion, xi)
    v = dp.conjugator(es, coupling.at(xi))
    assert np.abs(v).max() < 1e-14


def test_remainder_identity_random(rng):
    # B - [V, A] equals the Hermitian part plus the diagonal-block skew part
    for _ in range(20):
        spec = random_passing_system(rng)
        xi = rng.normal(size=spec.dim)
        xi = xi / np.linalg.norm(xi) * rng.uniform(1.0, 5.0)
        es = dp.eigenstructure(spec.dispersion, xi)
        b = spec.coupling.at(xi)
        rem = dp.conjugation_remainder(es, b)
        expected = 0.5 * (b + b.conj().T)
        for p in es.projectors:
            expected = expected + p @ skew_part(b) @ p
        assert np.abs(rem - expected).max() < 1e-10 * max(np.abs(b).max(), 1)
        assert herm_defect(rem) < 1e-10 * max(np.abs(b).max(), 1)


def test_degenerate_gap_raises():
    coeffs = np.zeros((1, 1, 2, 2), dtype=complex)
    coeffs[0, 0] = np.diag([1.0, 1.0 + 1e-7])
    quad = dp.QuadraticSymbol(1, coeffs)
    es = dp.eigenstructure(quad, np.array([1.0]))
    assert es.multiplicities == (1, 1)   # clusters stay separate
    b = np.array([[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(dp.DegenerateGapError):
        dp.conjugator(es, b)


def test_coupling_check_passes_example(ex11):
    rep = dp.check_coupling_divisibility(ex11)
    assert rep.passed
    assert rep.diag_max < 1e-12
    assert rep.max_ratio == pytest.approx(0.5, rel=1e-6)


def test_coupling_check_fails_violator(violator):
    rep = dp.check_coupling_divisibility(violator)
    assert not rep.passed
    assert rep.diag_max > 0.5
    assert rep.worst is not None


def test_coupling_check_random_passing(rng):
    for _ in range(10):
        spec = random_passing_system(rng)
        rep = dp.check_coupling_divisibility(spec)
        assert rep.passed, rep.worst


def test_synthetic_crossing_pass_and_fail():
    # two branches whose gap closes along the diagonal direction in d = 2
    coeffs = np.zeros((2, 2, 2, 2), dtype=complex)
    coeffs[0, 0] = np.diag([1.0, 0.0])
    coeffs[1, 1] = np.diag([0.0, 1.0])
    quad = dp.QuadraticSymbol(2, coeffs)   # eigenvalues xi_1^2, xi_2^2

    # Hermitian coupling has no skew part to divide: passes
    good_const = np.zeros((2, 2, 2), dtype=complex)
    good_const[0] = [[0.5, 1.0], [1.0, -0.5]]
    good_const[1] = [[0.0, 2.0], [2.0, 1.0]]
    good = dp.SystemSpec(dispersion=quad,
                         coupling=dp.FirstOrderSymbol(2, good_const),
                         name="crossing_good")
    assert dp.check_coupling_divisibility(good).passed

    # constant skew off-diagonal block: caught at the coincident direction
    bad_const = np.zeros((2, 2, 2), dtype=complex)
    bad_const[0] = [[0.0, 1j], [1j, 0.0]]
    bad = dp.SystemSpec(dispersion=quad,
                        coupling=dp.FirstOrderSymbol(2, bad_const),
                        name="crossing_bad")
    rep = dp.check_coupling_divisibility(bad)
    assert not rep.passed


def test_double_system_structure(quasi):
    dbl = dp.double_system(quasi)
    assert dbl.ncomp == 2 * quasi.ncomp
    xi = np.array([1.5])
    a_big = dbl.dispersion.at(xi)
    a = quasi.dispersion.at(xi)
    assert np.allclose(a_big[:2, :2], a, atol=1e-13)
    assert np.allclose(a_big[2:, 2:], -a, atol=1e-13)
    u = np.array([0.3 + 0.1j, -0.2j])
    du = dp.doubled_state(u)
    assert np.allclose(du[2:], np.conj(u), atol=1e-15)
    b_big = dbl.coupling.at(xi, du)
    b = quasi.coupling.at(xi, u)
    assert np.allclose(b_big[:2, :2], b, atol=1e-12)
    assert np.allclose(b_big[2:, 2:], np.conj(b), atol=1e-12)


def test_conjugate_check_matches_doubled(rng):
    # a conjugate coupling checked directly agrees with checking the
    # doubled system, which carries it as an off-diagonal block
    for _ in range(5):
        spec0 = random_passing_system(rng, ncomp=2, dim=1)
        c = rng.normal(size=(1, 2, 2)) + 1j * rng.normal(size=(1, 2, 2))
        c = c + np.swapaxes(c, 1, 2)   # symmetric: C - C^T = 0, passes
        spec = dp.SystemSpec(dispersion=spec0.dispersion,
                             coupling=spec0.coupling,
                             conjugate_coupling=dp.FirstOrderSymbol(1, c),
                             name="with_conj")
        direct = dp.check_conjugate_divisibility(spec)
        doubled = dp.check_coupling_divisibility(dp.double_system(spec))
        assert direct.passed == doubled.passed


def test_conjugate_check_flags_asymmetric(rng):
    spec0 = random_passing_system(rng, ncomp=2, dim=1)
    c = np.zeros((1, 2, 2), dtype=complex)
    c[0] = [[0.0, 1.0], [-1.0, 0.0]]   # antisymmetric, C - C^T != 0
    spec = dp.SystemSpec(dispersion=spec0.dispersion,
                         coupling=spec0.coupling,
                         conjugate_coupling=dp.FirstOrderSymbol(1, c),
                         name="with_bad_conj")
    # the pair family is (C - C^T) against gap sums lambda_p + lambda_q;
    # for a dispersion with eigenvalues of both signs some sum crosses zero
    rep = dp.check_conjugate_divisibility(spec)
    dbl = dp.check_coupling_divisibility(dp.double_system(spec))
    assert rep.passed == dbl.passed


def test_wirtinger_partials_polynomial():
    c1 = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    c2 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

    def f(u, v):
        # linear in v_1 and conj(v_1)
        return c1 @ v[0] + c2 @ np.conj(v[0])

    u = np.array([0.1, 0.2 + 0.3j])
    v = np.array([[0.05 + 0.02j, -0.01j]])
    dv, dvbar = dp.wirtinger_partials(f, u, v)
    assert np.allclose(dv[0], c1, atol=1e-7)
    assert np.allclose(dvbar[0], c2, atol=1e-7)
    b, c = dp.linearized_coupling(dv, dvbar)
    assert np.allclose(b.at(np.array([2.0])), 2.0 * c1, atol=1e-6)
    assert np.allclose(c.at(np.array([2.0])), 2.0 * c2, atol=1e-6)


def test_first_order_polynomial_evaluation(quasi):
    u = np.array([0.2 + 0.1j, -0.3])
    b = quasi.coupling.at(np.array([1.0]), u)
    expected = (np.array([[0.0, 0.5], [-0.5, 0.0]])
                + 0.2 * np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert np.allclose(b, expected, atol=1e-13)


def test_first_order_bound_on_ball(ex11):
    bound = ex11.coupling.bound_on_ball(1.0)
    assert bound == pytest.approx(1.0, rel=1e-6)
