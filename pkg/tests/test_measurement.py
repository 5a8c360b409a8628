import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opasim.fock import DensityOperator, PureState, ZeroProbabilityHerald, fock_state, tensor, vacuum
from opasim.measurement import (
    breed_window,
    breed_x0,
    herald_homodyne_x0,
    herald_pnrd,
    homodyne_x_functional,
    quadrature_distribution,
    rotate,
)
from opasim.metrics import parity
from opasim.operators import Beamsplitter, TwoModeSqueeze, build_unitary
from opasim.targets import CatSpec, ideal_cat

from oracles import bs_unitary, random_density, random_pure, x_wavefunction


def test_functional_matches_hermite_polynomials():
    x = np.linspace(-6, 6, 25)
    for n in (0, 1, 2, 7, 20):
        got = np.array([homodyne_x_functional(xi, 30)[n] for xi in x])
        np.testing.assert_allclose(got, x_wavefunction(n, x), atol=1e-12)


def test_functional_examples():
    assert homodyne_x_functional(0.0, 5)[1] == 0.0
    x = np.arange(-10, 10.0001, 0.01)
    f0 = np.array([homodyne_x_functional(xi, 2)[0] for xi in x])
    assert np.trapezoid(f0**2, x) == pytest.approx(1.0, abs=1e-8)


def test_functional_stable_at_high_n():
    f = homodyne_x_functional(3.0, 400)
    assert np.all(np.isfinite(f))
    assert np.abs(f).max() < 1.0


def test_vacuum_x_distribution_variance():
    x = np.arange(-10, 10.0001, 0.01)
    pr = quadrature_distribution(vacuum(10), "x", x)
    assert np.trapezoid(pr, x) == pytest.approx(1.0, abs=1e-8)
    assert np.trapezoid(x**2 * pr, x) == pytest.approx(1.0, abs=1e-6)
    pp = quadrature_distribution(vacuum(10), "p", x)
    np.testing.assert_allclose(pp, pr, atol=1e-14)


def test_quadrature_distribution_integrates_to_trace(rng):
    rho = DensityOperator(0.7 * random_density(15, rng, support=8), (15,))
    x = np.linspace(-12, 12, 2001)
    for q in ("x", "p"):
        assert np.trapezoid(quadrature_distribution(rho, q, x), x) == pytest.approx(0.7, abs=1e-8)


def test_quadrature_distribution_rejects_bad_input():
    with pytest.raises(ValueError):
        quadrature_distribution(vacuum(4), "q", [0.0])
    with pytest.raises(ValueError):
        quadrature_distribution(vacuum(4), "x", [np.inf])


def test_cat_p_distributions():
    d = 120
    p = np.array([-0.3, 0.0, 0.3])
    even = quadrature_distribution(ideal_cat(CatSpec(4.9, 0.0, "even"), d), "p", p)
    odd = quadrature_distribution(ideal_cat(CatSpec(5.7, 0.0, "odd"), d), "p", p)
    assert even[1] > even[0] and even[1] > even[2]
    assert odd[1] < 1e-12


def test_herald_pnrd_vacuum():
    res = herald_pnrd(tensor(vacuum(4), vacuum(4)), 1, 0)
    assert res.probability == pytest.approx(1.0)
    np.testing.assert_allclose(res.normalized.amplitudes, vacuum(4).amplitudes)
    with pytest.raises(ZeroProbabilityHerald):
        herald_pnrd(tensor(vacuum(4), vacuum(4)), 1, 2)


def test_herald_pnrd_two_mode_squeezed():
    kappa, d = 0.3023, 20
    tmsv = build_unitary(TwoModeSqueeze(kappa), d) @ tensor(vacuum(d), vacuum(d))
    lam2 = math.tanh(kappa / 2) ** 2
    total = 0.0
    for n in range(d):
        res = herald_pnrd(tmsv, 1, n) if n < 8 else None
        if res is not None:
            assert res.probability == pytest.approx(lam2**n * (1 - lam2), rel=1e-10)
            total += res.probability
    assert total == pytest.approx(1.0 - lam2**8, rel=1e-10)


def test_herald_pnrd_sums_to_trace(rng):
    v = random_pure(36, rng)
    s = PureState(0.5 * v, (6, 6))
    total = sum(herald_pnrd(s, 0, n).probability for n in range(6) if np.linalg.norm(v.reshape(6, 6)[n]) > 0)
    assert total == pytest.approx(0.25, abs=1e-12)


def test_herald_pnrd_pure_and_density_agree(rng):
    s = PureState(random_pure(20, rng), (4, 5))
    for mode in (0, 1):
        a = herald_pnrd(s, mode, 2)
        b = herald_pnrd(s.to_density(), mode, 2)
        assert a.probability == pytest.approx(b.probability, rel=1e-12)
        np.testing.assert_allclose(a.normalized.to_density().matrix, b.normalized.matrix, atol=1e-12)


def test_homodyne_vacuum_through_balanced_beamsplitter():
    d = 8
    joint = build_unitary(Beamsplitter(0.5), d) @ tensor(vacuum(d), vacuum(d))
    res = herald_homodyne_x0(joint, 1)
    assert res.is_density
    assert res.probability == pytest.approx((2 * math.pi) ** -0.5, rel=1e-12)
    np.testing.assert_allclose(np.abs(res.normalized.amplitudes), vacuum(d).amplitudes, atol=1e-12)
    res2 = breed_x0(vacuum(d), vacuum(d))
    assert res2.probability == pytest.approx((2 * math.pi) ** -0.5, rel=1e-12)


def _brute_breed(r1, r2, x0=0.0):
    """Dense route: embed, BS(1/2) via expm, homodyne on mode 2, keep mode 1."""
    d = r1.shape[0]
    D = 2 * d - 1
    big1 = np.zeros((D, D), dtype=complex)
    big2 = np.zeros((D, D), dtype=complex)
    big1[:d, :d], big2[:d, :d] = r1, r2
    U = bs_unitary(0.5, D, D)
    joint = U @ np.kron(big1, big2) @ U.conj().T
    f = np.array([homodyne_x_functional(x0, D)]).ravel()
    red = np.einsum("ajbk,j,k->ab", joint.reshape(D, D, D, D), f, f)
    return red


@pytest.mark.parametrize("x0", [0.0, 0.7])
def test_breed_matches_dense_two_mode_route(rng, x0):
    d = 6
    r1 = random_density(d, rng)
    r2 = random_density(d, rng)
    ref = _brute_breed(r1, r2, x0)
    got = breed_x0(DensityOperator(r1, (d,)), DensityOperator(r2, (d,)), d_out=2 * d - 1, x0=x0)
    np.testing.assert_allclose(got.unnormalized.matrix, ref, atol=1e-12)


def test_breed_pure_and_density_paths_agree(rng):
    a = PureState(random_pure(10, rng), (10,))
    b = PureState(random_pure(10, rng), (10,))
    p = breed_x0(a, b)
    m = breed_x0(a.to_density(), b.to_density())
    assert p.probability == pytest.approx(m.probability, rel=1e-10)
    np.testing.assert_allclose(p.unnormalized.to_density().matrix, m.unnormalized.matrix, atol=1e-10)


def test_breeding_even_cats_keeps_parity_and_forms_comb():
    alpha = 4.9
    cat = ideal_cat(CatSpec(alpha, 0.0, "even"), 140)
    out = breed_x0(cat, cat).normalized
    assert parity(out) == pytest.approx(1.0, abs=1e-9)
    # x peaks move from +-2 alpha to +-2 sqrt2 alpha; the p marginal is a fringe comb centred at 0
    x = np.linspace(-16, 16, 641)
    px = quadrature_distribution(out, "x", x)
    assert abs(abs(x[np.argmax(px)]) - 2 * math.sqrt(2) * alpha) < 0.1
    pp = quadrature_distribution(out, "p", x)
    peaks = [i for i in range(1, x.size - 1) if pp[i] > pp[i - 1] and pp[i] > pp[i + 1] and pp[i] > 1e-2 * pp.max()]
    assert len(peaks) >= 9
    assert x[np.argmax(pp)] == 0.0


def test_breeding_small_cats_match_dense_route():
    cat = ideal_cat(CatSpec(1.2, 0.1, "even"), 10, warn=False).to_density().matrix
    ref = _brute_breed(cat, cat)
    got = breed_x0(DensityOperator(cat, (10,)), DensityOperator(cat, (10,)), d_out=19)
    np.testing.assert_allclose(got.unnormalized.matrix, ref, atol=1e-12)
    assert parity(got.normalized) == pytest.approx(parity(DensityOperator(ref / np.trace(ref).real, (19,))), abs=1e-12)


def test_breed_window_scales_density():
    c = ideal_cat(CatSpec(2.0, 0.0, "even"), 40)
    dens = breed_x0(c, c).probability
    res = breed_window(c, c, 0.01)
    assert not res.is_density
    assert res.probability == pytest.approx(0.01 * dens)


@given(st.floats(-math.pi, math.pi))
def test_rotation_preserves_photon_statistics(phi):
    v = np.arange(1, 7, dtype=complex)
    s = PureState(v / np.linalg.norm(v), (6,))
    out = rotate(s, phi)
    np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(s.amplitudes))
    np.testing.assert_allclose(rotate(out.to_density(), -phi).matrix, s.to_density().matrix, atol=1e-13)


def test_fock_one_x_distribution_zero_at_origin():
    assert quadrature_distribution(fock_state(1, 5), "x", [0.0])[0] == 0.0
