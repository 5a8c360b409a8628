import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opasim.fock import PureState, vacuum
from opasim.measurement import quadrature_distribution
from opasim.metrics import effective_squeezing, fidelity, parity, photon_number, quadrature_moments
from opasim.targets import (
    CatBasis,
    CatSpec,
    GkpSpec,
    coherent,
    ideal_cat,
    ideal_cubic,
    ideal_gkp,
    ideal_photon_added_squeezed,
    squeezed_vacuum,
)

from oracles import displace_unitary, squeeze_unitary


def test_trivial_limits():
    np.testing.assert_allclose(squeezed_vacuum(0.0, 6).amplitudes, vacuum(6).amplitudes)
    np.testing.assert_allclose(coherent(0.0, 6).amplitudes, vacuum(6).amplitudes)
    np.testing.assert_allclose(ideal_cubic(0.0, 6).amplitudes, vacuum(6).amplitudes, atol=1e-12)
    np.testing.assert_allclose(ideal_photon_added_squeezed(0.3, 0, 30).amplitudes, squeezed_vacuum(0.3, 30).amplitudes)
    e1 = np.zeros(6)
    e1[1] = 1
    np.testing.assert_allclose(ideal_photon_added_squeezed(0.0, 1, 6).amplitudes, e1)


def test_squeezed_vacuum_variances():
    _, vx, _, vp = quadrature_moments(squeezed_vacuum(0.3, 60))
    assert vx == pytest.approx(math.exp(-0.6), rel=1e-10)
    assert vp == pytest.approx(math.exp(0.6), rel=1e-10)


def test_squeezed_vacuum_matches_expm():
    ref = squeeze_unitary(0.5, 90)[:40, 0]
    np.testing.assert_allclose(squeezed_vacuum(0.5, 40).amplitudes, ref / np.linalg.norm(ref), atol=1e-10)


def test_coherent_matches_displacement():
    ref = displace_unitary(1.1 - 0.4j, 80)[:30, 0]
    np.testing.assert_allclose(coherent(1.1 - 0.4j, 30).amplitudes, ref, atol=1e-10)


@pytest.mark.parametrize("gamma", [0.05, 0.1, 0.2])
def test_cubic_x_mean_zero(gamma):
    ex, _, _, _ = quadrature_moments(ideal_cubic(gamma, 100, warn=False))
    assert abs(ex) < 1e-8


def test_cubic_truncation_convergence():
    # the gamma=0.1 state keeps ~1.7e-8 of its population above level 100 (converged in the padding)
    s = ideal_cubic(0.1, 100)
    big = ideal_cubic(0.1, 140)
    small_padded = PureState(np.concatenate([s.amplitudes, np.zeros(40)]), (140,))
    assert fidelity(small_padded, big) >= 1 - 1e-8


def test_cat_parity_structure():
    even = ideal_cat(CatSpec(4.9, 0.0, "even"), 120)
    odd = ideal_cat(CatSpec(6.33, 0.24, "odd"), 150)
    assert not np.any(even.amplitudes[1::2])
    assert not np.any(odd.amplitudes[0::2])
    assert parity(even) == pytest.approx(1.0) and parity(odd) == pytest.approx(-1.0)
    small_odd = ideal_cat(CatSpec(0.2, 0.0, "odd"), 20)
    assert photon_number(small_odd) >= 1.0


def test_cat_matches_expm_construction():
    d, D = 40, 100
    vac = squeeze_unitary(0.3, D)[:, 0]
    plus = displace_unitary(1.5, D) @ vac
    minus = displace_unitary(-1.5, D) @ vac
    ref = (plus - minus)[:d]
    ref /= np.linalg.norm(ref)
    got = ideal_cat(CatSpec(1.5, 0.3, "odd"), d)
    assert abs(np.vdot(ref, got.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_cat_basis_reuse_is_consistent():
    b = CatBasis(80)
    np.testing.assert_allclose(b.amplitudes(3.0, 0.1, "even"), ideal_cat(CatSpec(3.0, 0.1), 80).amplitudes)


def test_cat_spec_validation():
    with pytest.raises(ValueError):
        CatSpec(1.0, 0.0, "weird")
    with pytest.raises(ValueError):
        CatSpec(1j)


def test_gkp_wide_delta_single_peak():
    spec = GkpSpec(logical=0, delta=1.0)
    peaks = spec.peaks()
    assert peaks[0] == (0.0, 1.0)
    # neighbours carry exp(-pi/2) ~ 0.21 of the central amplitude, the rest far less
    assert all(w <= math.exp(-math.pi / 2) + 1e-12 for x, w in peaks[1:])


def test_gkp_ten_db_self_consistent():
    spec = GkpSpec.from_db(10.0)
    assert spec.delta**2 == pytest.approx(0.1)
    s = ideal_gkp(spec, 160)
    rep = effective_squeezing(s)
    assert rep.symmetric_db == pytest.approx(10.0, abs=0.3)
    assert rep.db_x == pytest.approx(10.0, abs=0.3)
    # the envelope as written is sqrt2 wider than a symmetric one, so p comes out 3 dB tighter
    assert rep.db_p == pytest.approx(10.0 + 10 * math.log10(2), abs=0.3)


def test_gkp_logical_states_are_shifted():
    x = np.array([0.0, math.sqrt(math.pi)])
    z = quadrature_distribution(ideal_gkp(GkpSpec(0), 160), "x", x)
    o = quadrature_distribution(ideal_gkp(GkpSpec(1), 160), "x", x)
    assert z[0] > 100 * z[1]
    assert o[1] > 100 * o[0]


@given(st.floats(0.0, 1.0), st.integers(0, 5))
def test_photon_added_norm_and_parity(r, n):
    s = ideal_photon_added_squeezed(r, n, 80, warn=False)
    assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0)
    assert parity(s) == pytest.approx((-1.0) ** n)
