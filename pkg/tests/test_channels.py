import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opasim.channels import (
    DetectorModel,
    ThermalLossParams,
    click_matrix,
    dark_count_mean_photon,
    dark_probability_from_nbar,
    detector_params,
    noisy_herald_pnrd,
    pure_loss,
    thermal_loss,
    thermal_loss_dilation_oracle,
)
from opasim.fock import DensityOperator, PureState, fock_state, tensor, vacuum
from opasim.measurement import herald_pnrd
from opasim.metrics import fidelity, photon_number
from opasim.operators import TwoModeSqueeze, build_unitary
from opasim.targets import coherent

from oracles import random_density, thermal_loss_bruteforce, trace_distance


def test_pure_loss_identity(rng):
    rho = DensityOperator(random_density(10, rng), (10,))
    np.testing.assert_allclose(pure_loss(rho, 1.0).matrix, rho.matrix, atol=1e-14)


def test_pure_loss_coherent():
    out = pure_loss(coherent(1.5, 40), 0.6)
    target = coherent(math.sqrt(0.6) * 1.5, 40)
    assert fidelity(out, target) == pytest.approx(1.0, abs=1e-10)


def test_pure_loss_kraus_matches_dilation(rng):
    rho = DensityOperator(random_density(12, rng), (12,))
    a = pure_loss(rho, 0.73)
    b = pure_loss(rho, 0.73, method="dilation")
    assert trace_distance(a.matrix, b.matrix) <= 1e-10


def test_pure_loss_composition(rng):
    rho = DensityOperator(random_density(15, rng), (15,))
    a = pure_loss(pure_loss(rho, 0.9), 0.8)
    b = pure_loss(rho, 0.72)
    np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-10)


def test_pure_loss_rejects_bad_tau():
    with pytest.raises(ValueError):
        pure_loss(vacuum(3), 1.5)
    with pytest.raises(ValueError):
        pure_loss(vacuum(3), 0.5, method="magic")


def test_thermal_loss_identity(rng):
    rho = DensityOperator(random_density(8, rng), (8,))
    np.testing.assert_allclose(thermal_loss(rho, ThermalLossParams(1.0, 0.0)).matrix, rho.matrix, atol=1e-14)
    np.testing.assert_allclose(thermal_loss_dilation_oracle(rho, 1.0, 3.0).matrix, rho.matrix, atol=1e-12)


def test_thermal_loss_vacuum_mean_photon():
    out = thermal_loss(vacuum(30), ThermalLossParams(0.5, 1.0))
    assert photon_number(out) == pytest.approx(0.5, abs=1e-8)
    ref = thermal_loss_dilation_oracle(vacuum(20), 0.5, 1.0, anc_dim=30)
    assert photon_number(ref) == pytest.approx(0.5, abs=1e-6)


def test_thermal_loss_first_moment_frozen():
    # eta * 2 + (1 - eta) * nbar, dense BS + thermal ancilla at dim 12 / 20
    out = thermal_loss(fock_state(2, 40), ThermalLossParams(0.7, 0.4))
    assert photon_number(out) == pytest.approx(1.5199999967160602, abs=1e-8)


@pytest.mark.parametrize("eta,nbar", [(0.95, 1e-3), (0.8, 0.05), (0.6, 0.3)])
def test_thermal_loss_matches_dilation(rng, eta, nbar):
    d = 20
    rho = DensityOperator(random_density(d, rng, support=10), (d,))
    kraus = thermal_loss(rho, ThermalLossParams(eta, nbar), warn=False)
    dil = thermal_loss_dilation_oracle(rho, eta, nbar)
    # both routes truncate at level d; compare on the block unaffected by the cut
    assert trace_distance(kraus.matrix[:12, :12], dil.matrix[:12, :12]) <= 1e-10


def test_thermal_loss_matches_expm_oracle(rng):
    d = 10
    rho = random_density(d, rng, support=5)
    ref = thermal_loss_bruteforce(rho, 0.95, 1e-3, 12)
    got = thermal_loss(DensityOperator(rho, (d,)), ThermalLossParams(0.95, 1e-3), warn=False)
    assert trace_distance(got.matrix[:6, :6], ref[:6, :6]) <= 1e-10


def test_thermal_loss_trace_preserving(rng):
    rho = DensityOperator(random_density(40, rng, support=15), (40,))
    out = thermal_loss(rho, ThermalLossParams(0.9, 0.2))
    assert out.trace() == pytest.approx(1.0, abs=1e-8)


def test_dark_count_examples():
    assert dark_count_mean_photon(DetectorModel(0.95, 0.0, 1e-9)) == 0.0
    m = DetectorModel(0.95, 400.0, 1e-9)
    nbar = dark_count_mean_photon(m)
    assert nbar == pytest.approx(4e-7 / ((1 - 4e-7) * 0.05), rel=1e-12)
    assert nbar == pytest.approx(8.0e-6, rel=1e-3)
    assert dark_probability_from_nbar(0.95, nbar) == pytest.approx(4e-7, abs=1e-14 * 4e-7)
    with pytest.raises(ValueError, match="unrepresentable at unit efficiency"):
        dark_count_mean_photon(DetectorModel(1.0, 20.0, 1e-9))


@given(st.floats(0.5, 0.999), st.floats(1e-9, 1e-2))
def test_dark_count_round_trip(eta, nbar):
    p = dark_probability_from_nbar(eta, nbar)
    m = DetectorModel(eta, p / 1e-9, 1e-9)
    assert dark_count_mean_photon(m) == pytest.approx(nbar, rel=1e-9)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorModel(0.0)
    with pytest.raises(ValueError):
        DetectorModel(0.9, -1.0)
    with pytest.raises(ValueError):
        DetectorModel(0.9, 2e9, 1e-9)
    with pytest.raises(ValueError):
        ThermalLossParams(0.9, -0.1)


def test_click_matrix_matches_channel_diagonal():
    params = ThermalLossParams(0.9, 0.05)
    d = 25
    P = click_matrix(params, d)
    for j in (0, 1, 3):
        out = thermal_loss(fock_state(j, d), params, warn=False)
        np.testing.assert_allclose(P[:, j], np.diag(out.matrix).real, atol=1e-12)
    # columns of low levels sum to one
    np.testing.assert_allclose(P[:, :5].sum(axis=0), 1.0, atol=1e-10)


def test_click_matrix_extreme_dim_is_finite():
    P = click_matrix(detector_params(DetectorModel(0.5, 1e7, 1e-8)), 300)
    assert np.all(np.isfinite(P))


def test_noisy_herald_ideal_model_reduces_to_projection():
    d = 10
    tmsv = build_unitary(TwoModeSqueeze(0.5), d) @ tensor(vacuum(d), vacuum(d))
    a = noisy_herald_pnrd(tmsv, 1, 2, DetectorModel())
    b = herald_pnrd(tmsv, 1, 2)
    assert a.probability == b.probability


def test_noisy_herald_matches_channel_then_project(rng):
    d = 6
    psi = (rng.normal(size=d * d) + 1j * rng.normal(size=d * d)).reshape(d, d)
    psi[:, 4:] = 0
    s = PureState(psi.ravel() / np.linalg.norm(psi), (d, d))
    model = DetectorModel(0.9, 2e5, 1e-7)
    params = detector_params(model)
    got = noisy_herald_pnrd(s, 1, 1, model)
    # explicit route: dense dilation channel on every (a, b) block of mode 2, then project on |1>
    rho = s.to_density().matrix.reshape(d, d, d, d)
    out = np.array([[thermal_loss_bruteforce(rho[a, :, b, :], params.eta, params.nbar, 16)[1, 1] for b in range(d)] for a in range(d)])
    np.testing.assert_allclose(got.unnormalized.matrix, out, atol=1e-9)
