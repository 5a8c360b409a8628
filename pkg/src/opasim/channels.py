"""Loss and detector-imperfection channels.

The production path uses closed-form Kraus sums (pure loss with
transmissivity T, then a quantum-limited amplifier with gain G).  A
beamsplitter dilation with a thermal ancilla is kept as a small-dimension
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .fock import DensityOperator, PureState, State, ZeroProbabilityHerald, check_health
from .measurement import HeraldedResult, _result, herald_pnrd
from .operators import apply_beamsplitter

#: The dilation oracle refuses single-mode dims above this.
DILATION_MAX_DIM = 32


@dataclass(frozen=True)
class DetectorModel:
    """Photon-number-resolving detector: efficiency, dark-count rate (cps), window (s)."""

    efficiency: float = 1.0
    dark_rate: float = 0.0
    window: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.dark_rate < 0.0:
            raise ValueError("dark_rate must be >= 0")
        if self.window <= 0.0:
            raise ValueError("window must be > 0")
        if self.dark_rate * self.window >= 1.0:
            raise ValueError("dark_rate * window must be < 1")

    @property
    def dark_probability(self) -> float:
        return self.dark_rate * self.window

    @property
    def ideal(self) -> bool:
        return self.efficiency == 1.0 and self.dark_rate == 0.0


@dataclass(frozen=True)
class ThermalLossParams:
    """Thermal-loss channel: efficiency eta and thermal mean photon number nbar."""

    eta: float
    nbar: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if self.nbar < 0.0:
            raise ValueError("nbar must be >= 0")

    @property
    def G(self) -> float:
        return 1.0 + (1.0 - self.eta) * self.nbar

    @property
    def T(self) -> float:
        return self.eta / self.G


def _rho(state: State) -> np.ndarray:
    if state.modes != 1:
        raise ValueError("single-mode state expected")
    return state.to_density().matrix


def pure_loss(state: State, tau: float, method: str = "kraus") -> DensityOperator:
    """Couple to vacuum on a beamsplitter of transmissivity tau and discard the ancilla."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if method == "kraus":
        out = _kernels.pure_loss_kernel(_rho(state), float(tau))
    elif method == "dilation":
        out = _dilation(_rho(state), tau, np.array([1.0]))
    else:
        raise ValueError(f"unknown method {method!r}")
    return DensityOperator(out, state.truncs)


def thermal_loss(state: State, params: ThermalLossParams, warn: bool = True) -> DensityOperator:
    """E(rho) = sum_{k,i} B_k A_i rho A_i^dag B_k^dag (sums truncated at the Hilbert dimension)."""
    rho = _rho(state)
    out = _kernels.pure_loss_kernel(rho, params.T)
    out = _kernels.amplifier_kernel(out, params.G)
    res = DensityOperator(out, state.truncs)
    check_health(res, "thermal_loss", warn=warn)
    return res


def thermal_state_populations(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if nbar == 0.0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    return np.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar))


def _dilation(rho: np.ndarray, eta: float, anc_pops: np.ndarray) -> np.ndarray:
    """Tr_anc[BS (rho (x) sum_k p_k |k><k|) BS^dag] with the ancilla populations renormalised.

    rho is split into its eigenvectors; each |v> (x) |k> goes through the
    beamsplitter photon-number block by block, so no block is truncated.
    """
    d = rho.shape[0]
    da = anc_pops.size
    if d > DILATION_MAX_DIM or da > DILATION_MAX_DIM:
        raise ValueError(f"dilation oracle limited to dim <= {DILATION_MAX_DIM}")
    pops = anc_pops / anc_pops.sum()
    w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    out = np.zeros((d, d), dtype=complex)
    for k in np.flatnonzero(pops):
        for i in np.flatnonzero(w):
            psi = np.zeros((d, k + 1), dtype=complex)
            psi[:, k] = V[:, i]
            o = apply_beamsplitter(psi, eta, out_dims=(d, d + k))
            out += pops[k] * w[i] * (o @ o.conj().T)
    return out


def thermal_loss_dilation_oracle(state: State, eta: float, nbar: float, anc_dim: int | None = None) -> DensityOperator:
    """Reference channel: BS(eta) mixing with a thermal state, ancilla traced out."""
    rho = _rho(state)
    d = rho.shape[0]
    anc_dim = anc_dim or d
    out = _dilation(rho, eta, thermal_state_populations(nbar, anc_dim))
    return DensityOperator(out, state.truncs)


def dark_count_mean_photon(model: DetectorModel) -> float:
    """Invert R_d D_w = (1-eta) nbar / (1 + (1-eta) nbar) for nbar."""
    p = model.dark_probability
    if p == 0.0:
        return 0.0
    if model.efficiency >= 1.0:
        raise ValueError("dark counts unrepresentable at unit efficiency")
    return p / ((1.0 - p) * (1.0 - model.efficiency))


def dark_probability_from_nbar(eta: float, nbar: float) -> float:
    x = (1.0 - eta) * nbar
    return x / (1.0 + x)


def detector_params(model: DetectorModel) -> ThermalLossParams:
    return ThermalLossParams(model.efficiency, dark_count_mean_photon(model))


def click_matrix(params: ThermalLossParams, dim: int) -> np.ndarray:
    """P[n, j] = <n| E(|j><j|) |n> for the thermal-loss channel E, levels < dim.

    Loss is binomial, the quantum-limited amplifier adds photons with
    P(n|m) = C(n, m) (G-1)^(n-m) / G^(n+1).
    """
    T, G = params.T, params.G
    j = np.arange(dim)
    m = np.arange(dim)
    lf = gammaln(np.arange(dim) + 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lc = lf[j][None, :] - lf[m][:, None] - lf[np.abs(j[None, :] - m[:, None])]
        if T < 1.0:
            L = np.exp(lc + m[:, None] * math.log(T) + (j[None, :] - m[:, None]) * math.log1p(-T))
        else:
            L = np.eye(dim)
    L = np.where(j[None, :] >= m[:, None], L, 0.0)
    if G > 1.0:
        n = m
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            la = lf[n][:, None] - lf[m][None, :] - lf[np.abs(n[:, None] - m[None, :])]
            A = np.exp(la + (n[:, None] - m[None, :]) * math.log(G - 1.0) - (n[:, None] + 1) * math.log(G))
        A = np.where(n[:, None] >= m[None, :], A, 0.0)
    else:
        A = np.eye(dim)
    return A @ L


def noisy_herald_pnrd(state: State, measured_mode: int, n: int, model: DetectorModel) -> HeraldedResult:
    """Thermal-loss the measured mode (eta, nbar from ``model``), then project onto |n>.

    The channel is phase covariant, so only the measured-mode diagonal
    blocks contribute:  rho_out = sum_j P(n|j) <j| rho |j>.  This equals the
    explicit channel-then-project construction exactly.
    """
    if model.ideal:
        return herald_pnrd(state, measured_mode, n)
    if state.modes != 2:
        raise ValueError("noisy_herald_pnrd needs a two-mode state")
    d1, d2 = state.dims
    dm = state.dims[measured_mode]
    if not 0 <= n < dm:
        raise ValueError(f"herald count {n} outside measured-mode dim {dm}")
    P = click_matrix(detector_params(model), dm)[n]
    keep = 1 - measured_mode
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape(d1, d2)
        cols = psi if measured_mode == 1 else psi.T
        red = (cols * P[None, :]) @ cols.conj().T
    else:
        t = state.matrix.reshape(d1, d2, d1, d2)
        red = np.einsum("ajbj,j->ab", t, P) if measured_mode == 1 else np.einsum("jajb,j->ab", t, P)
    return _result(DensityOperator(red, (state.truncs[keep],)))
