"""Fidelity, Wigner function, parity, GKP stabilisers and squeezing measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .fock import DensityOperator, PureState, State

#: dB per unit of squeezing parameter r.
DB_PER_NEPER = 20.0 / math.log(10.0)
#: Stabiliser length for the square GKP lattice.
GKP_LENGTH = math.sqrt(math.pi)


def squeezing_db(r: float) -> float:
    """dB = (20 / ln 10) r."""
    return DB_PER_NEPER * r


def db_to_r(db: float) -> float:
    return db / DB_PER_NEPER


def _matrix(state: State) -> np.ndarray:
    return state.to_density().matrix


def _check_normalized(state: State, tol: float = 1e-6):
    tr = state.trace()
    if abs(tr - 1.0) > tol:
        raise ValueError(f"state not normalised (trace {tr:.6g})")


def _support_factor(m: np.ndarray) -> np.ndarray:
    """A with m = A A^dag, keeping only eigenvalues above the numerical noise floor."""
    w, V = np.linalg.eigh(0.5 * (m + m.conj().T))
    floor = max(float(w[-1]), 0.0) * m.shape[0] * np.finfo(float).eps * 10.0
    keep = w > floor
    return V[:, keep] * np.sqrt(w[keep])


def fidelity(rho: State, sigma: State) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Pure-pure pairs use |<psi|phi>|^2; a pure member reduces the mixed
    case to <psi|rho|psi>.  Otherwise rho = A A^dag is restricted to its
    numerical support and F = (Tr sqrt(A^dag sigma A))^2, which keeps
    round-off eigenvalues of rank-deficient inputs out of the square root.
    """
    _check_normalized(rho)
    _check_normalized(sigma)
    if rho.dims != sigma.dims:
        raise ValueError("fidelity needs states of equal dimension")
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return float(abs(np.vdot(rho.amplitudes, sigma.amplitudes)) ** 2)
    if isinstance(rho, PureState):
        rho, sigma = sigma, rho
    if isinstance(sigma, PureState):
        v = sigma.amplitudes
        return float(np.real(np.vdot(v, rho.matrix @ v)))
    A = _support_factor(rho.matrix)
    inner = A.conj().T @ sigma.matrix @ A
    w = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


def wigner(state: State, xvec, pvec) -> np.ndarray:
    """W(x, p) on the grid xvec x pvec (array shape (len(pvec), len(xvec))).

    Convention x = a + a^dag, p = i(a - a^dag): vacuum gives
    exp(-(x^2+p^2)/2) / (2 pi), and the marginals reproduce
    :func:`opasim.measurement.quadrature_distribution`.  With this p the
    phase-space point is a = (x - i p)/2.  Computed by the iterative Laguerre
    recursion for the Fock-basis Wigner matrix elements (equivalent to the
    displaced-parity expectation (1/2pi) Tr[rho D(a) P D(a)^dag]).
    """
    if state.modes != 1:
        raise ValueError("wigner needs a single-mode state")
    xvec = np.asarray(xvec, dtype=float)
    pvec = np.asarray(pvec, dtype=float)
    if not (np.all(np.isfinite(xvec)) and np.all(np.isfinite(pvec))):
        raise ValueError("grid must be finite")
    X, P = np.meshgrid(xvec, pvec)
    A = 0.5 * (X - 1j * P)
    return 0.5 * _kernels.wigner_kernel(_matrix(state), A)


def parity(state: State) -> float:
    """<(-1)^n>."""
    d = state.truncs[0].dim
    sgn = (-1.0) ** np.arange(d)
    if isinstance(state, PureState):
        return float(np.sum(sgn * np.abs(state.amplitudes) ** 2))
    return float(np.sum(sgn * np.real(np.diag(state.matrix))))


def displacement_expectation(state: State, gamma: complex) -> complex:
    """Tr[rho D(gamma)] with exact Fock matrix elements of D."""
    d = state.truncs[0].dim
    D = _kernels.displacement_matrix(complex(gamma), d)
    if isinstance(state, PureState):
        v = state.amplitudes
        return complex(np.vdot(v, D @ v))
    return complex(np.sum(state.matrix.T * D))


def stabilizer_expectation(state: State, which: str, length: float = GKP_LENGTH) -> complex:
    """<S_x> = <exp(i l x)> = <D(i l)>, <S_p> = <exp(i l p)> = <D(l)>, l = sqrt(pi)."""
    if which == "Sx":
        return displacement_expectation(state, 1j * length)
    if which == "Sp":
        return displacement_expectation(state, length)
    raise ValueError("which must be 'Sx' or 'Sp'")


@dataclass(frozen=True)
class SqueezingReport:
    delta2_x: float
    delta2_p: float
    db_x: float
    db_p: float

    @property
    def symmetric_db(self) -> float:
        """Worst-case quadrature, min(dB_x, dB_p)."""
        return min(self.db_x, self.db_p)


def _delta2(S: complex) -> float:
    a = abs(S)
    if a <= 0.0:
        return math.inf
    return -math.log(a * a) / math.pi


def _db(delta2: float) -> float:
    if not math.isfinite(delta2):
        return -math.inf
    if delta2 <= 0.0:
        return math.inf
    return -10.0 * math.log10(delta2)


def effective_squeezing(state: State) -> SqueezingReport:
    """Delta^2 = -(1/pi) ln|<S>|^2 and dB = -10 log10 Delta^2, per quadrature."""
    _check_normalized(state)
    dx = _delta2(stabilizer_expectation(state, "Sx"))
    dp = _delta2(stabilizer_expectation(state, "Sp"))
    return SqueezingReport(dx, dp, _db(dx), _db(dp))


def quadrature_moments(state: State) -> tuple:
    """(<x>, Var x, <p>, Var p) from truncated ladder matrices."""
    d = state.truncs[0].dim
    sq = np.sqrt(np.arange(1, d))
    if isinstance(state, PureState):
        v = state.amplitudes
        av = np.zeros(d, dtype=complex)
        av[:-1] = sq * v[1:]
        a2v = np.zeros(d, dtype=complex)
        a2v[:-2] = sq[:-1] * sq[1:] * v[2:]
        m_a = np.vdot(v, av)
        m_a2 = np.vdot(v, a2v)
        m_n = np.sum(np.arange(d) * np.abs(v) ** 2)
        m_aad = m_n + np.sum(np.abs(v[:-1]) ** 2)  # a a^dag, truncated
    else:
        r = state.matrix
        # Tr[rho a] = sum_n sqrt(n+1) rho[n+1, n], Tr[rho a^2] = sum_n sqrt((n+1)(n+2)) rho[n+2, n]
        m_a = complex(np.sum(sq * np.diagonal(r, -1)))
        m_a2 = complex(np.sum(sq[:-1] * sq[1:] * np.diagonal(r, -2)))
        pops = np.real(np.diag(r))
        m_n = np.sum(np.arange(d) * pops)
        m_aad = m_n + np.sum(pops[:-1])
    # x^2 = a^2 + a^dag^2 + a a^dag + a^dag a ; p^2 = -(a^2 + a^dag^2) + a a^dag + a^dag a
    ex = 2.0 * m_a.real
    ep = -2.0 * m_a.imag  # <i(a - a^dag)> = i(<a> - <a>^*) = -2 Im<a>
    ex2 = 2.0 * m_a2.real + m_aad + m_n
    ep2 = -2.0 * m_a2.real + m_aad + m_n
    return float(ex), float(ex2 - ex**2), float(ep), float(ep2 - ep**2)


def squeezing_correction(state: State) -> float:
    """r_corr = (1/4) ln(Var x / Var p)."""
    _, vx, _, vp = quadrature_moments(state)
    return 0.25 * math.log(vx / vp)


def photon_number(state: State) -> float:
    d = state.truncs[0].dim
    n = np.arange(d)
    if isinstance(state, PureState):
        return float(np.sum(n * np.abs(state.amplitudes) ** 2))
    return float(np.sum(n * np.real(np.diag(state.matrix))))
