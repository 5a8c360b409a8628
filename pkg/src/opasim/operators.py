"""Unitaries, quadratures and the closed-form heralded OPA Kraus operator.

Conventions: x = a + a^dag, p = i(a - a^dag) (vacuum variance 1),
S(r) = exp[(r/2)(a^2 - a^dag^2)] (x-squeezed for r > 0),
D(alpha) = exp(alpha a^dag - alpha^* a), BS(tau) = exp[arccos(sqrt tau)(a^dag b - a b^dag)],
U_OPA(kappa) = exp[(kappa/2)(a1 a2 - a1^dag a2^dag)].

All exponentials are computed from the eigendecomposition of the Hermitian
form of the generator, so every truncated unitary is unitary to machine
precision.  Two-mode generators are exponentiated block by block using the
conserved photon-number combination, which keeps the cost far below a dense
d^2 x d^2 diagonalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import gammaln

from .fock import PureState, DensityOperator, Truncation, _as_trunc

#: Maximum tolerated deviation from anti-Hermiticity for expm_skew input.
SKEW_TOL = 1e-10


@dataclass(frozen=True)
class ModeOperator:
    """Dense operator on one or two truncated modes."""

    matrix: np.ndarray
    truncs: tuple = field(default=())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        truncs = tuple(_as_trunc(t) for t in self.truncs) or (Truncation(m.shape[0]),)
        n = int(np.prod([t.dim for t in truncs]))
        if m.shape != (n, n):
            raise ValueError(f"operator of shape {(n, n)} expected, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "truncs", truncs)

    @property
    def modes(self) -> int:
        return len(self.truncs)

    @property
    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T, self.truncs)

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return ModeOperator(self.matrix @ other.matrix, self.truncs)
        if isinstance(other, PureState):
            return PureState(self.matrix @ other.amplitudes, other.truncs)
        if isinstance(other, DensityOperator):
            return DensityOperator(self.matrix @ other.matrix @ self.matrix.conj().T, other.truncs)
        return self.matrix @ other

    def apply(self, state):
        """U|psi> for pure states, U rho U^dag for densities."""
        return self @ state


# ---------------------------------------------------------------------------
# raw matrices
# ---------------------------------------------------------------------------


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def x_quadrature(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return a + a.conj().T


def p_quadrature(dim: int) -> np.ndarray:
    a = annihilation(dim)
    return 1j * (a - a.conj().T)


def ladder(trunc: Union[Truncation, int]) -> ModeOperator:
    """Annihilation operator a with a|n> = sqrt(n)|n-1>."""
    t = _as_trunc(trunc)
    return ModeOperator(annihilation(t.dim), (t,))


# ---------------------------------------------------------------------------
# unitary specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Squeeze:
    r: float


@dataclass(frozen=True)
class Displace:
    alpha: complex


@dataclass(frozen=True)
class Beamsplitter:
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class TwoModeSqueeze:
    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class CubicPhase:
    gamma: float


UnitarySpec = Union[Squeeze, Displace, Beamsplitter, TwoModeSqueeze, CubicPhase]


def _check_finite(spec):
    for v in vars(spec).values():
        if not np.isfinite(complex(v)):
            raise ValueError(f"non-finite parameter in {spec!r}")


# ---------------------------------------------------------------------------
# exponentiation
# ---------------------------------------------------------------------------


def _expm_hermitian(H: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(-i t H) for Hermitian H via eigh."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * t * w)) @ V.conj().T


def expm_skew(generator: Union[ModeOperator, np.ndarray]) -> Union[ModeOperator, np.ndarray]:
    """exp(G) for anti-Hermitian G, computed as exp(-iH) with H = iG Hermitian.

    Method: eigendecomposition of H (numpy.linalg.eigh).  The result is
    unitary to machine precision for any truncation.
    """
    G = generator.matrix if isinstance(generator, ModeOperator) else np.asarray(generator, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    if G.size and float(np.max(np.abs(G + G.conj().T))) > SKEW_TOL * scale:
        raise ValueError("generator is not anti-Hermitian")
    H = 1j * G
    H = 0.5 * (H + H.conj().T)
    U = _expm_hermitian(H)
    if isinstance(generator, ModeOperator):
        return ModeOperator(U, generator.truncs)
    return U


def _expm_skew_blocked(G: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """exp(G) for anti-Hermitian G that is block diagonal w.r.t. ``labels``."""
    U = np.zeros_like(G, dtype=complex)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        block = G[np.ix_(idx, idx)]
        H = 1j * block
        U[np.ix_(idx, idx)] = _expm_hermitian(0.5 * (H + H.conj().T))
    return U


def _two_mode_ops(d1: int, d2: int):
    a = np.kron(annihilation(d1), np.eye(d2))
    b = np.kron(np.eye(d1), annihilation(d2))
    n1 = np.repeat(np.arange(d1), d2)
    n2 = np.tile(np.arange(d2), d1)
    return a, b, n1, n2


def beamsplitter_generator(tau: float, d1: int, d2: int) -> np.ndarray:
    a, b, _, _ = _two_mode_ops(d1, d2)
    theta = math.acos(math.sqrt(tau))
    return theta * (a.conj().T @ b - a @ b.conj().T)


def opa_generator(kappa: float, d1: int, d2: int) -> np.ndarray:
    a, b, _, _ = _two_mode_ops(d1, d2)
    return 0.5 * kappa * (a @ b - a.conj().T @ b.conj().T)


@lru_cache(maxsize=64)
def _spectral_single(dim: int, which: str):
    """Cached eigendecomposition of a single-mode Hermitian operator."""
    a = annihilation(dim)
    if which == "x":
        H = a + a.conj().T
    elif which == "p":
        H = 1j * (a - a.conj().T)
    elif which == "sq":
        H = 0.5j * (a @ a - a.conj().T @ a.conj().T)
    else:  # pragma: no cover - internal
        raise KeyError(which)
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    w.setflags(write=False)
    V.setflags(write=False)
    return w, V


def squeeze_matrix(r: float, dim: int) -> np.ndarray:
    """Truncated S(r) = exp[(r/2)(a^2 - a^dag^2)] = exp(-i r H_sq)."""
    if r == 0:
        return np.eye(dim, dtype=complex)
    w, V = _spectral_single(dim, "sq")
    return (V * np.exp(-1j * r * w)) @ V.conj().T


def displacement_unitary(alpha: complex, dim: int) -> np.ndarray:
    """Truncated exp(alpha a^dag - alpha^* a) via eigh (unitary on the truncation)."""
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(dim, dtype=complex)
    if alpha.imag == 0.0:  # D(u) = exp(i u p)
        w, V = _spectral_single(dim, "p")
        return (V * np.exp(1j * alpha.real * w)) @ V.conj().T
    if alpha.real == 0.0:  # D(i v) = exp(i v x)
        w, V = _spectral_single(dim, "x")
        return (V * np.exp(1j * alpha.imag * w)) @ V.conj().T
    a = annihilation(dim)
    G = alpha * a.conj().T - np.conj(alpha) * a
    return expm_skew(G)


def cubic_matrix(gamma: float, dim: int) -> np.ndarray:
    """exp(i gamma x^3) in the eigenbasis of the truncated x operator."""
    w, V = _spectral_single(dim, "x")
    return (V * np.exp(1j * gamma * w**3)) @ V.conj().T


def build_unitary(spec: UnitarySpec, trunc, trunc2=None) -> ModeOperator:
    """Dense truncated unitary for ``spec``.

    Single-mode variants take one truncation; Beamsplitter and TwoModeSqueeze
    act on (trunc, trunc2), defaulting to trunc2 = trunc.
    """
    _check_finite(spec)
    t = _as_trunc(trunc)
    if isinstance(spec, Squeeze):
        return ModeOperator(squeeze_matrix(spec.r, t.dim), (t,))
    if isinstance(spec, Displace):
        return ModeOperator(displacement_unitary(spec.alpha, t.dim), (t,))
    if isinstance(spec, CubicPhase):
        return ModeOperator(cubic_matrix(spec.gamma, t.dim), (t,))
    t2 = _as_trunc(trunc2) if trunc2 is not None else t
    _, _, n1, n2 = _two_mode_ops(t.dim, t2.dim)
    if isinstance(spec, Beamsplitter):
        G = beamsplitter_generator(spec.tau, t.dim, t2.dim)
        return ModeOperator(_expm_skew_blocked(G, n1 + n2), (t, t2))
    if isinstance(spec, TwoModeSqueeze):
        G = opa_generator(spec.kappa, t.dim, t2.dim)
        return ModeOperator(_expm_skew_blocked(G, n1 - n2), (t, t2))
    raise TypeError(f"unknown unitary spec {spec!r}")


# ---------------------------------------------------------------------------
# beamsplitter on photon-number blocks (untruncated within each block)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def bs_block(tau: float, N: int) -> np.ndarray:
    """BS(tau) restricted to total photon number N, basis |i, N-i>, i = 0..N.

    The block is closed under the beamsplitter, so this is exact.
    """
    theta = math.acos(math.sqrt(tau))
    i = np.arange(N)
    # <i+1, N-i-1| a^dag b |i, N-i> = sqrt(i+1) sqrt(N-i)
    off = np.sqrt((i + 1.0) * (N - i))
    G = np.zeros((N + 1, N + 1))
    G[i + 1, i] = theta * off
    G[i, i + 1] = -theta * off
    U = _expm_hermitian(0.5 * (1j * G + (1j * G).conj().T)) if N > 0 else np.ones((1, 1), dtype=complex)
    U = np.real_if_close(U, tol=1e6)
    U.setflags(write=False)
    return U


def apply_beamsplitter(psi: np.ndarray, tau: float, out_dims=None) -> np.ndarray:
    """BS(tau) acting on a two-mode amplitude array ``psi[i, j]``.

    Photon-number blocks are treated exactly, so no truncation error is made
    for output levels that fit into ``out_dims`` (default: d1 + d2 - 1 each).
    """
    d1, d2 = psi.shape
    Nmax = d1 + d2 - 2
    o1, o2 = out_dims if out_dims is not None else (Nmax + 1, Nmax + 1)
    out = np.zeros((o1, o2), dtype=complex)
    for N in range(Nmax + 1):
        i = np.arange(max(0, N - d2 + 1), min(N, d1 - 1) + 1)
        v = np.zeros(N + 1, dtype=complex)
        v[i] = psi[i, N - i]
        if not np.any(v):
            continue
        w = bs_block(float(tau), N) @ v
        k = np.arange(max(0, N - o2 + 1), min(N, o1 - 1) + 1)
        out[k, N - k] = w[k]
    return out


# ---------------------------------------------------------------------------
# heralded OPA Kraus operator
# ---------------------------------------------------------------------------


def opa_kraus_coefficients(kappa: float, n: int, dim: int) -> np.ndarray:
    """c_j with M_n|j> = c_j |j+n>, j = 0..dim-1-n.

    c_j = (-lambda)^n sech(kappa/2)^{j+1} sqrt(C(j+n, n)), lambda = tanh(kappa/2).
    """
    if n < 0:
        raise ValueError("herald count must be >= 0")
    if dim <= n:
        raise ValueError(f"dim {dim} too small for herald n={n}")
    j = np.arange(dim - n, dtype=float)
    if kappa == 0:
        c = np.zeros(dim - n)
        if n == 0:
            c[:] = 1.0
        return c
    lam = math.tanh(kappa / 2)
    log_sech = -math.log(math.cosh(kappa / 2))
    logc = n * math.log(lam) + (j + 1) * log_sech + 0.5 * (gammaln(j + n + 1) - gammaln(j + 1) - gammaln(n + 1))
    return (-1) ** n * np.exp(logc)


def heralded_opa_kraus(kappa: float, n: int, trunc) -> ModeOperator:
    """M_n = <n|_idler U_OPA(kappa) |0>_idler as a dense matrix on the signal."""
    t = _as_trunc(trunc)
    c = opa_kraus_coefficients(kappa, n, t.dim)
    M = np.zeros((t.dim, t.dim), dtype=complex)
    j = np.arange(t.dim - n)
    M[j + n, j] = c
    return ModeOperator(M, (t,))


def apply_opa_kraus_vector(psi: np.ndarray, kappa: float, n: int) -> np.ndarray:
    """M_n psi without forming the matrix (output truncated to len(psi))."""
    d = psi.shape[0]
    out = np.zeros(d, dtype=complex)
    if n >= d:
        return out
    c = opa_kraus_coefficients(kappa, n, d)
    out[n:] = c * psi[: d - n]
    return out


def apply_opa_kraus_density(rho: np.ndarray, kappa: float, n: int) -> np.ndarray:
    """M_n rho M_n^dag without forming the matrix."""
    d = rho.shape[0]
    out = np.zeros((d, d), dtype=complex)
    if n >= d:
        return out
    c = opa_kraus_coefficients(kappa, n, d)
    out[n:, n:] = c[:, None] * rho[: d - n, : d - n] * c[None, :]
    return out
