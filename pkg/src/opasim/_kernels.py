"""Hot numerical kernels with a numba path and a pure-numpy fallback.

Each kernel exists twice: a vectorized numpy version and an explicit-loop
version compiled with ``numba.njit``.  The backend is chosen once at import
time.  Set ``SIM_DISABLE_NUMBA=1`` to force the numpy versions (useful for
debugging, for platforms without numba, and for the benchmark in
``benchmarks/bench_kernels.py``).

Both versions are kept numerically equivalent to ~1e-12 and are
cross-checked in ``tests/test_kernels.py``.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # numba is optional
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_DISABLED = os.environ.get("SIM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

#: Name of the active backend, ``"numba"`` or ``"numpy"``.
BACKEND = "numba" if (numba is not None and not _DISABLED) else "numpy"

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def _jit(fn):
    if numba is None:
        return fn
    return numba.njit(**numba_default)(fn)


# ---------------------------------------------------------------------------
# Hermite functions <x|n> for x = a + a^dag (vacuum variance 1)
# ---------------------------------------------------------------------------


def hermite_functions_np(n_max: int, x: np.ndarray) -> np.ndarray:
    """Rows are <x|n> for n = 0..n_max-1, evaluated on the 1-D array ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max, x.size))
    out[0] = (2.0 * np.pi) ** -0.25 * np.exp(-(x**2) / 4.0)
    if n_max > 1:
        out[1] = x * out[0]
    for n in range(2, n_max):
        out[n] = (x * out[n - 1] - math.sqrt(n - 1) * out[n - 2]) / math.sqrt(n)
    return out


@_jit
def _hermite_functions_nb(n_max, x):
    m = x.size
    out = np.zeros((n_max, m))
    c0 = (2.0 * np.pi) ** -0.25
    for g in range(m):
        xg = x[g]
        p0 = c0 * np.exp(-xg * xg / 4.0)
        out[0, g] = p0
        if n_max > 1:
            p1 = xg * p0
            out[1, g] = p1
            for n in range(2, n_max):
                p2 = (xg * p1 - np.sqrt(n - 1.0) * p0) / np.sqrt(float(n))
                out[n, g] = p2
                p0 = p1
                p1 = p2
    return out


def hermite_functions_nb(n_max: int, x: np.ndarray) -> np.ndarray:
    return _hermite_functions_nb(int(n_max), np.ascontiguousarray(x, dtype=float).ravel())


# ---------------------------------------------------------------------------
# Fock-basis displacement matrix <m|D(gamma)|n>
# ---------------------------------------------------------------------------


def _displacement_nodes(s: float, dim: int):
    """Gauss-Hermite nodes for <m|D(s)|n> = int psi_m(x) psi_n(x - 2s) dx, s real.

    The integrand is a degree <= 2 dim - 2 polynomial times exp(-(x - s)^2 / 2),
    so ``dim`` nodes at x = s + sqrt2 t integrate it exactly.
    """
    from scipy.special import roots_hermite

    t, w = roots_hermite(dim + 1)
    x = s + math.sqrt(2.0) * t
    wt = math.sqrt(2.0) * np.exp(np.log(w) + t * t)
    return x, x - 2.0 * s, wt


def _rotate_phase(D: np.ndarray, phi: float) -> np.ndarray:
    # D(|g| e^{i phi}) = R(phi) D(|g|) R(-phi),  R = exp(i phi n)
    k = np.arange(D.shape[0])
    ph = np.exp(1j * phi * k)
    return ph[:, None] * D * np.conj(ph)[None, :]


def displacement_matrix_np(gamma: complex, dim: int) -> np.ndarray:
    """Exact (untruncated) matrix elements of D(gamma) on levels 0..dim-1.

    The real-amplitude matrix is an overlap of shifted Hermite functions,
    evaluated by exact Gauss-Hermite quadrature; the phase of gamma is a
    Fock-space rotation.  Stable for any dim the Hermite recurrence reaches
    (a forward recurrence on <m|D|n> loses all digits by dim ~ 100).
    """
    gamma = complex(gamma)
    x1, x2, wt = _displacement_nodes(abs(gamma), dim)
    H1 = hermite_functions_np(dim, x1)
    H2 = hermite_functions_np(dim, x2)
    D = (H1 * wt) @ H2.T
    return _rotate_phase(D, math.atan2(gamma.imag, gamma.real))


@_jit
def _weighted_gram_nb(H1, H2, wt):
    return np.dot(H1 * wt, H2.T)


def displacement_matrix_nb(gamma: complex, dim: int) -> np.ndarray:
    gamma = complex(gamma)
    x1, x2, wt = _displacement_nodes(abs(gamma), dim)
    D = _weighted_gram_nb(hermite_functions_nb(dim, x1), hermite_functions_nb(dim, x2), wt)
    return _rotate_phase(D, math.atan2(gamma.imag, gamma.real))


# ---------------------------------------------------------------------------
# Wigner function, normalised Laguerre functions along each diagonal
# ---------------------------------------------------------------------------
#
# W(A) = (1/pi) sum_m rho_mm (-1)^m g_m^0
#      + (2/pi) sum_{L>=1} Re[ e^{i L arg A} sum_m rho_{m,m+L} (-1)^m g_m^L ],
# g_m^L(u) = sqrt(m!/(m+L)!) u^{L/2} e^{-u/2} L_m^L(u),  u = 4|A|^2.
# The forward recurrence on g is bounded in the oscillatory region and grows
# monotonically outside it, so it keeps full precision at any dimension
# (the classic iterative recursion on W_mn loses all digits by dim ~ 100).


def _laguerre_start(L: int, u: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    if L == 0:
        return np.exp(-0.5 * u)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.exp(-0.5 * u + 0.5 * L * np.log(u) - 0.5 * gammaln(L + 1.0))
    return np.where(u > 0.0, g, 0.0)


def wigner_np(rho: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Sum_{mn} rho_mn W_mn(A) on complex grid ``A`` (A = alpha = (x+ip)/2).

    Returns the Wigner function normalised over d^2 alpha divided by 2
    (i.e. the caller multiplies by 1/2 to move to (x, p) coordinates).
    """
    rho = np.asarray(rho, dtype=complex)
    A = np.asarray(A, dtype=complex)
    dim = rho.shape[0]
    u = 4.0 * np.abs(A) ** 2
    phase = np.exp(1j * np.angle(A))
    W = np.zeros(A.shape)
    rot = np.ones(A.shape, dtype=complex)
    for L in range(dim):
        g_prev = np.zeros(A.shape)
        g = _laguerre_start(L, u)
        acc = rho[0, L] * g
        for m in range(1, dim - L):
            g_next = ((2 * m - 1 + L - u) * g - math.sqrt((m - 1) * (m - 1 + L)) * g_prev) / math.sqrt(m * (m + L))
            g_prev, g = g, g_next
            acc = acc + ((-1) ** m * rho[m, m + L]) * g
        if L == 0:
            W += acc.real
        else:
            W += 2.0 * np.real(rot * acc)
        rot = rot * phase
    return W / np.pi


@_jit
def _wigner_nb(rho, u, phase, g0):
    dim = rho.shape[0]
    npts = u.size
    W = np.zeros(npts)
    rot = np.ones(npts, dtype=np.complex128)
    acc = np.zeros(npts, dtype=np.complex128)
    g = np.zeros(npts)
    g_prev = np.zeros(npts)
    for L in range(dim):
        for q in range(npts):
            g[q] = g0[L, q]
            g_prev[q] = 0.0
            acc[q] = rho[0, L] * g[q]
        sgn = 1.0
        for m in range(1, dim - L):
            sgn = -sgn
            c1 = 2.0 * m - 1.0 + L
            c2 = np.sqrt((m - 1.0) * (m - 1.0 + L))
            c3 = 1.0 / np.sqrt(m * (m + L + 0.0))
            r = sgn * rho[m, m + L]
            for q in range(npts):
                gn = ((c1 - u[q]) * g[q] - c2 * g_prev[q]) * c3
                g_prev[q] = g[q]
                g[q] = gn
                acc[q] += r * gn
        for q in range(npts):
            if L == 0:
                W[q] += acc[q].real
            else:
                W[q] += 2.0 * (rot[q] * acc[q]).real
            rot[q] = rot[q] * phase[q]
    return W / np.pi


def wigner_nb(rho: np.ndarray, A: np.ndarray) -> np.ndarray:
    shape = np.shape(A)
    flat = np.ascontiguousarray(A, dtype=np.complex128).ravel()
    u = 4.0 * np.abs(flat) ** 2
    phase = np.exp(1j * np.angle(flat))
    dim = np.shape(rho)[0]
    g0 = np.stack([_laguerre_start(L, u) for L in range(dim)]) if dim else np.zeros((0, flat.size))
    return _wigner_nb(np.ascontiguousarray(rho, dtype=np.complex128), u, phase, g0).reshape(shape)


# ---------------------------------------------------------------------------
# Pure loss and quantum-limited amplifier, Kraus sums in closed form
# ---------------------------------------------------------------------------


def _log_fact(dim):
    from scipy.special import gammaln

    return gammaln(np.arange(2 * dim + 1) + 1.0)


def _vacuum_like(rho):
    out = np.zeros_like(rho, dtype=complex)
    out[0, 0] = np.trace(rho)
    return out


def pure_loss_np(rho: np.ndarray, T: float) -> np.ndarray:
    """Sum_i A_i rho A_i^dag with A_i = sqrt((1-T)^i/i!) T^{n/2} a^i."""
    dim = rho.shape[0]
    if T >= 1.0:
        return np.array(rho, dtype=complex)
    if T <= 0.0:
        return _vacuum_like(rho)
    lf = _log_fact(dim)
    m = np.arange(dim)
    out = np.zeros_like(rho, dtype=complex)
    logT = math.log(T)
    log1T = math.log1p(-T)
    for i in range(dim):
        k = dim - i
        mm = m[:k]
        # log sqrt((m+i)!/(m! i!)) per index, times T^{m/2} (1-T)^{i/2}
        c = np.exp(0.5 * (lf[mm + i] - lf[mm] - lf[i]) + 0.5 * mm * logT + 0.5 * i * log1T)
        out[:k, :k] += c[:, None] * c[None, :] * rho[i:, i:]
    return out


@_jit
def _pure_loss_nb(rho, T, lf):
    dim = rho.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    logT = np.log(T)
    log1T = np.log1p(-T)
    c = np.zeros(dim)
    for i in range(dim):
        k = dim - i
        for mm in range(k):
            c[mm] = np.exp(0.5 * (lf[mm + i] - lf[mm] - lf[i]) + 0.5 * mm * logT + 0.5 * i * log1T)
        for a in range(k):
            for b in range(k):
                out[a, b] += c[a] * c[b] * rho[a + i, b + i]
    return out


def pure_loss_nb(rho: np.ndarray, T: float) -> np.ndarray:
    if T >= 1.0:
        return np.array(rho, dtype=complex)
    if T <= 0.0:
        return _vacuum_like(rho)
    dim = rho.shape[0]
    return _pure_loss_nb(np.ascontiguousarray(rho, dtype=np.complex128), float(T), _log_fact(dim))


def amplifier_np(rho: np.ndarray, G: float) -> np.ndarray:
    """Sum_k B_k rho B_k^dag with B_k = sqrt((G-1)^k/(k! G^{k+1})) a^dag^k G^{-n/2}.

    The sum over k and the output are truncated at the input dimension.
    """
    dim = rho.shape[0]
    if G <= 1.0:
        return np.array(rho, dtype=complex)
    lf = _log_fact(dim)
    m = np.arange(dim)
    out = np.zeros_like(rho, dtype=complex)
    logG = math.log(G)
    logg = math.log(G - 1.0)
    for k in range(dim):
        n = dim - k
        mm = m[:n]
        lc = 0.5 * (lf[mm + k] - lf[mm] - lf[k]) + 0.5 * k * logg - 0.5 * (k + 1) * logG - 0.5 * mm * logG
        c = np.exp(lc)
        out[k:, k:] += c[:, None] * c[None, :] * rho[:n, :n]
    return out


@_jit
def _amplifier_nb(rho, G, lf):
    dim = rho.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    logG = np.log(G)
    logg = np.log(G - 1.0)
    c = np.zeros(dim)
    for k in range(dim):
        n = dim - k
        for mm in range(n):
            c[mm] = np.exp(0.5 * (lf[mm + k] - lf[mm] - lf[k]) + 0.5 * k * logg - 0.5 * (k + 1) * logG - 0.5 * mm * logG)
        for a in range(n):
            for b in range(n):
                out[a + k, b + k] += c[a] * c[b] * rho[a, b]
    return out


def amplifier_nb(rho: np.ndarray, G: float) -> np.ndarray:
    if G <= 1.0:
        return np.array(rho, dtype=complex)
    dim = rho.shape[0]
    return _amplifier_nb(np.ascontiguousarray(rho, dtype=np.complex128), float(G), _log_fact(dim))


if BACKEND == "numba":
    hermite_functions = hermite_functions_nb
    displacement_matrix = displacement_matrix_nb
    wigner_kernel = wigner_nb
    pure_loss_kernel = pure_loss_nb
    amplifier_kernel = amplifier_nb
else:
    hermite_functions = hermite_functions_np
    displacement_matrix = displacement_matrix_np
    wigner_kernel = wigner_np
    pure_loss_kernel = pure_loss_np
    amplifier_kernel = amplifier_np
