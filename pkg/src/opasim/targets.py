"""Ideal reference states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import PureState, Truncation, _as_trunc, check_health
from .operators import annihilation, cubic_matrix, displacement_unitary, squeeze_matrix
from .measurement import hermite_table

#: Extra Fock levels used when an ideal state is built by exponentiation.
DEFAULT_PAD = 60


def _finish(v: np.ndarray, t: Truncation, context: str, warn: bool = True) -> PureState:
    v = v / np.linalg.norm(v)
    s = PureState(v, (t,))
    check_health(s, context, warn=warn)
    return s


def squeezed_vacuum_amplitudes(r: float, dim: int) -> np.ndarray:
    """S(r)|0> in closed form: (-tanh r)^m sqrt((2m)!)/(2^m m!) / sqrt(cosh r) on |2m>."""
    c = np.zeros(dim, dtype=complex)
    m = np.arange((dim + 1) // 2)
    t = math.tanh(r)
    if t == 0.0:
        c[0] = 1.0
        return c
    logmag = 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1) + m * math.log(abs(t))
    c[2 * m] = np.exp(logmag) * np.sign(-t) ** m / math.sqrt(math.cosh(r))
    return c


def squeezed_vacuum(r: float, trunc, warn: bool = True) -> PureState:
    t = _as_trunc(trunc)
    v = squeezed_vacuum_amplitudes(r, t.dim)
    s = PureState(v, (t,))
    check_health(s, "squeezed_vacuum", warn=warn)
    return s


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    alpha = complex(alpha)
    n = np.arange(dim)
    if alpha == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return v
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * np.angle(alpha) * n)


def coherent(alpha: complex, trunc, warn: bool = True) -> PureState:
    t = _as_trunc(trunc)
    s = PureState(coherent_amplitudes(alpha, t.dim), (t,))
    check_health(s, "coherent", warn=warn)
    return s


def photon_added_amplitudes(base: np.ndarray, n: int) -> np.ndarray:
    """Normalised (a^dag)^n base; the output keeps len(base) levels."""
    d = base.size
    v = np.array(base, dtype=complex)
    sq = np.sqrt(np.arange(1, d))
    for _ in range(n):
        w = np.zeros(d, dtype=complex)
        w[1:] = sq * v[:-1]
        v = w
    nrm = np.linalg.norm(v)
    return v / nrm


def ideal_photon_added_squeezed(r: float, n: int, trunc, warn: bool = True) -> PureState:
    """Normalised (a^dag)^n S(r)|0>."""
    t = _as_trunc(trunc)
    v = photon_added_amplitudes(squeezed_vacuum_amplitudes(r, t.dim), n)
    return _finish(v, t, "ideal_photon_added_squeezed", warn)


def ideal_cubic(gamma: float, trunc, pad: int = DEFAULT_PAD, warn: bool = True) -> PureState:
    """exp(i gamma x^3)|0>, built in a padded space and cut back to ``trunc``."""
    t = _as_trunc(trunc)
    D = t.dim + pad
    v = cubic_matrix(gamma, D)[:, 0][: t.dim]
    return _finish(v, t, "ideal_cubic", warn)


@dataclass(frozen=True)
class CatSpec:
    """N(|alpha, r> +- |-alpha, r>) with |alpha, r> = D(alpha) S(r)|0>, alpha real."""

    alpha: float
    r: float = 0.0
    parity: str = "even"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")
        if isinstance(self.alpha, complex) and self.alpha.imag != 0:
            raise ValueError("cat amplitude must be real")


class CatBasis:
    """Cached spectral data for building many cats at one truncation."""

    def __init__(self, dim: int, pad: int = DEFAULT_PAD):
        self.dim = dim
        self.D = dim + pad

    def amplitudes(self, alpha: float, r: float, parity: str) -> np.ndarray:
        vac = squeezed_vacuum_amplitudes(r, self.D)
        Dp = displacement_unitary(float(alpha), self.D)
        plus = Dp @ vac
        # D(-alpha) S(r)|0> = P D(alpha) S(r)|0> with parity P = (-1)^n, since S(r)|0> is even
        minus = plus * (-1.0) ** np.arange(self.D)
        v = plus + minus if parity == "even" else plus - minus
        v = v[: self.dim]
        return v / np.linalg.norm(v)


def ideal_cat(spec: CatSpec, trunc, pad: int = DEFAULT_PAD, warn: bool = True) -> PureState:
    t = _as_trunc(trunc)
    v = CatBasis(t.dim, pad).amplitudes(spec.alpha, spec.r, spec.parity)
    return _finish(v, t, "ideal_cat", warn)


@dataclass(frozen=True)
class GkpSpec:
    """Square-lattice GKP logical state with peak width Delta (beta = sqrt(pi)/2)."""

    logical: int = 0
    delta: float = math.sqrt(0.1)
    envelope_tol: float = 1e-12

    def __post_init__(self):
        if self.logical not in (0, 1):
            raise ValueError("logical must be 0 or 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")

    @property
    def beta(self) -> float:
        return math.sqrt(math.pi) / 2.0

    @property
    def db(self) -> float:
        return -10.0 * math.log10(self.delta**2)

    @classmethod
    def from_db(cls, db: float, logical: int = 0) -> "GkpSpec":
        return cls(logical=logical, delta=math.sqrt(10 ** (-db / 10.0)))

    def peaks(self):
        """(x position, weight) of every lattice term kept by the envelope cutoff."""
        beta, dl = self.beta, self.delta
        out = []
        s = 0
        while True:
            added = False
            for sg in ((0,) if s == 0 else (s, -s)):
                k = 2 * sg + self.logical
                w = math.exp(-((k * beta * dl) ** 2) / 2.0)
                if w >= self.envelope_tol:
                    out.append((2.0 * k * beta, w))
                    added = True
            if not added and s > 0:
                break
            s += 1
        return out


def ideal_gkp(spec: GkpSpec, trunc, warn: bool = True, points_per_unit: int = 40) -> PureState:
    """Sum_s exp(-(k beta Delta)^2/2) D(k beta) S(-ln Delta)|0>, k = 2s + logical.

    Built from its x wavefunction (Gaussian peaks of variance Delta^2 at
    x = 2 k beta) projected on the Fock basis by trapezoidal quadrature.
    """
    t = _as_trunc(trunc)
    peaks = spec.peaks()
    var = spec.delta**2
    L = 2.0 * math.sqrt(t.dim) + 12.0
    n = int(2 * L * points_per_unit / min(1.0, spec.delta)) + 1
    x = np.linspace(-L, L, n)
    dx = x[1] - x[0]
    psi = np.zeros_like(x)
    norm0 = (2.0 * math.pi * var) ** -0.25
    for x0, w in peaks:
        psi += w * norm0 * np.exp(-((x - x0) ** 2) / (4.0 * var))
    H = hermite_table(t.dim, x)
    v = (H @ psi) * dx
    return _finish(v.astype(complex), t, "ideal_gkp", warn)


def apply_squeeze_padded(v: np.ndarray, r: float, pad: int = DEFAULT_PAD) -> np.ndarray:
    """S(r) applied in a padded space, cut back to len(v) (not renormalised)."""
    d = v.size
    D = d + pad
    big = np.zeros(D, dtype=complex)
    big[:d] = v
    return (squeeze_matrix(r, D) @ big)[:d]
