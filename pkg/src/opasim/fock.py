"""Truncated Fock-space value types and basic state algebra.

Two-mode index convention (fixed everywhere): the flat index of
``|i>_1 |j>_2`` is ``i * dim2 + j`` (mode 1 major, row-major reshape).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

#: Hermiticity tolerance enforced on every density operator.
HERMITIAN_TOL = 1e-10
#: Smallest eigenvalue tolerated before a density operator is rejected.
PSD_TOL = 1e-9
#: PSD is checked by full diagonalisation only up to this matrix size.
PSD_CHECK_MAX = 512


class ZeroProbabilityHerald(ValueError):
    """Raised when a heralding event (or normalisation) has zero probability."""

    def __init__(self, message: str = "zero-probability herald", *, round_index: int | None = None):
        if round_index is not None:
            message = f"{message} (round {round_index})"
        super().__init__(message)
        self.round_index = round_index


class TruncationWarning(UserWarning):
    """Population leaked into the guard band of a truncated Fock space."""


@dataclass(frozen=True)
class Truncation:
    """Fock levels 0..dim-1 plus a guard band used for leakage checks."""

    dim: int
    guard_fraction: float = 0.1
    tail_tol: float = 1e-8

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if not 0.0 < self.guard_fraction < 1.0:
            raise ValueError("guard_fraction must lie in (0, 1)")
        if self.tail_tol <= 0.0:
            raise ValueError("tail_tol must be positive")

    @property
    def guard_size(self) -> int:
        # at least two levels so parity-restricted states always reach the band
        return min(max(2, int(math.ceil(self.guard_fraction * self.dim))), self.dim - 1)

    @property
    def guard_start(self) -> int:
        """First Fock level inside the guard band."""
        return self.dim - self.guard_size


def _as_trunc(t: Union[Truncation, int]) -> Truncation:
    return t if isinstance(t, Truncation) else Truncation(int(t))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    """State vector over one or two truncated modes (norm may be < 1)."""

    amplitudes: np.ndarray
    truncs: tuple = field(default=())

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        truncs = tuple(_as_trunc(t) for t in self.truncs) or (Truncation(amps.size),)
        if len(truncs) not in (1, 2):
            raise ValueError("only one- and two-mode states are supported")
        expected = int(np.prod([t.dim for t in truncs]))
        if amps.ndim != 1 or amps.size != expected:
            raise ValueError(f"amplitude vector of length {expected} expected, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", _freeze(amps))
        object.__setattr__(self, "truncs", truncs)

    @property
    def modes(self) -> int:
        return len(self.truncs)

    @property
    def dims(self) -> tuple:
        return tuple(t.dim for t in self.truncs)

    @property
    def norm(self) -> float:
        """Squared norm, i.e. the trace of the projector."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def trace(self) -> float:
        return self.norm

    def to_density(self) -> "DensityOperator":
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.truncs)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD matrix over one or two truncated modes, trace <= 1."""

    matrix: np.ndarray
    truncs: tuple = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        truncs = tuple(_as_trunc(t) for t in self.truncs) or (Truncation(m.shape[0]),)
        if len(truncs) not in (1, 2):
            raise ValueError("only one- and two-mode states are supported")
        n = int(np.prod([t.dim for t in truncs]))
        if m.shape != (n, n):
            raise ValueError(f"matrix of shape {(n, n)} expected, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        herm_err = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if herm_err > HERMITIAN_TOL * scale:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm_err:.3e})")
        m = 0.5 * (m + m.conj().T)
        if n <= PSD_CHECK_MAX:
            lo = float(np.linalg.eigvalsh(m)[0])
            if lo < -PSD_TOL * scale:
                raise ValueError(f"density matrix not positive semidefinite (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "truncs", truncs)

    @property
    def modes(self) -> int:
        return len(self.truncs)

    @property
    def dims(self) -> tuple:
        return tuple(t.dim for t in self.truncs)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def to_density(self) -> "DensityOperator":
        return self


State = Union[PureState, DensityOperator]


def pure(amplitudes, trunc: Union[Truncation, int, None] = None) -> PureState:
    """Convenience constructor for a single-mode pure state."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    return PureState(amplitudes, (trunc if trunc is not None else amplitudes.size,))


def density(matrix, trunc: Union[Truncation, int, None] = None) -> DensityOperator:
    """Convenience constructor for a single-mode density operator."""
    matrix = np.asarray(matrix, dtype=complex)
    return DensityOperator(matrix, (trunc if trunc is not None else matrix.shape[0],))


def fock_state(n: int, trunc: Union[Truncation, int]) -> PureState:
    t = _as_trunc(trunc)
    if not 0 <= n < t.dim:
        raise ValueError(f"Fock level {n} outside truncation dim {t.dim}")
    v = np.zeros(t.dim, dtype=complex)
    v[n] = 1.0
    return PureState(v, (t,))


def vacuum(trunc: Union[Truncation, int]) -> PureState:
    return fock_state(0, trunc)


def tensor(a: State, b: State) -> State:
    """Tensor product of two single-mode states (mode of ``a`` is mode 1)."""
    if a.modes != 1 or b.modes != 1:
        raise ValueError("tensor only supports single-mode x single-mode")
    truncs = (a.truncs[0], b.truncs[0])
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), truncs)
    return DensityOperator(np.kron(a.to_density().matrix, b.to_density().matrix), truncs)


def partial_trace(rho: State, keep: int) -> DensityOperator:
    """Reduced state of mode ``keep`` (0 or 1) of a two-mode state."""
    if rho.modes != 2:
        raise ValueError("partial_trace needs a two-mode state")
    if keep not in (0, 1):
        raise ValueError(f"invalid mode index {keep}")
    d1, d2 = rho.dims
    if isinstance(rho, PureState):
        psi = rho.amplitudes.reshape(d1, d2)
        red = psi @ psi.conj().T if keep == 0 else psi.T @ psi.conj()
    else:
        t = rho.matrix.reshape(d1, d2, d1, d2)
        red = np.einsum("ijkj->ik", t) if keep == 0 else np.einsum("ijil->jl", t)
    return DensityOperator(red, (rho.truncs[keep],))


def normalize(state: State) -> tuple:
    """Return ``(normalised state, trace)``; raise on zero trace."""
    p = state.trace()
    if not p > 0.0:
        raise ZeroProbabilityHerald()
    if isinstance(state, PureState):
        return PureState(state.amplitudes / math.sqrt(p), state.truncs), p
    return DensityOperator(state.matrix / p, state.truncs), p


def populations(state: State) -> np.ndarray:
    """Fock populations of a single-mode state."""
    if state.modes != 1:
        raise ValueError("populations needs a single-mode state")
    if isinstance(state, PureState):
        return np.abs(state.amplitudes) ** 2
    return np.real(np.diag(state.matrix))


@dataclass(frozen=True)
class HealthReport:
    guard_population: float
    healthy: bool


def truncation_health(state: State) -> HealthReport:
    """Population in the guard band(s); ``healthy`` iff it is <= tail_tol.

    For two-mode states the guard region is every basis state with at least
    one mode inside its guard band, and the tighter tail_tol applies.
    """
    if isinstance(state, PureState):
        pops = np.abs(state.amplitudes) ** 2
    else:
        pops = np.real(np.diag(state.matrix))
    if state.modes == 1:
        t = state.truncs[0]
        g = float(np.sum(pops[t.guard_start:]))
        tol = t.tail_tol
    else:
        t1, t2 = state.truncs
        p = pops.reshape(t1.dim, t2.dim)
        inside = p[: t1.guard_start, : t2.guard_start].sum()
        g = float(p.sum() - inside)
        tol = min(t1.tail_tol, t2.tail_tol)
    g = max(g, 0.0)
    return HealthReport(guard_population=g, healthy=g <= tol)


def check_health(state: State, context: str = "", warn: bool = True) -> HealthReport:
    """Compute the health report and emit a :class:`TruncationWarning` if unhealthy."""
    rep = truncation_health(state)
    if warn and not rep.healthy:
        where = f" in {context}" if context else ""
        warnings.warn(
            f"guard-band population {rep.guard_population:.3e}{where} exceeds tolerance",
            TruncationWarning,
            stacklevel=2,
        )
    return rep
