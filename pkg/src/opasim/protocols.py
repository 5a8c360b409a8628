"""Generation pipelines: Fock preparation, photon addition, cubic-phase, cats, GKP.

Every pipeline returns a :class:`ProtocolReport` (or a
:class:`~opasim.measurement.HeraldedResult` for single heralds).  Success
probabilities compose by multiplication; homodyne outcome densities are
reported separately and never folded into rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .channels import DetectorModel, click_matrix, detector_params, pure_loss
from .fock import (
    DensityOperator,
    HealthReport,
    PureState,
    State,
    Truncation,
    ZeroProbabilityHerald,
    _as_trunc,
    truncation_health,
)
from .measurement import HeraldedResult, breed_x0, rotate
from .metrics import (
    SqueezingReport,
    effective_squeezing,
    fidelity,
    parity,
    squeezing_correction,
    squeezing_db,
)
from .operators import (
    _spectral_single,
    apply_beamsplitter,
    apply_opa_kraus_density,
    apply_opa_kraus_vector,
    opa_kraus_coefficients,
)
from .optimize import OptimizationProblem, grid_refine, maximize
from .targets import (
    DEFAULT_PAD,
    CatBasis,
    coherent_amplitudes,
    ideal_cubic,
    photon_added_amplitudes,
    squeezed_vacuum_amplitudes,
)

#: Fault-tolerance squeezing floor used for loss/efficiency thresholds (dB).
FT_THRESHOLD_DB = 9.75
#: Weight below which an idler term P(n|j) P(j) is dropped from noisy heralds.
NOISY_TERM_TOL = 1e-18


@dataclass
class ProtocolConfig:
    """Declarative description of one pipeline run."""

    scheme: str
    dim: int = 120
    kappa: Optional[float] = None
    r: Optional[float] = None
    alpha: Optional[complex] = None
    n: Optional[int] = None
    k: int = 1
    tau: Optional[float] = None
    switch_loss: float = 0.0
    loss_every_round: bool = False
    detector: Optional[DetectorModel] = None
    clock_rate: Optional[float] = None

    _REQUIRED = {
        "fock_prep": ("n", "kappa"),
        "photon_add_opa": ("r", "kappa", "n"),
        "photon_add_fock": ("r", "kappa", "n", "tau"),
        "cubic_opa": ("alpha", "kappa", "n"),
        "cubic_fock": ("alpha", "kappa", "n"),
        "cat_breed": ("r", "kappa", "n", "k"),
        "gkp_breed": ("r", "kappa", "n", "k"),
    }

    def __post_init__(self):
        if self.scheme not in self._REQUIRED:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        missing = [f for f in self._REQUIRED[self.scheme] if getattr(self, f) is None]
        if missing:
            raise ValueError(f"scheme {self.scheme} needs {', '.join(missing)}")
        if not 0.0 <= self.switch_loss <= 1.0:
            raise ValueError("switch_loss must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def trunc(self) -> Truncation:
        return Truncation(self.dim)


@dataclass
class ProtocolReport:
    """Structured output of a pipeline."""

    state: State
    round_probabilities: list
    total_probability: float
    generation_rate: Optional[float] = None
    fidelity: Optional[float] = None
    target: dict = field(default_factory=dict)
    corrections: dict = field(default_factory=dict)
    squeezing: Optional[SqueezingReport] = None
    health: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def healthy(self) -> bool:
        return all(h.healthy for h in self.health)

    def as_dict(self) -> dict:
        out = {
            "round_probabilities": [float(p) for p in self.round_probabilities],
            "total_probability": float(self.total_probability),
        }
        if self.generation_rate is not None:
            out["generation_rate"] = float(self.generation_rate)
        if self.fidelity is not None:
            out["fidelity"] = float(self.fidelity)
        if self.target:
            out["target"] = {k: _plain(v) for k, v in self.target.items()}
        if self.corrections:
            out["corrections"] = {k: _plain(v) for k, v in self.corrections.items()}
        if self.squeezing is not None:
            s = self.squeezing
            out["squeezing"] = {
                "delta2_x": s.delta2_x,
                "delta2_p": s.delta2_p,
                "db_x": s.db_x,
                "db_p": s.db_p,
                "symmetric_db": s.symmetric_db,
            }
        out["guard_population"] = max((h.guard_population for h in self.health), default=0.0)
        out["healthy"] = self.healthy
        for k, v in self.extra.items():
            out[k] = _plain(v)
        return out


def _plain(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _lam(kappa: float) -> float:
    return math.tanh(kappa / 2.0)


def _health(state: State) -> HealthReport:
    return truncation_health(state)


def _idler_weights(n: int, detector: Optional[DetectorModel], jmax: int) -> np.ndarray:
    """P(n | j) for j = 0..jmax-1 (delta_{nj} for an ideal detector)."""
    if detector is None or detector.ideal:
        w = np.zeros(jmax)
        if n < jmax:
            w[n] = 1.0
        return w
    return click_matrix(detector_params(detector), max(jmax, n + 1))[n, :jmax]


# ---------------------------------------------------------------------------
# Fock-state preparation
# ---------------------------------------------------------------------------


def fock_prep(n: int, kappa: float, trunc, detector: Optional[DetectorModel] = None) -> HeraldedResult:
    """Herald n idler photons from a vacuum-seeded OPA.

    The signal is diagonal, P(m) = lambda^{2m}(1 - lambda^2); an ideal
    detector leaves |n> with probability lambda^{2n}(1 - lambda^2).
    """
    t = _as_trunc(trunc)
    if n >= t.dim:
        raise ValueError(f"dim {t.dim} too small for n={n}")
    lam2 = _lam(kappa) ** 2
    m = np.arange(t.dim)
    pm = (1.0 - lam2) * lam2**m if lam2 > 0 else (m == 0).astype(float)
    w = _idler_weights(n, detector, t.dim) * pm
    p = float(w.sum())
    if not p > 0.0:
        raise ZeroProbabilityHerald()
    if detector is None or detector.ideal:
        v = np.zeros(t.dim, dtype=complex)
        v[n] = math.sqrt(p)
        un = PureState(v, (t,))
        return HeraldedResult(un, p, PureState(v / math.sqrt(p), (t,)))
    un = DensityOperator(np.diag(w).astype(complex), (t,))
    return HeraldedResult(un, p, DensityOperator(np.diag(w / p).astype(complex), (t,)))


# ---------------------------------------------------------------------------
# OPA heralding on arbitrary seeds
# ---------------------------------------------------------------------------


def opa_herald(seed: State, kappa: float, n: int, detector: Optional[DetectorModel] = None) -> HeraldedResult:
    """Seed (x) |0>_idler -> U_OPA -> (noisy) n-photon herald on the idler.

    Ideal heralds use the closed-form Kraus M_n; a thermal-loss detector
    mixes the Kraus branches:  rho = sum_j P(n|j) M_j rho_seed M_j^dag.
    """
    t = seed.truncs[0]
    d = t.dim
    if detector is None or detector.ideal:
        if isinstance(seed, PureState):
            un = PureState(apply_opa_kraus_vector(seed.amplitudes, kappa, n), (t,))
        else:
            un = DensityOperator(apply_opa_kraus_density(seed.matrix, kappa, n), (t,))
    else:
        weights = _idler_weights(n, detector, d)
        rho = seed.to_density().matrix
        out = np.zeros((d, d), dtype=complex)
        total = 0.0
        for j in np.argsort(-weights, kind="stable"):
            wj = weights[j]
            if wj <= 0.0:
                continue
            term = apply_opa_kraus_density(rho, kappa, int(j))
            pj = float(np.trace(term).real)
            if wj * pj < NOISY_TERM_TOL * max(total, 1e-300) and total > 0:
                continue
            out += wj * term
            total += wj * pj
        un = DensityOperator(out, (t,))
    p = un.trace()
    if not p > 0.0:
        raise ZeroProbabilityHerald()
    if isinstance(un, PureState):
        return HeraldedResult(un, p, PureState(un.amplitudes / math.sqrt(p), (t,)))
    return HeraldedResult(un, p, DensityOperator(un.matrix / p, (t,)))


# ---------------------------------------------------------------------------
# photon-added squeezed states
# ---------------------------------------------------------------------------


def photon_added_target(r: float, n: int, dim: int) -> PureState:
    return PureState(photon_added_amplitudes(squeezed_vacuum_amplitudes(r, dim), n), (dim,))


def optimize_photon_added_target(state: State, n: int, r_guess: float, span: float = 0.3) -> tuple:
    """max_{r2} F(state, (a^dag)^n S(r2)|0>), bounded scalar search around r_guess."""
    from scipy.optimize import minimize_scalar

    d = state.truncs[0].dim

    def f(r2):
        return -fidelity(state, photon_added_target(r2, n, d))

    res = minimize_scalar(f, bounds=(r_guess - span, r_guess + span), method="bounded", options={"xatol": 1e-9})
    return float(res.x), float(-res.fun)


def photon_add_opa(
    r_seed: float,
    kappa: float,
    n: int,
    trunc,
    detector: Optional[DetectorModel] = None,
    target_r: Optional[float] = None,
    r_guess: float = 0.272,
) -> ProtocolReport:
    """Squeezed vacuum S(r)|0> seeded OPA heralded on n idler photons.

    Fidelity is against (a^dag)^n S(r2)|0>.  With ``target_r=None`` r2 is
    optimised on the ideal-detector output (also when a noisy detector is
    given, so noisy fidelities use the ideal optimum, as the comparison
    prescribes).
    """
    t = _as_trunc(trunc)
    seed = PureState(squeezed_vacuum_amplitudes(r_seed, t.dim), (t,))
    res = opa_herald(seed, kappa, n, detector)
    if target_r is None:
        ideal = res if detector is None or detector.ideal else opa_herald(seed, kappa, n, None)
        target_r, _ = optimize_photon_added_target(ideal.normalized, n, r_guess)
    F = fidelity(res.normalized, photon_added_target(target_r, n, t.dim))
    return ProtocolReport(
        state=res.normalized,
        round_probabilities=[res.probability],
        total_probability=res.probability,
        fidelity=F,
        target={"r": target_r, "n": n},
        health=[_health(res.normalized)],
    )


def _bs_vacuum_herald_columns(psi1: np.ndarray, m: int, tau: float, d_out: int, jmax: int) -> np.ndarray:
    """Columns <j|_2 BS(tau) |psi1>|m>, j < jmax, as a (d_out, jmax) array."""
    Psi = np.zeros((psi1.size, m + 1), dtype=complex)
    Psi[:, m] = psi1
    return apply_beamsplitter(Psi, tau, out_dims=(d_out, jmax))


def photon_add_fock(
    r_seed: float,
    n: int,
    kappa_fock: float,
    tau: float,
    trunc,
    detector: Optional[DetectorModel] = None,
    target_r: Optional[float] = 0.272,
    r_guess: float = 0.272,
) -> ProtocolReport:
    """Fock-state photon addition: S(r)|0> (x) rho_Fock -> BS(tau) -> vacuum herald on port 2.

    Total probability P_T = P_Fock * P_n.  A noisy detector is applied to
    both the Fock-preparation herald and the vacuum herald.
    """
    t = _as_trunc(trunc)
    d = t.dim
    fock = fock_prep(n, kappa_fock, Truncation(max(n + 40, 2)), detector)
    fock_w = np.real(np.diag(fock.normalized.to_density().matrix))
    psi1 = squeezed_vacuum_amplitudes(r_seed, d)
    noisy = detector is not None and not detector.ideal
    jmax = (n + 30) if noisy else 1
    w0 = _idler_weights(0, detector, jmax)
    out = np.zeros((d, d), dtype=complex)
    pure_vec = None
    for m in np.flatnonzero(fock_w > 1e-16):
        cols = _bs_vacuum_herald_columns(psi1, int(m), tau, d, jmax)
        for j in np.flatnonzero(w0 > 0):
            c = cols[:, j]
            out += fock_w[m] * w0[j] * np.outer(c, c.conj())
            if not noisy:
                pure_vec = c
    if not noisy:
        un = PureState(pure_vec, (t,))
    else:
        un = DensityOperator(out, (t,))
    p_n = un.trace()
    if not p_n > 0.0:
        raise ZeroProbabilityHerald()
    state = (
        PureState(un.amplitudes / math.sqrt(p_n), (t,))
        if isinstance(un, PureState)
        else DensityOperator(un.matrix / p_n, (t,))
    )
    if target_r is None:
        target_r, _ = optimize_photon_added_target(state, n, r_guess)
    F = fidelity(state, photon_added_target(target_r, n, d))
    return ProtocolReport(
        state=state,
        round_probabilities=[fock.probability, p_n],
        total_probability=fock.probability * p_n,
        fidelity=F,
        target={"r": target_r, "n": n},
        health=[_health(state)],
        extra={"p_fock": fock.probability, "p_herald": p_n},
    )


# ---------------------------------------------------------------------------
# cubic-phase states
# ---------------------------------------------------------------------------


def cubic_opa(alpha: complex, kappa: float, n: int, trunc) -> ProtocolReport:
    """Coherent seed |alpha> into the OPA, heralded on n idler photons (raw output)."""
    t = _as_trunc(trunc)
    seed = PureState(coherent_amplitudes(alpha, t.dim), (t,))
    res = opa_herald(seed, kappa, n)
    return ProtocolReport(
        state=res.normalized,
        round_probabilities=[res.probability],
        total_probability=res.probability,
        health=[_health(res.normalized)],
    )


def cubic_fock(alpha: complex, n: int, kappa_fock: float, trunc) -> ProtocolReport:
    """|alpha> (x) |n> on BS(1/2), zero-photon herald; P_tot = P_Fock * P_F-Cubic."""
    t = _as_trunc(trunc)
    fock = fock_prep(n, kappa_fock, Truncation(max(n + 2, 2)))
    psi1 = coherent_amplitudes(alpha, t.dim)
    c = _bs_vacuum_herald_columns(psi1, n, 0.5, t.dim, 1)[:, 0]
    p = float(np.vdot(c, c).real)
    if not p > 0.0:
        raise ZeroProbabilityHerald()
    state = PureState(c / math.sqrt(p), (t,))
    return ProtocolReport(
        state=state,
        round_probabilities=[fock.probability, p],
        total_probability=fock.probability * p,
        health=[_health(state)],
        extra={"p_fock": fock.probability, "p_herald": p},
    )


def _pad_vec(v: np.ndarray, D: int) -> np.ndarray:
    out = np.zeros(D, dtype=complex)
    out[: v.size] = v
    return out


def gaussian_correct(state: State, r_c: float, beta_c: complex, pad: int = DEFAULT_PAD) -> State:
    """S(r_c) D(beta_c) rho D(beta_c)^dag S(r_c)^dag, evaluated in a padded space."""
    from .operators import displacement_unitary, squeeze_matrix

    d = state.truncs[0].dim
    D = d + pad
    U = squeeze_matrix(r_c, D) @ displacement_unitary(beta_c, D)
    if isinstance(state, PureState):
        v = (U @ _pad_vec(state.amplitudes, D))[:d]
        return PureState(v, state.truncs)
    big = np.zeros((D, D), dtype=complex)
    big[:d, :d] = state.matrix
    return DensityOperator((U @ big @ U.conj().T)[:d, :d], state.truncs)


class CubicFidelity:
    """F(r, beta) = |<gamma| S(r) D(i beta) |psi>|^2 for a pure psi, beta real.

    Both unitaries are diagonal in cached eigenbases, so each evaluation
    costs two matrix-vector products in a padded space.
    """

    def __init__(self, state: PureState, gamma: float, pad: int = DEFAULT_PAD):
        d = state.truncs[0].dim
        self.D = d + pad
        self.psi = _pad_vec(state.amplitudes, self.D)
        self.target = _pad_vec(ideal_cubic(gamma, self.D - pad, pad=pad, warn=False).amplitudes, self.D)
        self.wx, self.Vx = _spectral_single(self.D, "x")
        self.ws, self.Vs = _spectral_single(self.D, "sq")
        self.psi_x = self.Vx.conj().T @ self.psi
        self.tgt_s = self.Vs.conj().T @ self.target

    def __call__(self, params) -> float:
        r, beta = float(params[0]), float(params[1])
        v = self.Vx @ (np.exp(1j * beta * self.wx) * self.psi_x)  # D(i beta) = exp(i beta x)
        v_s = np.exp(-1j * r * self.ws) * (self.Vs.conj().T @ v)  # S(r) in its eigenbasis
        return float(abs(np.vdot(self.tgt_s, v_s)) ** 2)


def optimize_cubic(
    state: PureState,
    gamma: float,
    r0: float = 0.5,
    beta0: float = 2.5,
    bounds=((0.0, 1.5), (0.0, 4.5)),
    pad: int = DEFAULT_PAD,
) -> dict:
    """max over (r, beta) of F(S(r) D(i beta) rho D^dag S^dag, |gamma>)."""
    obj = CubicFidelity(state, gamma, pad)
    prob = OptimizationProblem(obj, bounds, f_tol=1e-10, x_tol=1e-7, max_evals=4000)
    grid = [np.linspace(bounds[0][0] + 0.05, bounds[0][1] - 0.05, 9), np.linspace(bounds[1][0] + 0.1, bounds[1][1] - 0.1, 13)]
    starts = [np.array([r0, beta0])] + grid_refine(prob, grid, top=2)
    prob.starts = starts
    res = maximize(prob)
    return {"fidelity": res.best_value, "r": float(res.best_params[0]), "beta": complex(0.0, res.best_params[1]), "evals": res.evals}


# ---------------------------------------------------------------------------
# squeezed cats
# ---------------------------------------------------------------------------


def cat_breed(
    r_seed: float,
    kappa: float,
    n: int,
    k: int,
    trunc,
    switch_loss: float = 0.0,
    detector: Optional[DetectorModel] = None,
    loss_every_round: bool = False,
    clock_rate: Optional[float] = None,
) -> ProtocolReport:
    """Iterate the OPA herald k times, feeding the output back as the next seed.

    Switch loss (1 - transmissivity) is applied between rounds (k - 1 times);
    ``loss_every_round`` also applies it after the last round.
    """
    t = _as_trunc(trunc)
    if k < 1:
        raise ValueError("k must be >= 1")
    state: State = PureState(squeezed_vacuum_amplitudes(r_seed, t.dim), (t,))
    probs = []
    health = []
    tau_s = 1.0 - switch_loss
    for rnd in range(1, k + 1):
        try:
            res = opa_herald(state, kappa, n, detector)
        except ZeroProbabilityHerald:
            raise ZeroProbabilityHerald(round_index=rnd) from None
        probs.append(res.probability)
        state = res.normalized
        health.append(_health(state))
        if tau_s < 1.0 and (rnd < k or loss_every_round):
            state = pure_loss(state, tau_s)
    total = float(np.prod(probs))
    return ProtocolReport(
        state=state,
        round_probabilities=probs,
        total_probability=total,
        generation_rate=generation_rate(total, clock_rate) if clock_rate else None,
        health=health,
        extra={"parity": parity(state)},
    )


def cat_parity(n: int, k: int) -> str:
    return "even" if (n * k) % 2 == 0 else "odd"


def optimize_cat(
    state: State,
    parity_label: str,
    alpha0: float,
    r0: float = 0.0,
    rotate_quarter: bool = False,
    bounds=None,
    pad: int = DEFAULT_PAD,
) -> dict:
    """max over (alpha, r2) of F(state, ideal cat).  Optionally rotate the state by pi/2 first."""
    d = state.truncs[0].dim
    if rotate_quarter:
        state = rotate(state, -np.pi / 2)
    basis = CatBasis(d, pad)

    def obj(p):
        tgt = PureState(basis.amplitudes(p[0], p[1], parity_label), (d,))
        return fidelity(state, tgt)

    # squeezed-cat targets carry r2 >= 0 (every quoted optimum lies in that half-line)
    bounds = bounds or ((max(0.05, alpha0 - 1.5), alpha0 + 1.5), (0.0, max(r0, 0.0) + 0.6))
    prob = OptimizationProblem(obj, bounds, f_tol=1e-10, x_tol=1e-7, max_evals=1500)
    prob.starts = [np.array([alpha0, min(max(r0, bounds[1][0]), bounds[1][1])])]
    res = maximize(prob)
    return {"fidelity": res.best_value, "alpha": float(res.best_params[0]), "r": float(res.best_params[1]), "evals": res.evals}


# ---------------------------------------------------------------------------
# GKP breeding
# ---------------------------------------------------------------------------


def gkp_breed(cat: Union[ProtocolReport, State], trunc=None, correct: bool = True, pad: int = DEFAULT_PAD) -> ProtocolReport:
    """Two identical cats on BS(1/2), homodyne x = 0 on one port, squeezing correction.

    r_corr = (1/4) ln(Var x / Var p) of the bred state; S(r_corr) is applied
    and the stabiliser-based effective squeezing is reported.
    """
    rep = cat if isinstance(cat, ProtocolReport) else None
    state = rep.state if rep is not None else cat
    d_out = _as_trunc(trunc).dim if trunc is not None else state.truncs[0].dim
    bred = breed_x0(state, state, d_out=d_out)
    out = bred.normalized
    r_corr = squeezing_correction(out) if correct else 0.0
    if correct and r_corr != 0.0:
        out = gaussian_correct(out, r_corr, 0.0, pad=pad)
        # renormalise the (tiny) truncation loss of the padded squeeze
        tr = out.trace()
        out = PureState(out.amplitudes / math.sqrt(tr), out.truncs) if isinstance(out, PureState) else DensityOperator(out.matrix / tr, out.truncs)
    sq = effective_squeezing(out)
    probs = list(rep.round_probabilities) if rep is not None else []
    total = rep.total_probability if rep is not None else 1.0
    return ProtocolReport(
        state=out,
        round_probabilities=probs,
        total_probability=total,
        generation_rate=rep.generation_rate if rep is not None else None,
        corrections={"r_corr": r_corr, "r_corr_db": squeezing_db(r_corr)},
        squeezing=sq,
        health=(rep.health if rep is not None else []) + [_health(out)],
        extra={"homodyne_density": bred.probability, "rate_kind": "cat rate", "parity": parity(out)},
    )


def generation_rate(p_total: float, clock_rate: float) -> float:
    """Heralded events per second: P_tot x clock rate."""
    return float(p_total) * float(clock_rate)


def gkp_pipeline(
    n: int,
    k: int,
    kappa: float,
    input_db: float,
    dim: int,
    switch_loss: float = 0.0,
    detector: Optional[DetectorModel] = None,
    clock_rate: Optional[float] = None,
) -> ProtocolReport:
    """cat_breed from S(r)|0> with r = input_db in nepers, then gkp_breed."""
    from .metrics import db_to_r

    cat = cat_breed(db_to_r(input_db), kappa, n, k, dim, switch_loss=switch_loss, detector=detector, clock_rate=clock_rate)
    rep = gkp_breed(cat)
    rep.extra["cat_parity"] = cat.extra["parity"]
    return rep


@dataclass(frozen=True)
class ThresholdResult:
    status: str  # "ok", "never above threshold", "not applicable"
    max_loss: Optional[float] = None
    lossless_db: Optional[float] = None


def find_loss_threshold(
    n: int,
    k: int,
    kappa: float,
    input_db: float,
    dim: int,
    squeezing_floor: float = FT_THRESHOLD_DB,
    tol: float = 1e-4,
    max_loss: float = 0.2,
) -> ThresholdResult:
    """Largest per-round switch loss keeping symmetric squeezing >= floor (bisection)."""
    if k == 1:
        return ThresholdResult("not applicable")

    def sym(loss):
        return gkp_pipeline(n, k, kappa, input_db, dim, switch_loss=loss).squeezing.symmetric_db

    s0 = sym(0.0)
    if s0 < squeezing_floor:
        return ThresholdResult("never above threshold", None, s0)
    lo, hi = 0.0, max_loss
    if sym(hi) >= squeezing_floor:
        return ThresholdResult("ok", hi, s0)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sym(mid) >= squeezing_floor:
            lo = mid
        else:
            hi = mid
    return ThresholdResult("ok", lo, s0)


def find_efficiency_threshold(
    n: int,
    k: int,
    kappa: float,
    input_db: float,
    dim: int,
    dark_rate: float = 20.0,
    window: float = 1e-9,
    squeezing_floor: float = FT_THRESHOLD_DB,
    tol: float = 1e-3,
    eta_min: float = 0.5,
) -> ThresholdResult:
    """Smallest detector efficiency keeping symmetric squeezing >= floor (bisection).

    ``max_loss`` in the result holds the threshold efficiency.
    """

    def sym(eta):
        det = DetectorModel(eta, dark_rate if eta < 1 else 0.0, window)
        return gkp_pipeline(n, k, kappa, input_db, dim, detector=det).squeezing.symmetric_db

    s1 = sym(1.0)
    if s1 < squeezing_floor:
        return ThresholdResult("never above threshold", None, s1)
    lo, hi = eta_min, 1.0
    if sym(lo) >= squeezing_floor:
        return ThresholdResult("ok", lo, s1)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sym(mid) >= squeezing_floor:
            hi = mid
        else:
            lo = mid
    return ThresholdResult("ok", hi, s1)


def run_config(cfg: ProtocolConfig) -> Union[ProtocolReport, HeraldedResult]:
    """Dispatch a :class:`ProtocolConfig` to its pipeline."""
    t = cfg.trunc
    s = cfg.scheme
    if s == "fock_prep":
        return fock_prep(cfg.n, cfg.kappa, t, cfg.detector)
    if s == "photon_add_opa":
        return photon_add_opa(cfg.r, cfg.kappa, cfg.n, t, cfg.detector)
    if s == "photon_add_fock":
        return photon_add_fock(cfg.r, cfg.n, cfg.kappa, cfg.tau, t, cfg.detector)
    if s == "cubic_opa":
        return cubic_opa(cfg.alpha, cfg.kappa, cfg.n, t)
    if s == "cubic_fock":
        return cubic_fock(cfg.alpha, cfg.n, cfg.kappa, t)
    if s == "cat_breed":
        return cat_breed(cfg.r, cfg.kappa, cfg.n, cfg.k, t, cfg.switch_loss, cfg.detector, cfg.loss_every_round, cfg.clock_rate)
    if s == "gkp_breed":
        cat = cat_breed(cfg.r, cfg.kappa, cfg.n, cfg.k, t, cfg.switch_loss, cfg.detector, cfg.loss_every_round, cfg.clock_rate)
        return gkp_breed(cat)
    raise ValueError(s)  # pragma: no cover
