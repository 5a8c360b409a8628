"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--dim 120] [--repeat 5]

Both paths are imported from the same module, so one process measures both
regardless of ``SIM_DISABLE_NUMBA``.  The numba timing excludes the first
(compiling) call.  Each row also reports the max abs difference between the
two outputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from opasim import _kernels as K


def _cases(dim: int, rng: np.random.Generator):
    v = rng.normal(size=(dim, 8)) + 1j * rng.normal(size=(dim, 8))
    rho = v @ v.conj().T
    rho /= np.trace(rho).real
    x = np.linspace(-8, 8, 401)
    grid = np.linspace(-4, 4, 61)
    A = 0.5 * (grid[None, :] - 1j * grid[:, None])
    return [
        ("hermite", (dim, x)),
        ("displacement", (np.sqrt(np.pi) * np.exp(0.4j), dim)),
        ("wigner", (rho, A)),
        ("pure_loss", (rho, 0.9)),
        ("amplifier", (rho, 1.05)),
    ]


_FUNCS = {
    "hermite": (K.hermite_functions_np, K.hermite_functions_nb),
    "displacement": (K.displacement_matrix_np, K.displacement_matrix_nb),
    "wigner": (K.wigner_np, K.wigner_nb),
    "pure_loss": (K.pure_loss_np, K.pure_loss_nb),
    "amplifier": (K.amplifier_np, K.amplifier_nb),
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if K.numba is None:
        print("numba not installed; only the numpy path exists")
        return 1
    rng = np.random.default_rng(0)
    print(f"dim={args.dim}  best of {args.repeat}  active backend: {K.BACKEND}")
    print(f"{'kernel':<14}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}{'max |diff|':>12}")
    for name, fargs in _cases(args.dim, rng):
        f_np, f_nb = _FUNCS[name]
        out_nb = f_nb(*fargs)  # compile
        out_np = f_np(*fargs)
        t_np = min(timeit.repeat(lambda: f_np(*fargs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: f_nb(*fargs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(out_np - out_nb)))
        print(f"{name:<14}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
