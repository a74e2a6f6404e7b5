"""Numba versus pure-numpy timings for the two hot kernels.

Both flavours are imported directly from ``molqsim._kernels`` so one process
times both, independent of MOLQSIM_DISABLE_NUMBA. The first numba call
(JIT compile, or cache load) is reported separately from the steady timings.

    python3 benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import statistics
import time

import numpy as np

from molqsim import _accel, _kernels
from molqsim.dynamics import _kernel_operators
from molqsim.quantify import correlation_tensor
from molqsim.scenarios import (DELTA_SWAP_GHZ, TRIMER_DELTA_GHZ, TRIMER_V13_GHZ, TRIMER_V_GHZ, V12_GHZ,
                               dimer_bare, dimer_gamma, trimer_bare_rotating, trimer_gamma)
from molqsim.states import basis_dm, dm, w_state


def _time(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out), res


def bench_rk4(label, H, G, rho0, n_steps, repeat):
    heff, jumps, rates = _kernel_operators(H, G)
    dt = 1e-3
    args = (heff, jumps, rates, np.ascontiguousarray(rho0), dt, n_steps, 100)
    t0 = time.perf_counter()
    _kernels.rk4_lindblad_numba(*args)
    warm = time.perf_counter() - t0
    t_nb, (s_nb, _) = _time(lambda: _kernels.rk4_lindblad_numba(*args), repeat)
    t_np, (s_np, _) = _time(lambda: _kernels.rk4_lindblad_numpy(*args), max(1, repeat // 2))
    diff = float(np.abs(s_nb - s_np).max())
    return dict(kernel=f"rk4 {label} ({n_steps} steps)", warmup=warm, numba=t_nb, numpy=t_np, diff=diff)


def bench_mermin(points, repeat):
    t = np.ascontiguousarray(correlation_tensor(dm(w_state())))
    angles = np.linspace(-np.pi, np.pi, points)
    t0 = time.perf_counter()
    _kernels.mermin_grid_numba(t, angles)
    warm = time.perf_counter() - t0
    t_nb, g_nb = _time(lambda: _kernels.mermin_grid_numba(t, angles), repeat)
    t_np, g_np = _time(lambda: _kernels.mermin_grid_numpy(t, angles), repeat)
    diff = float(np.abs(g_nb - g_np).max())
    return dict(kernel=f"mermin grid ({points}^6)", warmup=warm, numba=t_nb, numpy=t_np, diff=diff)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--steps", type=int, default=20000, help="RK4 steps per run")
    p.add_argument("--grid", type=int, default=13, help="Mermin grid points per angle")
    args = p.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rows = [
        bench_rk4("dimer", dimer_bare(V12_GHZ, DELTA_SWAP_GHZ), dimer_gamma(), basis_dm("10"),
                  args.steps, args.repeat),
        bench_rk4("trimer", trimer_bare_rotating(TRIMER_V_GHZ, TRIMER_V13_GHZ, TRIMER_DELTA_GHZ),
                  trimer_gamma(), basis_dm("100"), args.steps, args.repeat),
        bench_mermin(args.grid, args.repeat),
    ]
    print(f"{'kernel':32s} {'warmup s':>9s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'max diff':>9s}")
    for r in rows:
        print(f"{r['kernel']:32s} {r['warmup']:9.3f} {r['numba']:9.4f} {r['numpy']:9.4f} "
              f"{r['numpy'] / r['numba']:8.1f} {r['diff']:9.1e}")
    worst = max(r["diff"] for r in rows)
    if worst > 1e-10:
        raise SystemExit(f"flavours disagree: max diff {worst:.2e}")


if __name__ == "__main__":
    main()
