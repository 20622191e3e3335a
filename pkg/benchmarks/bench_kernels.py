"""Compare the compiled and pure-Python kernel backends.

Each backend runs in its own interpreter because the choice is made at
import time (``IEQDG_PURE_PYTHON``). Usage::

    python benchmarks/bench_kernels.py [--cells 64] [--degree 2] [--repeat 20]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _best(fn, repeat: int) -> float:
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def measure(cells: int, degree: int, repeat: int, steps: int) -> dict:
    import numpy as np

    from ieqdg import kernels
    from ieqdg.basis import DGSpace
    from ieqdg.forms import PenaltyConfig, default_beta0
    from ieqdg.mesh import uniform_mesh
    from ieqdg.physics import MobilitySpec, PotentialSpec
    from ieqdg.stepper import CahnHilliardModel, advance, initial_state

    mesh = uniform_mesh([(-0.5, 0.5)] * 2, cells, "neumann")
    space = DGSpace(mesh, degree, family="P")
    pot = PotentialSpec("regularized_flory_huggins", theta=6000.0, theta_c=18000.0, sigma=1e-4, B=1000.0)
    mob = MobilitySpec("clamped_degenerate")
    model = CahnHilliardModel(space, pot, mob, 1.0, PenaltyConfig(default_beta0(degree, False), mesh.tau))
    rng = np.random.default_rng(0)
    state = initial_state(model, lambda x, y: 0.63 + 0.05 * np.sin(7 * x) * np.cos(5 * y), 1e-8)

    u = state.u.coeffs
    Ub = state.aux.values
    asm = model.assembler
    H, half_h2, ub, _ = kernels.nodal_rhs(space, pot, u, u, Ub)
    u_new = u + 1e-3 * rng.standard_normal(u.shape)
    base = model.a_eps_data()

    out = {
        "backend": kernels.BACKEND,
        "nodal_rhs": _best(lambda: kernels.nodal_rhs(space, pot, u, u, Ub), repeat),
        "aux_update": _best(lambda: kernels.aux_update(space, Ub, H, u_new, ub), repeat),
        "mass_plus": _best(lambda: kernels.mass_plus(base, half_h2, asm.mass_table, asm.pos_vol, asm.nnz), repeat),
    }
    s = state
    s, _ = advance(s, model, "ieq2")
    t0 = time.perf_counter()
    for _ in range(steps):
        s, _ = advance(s, model, "ieq2")
    out["step"] = (time.perf_counter() - t0) / steps
    out["final_coeff_sum"] = float(s.u.coeffs.sum())
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cells", type=int, default=64)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)

    if args.child:
        print(json.dumps(measure(args.cells, args.degree, args.repeat, args.steps)))
        return 0

    results = {}
    for label, pure in (("cython", "0"), ("python", "1")):
        env = dict(os.environ, IEQDG_PURE_PYTHON=pure)
        cmd = [sys.executable, __file__, "--child", "--cells", str(args.cells), "--degree", str(args.degree),
               "--repeat", str(args.repeat), "--steps", str(args.steps)]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    if results["cython"]["backend"] != "cython":
        print("compiled extension not available; both columns use the Python backend")
    print(f"P^{args.degree} on {args.cells}x{args.cells} cells, degenerate mobility, BDF2 steps")
    print(f"{'kernel':<12} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>8}")
    for key in ("nodal_rhs", "aux_update", "mass_plus", "step"):
        a, b = results["cython"][key] * 1e3, results["python"][key] * 1e3
        print(f"{key:<12} {a:>12.3f} {b:>12.3f} {b / a:>8.2f}")
    diff = abs(results["cython"]["final_coeff_sum"] - results["python"]["final_coeff_sum"])
    print(f"|difference in final coefficient sum| = {diff:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
