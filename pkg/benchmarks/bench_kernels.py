"""Time the integration kernels with numba and with the plain numpy fallback.

Each backend runs in its own interpreter because the switch is read at import
time.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--steps 4000]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _child(steps):
    from dataclasses import replace

    from dobbench import _jit
    from dobbench.scenario import benchmark
    from dobbench.sim import integrate

    sf = benchmark()
    cfg = replace(sf.sim.with_noise(0.01), horizon=steps * 1e-4, step=1e-4)
    out = {"numba": _jit.USE_NUMBA}
    for method in ("rk4", "rk4-transformed", "etd"):
        integrate(sf.scenario, sf.qfilter, replace(cfg, horizon=200e-4), s_bar=16.4, method=method)  # warm-up / compile
        t0 = time.perf_counter()
        traj = integrate(sf.scenario, sf.qfilter, cfg, s_bar=16.4, method=method)
        dt = time.perf_counter() - t0
        out[method] = {"seconds": dt, "us_per_step": 1e6 * dt / steps, "sup_e": traj.sup_e}
    print(json.dumps(out))


def _run(steps, disable):
    env = dict(os.environ, DOBBENCH_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--child", "--steps", str(steps)],
                         env=env, capture_output=True, text=True)
    if res.returncode:
        sys.exit(res.stderr)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        _child(args.steps)
        return

    fast = _run(args.steps, disable=False)
    slow = _run(args.steps, disable=True)
    print(f"{args.steps} steps, h = 1e-4, square noise mu = 0.01")
    print(f"{'kernel':<17}{'numba us/step':>15}{'numpy us/step':>15}{'speedup':>10}{'|d sup_e|':>12}")
    for method in ("rk4", "rk4-transformed", "etd"):
        a, b = fast[method], slow[method]
        print(f"{method:<17}{a['us_per_step']:>15.2f}{b['us_per_step']:>15.2f}"
              f"{b['seconds'] / a['seconds']:>9.1f}x{abs(a['sup_e'] - b['sup_e']):>12.1e}")
    if not fast["numba"]:
        print("note: numba was not importable, both runs used the numpy path")
    assert all(np.isclose(fast[m]["sup_e"], slow[m]["sup_e"], rtol=1e-9, atol=1e-14)
               for m in ("rk4", "rk4-transformed", "etd")), "backends disagree"


if __name__ == "__main__":
    main()
