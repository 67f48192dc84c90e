"""Compare the numba kernels with their pure Python/numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 2000] [--trials 300]

Part 1 times each kernel in-process (jitted vs ``py_func`` / numpy variant).
Part 2 runs one Monte Carlo cell in two subprocesses, with and without
``RTK5G_DISABLE_NUMBA=1``, and checks that the CSV output is identical.
"""

import argparse
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from rtk5g import fiveg, ils
from rtk5g._accel import USE_NUMBA, python_impl


def per_call(fn, args, repeat):
    fn(*args)  # warm up (JIT compile / cache load)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def kernel_table(repeat):
    rng = np.random.default_rng(0)
    L = 3
    p = np.array([4e6, 3e6, 3.5e6])
    bs = p + rng.uniform(-25, 25, (L, 3))
    R = np.ascontiguousarray(Rotation.random(L, random_state=rng).as_matrix())
    n = 6
    A = rng.normal(size=(n, n))
    Q = A @ A.T + 0.1 * np.eye(n)
    Lm, d, _ = ils._ltdl_kernel(Q)
    Z = np.eye(n)
    Lr, dr = Lm.copy(), d.copy()
    ils._reduction_kernel(Lr, dr, Z)
    zs = rng.normal(0, 0.5, n)

    def reduce_fresh(kernel):
        return lambda: kernel(Lm.copy(), d.copy(), np.eye(n))

    cases = [
        ("fiveg model+jacobian (L=3)", fiveg._model_jacobian_loops,
         python_impl(fiveg._model_jacobian_loops), (p, bs, R, 0.1)),
        ("fiveg numpy variant", fiveg._model_jacobian_numpy, None, (p, bs, R, 0.1)),
        ("ltdl (n=6)", ils._ltdl_kernel, python_impl(ils._ltdl_kernel), (Q,)),
        ("decorrelation (n=6)", reduce_fresh(ils._reduction_kernel),
         reduce_fresh(python_impl(ils._reduction_kernel)), ()),
        ("ILS search (n=6, 1 best)", ils._search_kernel, python_impl(ils._search_kernel), (Lr, dr, zs, 1)),
    ]
    print(f"numba enabled: {USE_NUMBA}")
    print(f"{'kernel':30s} {'jit us':>10s} {'python us':>10s} {'speedup':>8s}")
    for name, fast, slow, args in cases:
        tf = per_call(fast, args, repeat)
        if slow is None:
            print(f"{name:30s} {'':>10s} {tf * 1e6:10.2f}")
            continue
        ts = per_call(slow, args, max(repeat // 10, 10))
        print(f"{name:30s} {tf * 1e6:10.2f} {ts * 1e6:10.2f} {ts / tf:8.1f}x")


def end_to_end(trials):
    cfg_text = f"N_list = 5\nL_list = 1\nsigma_list = 0.002\ntrials = {trials}\nseed = 5\n"
    outs, times = {}, {}
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "bench.cfg"
        cfg.write_text(cfg_text)
        for label, flag in (("numba", "0"), ("numpy", "1")):
            out = Path(tmp) / f"{label}.csv"
            env = dict(os.environ, RTK5G_DISABLE_NUMBA=flag)
            cmd = [sys.executable, "-m", "rtk5g", "simulate", "--config", str(cfg), "--out", str(out)]
            subprocess.run(cmd[:3] + ["availability"], env=env, check=True, capture_output=True)
            # first run populates the numba cache; time the second
            subprocess.run(cmd, env=env, check=True)
            t0 = time.perf_counter()
            subprocess.run(cmd, env=env, check=True)
            times[label] = time.perf_counter() - t0
            outs[label] = out.read_text()
    print(f"\nend to end, {trials} trials of N=5 L=1 (process wall time incl. imports)")
    for label, t in times.items():
        print(f"  {label:6s} {t:7.2f} s")
    same = outs["numba"] == outs["numpy"]
    print(f"  identical CSV: {same}")
    if not same:
        print(outs["numba"], outs["numpy"], sep="\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--skip-e2e", action="store_true")
    a = ap.parse_args()
    kernel_table(a.repeat)
    if not a.skip_e2e:
        end_to_end(a.trials)


if __name__ == "__main__":
    main()
