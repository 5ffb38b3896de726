"""Compare the compiled and numpy element kernels, plus one full time step.

    python3 benchmarks/bench_kernels.py [--n 64 128] [--repeat 20]
"""
import argparse
import time

import numpy as np

from stochac import kernels
from stochac.assembly import NonlinearOperator
from stochac.mesh import generate_uniform
from stochac.stepper import SchemeConfig, StepWorkspace


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; timing the numpy kernels only")

    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'kernel':<16} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for n in args.n:
        mesh = generate_uniform(n)
        u = rng.uniform(-1, 1, mesh.num_vertices)
        ops = {b: NonlinearOperator(mesh, backend=b) for b in backends}
        out = np.empty(mesh.num_vertices)
        cases = {
            "N(u)": lambda op: op(u, out),
            "jacobian": lambda op: op.jacobian(u),
            "power_integrals": lambda op: op.power_integrals(u),
        }
        for name, fn in cases.items():
            times = [best_of(lambda: fn(ops[b]), args.repeat) for b in backends]
            speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 else ""
            print(f"{n:5d} {name:<16} " + " ".join(f"{1e3 * t:8.3f}ms" for t in times) + f"  {speed}")

        cfg = SchemeConfig(epsilon=0.1, delta=1.0, tau=0.001)
        u0 = np.tanh(rng.standard_normal(mesh.num_vertices))
        times = []
        for b in backends:
            ws = StepWorkspace(mesh, cfg, nonlinear=ops[b])
            times.append(best_of(lambda: ws.step(u0, 0.01), max(3, args.repeat // 4)))
        speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 else ""
        print(f"{n:5d} {'full step':<16} " + " ".join(f"{1e3 * t:8.3f}ms" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
