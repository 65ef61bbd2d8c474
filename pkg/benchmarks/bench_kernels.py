"""Time the numba kernels against the numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Numba timings exclude the first (compiling) call.
"""
import argparse
import time

from ndar import _accel
from ndar.circuit import QaoaParams, build_qaoa_circuit
from ndar.ising import generate_sk
from ndar.simulator import NoiseModel, simulate_trajectories
from ndar.solvers import AnnealSchedule, brute_force, simulated_annealing


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    noise = NoiseModel(0.02, 0.10)
    for n, shots in [(10, 500), (14, 200)]:
        gl = build_qaoa_circuit(generate_sk(n, 0), QaoaParams((0.3,), (-0.2,)))
        yield f"trajectories n={n} shots={shots}", lambda k, gl=gl, shots=shots: simulate_trajectories(gl, noise, shots, seed=0, kernels=k)
    H = generate_sk(18, 0)
    yield "brute force n=18", lambda k: brute_force(H, kernels=k)
    H = generate_sk(40, 0)
    sched = AnnealSchedule(sweeps=200, replicas=4, seed=0)
    yield "annealing n=40 200 sweeps x4", lambda k: simulated_annealing(H, sched, kernels=k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{'case':34s} " + " ".join(f"{b:>10s}" for b in backends) + ("    speedup" if len(backends) == 2 else ""))
    for name, fn in cases():
        row = {}
        for b in backends:
            if b == "numba":
                fn(b)  # compile
            row[b] = best_of(lambda: fn(b), args.repeat)
        line = f"{name:34s} " + " ".join(f"{row[b]:9.3f}s" for b in backends)
        if len(backends) == 2:
            line += f"  {row['numpy'] / row['numba']:8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
