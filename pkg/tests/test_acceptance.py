"""Acceptance criteria.  Each test prints one ``criterion k: PASS|FAIL`` line.

Criteria 5 to 8 share one n=16 NDAR suite; 5 to 8 take tens of minutes on a
single core.  Deselect them with ``-m "not slow"``.
"""
import math

import numpy as np
import pytest

from conftest import VERDICTS, assert_ndar_invariants, random_hamiltonian
from ndar.circuit import QaoaParams, build_qaoa_circuit, native_gate_counts, sample_orderings
from ndar.harness import (
    ExperimentConfig,
    correlation_study,
    gauge_spread,
    load_instances,
    rerun_manifest,
    run_ndar_instances,
    run_study,
)
from ndar.ising import (
    GaugeMask,
    all_energies,
    approximation_ratio,
    bits_to_index,
    gauge_transform,
    generate_sk,
    hamming_weight,
    index_to_bits,
)
from ndar.simulator import NoiseModel, noiseless_probabilities, simulate_density_oracle, simulate_trajectories
from ndar.stats import correlate


def verdict(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    VERDICTS.append(line)
    assert ok, line


def _random_params(rng, p):
    return QaoaParams(tuple(rng.uniform(-math.pi / 2, math.pi / 2, p)), tuple(rng.uniform(-math.pi / 4, math.pi / 4, p)))


# ---------------------------------------------------------------------------
# 1-4: exact properties


def test_c1_gauge_lemma():
    rng = np.random.default_rng(1)
    worst = 0.0
    for case in range(20):
        n = int(rng.choice([4, 5, 6]))
        p = 1 + case % 2
        H = random_hamiltonian(rng, n)
        y = rng.integers(0, 2, n).astype(np.uint8)
        params = _random_params(rng, p)
        ordering = sample_orderings(n, 1, int(rng.integers(1 << 30)))[0]
        P = noiseless_probabilities(build_qaoa_circuit(H, params, ordering))
        Py = noiseless_probabilities(build_qaoa_circuit(gauge_transform(H, y), params, ordering))
        idx = np.arange(1 << n)
        worst = max(worst, float(np.max(np.abs(Py[idx ^ bits_to_index(y)] - P))))
    verdict(1, worst <= 1e-10, f"max |P_Hy(x^y) - P_H(x)| = {worst:.2e} over 20 cases")


def test_c2_gauge_algebra():
    rng = np.random.default_rng(2)
    checked = 0
    ok = True
    for n in range(1, 11):
        H = random_hamiltonian(rng, n, integer=True)
        E = all_energies(H)
        idx = np.arange(1 << n)
        for yi in range(1 << n):
            y = index_to_bits(int(yi), n)
            Hy = gauge_transform(H, y)
            ok &= gauge_transform(Hy, y) == H
            ok &= bool(np.array_equal(all_energies(Hy), E[idx ^ int(yi)]))
            ok &= bool(np.array_equal(np.sort(all_energies(Hy)), np.sort(E)))
            checked += 1
        # group law on random pairs
        for _ in range(8):
            a, b = rng.integers(0, 2, (2, n)).astype(np.uint8)
            ok &= gauge_transform(gauge_transform(H, a), b) == gauge_transform(H, GaugeMask(a).compose(b))
    verdict(2, bool(ok), f"involution, covariance over all x, spectrum and composition on {checked} gauges, n=1..10")


def test_c3_trajectories_vs_density():
    rng = np.random.default_rng(3)
    shots = 100_000
    worst = -np.inf
    details = []
    for c in range(10):
        n = 2 + c % 5
        H = random_hamiltonian(rng, n)
        params = _random_params(rng, 1 + c % 2)
        ordering = sample_orderings(n, 1, int(rng.integers(1 << 30)))[0]
        gl = build_qaoa_circuit(H, params, ordering)
        noise = NoiseModel(float(rng.uniform(0.01, 0.1)), float(rng.uniform(0.05, 0.3)), tuple(int(b) for b in rng.integers(0, 2, n)))
        exact = simulate_density_oracle(gl, noise)
        b = simulate_trajectories(gl, noise, shots, seed=1000 + c)
        emp = np.bincount(b.bitstrings.astype(np.int64) @ (1 << np.arange(n)), minlength=1 << n) / shots
        tv = 0.5 * float(np.abs(emp - exact).sum())
        bound = 3 * math.sqrt((1 << n) / shots)
        worst = max(worst, tv / bound)
        details.append(f"n={n} tv={tv:.4f}/{bound:.4f}")
    verdict(3, worst <= 1.0, f"worst tv/bound = {worst:.3f}; " + ", ".join(details))


def test_c4_gate_counts():
    gl = build_qaoa_circuit(generate_sk(82, 0), QaoaParams((0.3,), (0.2,)))
    c = native_gate_counts(gl)
    rot = c["rx"] + c["rz"]
    verdict(4, c["iswap"] == 9963 and 28_000 <= rot <= 32_000, f"iswap={c['iswap']} rotations={rot}")


# ---------------------------------------------------------------------------
# 5, 7, 8: one n=16 NDAR suite, default strong damping, t=20, s=100


@pytest.fixture(scope="module")
def ndar_suite():
    cfg = ExperimentConfig(kind="distributions")
    assert (cfg.n, cfg.instances, cfg.trials, cfg.shots, cfg.max_iters) == (16, 10, 20, 100, 5)
    instances = load_instances(cfg)
    return cfg, instances, run_ndar_instances(cfg, instances, keep_samples=True)


@pytest.mark.slow
def test_c5_ndar_reaches_ground_state(ndar_suite):
    cfg, instances, traces = ndar_suite
    hits = []
    for inst in instances:
        tr = traces[inst.index]
        ar = [approximation_ratio(e, inst.E_gs) for e in tr.best_so_far()]
        first = next((j for j, a in enumerate(ar) if a == 1.0), None)
        hits.append(first)
        print(f"instance {inst.index}: E_gs={inst.E_gs} best={[float(e) for e in tr.best_energies]} first AR=1 at {first} ({tr.reason})")
    solved = sum(h is not None and h < 5 for h in hits)
    verdict(5, solved >= 9, f"{solved}/10 instances reach AR = 1.0 within 5 iterations; first hit {hits}")


@pytest.mark.slow
def test_c7_ndar_invariants(ndar_suite):
    cfg, instances, traces = ndar_suite
    for inst in instances:
        assert_ndar_invariants(inst.H, traces[inst.index], cfg.samples_per_iter)
    verdict(7, True, f"invariants hold on all {len(instances)} runs")


@pytest.mark.slow
def test_c8_effective_hamming_convergence(ndar_suite):
    cfg, instances, traces = ndar_suite
    attractor_hw = int(hamming_weight(cfg.noise().attractor_bits(cfg.n)))
    raw0 = sum(traces[i.index].records[0].raw_hw_hist for i in instances)
    eff_last = sum(traces[i.index].records[-1].effective_hw_hist for i in instances)
    raw_mode, eff_mode = int(np.argmax(raw0)), int(np.argmax(eff_last))
    per = [(int(np.argmax(traces[i.index].records[0].raw_hw_hist)), int(np.argmax(traces[i.index].records[-1].effective_hw_hist))) for i in instances]
    print("per-instance (raw mode at iteration 0, effective mode at last iteration):", per)
    ok = abs(eff_mode - cfg.n // 2) <= 2 and abs(raw_mode - attractor_hw) <= 2
    verdict(8, ok, f"pooled final effective-HW mode {eff_mode} (target 8 +- 2), iteration-0 raw-HW mode {raw_mode} (attractor HW {attractor_hw})")


# ---------------------------------------------------------------------------
# 6: gauge correlation at n=12


CORR = dict(kind="correlation", n=12, instances=10, gauges=20, trials=100, shots=256)


@pytest.mark.slow
def test_c6_correlation_structure():
    damped = correlation_study(ExperimentConfig(**CORR))
    x = np.array([r["attractor_ar"] for r in damped])
    y = np.array([r["ar_q1"] for r in damped])
    c = correlate(x, y)
    print(f"damped: pearson r={c.pearson_r:.3f} p={c.pearson_p:.2e} spearman={c.spearman_rho:.3f} (n={c.n})")
    clean = correlation_study(ExperimentConfig(**CORR, backend="noiseless"))
    spread = gauge_spread(clean)
    ratios = [s["std"] / s["sem"] for s in spread]
    print("noiseless std/sem per instance:", [round(r, 2) for r in ratios])
    ok = c.pearson_r >= 0.3 and c.pearson_p < 0.01 and max(ratios) <= 3.0
    verdict(6, ok, f"damped pearson r={c.pearson_r:.3f} p={c.pearson_p:.1e}; noiseless max std/sem={max(ratios):.2f}")


# ---------------------------------------------------------------------------
# 9: determinism


def test_c9_rerun_from_manifest(tmp_path):
    small = dict(n=8, instances=2, trials=4, shots=32, orderings=3, max_iters=3, gauges=3)
    same = []
    for kind in ("correlation", "convergence", "distributions"):
        m = run_study(ExperimentConfig(kind=kind, **small), tmp_path / kind)
        rerun_manifest(tmp_path / kind / "manifest.json", tmp_path / f"{kind}-rerun")
        for name in (m.outputs["table"], m.outputs["summary"]):
            a = (tmp_path / kind / name).read_bytes()
            b = (tmp_path / f"{kind}-rerun" / name).read_bytes()
            same.append(a == b and len(a) > 0)
    verdict(9, all(same), f"{sum(same)}/{len(same)} CSVs byte-identical after rerun from manifest")
