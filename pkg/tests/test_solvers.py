import math

import numpy as np
import pytest

from conftest import naive_spectrum, random_hamiltonian
from ndar.errors import CapacityError, ConfigError
from ndar.ising import IsingHamiltonian, all_energies, bits_to_str, energies, energy, generate_sk
from ndar.solvers import AnnealSchedule, brute_force, random_bitstrings, random_sampling, simulated_annealing
from test_ising import SK16_SEED7_GS, SK16_SEED7_MINIMIZERS

KERNELS = ["numba", "numpy"]


@pytest.mark.parametrize("kernels", KERNELS)
def test_pair_ground_states(kernels):
    r = brute_force(IsingHamiltonian(2, {}, {(0, 1): 1.0}), kernels=kernels)
    assert r.energy == -1.0 and {bits_to_str(m) for m in r.minimizers} == {"01", "10"}
    r = brute_force(IsingHamiltonian(2, {}, {(0, 1): -1.0}), kernels=kernels)
    assert r.energy == -1.0 and {bits_to_str(m) for m in r.minimizers} == {"00", "11"}


@pytest.mark.parametrize("kernels", KERNELS)
@pytest.mark.parametrize("n", [3, 6, 9, 12])
def test_brute_force_against_naive_enumerator(n, kernels, rng):
    for linear in (False, True):
        H = random_hamiltonian(rng, n, linear=linear, integer=True)
        E = naive_spectrum(H)
        r = brute_force(H, kernels=kernels)
        assert r.energy == E.min()
        want = {bits_to_str([(i >> k) & 1 for k in range(n)]) for i in np.flatnonzero(E == E.min())}
        assert {bits_to_str(m) for m in r.minimizers} == want
        for m in r.minimizers:
            assert energy(H, m) == r.energy


def test_zz_only_minimizers_pair_up():
    r = brute_force(generate_sk(12, 4))
    got = {bits_to_str(m) for m in r.minimizers}
    assert {"".join("1" if c == "0" else "0" for c in s) for s in got} == got


def test_sk16_golden():
    r = brute_force(generate_sk(16, 7))
    assert r.energy == SK16_SEED7_GS
    assert {bits_to_str(m) for m in r.minimizers} == SK16_SEED7_MINIMIZERS
    assert r.exact and r.to_json()["minimizers"] == 2


def test_brute_force_cap():
    with pytest.raises(CapacityError):
        brute_force(generate_sk(25, 0))
    with pytest.raises(CapacityError):
        brute_force(generate_sk(10, 0), cap=8)


def test_max_stored_reports_total():
    H = IsingHamiltonian(8)  # every state is a minimizer
    r = brute_force(H, max_stored=10)
    assert len(r.minimizers) == 10 and r.n_minimizers == 256


@pytest.mark.parametrize("kernels", KERNELS)
def test_anneal_zero_temperature_fixed_point(kernels):
    H = generate_sk(12, 1)
    gs = brute_force(H).minimizers[0]
    recs = simulated_annealing(H, AnnealSchedule(50, 1e3, 1e3, 4, 0), initial=gs, kernels=kernels)
    assert all(bits_to_str(r.bitstring) == bits_to_str(gs) for r in recs)


def test_anneal_finds_sk16_ground_state():
    recs = simulated_annealing(generate_sk(16, 7), AnnealSchedule(1000, 0.1, 5.0, 32, 0))
    assert min(r.energy for r in recs) == SK16_SEED7_GS


def test_anneal_determinism_and_kernel_parity():
    H = generate_sk(10, 3)
    s = AnnealSchedule(200, 0.1, 3.0, 6, 11)
    a = simulated_annealing(H, s, kernels="numba")
    b = simulated_annealing(H, s, kernels="numba", jobs=3)
    c = simulated_annealing(H, s, kernels="numpy")
    for x, y, z in zip(a, b, c):
        assert bits_to_str(x.bitstring) == bits_to_str(y.bitstring) == bits_to_str(z.bitstring)
        assert x.energy == energy(H, x.bitstring)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        AnnealSchedule(sweeps=0)
    with pytest.raises(ConfigError):
        AnnealSchedule(beta_start=2.0, beta_end=1.0)


def test_random_sampling_basics():
    recs = random_sampling(IsingHamiltonian(1, {0: 1.0}), 1, seed=0)
    assert len(recs) == 1 and bits_to_str(recs[0].bitstring) in {"0", "1"}
    H = generate_sk(8, 0)
    X = random_bitstrings(8, 100_000, seed=1)
    E = energies(H, X)
    assert abs(E.mean()) < 5 * E.std() / math.sqrt(E.size)
    with pytest.raises(ValueError):
        random_bitstrings(3, 0)


def test_best_of_m_matches_order_statistics():
    """Best-of-M energy law vs the exact CDF from full enumeration."""
    H = generate_sk(12, 3)
    levels, counts = np.unique(all_energies(H), return_counts=True)
    F = np.cumsum(counts) / counts.sum()  # P(E <= level)
    M, reps = 10_000, 300
    exact = 1 - (1 - F) ** M  # P(min <= level)
    rng = np.random.default_rng(9)
    best = np.array([energies(H, rng.integers(0, 2, (M, 12))).min() for _ in range(reps)])
    for lvl, p in zip(levels[:4], exact[:4]):
        emp = np.mean(best <= lvl)
        assert abs(emp - p) <= 5 * math.sqrt(p * (1 - p) / reps) + 1e-9
