"""Classical reference solvers: exhaustive search, annealing, random sampling."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import CapacityError, ConfigError
from .ising import IsingHamiltonian, as_bits, energies, energy, indices_to_bits

BRUTE_FORCE_CAP = 24


@dataclass(frozen=True)
class EnergyRecord:
    bitstring: np.ndarray
    energy: float
    approximation_ratio: float | None = None

    def with_reference(self, E_gs: float) -> "EnergyRecord":
        from .ising import approximation_ratio

        return EnergyRecord(self.bitstring, self.energy, approximation_ratio(self.energy, E_gs))


@dataclass(frozen=True)
class GroundStateResult:
    energy: float
    minimizers: list[np.ndarray]
    exact: bool
    count: int | None = None  # total minimizer count, if more were found than stored

    @property
    def n_minimizers(self) -> int:
        return self.count if self.count is not None else len(self.minimizers)

    def to_json(self) -> dict:
        from .ising import bits_to_str

        return {
            "energy": self.energy,
            "exact": self.exact,
            "minimizers": self.n_minimizers,
            "representative": bits_to_str(self.minimizers[0]) if self.minimizers else None,
        }


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear inverse-temperature ramp.  Defaults are this package's own choice."""

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 5.0
    replicas: int = 32
    seed: object = 0

    def __post_init__(self):
        if self.sweeps < 1 or self.replicas < 1:
            raise ConfigError("sweeps and replicas must be >= 1")
        if not 0 < self.beta_start <= self.beta_end:
            raise ConfigError("need 0 < beta_start <= beta_end")

    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_start, self.beta_end, self.sweeps)


def brute_force(H: IsingHamiltonian, cap: int = BRUTE_FORCE_CAP, max_stored: int = 4096, kernels=None) -> GroundStateResult:
    """Exact ground energy and all minimizers by Gray-code enumeration."""
    if H.n > cap:
        raise CapacityError(
            f"brute force is capped at {cap} qubits (n={H.n}); use simulated annealing instead"
        )
    K = _accel.get_kernels(kernels)
    scale = 1.0 + float(np.abs(H.h).sum() + np.abs(H.J).sum())
    tol = 1e-9 * scale
    emin, idx, count = K.gray_code_minimum(
        np.ascontiguousarray(H.h, dtype=float), np.ascontiguousarray(H.J_sym, dtype=float), tol, max_stored
    )
    cand = indices_to_bits(np.asarray(idx), H.n)
    # re-evaluate exactly; incremental updates may drift in the last bits
    E = energies(H, cand)
    best = float(E.min())
    keep = np.abs(E - best) <= tol
    mins = [c for c, k in zip(cand, keep) if k]
    exact_count = None if count <= max_stored else int(count)
    return GroundStateResult(best, mins, True, exact_count)


def simulated_annealing(
    H: IsingHamiltonian, schedule: AnnealSchedule = AnnealSchedule(), initial=None, jobs: int = 1, kernels=None
) -> list[EnergyRecord]:
    """Best state per replica.  Replica ``r`` uses its own spawned seed stream."""
    K = _accel.get_kernels(kernels)
    h = np.ascontiguousarray(H.h, dtype=float)
    Jsym = np.ascontiguousarray(H.J_sym, dtype=float)
    betas = schedule.betas()
    children = np.random.SeedSequence(_entropy(schedule.seed)).spawn(schedule.replicas)

    def run(r):
        rng = np.random.default_rng(children[r])
        if initial is None:
            s0 = 1.0 - 2.0 * rng.integers(0, 2, H.n)
        else:
            s0 = 1.0 - 2.0 * as_bits(initial, H.n).astype(float)
        u = rng.random((schedule.sweeps, H.n))
        _, best_s = K.anneal_replica(h, Jsym, betas, s0.astype(float), u)
        bits = ((1 - np.asarray(best_s)) // 2).astype(np.uint8)
        return EnergyRecord(bits, energy(H, bits))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(run, range(schedule.replicas)))
    return [run(r) for r in range(schedule.replicas)]


def random_sampling(H: IsingHamiltonian, M: int, seed=None) -> list[EnergyRecord]:
    X = random_bitstrings(H.n, M, seed)
    return [EnergyRecord(x, float(e)) for x, e in zip(X, energies(H, X))]


def random_bitstrings(n: int, M: int, seed=None) -> np.ndarray:
    if M < 1:
        raise ValueError("M must be >= 1")
    return np.random.default_rng(seed).integers(0, 2, size=(M, n), dtype=np.uint8)


def _entropy(seed):
    if seed is None:
        return None
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return int(seed)
