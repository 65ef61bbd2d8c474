"""Execution backends for compiled QAOA circuits.

* ``noiseless``     exact statevector, outcomes drawn by inverse CDF;
* ``trajectories``  amplitude damping unravelled into stochastic pure states,
                    one trajectory per shot;
* ``density``       exact density-matrix evolution (tiny n), used as oracle.

All backends start from ``|+>^n`` and report bitstrings in the logical frame.
Damping after a gate hits every qubit the gate touches, toward the noise
model's attractor.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _accel
from .circuit import MIX, RX_HALF, RZ, RZZ_SWAP, GateList
from .errors import CapacityError, ConfigError, DimensionError, EmptyInputError
from .ising import IsingHamiltonian, as_bits, bits_to_str, energies, indices_to_bits

STATEVECTOR_CAP = 26
DENSITY_CAP = 8
BACKENDS = ("noiseless", "trajectories", "density")

OP_ZZ, OP_RX, OP_RZ = 0, 1, 2


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate amplitude damping toward ``attractor`` (logical frame).

    ``attractor=None`` means all zeros.  Defaults are the package's
    strong-damping setting, not measured hardware numbers.
    """

    gamma_1q: float = 0.02
    gamma_2q: float = 0.10
    attractor: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("gamma_1q", "gamma_2q"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
            object.__setattr__(self, name, v)
        if self.attractor is not None:
            object.__setattr__(self, "attractor", tuple(int(b) for b in as_bits(self.attractor)))

    @classmethod
    def noiseless(cls, attractor=None) -> "NoiseModel":
        return cls(0.0, 0.0, attractor)

    @property
    def is_noiseless(self) -> bool:
        return self.gamma_1q == 0.0 and self.gamma_2q == 0.0

    def attractor_bits(self, n: int) -> np.ndarray:
        if self.attractor is None:
            return np.zeros(n, dtype=np.uint8)
        if len(self.attractor) != n:
            raise DimensionError(f"attractor has length {len(self.attractor)}, circuit has {n}")
        return np.array(self.attractor, dtype=np.uint8)


@dataclass
class SampleBatch:
    bitstrings: np.ndarray  # (shots, n) uint8, logical frame
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bitstrings = np.asarray(self.bitstrings, dtype=np.uint8)
        if self.bitstrings.ndim != 2:
            raise ValueError("bitstrings must be a (shots, n) array")

    @property
    def shots(self) -> int:
        return self.bitstrings.shape[0]

    @property
    def n(self) -> int:
        return self.bitstrings.shape[1]

    def energies(self, H: IsingHamiltonian) -> np.ndarray:
        return energies(H, self.bitstrings)

    def to_csv(self, path, H: IsingHamiltonian) -> None:
        E = self.energies(H)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["shot", "bitstring", "energy"])
            for k, (x, e) in enumerate(zip(self.bitstrings, E)):
                w.writerow([k, bits_to_str(x), repr(float(e))])


def _check_cap(n, cap, what):
    if n > cap:
        raise CapacityError(f"{what} supports at most {cap} qubits, circuit has {n}")


# ---------------------------------------------------------------------------
# noiseless statevector (physical frame, explicit swaps)


@lru_cache(maxsize=64)
def _swap_index(n: int, a: int, b: int) -> np.ndarray:
    x = np.arange(1 << n, dtype=np.int64)
    ba = (x >> a) & 1
    bb = (x >> b) & 1
    return x ^ ((ba ^ bb) << a) ^ ((ba ^ bb) << b)


@lru_cache(maxsize=64)
def _bit(n: int, q: int) -> np.ndarray:
    return ((np.arange(1 << n, dtype=np.int64) >> q) & 1).astype(bool)


def _physical_to_logical(values: np.ndarray, n: int, permutation) -> np.ndarray:
    """Reindex a vector over position-bit strings into logical-bit strings."""
    x = np.arange(1 << n, dtype=np.int64)  # logical index
    phys = np.zeros_like(x)
    for logical, pos in enumerate(permutation):
        phys |= ((x >> logical) & 1) << pos
    return values[phys]


def statevector(gl: GateList) -> np.ndarray:
    """Final logical-frame statevector of the noiseless circuit."""
    n = gl.n
    _check_cap(n, STATEVECTOR_CAP, "statevector simulation")
    psi = np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=np.complex128)
    for g in gl.gates:
        if g.kind == RZZ_SWAP:
            same = _bit(n, g.q0) == _bit(n, g.q1)
            psi = psi * np.where(same, np.exp(-0.5j * g.theta), np.exp(0.5j * g.theta))
            psi = psi[_swap_index(n, g.q0, g.q1)]
        elif g.kind == RZ:
            psi = psi * np.where(_bit(n, g.q0), np.exp(0.5j * g.theta), np.exp(-0.5j * g.theta))
        else:
            theta = 2.0 * g.theta if g.kind == MIX else g.theta
            c, s = math.cos(theta / 2), math.sin(theta / 2)
            v = psi.reshape(-1, 2, 1 << g.q0)
            a0, a1 = v[:, 0, :].copy(), v[:, 1, :].copy()
            v[:, 0, :] = c * a0 - 1j * s * a1
            v[:, 1, :] = -1j * s * a0 + c * a1
    return _physical_to_logical(psi, n, gl.permutation)


def noiseless_probabilities(gl: GateList) -> np.ndarray:
    p = np.abs(statevector(gl)) ** 2
    return p / p.sum()


def sample_from_probabilities(p: np.ndarray, n: int, shots: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    idx = np.minimum(idx, p.size - 1)
    return indices_to_bits(idx, n)


def simulate_noiseless(gl: GateList, shots: int, seed=None) -> SampleBatch:
    p = noiseless_probabilities(gl)
    return SampleBatch(sample_from_probabilities(p, gl.n, shots, seed), seed, {"backend": "noiseless"})


# ---------------------------------------------------------------------------
# density-matrix oracle


def _apply_op(rho, n, op, axes):
    """rho -> op rho op^dagger, op acting on the given tensor axes."""
    k = len(axes)
    t = rho.reshape((2,) * (2 * n))
    opt = op.reshape((2,) * (2 * k))
    row_axes = list(axes)
    col_axes = [a + n for a in axes]
    t = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), row_axes))
    t = np.moveaxis(t, list(range(k)), row_axes)
    t = np.tensordot(t, opt.conj(), axes=(col_axes, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), col_axes)
    return t.reshape(1 << n, 1 << n)


def _damping_kraus(gamma, excited_bit):
    K0 = np.diag([1.0, math.sqrt(1.0 - gamma)]).astype(complex)
    K1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    if excited_bit == 0:
        X = np.array([[0, 1], [1, 0]], dtype=complex)
        K0, K1 = X @ K0 @ X, X @ K1 @ X
    return K0, K1


def _rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def simulate_density_oracle(gl: GateList, noise: NoiseModel) -> np.ndarray:
    """Exact logical-frame outcome probabilities under per-gate damping."""
    n = gl.n
    _check_cap(n, DENSITY_CAP, "the density-matrix oracle")
    attractor = noise.attractor_bits(n)
    dim = 1 << n
    rho = np.full((dim, dim), 1.0 / dim, dtype=complex)
    pos2log = [0] * n
    for logical, pos in enumerate(gl.initial):
        pos2log[pos] = logical

    def axis(pos):
        return n - 1 - pos

    def damp(rho, pos, gamma):
        if gamma == 0.0:
            return rho
        K0, K1 = _damping_kraus(gamma, 1 - attractor[pos2log[pos]])
        ax = [axis(pos)]
        return _apply_op(rho, n, K0, ax) + _apply_op(rho, n, K1, ax)

    swap = np.eye(4)[[0, 2, 1, 3]]
    for g in gl.gates:
        if g.kind == RZZ_SWAP:
            zz = np.diag(np.exp(-0.5j * g.theta * np.array([1, -1, -1, 1])))
            rho = _apply_op(rho, n, swap @ zz, [axis(g.q0), axis(g.q1)])
            pos2log[g.q0], pos2log[g.q1] = pos2log[g.q1], pos2log[g.q0]
            rho = damp(rho, g.q0, noise.gamma_2q)
            rho = damp(rho, g.q1, noise.gamma_2q)
        else:
            if g.kind == RZ:
                U = np.diag([np.exp(-0.5j * g.theta), np.exp(0.5j * g.theta)])
            elif g.kind == MIX:
                U = _rx(2.0 * g.theta)
            elif g.kind == RX_HALF:
                U = _rx(g.theta)
            else:
                raise ValueError(f"unknown gate {g.kind}")
            rho = _apply_op(rho, n, U, [axis(g.q0)])
            rho = damp(rho, g.q0, noise.gamma_1q)
    p = np.real(np.diag(rho)).copy()
    p = np.clip(p, 0.0, None)
    return _physical_to_logical(p, n, gl.permutation)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class CompiledOps:
    n: int
    kinds: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    theta: np.ndarray
    rate: np.ndarray
    excited: np.ndarray
    n_uniforms: int  # per shot, including the measurement draw

    def args(self):
        return (self.n, self.kinds, self.q0, self.q1, self.theta, self.rate, self.excited)


def compile_ops(gl: GateList, noise: NoiseModel) -> CompiledOps:
    """Lower a gate list to logical-qubit op arrays; swaps become relabelling."""
    n = gl.n
    pos2log = [0] * n
    for logical, pos in enumerate(gl.initial):
        pos2log[pos] = logical
    kinds, q0, q1, theta, rate = [], [], [], [], []
    for g in gl.gates:
        if g.kind == RZZ_SWAP:
            i, j = pos2log[g.q0], pos2log[g.q1]
            kinds.append(OP_ZZ)
            q0.append(i)
            q1.append(j)
            theta.append(g.theta)
            rate.append(noise.gamma_2q)
            pos2log[g.q0], pos2log[g.q1] = j, i
        else:
            q0.append(pos2log[g.q0])
            q1.append(-1)
            rate.append(noise.gamma_1q)
            if g.kind == RZ:
                kinds.append(OP_RZ)
                theta.append(g.theta)
            else:
                kinds.append(OP_RX)
                theta.append(2.0 * g.theta if g.kind == MIX else g.theta)
    kinds = np.array(kinds, dtype=np.int64)
    n_uniforms = int(np.where(kinds == OP_ZZ, 2, 1).sum()) + 1
    excited = (1 - noise.attractor_bits(n)).astype(np.int64)
    return CompiledOps(
        n,
        kinds,
        np.array(q0, dtype=np.int64),
        np.array(q1, dtype=np.int64),
        np.array(theta, dtype=np.float64),
        np.array(rate, dtype=np.float64),
        excited,
        n_uniforms,
    )


def trajectory_uniforms(seed, shots: int, per_shot: int) -> np.ndarray:
    """Uniform draws for every shot from a single root seed.

    Row ``k`` depends only on ``(seed, k)``-ordered consumption of one
    generator, so chunking or threading the kernel cannot change results.
    """
    return np.random.default_rng(seed).random((shots, per_shot))


def simulate_trajectories(
    gl: GateList,
    noise: NoiseModel,
    shots: int,
    seed=None,
    jobs: int = 1,
    kernels: str | None = None,
    cap: int = STATEVECTOR_CAP,
) -> SampleBatch:
    _check_cap(gl.n, cap, "trajectory simulation")
    if shots < 1:
        raise EmptyInputError("shots must be >= 1")
    ops = compile_ops(gl, noise)
    K = _accel.get_kernels(kernels)
    u = trajectory_uniforms(seed, shots, ops.n_uniforms)
    out = np.empty(shots, dtype=np.int64)
    if jobs <= 1 or shots < 2 * jobs:
        K.run_trajectories(*ops.args(), u, out)
    else:
        bounds = np.linspace(0, shots, jobs + 1).astype(int)
        with ThreadPoolExecutor(jobs) as ex:
            futures = [
                ex.submit(K.run_trajectories, *ops.args(), u[a:b], out[a:b])
                for a, b in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()
    return SampleBatch(indices_to_bits(out, gl.n), seed, {"backend": "trajectories"})


def sample(gl: GateList, noise: NoiseModel, shots: int, seed=None, backend: str = "trajectories", jobs: int = 1) -> SampleBatch:
    """Dispatch on the configured backend name."""
    if backend == "noiseless" or (backend == "trajectories" and noise.is_noiseless):
        # noiseless trajectories are plain statevector samples
        return simulate_noiseless(gl, shots, seed)
    if backend == "trajectories":
        return simulate_trajectories(gl, noise, shots, seed, jobs=jobs)
    if backend == "density":
        p = simulate_density_oracle(gl, noise)
        return SampleBatch(sample_from_probabilities(p, gl.n, shots, seed), seed, {"backend": "density"})
    raise ConfigError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


# ---------------------------------------------------------------------------
# cost estimates


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    min: float
    sorted_energies: np.ndarray

    def quantile(self, q: float) -> float:
        """Mean of the best ``q`` fraction of samples (lowest energies)."""
        if not 0.0 < q <= 1.0:
            raise ValueError("quantile fraction must lie in (0, 1]")
        m = self.sorted_energies.size
        k = max(1, math.ceil(q * m - 1e-9))
        return float(self.sorted_energies[:k].mean())

    def quantiles(self, qs) -> dict[float, float]:
        return {q: self.quantile(q) for q in qs}


def estimate_cost(batch, H_frame: IsingHamiltonian | None = None) -> CostEstimate:
    """Mean, min and top-fraction means of a batch (or a raw energy array)."""
    if isinstance(batch, SampleBatch):
        if batch.shots == 0:
            raise EmptyInputError("empty sample batch")
        E = batch.energies(H_frame)
    else:
        E = np.asarray(batch, dtype=float)
    if E.size == 0:
        raise EmptyInputError("empty sample batch")
    E = np.sort(E)
    return CostEstimate(float(E.mean()), float(E[0]), E)
