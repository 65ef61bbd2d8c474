"""Noise-directed adaptive remapping: the greedy re-gauging outer loop.

Each iteration samples the current frame Hamiltonian ``H_j``, picks the
lowest-energy sample ``x*`` and re-gauges with ``x* ^ attractor`` so the
noise attractor takes energy ``E*`` in the next frame.  ``H_j`` always equals
``gauge_transform(H0, cumulative_gauge_j)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .circuit import GateList, QaoaParams, RZZ_SWAP, Gate, build_phase_network, build_qaoa_circuit, sample_orderings
from .errors import ConfigError, DimensionError, OptimizerError
from .ising import (
    GaugeMask,
    IsingHamiltonian,
    approximation_ratio,
    as_bits,
    bits_to_str,
    energies,
    energy,
    gauge_transform,
    instance_hash,
)
from .paramopt import SearchSpace, Trial, TpeSettings, run_search
from .simulator import NoiseModel, SampleBatch, sample
from .solvers import EnergyRecord

RULES = ("no_improvement", "max_iters")


@dataclass(frozen=True)
class NdarConfig:
    samples_per_iter: int = 2000
    trials_per_iter: int = 20
    max_iters: int = 10
    termination: tuple[str, ...] = ("no_improvement", "max_iters")
    attractor: tuple[int, ...] | None = None
    orderings_per_iter: int = 10
    epsilon: float = 0.0
    keep_samples: bool = False

    def __post_init__(self):
        if min(self.samples_per_iter, self.trials_per_iter, self.max_iters) < 1:
            raise ConfigError("samples_per_iter, trials_per_iter and max_iters must be >= 1")
        terms = (self.termination,) if isinstance(self.termination, str) else tuple(self.termination)
        for r in terms:
            if r not in RULES:
                raise ConfigError(f"unknown termination rule {r!r}; expected one of {RULES}")
        object.__setattr__(self, "termination", terms)
        if self.attractor is not None:
            object.__setattr__(self, "attractor", tuple(int(b) for b in as_bits(self.attractor)))

    def attractor_bits(self, n: int) -> np.ndarray:
        if self.attractor is None:
            return np.zeros(n, dtype=np.uint8)
        if len(self.attractor) != n:
            raise ConfigError(f"attractor length {len(self.attractor)} does not match n={n}")
        return np.array(self.attractor, dtype=np.uint8)


@dataclass
class OptimizerResult:
    bitstrings: np.ndarray  # (M, n) samples in the frame they were drawn for
    trials: list[Trial] = field(default_factory=list)


class StochasticOptimizer(Protocol):
    def __call__(self, H: IsingHamiltonian, iteration: int) -> OptimizerResult: ...


@dataclass
class IterationRecord:
    iteration: int
    gauge_applied: GaugeMask
    cumulative_gauge: GaugeMask
    attractor_energy: float
    best_energy: float
    mean_energy: float
    best_bitstring: np.ndarray  # frame bitstring x*
    samples_total: int
    raw_hw_hist: np.ndarray
    effective_hw_hist: np.ndarray
    energy_values: np.ndarray  # distinct sampled energies
    energy_counts: np.ndarray
    samples: np.ndarray | None = None
    trials: list[Trial] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        d = {
            "iteration": self.iteration,
            "gauge_applied": str(self.gauge_applied),
            "cumulative_gauge": str(self.cumulative_gauge),
            "attractor_energy": self.attractor_energy,
            "best_energy": self.best_energy,
            "mean_energy": self.mean_energy,
            "best_bitstring": bits_to_str(self.best_bitstring),
            "samples_total": self.samples_total,
            "raw_hw_hist": self.raw_hw_hist.tolist(),
            "effective_hw_hist": self.effective_hw_hist.tolist(),
            "energy_values": self.energy_values.tolist(),
            "energy_counts": self.energy_counts.tolist(),
        }
        if self.samples is not None:
            d["samples"] = [bits_to_str(x) for x in self.samples]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "IterationRecord":
        samples = d.get("samples")
        return cls(
            iteration=d["iteration"],
            gauge_applied=GaugeMask(d["gauge_applied"]),
            cumulative_gauge=GaugeMask(d["cumulative_gauge"]),
            attractor_energy=d["attractor_energy"],
            best_energy=d["best_energy"],
            mean_energy=d["mean_energy"],
            best_bitstring=as_bits(d["best_bitstring"]),
            samples_total=d["samples_total"],
            raw_hw_hist=np.array(d["raw_hw_hist"], dtype=np.int64),
            effective_hw_hist=np.array(d["effective_hw_hist"], dtype=np.int64),
            energy_values=np.array(d["energy_values"], dtype=float),
            energy_counts=np.array(d["energy_counts"], dtype=np.int64),
            samples=None if samples is None else np.array([as_bits(s) for s in samples]),
        )


@dataclass
class NdarTrace:
    n: int
    instance: str
    attractor: np.ndarray
    records: list[IterationRecord] = field(default_factory=list)
    best: EnergyRecord | None = None  # best original-frame sample over all iterations
    terminated: bool = False
    reason: str = ""

    @property
    def best_energies(self) -> np.ndarray:
        return np.array([r.best_energy for r in self.records])

    @property
    def mean_energies(self) -> np.ndarray:
        return np.array([r.mean_energy for r in self.records])

    @property
    def attractor_energies(self) -> np.ndarray:
        return np.array([r.attractor_energy for r in self.records])

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.best_energies)

    def next_gauge(self) -> GaugeMask:
        """Cumulative gauge for the iteration after the last recorded one."""
        last = self.records[-1]
        return last.cumulative_gauge.compose(last.best_bitstring ^ self.attractor)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "instance": self.instance,
            "attractor": bits_to_str(self.attractor),
            "terminated": self.terminated,
            "reason": self.reason,
            "best": None
            if self.best is None
            else {"bitstring": bits_to_str(self.best.bitstring), "energy": self.best.energy},
            "iterations": [r.to_json() for r in self.records],
        }

    @classmethod
    def from_json(cls, d: dict) -> "NdarTrace":
        best = d.get("best")
        return cls(
            n=d["n"],
            instance=d["instance"],
            attractor=as_bits(d["attractor"]),
            records=[IterationRecord.from_json(r) for r in d["iterations"]],
            best=None if best is None else EnergyRecord(as_bits(best["bitstring"]), best["energy"]),
            terminated=d["terminated"],
            reason=d.get("reason", ""),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "NdarTrace":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def summary_rows(self, E_gs: float | None = None) -> list[dict]:
        rows = []
        running = math.inf
        for r in self.records:
            running = min(running, r.best_energy)
            row = {
                "iteration": r.iteration,
                "cumulative_gauge": str(r.cumulative_gauge),
                "attractor_energy": r.attractor_energy,
                "best_energy": r.best_energy,
                "mean_energy": r.mean_energy,
                "best_so_far": running,
                "samples_total": r.samples_total,
            }
            if E_gs is not None:
                row["attractor_ar"] = approximation_ratio(r.attractor_energy, E_gs)
                row["best_ar"] = approximation_ratio(running, E_gs)
                row["mean_ar"] = approximation_ratio(r.mean_energy, E_gs)
            rows.append(row)
        return rows

    def write_summary_csv(self, path, E_gs: float | None = None) -> None:
        rows = self.summary_rows(E_gs)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["iteration"])
            w.writeheader()
            for row in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def termination_check(trace: NdarTrace, rules: Sequence[str], max_iters: int | None = None, epsilon: float = 0.0) -> bool:
    """True if any rule fires after the last recorded iteration."""
    if not trace.records:
        raise ValueError("termination needs at least one completed iteration")
    if isinstance(rules, str):
        rules = (rules,)
    j = trace.records[-1].iteration
    for rule in rules:
        if rule == "no_improvement":
            if len(trace.records) >= 2:
                cur, prev = trace.records[-1], trace.records[-2]
                if cur.best_energy >= prev.best_energy - epsilon and cur.mean_energy >= prev.mean_energy - epsilon:
                    return True
        elif rule == "max_iters":
            if max_iters is None:
                raise ConfigError("max_iters rule needs max_iters")
            if j + 1 >= max_iters:
                return True
        else:
            raise ConfigError(f"unknown termination rule {rule!r}")
    return False


def to_original_frame(x, g: GaugeMask) -> np.ndarray:
    """Map a frame bitstring (or batch) back to the original problem frame."""
    X = np.asarray(x, dtype=np.uint8)
    if X.shape[-1] != g.n:
        raise DimensionError(f"bitstring length {X.shape[-1]} does not match gauge length {g.n}")
    return X ^ g.mask


def _select_best(X: np.ndarray, E: np.ndarray) -> int:
    """Index of the minimum energy; ties go to the lexicographically smallest bitstring."""
    ties = np.flatnonzero(E == E.min())
    if ties.size == 1:
        return int(ties[0])
    sub = X[ties]
    order = np.lexsort(sub.T[::-1])
    return int(ties[order[0]])


def _hist(values, n):
    return np.bincount(values, minlength=n + 1).astype(np.int64)


def run_ndar(
    H0: IsingHamiltonian,
    optimizer: Callable[[IsingHamiltonian, int], OptimizerResult],
    cfg: NdarConfig = NdarConfig(),
    resume: NdarTrace | None = None,
    check_frames: bool = True,
) -> NdarTrace:
    n = H0.n
    attractor = cfg.attractor_bits(n)
    if resume is not None:
        if resume.n != n or resume.instance != instance_hash(H0):
            raise ConfigError("resume trace belongs to a different instance")
        trace = resume
        # a larger max_iters may reopen a run that stopped on the old limit
        if termination_check(trace, cfg.termination, cfg.max_iters, cfg.epsilon):
            return trace
        trace.terminated, trace.reason = False, ""
        cum = trace.next_gauge()
        applied = GaugeMask(trace.records[-1].best_bitstring ^ attractor)
        start = trace.records[-1].iteration + 1
        total = trace.records[-1].samples_total
    else:
        trace = NdarTrace(n, instance_hash(H0), attractor)
        cum = GaugeMask.identity(n)
        applied = GaugeMask.identity(n)
        start = 0
        total = 0
    H = gauge_transform(H0, cum)

    for j in range(start, cfg.max_iters):
        # step 1: stochastic optimisation of the current frame
        try:
            res = optimizer(H, j)
        except Exception as exc:
            trace.reason = f"optimizer failed at iteration {j}"
            raise OptimizerError(f"optimizer failed at iteration {j}: {exc!r}", trace) from exc
        X = np.asarray(res.bitstrings, dtype=np.uint8)
        if X.ndim != 2 or X.shape[1] != n:
            raise ConfigError(f"optimizer returned samples of shape {X.shape}, expected (M, {n})")
        if X.shape[0] < cfg.samples_per_iter:
            raise ConfigError(f"optimizer returned {X.shape[0]} samples, need {cfg.samples_per_iter}")
        # step 2: energies in the current frame
        E = energies(H, X)
        X_orig = X ^ cum.mask
        if check_frames:
            idx = np.arange(0, X.shape[0], 100)
            if not np.allclose(energies(H0, X_orig[idx]), E[idx], rtol=0, atol=1e-9):
                raise AssertionError("frame consistency violated")
        # step 3: best sample
        b = _select_best(X, E)
        x_star = X[b].copy()
        total += X.shape[0]
        values, counts = np.unique(E, return_counts=True)
        rec = IterationRecord(
            iteration=j,
            gauge_applied=applied,
            cumulative_gauge=cum,
            attractor_energy=energy(H, attractor),
            best_energy=float(E[b]),
            mean_energy=float(E.mean()),
            best_bitstring=x_star,
            samples_total=total,
            raw_hw_hist=_hist(X.sum(axis=1), n),
            effective_hw_hist=_hist(X_orig.sum(axis=1), n),
            energy_values=values,
            energy_counts=counts.astype(np.int64),
            samples=X.copy() if cfg.keep_samples else None,
            trials=list(res.trials),
        )
        trace.records.append(rec)
        if trace.best is None or rec.best_energy < trace.best.energy:
            trace.best = EnergyRecord(X_orig[b].copy(), rec.best_energy)
        if termination_check(trace, cfg.termination, cfg.max_iters, cfg.epsilon):
            trace.terminated = True
            trace.reason = "no_improvement" if j + 1 < cfg.max_iters or _stalled(trace, cfg.epsilon) else "max_iters"
            break
        # step 4: re-gauge so the attractor carries E*
        applied = GaugeMask(x_star ^ attractor)
        cum = cum.compose(applied)
        H = gauge_transform(H, applied)
    return trace


def _stalled(trace: NdarTrace, eps: float) -> bool:
    return termination_check(trace, ("no_improvement",), epsilon=eps)


# ---------------------------------------------------------------------------
# QAOA as the stochastic optimizer


def _seed(*parts) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) for p in parts])


@dataclass
class QaoaOptimizer:
    """Noisy QAOA sampled on the simulator, tuned by a black-box search.

    Samples from every trial are pooled, so one call returns ``trials * shots``
    bitstrings.  Seeds derive from ``(seed, iteration, trial)`` only, so runs on
    different gauges see the same optimizer randomness.
    """

    noise: NoiseModel = field(default_factory=NoiseModel)
    backend: str = "trajectories"
    p: int = 1
    trials: int = 20
    shots: int = 100
    strategy: str = "tpe"
    orderings_per_iter: int = 10
    seed: int = 0
    jobs: int = 1
    gamma_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    beta_range: tuple[float, float] = (-math.pi / 4, math.pi / 4)
    tpe: TpeSettings = field(default_factory=TpeSettings)
    keep_batches: bool = False
    trial_log: object = None

    def orderings(self, n: int, iteration: int):
        k = min(self.orderings_per_iter, math.factorial(n)) if n <= 12 else self.orderings_per_iter
        return sample_orderings(n, k, _seed(self.seed, iteration, 1))

    def __call__(self, H: IsingHamiltonian, iteration: int = 0) -> OptimizerResult:
        orderings = self.orderings(H.n, iteration)
        space = SearchSpace(self.p, self.gamma_range, self.beta_range, tuple(o.ordering_id for o in orderings))
        counter = [0]
        batches = []

        def objective(params: QaoaParams, oid: int):
            gl = build_qaoa_circuit(H, params, orderings[oid])
            shot_seed = _seed(self.seed, iteration, 2, counter[0])
            counter[0] += 1
            batch = sample(gl, self.noise, self.shots, shot_seed, self.backend, self.jobs)
            E = batch.energies(H)
            batches.append(batch.bitstrings)
            return float(E.mean()), batch, E

        trials = run_search(
            objective,
            space,
            self.trials,
            self.strategy,
            seed=_seed(self.seed, iteration, 3),
            log=self.trial_log,
            keep_batches=self.keep_batches,
            tpe=self.tpe,
        )
        return OptimizerResult(np.vstack(batches), trials)


def identity_circuit(n: int, networks: int = 2) -> GateList:
    """Zero-angle SWAP networks (an even number of them is the identity)."""
    H = IsingHamiltonian(n)
    gl = None
    start = tuple(range(n))
    for _ in range(networks):
        layer = build_phase_network(H, 0.0, start=start)
        gl = layer if gl is None else gl + layer
        start = layer.permutation
    return gl


def discover_attractor(n: int, noise: NoiseModel, shots: int = 1000, seed=0, backend: str = "trajectories", networks: int = 2) -> np.ndarray:
    """Modal bitstring of an identity circuit run on the noisy backend."""
    if networks % 2:
        raise ValueError("use an even number of networks so the circuit is the identity")
    batch = sample(identity_circuit(n, networks), noise, shots, seed, backend)
    keys, counts = np.unique(batch.bitstrings, axis=0, return_counts=True)
    return keys[int(np.argmax(counts))]
