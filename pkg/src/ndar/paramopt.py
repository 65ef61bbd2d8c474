"""Black-box parameter setting over QAOA angles and the gate ordering.

The objective is called as ``objective(params, ordering_id)`` and may return a
plain float, ``(mean, batch)`` or ``(mean, batch, energies)``; energies let
the trial record its best sample.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .circuit import QaoaParams
from .errors import EmptyInputError, NdarError
from .solvers import EnergyRecord

STRATEGIES = ("random", "grid", "tpe")
START_ANGLE = 0.1


@dataclass(frozen=True)
class SearchSpace:
    p: int = 1
    gamma_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    beta_range: tuple[float, float] = (-math.pi / 4, math.pi / 4)
    orderings: tuple[int, ...] = (0,)

    def __post_init__(self):
        for name in ("gamma_range", "beta_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be a nonempty interval, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        object.__setattr__(self, "orderings", tuple(int(o) for o in self.orderings))
        if not self.orderings:
            raise ValueError("need at least one gate ordering")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    @property
    def bounds(self) -> np.ndarray:
        """(2p, 2) array of per-dimension bounds, gammas first."""
        return np.array([self.gamma_range] * self.p + [self.beta_range] * self.p)

    def to_params(self, vec) -> QaoaParams:
        vec = np.asarray(vec, dtype=float)
        return QaoaParams(tuple(vec[: self.p]), tuple(vec[self.p:]))

    def clamp(self, vec) -> np.ndarray:
        b = self.bounds
        return np.clip(np.asarray(vec, dtype=float), b[:, 0], b[:, 1])

    def uniform(self, rng) -> tuple[np.ndarray, int]:
        b = self.bounds
        vec = b[:, 0] + (b[:, 1] - b[:, 0]) * rng.random(len(b))
        return vec, self.orderings[int(rng.integers(len(self.orderings)))]

    def start(self) -> tuple[np.ndarray, int]:
        return self.clamp(np.full(2 * self.p, START_ANGLE)), self.orderings[0]


@dataclass
class Trial:
    trial_index: int
    params: QaoaParams
    ordering_id: int
    objective: float
    batch_ref: str = ""
    best_in_trial: EnergyRecord | None = None
    batch: object = field(default=None, repr=False)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.params.gammas + self.params.betas)

    @property
    def min_energy(self) -> float:
        if self.best_in_trial is None:
            return self.objective
        return self.best_in_trial.energy


class TrialError(NdarError):
    def __init__(self, trial_index: int, cause: Exception):
        super().__init__(f"objective failed at trial {trial_index}: {cause!r}")
        self.trial_index = trial_index


# ---------------------------------------------------------------------------
# TPE


@dataclass(frozen=True)
class TpeSettings:
    gamma_split: float = 0.1
    max_good: int = 25
    n_startup: int = 10
    n_candidates: int = 24
    prior_weight: float = 1.0


def _silverman(values, width):
    m = len(values)
    sd = float(np.std(values, ddof=1)) if m > 1 else 0.0
    bw = 1.06 * sd * m ** (-0.2)
    # floor at width/(m+1) so a tight early good set cannot freeze the search
    return max(bw, width / (m + 1)) if width > 0 else 0.0


class _Parzen1D:
    """Truncated-Gaussian mixture on [lo, hi] plus a uniform prior component."""

    def __init__(self, obs, lo, hi, prior_weight):
        self.lo, self.hi = lo, hi
        self.mu = np.asarray(obs, dtype=float)
        self.width = hi - lo
        self.bw = _silverman(self.mu, self.width)
        m = self.mu.size
        self.w_prior = prior_weight / (m + prior_weight)
        self.w_kernel = (1.0 - self.w_prior) / m if m else 0.0
        if self.bw > 0:
            self.a = (lo - self.mu) / self.bw
            self.b = (hi - self.mu) / self.bw
            self.mass = ndtr(self.b) - ndtr(self.a)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.width == 0:
            return np.ones_like(x)
        out = np.full(x.shape, self.w_prior / self.width)
        z = (x[:, None] - self.mu[None, :]) / self.bw
        dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.bw * self.mass[None, :])
        return out + self.w_kernel * dens.sum(axis=1)

    def sample(self, rng, k):
        if self.width == 0:
            return np.full(k, self.lo)
        out = np.empty(k)
        comp = rng.random(k)
        idx = rng.integers(0, self.mu.size, k)
        u = rng.random(k)
        for c in range(k):
            if comp[c] < self.w_prior:
                out[c] = self.lo + self.width * u[c]
            else:
                i = idx[c]
                pa, pb = ndtr(self.a[i]), ndtr(self.b[i])
                out[c] = self.mu[i] + self.bw * ndtri(pa + u[c] * (pb - pa))
        return np.clip(out, self.lo, self.hi)


def tpe_suggest(history: Sequence[Trial], space: SearchSpace, seed=None, settings: TpeSettings = TpeSettings()):
    """Propose the next ``(QaoaParams, ordering_id)`` from the trial history."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    values = np.array([t.objective for t in history], dtype=float)
    if len(history) < settings.n_startup or np.ptp(values) == 0.0:
        # startup, or no ranking information at all
        vec, ordering = space.uniform(rng)
        return space.to_params(vec), ordering

    order = np.argsort(values, kind="stable")
    n_good = max(1, min(math.ceil(settings.gamma_split * len(history)), settings.max_good))
    good = [history[i] for i in order[:n_good]]
    bad = [history[i] for i in order[n_good:]]
    G = np.array([t.vector for t in good])
    B = np.array([t.vector for t in bad])
    bounds = space.bounds
    k = settings.n_candidates

    cands = np.empty((k, len(bounds)))
    score = np.zeros(k)
    for d, (lo, hi) in enumerate(bounds):
        lg = _Parzen1D(G[:, d], lo, hi, settings.prior_weight)
        lb = _Parzen1D(B[:, d], lo, hi, settings.prior_weight)
        cands[:, d] = lg.sample(rng, k)
        score += np.log(lg.pdf(cands[:, d])) - np.log(lb.pdf(cands[:, d]))

    cats = list(space.orderings)
    C = len(cats)
    cg = np.array([sum(t.ordering_id == c for t in good) for c in cats], dtype=float)
    cb = np.array([sum(t.ordering_id == c for t in bad) for c in cats], dtype=float)
    pg = (cg + 1.0) / (cg.sum() + C)
    pb = (cb + 1.0) / (cb.sum() + C)
    cat_idx = rng.choice(C, size=k, p=pg)
    score += np.log(pg[cat_idx]) - np.log(pb[cat_idx])

    best = int(np.argmax(score))
    return space.to_params(cands[best]), cats[cat_idx[best]]


# ---------------------------------------------------------------------------
# search loop


def _grid_points(space: SearchSpace, size: int):
    axes = [np.linspace(lo, hi, size) if hi > lo else np.array([lo]) for lo, hi in space.bounds]
    for combo in itertools.product(*axes, space.orderings):
        yield np.array(combo[:-1]), combo[-1]


def _unpack(result):
    if isinstance(result, tuple):
        mean = float(result[0])
        batch = result[1] if len(result) > 1 else None
        E = np.asarray(result[2]) if len(result) > 2 else None
        return mean, batch, E
    return float(result), None, None


class TrialLog:
    """Streams trials to CSV as they complete."""

    def __init__(self, fh, p: int):
        self.fh = fh
        self.writer = csv.writer(fh, lineterminator="\n")
        cols = ["trial"] + [f"gamma{l + 1}" for l in range(p)] + [f"beta{l + 1}" for l in range(p)]
        self.writer.writerow(cols + ["ordering", "mean", "min"])
        fh.flush()

    def write(self, t: Trial):
        row = [t.trial_index] + [repr(v) for v in t.params.gammas + t.params.betas]
        self.writer.writerow(row + [t.ordering_id, repr(t.objective), repr(t.min_energy)])
        self.fh.flush()


def run_search(
    objective: Callable,
    space: SearchSpace,
    trials: int,
    strategy: str = "tpe",
    seed=None,
    log: io.TextIOBase | None = None,
    keep_batches: bool = True,
    tpe: TpeSettings = TpeSettings(),
    grid_size: int = 5,
) -> list[Trial]:
    """Evaluate ``objective`` exactly ``trials`` times; trial 0 is all angles 0.1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    rng = np.random.default_rng(seed)
    writer = TrialLog(log, space.p) if log is not None else None
    grid = itertools.cycle(list(_grid_points(space, grid_size))) if strategy == "grid" else None
    history: list[Trial] = []
    for idx in range(trials):
        if idx == 0:
            vec, ordering = space.start()
            params = space.to_params(vec)
        elif strategy == "random":
            vec, ordering = space.uniform(rng)
            params = space.to_params(vec)
        elif strategy == "grid":
            vec, ordering = next(grid)
            params = space.to_params(vec)
        else:
            params, ordering = tpe_suggest(history, space, rng, tpe)
        try:
            mean, batch, E = _unpack(objective(params, ordering))
        except Exception as exc:
            raise TrialError(idx, exc) from exc
        best = None
        if E is not None and batch is not None and len(E):
            k = int(np.argmin(E))
            best = EnergyRecord(np.asarray(batch.bitstrings[k]), float(E[k]))
        trial = Trial(idx, params, ordering, mean, f"trial-{idx}", best, batch if keep_batches else None)
        history.append(trial)
        if writer is not None:
            writer.write(trial)
    return history


def best_trial(trials: Sequence[Trial], criterion: str = "mean") -> Trial:
    if not trials:
        raise EmptyInputError("no trials")
    if criterion == "mean":
        key = lambda t: (t.objective, t.trial_index)  # noqa: E731
    elif criterion == "min":
        key = lambda t: (t.min_energy, t.trial_index)  # noqa: E731
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return min(trials, key=key)


def best_so_far(trials: Sequence[Trial]) -> np.ndarray:
    return np.minimum.accumulate([t.objective for t in trials])
