"""Configuration-driven studies: gauge correlation, convergence, distributions.

Every study is a pure function of its ``ExperimentConfig``: seeds are derived
from the root seed with ``SeedSequence`` keyed by (purpose, instance, gauge),
rows are sorted before writing and floats are written with ``repr``, so a
rerun from the manifest reproduces the CSV bodies byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash, load_config
from .errors import ConfigError, UndefinedStatisticError
from .ising import (
    GaugeMask,
    IsingHamiltonian,
    approximation_ratio,
    as_bits,
    bits_to_str,
    effective_hamming_weight,
    energies,
    energy,
    gauge_transform,
    generate_sk,
    instance_hash,
    load_instance,
)
from .paramopt import STRATEGIES, best_trial
from .remap import NdarConfig, NdarTrace, QaoaOptimizer, run_ndar
from .simulator import BACKENDS, NoiseModel, estimate_cost
from .solvers import BRUTE_FORCE_CAP, brute_force, random_bitstrings
from .stats import correlate

KINDS = ("correlation", "convergence", "distributions")

# purpose tags for derived seeds
_SEED_INSTANCE, _SEED_GAUGE, _SEED_OPT, _SEED_RANDOM, _SEED_QAOA = range(5)


@dataclass
class ExperimentConfig:
    kind: str = "convergence"
    n: int = 16
    instances: int = 10
    instance_seed: int = 0
    instance_files: tuple[str, ...] = ()
    ground_energies: tuple[float, ...] = ()
    backend: str = "trajectories"
    gamma_1q: float = 0.02
    gamma_2q: float = 0.10
    attractor: str | None = None
    p: int = 1
    strategy: str = "tpe"
    trials: int = 20
    shots: int = 100
    orderings: int = 10
    max_iters: int = 5
    termination: tuple[str, ...] = ("no_improvement", "max_iters")
    epsilon: float = 0.0
    gauges: int = 20
    quantiles: tuple[float, ...] = (0.001, 0.1, 1.0)
    seed: int = 0
    jobs: int = 1
    svg: bool = False
    out_dir: str = "results"

    def __post_init__(self):
        for name in ("instance_files", "ground_energies", "termination", "quantiles"):
            v = getattr(self, name)
            if v is None:
                v = ()
            elif not isinstance(v, (tuple, list)):
                v = (v,)
            setattr(self, name, tuple(v))
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        for name in ("n", "instances", "trials", "shots", "orderings", "max_iters", "gauges", "p", "jobs"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if any(not 0 < q <= 1 for q in self.quantiles):
            raise ConfigError("quantiles must lie in (0, 1]")
        for f in self.instance_files:
            if not Path(f).is_file():
                raise ConfigError(f"instance file {f!r} not found")
        if self.ground_energies and len(self.ground_energies) != self.n_instances:
            raise ConfigError("ground_energies must list one value per instance")
        NoiseModel(self.gamma_1q, self.gamma_2q)

    @property
    def n_instances(self) -> int:
        return len(self.instance_files) if self.instance_files else self.instances

    @property
    def samples_per_iter(self) -> int:
        return self.trials * self.shots

    def noise(self) -> NoiseModel:
        return NoiseModel(self.gamma_1q, self.gamma_2q, self.attractor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("jobs")  # parallelism never changes results
        return d

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        merged = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = sorted(set(merged) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        return cls.from_dict(load_config(path), **overrides)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def derive_seed(root: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root), *(int(k) for k in key)])


def _int_seed(root: int, *key: int) -> int:
    return int(derive_seed(root, *key).generate_state(1)[0])


@dataclass
class Instance:
    index: int
    H: IsingHamiltonian
    E_gs: float
    source: str

    @property
    def hash(self) -> str:
        return instance_hash(self.H)


def ground_energy_path(instance_path) -> Path:
    return Path(str(instance_path) + ".gs.json")


def _ground_energy(H: IsingHamiltonian, given, path=None) -> float:
    if given is not None:
        return float(given)
    if path is not None and ground_energy_path(path).is_file():
        return float(json.loads(ground_energy_path(path).read_text())["energy"])
    if H.n > BRUTE_FORCE_CAP:
        raise ConfigError(
            f"no ground energy for a {H.n}-qubit instance; run `ndar solve-exact` first "
            "or list ground_energies in the config"
        )
    return brute_force(H).energy


def load_instances(cfg: ExperimentConfig) -> list[Instance]:
    given = list(cfg.ground_energies) or [None] * cfg.n_instances
    out = []
    if cfg.instance_files:
        for k, path in enumerate(cfg.instance_files):
            H = load_instance(path)
            out.append(Instance(k, H, _ground_energy(H, given[k], path), str(path)))
    else:
        for k in range(cfg.instances):
            seed = cfg.instance_seed + k
            H = generate_sk(cfg.n, seed)
            out.append(Instance(k, H, _ground_energy(H, given[k]), f"sk:n={cfg.n}:seed={seed}"))
    for inst in out:
        if inst.E_gs >= 0:
            raise ConfigError(f"instance {inst.index} has a non-negative ground energy; AR is undefined")
    return out


def _optimizer(cfg: ExperimentConfig, seed: int, trials=None, orderings=None, keep_batches=False) -> QaoaOptimizer:
    return QaoaOptimizer(
        noise=cfg.noise(),
        backend=cfg.backend,
        p=cfg.p,
        trials=trials or cfg.trials,
        shots=cfg.shots,
        strategy=cfg.strategy,
        orderings_per_iter=orderings or cfg.orderings,
        seed=seed,
        keep_batches=keep_batches,
    )


def _map(fn, jobs, items):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# ---------------------------------------------------------------------------
# correlation


def correlation_study(cfg: ExperimentConfig, instances: list[Instance] | None = None) -> list[dict]:
    """Attractor AR vs achieved AR quantiles over random gauges per instance.

    The optimizer seed depends on the instance only, so all gauges of one
    instance share it.
    """
    instances = instances if instances is not None else load_instances(cfg)
    a = cfg.noise().attractor_bits(cfg.n if not instances else instances[0].H.n)

    jobs = []
    for inst in instances:
        rng = np.random.default_rng(derive_seed(cfg.seed, _SEED_GAUGE, inst.index))
        for g in range(cfg.gauges):
            jobs.append((inst, g, rng.integers(0, 2, inst.H.n).astype(np.uint8)))

    def run(job):
        inst, g, y = job
        Hy = gauge_transform(inst.H, y)
        opt = _optimizer(cfg, _int_seed(cfg.seed, _SEED_OPT, inst.index), keep_batches=True)
        trials = opt(Hy, 0).trials
        best = best_trial(trials)
        est = estimate_cost(best.batch, Hy)
        row = {
            "instance": inst.index,
            "gauge_index": g,
            "gauge": bits_to_str(y),
            "attractor_ar": approximation_ratio(energy(Hy, a), inst.E_gs),
        }
        for q in cfg.quantiles:
            row[f"ar_q{q:g}"] = approximation_ratio(est.quantile(q), inst.E_gs)
        E = est.sorted_energies
        row["sem_mean_ar"] = float(np.std(E, ddof=1) / math.sqrt(E.size) / abs(inst.E_gs)) if E.size > 1 else 0.0
        row["best_trial"] = best.trial_index
        row["shots"] = best.batch.shots
        return row

    rows = _map(run, cfg.jobs, jobs)
    rows.sort(key=lambda r: (r["instance"], r["gauge_index"]))
    return rows


def correlation_summary(rows: list[dict], quantiles) -> list[dict]:
    """Pearson and Spearman of attractor AR against each quantile column, pooled."""
    x = np.array([r["attractor_ar"] for r in rows])
    out = []
    for q in quantiles:
        y = np.array([r[f"ar_q{q:g}"] for r in rows])
        try:
            c = correlate(x, y)
            vals = c.to_json()
        except UndefinedStatisticError:
            vals = {"pearson_r": math.nan, "pearson_p": math.nan, "spearman_rho": math.nan, "spearman_p": math.nan, "n": len(rows)}
        out.append({"quantile": q, **vals})
    return out


def gauge_spread(rows: list[dict]) -> list[dict]:
    """Per-instance std of the mean AR across gauges next to its sampling error.

    ``sem`` is the root-mean-square standard error of a single gauge's mean
    AR estimate.  Without a gauge effect, ``std`` should be of order ``sem``.
    """
    out = []
    for k in sorted({r["instance"] for r in rows}):
        sel = [r for r in rows if r["instance"] == k]
        vals = np.array([r["ar_q1"] for r in sel])
        sem = float(np.sqrt(np.mean([r["sem_mean_ar"] ** 2 for r in sel])))
        std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        out.append({"instance": k, "std": std, "sem": sem, "n_gauges": int(vals.size)})
    return out


# ---------------------------------------------------------------------------
# convergence


def convergence_study(cfg: ExperimentConfig, instances: list[Instance] | None = None, traces: dict | None = None) -> list[dict]:
    """NDAR vs single-frame QAOA vs uniform sampling at matched sample budgets.

    NDAR runs for exactly ``max_iters`` iterations (no early stop) so every
    budget point exists for all three arms.
    """
    instances = instances if instances is not None else load_instances(cfg)
    M = cfg.samples_per_iter
    imax = cfg.max_iters
    ndar_cfg = NdarConfig(M, cfg.trials, imax, ("max_iters",), _attractor(cfg), cfg.orderings, cfg.epsilon)

    def run(inst: Instance):
        seed = _int_seed(cfg.seed, _SEED_OPT, inst.index)
        trace = run_ndar(inst.H, _optimizer(cfg, seed), ndar_cfg)
        # the single-frame baseline spends the whole budget in one search
        qopt = _optimizer(cfg, _int_seed(cfg.seed, _SEED_QAOA, inst.index), trials=imax * cfg.trials, orderings=imax * cfg.orderings)
        qtrials = qopt(inst.H, 0).trials
        q_min = np.minimum.accumulate([t.min_energy for t in qtrials])
        X = random_bitstrings(inst.H.n, M * imax, derive_seed(cfg.seed, _SEED_RANDOM, inst.index))
        r_min = np.minimum.accumulate(energies(inst.H, X))
        nd_min = trace.best_so_far()
        rows = []
        for i in range(imax):
            budget = M * (i + 1)
            k = (i + 1) * cfg.trials
            if not (trace.records[i].samples_total == budget == k * cfg.shots == r_min[: budget].size):
                raise AssertionError("budget parity violated")
            rows.append(
                {
                    "instance": inst.index,
                    "iteration": i,
                    "samples": budget,
                    "ndar_best_ar": approximation_ratio(nd_min[i], inst.E_gs),
                    "qaoa_best_ar": approximation_ratio(q_min[k - 1], inst.E_gs),
                    "random_best_ar": approximation_ratio(r_min[budget - 1], inst.E_gs),
                    "ndar_attractor_ar": approximation_ratio(trace.records[i].attractor_energy, inst.E_gs),
                }
            )
        return rows, trace

    results = _map(run, cfg.jobs, instances)
    if traces is not None:
        for inst, (_, tr) in zip(instances, results):
            traces[inst.index] = tr
    rows = [r for rows, _ in results for r in rows]
    rows.sort(key=lambda r: (r["instance"], r["iteration"]))
    return rows


def _attractor(cfg: ExperimentConfig):
    return None if cfg.attractor is None else tuple(int(b) for b in as_bits(cfg.attractor))


# ---------------------------------------------------------------------------
# distributions


def run_ndar_instances(cfg: ExperimentConfig, instances: list[Instance], keep_samples: bool = True) -> dict[int, NdarTrace]:
    ndar_cfg = NdarConfig(
        cfg.samples_per_iter, cfg.trials, cfg.max_iters, cfg.termination, _attractor(cfg), cfg.orderings, cfg.epsilon, keep_samples
    )

    def run(inst):
        return run_ndar(inst.H, _optimizer(cfg, _int_seed(cfg.seed, _SEED_OPT, inst.index)), ndar_cfg)

    return dict(zip([i.index for i in instances], _map(run, cfg.jobs, instances)))


def distribution_study(
    cfg: ExperimentConfig, instances: list[Instance] | None = None, traces: dict[int, NdarTrace] | None = None
) -> list[dict]:
    """Normalized per-iteration histograms of AR, raw HW and effective HW."""
    instances = instances if instances is not None else load_instances(cfg)
    if traces is None:
        traces = run_ndar_instances(cfg, instances)
    rows = []
    for inst in instances:
        tr = traces[inst.index]
        for rec in tr.records:
            if rec.samples is None:
                raise ConfigError("trace has no stored samples; rerun NDAR with keep_samples = true")
            X = rec.samples
            m = X.shape[0]
            n = X.shape[1]
            raw = np.bincount(X.sum(axis=1), minlength=n + 1)
            eff = np.bincount(effective_hamming_weight(X, rec.cumulative_gauge), minlength=n + 1)
            for w in range(n + 1):
                rows.append(_hrow(inst.index, rec.iteration, "raw_hw", w, raw[w] / m))
                rows.append(_hrow(inst.index, rec.iteration, "effective_hw", w, eff[w] / m))
            for e, c in zip(rec.energy_values, rec.energy_counts):
                rows.append(_hrow(inst.index, rec.iteration, "ar", approximation_ratio(float(e), inst.E_gs), c / m))
    rows.sort(key=lambda r: (r["instance"], r["iteration"], r["kind"], r["value"]))
    return rows


def _hrow(instance, iteration, kind, value, frac):
    return {"instance": instance, "iteration": iteration, "kind": kind, "value": value, "fraction": float(frac)}


def histogram_mode(rows: list[dict], instance: int, iteration: int, kind: str):
    sel = [r for r in rows if r["instance"] == instance and r["iteration"] == iteration and r["kind"] == kind]
    return max(sel, key=lambda r: (r["fraction"], -r["value"]))["value"]


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path, rows: list[dict]) -> None:
    cols = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


@dataclass
class RunManifest:
    config: dict
    config_hash: str
    instances: list[dict]
    seeds: dict
    version: str = __version__
    outputs: dict = field(default_factory=dict)
    started: str = ""  # informational, never part of a CSV

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1, default=str) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

    def experiment_config(self, **overrides) -> ExperimentConfig:
        d = dict(self.config)
        for k, v in d.items():
            if isinstance(v, list):
                d[k] = tuple(v)
        return ExperimentConfig.from_dict(d, **overrides)


def run_study(cfg: ExperimentConfig, out_dir=None) -> RunManifest:
    """Run the configured study and write CSVs, trace JSON and manifest."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    instances = load_instances(cfg)
    manifest = RunManifest(
        config=cfg.to_dict(),
        config_hash=cfg.hash(),
        instances=[{"index": i.index, "source": i.source, "hash": i.hash, "e_gs": i.E_gs} for i in instances],
        seeds={
            "root": cfg.seed,
            "instance_seeds": [] if cfg.instance_files else [cfg.instance_seed + k for k in range(cfg.instances)],
            "optimizer": [_int_seed(cfg.seed, _SEED_OPT, i.index) for i in instances],
        },
        started=time.strftime("%Y-%m-%dT%H:%M:%S"),
    )
    outputs = {}
    if cfg.kind == "correlation":
        rows = correlation_study(cfg, instances)
        write_csv(out / "correlation.csv", rows)
        write_csv(out / "summary.csv", correlation_summary(rows, cfg.quantiles))
        outputs = {"table": "correlation.csv", "summary": "summary.csv"}
        if cfg.svg:
            from .plots import scatter_svg

            (out / "correlation.svg").write_text(
                scatter_svg([r["attractor_ar"] for r in rows], [r["ar_q1"] for r in rows] if 1.0 in cfg.quantiles else [r[f"ar_q{cfg.quantiles[-1]:g}"] for r in rows], "attractor AR", "mean AR")
            )
            outputs["svg"] = "correlation.svg"
    elif cfg.kind == "convergence":
        traces: dict = {}
        rows = convergence_study(cfg, instances, traces)
        write_csv(out / "convergence.csv", rows)
        write_csv(out / "summary.csv", convergence_summary(rows))
        for k, tr in traces.items():
            tr.save(out / f"trace_{k}.json")
        outputs = {"table": "convergence.csv", "summary": "summary.csv", "traces": [f"trace_{k}.json" for k in sorted(traces)]}
        if cfg.svg:
            from .plots import lines_svg

            summ = convergence_summary(rows)
            (out / "convergence.svg").write_text(
                lines_svg(
                    [r["iteration"] for r in summ],
                    {a: [r[f"{a}_mean_ar"] for r in summ] for a in ("ndar", "qaoa", "random")},
                    "iteration",
                    "mean best AR",
                )
            )
            outputs["svg"] = "convergence.svg"
    else:
        traces = run_ndar_instances(cfg, instances, keep_samples=True)
        rows = distribution_study(cfg, instances, traces)
        write_csv(out / "distributions.csv", rows)
        summary = []
        for inst in instances:
            for rec in traces[inst.index].records:
                summary.append(
                    {
                        "instance": inst.index,
                        "iteration": rec.iteration,
                        "raw_hw_mode": histogram_mode(rows, inst.index, rec.iteration, "raw_hw"),
                        "effective_hw_mode": histogram_mode(rows, inst.index, rec.iteration, "effective_hw"),
                        "best_ar": approximation_ratio(rec.best_energy, inst.E_gs),
                    }
                )
        write_csv(out / "summary.csv", summary)
        for k, tr in traces.items():
            tr.save(out / f"trace_{k}.json")
        outputs = {"table": "distributions.csv", "summary": "summary.csv", "traces": [f"trace_{k}.json" for k in sorted(traces)]}
        if cfg.svg:
            from .plots import histogram_svg

            first = instances[0].index
            last = traces[first].records[-1].iteration
            sel = lambda it, kind: [r["fraction"] for r in rows if r["instance"] == first and r["iteration"] == it and r["kind"] == kind]  # noqa: E731
            (out / "distributions.svg").write_text(
                histogram_svg({"raw HW, iteration 0": sel(0, "raw_hw"), f"effective HW, iteration {last}": sel(last, "effective_hw")}, "Hamming weight")
            )
            outputs["svg"] = "distributions.svg"
    manifest.outputs = outputs
    manifest.save(out / "manifest.json")
    return manifest


def convergence_summary(rows: list[dict]) -> list[dict]:
    out = []
    for i in sorted({r["iteration"] for r in rows}):
        sel = [r for r in rows if r["iteration"] == i]
        out.append(
            {
                "iteration": i,
                "samples": sel[0]["samples"],
                "ndar_mean_ar": float(np.mean([r["ndar_best_ar"] for r in sel])),
                "qaoa_mean_ar": float(np.mean([r["qaoa_best_ar"] for r in sel])),
                "random_mean_ar": float(np.mean([r["random_best_ar"] for r in sel])),
                "ndar_optimal": sum(r["ndar_best_ar"] == 1.0 for r in sel),
                "instances": len(sel),
            }
        )
    return out


def rerun_manifest(path, out_dir) -> RunManifest:
    return run_study(RunManifest.load(path).experiment_config(), out_dir)
