"""Command-line entry point: ``ndar <subcommand> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigError, NdarError, ParseError
from .ising import bits_to_str, energy, generate_sk, load_instance, save_instance

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3


def _global(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="root seed (default 0)")
    p.add_argument("--out-dir", help="where outputs are written")
    p.add_argument("--backend", choices=("noiseless", "trajectories", "density"))
    p.add_argument("--jobs", type=int, help="worker threads; results do not depend on it")
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the
    # subcommand copy suppresses defaults so it cannot clobber earlier values
    top = _global(argparse.ArgumentParser(add_help=False))
    after = _global(argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS))
    parser = argparse.ArgumentParser(prog="ndar", description="Noise-directed adaptive remapping for QAOA on a simulated noisy device.", parents=[top])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[after], argument_default=argparse.SUPPRESS, **kw)

    g = add("gen", help="generate SK instances")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--count", type=int, default=1)

    s = add("solve-exact", help="brute-force ground energy")
    s.add_argument("instance")
    s.add_argument("--cap", type=int, default=24)

    a = add("anneal", help="simulated annealing reference energy")
    a.add_argument("instance")
    a.add_argument("--sweeps", type=int, default=1000)
    a.add_argument("--replicas", type=int, default=32)
    a.add_argument("--beta-start", type=float, default=0.1)
    a.add_argument("--beta-end", type=float, default=5.0)

    def qaoa_opts(p):
        p.add_argument("instance")
        p.add_argument("--p", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--strategy", choices=("random", "grid", "tpe"))
        p.add_argument("--orderings", type=int)
        p.add_argument("--gamma-1q", type=float)
        p.add_argument("--gamma-2q", type=float)
        p.add_argument("--attractor")

    q = add("qaoa", help="single-frame noisy QAOA with parameter search")
    qaoa_opts(q)
    q.add_argument("--dump-circuit", help="write the best trial's gate list to this file")

    n = add("ndar", help="noise-directed adaptive remapping")
    qaoa_opts(n)
    n.add_argument("--max-iters", type=int)
    n.add_argument("--termination", help="comma-separated rules")
    n.add_argument("--keep-samples", action="store_true")
    n.add_argument("--resume", help="trace.json to continue from")

    st = add("study", help="run a configured study")
    st.add_argument("kind", choices=("correlation", "convergence", "distributions"))
    st.add_argument("--manifest", help="rerun from a previous manifest.json")
    st.add_argument("--svg", action="store_true")

    x = add("stats", help="Pearson and Spearman of two CSV columns")
    x.add_argument("csv")
    x.add_argument("--x", required=True)
    x.add_argument("--y", required=True)
    return parser


def _opt(ns, name, default=None):
    v = getattr(ns, name, None)
    return default if v is None else v


def _file_config(ns) -> dict:
    if ns.config is None:
        return {}
    from .config import load_config

    return load_config(ns.config)


def _experiment(ns, **extra):
    from .harness import ExperimentConfig

    d = _file_config(ns)
    for key, attr in [
        ("seed", "seed"),
        ("out_dir", "out_dir"),
        ("backend", "backend"),
        ("jobs", "jobs"),
        ("p", "p"),
        ("trials", "trials"),
        ("shots", "shots"),
        ("strategy", "strategy"),
        ("orderings", "orderings"),
        ("gamma_1q", "gamma_1q"),
        ("gamma_2q", "gamma_2q"),
        ("attractor", "attractor"),
        ("max_iters", "max_iters"),
        ("svg", "svg"),
    ]:
        v = getattr(ns, attr, None)
        if v is not None and v is not False:
            d[key] = v
    if getattr(ns, "termination", None):
        d["termination"] = tuple(t.strip() for t in ns.termination.split(",") if t.strip())
    d.update(extra)
    return ExperimentConfig.from_dict(d)


def _out(ns, cfg=None) -> Path:
    out = Path(ns.out_dir or (cfg.out_dir if cfg is not None else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print(obj):
    print(json.dumps(obj, indent=1, default=str))


def cmd_gen(ns):
    out = _out(ns)
    seed = _opt(ns, "seed", 0)
    paths = []
    for k in range(ns.count):
        H = generate_sk(ns.n, seed + k)
        path = out / f"sk_n{ns.n}_s{seed + k}.txt"
        save_instance(H, path)
        paths.append(str(path))
    _print({"instances": paths})


def cmd_solve_exact(ns):
    from .harness import ground_energy_path
    from .solvers import brute_force

    H = load_instance(ns.instance)
    res = brute_force(H, cap=ns.cap)
    ground_energy_path(ns.instance).write_text(json.dumps(res.to_json(), indent=1) + "\n")
    _print(res.to_json())


def cmd_anneal(ns):
    from .solvers import AnnealSchedule, simulated_annealing

    H = load_instance(ns.instance)
    sched = AnnealSchedule(ns.sweeps, ns.beta_start, ns.beta_end, ns.replicas, _opt(ns, "seed", 0))
    recs = simulated_annealing(H, sched, jobs=_opt(ns, "jobs", 1))
    best = min(recs, key=lambda r: r.energy)
    _print({"energy": best.energy, "bitstring": bits_to_str(best.bitstring), "replicas": len(recs)})


def cmd_qaoa(ns):
    from .circuit import build_qaoa_circuit, dump_circuit
    from .harness import _optimizer
    from .paramopt import best_trial

    H = load_instance(ns.instance)
    cfg = _experiment(ns, n=H.n)
    out = _out(ns, cfg)
    opt = _optimizer(cfg, cfg.seed)
    with open(out / "trials.csv", "w", newline="") as fh:
        opt.trial_log = fh
        trials = opt(H, 0).trials
    best = best_trial(trials)
    if getattr(ns, "dump_circuit", None):
        ordering = opt.orderings(H.n, 0)[best.ordering_id]
        Path(ns.dump_circuit).write_text(dump_circuit(build_qaoa_circuit(H, best.params, ordering)))
    _print(
        {
            "best_trial": best.trial_index,
            "mean_energy": best.objective,
            "gammas": best.params.gammas,
            "betas": best.params.betas,
            "ordering": best.ordering_id,
            "min_energy": min(t.min_energy for t in trials),
        }
    )


def cmd_ndar(ns):
    from .harness import _attractor, _optimizer
    from .remap import NdarConfig, NdarTrace, run_ndar

    H = load_instance(ns.instance)
    cfg = _experiment(ns, n=H.n)
    out = _out(ns, cfg)
    ncfg = NdarConfig(
        cfg.samples_per_iter,
        cfg.trials,
        cfg.max_iters,
        cfg.termination,
        _attractor(cfg),
        cfg.orderings,
        cfg.epsilon,
        bool(getattr(ns, "keep_samples", False)),
    )
    resume = NdarTrace.load(ns.resume) if getattr(ns, "resume", None) else None
    trace = run_ndar(H, _optimizer(cfg, cfg.seed), ncfg, resume=resume)
    trace.save(out / "trace.json")
    from .harness import ground_energy_path

    gs = ground_energy_path(ns.instance)
    E_gs = json.loads(gs.read_text())["energy"] if gs.is_file() else None
    trace.write_summary_csv(out / "summary.csv", E_gs)
    with open(out / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        p = cfg.p
        w.writerow(["iteration", "trial"] + [f"gamma{l + 1}" for l in range(p)] + [f"beta{l + 1}" for l in range(p)] + ["ordering", "mean", "min"])
        for rec in trace.records:
            for t in rec.trials:
                w.writerow(
                    [rec.iteration, t.trial_index]
                    + [repr(v) for v in t.params.gammas + t.params.betas]
                    + [t.ordering_id, repr(t.objective), repr(t.min_energy)]
                )
    _print(
        {
            "iterations": len(trace.records),
            "best_energy": trace.best.energy,
            "best_bitstring": bits_to_str(trace.best.bitstring),
            "check": energy(H, trace.best.bitstring),
            "reason": trace.reason,
        }
    )


def cmd_study(ns):
    from .harness import RunManifest, run_study

    if getattr(ns, "manifest", None):
        over = {k: getattr(ns, k) for k in ("seed", "backend") if getattr(ns, k, None) is not None}
        cfg = RunManifest.load(ns.manifest).experiment_config(**over)
        if ns.jobs:
            cfg.jobs = ns.jobs
    else:
        kind = _file_config(ns).get("kind", ns.kind)
        cfg = _experiment(ns, kind=kind)
    if cfg.kind != ns.kind:
        raise ConfigError(f"config describes a {cfg.kind!r} study, not {ns.kind!r}")
    out = _out(ns, cfg)
    m = run_study(cfg, out)
    _print({"out_dir": str(out), "outputs": m.outputs, "config_hash": m.config_hash})


def cmd_stats(ns):
    from .stats import correlate

    with open(ns.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or ns.x not in rows[0] or ns.y not in rows[0]:
        raise ConfigError(f"columns {ns.x!r} and {ns.y!r} must exist in {ns.csv}")
    x = np.array([float(r[ns.x]) for r in rows])
    y = np.array([float(r[ns.y]) for r in rows])
    _print(correlate(x, y).to_json())


COMMANDS = {
    "gen": cmd_gen,
    "solve-exact": cmd_solve_exact,
    "anneal": cmd_anneal,
    "qaoa": cmd_qaoa,
    "ndar": cmd_ndar,
    "study": cmd_study,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        COMMANDS[ns.command](ns)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NdarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
