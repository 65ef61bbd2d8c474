import json

import numpy as np
import pytest

from ndar.errors import ConfigError
from ndar.harness import (
    ExperimentConfig,
    RunManifest,
    convergence_study,
    correlation_study,
    correlation_summary,
    distribution_study,
    gauge_spread,
    histogram_mode,
    load_instances,
    rerun_manifest,
    run_ndar_instances,
    run_study,
)
from ndar.ising import approximation_ratio, as_bits, energy, gauge_transform, generate_sk, save_instance

SMALL = dict(n=6, instances=2, trials=3, shots=20, orderings=2, max_iters=3, gauges=4)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


def test_config_validation_and_hash():
    cfg = small()
    assert cfg.samples_per_iter == 60
    assert cfg.hash() == small(jobs=4, out_dir="elsewhere").hash()
    assert cfg.hash() != small(seed=1).hash()
    for bad in (dict(kind="sweep"), dict(backend="gpu"), dict(trials=0), dict(quantiles=(0.0,)), dict(ground_energies=(-1.0,))):
        with pytest.raises(ConfigError):
            small(**bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 6, "colour": "red"})


def test_instances_and_ground_energy(tmp_path):
    insts = load_instances(small())
    assert [i.source for i in insts] == ["sk:n=6:seed=0", "sk:n=6:seed=1"]
    H = generate_sk(30, 0)
    path = tmp_path / "big.txt"
    save_instance(H, path)
    with pytest.raises(ConfigError, match="solve-exact"):
        load_instances(small(n=30, instance_files=(str(path),)))
    (tmp_path / "big.txt.gs.json").write_text(json.dumps({"energy": -100.0}))
    assert load_instances(small(instance_files=(str(path),)))[0].E_gs == -100.0
    assert load_instances(small(instance_files=(str(path),), ground_energies=(-99.0,)))[0].E_gs == -99.0


def test_correlation_rows():
    cfg = small(kind="correlation", instances=1)
    rows = correlation_study(cfg)
    assert len(rows) == 4
    inst = load_instances(cfg)[0]
    a = np.zeros(6, dtype=np.uint8)
    for r in rows:
        Hy = gauge_transform(inst.H, as_bits(r["gauge"]))
        assert r["attractor_ar"] == approximation_ratio(energy(Hy, a), inst.E_gs)
        # a lower-energy tail never has a lower AR than the whole batch
        assert 1.0 >= r["ar_q0.001"] >= r["ar_q0.1"] >= r["ar_q1"]
        assert r["shots"] == 20
    summ = correlation_summary(rows, cfg.quantiles)
    assert [s["quantile"] for s in summ] == [0.001, 0.1, 1.0]
    spread = gauge_spread(rows)
    assert spread[0]["n_gauges"] == 4 and spread[0]["sem"] > 0


def test_convergence_budget_parity():
    traces = {}
    rows = convergence_study(small(), traces=traces)
    assert len(rows) == 6
    for r in rows:
        assert r["samples"] == 60 * (r["iteration"] + 1)
        for k in ("ndar_best_ar", "qaoa_best_ar", "random_best_ar", "ndar_attractor_ar"):
            assert r[k] <= 1.0
    for k, tr in traces.items():
        assert len(tr.records) == 3
        inst = load_instances(small())[k]
        assert energy(inst.H, tr.best.bitstring) == tr.best.energy
        best = [r["ndar_best_ar"] for r in rows if r["instance"] == k]
        assert best == sorted(best)


def test_distributions_need_samples():
    cfg = small(kind="distributions", instances=1)
    insts = load_instances(cfg)
    traces = run_ndar_instances(cfg, insts, keep_samples=False)
    with pytest.raises(ConfigError, match="keep_samples"):
        distribution_study(cfg, insts, traces)
    rows = distribution_study(cfg, insts)
    for kind in ("raw_hw", "effective_hw", "ar"):
        total = sum(r["fraction"] for r in rows if r["kind"] == kind and r["iteration"] == 0)
        assert total == pytest.approx(1.0)
    assert 0 <= histogram_mode(rows, 0, 0, "raw_hw") <= 6


@pytest.mark.parametrize("kind", ["correlation", "convergence", "distributions"])
def test_rerun_from_manifest_is_byte_identical(tmp_path, kind):
    cfg = small(kind=kind, instances=1, gauges=3, max_iters=2, svg=True)
    m = run_study(cfg, tmp_path / "a")
    assert (tmp_path / "a" / m.outputs["svg"]).read_text().startswith("<svg")
    rerun_manifest(tmp_path / "a" / "manifest.json", tmp_path / "b")
    for name in (m.outputs["table"], m.outputs["summary"]):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    loaded = RunManifest.load(tmp_path / "b" / "manifest.json")
    assert loaded.config_hash == m.config_hash
    assert loaded.experiment_config() == ExperimentConfig.from_dict(cfg.to_dict())


def test_jobs_do_not_change_results(tmp_path):
    cfg = small(kind="correlation", gauges=3)
    run_study(cfg, tmp_path / "a")
    cfg.jobs = 3
    run_study(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "correlation.csv").read_bytes() == (tmp_path / "b" / "correlation.csv").read_bytes()
