import io
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from ndar.errors import EmptyInputError
from ndar.paramopt import (
    SearchSpace,
    TpeSettings,
    Trial,
    TrialError,
    best_so_far,
    best_trial,
    run_search,
    tpe_suggest,
)
from ndar.circuit import QaoaParams
from ndar.simulator import SampleBatch
from ndar.solvers import EnergyRecord


def convex(params, ordering):
    return (params.gammas[0] - 0.4) ** 2 + (params.betas[0] - 0.2) ** 2


def test_single_trial_is_start_point():
    [t] = run_search(convex, SearchSpace(), 1, "tpe", seed=0)
    assert t.params == QaoaParams((0.1,), (0.1,)) and t.ordering_id == 0


def test_start_is_clamped():
    sp = SearchSpace(2, (0.5, 1.0), (-0.05, 0.05))
    vec, _ = sp.start()
    assert list(vec) == [0.5, 0.5, 0.05, 0.05]


def test_one_point_grid():
    sp = SearchSpace(1, (0.3, 0.3), (0.2, 0.2))
    trials = run_search(convex, sp, 5, "grid", seed=0)
    assert len(trials) == 5
    assert len({t.params for t in trials}) == 1


def test_grid_covers_lattice():
    sp = SearchSpace(1, (0.0, 1.0), (0.0, 1.0), orderings=(0, 1))
    trials = run_search(convex, sp, 1 + 18, "grid", seed=0, grid_size=3)
    assert len({(t.params, t.ordering_id) for t in trials[1:]}) == 18


def test_tpe_converges_on_convex_objective():
    trials = run_search(convex, SearchSpace(), 100, "tpe", seed=0)
    assert best_trial(trials).objective < 0.01


def test_tpe_converges_across_seeds():
    hits = sum(best_trial(run_search(convex, SearchSpace(), 100, "tpe", seed=s)).objective < 0.01 for s in range(10))
    assert hits >= 9


def test_empty_history_is_uniform():
    sp = SearchSpace()
    rng = np.random.default_rng(0)
    g = np.array([tpe_suggest([], sp, rng)[0].gammas[0] for _ in range(2000)])
    assert g.min() >= -math.pi / 2 and g.max() <= math.pi / 2
    counts, _ = np.histogram(g, bins=10, range=(-math.pi / 2, math.pi / 2))
    assert chisquare(counts).pvalue > 0.05


def _history(sp, values, rng):
    out = []
    for k, v in enumerate(values):
        vec, o = sp.uniform(rng)
        out.append(Trial(k, sp.to_params(vec), o, float(v)))
    return out


def test_flat_history_is_uniform():
    sp = SearchSpace(orderings=tuple(range(4)))
    rng = np.random.default_rng(1)
    hist = _history(sp, [3.0] * 30, rng)
    draws = [tpe_suggest(hist, sp, rng) for _ in range(10_000)]
    g = np.array([d[0].gammas[0] for d in draws])
    counts, _ = np.histogram(g, bins=10, range=(-math.pi / 2, math.pi / 2))
    assert chisquare(counts).pvalue > 0.05
    assert chisquare(np.bincount([d[1] for d in draws], minlength=4)).pvalue > 0.05


def test_clear_best_region_is_exploited():
    sp = SearchSpace()
    rng = np.random.default_rng(2)
    hist = []

    def f(g):
        return abs(g - 1.0) if 0.8 <= g <= 1.2 else 10.0 + rng.random()

    for k in range(40):
        vec, o = sp.uniform(rng)
        hist.append(Trial(k, sp.to_params(vec), o, f(vec[0])))
    for k in range(40, 50):  # make sure the good region is populated
        g = 0.8 + 0.4 * rng.random()
        hist.append(Trial(k, QaoaParams((g,), (rng.uniform(-0.7, 0.7),)), 0, f(g)))
    hits = sum(0.8 <= tpe_suggest(hist, sp, rng)[0].gammas[0] <= 1.2 for _ in range(1000))
    # uniform sampling would land there ~127 times in 1000
    assert hits > 5 * 1000 * 0.4 / np.pi


def test_categorical_preference():
    sp = SearchSpace(orderings=(0, 1, 2))
    rng = np.random.default_rng(3)
    hist = []
    for k in range(60):
        vec, o = sp.uniform(rng)
        hist.append(Trial(k, sp.to_params(vec), o, 0.0 if o == 2 else 1.0 + rng.random()))
    picks = [tpe_suggest(hist, sp, rng)[1] for _ in range(500)]
    assert np.mean(np.array(picks) == 2) > 0.6


def test_best_trial_rules():
    p = QaoaParams((0.1,), (0.1,))
    a = Trial(0, p, 0, 1.0, best_in_trial=EnergyRecord(np.zeros(2), -5.0))
    b = Trial(1, p, 0, 1.0, best_in_trial=EnergyRecord(np.zeros(2), -7.0))
    assert best_trial([a]) is a
    assert best_trial([b, a]) is a
    assert best_trial([a, b], "min") is b
    with pytest.raises(EmptyInputError):
        best_trial([])
    assert list(best_so_far([a, Trial(2, p, 0, 0.5), Trial(3, p, 0, 0.7)])) == [1.0, 0.5, 0.5]


def test_objective_variants_and_logging():
    def obj(params, ordering):
        bits = np.array([[0, 1], [1, 1]], dtype=np.uint8)
        return 2.0, SampleBatch(bits), np.array([3.0, -1.0])

    log = io.StringIO()
    trials = run_search(obj, SearchSpace(2), 3, "random", seed=0, log=log)
    assert trials[0].min_energy == -1.0
    assert list(trials[0].best_in_trial.bitstring) == [1, 1]
    lines = log.getvalue().splitlines()
    assert lines[0] == "trial,gamma1,gamma2,beta1,beta2,ordering,mean,min"
    assert len(lines) == 4


def test_determinism_and_errors():
    a = run_search(convex, SearchSpace(orderings=(0, 1)), 30, "tpe", seed=5)
    b = run_search(convex, SearchSpace(orderings=(0, 1)), 30, "tpe", seed=5)
    assert [(t.params, t.ordering_id) for t in a] == [(t.params, t.ordering_id) for t in b]

    def bad(params, ordering):
        raise RuntimeError("boom")

    with pytest.raises(TrialError) as info:
        run_search(bad, SearchSpace(), 3)
    assert info.value.trial_index == 0
    with pytest.raises(ValueError):
        run_search(convex, SearchSpace(), 3, "bayes")
    with pytest.raises(ValueError):
        SearchSpace(gamma_range=(1.0, 0.0))


def test_suggestions_stay_in_bounds():
    sp = SearchSpace(2, (-0.2, 0.3), (0.0, 0.1))
    trials = run_search(convex, sp, 40, "tpe", seed=1, tpe=TpeSettings(n_startup=5))
    V = np.array([t.vector for t in trials])
    assert (V[:, :2] >= -0.2).all() and (V[:, :2] <= 0.3).all()
    assert (V[:, 2:] >= 0.0).all() and (V[:, 2:] <= 0.1).all()
