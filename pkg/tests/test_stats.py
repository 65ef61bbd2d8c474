import math

import numpy as np
import pytest

from ndar.errors import UndefinedStatisticError
from ndar.stats import average_ranks, correlate, pearson, spearman, stats


def naive_pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def naive_ranks(x):
    out = []
    for v in x:
        less = sum(1 for u in x if u < v)
        eq = sum(1 for u in x if u == v)
        out.append(less + (eq + 1) / 2)
    return out


def test_linear_and_monotone():
    x = np.arange(10.0)
    assert stats(list(zip(x, 2 * x + 1))) == {"pearson_r": 1.0, "spearman_rho": 1.0}
    c = correlate(x - 4.5, -((x - 4.5) ** 3))
    assert c.spearman_rho == -1.0
    assert -1.0 < c.pearson_r < -0.9


def test_against_naive_formulas():
    rng = np.random.default_rng(0)
    x = rng.normal(size=100)
    y = 0.5 * x + rng.normal(size=100)
    y[::7] = y[3]  # ties
    assert abs(pearson(x, y) - naive_pearson(list(x), list(y))) < 1e-12
    assert list(average_ranks(y)) == naive_ranks(list(y))
    assert abs(spearman(x, y) - naive_pearson(naive_ranks(list(x)), naive_ranks(list(y)))) < 1e-12


def test_p_values_match_scipy():
    from scipy import stats as st

    rng = np.random.default_rng(1)
    x = rng.normal(size=40)
    y = 0.3 * x + rng.normal(size=40)
    c = correlate(x, y)
    ref = st.pearsonr(x, y)
    assert c.pearson_p == pytest.approx(ref.pvalue, rel=1e-9)
    assert c.spearman_p == pytest.approx(st.spearmanr(x, y).pvalue, rel=1e-9)
    assert c.n == 40


def test_degenerate_inputs():
    with pytest.raises(UndefinedStatisticError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedStatisticError):
        spearman([1.0, 2.0], [2.0, 1.0])
    with pytest.raises(ValueError):
        pearson([1.0, 2.0, 3.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        stats([1.0, 2.0, 3.0])
