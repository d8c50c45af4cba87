import math

import numpy as np
import pytest

import dqfkit


def test_compute_and_report_find_the_planted_outlier():
    x, labels, ids = dqfkit.simulate("table1-row1", seed=3)
    bundle = dqfkit.compute(x, {"n_pairs": 20, "m_tips": 60, "seed": 5}, ids=ids)
    assert bundle["ids"] == ids
    assert len(bundle["angles"]) == 3
    rep = dqfkit.report(bundle, labels)
    assert 0.0 <= rep["auc"] <= 1.0
    assert sorted(r for r in rep["ranks"] if r) == list(range(1, len(ids) + 1))


def test_bundle_text_is_deterministic_across_threads():
    x, _, _ = dqfkit.simulate("holey-2d", seed=1, n=60)
    a = dqfkit.compute(x, {"seed": 9}, threads=1, raw=True)
    b = dqfkit.compute(x, {"seed": 9}, threads=3, raw=True)
    assert a == b


def test_gram_input_matches_unscaled_coordinates():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(25, 4))
    k = dqfkit.gram_from_coordinates(x)
    assert dqfkit.compute(x, z_scale=False, raw=True) == dqfkit.compute_gram(k, raw=True)


def test_rank_and_auc():
    out = dqfkit.rank([[0, 0.1, 0.2], [0, 0.05, 0.15], [0.01, 0.2, 0.3]], [1 / 3, 2 / 3, 1])
    assert out["ranks"] == [2, 1, 3]
    assert dqfkit.auc([0.1, 0.5, 0.5, 0.9], [1, 1, 0, 0]) == 0.875
    with pytest.raises(dqfkit.UndefinedAucError):
        dqfkit.auc([0.1, 0.2], [0, 0])


def test_one_dimensional_dqf_is_monotone():
    sample = list(np.linspace(-1, 1, 201))
    grid, q = dqfkit.dqf_1d(sample, 0.0, list(np.linspace(-0.99, 0.99, 100)))
    assert len(grid) == len(q) == 100
    assert all(b >= a for a, b in zip(q, q[1:]))
    assert math.isclose(grid[-1], 1.0)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(dqfkit.DqfError):
        dqfkit.compute(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        dqfkit.compute(np.ones((5, 2)), {"n_pair": 3})
    assert "annulus" in dqfkit.scenarios()
