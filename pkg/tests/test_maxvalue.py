from dataclasses import dataclass

import numpy as np
import pytest

from gibbon.exceptions import InputValidationError
from gibbon.gp import Dataset, Kernel, condition, fit
from gibbon.maxvalue import gumbel_parameters, gumbel_sample, thompson_sample
from gibbon.optimize import SearchSpace

BOX = SearchSpace(bounds=[[0.0, 2 * np.pi]])


@dataclass
class FlatPosterior:
    """Deterministic stand-in: known mean, no uncertainty."""

    dataset: Dataset

    def predict_marginal(self, x):
        x = np.asarray(x)[:, 0]
        return 3.0 - (x - 1.0) ** 2, np.zeros_like(x)

    def predict_joint(self, x):
        mu, _ = self.predict_marginal(x)
        return mu, np.zeros((mu.size, mu.size))


def sine_posterior(n=20, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 2 * np.pi, size=(n, 1))
    return fit(Dataset(x, np.sin(x[:, 0])), learn_noise=False, input_bounds=BOX.bounds, seed=0)


def test_zero_variance_posterior_returns_the_peak():
    post = FlatPosterior(Dataset(np.zeros((0, 1)), []))
    space = SearchSpace(bounds=[[0.0, 2.0]])
    g = gumbel_sample(post, space, M=7, N=5000, rng_seed=1)
    assert len(g) == 7
    assert np.max(np.abs(g.values - 3.0)) < 1e-5
    t = thompson_sample(post, space, M=4, N=500, rng_seed=1)
    np.testing.assert_allclose(t.values, np.max(post.predict_marginal(space.sample(500, np.random.default_rng(1)))[0]))


def test_all_zero_sd_gumbel_parameters():
    loc, scale = gumbel_parameters([1.0, 2.0, 2.0], [0.0, 0.0, 0.0])
    assert (loc, scale) == (2.0, 0.0)


def test_gumbel_matches_median_and_quartile_spread():
    from scipy import optimize, special

    rng = np.random.default_rng(0)
    mu, sd = rng.standard_normal(50), rng.uniform(0.1, 1.0, 50)
    loc, scale = gumbel_parameters(mu, sd)
    quartile = {q: optimize.brentq(lambda y: np.sum(special.log_ndtr((y - mu) / sd)) - np.log(q), -20, 20, xtol=1e-14)
                for q in (0.25, 0.5, 0.75)}
    gq = {q: loc - scale * np.log(-np.log(q)) for q in quartile}
    assert gq[0.5] == pytest.approx(quartile[0.5], abs=1e-9)
    assert gq[0.75] - gq[0.25] == pytest.approx(quartile[0.75] - quartile[0.25], abs=1e-9)


@pytest.mark.parametrize("kw", [dict(N=1), dict(M=0)])
def test_invalid_sizes_rejected(kw):
    args = dict(M=5, N=100) | kw
    with pytest.raises(InputValidationError):
        gumbel_sample(sine_posterior(), BOX, **args)


def test_thompson_grid_guard():
    with pytest.raises(InputValidationError):
        thompson_sample(sine_posterior(), BOX, M=2, N=5000)


def test_gumbel_samples_lie_in_the_expected_band():
    post = sine_posterior()
    g = gumbel_sample(post, BOX, M=10_000, N=10_000, rng_seed=3)
    top, sd_max = g.grid_mean_max, g.grid_std_max
    assert np.all(g.values >= top)
    assert np.all(g.values <= top + 4 * sd_max)


def test_samples_above_loose_floor():
    post = sine_posterior(n=6)
    for sampler in (gumbel_sample, thompson_sample):
        s = sampler(post, BOX, 500, 512, 0)
        assert np.all(s.values >= s.grid_mean_max - 6 * s.grid_std_max)


def test_gumbel_is_deterministic_given_seed():
    post = sine_posterior(n=8)
    a = gumbel_sample(post, BOX, 5, 2000, 42)
    b = gumbel_sample(post, BOX, 5, 2000, 42)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, gumbel_sample(post, BOX, 5, 2000, 43).values)


def test_thompson_single_point_is_a_gaussian_draw():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(5, 1))
    post = condition(Dataset(x, np.sin(5 * x[:, 0]), 0.0), Kernel(lengthscales=(0.2,)))
    point = np.array([[0.93]])
    space = SearchSpace(candidates=point)
    M = 20_000
    t = thompson_sample(post, space, M=M, N=1, rng_seed=5)
    mu, var = post.predict_marginal(point)
    assert abs(np.mean(t.values) - mu[0]) < 3 * np.sqrt(var[0] / M)


def test_samplers_agree_on_a_smooth_example():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 2 * np.pi, size=(6, 1))
    post = condition(Dataset(x, np.sin(x[:, 0]), 1e-4), Kernel(lengthscales=(1.5,)),
                     input_bounds=BOX.bounds, standardize=True)
    g = gumbel_sample(post, BOX, M=10_000, N=256, rng_seed=0)
    t = thompson_sample(post, BOX, M=10_000, N=256, rng_seed=0)
    assert abs(np.median(g.values) - np.median(t.values)) < 0.5 * g.grid_std_max


def test_discrete_space_uses_the_candidate_set():
    post = sine_posterior(n=10)
    cands = np.linspace(0, 2 * np.pi, 7)[:, None]
    g = gumbel_sample(post, SearchSpace(candidates=cands), M=3, N=100, rng_seed=0)
    mu, _ = post.predict_marginal(cands)
    assert g.grid_mean_max == pytest.approx(np.max(mu))
