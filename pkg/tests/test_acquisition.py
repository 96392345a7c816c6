import itertools

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from gibbon.acquisition import (
    EIG_FLOOR,
    RHO_CLAMP,
    AcquisitionContext,
    DppExploreScorer,
    GibbonScorer,
    PenalisedScorer,
    correlation_penaliser,
    degenerate_pair,
    dpp_logdet,
    ei_from_moments,
    expected_improvement,
    gibbon,
    gibbon_decomposed,
    gibbon_modified,
    gibbon_single,
    mes,
    mes_values,
    single_point_terms,
    soft_penaliser,
)
from gibbon.exceptions import InputValidationError
from gibbon.gp import Dataset, Kernel, condition
from gibbon.maxvalue import MaxValueSamples
from gibbon.multifidelity import MFKernel


def make_ctx(seed=0, n=6, d=2, noise=0.05, m_offsets=(0.3, 0.8, 1.5), ls=0.3):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, d))
    y = np.sin(4 * x).sum(axis=1)
    post = condition(Dataset(x, y, noise), Kernel("matern52", 1.0, (ls,) * d))
    mv = MaxValueSamples(np.max(y) + np.asarray(m_offsets), 0, "fixed")
    return AcquisitionContext(post, mv), rng


# ------------------------------------------------------------------ gibbon
def test_uninformative_fidelity_scores_zero():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(6, 1))
    s = np.repeat([0, 1], 3)
    kern = MFKernel((Kernel(lengthscales=(0.3,)), Kernel("matern52", 0.5, (0.3,))), (0.0,))
    post = condition(Dataset(x, np.cos(3 * x[:, 0]), 0.01, s), kern)
    ctx = AcquisitionContext(post, MaxValueSamples([1.5, 2.0], 0, "fixed"), costs=(10.0, 1.0))
    assert gibbon(ctx, rng.uniform(size=(1, 1)), [1]) == 0.0


def test_single_point_terms_limits():
    assert single_point_terms([0.0], [0.0], [1.0], [0.0])[0] == 0.0
    far = single_point_terms([1e3], [0.0], [1.0], [RHO_CLAMP])[0]
    assert 0.0 <= far < 1e-300


def test_single_point_scalar_oracle():
    with mp.workdps(50):
        rho = mp.mpf(1) - mp.mpf("1e-9")
        h0 = mp.npdf(0) / mp.ncdf(0)
        expected = -0.5 * mp.log(1 - rho**2 * h0 * h0)
    got = single_point_terms([0.0], [0.0], [1.0], [1 - 1e-9])[0]
    assert got == pytest.approx(float(expected), rel=1e-12)


def test_single_point_value_nonnegative():
    ctx, rng = make_ctx(2)
    for x in rng.uniform(size=(50, 2)):
        assert gibbon(ctx, x[None, :]) >= 0.0


def test_duplicate_batch_scores_below_single():
    ctx, rng = make_ctx(3)
    x = rng.uniform(size=(1, 2))
    assert gibbon(ctx, np.vstack([x, x])) < gibbon(ctx, x)


def test_exact_observation_duplicates_hit_the_eigen_floor():
    ctx, rng = make_ctx(3, noise=0.0)
    x = rng.uniform(size=(1, 2))
    diversity, _ = gibbon_decomposed(ctx, np.vstack([x, x]))
    assert diversity == pytest.approx(0.5 * (np.log(2.0) + np.log(EIG_FLOOR)), abs=1e-6)


def test_modified_equals_standard_for_single_points():
    ctx, rng = make_ctx(4)
    x = rng.uniform(size=(1, 2))
    assert gibbon_modified(ctx, x) == gibbon(ctx, x)


def test_modified_equals_standard_without_cross_correlation():
    ctx, _ = make_ctx(5, ls=0.01)
    pair = np.array([[0.05, 0.05], [0.95, 0.95]])
    assert gibbon_decomposed(ctx, pair)[0] == 0.0
    assert gibbon_modified(ctx, pair) == gibbon(ctx, pair)


def test_modified_penalises_near_duplicates_less():
    ctx, rng = make_ctx(6)
    x = rng.uniform(size=(1, 2))
    batch = x + 1e-3 * rng.standard_normal((5, 2))
    assert gibbon_modified(ctx, batch) > gibbon(ctx, batch)


def test_decomposition_of_single_point():
    ctx, rng = make_ctx(7)
    diversity, quality = gibbon_decomposed(ctx, rng.uniform(size=(1, 2)))
    assert diversity == 0.0
    assert quality >= 0.0


def test_decomposition_of_independent_points():
    ctx, _ = make_ctx(8, ls=0.01)
    pair = np.array([[0.1, 0.9], [0.9, 0.1]])
    diversity, quality = gibbon_decomposed(ctx, pair)
    assert diversity == 0.0
    assert quality == pytest.approx(np.sum(gibbon_single(ctx, pair)), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_decomposition_recomposes(seed):
    ctx, rng = make_ctx(seed)
    batch = rng.uniform(size=(3, 2))
    diversity, quality = gibbon_decomposed(ctx, batch)
    assert abs(diversity + quality - gibbon(ctx, batch)) < 1e-10
    assert quality == pytest.approx(np.sum(gibbon_single(ctx, batch)), abs=1e-10)


def test_gibbon_is_invariant_to_candidate_order():
    ctx, rng = make_ctx(9)
    batch = rng.uniform(size=(4, 2))
    ref = gibbon(ctx, batch)
    for perm in itertools.permutations(range(4)):
        assert gibbon(ctx, batch[list(perm)]) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_appending_a_duplicate_never_helps(seed):
    ctx, rng = make_ctx(seed)
    batch = rng.uniform(size=(3, 2))
    grown = np.vstack([batch, batch[rng.integers(3)]])
    assert gibbon(ctx, grown) <= gibbon(ctx, batch) + 1e-12


def test_missing_max_values_rejected():
    ctx, rng = make_ctx(0)
    bare = AcquisitionContext(ctx.model)
    with pytest.raises(InputValidationError):
        gibbon(bare, rng.uniform(size=(1, 2)))


# --------------------------------------------------------------------- mes
def test_mes_limits():
    g, m = degenerate_pair(1e4)
    assert 0.0 <= g < 1e-300 and 0.0 <= m < 1e-300
    ctx, _ = make_ctx(10, noise=0.0)
    x = np.array([[0.4, 0.6]])
    mu, var = ctx.model.predict_marginal(x)
    at_mean = AcquisitionContext(ctx.model, MaxValueSamples([mu[0]], 0, "fixed"))
    assert mes(at_mean, x) == pytest.approx(np.log(2.0), abs=1e-12)


def truncated_entropy_gap(mu, sd, m):
    """H(N(mu, sd^2)) - H(N(mu, sd^2) truncated above at m), by quadrature."""
    z = stats.norm.cdf((m - mu) / sd)

    def integrand(y):
        p = stats.norm.pdf(y, mu, sd) / z
        return -p * np.log(p) if p > 0 else 0.0

    h_trunc, _ = integrate.quad(integrand, mu - 40 * sd, m, epsabs=1e-13, epsrel=1e-12, limit=400)
    return stats.norm.entropy(mu, sd) - h_trunc


def test_mes_matches_quadrature_entropy_difference():
    rng = np.random.default_rng(0)
    for _ in range(40):
        mu, sd = rng.normal(), rng.uniform(0.2, 3.0)
        m = mu + sd * rng.uniform(-2.5, 4.0)
        g = (m - mu) / sd
        assert degenerate_pair(g)[1] == pytest.approx(truncated_entropy_gap(mu, sd, m), abs=1e-6)


def test_mes_values_average_over_samples():
    ctx, rng = make_ctx(11, noise=0.0)
    x = rng.uniform(size=(4, 2))
    mu, var = ctx.model.predict_marginal(x)
    g = (ctx.m[:, None] - mu[None, :]) / np.sqrt(var)[None, :]
    expected = np.mean(degenerate_pair(g)[1], axis=0)
    np.testing.assert_allclose(mes_values(ctx, x), expected, rtol=1e-12)


# ------------------------------------------------------- degenerate forms
def test_degenerate_pair_at_zero():
    g, m = degenerate_pair(0.0)
    assert m == pytest.approx(np.log(2.0))
    phi0 = stats.norm.pdf(0.0)
    assert g == pytest.approx(-0.5 * np.log(1 - 2 * phi0**2 * 2), rel=1e-12)
    assert g < np.log(2.0)


def test_degenerate_sequences_decrease_and_are_ordered():
    u = np.linspace(-6, 6, 1000)
    g, m = degenerate_pair(u)
    assert np.all(np.diff(g) < 0)
    assert np.all(np.diff(m) < 0)
    assert np.all(g <= m)


def test_gibbon_lower_bounds_mes_on_gamma_grid():
    gam = np.linspace(-8, 8, 801)
    for gm in gam:
        gib = single_point_terms([gm], [0.0], [1.0], [RHO_CLAMP])[0]
        assert gib <= degenerate_pair(gm)[1] + 1e-6


# ---------------------------------------------------------------------- ei
def test_ei_closed_forms():
    assert ei_from_moments(1.0, 0.0, 1.0) == 0.0
    assert ei_from_moments(0.3, 1.0, 0.3) == pytest.approx(stats.norm.pdf(0.0), rel=1e-14)


def test_ei_against_monte_carlo():
    ctx, rng = make_ctx(12, noise=0.0)
    x = np.array([[0.37, 0.81]])
    mu, var = ctx.model.predict_marginal(x)
    best = ctx.reference_value()
    draws = np.maximum(rng.normal(mu[0], np.sqrt(var[0]), 1_000_000) - best, 0.0)
    se = draws.std() / 1000.0
    assert abs(expected_improvement(ctx, x) - draws.mean()) < 3 * se


# ---------------------------------------------------------------- penalisers
def test_soft_penaliser_limits_and_monotonicity():
    ctx, rng = make_ctx(13)
    xp = np.array([[0.5, 0.5]])
    mu, _ = ctx.model.predict_marginal(xp)
    assert soft_penaliser(xp, xp, 2.0, mu[0], ctx.model) == pytest.approx(0.5)
    assert soft_penaliser(np.array([[1e6, 1e6]]), xp, 2.0, mu[0] + 1.0, ctx.model) == 1.0
    ray = xp + np.linspace(0, 1, 100)[:, None] * np.array([[0.6, -0.8]])
    psi = soft_penaliser(ray, xp, 3.0, mu[0] + 0.5, ctx.model)
    assert np.all(np.diff(psi) >= 0) and np.all((psi >= 0) & (psi <= 1))


def test_correlation_penaliser_cases():
    ctx, rng = make_ctx(14, noise=0.0)
    model = ctx.model
    x = rng.uniform(size=(1, 2))
    assert correlation_penaliser(x, None, model) == 1.0
    assert correlation_penaliser(x, x, model) <= 2 * EIG_FLOOR
    batch = rng.uniform(size=(2, 2))
    pts = np.vstack([batch, x])
    cov = model.bundle(pts).Sigma_A
    r = cov / np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
    assert correlation_penaliser(x, batch, model) == pytest.approx(np.linalg.det(r), abs=1e-12)


# ---------------------------------------------------------------------- dpp
def test_dpp_logdet_special_cases():
    ctx, rng = make_ctx(15)
    x = rng.uniform(size=(1, 2))
    assert dpp_logdet(ctx, x) == pytest.approx(gibbon_single(ctx, x)[0], abs=1e-12)
    ind, _ = make_ctx(15, ls=0.01)
    pair = np.array([[0.1, 0.1], [0.9, 0.9]])
    assert dpp_logdet(ind, pair) == pytest.approx(np.sum(gibbon_single(ind, pair)), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_dpp_identity(seed):
    ctx, rng = make_ctx(seed)
    batch = rng.uniform(size=(3, 2))
    assert abs(gibbon(ctx, batch) - dpp_logdet(ctx, batch)) < 1e-10


# ------------------------------------------------------------------ scorers
@pytest.mark.parametrize("seed", range(5))
def test_scorer_increment_matches_exact_batch_value(seed):
    ctx, rng = make_ctx(seed)
    pending = rng.uniform(size=(2, 2))
    cands = rng.uniform(size=(6, 2))
    scorer = GibbonScorer(ctx.with_pending(pending))
    got = scorer.offset + scorer.score(cands)
    exact = [gibbon(ctx, np.vstack([pending, c])) for c in cands]
    np.testing.assert_allclose(got, exact, atol=1e-8)


def test_modified_scorer_matches_modified_value_at_final_size():
    ctx, rng = make_ctx(20)
    pending = rng.uniform(size=(3, 2))
    cands = rng.uniform(size=(4, 2))
    B = 4
    scorer = GibbonScorer(ctx.with_pending(pending), 0.5 / B**2)
    got = scorer.offset + scorer.score(cands)
    exact = [gibbon_modified(ctx, np.vstack([pending, c])) for c in cands]
    np.testing.assert_allclose(got, exact, atol=1e-8)


def test_dpp_explore_scorer_is_log_conditional_variance():
    ctx, rng = make_ctx(21)
    pending = rng.uniform(size=(2, 2))
    x = rng.uniform(size=(1, 2))
    cov = ctx.model.bundle(np.vstack([pending, x])).Sigma_A
    cond = cov[2, 2] - cov[2, :2] @ np.linalg.solve(cov[:2, :2], cov[:2, 2])
    assert DppExploreScorer(ctx.with_pending(pending)).score(x)[0] == pytest.approx(np.log(cond), rel=1e-8)


def test_penalised_scorer_composition():
    ctx, rng = make_ctx(22, noise=0.0)
    pending = rng.uniform(size=(2, 2))
    x = rng.uniform(size=(3, 2))
    sc = PenalisedScorer(ctx.with_pending(pending), "ei", 2.0, 1.5)
    expected = np.log([expected_improvement(ctx, xi[None, :]) for xi in x])
    for p in pending:
        expected += np.log(soft_penaliser(x, p[None, :], 2.0, 1.5, ctx.model))
    np.testing.assert_allclose(sc.score(x), expected, rtol=1e-10)
    with pytest.raises(InputValidationError):
        PenalisedScorer(ctx, "ucb", 1.0, 0.0)
