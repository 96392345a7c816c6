import numpy as np
import pytest

from gibbon.benchmarks import currin_mf
from gibbon.exceptions import FitError, InputValidationError
from gibbon.gp import Dataset, Kernel, condition, fit
from gibbon.multifidelity import FidelityLevel, MFKernel, bundle, default_mf_kernel, mf_fit

LEVELS2 = [FidelityLevel(0, 10.0), FidelityLevel(1, 1.0)]


def two_level_kernel(rho=0.8):
    return MFKernel((Kernel("matern52", 1.0, (0.4, 0.6)), Kernel("matern52", 0.2, (0.3, 0.3))), (rho,))


def two_level_data(seed, n=5, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(2 * n, 2))
    s = np.repeat([0, 1], n)
    y = np.sin(3 * x[:, 0]) + x[:, 1] * s
    return Dataset(x, y, noise, s), rng


def dense_prior(kern, x1, s1, x2, s2):
    # f_0 = d_0, f_1 = rho f_0 + d_1 written out for two levels
    k0 = kern.kernels[0](x1, x2)
    k1 = kern.kernels[1](x1, x2)
    rho = kern.mixing[0]
    a1 = np.where(np.asarray(s1) == 1, rho, 1.0)[:, None] * np.where(np.asarray(s2) == 1, rho, 1.0)[None, :]
    both = (np.asarray(s1)[:, None] == 1) & (np.asarray(s2)[None, :] == 1)
    return a1 * k0 + np.where(both, k1, 0.0)


def test_fidelity_level_validation():
    with pytest.raises(InputValidationError):
        FidelityLevel(0, 0.0)
    with pytest.raises(InputValidationError):
        FidelityLevel(-1, 1.0)


def test_kernel_matches_two_level_recursion():
    kern = two_level_kernel(0.7)
    rng = np.random.default_rng(0)
    x1, x2 = rng.uniform(size=(5, 2)), rng.uniform(size=(4, 2))
    s1, s2 = rng.integers(0, 2, 5), rng.integers(0, 2, 4)
    np.testing.assert_allclose(kern.cov(x1, s1, x2, s2), dense_prior(kern, x1, s1, x2, s2), rtol=1e-12)


def test_three_level_kernel_is_psd():
    kern = MFKernel(tuple(Kernel("rbf", v, (0.3,)) for v in (1.0, 0.3, 0.1)), (0.9, -1.2))
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(30, 1))
    s = rng.integers(0, 3, 30)
    assert np.min(np.linalg.eigvalsh(kern.cov(x, s, x, s))) > -1e-10


@pytest.mark.parametrize("seed", range(5))
def test_markov_property_of_the_prior(seed):
    rng = np.random.default_rng(seed)
    kern = MFKernel(tuple(Kernel("matern52", v, (0.3, 0.5)) for v in (1.0, 0.4, 0.2)), tuple(rng.uniform(-1.5, 1.5, 2)))
    xj, xi = rng.uniform(size=(1, 2)), rng.uniform(size=(1, 2))
    sj = np.array([rng.integers(1, 3)])
    pts = np.vstack([xj, xi, xj])
    lv = np.r_[sj, 0, 0]
    c = kern.cov(pts, lv, pts, lv)
    # Cov(A_j, C_i | C_j)
    partial = c[0, 1] - c[0, 2] * c[2, 1] / c[2, 2]
    assert abs(partial) < 1e-8


def test_single_level_collapses_to_plain_fit():
    rng = np.random.default_rng(2)
    data = Dataset(rng.uniform(size=(8, 2)), rng.standard_normal(8))
    base = Kernel(lengthscales=(0.3, 0.3))
    plain = fit(data, base, seed=4)
    multi = mf_fit(data, [FidelityLevel(0, 1.0)], MFKernel((base,)), seed=4)
    assert multi.kernel.kernels[0] == plain.kernel
    z = rng.uniform(size=(5, 2))
    for a, b in zip(plain.predict_joint(z), multi.predict_joint(z)):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_zero_mixing_decouples_levels():
    data, rng = two_level_data(3)
    kern = two_level_kernel(0.0)
    z = rng.uniform(size=(4, 2))
    base = condition(data, kern, 1e-4).predict_joint(z, np.ones(4, dtype=int))
    y = np.array(data.observations)
    y[data.fidelities == 0] += 10.0 * rng.standard_normal(np.sum(data.fidelities == 0))
    moved = condition(Dataset(data.inputs, y, 0.0, data.fidelities), kern, 1e-4).predict_joint(z, np.ones(4, dtype=int))
    np.testing.assert_allclose(base[0], moved[0], atol=1e-10)
    np.testing.assert_allclose(base[1], moved[1], atol=1e-10)


def test_missing_level_names_the_level():
    data = Dataset(np.random.default_rng(0).uniform(size=(4, 2)), np.zeros(4), 0.0, np.zeros(4, dtype=int))
    with pytest.raises(FitError, match="level 1"):
        mf_fit(data, LEVELS2)


def test_currin_low_fidelity_data_helps():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(6, 2))
    xl = rng.uniform(size=(6, 2))
    grid = rng.uniform(size=(100, 2))
    truth = currin_mf(grid, 0)
    hi = Dataset(x, currin_mf(x, 0))
    both = Dataset(np.vstack([x, xl]), np.r_[currin_mf(x, 0), currin_mf(xl, 1)], 0.0, np.repeat([0, 1], 6))
    single = fit(hi, learn_noise=False, seed=0)
    multi = mf_fit(both, LEVELS2, learn_noise=False, seed=0)
    rmse_single = np.sqrt(np.mean((single.predict_marginal(grid)[0] - truth) ** 2))
    rmse_multi = np.sqrt(np.mean((multi.predict_marginal(grid, np.zeros(100, dtype=int))[0] - truth) ** 2))
    assert rmse_multi < rmse_single


def test_objective_level_exact_bundle():
    rng = np.random.default_rng(5)
    data = Dataset(rng.uniform(size=(5, 1)), rng.standard_normal(5))
    post = condition(data, Kernel(lengthscales=(0.4,)), 0.0)
    b = post.bundle(rng.uniform(size=(1, 1)))
    assert b.mu_A[0] == b.mu_C[0]
    np.testing.assert_allclose(b.Sigma_A, b.Sigma_C)
    assert b.rho[0] == pytest.approx(1.0)


def test_far_candidate_has_prior_correlation():
    data, _ = two_level_data(6)
    kern = two_level_kernel(0.6)
    post = condition(data, kern, 0.0)
    b = bundle(post, np.array([[1e4, 1e4]]), [1])
    expected = 0.6 * 1.0 / np.sqrt((0.36 * 1.0 + 0.2) * 1.0)
    assert b.rho[0] == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_bundle_matches_dense_oracle(seed):
    data, rng = two_level_data(seed, noise=0.0)
    kern = two_level_kernel(rng.uniform(-1.5, 1.5))
    noise = np.array([0.01, 0.05])
    post = condition(data, kern, noise)
    z = rng.uniform(size=(3, 2))
    s = np.array([1, 0, 1])
    zero = np.zeros(3, dtype=int)
    X, S, y = data.inputs, data.fidelities, data.observations
    K = dense_prior(kern, X, S, X, S) + np.diag(noise[S])
    kA, kC = dense_prior(kern, X, S, z, s), dense_prior(kern, X, S, z, zero)
    sol = lambda b: np.linalg.solve(K, b)
    mu_a, mu_c = kA.T @ sol(y), kC.T @ sol(y)
    sig_a = dense_prior(kern, z, s, z, s) - kA.T @ sol(kA) + np.diag(noise[s])
    sig_c = dense_prior(kern, z, zero, z, zero) - kC.T @ sol(kC)
    cov_ac = np.diag(dense_prior(kern, z, s, z, zero) - kA.T @ sol(kC))
    rho = cov_ac / np.sqrt(np.diag(sig_a) * np.diag(sig_c))
    b = bundle(post, z, s)
    np.testing.assert_allclose(b.mu_A, mu_a, atol=1e-8)
    np.testing.assert_allclose(b.mu_C, mu_c, atol=1e-8)
    np.testing.assert_allclose(b.Sigma_A, sig_a, atol=1e-8)
    np.testing.assert_allclose(b.Sigma_C, sig_c, atol=1e-8)
    np.testing.assert_allclose(b.rho, rho, atol=1e-8)
    assert np.all(np.abs(b.rho) <= 1)


def test_candidate_stats_agree_with_bundle_diagonal():
    data, rng = two_level_data(9)
    post = condition(data, two_level_kernel(0.9), np.array([1e-3, 1e-2]))
    z = rng.uniform(size=(6, 2))
    s = np.array([0, 1, 1, 0, 1, 0])
    b = post.bundle(z, s)
    st = post.candidate_stats(z, s)
    np.testing.assert_allclose(st.var_A, np.diag(b.Sigma_A), atol=1e-10)
    np.testing.assert_allclose(st.var_C, np.diag(b.Sigma_C), atol=1e-10)
    np.testing.assert_allclose(st.rho, b.rho, atol=1e-8)


def test_lml_gradient_with_mixing_matches_finite_differences():
    from scipy import optimize

    from gibbon.gp import _neg_lml_and_grad

    data, _ = two_level_data(10)
    kern = default_mf_kernel(2, 2)
    theta = np.r_[kern.free_params(), np.log([0.02, 0.03])]
    args = (kern, data.inputs, data.fidelities, data.observations, 2, True, None)
    _, grad = _neg_lml_and_grad(theta, *args)
    fd = optimize.approx_fprime(theta, lambda t: _neg_lml_and_grad(t, *args)[0], 1e-6)
    np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-5)
