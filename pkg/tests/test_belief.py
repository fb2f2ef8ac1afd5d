import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import block_diag

from gpssm.belief import JointBelief, gp_predict, kernel_chol, load_snapshot, novelty, save_snapshot
from gpssm.errors import SingularKernelMatrix
from gpssm.inducing import add_inducing
from gpssm.kernels import RBF, AffineInputMap, CustomKernel, HeteroKernel, KernelBlock
from reference import DenseShadow, random_spd, two_output_kernel


def prior_belief(kernel, points, rng, mean_x=None):
    """Belief whose inducing block equals the GP prior and is independent of the state."""
    belief = JointBelief.initial(kernel, np.zeros(2) if mean_x is None else mean_x, random_spd(2, rng))
    for k, z in points:
        belief = add_inducing(belief, kernel, k, z)
    return belief


def random_points(rng, n0=3, n1=2):
    return [(0, rng.standard_normal(2)) for _ in range(n0)] + [(1, rng.standard_normal(1)) for _ in range(n1)]


def random_posterior(kernel, points, rng):
    belief = prior_belief(kernel, points, rng)
    n = belief.mean.size
    return JointBelief(rng.standard_normal(n), np.linalg.cholesky(random_spd(n, rng)), belief.inducing)


def test_empty_set_recovers_prior(rng):
    kernel = two_output_kernel()
    belief = JointBelief.initial(kernel, np.ones(2), np.eye(2))
    test = [(0, rng.standard_normal(2)), (1, rng.standard_normal(1))]
    pred = gp_predict(belief, kernel, test)
    npt.assert_array_equal(pred.mean, 0.0)
    npt.assert_array_equal(pred.cov_fx, 0.0)
    assert pred.cov_fu.shape == (2, 0)
    npt.assert_array_equal(pred.cov_ff, kernel.eval_multi(test, test))


def test_prior_inducing_block_cancels(rng):
    kernel = two_output_kernel()
    belief = prior_belief(kernel, random_points(rng), rng)
    belief.mean[: belief.n_u] = rng.standard_normal(belief.n_u)
    test = [(0, rng.standard_normal(2)) for _ in range(3)] + [(1, rng.standard_normal(1))]
    pred = gp_predict(belief, kernel, test)
    npt.assert_allclose(pred.cov_ff, kernel.eval_multi(test, test), atol=1e-12)


def test_collapsed_posterior_interpolates(rng):
    kernel = two_output_kernel()
    points = random_points(rng)
    base = prior_belief(kernel, points, rng)
    n_u = base.n_u
    m_u = rng.standard_normal(n_u)
    factor = block_diag(1e-9 * np.eye(n_u), np.eye(2))
    belief = JointBelief(np.r_[m_u, 0.0, 0.0], factor, base.inducing)
    # rows are dimension-major: the three dimension-0 points come first
    pred = gp_predict(belief, kernel, [points[1], points[4]])
    npt.assert_allclose(pred.mean, m_u[[1, 4]], atol=1e-8)
    npt.assert_allclose(np.diagonal(pred.cov_ff), 0.0, atol=1e-8)


def test_gp_predict_matches_dense_formula(rng):
    kernel = two_output_kernel()
    belief = random_posterior(kernel, random_points(rng), rng)
    shadow = DenseShadow(kernel, np.zeros(2), np.eye(2))
    shadow.inputs = [z.copy() for z in belief.inducing.inputs]
    K_uu = shadow.K_uu()
    test = [(0, rng.standard_normal(2)), (1, rng.standard_normal(1)), (0, rng.standard_normal(2))]
    spec_u = [(k, z) for k in range(2) for z in belief.inducing.inputs[k]]
    K_su = kernel.eval_multi(test, spec_u)
    P = np.linalg.solve(K_uu, K_su.T).T
    S = belief.covariance()
    n_u = belief.n_u
    pred = gp_predict(belief, kernel, test)
    npt.assert_allclose(pred.mean, P @ belief.mean_u, atol=1e-10)
    npt.assert_allclose(pred.cov_fx, P @ S[:n_u, n_u:], atol=1e-10)
    npt.assert_allclose(pred.cov_fu, P @ S[:n_u, :n_u], atol=1e-10)
    dense_ff = kernel.eval_multi(test, test) + P @ (S[:n_u, :n_u] - K_uu) @ P.T
    npt.assert_allclose(pred.cov_ff, dense_ff, atol=1e-10)


def test_prediction_is_permutation_equivariant(rng):
    kernel = two_output_kernel()
    belief = random_posterior(kernel, random_points(rng), rng)
    test = [(0, rng.standard_normal(2)) for _ in range(3)] + [(1, rng.standard_normal(1)) for _ in range(2)]
    perm = rng.permutation(len(test))
    a = gp_predict(belief, kernel, test)
    b = gp_predict(belief, kernel, [test[i] for i in perm])
    npt.assert_allclose(b.mean, a.mean[perm], atol=1e-13)
    npt.assert_allclose(b.cov_ff, a.cov_ff[np.ix_(perm, perm)], atol=1e-13)
    npt.assert_allclose(b.cov_fx, a.cov_fx[perm], atol=1e-13)


def test_novelty_examples(rng):
    kernel = two_output_kernel()
    empty = JointBelief.initial(kernel, np.zeros(2), np.eye(2))
    npt.assert_array_equal(novelty(empty, kernel, rng.standard_normal(2), [0.4]), [1.0, 0.7])
    z0 = np.array([0.3, -0.2])
    belief = add_inducing(empty, kernel, 0, z0)
    gamma = novelty(belief, kernel, z0, [0.0])
    assert abs(gamma[0]) <= 1e-10 and gamma[1] == 0.7


def test_novelty_matches_dense_schur(rng):
    kernel = two_output_kernel()
    belief = random_posterior(kernel, random_points(rng), rng)
    x, c = rng.standard_normal(2), rng.standard_normal(1)
    gamma = novelty(belief, kernel, x, c)
    for k, z in enumerate(kernel.inputs(x, c)):
        Z = belief.inducing.inputs[k]
        K = kernel.eval_block(k, Z, Z)
        kz = kernel.eval_block(k, Z, z[None])[:, 0]
        expected = kernel.eval_block(k, z[None], z[None])[0, 0] - kz @ np.linalg.solve(K, kz)
        npt.assert_allclose(gamma[k], expected, atol=1e-12)


def test_kernel_chol_examples(rng):
    kernel = HeteroKernel([KernelBlock(RBF(1.0, [0.5]), AffineInputMap.identity(1))])
    belief = JointBelief.initial(kernel, np.zeros(1), np.eye(1))
    one = add_inducing(belief, kernel, 0, [0.2])
    npt.assert_array_equal(kernel_chol(one.inducing, kernel, 0), [[1.0]])
    five = belief
    for z in rng.uniform(-2.0, 2.0, 5):
        five = add_inducing(five, kernel, 0, [z])
    Z = five.inducing.inputs[0]
    npt.assert_allclose(kernel_chol(five.inducing, kernel, 0), np.linalg.cholesky(kernel.eval_block(0, Z, Z)), atol=1e-12)


def test_kernel_chol_identical_inputs_use_jitter():
    kernel = HeteroKernel([KernelBlock(RBF(1.0, [0.5]), AffineInputMap.identity(1))])
    belief = JointBelief.initial(kernel, np.zeros(1), np.eye(1))
    belief.inducing.inputs[0] = np.array([[0.4], [0.4]])
    belief.inducing.serials[0] = np.array([0, 1])
    L = kernel_chol(belief.inducing, kernel, 0)
    npt.assert_allclose(L @ L.T, np.ones((2, 2)) + 1e-8 * np.eye(2), atol=1e-15)


def test_kernel_chol_reports_singular_gram():
    kernel = HeteroKernel([KernelBlock(CustomKernel(lambda A, B: -np.ones((len(A), len(B))), 1), AffineInputMap.identity(1))])
    belief = JointBelief.initial(kernel, np.zeros(1), np.eye(1))
    belief.inducing.inputs[0] = np.array([[0.0], [1.0]])
    belief.inducing.serials[0] = np.array([0, 1])
    with pytest.raises(SingularKernelMatrix):
        kernel_chol(belief.inducing, kernel, 0)


def test_kernel_chol_cache_follows_hyperparameters(rng):
    kernel = two_output_kernel()
    belief = prior_belief(kernel, random_points(rng), rng)
    before = kernel_chol(belief.inducing, kernel, 0).copy()
    kernel.theta = kernel.theta + 0.3
    after = kernel_chol(belief.inducing, kernel, 0)
    Z = belief.inducing.inputs[0]
    assert not np.allclose(before, after)
    npt.assert_allclose(after, np.linalg.cholesky(kernel.eval_block(0, Z, Z)), atol=1e-12)


def test_snapshot_round_trip(tmp_path, rng):
    kernel = two_output_kernel()
    belief = random_posterior(kernel, random_points(rng), rng)
    save_snapshot(tmp_path / "belief.json", belief, kernel)
    fresh = two_output_kernel(l0=3.0)
    restored = load_snapshot(tmp_path / "belief.json", fresh)
    npt.assert_array_equal(restored.mean, belief.mean)
    npt.assert_array_equal(restored.factor, belief.factor)
    npt.assert_array_equal(fresh.theta, kernel.theta)
    for a, b in zip(restored.inducing.inputs, belief.inducing.inputs):
        npt.assert_array_equal(a, b)
    test = [(0, np.array([0.1, 0.2])), (1, np.array([0.3]))]
    npt.assert_allclose(gp_predict(restored, fresh, test).cov_ff, gp_predict(belief, kernel, test).cov_ff, atol=1e-14)


def test_snapshot_version_checked(tmp_path):
    (tmp_path / "bad.json").write_text('{"format": "gpssm-belief", "version": 999}')
    with pytest.raises(ValueError):
        load_snapshot(tmp_path / "bad.json")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_test=st.integers(1, 6))
def test_predicted_covariance_is_psd(seed, n_test):
    rng = np.random.default_rng(seed)
    kernel = two_output_kernel()
    belief = random_posterior(kernel, random_points(rng), rng)
    test = [(int(rng.integers(2)), None) for _ in range(n_test)]
    test = [(k, rng.standard_normal(2 if k == 0 else 1)) for k, _ in test]
    cov = gp_predict(belief, kernel, test).cov_ff
    npt.assert_allclose(cov, cov.T, atol=1e-14)
    assert np.min(np.linalg.eigvalsh(cov)) >= -1e-9 * np.trace(cov)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_prior_belief_returns_gp_prior(seed):
    rng = np.random.default_rng(seed)
    kernel = two_output_kernel()
    belief = prior_belief(kernel, random_points(rng), rng)
    test = [(0, rng.standard_normal(2)), (1, rng.standard_normal(1)), (0, rng.standard_normal(2))]
    pred = gp_predict(belief, kernel, test)
    npt.assert_allclose(pred.mean, 0.0, atol=1e-14)
    npt.assert_allclose(pred.cov_ff, kernel.eval_multi(test, test), atol=1e-10)
