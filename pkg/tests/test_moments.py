import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpssm.belief import JointBelief, gp_predict
from gpssm.errors import InnovationCovarianceSingular
from gpssm.inducing import add_inducing
from gpssm.kernels import RBF, AffineInputMap, HeteroKernel, KernelBlock
from gpssm.model import ModelSpec
from gpssm.moments import (
    MomentMatcher,
    UkfConfig,
    adf_latent_moments,
    correct,
    predict_adf,
    predict_ekf,
    predict_ukf,
)
from reference import (
    DenseShadow,
    latent_sampler,
    mc_moments,
    random_spd,
    two_output_kernel,
    two_state_model,
)
from test_acceptance import kalman_reduction_error


def scalar_model(transition, jac_x=None, jac_f=None, process=0.1, meas=1.0, d_c=0):
    return ModelSpec(
        1, 1, 1, transition, lambda x: x, [[process]], [[meas]], d_c=d_c,
        transition_jac_state=jac_x, transition_jac_latent=jac_f,
        measurement_jac=lambda x: np.ones((1, 1)), vectorized=True,
    )


def scalar_kernel(input_map=None, lengthscale=1.0):
    return HeteroKernel([KernelBlock(RBF(1.0, [lengthscale]), input_map or AffineInputMap.identity(1))])


def populated(kernel, model_dims, points, rng):
    """Random joint belief over ``points`` inducing values and the state."""
    d_x = model_dims
    belief = JointBelief.initial(kernel, np.zeros(d_x), np.eye(d_x))
    for k, z in points:
        belief = add_inducing(belief, kernel, k, z)
    n = belief.mean.size
    return JointBelief(rng.standard_normal(n), np.linalg.cholesky(random_spd(n, rng)), belief.inducing)


def two_output_belief(rng, n0=3, n1=2):
    kernel = two_output_kernel()
    points = [(0, rng.standard_normal(2)) for _ in range(n0)] + [(1, rng.standard_normal(1)) for _ in range(n1)]
    return kernel, populated(kernel, 2, points, rng)


def shadow_of(kernel, belief):
    shadow = DenseShadow(kernel, np.zeros(belief.d_x), np.eye(belief.d_x))
    shadow.inputs = [z.copy() for z in belief.inducing.inputs]
    shadow.mean, shadow.cov = belief.mean.copy(), belief.covariance()
    return shadow


# EKF


def test_ekf_scalar_kalman_prediction():
    kernel = scalar_kernel()
    model = scalar_model(lambda x, c, f: 0.9 * x, lambda x, c, f: np.array([[0.9]]), lambda x, c, f: np.zeros((1, 1)))
    out = predict_ekf(JointBelief.initial(kernel, [1.0], [[1.0]]), kernel, model)
    npt.assert_allclose(out.mean, [0.9], rtol=1e-15)
    npt.assert_allclose(out.covariance(), [[0.91]], rtol=1e-14)


def test_ekf_matches_dense_linearization(rng):
    dt = 0.1
    kernel = scalar_kernel(lengthscale=0.8)
    model = scalar_model(
        lambda x, c, f: x + dt * f, lambda x, c, f: np.eye(1), lambda x, c, f: dt * np.eye(1), process=0.01
    )
    belief = populated(kernel, 1, [(0, [z]) for z in (-1.0, 0.2, 1.1)], rng)
    shadow = shadow_of(kernel, belief)
    out = predict_ekf(belief, kernel, model)
    shadow.predict_ekf(model, None)
    npt.assert_allclose(out.covariance(), shadow.cov, atol=1e-9)
    npt.assert_allclose(out.mean, shadow.mean, atol=1e-9)
    n_u = belief.n_u
    npt.assert_array_equal(out.factor[:n_u, :n_u], belief.factor[:n_u, :n_u])


# UKF


def test_ukf_linear_empty_set_is_kalman(rng):
    dt = 0.2
    kernel = scalar_kernel()
    model = scalar_model(lambda x, c, f: 0.8 * x + dt * f, process=0.05)
    out = predict_ukf(JointBelief.initial(kernel, [0.7], [[0.5]]), kernel, model)
    # with no inducing points the latent value is prior noise of variance 1
    npt.assert_allclose(out.mean, [0.56], atol=1e-10)
    npt.assert_allclose(out.covariance(), [[0.64 * 0.5 + dt**2 + 0.05]], atol=1e-10)


def test_ukf_matches_ekf_for_state_independent_inputs(rng):
    kernel = scalar_kernel(AffineInputMap.control_only(1, [[1.0]]), lengthscale=0.7)
    model = scalar_model(
        lambda x, c, f: 0.9 * x + f, lambda x, c, f: np.array([[0.9]]), lambda x, c, f: np.eye(1), d_c=1
    )
    belief = populated(kernel, 1, [(0, [z]) for z in (-0.8, 0.1, 0.9)], rng)
    c = np.array([0.35])
    a = predict_ekf(belief, kernel, model, c)
    b = predict_ukf(belief, kernel, model, c)
    npt.assert_allclose(b.mean, a.mean, atol=1e-8)
    npt.assert_allclose(b.covariance(), a.covariance(), atol=1e-8)


def test_ukf_matches_dense_weighted_sums(rng):
    kernel, belief = two_output_belief(rng)
    model = two_state_model()
    c = np.array([0.4])
    for cfg in (UkfConfig(), UkfConfig(alpha=0.5, beta=0.0), UkfConfig(alpha=1.0)):
        shadow = shadow_of(kernel, belief)
        out = predict_ukf(belief, kernel, model, c, cfg)
        shadow.predict_ukf(model, c, cfg.alpha, cfg.beta)
        npt.assert_allclose(out.covariance(), shadow.cov, atol=1e-8)
        npt.assert_allclose(out.mean, shadow.mean, atol=1e-8)


def test_ukf_cubic_map(rng):
    kernel = HeteroKernel([])
    model = ModelSpec(1, 0, 1, lambda x, c, f: x**3, lambda x: x, [[0.1]], [[1.0]], vectorized=True)
    belief = JointBelief.initial(kernel, [0.0], [[1.0]])
    x = rng.standard_normal(1_000_000)
    y = x**3 + np.sqrt(0.1) * rng.standard_normal(x.size)
    for alpha in (1e-3, 1.0):
        out = predict_ukf(belief, kernel, model, None, UkfConfig(alpha=alpha))
        # the mean is exact and inside the Monte-Carlo band
        assert abs(out.mean[0] - y.mean()) <= 3 * y.std() / np.sqrt(y.size)
        # a second-order rule sees only eta^4 of the x^6 moment, far below the true 15
        eta2 = alpha**2
        npt.assert_allclose(out.covariance()[0, 0], eta2**2 + 0.1, rtol=1e-6)
    assert abs(y.var() - 15.1) <= 0.5


def test_ukf_default_alpha_roundoff_floor():
    # the sigma spread 1e-3 amplifies one ulp of the map output by ~1/(alpha^2 d_s)
    for kind in ("ukf", "adf"):
        assert kalman_reduction_error(kind, "python", alpha=1e-3) <= 1e-9


# ADF


def test_adf_deterministic_input_reduces_to_gp_mean(rng):
    kernel = scalar_kernel(lengthscale=0.6)
    belief = populated(kernel, 1, [(0, [z]) for z in (-0.5, 0.4)], rng)
    L = belief.factor.copy()
    L[-1] = 0.0
    L[-1, -1] = 1e-12
    sharp = JointBelief(belief.mean, L, belief.inducing)
    lm = adf_latent_moments(sharp, kernel)
    npt.assert_allclose(lm.mean, gp_predict(sharp, kernel, [(0, sharp.mean_x)]).mean, atol=1e-10)


def test_adf_overlap_at_the_mean_input():
    kernel = scalar_kernel(lengthscale=0.5)
    belief = JointBelief.initial(kernel, [0.3], [[0.2]])
    belief = add_inducing(belief, kernel, 0, [0.3])
    # pin u = 1 without correlation with the state
    belief = JointBelief(np.array([1.0, 0.3]), np.diag([1e-9, np.sqrt(0.2)]), belief.inducing)
    lm = adf_latent_moments(belief, kernel)
    npt.assert_allclose(lm.mean, [(1.0 + 0.2 / 0.25) ** -0.5], rtol=1e-12)


def test_adf_latent_moments_against_monte_carlo(rng):
    kernel = scalar_kernel(lengthscale=0.9)
    belief = populated(kernel, 1, [(0, [-0.6]), (0, [0.7])], rng)
    mean, cov = belief.mean, belief.covariance()
    draw = latent_sampler(kernel, belief.inducing.inputs, mean, cov, None, rng)
    m, C, se_m, se_C = mc_moments(lambda n: np.hstack(draw(n)[::-1]), 1_000_000)
    # vector order is (h, x, u)
    lm = adf_latent_moments(belief, kernel)
    exact_m = lm.mean
    exact_C = np.r_[lm.cov_hh[0], lm.cov_hx[0], lm.cov_hu[0]]
    assert np.all(np.abs(exact_m - m[:1]) <= 3 * se_m[:1])
    assert np.all(np.abs(exact_C - C[0]) <= 3 * se_C[0])
    assert np.all(np.abs(exact_C - C[0]) <= 0.01 * np.abs(C[0]) + 3 * se_C[0])
    npt.assert_allclose(exact_m, m[:1], rtol=0.01, atol=3 * se_m[0])


def test_adf_rejects_unknown_state_step(rng):
    kernel, belief = two_output_belief(rng)
    with pytest.raises(ValueError):
        predict_adf(belief, kernel, two_state_model(), np.zeros(1), state_step="pf")


def test_adf_state_steps_agree_on_linear_map(rng):
    kernel, belief = two_output_belief(rng)
    A, B = np.array([[0.9, 0.1], [0.0, 0.8]]), np.array([[0.1, 0.0], [0.0, 0.2]])
    model = ModelSpec(
        2, 2, 1, lambda x, c, f: x @ A.T + f @ B.T, lambda x: x[..., :1], 0.01 * np.eye(2), [[0.1]], d_c=1,
        transition_jac_state=lambda x, c, f: A, transition_jac_latent=lambda x, c, f: B, vectorized=True,
    )
    c = np.array([0.2])
    a = predict_adf(belief, kernel, model, c, state_step="ukf")
    b = predict_adf(belief, kernel, model, c, state_step="ekf")
    npt.assert_allclose(a.covariance(), b.covariance(), atol=1e-8)
    npt.assert_allclose(a.mean, b.mean, atol=1e-8)


# correction


def test_scalar_kalman_update():
    kernel = scalar_kernel()
    model = scalar_model(lambda x, c, f: x)
    for method in ("ekf", "ukf"):
        out = correct(JointBelief.initial(kernel, [0.0], [[1.0]]), model, [2.0], method)
        npt.assert_allclose(out.mean, [1.0], atol=1e-12)
        npt.assert_allclose(out.covariance(), [[0.5]], atol=1e-12)


def test_uninformative_measurement_changes_nothing(rng):
    kernel, belief = two_output_belief(rng)
    model = two_state_model(meas=1e12)
    for method in ("ekf", "ukf"):
        out = correct(belief, model, [5.0, -3.0], method)
        npt.assert_allclose(out.covariance(), belief.covariance(), atol=1e-9)
        npt.assert_allclose(out.mean, belief.mean, atol=1e-9)


def test_correction_matches_dense_bayes(rng):
    kernel, belief = two_output_belief(rng)
    model = two_state_model()
    y = np.array([0.4, -0.2])
    for method in ("ekf", "ukf"):
        shadow = shadow_of(kernel, belief)
        out = correct(belief, model, y, method)
        shadow.correct(model, y, method)
        npt.assert_allclose(out.covariance(), shadow.cov, atol=1e-9)
        npt.assert_allclose(out.mean, shadow.mean, atol=1e-9)


def test_correction_rejects_wrong_method(rng):
    kernel, belief = two_output_belief(rng)
    with pytest.raises(ValueError):
        correct(belief, two_state_model(), [0.0, 0.0], "adf")
    with pytest.raises(ValueError):
        MomentMatcher("ekf", correction="adf")


def test_singular_innovation_reported():
    kernel = HeteroKernel([])
    belief = JointBelief.initial(kernel, [0.0], [[1.0]])
    # two copies of the same reading with negligible noise
    g = lambda x: np.concatenate([x, x], axis=-1)  # noqa: E731
    model = ModelSpec(1, 0, 2, lambda x, c, f: x, g, [[0.1]], 1e-300 * np.eye(2), vectorized=True)
    for method in ("ekf", "ukf"):
        with pytest.raises(InnovationCovarianceSingular):
            correct(belief, model, [0.0, 0.0], method)


def test_matcher_defaults():
    assert MomentMatcher("adf").correction == "ukf"
    assert MomentMatcher("ekf").correction == "ekf"
    with pytest.raises(ValueError):
        MomentMatcher("pf")
    with pytest.raises(ValueError):
        UkfConfig(alpha=2.0)


# properties

seeds = st.integers(0, 2**32 - 1)


def _linear_setup(seed):
    rng = np.random.default_rng(seed)
    kernel = HeteroKernel(
        [
            KernelBlock(RBF(1.0, [0.7]), AffineInputMap.control_only(2, [[1.0]])),
            KernelBlock(RBF(0.5, [1.3]), AffineInputMap.control_only(2, [[-0.5]])),
        ]
    )
    A = 0.5 * rng.standard_normal((2, 2)) + 0.5 * np.eye(2)
    B = rng.standard_normal((2, 2))
    model = ModelSpec(
        2, 2, 1, lambda x, c, f: x @ A.T + f @ B.T, lambda x: x[..., :1], 0.02 * np.eye(2), [[0.1]], d_c=1,
        transition_jac_state=lambda x, c, f: A, transition_jac_latent=lambda x, c, f: B,
        measurement_jac=lambda x: np.array([[1.0, 0.0]]), vectorized=True,
    )
    points = [(int(rng.integers(2)), rng.standard_normal(1)) for _ in range(int(rng.integers(1, 5)))]
    belief = JointBelief.initial(kernel, np.zeros(2), np.eye(2))
    for k, z in points:
        belief = add_inducing(belief, kernel, k, z)
    n = belief.mean.size
    belief = JointBelief(rng.standard_normal(n), np.linalg.cholesky(random_spd(n, rng)), belief.inducing)
    return kernel, model, belief, rng.standard_normal(1)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_backends_agree_on_linear_gaussian_propagation(seed):
    kernel, model, belief, c = _linear_setup(seed)
    cfg = UkfConfig(alpha=1.0)
    outs = [
        predict_ekf(belief, kernel, model, c),
        predict_ukf(belief, kernel, model, c, cfg),
        predict_adf(belief, kernel, model, c, cfg),
    ]
    for other in outs[1:]:
        npt.assert_allclose(other.mean, outs[0].mean, atol=1e-7)
        npt.assert_allclose(other.covariance(), outs[0].covariance(), atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, kind=st.sampled_from(["ekf", "ukf", "adf"]))
def test_prediction_keeps_inducing_marginal_and_psd(seed, kind):
    rng = np.random.default_rng(seed)
    kernel, belief = two_output_belief(rng, int(rng.integers(0, 4)), int(rng.integers(0, 3)))
    model = two_state_model()
    out = MomentMatcher(kind).predict(belief, kernel, model, rng.standard_normal(1))
    n_u = belief.n_u
    npt.assert_array_equal(out.mean_u, belief.mean_u)
    npt.assert_array_equal(out.factor[:n_u, :n_u], belief.factor[:n_u, :n_u])
    assert np.all(np.diagonal(out.state_covariance()) > 0.0)
    cov = out.covariance()
    assert np.min(np.linalg.eigvalsh(cov)) >= -1e-10 * np.trace(cov)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, method=st.sampled_from(["ekf", "ukf"]))
def test_correction_keeps_factor_valid(seed, method):
    rng = np.random.default_rng(seed)
    kernel, belief = two_output_belief(rng)
    out = correct(belief, two_state_model(), rng.standard_normal(2), method)
    npt.assert_array_equal(np.triu(out.factor, 1), 0.0)
    assert np.all(np.diagonal(out.state_covariance()) > 0.0)
    assert np.trace(out.covariance()) <= np.trace(belief.covariance()) + 1e-12
