import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import fd_grad, fd_jac, rel_err
from steinpoints.targets import (DataFormatError, DomainError, GaussianMixture,
                                 GaussianMixtureSpec, GPPosteriorSpec,
                                 IGARCHPosterior, IGARCHSpec, gm_grad, gm_hess, gm_log_q,
                                 gp_grad, gp_log_q, igarch_grad, igarch_log_q,
                                 igarch_variance_path, load_series_csv, simulate_igarch,
                                 standard_normal, synth_fallback)

BIMODAL = GaussianMixtureSpec.bimodal()

# Median sample variance of 300 independent simulated IGARCH(0.02, 0.1) series
# of length 2000 (burn-in 500); frozen from a long-run simulation.
IGARCH_VARIANCE_SCALE = 5.94


def skewed_mixture():
    return GaussianMixtureSpec([0.3, 0.7], [[-1.0, 0.5], [2.0, -1.0]],
                               [[[1.0, 0.4], [0.4, 0.8]], [[0.5, -0.1], [-0.1, 2.0]]])


# -- Gaussian mixture -------------------------------------------------------------

def test_gm_bimodal_settings():
    np.testing.assert_allclose(BIMODAL.weights, [0.5, 0.5])
    np.testing.assert_allclose(BIMODAL.means, [[-1.5, 0.0], [1.5, 0.0]])
    np.testing.assert_allclose(BIMODAL.covariances, [np.eye(2), np.eye(2)])


def test_gm_grad_examples():
    np.testing.assert_allclose(gm_grad(BIMODAL, [0.0, 0.0]), [0.0, 0.0], atol=1e-15)
    sn = GaussianMixtureSpec.standard_normal(1)
    assert gm_grad(sn, [2.0]) == pytest.approx([-2.0])


@pytest.mark.parametrize("spec", [BIMODAL, skewed_mixture()])
def test_gm_derivatives_match_fd(spec, rng):
    for _ in range(20):
        x = rng.normal(scale=2.0, size=2)
        assert rel_err(gm_grad(spec, x), fd_grad(lambda z: gm_log_q(spec, z), x)) <= 1e-6
        H = gm_hess(spec, x)
        np.testing.assert_allclose(H, H.T, atol=1e-14)
        assert rel_err(H, fd_jac(lambda z: gm_grad(spec, z), x)) <= 1e-4


def test_gm_log_q_matches_scipy():
    from scipy.stats import multivariate_normal as mvn
    spec = skewed_mixture()
    x = np.array([0.3, -0.4])
    ref = math.log(sum(w * mvn(m, c).pdf(x) for w, m, c in
                       zip(spec.weights, spec.means, spec.covariances)))
    assert gm_log_q(spec, x) == pytest.approx(ref, rel=1e-12)


def test_gm_spec_validation():
    with pytest.raises(ValueError):
        GaussianMixtureSpec([0.5, 0.6], [[0.0], [1.0]], [[[1.0]], [[1.0]]])
    with pytest.raises(ValueError):
        GaussianMixtureSpec([1.0], [[0.0, 0.0]], [[[1.0, 2.0], [2.0, 1.0]]])  # indefinite
    with pytest.raises(ValueError):
        GaussianMixtureSpec([1.0], [[0.0, 0.0]], [[[1.0, 0.0], [0.0, 0.0]]])  # singular


# -- GP hyperparameter posterior ------------------------------------------------------

@pytest.fixture(scope="module")
def lidar():
    return synth_fallback("lidar", 0)


def test_gp_grad_matches_fd(lidar):
    spec = GPPosteriorSpec(lidar.x, lidar.y, 0.1)
    rng = np.random.default_rng(3)
    for _ in range(10):
        phi = rng.uniform([-5, -13], [5, -7])
        assert rel_err(gp_grad(spec, phi), fd_grad(lambda z: gp_log_q(spec, z), phi)) <= 1e-4


def test_gp_degenerate_inputs_reduce_to_prior():
    y = np.array([0.3, -0.1, 0.2, 0.05])
    spec = GPPosteriorSpec(np.full(4, 2.0), y, 0.5)
    phi = np.array([-0.5, 1.2])
    prior = -3.0 * phi / (1.0 + phi @ phi)
    assert gp_grad(spec, phi)[1] == pytest.approx(prior[1], rel=1e-12, abs=1e-14)


def test_gp_log_q_falls_with_signal_variance(lidar):
    spec = GPPosteriorSpec(lidar.x, lidar.y, 0.1)
    vals = [gp_log_q(spec, [p, -10.0]) for p in (5.0, 10.0, 15.0, 20.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0] - 20


def test_gp_log_q_direct_formula():
    x = np.array([0.0, 0.5, 1.3])
    y = np.array([0.2, -0.4, 0.1])
    spec = GPPosteriorSpec(x, y, 0.3)
    phi = np.array([0.4, -0.7])
    K = math.exp(phi[0]) * np.exp(-math.exp(phi[1]) * (x[:, None] - x[None, :]) ** 2)
    C = K + 0.09 * np.eye(3)
    ref = (-0.5 * y @ np.linalg.solve(C, y) - 0.5 * np.linalg.slogdet(C)[1]
           - 1.5 * math.log(2 * math.pi) - 1.5 * math.log1p(phi @ phi))
    assert gp_log_q(spec, phi) == pytest.approx(ref, rel=1e-12)


# -- IGARCH posterior --------------------------------------------------------------

def test_igarch_one_step():
    spec = IGARCHSpec(np.array([0.0, 0.5]), sigma1_sq_init=2.0)
    sig2, _, _ = igarch_variance_path(spec, (0.03, 0.2))
    assert sig2[1] == pytest.approx(0.03 + 0.8 * 2.0, rel=1e-15)


def test_igarch_three_point_oracle():
    y = np.array([1.0, -1.0, 2.0])
    spec = IGARCHSpec(y, sigma1_sq_init=1.0)
    th = np.array([0.02, 0.1])

    def direct(t):
        s2, total = 1.0, 0.0
        for i, yi in enumerate(y):
            if i > 0:
                s2 = t[0] + t[1] * y[i - 1] ** 2 + (1 - t[1]) * s2
            total += -0.5 * (math.log(2 * math.pi * s2) + yi**2 / s2)
        return total

    assert igarch_log_q(spec, th) == pytest.approx(direct(th), rel=1e-12)
    assert rel_err(igarch_grad(spec, th), fd_grad(direct, th, h=1e-6)) <= 1e-6


def test_igarch_theta2_limit():
    y = np.random.default_rng(0).normal(size=50)
    _, d1, _ = igarch_variance_path(IGARCHSpec(y), (0.02, 1.0))
    np.testing.assert_array_equal(d1[1:], 1.0)


def test_igarch_grad_matches_fd_in_box():
    spec = IGARCHSpec(synth_fallback("igarch", 0).y)
    rng = np.random.default_rng(5)
    for _ in range(20):
        th = rng.uniform([0.002, 0.05], [0.04, 0.2])
        assert rel_err(igarch_grad(spec, th), fd_grad(lambda z: igarch_log_q(spec, z), th)) <= 1e-4


def test_igarch_domain_errors():
    spec = IGARCHSpec(np.array([0.1, 0.2, -0.3]))
    for th in [(0.0, 0.5), (-1.0, 0.5), (0.1, 0.0), (0.1, 1.0), (np.nan, 0.5)]:
        with pytest.raises(DomainError):
            igarch_log_q(spec, th)
    with pytest.raises(ValueError):
        IGARCHSpec(np.array([0.1, np.inf]))
    t = IGARCHPosterior(spec)
    np.testing.assert_array_equal(t.in_domain(np.array([[0.1, 0.5], [0.1, 1.0], [-0.1, 0.5]])),
                                  [True, False, False])


@given(st.floats(1e-4, 1.0), st.floats(0.01, 0.99), st.integers(0, 1000))
def test_igarch_variance_floor(th1, th2, seed):
    y = np.random.default_rng(seed).normal(size=30)
    sig2, _, _ = igarch_variance_path(IGARCHSpec(y), (th1, th2))
    assert np.all(sig2[1:] >= th1 * (1 - 1e-12))


def test_synth_igarch_determinism_and_scale():
    a = synth_fallback("igarch", 0, theta=(0.02, 0.1))
    b = synth_fallback("igarch", 0, theta=(0.02, 0.1))
    np.testing.assert_array_equal(a.y, b.y)
    assert len(a) == 2000
    v = np.var(a.y)
    assert IGARCH_VARIANCE_SCALE / 3 <= v <= 3 * IGARCH_VARIANCE_SCALE


def test_simulate_igarch_seeded():
    a = simulate_igarch((0.02, 0.1), 100, np.random.default_rng(1))
    b = simulate_igarch((0.02, 0.1), 100, np.random.default_rng(1))
    np.testing.assert_array_equal(a, b)


# -- data ingestion -------------------------------------------------------------------

def test_load_two_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("0.1,1.0\n0.2,0.9\n")
    d = load_series_csv(p, "xy")
    assert len(d) == 2
    np.testing.assert_array_equal(d.x, [0.1, 0.2])


def test_load_header_and_errors(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("range,logratio\n390,-0.05\n400,-0.04\n")
    assert len(load_series_csv(p, "xy")) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    with pytest.raises(DataFormatError, match=r":2: column 2"):
        load_series_csv(bad, "xy")
    wrong = tmp_path / "w.csv"
    wrong.write_text("1,2,3\n")
    with pytest.raises(DataFormatError, match="expected 1 column"):
        load_series_csv(wrong, "y")
    with pytest.raises(FileNotFoundError):
        load_series_csv(tmp_path / "missing.csv")


def test_synth_lidar_shape():
    d = synth_fallback("lidar", 4)
    assert len(d) == 221 and d.x.min() == 390 and d.x.max() == 720
    np.testing.assert_array_equal(d.y, synth_fallback("lidar", 4).y)


# -- evaluation counting ------------------------------------------------------------------

def test_counters_scripted_run():
    t = GaussianMixture()
    t.log_q([0.0, 0.0])
    t.log_q(np.zeros((5, 2)))
    t.grad_log_q(np.ones((3, 2)))
    t.grad_log_q([1.0, 2.0])
    t.hess_log_q(np.ones((2, 2)))
    c = t.counts()
    assert (c.n_logp, c.n_grad, c.n_hess, c.n_eval) == (6, 4, 2, 10)
    assert t.clone().counts().n_eval == 0


def test_fd_jacobian_charges_gradients():
    spec = IGARCHSpec(synth_fallback("igarch", 0).y)
    t = IGARCHPosterior(spec)
    th = np.array([0.01, 0.1])
    J = t.score_jacobian(th)
    assert t.counts().n_grad == 4
    np.testing.assert_allclose(J, J.T)
    assert rel_err(J, fd_jac(lambda z: igarch_grad(spec, z), th, h=1e-4)) <= 1e-3


def test_counter_threadsafe():
    from concurrent.futures import ThreadPoolExecutor
    t = standard_normal(1)
    with ThreadPoolExecutor(4) as pool:
        list(pool.map(lambda _: t.grad_log_q(np.zeros((7, 1))), range(200)))
    assert t.counts().n_grad == 1400
