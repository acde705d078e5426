import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import fd_cross_div, fd_grad
from steinpoints.kernels import KernelParams, kernel_eval
from steinpoints.stein import (SequenceBuilder, SteinKernel, k0_eval, ksd, ksd_weighted,
                               stein_identity_check)
from steinpoints.targets import GaussianMixture, standard_normal

IMQ = KernelParams("imq", 1.0, -0.5)
KERNELS = [IMQ, KernelParams("inverse_log", 1.0, -1.0), KernelParams("imq_score", 1.0, -0.5)]


class FlippedStein(SteinKernel):
    """k0 with the sign of the grad_x' k . s(x) term reversed."""

    def _assemble(self, k, gx, gxp, div, sx, sxp):
        coupling = np.sum(gx * sxp, axis=-1) - np.sum(gxp * sx, axis=-1)
        return div + coupling + k * np.sum(sx * sxp, axis=-1)


def test_k0_zero_score_point():
    assert k0_eval(SteinKernel(IMQ, standard_normal(1)), [0.0], [0.0]) == pytest.approx(1.0)


def test_k0_matches_fd_assembly():
    state = SteinKernel(IMQ, standard_normal(1))
    x, xp = np.array([1.0]), np.array([-1.0])
    k = lambda a, b: kernel_eval(IMQ, a, b)  # noqa: E731
    gx = fd_grad(lambda z: k(z, xp), x)
    gxp = fd_grad(lambda z: k(x, z), xp)
    sx, sxp = -x, -xp
    oracle = fd_cross_div(k, x, xp) + gx @ sxp + gxp @ sx + k(x, xp) * (sx @ sxp)
    assert k0_eval(state, x, xp) == pytest.approx(oracle, rel=1e-4)


@pytest.mark.parametrize("kernel", KERNELS)
def test_k0_symmetry_exact(kernel, rng):
    state = SteinKernel(kernel, GaussianMixture())
    for _ in range(50):
        x, xp = rng.normal(size=2), rng.normal(size=2)
        assert k0_eval(state, x, xp) == k0_eval(state, xp, x)


@pytest.mark.parametrize("kernel", KERNELS)
def test_k0_gram_psd(kernel, rng):
    X = rng.normal(scale=2.0, size=(25, 2))
    K = SteinKernel(kernel, GaussianMixture()).gram(X)
    assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.trace(K)


def test_ksd_examples(rng):
    state = SteinKernel(IMQ, GaussianMixture())
    x = np.array([0.4, -1.2])
    single = np.sqrt(k0_eval(state, x, x))
    assert ksd(x[None], state) == pytest.approx(single, rel=1e-14)
    assert ksd(np.array([x, x]), state) == pytest.approx(single, rel=1e-14)
    X = rng.normal(size=(10, 2))
    assert ksd(X[rng.permutation(10)], state) == pytest.approx(ksd(X, state), rel=1e-14)
    with pytest.raises(ValueError):
        ksd(np.empty((0, 2)), state)


def test_ksd_weighted(rng):
    state = SteinKernel(IMQ, GaussianMixture())
    Y = rng.normal(size=(3, 2))
    assert ksd_weighted(Y, np.full(3, 1 / 3), state) == pytest.approx(ksd(Y, state), rel=1e-12)
    assert ksd_weighted(Y, [0.0, 1.0, 0.0], state) == pytest.approx(ksd(Y[1:2], state), rel=1e-12)
    assert ksd_weighted(Y, [0.5, 0.5, 0.0], state) == pytest.approx(ksd(Y[:2], state), rel=1e-12)
    with pytest.raises(ValueError):
        ksd_weighted(Y, [1.2, -0.2, 0.0], state)
    with pytest.raises(ValueError):
        ksd_weighted(Y, [0.5, 0.5, 0.1], state)


@pytest.mark.parametrize("kernel", KERNELS)
def test_stein_identity_standard_normal(kernel):
    state = SteinKernel(kernel, standard_normal(2))
    est, se = stein_identity_check(state, [1.0, 1.0], n_mc=100_000, seed=1)
    assert abs(est) <= 4 * se


def test_stein_identity_mutation_detected():
    state = FlippedStein(IMQ, standard_normal(2))
    est, se = stein_identity_check(state, [1.0, 1.0], n_mc=100_000, seed=1)
    assert abs(est) > 4 * se


def test_stein_identity_needs_sampler():
    from steinpoints.targets import IGARCHPosterior, IGARCHSpec
    state = SteinKernel(IMQ, IGARCHPosterior(IGARCHSpec(np.array([0.1, -0.2, 0.3]))))
    with pytest.raises(NotImplementedError):
        stein_identity_check(state, [0.01, 0.1], n_mc=10)


# -- incremental builder -------------------------------------------------------------

def _full_ksd2(builder):
    return ksd(builder.points, SteinKernel(builder.state.kernel, builder.state.target.clone())) ** 2


def test_append_to_empty():
    b = SequenceBuilder(SteinKernel(IMQ, GaussianMixture()))
    x = np.array([0.3, 0.2])
    b.append(x)
    assert b.total_sum == pytest.approx(k0_eval(b.state, x, x), rel=1e-14)


@pytest.mark.parametrize("kernel", KERNELS)
def test_append_matches_full(kernel, rng):
    b = SequenceBuilder(SteinKernel(kernel, GaussianMixture()))
    prev = 0.0
    for n in range(1, 6):
        x = rng.normal(size=2)
        cross = sum(k0_eval(b.state, p, x) for p in b.points)
        b.append(x)
        assert b.ksd() ** 2 == pytest.approx(_full_ksd2(b), rel=1e-10)
        step = n**2 * b.ksd_squared() - (n - 1) ** 2 * prev
        assert step == pytest.approx(k0_eval(b.state, x, x) + 2 * cross, rel=1e-10, abs=1e-10)
        prev = b.ksd_squared()


def test_replace_examples(rng):
    b = SequenceBuilder(SteinKernel(IMQ, GaussianMixture()))
    for x in rng.normal(size=(6, 2)):
        b.append(x)
    t0, rows0 = b.total_sum, b.row_sums.copy()
    b.replace(2, b.points[2].copy())
    assert b.total_sum == pytest.approx(t0, abs=1e-12)
    np.testing.assert_allclose(b.row_sums, rows0, atol=1e-12)
    old = b.points[4].copy()
    b.replace(4, rng.normal(size=2))
    b.replace(4, old)
    assert b.total_sum == pytest.approx(t0, abs=1e-10)
    with pytest.raises(IndexError):
        b.replace(6, old)


def test_cached_scores_bitwise(rng):
    t = GaussianMixture()
    b = SequenceBuilder(SteinKernel(IMQ, t))
    X = rng.normal(size=(4, 2))
    for x in X:
        b.append(x)
    np.testing.assert_array_equal(b.scores, t.clone().grad_log_q(X))


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 10**6)), min_size=1, max_size=25),
       st.sampled_from(KERNELS))
def test_interleaved_append_replace(ops, kernel):
    b = SequenceBuilder(SteinKernel(kernel, GaussianMixture()))
    for is_replace, seed in ops:
        r = np.random.default_rng(seed)
        x = r.normal(scale=2.0, size=2)
        if is_replace and b.n > 0:
            b.replace(int(r.integers(b.n)), x)
        else:
            b.append(x)
        assert b.total_sum == pytest.approx(b.full_total(), rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(b.row_sums,
                                   b.state.gram(b.points, b.scores, b.jacobians).sum(0),
                                   rtol=1e-10, atol=1e-12)
