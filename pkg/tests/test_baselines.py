import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from steinpoints.algorithms import first_point
from steinpoints.baselines import (MedConfig, MedInstabilityError, SvgdConfig, SvgdError,
                                   grid_init, med_energy, med_greedy, svgd_direction, svgd_run)
from steinpoints.kernels import KernelParams
from steinpoints.optimize import FiniteSetSearch, OptimizerConfig, ProposalConfig, SearchSpace
from steinpoints.targets import GaussianMixture, TargetDensity, standard_normal

IMQ = KernelParams("imq", 1.0, -0.5)
LINE = SearchSpace([-5.0], [5.0])
GRID_1D = np.linspace(-5.0, 5.0, 1001)


class Flat(TargetDensity):
    def __init__(self, dim=1):
        super().__init__()
        self.dim = dim

    def _log_q(self, X):
        return np.zeros(len(X))

    def _grad(self, X):
        return np.zeros_like(X)


def naive_energy(X, p, delta):
    d = X.shape[1]
    tot = 0.0
    for i in range(len(X)):
        for j in range(len(X)):
            if i != j:
                r = np.linalg.norm(X[i] - X[j])
                tot += (p(X[i]) ** (-1 / (2 * d)) * p(X[j]) ** (-1 / (2 * d)) / r) ** delta
    return tot


# -- MED energy -----------------------------------------------------------------------

def test_energy_two_points_flat():
    assert med_energy([[0.0], [0.4]], Flat(), 1.0) == pytest.approx(2 / 0.4, rel=1e-14)


def test_energy_homogeneity(rng):
    X = rng.normal(size=(5, 2))
    e1 = med_energy(X, Flat(2), 3.0)
    e2 = med_energy(2 * X, Flat(2), 3.0)
    assert e2 == pytest.approx(e1 / 2**3, rel=1e-12)


def test_energy_direct_sum_oracle(rng):
    X = rng.normal(size=(3, 1))
    p = lambda x: math.exp(-0.5 * float(x @ x)) / math.sqrt(2 * math.pi)  # noqa: E731
    assert med_energy(X, standard_normal(1), 2.5) == pytest.approx(naive_energy(X, p, 2.5),
                                                                    rel=1e-10)


def test_energy_coincident_and_overflow():
    assert med_energy([[1.0], [1.0]], Flat(), 2.0) == math.inf

    class Tiny(Flat):
        def _log_q(self, X):
            return np.full(len(X), -1e6)

    with pytest.raises(MedInstabilityError):
        med_energy([[0.0], [1.0]], Tiny(), 4.0)


@given(st.integers(0, 10**6))
def test_energy_permutation_invariant_and_decreasing(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(4, 2))
    e = med_energy(X, Flat(2), 4.0)
    assert med_energy(X[r.permutation(4)], Flat(2), 4.0) == pytest.approx(e, rel=1e-12)
    far = X * 1.1
    assert med_energy(far, Flat(2), 4.0) < e


# -- MED sequences -------------------------------------------------------------------------

def med_cfg(n, delta=4.0, kind="gs"):
    return MedConfig(LINE, n, delta, OptimizerConfig(kind), IMQ, seed=0)


def test_med_n1_is_first_point():
    search = FiniteSetSearch(GRID_1D[:, None])
    pts, _ = med_greedy(standard_normal(1), med_cfg(1), searcher=search)
    np.testing.assert_array_equal(pts[0], first_point(standard_normal(1), search))


def test_med_second_point_matches_exhaustive():
    search = FiniteSetSearch(GRID_1D[:, None])
    delta = 4.0
    pts, _ = med_greedy(standard_normal(1), med_cfg(2, delta), searcher=search)
    x1 = pts[0, 0]
    p = np.exp(-0.5 * GRID_1D**2)
    with np.errstate(divide="ignore"):
        obj = p ** (-delta / 2) * math.exp(-0.5 * x1**2) ** (-delta / 2) / np.abs(GRID_1D - x1) ** delta
    assert pts[1, 0] == GRID_1D[np.argmin(obj)]
    assert pts[1, 0] != x1


def test_med_counts_only_log_density():
    t = GaussianMixture()
    cfg = MedConfig(SearchSpace([-5, -5], [5, 5]), 6, None,
                    OptimizerConfig("mc", ProposalConfig(n_test=20)), IMQ, seed=1)
    pts, trace = med_greedy(t, cfg)
    assert t.counts().n_grad == 0
    assert t.counts().n_logp == 20 * 6
    assert trace.column("n_logp").tolist() == [20 * m for m in range(1, 7)]
    assert cfg.resolved_delta(2) == 8.0
    with pytest.raises(ValueError):
        MedConfig(LINE, 3, 0.5)


def test_med_deterministic():
    cfg = MedConfig(SearchSpace([-5, -5], [5, 5]), 5, 8.0, OptimizerConfig("mc"), IMQ, seed=4)
    a, _ = med_greedy(GaussianMixture(), cfg)
    b, _ = med_greedy(GaussianMixture(), cfg)
    np.testing.assert_array_equal(a, b)


# -- SVGD ----------------------------------------------------------------------------------------

def test_svgd_single_particle_at_mode():
    cfg = SvgdConfig(LINE, 1, IMQ, n_iterations=50)
    x, trace = svgd_run(standard_normal(1), cfg, init=[[0.0]])
    assert x[0, 0] == 0.0
    assert len(trace) == 51


@pytest.mark.parametrize("a", [0.3, 1.0, 2.7])
def test_svgd_symmetric_pair(a):
    cfg = SvgdConfig(LINE, 2, IMQ, n_iterations=300)
    x, _ = svgd_run(standard_normal(1), cfg, init=[[-a], [a]])
    assert abs(x[0, 0] + x[1, 0]) <= 1e-10


def test_svgd_permutation_equivariant(rng):
    X = rng.normal(size=(6, 2))
    t = GaussianMixture()
    S = t.grad_log_q(X)
    perm = rng.permutation(6)
    np.testing.assert_allclose(svgd_direction(IMQ, X[perm], S[perm])[:, :],
                               svgd_direction(IMQ, X, S)[perm], rtol=1e-12, atol=1e-14)


def test_svgd_direction_direct_formula(rng):
    X = rng.normal(size=(4, 1))
    S = -X
    b = -0.5
    phi = np.zeros(4)
    for i in range(4):
        for l in range(4):
            r = X[l, 0] - X[i, 0]
            k = (1 + r * r) ** b
            phi[i] += k * S[l, 0] + 2 * b * (1 + r * r) ** (b - 1) * r
    np.testing.assert_allclose(svgd_direction(IMQ, X, S)[:, 0], phi / 4, rtol=1e-12)


def test_svgd_accounting_and_grid():
    t = GaussianMixture()
    cfg = SvgdConfig(SearchSpace([-5, -5], [5, 5]), 9, IMQ, n_iterations=10)
    X, trace = svgd_run(t, cfg)
    assert t.counts().n_grad == 9 * 11 and t.counts().n_logp == 0
    assert trace.column("n_grad").tolist() == [9 * (m + 1) for m in range(11)]
    G = grid_init(SearchSpace([-5, -5], [5, 5]), 7)
    assert G.shape == (7, 2)
    np.testing.assert_array_equal(G[0], [-5, -5])
    np.testing.assert_array_equal(grid_init(LINE, 1), [[0.0]])


def test_svgd_nonfinite_update_reported():
    class Blowup(Flat):
        def _grad(self, X):
            return np.where(X > 0, np.inf, 0.0)

    with pytest.raises(SvgdError, match="iteration 1, particle"):
        svgd_run(Blowup(), SvgdConfig(LINE, 3, IMQ, n_iterations=5))


def test_svgd_config_validation():
    with pytest.raises(ValueError):
        SvgdConfig(LINE, 3, master_step=0.0)
    with pytest.raises(ValueError):
        SvgdConfig(LINE, 3, momentum=1.0)


@given(st.lists(st.floats(0.05, 4.0), min_size=1, max_size=8), st.booleans())
def test_svgd_direction_reflection_exact(half, centre):
    h = np.array(half)
    X = np.concatenate([-h, [0.0] * centre, h])[:, None]
    phi = svgd_direction(IMQ, X, -X)
    m = len(h)
    np.testing.assert_array_equal(phi[:m], -phi[m + centre:])
    if centre:
        assert phi[m, 0] == 0.0
