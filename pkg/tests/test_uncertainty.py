import math

import numpy as np
import pytest

from ugempc import _kernels as K
from ugempc import (
    ControlSequence,
    GaussianBelief,
    NumericalDegeneracyError,
    PerturbationModel,
    PropagationContext,
    RngStream,
    SeparationConfig,
    State,
    TrajectoryDistribution,
    VehicleParams,
    build_distribution,
    clamp_sequence,
    hellinger_sq_block,
    hellinger_sq_trajectory,
    jacobian,
    mean_pairwise_separation,
    perturb,
    propagate_covariance,
    rollout,
    separate,
    separation_score,
    step,
)


def belief(mean, cov):
    return GaussianBelief(State(*mean), np.asarray(cov, dtype=np.float64))


# ---------------------------------------------------------------------------
# squared Hellinger distance: frozen closed-form values
# ---------------------------------------------------------------------------
# Reference values computed from the standard Gaussian overlap formula
#   BC = det(S1)^(1/4) det(S2)^(1/4) / det((S1+S2)/2)^(1/2)
#        * exp(-(1/8) dmu^T ((S1+S2)/2)^(-1) dmu)
# with 30-digit arithmetic.

def test_block_mean_shift_identity_covs():
    a = belief([0, 0, 0], np.eye(3))
    b = belief([2, 0, 0], np.eye(3))
    assert hellinger_sq_block(a, b) == pytest.approx(0.3934693402873666, abs=1e-7)


def test_block_scale_only():
    a = belief([0, 0, 0], np.eye(3))
    b = belief([0, 0, 0], 9 * np.eye(3))
    assert hellinger_sq_block(a, b) == pytest.approx(0.5352419984551100, abs=1e-7)


def test_block_mixed_shift_and_shape():
    a = belief([0, 0, 0], np.eye(3))
    b = belief([1, -1, 0.5], np.diag([2.0, 1.0, 0.5]))
    assert hellinger_sq_block(a, b) == pytest.approx(0.2657395801290883, abs=1e-7)


def test_block_correlated_covariances():
    s1 = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
    s2 = np.array([[0.8, -0.1, 0.1], [-0.1, 1.2, 0.0], [0.1, 0.0, 0.9]])
    a = belief([0.2, -0.4, 0.1], s1)
    b = belief([-0.3, 0.5, 0.0], s2)
    assert hellinger_sq_block(a, b) == pytest.approx(0.1895253067735995, abs=1e-7)


def test_block_identity_is_exact_zero():
    a = belief([0.5, -1.0, 0.25], np.diag([0.1, 0.2, 0.3]))
    b = belief([0.5, -1.0, 0.25], np.diag([0.1, 0.2, 0.3]))
    assert hellinger_sq_block(a, b) == 0.0


def test_block_symmetry_exact():
    rng = np.random.default_rng(21)
    for _ in range(20):
        m1, m2 = rng.normal(size=(2, 3))
        a1 = rng.normal(size=(3, 3))
        a2 = rng.normal(size=(3, 3))
        s1 = a1 @ a1.T + 0.1 * np.eye(3)
        s2 = a2 @ a2.T + 0.1 * np.eye(3)
        x = hellinger_sq_block(belief(m1, s1), belief(m2, s2))
        y = hellinger_sq_block(belief(m2, s2), belief(m1, s1))
        assert x == y
        assert 0.0 <= x <= 1.0


def test_block_monotone_in_mean_distance():
    s = np.diag([0.5, 0.5, 0.5])
    vals = [
        hellinger_sq_block(belief([0, 0, 0], s), belief([d, 0, 0], s))
        for d in np.linspace(0.0, 3.0, 13)
    ]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_block_importance_sampling_oracle():
    # 1 - H^2 is the Bhattacharyya coefficient E_{x~p}[sqrt(q(x)/p(x))];
    # check the closed form against a Monte-Carlo estimate.
    from scipy.stats import multivariate_normal

    rng = np.random.default_rng(3)
    for _ in range(10):
        m1 = rng.uniform(-1, 1, 3)
        m2 = m1 + rng.uniform(-1, 1, 3)
        a1 = rng.normal(size=(3, 3))
        a2 = rng.normal(size=(3, 3))
        s1 = a1 @ a1.T + 0.5 * np.eye(3)
        s2 = a2 @ a2.T + 0.5 * np.eye(3)
        p = multivariate_normal(m1, s1)
        q = multivariate_normal(m2, s2)
        x = p.rvs(100_000, random_state=rng)
        bc_mc = np.exp(0.5 * (q.logpdf(x) - p.logpdf(x))).mean()
        h2 = hellinger_sq_block(belief(m1, s1), belief(m2, s2))
        assert 1.0 - h2 == pytest.approx(bc_mc, abs=2e-2)


# ---------------------------------------------------------------------------
# trajectory-level distance
# ---------------------------------------------------------------------------

PARAMS = VehicleParams(delta_max=0.5)
Q = np.diag([1e-3, 1e-3, 1e-3])
START = GaussianBelief(State(0.0, 0.0, 0.0), np.diag([1e-4, 1e-4, 1e-4]))


def dist_for(seq):
    return build_distribution(START, seq, PARAMS, Q)


def test_trajectory_identity_and_symmetry():
    a = dist_for(ControlSequence.constant(0.5, 0.1, 30))
    b = dist_for(ControlSequence.constant(0.4, -0.2, 30))
    assert hellinger_sq_trajectory(a, a) == 0.0
    assert hellinger_sq_trajectory(a, b) == hellinger_sq_trajectory(b, a)
    assert 0.0 <= hellinger_sq_trajectory(a, b) <= 1.0


def test_trajectory_skips_shared_start_block():
    seq = ControlSequence.constant(0.0, 0.0, 1)
    means_a = np.array([[9.0, 9.0, 9.0], [1.0, 0.0, 0.0]])
    means_b = np.array([[-5.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    covs = np.tile(np.eye(3), (2, 1, 1))
    a = TrajectoryDistribution(means_a, covs, seq)
    b = TrajectoryDistribution(means_b, covs, seq)
    # the start blocks differ wildly but are skipped by definition
    assert hellinger_sq_trajectory(a, b) == 0.0


def test_trajectory_horizon_mismatch():
    a = dist_for(ControlSequence.constant(0.5, 0.0, 10))
    b = dist_for(ControlSequence.constant(0.5, 0.0, 11))
    with pytest.raises(ValueError):
        hellinger_sq_trajectory(a, b)


def test_trajectory_factorizes_over_blocks():
    # log BC accumulates over t >= 1: 1 - H2(traj) = prod_t (1 - H2(block_t))
    a = dist_for(ControlSequence.constant(0.6, 0.1, 12))
    b = dist_for(ControlSequence.constant(0.4, -0.1, 12))
    bc = 1.0
    for t in range(1, 13):
        bc *= 1.0 - hellinger_sq_block(a.belief(t), b.belief(t))
    assert hellinger_sq_trajectory(a, b) == pytest.approx(1.0 - bc, abs=1e-12)


def test_trajectory_kernel_matches_reference():
    rng = np.random.default_rng(17)
    eps = 1e-9
    for _ in range(10):
        seq = ControlSequence(rng.uniform([-1, -0.5], [1, 0.5], size=(25, 2)))
        seq2 = ControlSequence(rng.uniform([-1, -0.5], [1, 0.5], size=(25, 2)))
        a = dist_for(seq)
        b = dist_for(seq2)
        lda = np.array([K.k_logdet3_reg(c, eps) for c in a.covs])
        ldb = np.array([K.k_logdet3_reg(c, eps) for c in b.covs])
        got = K.k_h2_traj(a.means, a.covs, lda, b.means, b.covs, ldb, eps)
        want = hellinger_sq_trajectory(a, b)
        assert got == pytest.approx(want, abs=1e-12)


def test_degenerate_covariance_raises():
    seq = ControlSequence.constant(0.0, 0.0, 1)
    covs = np.tile(-np.eye(3), (2, 1, 1))
    bad = TrajectoryDistribution(np.zeros((2, 3)), covs, seq, validate=False)
    good = dist_for(seq)
    with pytest.raises(NumericalDegeneracyError):
        hellinger_sq_trajectory(bad, good)


# ---------------------------------------------------------------------------
# perturbation sampling
# ---------------------------------------------------------------------------

def test_perturb_zero_noise_returns_clamped_nominal():
    model = PerturbationModel(np.zeros((2, 2)))
    nominal = ControlSequence(np.array([[5.0, 1.0], [-5.0, -1.0], [0.5, 0.1]]))
    out = perturb(nominal, model, PARAMS, np.random.default_rng(0))
    assert out == clamp_sequence(nominal, PARAMS)


def test_perturb_deterministic():
    model = PerturbationModel(np.diag([0.04, 0.01]))
    nominal = ControlSequence.constant(0.5, 0.0, 40)
    a = perturb(nominal, model, PARAMS, np.random.default_rng(5))
    b = perturb(nominal, model, PARAMS, np.random.default_rng(5))
    assert a == b


def test_perturb_gaussian_moments():
    # wide limits so clamping is inert; check mean ~ 0 and cov ~ sigma_u
    wide = VehicleParams(v_min=-100.0, v_max=100.0, delta_max=1.5)
    sigma = np.array([[0.04, 0.012], [0.012, 0.09]])
    model = PerturbationModel(sigma)
    nominal = ControlSequence.constant(0.0, 0.0, 2000)
    rng = np.random.default_rng(12)
    draws = []
    for _ in range(20):
        draws.append(perturb(nominal, model, wide, rng).array)
    eta = np.concatenate(draws)  # (40000, 2)
    np.testing.assert_allclose(eta.mean(axis=0), 0.0, atol=1e-2)
    np.testing.assert_allclose(np.cov(eta.T), sigma, atol=5e-3)


def test_perturb_nln_zero_sigma_matches_gaussian():
    g = PerturbationModel(np.diag([0.04, 0.01]))
    n = PerturbationModel(np.diag([0.04, 0.01]), kind="normal-log-normal",
                          sigma_ln=0.0)
    nominal = ControlSequence.constant(0.3, 0.0, 50)
    a = perturb(nominal, g, PARAMS, np.random.default_rng(9))
    b = perturb(nominal, n, PARAMS, np.random.default_rng(9))
    assert a == b


def test_perturb_nln_inflates_variance():
    # Var(exp(s Z) * N(0, v)) = exp(2 s^2) * v for independent Z ~ N(0,1)
    wide = VehicleParams(v_min=-100.0, v_max=100.0, delta_max=1.5)
    sln = 0.5
    model = PerturbationModel(np.diag([0.04, 0.01]), kind="normal-log-normal",
                              sigma_ln=sln)
    nominal = ControlSequence.constant(0.0, 0.0, 2000)
    rng = np.random.default_rng(31)
    draws = [perturb(nominal, model, wide, rng).array for _ in range(40)]
    eta = np.concatenate(draws)
    factor = math.exp(2 * sln * sln)
    assert eta[:, 0].var() == pytest.approx(0.04 * factor, rel=0.08)
    assert eta[:, 1].var() == pytest.approx(0.01 * factor, rel=0.08)


def test_perturbation_model_validation():
    with pytest.raises(ValueError):
        PerturbationModel(np.diag([0.1, -0.1]))
    with pytest.raises(ValueError):
        PerturbationModel(np.diag([0.1, 0.1]), kind="laplace")
    with pytest.raises(ValueError):
        PerturbationModel(np.diag([0.1, 0.1]), sigma_ln=-0.5)


# ---------------------------------------------------------------------------
# distribution building
# ---------------------------------------------------------------------------

def test_build_means_equal_rollout_exactly():
    seq = ControlSequence(
        np.random.default_rng(2).uniform([-1, -0.5], [1, 0.5], size=(30, 2)))
    d = dist_for(seq)
    path = rollout(START.mean, seq, PARAMS)
    for t, s in enumerate(path):
        np.testing.assert_array_equal(d.means[t], s.as_array())


def test_build_covs_match_dense_reference():
    rng = np.random.default_rng(13)
    seq = ControlSequence(rng.uniform([-1, -0.5], [1, 0.5], size=(40, 2)))
    d = dist_for(seq)
    np.testing.assert_array_equal(d.covs[0], START.cov)
    cov = np.asarray(START.cov)
    s = START.mean
    for t, u in enumerate(seq):
        cov = propagate_covariance(cov, jacobian(s, u, PARAMS), Q)
        s = step(s, u, PARAMS)
        np.testing.assert_allclose(d.covs[t + 1], cov, atol=1e-12)
    assert d.t_steps == 40
    assert d.belief(0).mean == START.mean


def test_distribution_immutable():
    d = dist_for(ControlSequence.constant(0.5, 0.0, 5))
    with pytest.raises((ValueError, RuntimeError)):
        d.means[0, 0] = 1.0
    with pytest.raises(AttributeError):
        d.means = None


# ---------------------------------------------------------------------------
# separation
# ---------------------------------------------------------------------------

def make_set(seed, n, t_steps=20, sv=0.05, sd=0.03):
    model = PerturbationModel(np.diag([sv * sv, sd * sd]))
    nominal = ControlSequence.constant(0.5, 0.0, t_steps)
    strm = RngStream(seed)
    ctx = PropagationContext(START, PARAMS, np.diag([0.01, 0.01, 0.01]))
    trajs = [build_distribution(START, nominal, PARAMS, ctx.process_noise)]
    for i in range(1, n):
        seq = perturb(nominal, model, PARAMS, strm.substream("init", i))
        trajs.append(build_distribution(START, seq, PARAMS, ctx.process_noise))
    return trajs, model, ctx, strm


def test_separate_scores_never_decrease():
    # the incumbent competes as candidate 0, so every accepted swap has
    # selected score >= incumbent score
    trajs, model, ctx, strm = make_set(100, n=8)
    trace = []
    separate(trajs, SeparationConfig(8, 4), model, ctx, strm.child("sep"),
             trace=trace)
    assert len(trace) == 4 * 7
    for sweep, i, incumbent, selected, which in trace:
        assert selected >= incumbent
        if which == 0:
            assert selected == incumbent


def test_separate_keeps_anchor_untouched():
    trajs, model, ctx, strm = make_set(7, n=6)
    before = trajs[0].controls.array.copy()
    out = separate(trajs, SeparationConfig(4, 3), model, ctx, strm.child("sep"))
    assert out[0] is trajs[0]
    np.testing.assert_array_equal(out[0].controls.array, before)


def test_separate_increases_mean_pairwise_distance():
    hits = 0
    for seed in range(20):
        trajs, model, ctx, strm = make_set(1000 + seed, n=8)
        before = mean_pairwise_separation(trajs)
        out = separate(trajs, SeparationConfig(8, 4), model, ctx,
                       strm.child("sep"))
        after = mean_pairwise_separation(out)
        assert 0.0 <= before <= after <= 1.0 or after > before
        if after > before:
            hits += 1
    assert hits >= 18


def test_separate_deterministic():
    trajs_a, model, ctx, strm_a = make_set(55, n=6)
    trajs_b, _, _, strm_b = make_set(55, n=6)
    out_a = separate(trajs_a, SeparationConfig(5, 3), model, ctx, strm_a.child("s"))
    out_b = separate(trajs_b, SeparationConfig(5, 3), model, ctx, strm_b.child("s"))
    for a, b in zip(out_a, out_b):
        np.testing.assert_array_equal(a.controls.array, b.controls.array)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.covs, b.covs)


def test_separate_zero_noise_is_identity():
    trajs, _, ctx, strm = make_set(3, n=5, sv=0.0, sd=0.0)
    model = PerturbationModel(np.zeros((2, 2)))
    before = [tr.controls.array.copy() for tr in trajs]
    out = separate(trajs, SeparationConfig(4, 2), model, ctx, strm.child("s"))
    for tr, b in zip(out, before):
        np.testing.assert_array_equal(tr.controls.array, b)
    assert mean_pairwise_separation(out) == 0.0


def test_separate_rejects_mixed_horizons():
    trajs, model, ctx, strm = make_set(1, n=3)
    odd = build_distribution(START, ControlSequence.constant(0.5, 0.0, 21),
                             PARAMS, ctx.process_noise)
    with pytest.raises(ValueError):
        separate([*trajs, odd], SeparationConfig(2, 1), model, ctx, strm.child("s"))


def test_separation_score_is_sum_of_pairwise():
    trajs, _, _, _ = make_set(8, n=5)
    cand, others = trajs[0], trajs[1:]
    want = sum(hellinger_sq_trajectory(cand, o) for o in others)
    assert separation_score(cand, others) == pytest.approx(want, abs=1e-12)


def test_mean_pairwise_matches_reference():
    trajs, _, _, _ = make_set(9, n=5)
    vals = [
        hellinger_sq_trajectory(trajs[i], trajs[j])
        for i in range(5)
        for j in range(i + 1, 5)
    ]
    assert mean_pairwise_separation(trajs) == pytest.approx(
        float(np.mean(vals)), abs=1e-12)
    assert mean_pairwise_separation(trajs[:1]) == 0.0
