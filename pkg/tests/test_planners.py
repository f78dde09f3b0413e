import math

import numpy as np
import pytest

from ugempc import (
    Control,
    ControlSequence,
    CostWeights,
    Footprint,
    GaussianBelief,
    GoalSpec,
    ObstacleSet,
    PerturbationModel,
    PlannerConfig,
    PlannerState,
    PlanningContext,
    RngStream,
    State,
    VehicleParams,
    clamp_sequence,
    mean_pairwise_separation,
    mppi_step,
    mppi_update,
    nln_perturb,
    rasterize,
    select_best,
    shift_sequence,
    uge_mpc_step,
    uge_to,
    rollout,
)
from ugempc.planners import uge_iteration

PARAMS = VehicleParams(delta_max=0.5)
START = GaussianBelief(State(0.0, 0.0, 0.0), np.diag([1e-4, 1e-4, 1e-4]))
EMPTY_MAP = rasterize(ObstacleSet(), (-8, -8, 8, 8), 0.1)


def small_cfg(**kw):
    base = dict(t_steps=20, n=6, m=3, k=2, l=50,
                sigma_u=np.diag([0.04, 0.01]), q=np.diag([1e-3] * 3),
                temperature=0.01)
    base.update(kw)
    return PlannerConfig(**base)


def ctx_for(goal=(4.0, 0.0), costmap=EMPTY_MAP, lam_u=0.0):
    return PlanningContext(
        costmap=costmap,
        goal=GoalSpec(goal[0], goal[1], tolerance=0.3),
        weights=CostWeights(lam_u=lam_u, lam_obs=50.0, lam_dist=10.0),
        params=PARAMS,
        footprint=Footprint("disc", 0.25),
    )


# ---------------------------------------------------------------------------
# small pieces
# ---------------------------------------------------------------------------

def test_shift_sequence():
    seq = ControlSequence(np.array([[1.0, 0.1], [2.0, 0.2], [3.0, 0.3]]))
    np.testing.assert_array_equal(
        shift_sequence(seq).array, [[2.0, 0.2], [3.0, 0.3], [3.0, 0.3]])
    const = ControlSequence.constant(0.5, 0.1, 7)
    assert shift_sequence(const) == const
    assert len(shift_sequence(seq)) == len(seq)


def test_select_best():
    assert select_best([3.0, 1.0, 2.0]) == 1
    assert select_best([5.0]) == 0
    assert select_best([2.0, 2.0]) == 0  # ties to the lowest index
    assert select_best([math.inf, 4.0]) == 1
    with pytest.raises(ValueError):
        select_best([])
    with pytest.raises(ValueError):
        select_best([1.0, math.nan])


def test_planner_config_validation():
    with pytest.raises(ValueError):
        small_cfg(temperature=0.0)
    with pytest.raises(ValueError):
        small_cfg(sigma_u=np.diag([-0.1, 0.1]))
    with pytest.raises(ValueError):
        small_cfg(n=16, m=8, k=8, l=1009)  # 16 + 1024 + 1009 > 2048
    cfg = PlannerConfig()  # defaults consume the budget exactly
    assert cfg.n + cfg.n * cfg.m * cfg.k + cfg.l == cfg.budget == 2048


def test_planning_context_requires_disc():
    with pytest.raises(ValueError):
        PlanningContext(EMPTY_MAP, GoalSpec(1.0, 0.0), CostWeights(), PARAMS,
                        Footprint("polygon", vertices=np.array(
                            [[-0.1, -0.1], [0.1, -0.1], [0.0, 0.1]])))


# ---------------------------------------------------------------------------
# mppi_update
# ---------------------------------------------------------------------------

def test_mppi_update_single_sample_returns_that_sample():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.5, 0.0, 20)
    seen = {}

    def cost_fn(samples):
        seen["s"] = samples.copy()
        return np.zeros(samples.shape[0])

    out = mppi_update(nominal, cfg, cost_fn, np.random.default_rng(0),
                      n_samples=1)
    np.testing.assert_array_equal(out.array, seen["s"][0])


def test_mppi_update_equal_costs_average():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.2, 0.0, 20)
    seen = {}

    def cost_fn(samples):
        seen["s"] = samples.copy()
        return np.full(samples.shape[0], 7.0)

    out = mppi_update(nominal, cfg, cost_fn, np.random.default_rng(1),
                      n_samples=2)
    want = seen["s"].mean(axis=0)
    np.testing.assert_allclose(out.array, want, atol=1e-15)


def test_mppi_update_cost_shift_invariance():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.1, 0.0, 20)

    def run(shift):
        def cost_fn(samples):
            return samples[:, :, 0].sum(axis=1) ** 2 + shift
        return mppi_update(nominal, cfg, cost_fn,
                           np.random.default_rng(3), n_samples=64).array

    np.testing.assert_allclose(run(0.0), run(1000.0), atol=1e-9)


def test_mppi_update_low_temperature_argmin_limit():
    cfg = small_cfg(temperature=1e-12)
    nominal = ControlSequence.constant(0.0, 0.0, 20)
    seen = {}

    def cost_fn(samples):
        seen["s"] = samples.copy()
        return np.abs(samples).sum(axis=(1, 2))

    out = mppi_update(nominal, cfg, cost_fn, np.random.default_rng(5),
                      n_samples=32)
    best = int(np.argmin(np.abs(seen["s"]).sum(axis=(1, 2))))
    np.testing.assert_allclose(out.array, seen["s"][best], atol=1e-6)


def test_mppi_update_rejects_nan_costs():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.0, 0.0, 20)
    with pytest.raises(ValueError):
        mppi_update(nominal, cfg, lambda s: np.full(s.shape[0], np.nan),
                    np.random.default_rng(0), n_samples=4)
    with pytest.raises(ValueError):
        mppi_update(nominal, cfg, lambda s: np.full(s.shape[0], np.inf),
                    np.random.default_rng(0), n_samples=4)


def test_mppi_update_stats_out():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.0, 0.0, 20)
    stats = {}
    mppi_update(nominal, cfg, lambda s: np.arange(s.shape[0], dtype=float),
                np.random.default_rng(2), n_samples=8, stats_out=stats)
    assert stats["min"] == 0.0 and stats["max"] == 7.0 and stats["mean"] == 3.5
    assert stats["weight_sum"] >= 1.0  # the argmin sample carries weight 1


# ---------------------------------------------------------------------------
# nln_perturb
# ---------------------------------------------------------------------------

def test_nln_perturb_requires_nln_model():
    gaussian = PerturbationModel(np.diag([0.04, 0.01]))
    with pytest.raises(ValueError):
        nln_perturb(ControlSequence.constant(0, 0, 5), gaussian, PARAMS,
                    np.random.default_rng(0))
    model = PerturbationModel(np.diag([0.04, 0.01]), kind="normal-log-normal")
    out = nln_perturb(ControlSequence.constant(0.3, 0.0, 30), model, PARAMS,
                      np.random.default_rng(0))
    assert len(out) == 30
    again = nln_perturb(ControlSequence.constant(0.3, 0.0, 30), model, PARAMS,
                        np.random.default_rng(0))
    assert out == again


# ---------------------------------------------------------------------------
# uge_to
# ---------------------------------------------------------------------------

def test_uge_to_anchor_and_count():
    cfg = small_cfg()
    nominal = ControlSequence.constant(2.0, 0.0, 20)  # clamping visible
    cands = uge_to(nominal, cfg, START, PARAMS, RngStream(7))
    assert len(cands) == cfg.n
    np.testing.assert_array_equal(
        cands[0].controls.array, clamp_sequence(nominal, PARAMS).array)
    for c in cands:
        assert c.t_steps == 20
        np.testing.assert_array_equal(c.means[0], START.mean.as_array())


def test_uge_to_zero_noise_degenerates():
    cfg = small_cfg(sigma_u=np.zeros((2, 2)))
    nominal = ControlSequence.constant(0.5, 0.1, 20)
    cands = uge_to(nominal, cfg, START, PARAMS, RngStream(1))
    for c in cands[1:]:
        np.testing.assert_array_equal(c.controls.array,
                                      cands[0].controls.array)
    assert mean_pairwise_separation(cands) == 0.0


def test_uge_to_spreads_the_set():
    cfg = small_cfg(n=8, m=4, k=3)
    nominal = ControlSequence.constant(0.5, 0.0, 20)
    strm = RngStream(11)
    cands = uge_to(nominal, cfg, START, PARAMS, strm)
    # rebuild the pre-separation set from the same draw substreams
    from ugempc import build_distribution, perturb
    model = PerturbationModel(cfg.sigma_u)
    anchor = clamp_sequence(nominal, PARAMS)
    before = [build_distribution(START, anchor, PARAMS, cfg.q)]
    for i in range(1, cfg.n):
        seq = perturb(anchor, model, PARAMS, strm.substream(0, i))
        before.append(build_distribution(START, seq, PARAMS, cfg.q))
    assert (mean_pairwise_separation(cands)
            >= mean_pairwise_separation(before))


def test_uge_to_deterministic():
    cfg = small_cfg()
    nominal = ControlSequence.constant(0.5, 0.0, 20)
    a = uge_to(nominal, cfg, START, PARAMS, RngStream(42))
    b = uge_to(nominal, cfg, START, PARAMS, RngStream(42))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.controls.array, y.controls.array)
        np.testing.assert_array_equal(x.means, y.means)


def test_uge_to_length_mismatch():
    with pytest.raises(ValueError):
        uge_to(ControlSequence.constant(0.5, 0.0, 19), small_cfg(), START,
               PARAMS, RngStream(0))


# ---------------------------------------------------------------------------
# full iterations
# ---------------------------------------------------------------------------

def test_uge_iteration_diagnostics_and_budget():
    cfg = small_cfg()
    ctx = ctx_for()
    nominal = ControlSequence.constant(0.5, 0.0, 20)
    updated, diag = uge_iteration(nominal, cfg, START, ctx, RngStream(3))
    assert len(updated) == cfg.t_steps
    assert diag.rollouts_used == cfg.n + cfg.n * cfg.m * cfg.k + cfg.l
    assert diag.rollouts_used <= cfg.budget
    assert diag.candidate_costs.shape == (cfg.n,)
    assert diag.candidate_rollouts.shape == (cfg.n, cfg.t_steps + 1, 3)
    assert 0 <= diag.chosen_index < cfg.n
    assert math.isfinite(diag.solution_cost)
    assert diag.sample_cost_min <= diag.sample_cost_mean <= diag.sample_cost_max
    # the anchor is the incoming nominal, so selection can only improve on it
    assert (diag.candidate_costs[diag.chosen_index]
            <= diag.candidate_costs[0])
    # output controls respect the clamp box
    assert np.all(updated.array[:, 0] <= PARAMS.v_max)
    assert np.all(np.abs(updated.array[:, 1]) <= PARAMS.delta_max)


def test_uge_mpc_step_moves_toward_open_goal():
    cfg = small_cfg()
    ctx = ctx_for(goal=(4.0, 0.0))
    st = PlannerState(ControlSequence.constant(0.0, 0.0, 20))
    strm = RngStream(9)
    belief = START
    vs = []
    for i in range(3):
        applied, st, diag = uge_mpc_step(st, cfg, belief, ctx, strm.child(i))
        vs.append(applied.v)
        assert diag.applied == applied
        assert len(st.nominal) == cfg.t_steps
    assert max(vs) > 0.0


def test_uge_mpc_step_zero_noise_keeps_anchor():
    cfg = small_cfg(sigma_u=np.zeros((2, 2)))
    ctx = ctx_for()
    nominal = ControlSequence.constant(0.4, 0.0, 20)
    applied, st, diag = uge_mpc_step(PlannerState(nominal), cfg, START, ctx,
                                     RngStream(2))
    assert diag.chosen_index == 0
    # all-zero perturbations: the update returns the nominal itself
    assert applied == Control(0.4, 0.0)
    assert st.nominal == nominal  # constant sequence is shift-invariant


def test_mppi_step_zero_noise_is_shift_only():
    cfg = small_cfg(sigma_u=np.zeros((2, 2)))
    ctx = ctx_for()
    nominal = ControlSequence(
        np.linspace([0.1, -0.2], [0.9, 0.2], 20))
    applied, st, diag = mppi_step(PlannerState(nominal), cfg, START, ctx,
                                  RngStream(4))
    assert applied == nominal[0]
    np.testing.assert_allclose(st.nominal.array,
                               shift_sequence(nominal).array, atol=1e-15)


def test_mppi_step_uses_full_budget():
    cfg = small_cfg()
    ctx = ctx_for()
    st = PlannerState(ControlSequence.constant(0.0, 0.0, 20))
    _, _, diag = mppi_step(st, cfg, START, ctx, RngStream(5))
    assert diag.rollouts_used == cfg.budget
    assert diag.candidate_costs is None  # no refinement phase


def test_steps_deterministic():
    cfg = small_cfg()
    ctx = ctx_for()
    st = PlannerState(ControlSequence.constant(0.0, 0.0, 20))
    a1, sa, _ = uge_mpc_step(st, cfg, START, ctx, RngStream(77))
    a2, sb, _ = uge_mpc_step(st, cfg, START, ctx, RngStream(77))
    assert a1 == a2
    assert sa.nominal == sb.nominal
    m1, _, _ = mppi_step(st, cfg, START, ctx, RngStream(78))
    m2, _, _ = mppi_step(st, cfg, START, ctx, RngStream(78))
    assert m1 == m2


def test_log_mppi_variant_differs_but_is_deterministic():
    cfg = small_cfg()
    ctx = ctx_for()
    nln = PerturbationModel(cfg.sigma_u, kind="normal-log-normal",
                            sigma_ln=0.3)
    st = PlannerState(ControlSequence.constant(0.0, 0.0, 20))
    a, _, _ = mppi_step(st, cfg, START, ctx, RngStream(6), perturbation=nln)
    b, _, _ = mppi_step(st, cfg, START, ctx, RngStream(6), perturbation=nln)
    g, _, _ = mppi_step(st, cfg, START, ctx, RngStream(6))
    assert a == b
    assert a != g


def test_planner_rollout_consistency():
    # diag.candidate_rollouts rows are true rollouts of the candidate controls
    cfg = small_cfg()
    ctx = ctx_for()
    nominal = ControlSequence.constant(0.3, 0.0, 20)
    strm = RngStream(12)
    cands = uge_to(nominal, cfg, START, PARAMS, strm)
    for c in cands:
        path = rollout(START.mean, c.controls, PARAMS)
        np.testing.assert_array_equal(
            c.means, np.array([s.as_array() for s in path]))
