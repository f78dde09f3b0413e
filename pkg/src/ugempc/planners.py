"""Sampling-based planners.

Workflow per control step:

1. ``uge_to`` perturbs the nominal sequence into N candidates (index 0 is
   the unperturbed anchor), builds their trajectory distributions and runs
   K Hellinger-separation sweeps so the set spreads over distinct regions
   of the state space.
2. The candidates' mean rollouts are costed on the current map and the
   cheapest becomes the new nominal.
3. ``mppi_update`` refines it with L cost-weighted perturbation samples
   (softmax weights, stabilized by subtracting the minimum cost).
4. The first control is applied and the horizon shifts by one.

The plain MPPI baseline skips steps 1-2 and spends the whole sample budget
in step 3; the log-MPPI variant draws normal-log-normal perturbations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .cost import CostWeights, GoalSpec
from .rngstream import RngStream
from .uncertainty import (NLN, PerturbationModel, PropagationContext,
                          SeparationConfig, TrajectoryDistribution,
                          _sigma_factor, build_distribution, perturb, separate)
from .vehicle import (Control, ControlSequence, GaussianBelief,
                      VehicleParams, clamp_sequence)
from .world import Costmap, Footprint, _disc_offsets

__all__ = [
    "PlannerConfig", "PlannerState", "PlanningContext", "StepDiagnostics",
    "mppi_iteration", "mppi_step", "mppi_update", "nln_perturb",
    "select_best", "shift_sequence", "uge_iteration", "uge_mpc_step", "uge_to",
]

# rng phase labels (children of the per-step stream)
P_DRAW = 0  # initial candidate perturbations, keyed (P_DRAW, i)
P_SEP = 1   # separation sweeps, keyed (sweep, i) below this child
P_MPPI = 2  # final update samples


def _default_sigma_u() -> np.ndarray:
    return np.diag([0.4 ** 2, 0.2 ** 2])


def _default_q() -> np.ndarray:
    return np.diag([1e-4, 1e-4, 1e-4])


@dataclass(frozen=True)
class PlannerConfig:
    """Sampling budget split and noise model shared by all planners.

    The per-step rollout budget decomposes as n initial builds +
    n*m*k refinement candidates (upper bound; the anchor is never refined)
    + l final update samples.
    """
    t_steps: int = 80
    n: int = 16
    m: int = 8
    k: int = 8
    l: int = 1008
    sigma_u: np.ndarray = field(default_factory=_default_sigma_u)
    q: np.ndarray = field(default_factory=_default_q)
    temperature: float = 0.001
    budget: int | None = 2048
    eps: float = 1e-9

    def __post_init__(self):
        if self.t_steps < 1:
            raise ValueError("t_steps must be >= 1")
        for name in ("n", "m", "l"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        s = np.asarray(self.sigma_u, dtype=np.float64)
        if s.shape != (2, 2) or not np.isfinite(s).all():
            raise ValueError("sigma_u must be a finite 2x2 matrix")
        if np.linalg.eigvalsh(0.5 * (s + s.T)).min() < -1e-9:
            raise ValueError("sigma_u must be positive semidefinite")
        q = np.asarray(self.q, dtype=np.float64)
        if q.shape != (3, 3) or not np.isfinite(q).all():
            raise ValueError("q must be a finite 3x3 matrix")
        if np.linalg.eigvalsh(0.5 * (q + q.T)).min() < -1e-9:
            raise ValueError("q must be positive semidefinite")
        if self.budget is not None:
            if self.budget < 1:
                raise ValueError("budget must be >= 1 when set")
            if self.n + self.n * self.m * self.k + self.l > self.budget:
                raise ValueError("n + n*m*k + l exceeds the rollout budget")
        s = s.copy()
        s.setflags(write=False)
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "sigma_u", s)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class PlanningContext:
    """Everything a planner step needs besides the config: the (possibly
    range-limited) costmap, goal, cost weights, vehicle and footprint."""
    costmap: Costmap
    goal: GoalSpec
    weights: CostWeights
    params: VehicleParams
    footprint: Footprint

    def __post_init__(self):
        if self.footprint.kind != "disc":
            raise ValueError("planner cost evaluation requires a disc footprint")


@dataclass(frozen=True)
class PlannerState:
    nominal: ControlSequence
    solution_cost: float = math.inf


@dataclass
class StepDiagnostics:
    solution_cost: float
    rollouts_used: int
    sample_cost_min: float
    sample_cost_mean: float
    sample_cost_max: float
    candidate_costs: np.ndarray | None = None
    chosen_index: int | None = None
    candidate_rollouts: np.ndarray | None = None
    applied: Control | None = None


def shift_sequence(seq: ControlSequence) -> ControlSequence:
    """Drop the first control and repeat the last (receding horizon)."""
    a = seq.array
    return ControlSequence(np.vstack((a[1:], a[-1:])))


def select_best(costs) -> int:
    """Index of the minimum cost; ties go to the lowest index."""
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("costs must be a non-empty 1-D array")
    if np.isnan(c).any():
        raise ValueError("costs must not contain NaN")
    return int(np.argmin(c))


def nln_perturb(nominal: ControlSequence, model: PerturbationModel,
                params: VehicleParams, rng: np.random.Generator) -> ControlSequence:
    """Normal-log-normal perturbation (requires model.kind = NLN)."""
    if model.kind != NLN:
        raise ValueError("nln_perturb requires a normal-log-normal model")
    return perturb(nominal, model, params, rng)


def uge_to(nominal: ControlSequence, cfg: PlannerConfig, start: GaussianBelief,
           params: VehicleParams, rng: RngStream,
           trace: list | None = None) -> list[TrajectoryDistribution]:
    """Exploratory trajectory optimization: perturb, build, separate.

    Returns the N candidate trajectory distributions after K separation
    sweeps. Candidate 0 is the clamped, unperturbed nominal (the anchor);
    it is never refined, so the incoming solution always survives.
    """
    if len(nominal) != cfg.t_steps:
        raise ValueError("nominal length must equal cfg.t_steps")
    model = PerturbationModel(cfg.sigma_u)
    anchor = clamp_sequence(nominal, params)
    seqs = [anchor]
    for i in range(1, cfg.n):
        seqs.append(perturb(anchor, model, params, rng.substream(P_DRAW, i)))
    trajs = [build_distribution(start, s, params, cfg.q, cfg.eps) for s in seqs]
    if cfg.n < 2 or cfg.k == 0:
        return trajs
    ctx = PropagationContext(start, params, cfg.q)
    sep = SeparationConfig(cfg.m, cfg.k, cfg.eps)
    return separate(trajs, sep, model, ctx, rng.child(P_SEP), trace=trace)


def mppi_update(nominal: ControlSequence, cfg: PlannerConfig,
                cost_fn: Callable[[np.ndarray], np.ndarray],
                rng: np.random.Generator,
                perturbation: PerturbationModel | None = None,
                n_samples: int | None = None,
                stats_out: dict | None = None) -> ControlSequence:
    """Cost-weighted perturbation update around a nominal sequence.

    Draws L perturbations eta_l, evaluates J_l = cost_fn(U + eta) (cost_fn
    takes the raw (L, T, 2) sample batch and returns (L,) costs; clamping is
    the cost function's business) and returns

        U + sum_l w_l eta_l / sum_l w_l,   w_l = exp(-(J_l - min J) / lambda).

    Subtracting the minimum keeps the weights finite; the argmin sample
    always carries weight 1.
    """
    t = len(nominal)
    l_n = int(n_samples) if n_samples is not None else cfg.l
    if l_n < 1:
        raise ValueError("need at least one sample")
    model = perturbation if perturbation is not None else PerturbationModel(cfg.sigma_u)
    z = rng.standard_normal((l_n, t, 2))
    eta = z @ _sigma_factor(model.sigma_u).T
    if model.kind == NLN:
        g = np.exp(model.sigma_ln * rng.standard_normal((l_n, t)))
        eta = g[:, :, None] * eta
    samples = nominal.array[None, :, :] + eta
    j = np.asarray(cost_fn(samples), dtype=np.float64)
    if j.shape != (l_n,):
        raise ValueError("cost_fn must return one cost per sample")
    if np.isnan(j).any():
        raise ValueError("cost_fn returned NaN")
    jmin = float(j.min())
    if not math.isfinite(jmin):
        raise ValueError("all sample costs are non-finite")
    w = np.exp(-(j - jmin) / cfg.temperature)
    wsum = float(w.sum())
    if stats_out is not None:
        stats_out.update(min=jmin, mean=float(j.mean()), max=float(j.max()),
                         weight_sum=wsum)
    delta = np.einsum("l,ltk->tk", w, eta) / wsum
    return ControlSequence(nominal.array + delta)


def _sample_cost_fn(ctx: PlanningContext, x0: np.ndarray):
    """Batched cost of raw control samples: clamp, roll out, cost."""
    cm = ctx.costmap
    offs = _disc_offsets(ctx.footprint.radius, cm.resolution)
    p, w, g = ctx.params, ctx.weights, ctx.goal

    def fn(samples: np.ndarray) -> np.ndarray:
        out = np.empty(samples.shape[0])
        K.k_sample_costs(x0, samples, p.dt, p.wheelbase,
                         p.v_min, p.v_max, p.delta_max,
                         cm.cells, cm.origin[0], cm.origin[1], cm.resolution,
                         offs, g.x, g.y, g.tolerance,
                         w.lam_u, w.lam_obs, w.lam_dist, w.c_collided, out)
        return out

    return fn


def _mean_rollout_costs(trajs_means, ctrls, ctx: PlanningContext) -> np.ndarray:
    cm = ctx.costmap
    offs = _disc_offsets(ctx.footprint.radius, cm.resolution)
    w, g = ctx.weights, ctx.goal
    out = np.empty(trajs_means.shape[0])
    K.k_traj_cost_batch(trajs_means, ctrls, cm.cells,
                        cm.origin[0], cm.origin[1], cm.resolution, offs,
                        g.x, g.y, g.tolerance,
                        w.lam_u, w.lam_obs, w.lam_dist, w.c_collided, out)
    return out


def uge_iteration(nominal: ControlSequence, cfg: PlannerConfig,
                  belief: GaussianBelief, ctx: PlanningContext,
                  rng: RngStream) -> tuple[ControlSequence, StepDiagnostics]:
    """One full planner iteration without applying or shifting anything.

    Runs uge_to, picks the cheapest candidate mean rollout as the nominal
    and refines it with the final cost-weighted update. Returns the clamped
    updated sequence plus diagnostics.
    """
    cands = uge_to(nominal, cfg, belief, ctx.params, rng)
    means = np.stack([c.means for c in cands])
    ctrls = np.stack([c.controls.array for c in cands])
    costs = _mean_rollout_costs(means, ctrls, ctx)
    idx = select_best(costs)
    x0 = belief.mean.as_array()
    stats: dict = {}
    updated = mppi_update(cands[idx].controls, cfg, _sample_cost_fn(ctx, x0),
                          rng.substream(P_MPPI), stats_out=stats)
    updated = clamp_sequence(updated, ctx.params)
    solution_cost = float(_mean_rollout_costs(
        _rollout_one(x0, updated, ctx.params), updated.array[None], ctx)[0])
    # budget accounting: n initial builds + n*m*k refinement candidates
    # (upper bound; the anchor is never refined) + l update samples
    rollouts = cfg.n + cfg.n * cfg.m * cfg.k + cfg.l
    diag = StepDiagnostics(
        solution_cost=solution_cost, rollouts_used=rollouts,
        sample_cost_min=stats["min"], sample_cost_mean=stats["mean"],
        sample_cost_max=stats["max"], candidate_costs=costs,
        chosen_index=idx, candidate_rollouts=means)
    return updated, diag


def _rollout_one(x0: np.ndarray, seq: ControlSequence,
                 params: VehicleParams) -> np.ndarray:
    out = np.empty((1, len(seq) + 1, 3))
    K.k_rollout_batch(x0, seq.array[None], params.dt, params.wheelbase, out)
    return out


def mppi_iteration(nominal: ControlSequence, cfg: PlannerConfig,
                   belief: GaussianBelief, ctx: PlanningContext,
                   rng: RngStream,
                   perturbation: PerturbationModel | None = None
                   ) -> tuple[ControlSequence, StepDiagnostics]:
    """One baseline MPPI iteration: the whole rollout budget goes into the
    cost-weighted update (the belief covariance is ignored)."""
    _check_len(nominal, cfg)
    l_n = cfg.budget if cfg.budget is not None else cfg.l
    seq = clamp_sequence(nominal, ctx.params)
    x0 = belief.mean.as_array()
    stats: dict = {}
    updated = mppi_update(seq, cfg, _sample_cost_fn(ctx, x0),
                          rng.substream(P_MPPI), perturbation=perturbation,
                          n_samples=l_n, stats_out=stats)
    updated = clamp_sequence(updated, ctx.params)
    solution_cost = float(_mean_rollout_costs(
        _rollout_one(x0, updated, ctx.params), updated.array[None], ctx)[0])
    diag = StepDiagnostics(
        solution_cost=solution_cost, rollouts_used=l_n,
        sample_cost_min=stats["min"], sample_cost_mean=stats["mean"],
        sample_cost_max=stats["max"])
    return updated, diag


def _check_len(seq: ControlSequence, cfg: PlannerConfig):
    if len(seq) != cfg.t_steps:
        raise ValueError("nominal length must equal cfg.t_steps")


def uge_mpc_step(st: PlannerState, cfg: PlannerConfig, belief: GaussianBelief,
                 ctx: PlanningContext, rng: RngStream
                 ) -> tuple[Control, PlannerState, StepDiagnostics]:
    """One closed-loop control step: plan, apply the first control, shift."""
    _check_len(st.nominal, cfg)
    updated, diag = uge_iteration(st.nominal, cfg, belief, ctx, rng)
    applied = updated[0]
    diag.applied = applied
    new_state = PlannerState(shift_sequence(updated), diag.solution_cost)
    return applied, new_state, diag


def mppi_step(st: PlannerState, cfg: PlannerConfig, belief: GaussianBelief,
              ctx: PlanningContext, rng: RngStream,
              perturbation: PerturbationModel | None = None
              ) -> tuple[Control, PlannerState, StepDiagnostics]:
    """Baseline MPPI control step (log-MPPI when given an NLN model)."""
    updated, diag = mppi_iteration(st.nominal, cfg, belief, ctx, rng,
                                   perturbation)
    applied = updated[0]
    diag.applied = applied
    new_state = PlannerState(shift_sequence(updated), diag.solution_cost)
    return applied, new_state, diag
