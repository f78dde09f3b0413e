"""Trajectory distributions and Hellinger-distance separation.

A trajectory distribution approximates the closed-loop state distribution of
one control sequence as a block-diagonal Gaussian: independent N(mean_t,
cov_t) blocks obtained by propagating the mean through the nominal dynamics
and the covariance through the linearized dynamics.

Separation rewrites a set of trajectory distributions in place: sweep by
sweep, each non-anchor member is replaced by whichever of M fresh candidate
perturbations (or itself) maximizes the summed squared Hellinger distance to
the rest of the current set. Squared Hellinger distances factor across
blocks, so they are accumulated in log space; the shared t=0 block is
skipped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .rngstream import RngStream
from .vehicle import (ControlSequence, GaussianBelief, State, VehicleParams,
                      clamp_sequence)

__all__ = [
    "NumericalDegeneracyError", "PerturbationModel", "PropagationContext",
    "SeparationConfig", "TrajectoryDistribution", "build_distribution",
    "hellinger_sq_block", "hellinger_sq_trajectory", "mean_pairwise_separation",
    "perturb", "separate", "separation_score",
]

EPS_DEFAULT = 1e-9

GAUSSIAN = "gaussian"
NLN = "normal-log-normal"


class NumericalDegeneracyError(ArithmeticError):
    """A covariance became numerically singular despite regularization."""


def _check_psd2(m, name):
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (2, 2) or not np.isfinite(m).all():
        raise ValueError(f"{name} must be a finite 2x2 matrix")
    if not np.allclose(m, m.T, atol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m).min() < -1e-9:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


def _sigma_factor(sigma: np.ndarray) -> np.ndarray:
    """Some B with B @ B.T = sigma (Cholesky when possible)."""
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sigma)
        return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class PerturbationModel:
    """Control-space noise model for candidate generation.

    kind "gaussian" draws eta_t ~ N(0, sigma_u); "normal-log-normal"
    additionally multiplies each step's draw by g_t = exp(z_t),
    z_t ~ N(0, sigma_ln^2).
    """
    sigma_u: np.ndarray
    kind: str = GAUSSIAN
    sigma_ln: float = 0.1

    def __post_init__(self):
        s = _check_psd2(self.sigma_u, "sigma_u").copy()
        s.setflags(write=False)
        object.__setattr__(self, "sigma_u", s)
        if self.kind not in (GAUSSIAN, NLN):
            raise ValueError(f"unknown perturbation kind: {self.kind!r}")
        if not self.sigma_ln >= 0.0:
            raise ValueError("sigma_ln must be >= 0")


@dataclass(frozen=True)
class SeparationConfig:
    m_candidates: int
    k_sweeps: int
    eps: float = EPS_DEFAULT

    def __post_init__(self):
        if self.m_candidates < 1:
            raise ValueError("m_candidates must be >= 1")
        if self.k_sweeps < 0:
            raise ValueError("k_sweeps must be >= 0")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class PropagationContext:
    """Shared inputs for building trajectory distributions."""
    start: GaussianBelief
    params: VehicleParams
    process_noise: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.asarray(self.process_noise, dtype=np.float64)
        if q.shape != (3, 3) or not np.isfinite(q).all():
            raise ValueError("process_noise must be a finite 3x3 matrix")
        if np.linalg.eigvalsh(0.5 * (q + q.T)).min() < -1e-9:
            raise ValueError("process_noise must be positive semidefinite")
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "process_noise", q)


class TrajectoryDistribution:
    """Block-diagonal Gaussian over a rollout: means (T+1,3), covs (T+1,3,3)."""

    __slots__ = ("means", "covs", "controls")

    def __init__(self, means, covs, controls: ControlSequence, validate: bool = True):
        means = np.ascontiguousarray(means, dtype=np.float64)
        covs = np.ascontiguousarray(covs, dtype=np.float64)
        if validate:
            t1 = len(controls) + 1
            if means.shape != (t1, 3) or covs.shape != (t1, 3, 3):
                raise ValueError("means/covs shapes inconsistent with controls")
            if not (np.isfinite(means).all() and np.isfinite(covs).all()):
                raise ValueError("means and covs must be finite")
            if not np.allclose(covs, covs.transpose(0, 2, 1), atol=1e-9):
                raise ValueError("covariances must be symmetric")
            if np.linalg.eigvalsh(covs).min() < -1e-9:
                raise ValueError("covariances must be positive semidefinite")
        means.setflags(write=False)
        covs.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "controls", controls)

    def __setattr__(self, name, value):
        raise AttributeError("TrajectoryDistribution is immutable")

    @property
    def t_steps(self) -> int:
        return len(self.controls)

    def belief(self, t: int) -> GaussianBelief:
        return GaussianBelief(State.from_array(self.means[t]), self.covs[t])

    @property
    def beliefs(self) -> tuple:
        return tuple(self.belief(t) for t in range(self.means.shape[0]))


def perturb(nominal: ControlSequence, model: PerturbationModel,
            params: VehicleParams, rng: np.random.Generator) -> ControlSequence:
    """Add clamped control-space noise to a nominal sequence.

    Draw order is fixed (normals first, then the log-normal multipliers for
    the NLN kind) so a given generator state yields identical output.
    """
    t = len(nominal)
    z = rng.standard_normal((t, 2))
    eta = z @ _sigma_factor(model.sigma_u).T
    if model.kind == NLN:
        g = np.exp(model.sigma_ln * rng.standard_normal(t))
        eta = g[:, None] * eta
    return clamp_sequence(nominal.array + eta, params)


def build_distribution(start: GaussianBelief, controls: ControlSequence,
                       params: VehicleParams, process_noise,
                       eps: float = EPS_DEFAULT) -> TrajectoryDistribution:
    """Propagate mean and linearized covariance along one control sequence.

    mean_{t+1} = step(mean_t, u_t); cov_{t+1} = A cov_t A^T + Q with A the
    dynamics Jacobian at (mean_t, u_t).
    """
    q = np.asarray(process_noise, dtype=np.float64)
    if q.shape != (3, 3):
        raise ValueError("process_noise must be 3x3")
    t = len(controls)
    means = np.empty((t + 1, 3))
    covs = np.empty((t + 1, 3, 3))
    lds = np.empty(t + 1)
    K.k_build_one(start.mean.as_array(), np.asarray(start.cov, dtype=np.float64),
                  controls.array, params.dt, params.wheelbase, q, eps,
                  means, covs, lds)
    if np.isnan(lds).any():
        raise NumericalDegeneracyError("covariance lost positive definiteness")
    return TrajectoryDistribution(means, covs, controls, validate=False)


# ---------------------------------------------------------------------------
# Hellinger distances
# ---------------------------------------------------------------------------

def _log_bc(mean_a, cov_a, mean_b, cov_b, eps):
    """log Bhattacharyya coefficient for two Gaussians (eps-regularized)."""
    sa = cov_a + eps * np.eye(3)
    sb = cov_b + eps * np.eye(3)
    sbar = 0.5 * (sa + sb)
    sign_a, ld_a = np.linalg.slogdet(sa)
    sign_b, ld_b = np.linalg.slogdet(sb)
    sign_m, ld_m = np.linalg.slogdet(sbar)
    if sign_a <= 0 or sign_b <= 0 or sign_m <= 0:
        raise NumericalDegeneracyError("singular covariance after regularization")
    d = mean_a - mean_b
    quad = float(d @ np.linalg.solve(sbar, d))
    return min(0.25 * ld_a + 0.25 * ld_b - 0.5 * ld_m - 0.125 * quad, 0.0)


def hellinger_sq_block(a: GaussianBelief, b: GaussianBelief,
                       eps: float = EPS_DEFAULT) -> float:
    """Squared Hellinger distance between two Gaussian blocks, in [0, 1]."""
    return 1.0 - float(np.exp(_log_bc(a.mean.as_array(), a.cov,
                                      b.mean.as_array(), b.cov, eps)))


def hellinger_sq_trajectory(a: TrajectoryDistribution, b: TrajectoryDistribution,
                            eps: float = EPS_DEFAULT) -> float:
    """Squared Hellinger distance between two trajectory distributions.

    The Bhattacharyya coefficient factors over blocks; it is accumulated in
    log space and the shared t=0 block is skipped.
    """
    if a.t_steps != b.t_steps:
        raise ValueError("trajectory distributions must share the horizon")
    acc = 0.0
    for t in range(1, a.means.shape[0]):
        acc += _log_bc(a.means[t], a.covs[t], b.means[t], b.covs[t], eps)
    return 1.0 - float(np.exp(acc))


def separation_score(candidate: TrajectoryDistribution,
                     others: Sequence[TrajectoryDistribution],
                     eps: float = EPS_DEFAULT) -> float:
    """Sum of squared Hellinger distances from candidate to each of others."""
    return float(sum(hellinger_sq_trajectory(candidate, o, eps) for o in others))


def _stack(trajs: Sequence[TrajectoryDistribution], eps: float):
    means = np.stack([tr.means for tr in trajs])
    covs = np.stack([tr.covs for tr in trajs])
    n, t1 = means.shape[0], means.shape[1]
    lds = np.empty((n, t1))
    for i in range(n):
        for t in range(t1):
            lds[i, t] = K.k_logdet3_reg(covs[i, t], eps)
    if np.isnan(lds).any():
        raise NumericalDegeneracyError("singular covariance after regularization")
    return means, covs, lds


def mean_pairwise_separation(trajs: Sequence[TrajectoryDistribution],
                             eps: float = EPS_DEFAULT) -> float:
    """Mean squared Hellinger distance over all unordered pairs."""
    if len(trajs) < 2:
        return 0.0
    means, covs, lds = _stack(trajs, eps)
    return float(K.k_mean_pairwise_h2(means, covs, lds, eps))


def separate(trajs: Sequence[TrajectoryDistribution], cfg: SeparationConfig,
             model: PerturbationModel, ctx: PropagationContext,
             rng: RngStream, trace: list | None = None) -> list[TrajectoryDistribution]:
    """Run K Gauss-Seidel separation sweeps over a trajectory set.

    Index 0 is the anchor and is never refined. For each sweep k and
    trajectory i >= 1, M candidates are drawn from the substream keyed
    (k, i) (row m belongs to candidate m), scored against the current set,
    and the argmax of {incumbent, candidates} replaces member i; ties keep
    the lowest index, so the incumbent survives ties and the per-trajectory
    score never decreases.

    When ``trace`` is a list, one (sweep, index, incumbent_score,
    selected_score, selected_candidate) tuple is appended per refinement.
    """
    n = len(trajs)
    if n == 0:
        raise ValueError("trajs must be non-empty")
    t_steps = trajs[0].t_steps
    for tr in trajs:
        if tr.t_steps != t_steps:
            raise ValueError("trajectory distributions must share the horizon")
    start_mean = ctx.start.mean.as_array()
    for tr in trajs:
        if not np.allclose(tr.means[0], start_mean, atol=1e-9):
            raise ValueError("trajectories must start at the context belief")
    if n < 2 or cfg.k_sweeps == 0:
        return list(trajs)

    means, covs, lds = _stack(trajs, cfg.eps)
    ctrls = np.stack([tr.controls.array for tr in trajs])
    m, k = cfg.m_candidates, cfg.k_sweeps

    # Pre-draw standard normals keyed by (sweep, trajectory); shaping happens
    # in the kernel (gaussian) or here (normal-log-normal).
    noise = np.empty((k, n - 1, m, t_steps, 2))
    for sweep in range(k):
        for i in range(1, n):
            noise[sweep, i - 1] = rng.substream(sweep, i).standard_normal((m, t_steps, 2))
    factor = _sigma_factor(model.sigma_u)
    if model.kind == NLN:
        gz = np.empty((k, n - 1, m, t_steps))
        for sweep in range(k):
            for i in range(1, n):
                gz[sweep, i - 1] = rng.substream(sweep, i, "nln").standard_normal((m, t_steps))
        noise = np.exp(model.sigma_ln * gz)[..., None] * (noise @ factor.T)
        factor = np.eye(2)

    p = ctx.params
    trace_arr = np.empty((k, n - 1, 3))
    rc = K.k_separate(ctrls, means, covs, lds, noise, factor,
                      start_mean, np.asarray(ctx.start.cov, dtype=np.float64),
                      p.dt, p.wheelbase, ctx.process_noise, cfg.eps,
                      p.v_min, p.v_max, p.delta_max, trace_arr)
    if rc != 0:
        raise NumericalDegeneracyError("singular covariance during separation")
    if trace is not None:
        for sweep in range(k):
            for i in range(1, n):
                inc, sel, which = trace_arr[sweep, i - 1]
                trace.append((sweep, i, float(inc), float(sel), int(which)))

    out = [trajs[0]]
    for i in range(1, n):
        out.append(TrajectoryDistribution(means[i], covs[i],
                                          ControlSequence(ctrls[i]), validate=False))
    return out
