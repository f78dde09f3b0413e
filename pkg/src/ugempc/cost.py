"""Unified trajectory cost with collision freezing and goal truncation.

Stage cost at step t is

    lam_u * ||u_t||^2  +  state_cost(x_t)

where state_cost is lam_obs * C_obs(x_t) + lam_dist * dist(x_t, goal) while
the trajectory is collision-free. The first collided state switches the
trajectory into the collided regime: that state and every later one
(terminal included) contribute lam_obs * c_collided + lam_dist * d_frozen,
with d_frozen the distance-to-goal at the first collision. A collision-free
state inside the goal tolerance truncates the sum: only its own state cost
is added, as the terminal term. Otherwise the terminal term is the state
cost at x_T.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .vehicle import ControlSequence, State
from .world import Costmap, Footprint, _disc_offsets, footprint_cost

__all__ = ["CostWeights", "GoalSpec", "action_cost", "trajectory_cost"]


@dataclass(frozen=True)
class CostWeights:
    lam_u: float = 1.0
    lam_obs: float = 50.0
    lam_dist: float = 10.0
    c_collided: float = 1000.0

    def __post_init__(self):
        for name in ("lam_u", "lam_obs", "lam_dist", "c_collided"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0")


@dataclass(frozen=True)
class GoalSpec:
    x: float
    y: float
    tolerance: float = 0.3

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("goal position must be finite")
        if not self.tolerance > 0.0:
            raise ValueError("goal tolerance must be positive")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def _states_array(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        a = np.ascontiguousarray(states, dtype=np.float64)
    else:
        a = np.array([[s.x, s.y, s.theta] for s in states], dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError("states must be a (T+1, 3) sequence")
    return a


def action_cost(control) -> float:
    """Quadratic control effort v^2 + delta^2 (the lam_u stage term)."""
    return float(control.v * control.v + control.delta * control.delta)


def trajectory_cost(states, controls: ControlSequence, costmap: Costmap,
                    footprint: Footprint, goal: GoalSpec,
                    weights: CostWeights) -> float:
    """Cost of one rollout (see module docstring for the exact semantics)."""
    traj = _states_array(states)
    if traj.shape[0] != len(controls) + 1:
        raise ValueError("need exactly one more state than controls")
    if footprint.kind == "disc":
        offs = _disc_offsets(footprint.radius, costmap.resolution)
        return float(K.k_traj_cost(
            traj, controls.array, costmap.cells,
            costmap.origin[0], costmap.origin[1], costmap.resolution, offs,
            goal.x, goal.y, goal.tolerance,
            weights.lam_u, weights.lam_obs, weights.lam_dist, weights.c_collided))
    return _cost_walk_polygon(traj, controls, costmap, goal, weights, footprint)


def _cost_walk_polygon(traj, controls, costmap, goal, weights, footprint):
    """Reference walk for polygon footprints (mirrors the compiled kernel)."""
    lu, lo, ld, ccoll = (weights.lam_u, weights.lam_obs, weights.lam_dist,
                         weights.c_collided)
    t_n = len(controls)
    collided = False
    fdist = 0.0
    total = 0.0
    for t in range(t_n):
        x, y, th = traj[t]
        dx = goal.x - x
        dy = goal.y - y
        dist = float(np.sqrt(dx * dx + dy * dy))
        cobs = 0.0
        if not collided:
            fc = footprint_cost(costmap, State(x, y, th), footprint)
            if fc.collided:
                collided = True
                fdist = dist
            else:
                cobs = fc.cost
                if dist <= goal.tolerance:
                    return total + lo * cobs + ld * dist
        v, d = controls.array[t]
        total += lu * (v * v + d * d)
        if collided:
            total += lo * ccoll + ld * fdist
        else:
            total += lo * cobs + ld * dist
    x, y, th = traj[t_n]
    dx = goal.x - x
    dy = goal.y - y
    dist = float(np.sqrt(dx * dx + dy * dy))
    if not collided:
        fc = footprint_cost(costmap, State(x, y, th), footprint)
        if not fc.collided:
            return total + lo * fc.cost + ld * dist
        fdist = dist
    return total + lo * ccoll + ld * fdist
