"""Kinematic bicycle model: state/control types, forward-Euler dynamics,
linearization and covariance propagation.

States live in a continuous heading chart (theta is never wrapped) so that
linearization and Gaussian beliefs stay consistent across +-pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels as K

__all__ = [
    "State", "Control", "ControlSequence", "VehicleParams", "GaussianBelief",
    "step", "jacobian", "propagate_covariance", "rollout", "clamp",
    "clamp_sequence",
]


@dataclass(frozen=True)
class State:
    """Planar pose (x, y, theta); theta in radians, unwrapped."""
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.theta)):
            raise ValueError("state fields must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "State":
        return State(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Control:
    """Velocity v [m/s] and front steering angle delta [rad]."""
    v: float
    delta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.delta], dtype=np.float64)


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 0.3
    dt: float = 0.05
    v_min: float = -1.0
    v_max: float = 1.0
    delta_max: float = 0.4

    def __post_init__(self):
        if not self.wheelbase > 0.0:
            raise ValueError("wheelbase must be positive")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.v_min > self.v_max:
            raise ValueError("v_min must not exceed v_max")
        if not 0.0 < self.delta_max < 0.5 * math.pi:
            raise ValueError("delta_max must lie in (0, pi/2)")


class ControlSequence:
    """Immutable horizon of controls backed by a float64 (T, 2) array."""

    __slots__ = ("array",)

    def __init__(self, array):
        a = np.ascontiguousarray(array, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != 2:
            raise ValueError("control sequence must have shape (T, 2)")
        if not np.isfinite(a).all():
            raise ValueError("control sequence must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "array", a)

    def __setattr__(self, name, value):
        raise AttributeError("ControlSequence is immutable")

    @staticmethod
    def from_controls(controls: Iterable[Control]) -> "ControlSequence":
        return ControlSequence(np.array([[c.v, c.delta] for c in controls]))

    @staticmethod
    def constant(v: float, delta: float, t_steps: int) -> "ControlSequence":
        if t_steps < 1:
            raise ValueError("t_steps must be >= 1")
        return ControlSequence(np.tile(np.array([v, delta]), (t_steps, 1)))

    def __len__(self) -> int:
        return self.array.shape[0]

    def __getitem__(self, t: int) -> Control:
        v, d = self.array[t]
        return Control(float(v), float(d))

    def __iter__(self):
        for v, d in self.array:
            yield Control(float(v), float(d))

    def __eq__(self, other):
        return (isinstance(other, ControlSequence)
                and np.array_equal(self.array, other.array))

    def __repr__(self):  # pragma: no cover
        return f"ControlSequence(T={len(self)})"


def _check_psd(m, name: str, tol: float = 1e-9):
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} must be finite")
    if not np.allclose(m, m.T, atol=tol):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(m).min() < -tol:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian state belief N(mean, cov) over (x, y, theta)."""
    mean: State
    cov: np.ndarray = field(repr=False)

    def __post_init__(self):
        cov = _check_psd(self.cov, "cov")
        cov = cov.copy()
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)


def _check_control(control: Control, params: VehicleParams):
    if not (math.isfinite(control.v) and math.isfinite(control.delta)):
        raise ValueError("control must be finite")
    if abs(control.delta) > 0.5 * math.pi:
        raise ValueError("steering angle must satisfy |delta| < pi/2")


def step(state: State, control: Control, params: VehicleParams) -> State:
    """One forward-Euler step. The control is assumed already clamped."""
    _check_control(control, params)
    x, y, th = K.k_step(state.x, state.y, state.theta,
                        control.v, control.delta, params.dt, params.wheelbase)
    return State(float(x), float(y), float(th))


def jacobian(state: State, control: Control, params: VehicleParams) -> np.ndarray:
    """State Jacobian of step() at (state, control)."""
    _check_control(control, params)
    out = np.empty((3, 3))
    K.k_jacobian(state.theta, control.v, params.dt, out)
    return out


def propagate_covariance(cov, jac, process_noise) -> np.ndarray:
    """Sigma' = A Sigma A^T + Q, symmetrized."""
    cov = _check_psd(cov, "cov")
    q = _check_psd(process_noise, "process_noise")
    jac = np.asarray(jac, dtype=np.float64)
    if jac.shape != (3, 3) or not np.isfinite(jac).all():
        raise ValueError("jacobian must be a finite 3x3 matrix")
    out = np.empty((3, 3))
    K.k_apsa(jac, cov, q, out)
    return out


def rollout(start: State, controls: ControlSequence,
            params: VehicleParams) -> list[State]:
    """Noise-free rollout; returns T+1 states including the start."""
    seq = controls.array[None, :, :]
    out = np.empty((1, len(controls) + 1, 3))
    K.k_rollout_batch(start.as_array(), seq, params.dt, params.wheelbase, out)
    return [State.from_array(row) for row in out[0]]


def clamp(control: Control, params: VehicleParams) -> Control:
    """Project a control onto the admissible box."""
    if not (math.isfinite(control.v) and math.isfinite(control.delta)):
        raise ValueError("control must be finite")
    v, d = K.k_clamp(control.v, control.delta,
                     params.v_min, params.v_max, params.delta_max)
    return Control(float(v), float(d))


def clamp_sequence(seq, params: VehicleParams) -> ControlSequence:
    """Clamp a ControlSequence or raw (T, 2) array elementwise."""
    a = seq.array if isinstance(seq, ControlSequence) else np.asarray(seq, dtype=np.float64)
    out = np.clip(a, [params.v_min, -params.delta_max],
                  [params.v_max, params.delta_max])
    return ControlSequence(out)
