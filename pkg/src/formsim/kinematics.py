"""Unicycle kinematics of a differential-drive robot.

The robot state is its planar pose (x, y, theta) taken at the centre of
the rear axle; the control inputs are the linear velocity v and angular
velocity omega of a reference point placed a distance c ahead of the
axle centre:

    x_dot     = v cos(theta) - c omega sin(theta)
    y_dot     = v sin(theta) + c omega cos(theta)
    theta_dot = omega

All heading angles are normalized to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

__all__ = [
    "Pose",
    "PoseRate",
    "VelocityCommand",
    "RobotGeometry",
    "WheelSpeeds",
    "wrap_angle",
    "unicycle_rate",
    "integrate_step",
    "wheel_speeds",
]

_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _wrap(angle: float) -> float:
    a = angle % _TWO_PI  # in [0, 2*pi)
    if a > math.pi:
        a -= _TWO_PI
    return a


@njit(cache=True)
def _rate(theta: float, v: float, omega: float, c: float):
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    return (v * cos_t - c * omega * sin_t, v * sin_t + c * omega * cos_t, omega)


@njit(cache=True)
def _rk4_pose_step(x, y, theta, v, omega, c, dt):
    # classical 4-stage Runge-Kutta with the command held constant
    ax, ay, at = _rate(theta, v, omega, c)
    bx, by, bt = _rate(theta + 0.5 * dt * at, v, omega, c)
    cx, cy, ct = _rate(theta + 0.5 * dt * bt, v, omega, c)
    dx, dy, dt_ = _rate(theta + dt * ct, v, omega, c)
    h = dt / 6.0
    return (
        x + h * (ax + 2.0 * bx + 2.0 * cx + dx),
        y + h * (ay + 2.0 * by + 2.0 * cy + dy),
        _wrap(theta + h * (at + 2.0 * bt + 2.0 * ct + dt_)),
    )


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    return _wrap(float(angle))


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Pose:
    """Planar configuration (x, y, theta); theta normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        _require_finite("pose", self.x, self.y, self.theta)
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class PoseRate:
    x_dot: float
    y_dot: float
    theta_dot: float


@dataclass(frozen=True)
class VelocityCommand:
    """Linear velocity v (m/s) and angular velocity omega (rad/s)."""

    v: float
    omega: float

    def __post_init__(self):
        _require_finite("velocity command", self.v, self.omega)


@dataclass(frozen=True)
class RobotGeometry:
    """Physical parameters: reference offset c, wheel radius, track width."""

    c: float = 0.1
    wheel_radius: float = 0.05
    track_width: float = 0.2

    def __post_init__(self):
        if not self.c >= 0.0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if not self.wheel_radius > 0.0:
            raise ValueError(f"wheel_radius must be > 0, got {self.wheel_radius}")
        if not self.track_width > 0.0:
            raise ValueError(f"track_width must be > 0, got {self.track_width}")


@dataclass(frozen=True)
class WheelSpeeds:
    """Per-wheel angular velocities (rad/s)."""

    left: float
    right: float


def unicycle_rate(pose: Pose, cmd: VelocityCommand, c: float) -> PoseRate:
    """Pose time derivative under command `cmd` with reference offset `c`."""
    x_dot, y_dot, theta_dot = _rate(pose.theta, cmd.v, cmd.omega, c)
    return PoseRate(x_dot, y_dot, theta_dot)


def integrate_step(pose: Pose, cmd: VelocityCommand, c: float, dt: float) -> Pose:
    """Advance the pose by one fixed RK4 step of length `dt` (>= 0)."""
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    x, y, theta = _rk4_pose_step(pose.x, pose.y, pose.theta, cmd.v, cmd.omega, c, dt)
    return Pose(x, y, theta)


def wheel_speeds(cmd: VelocityCommand, geom: RobotGeometry) -> WheelSpeeds:
    """Map (v, omega) to wheel angular velocities.

    left  = (v - omega * track_width / 2) / wheel_radius
    right = (v + omega * track_width / 2) / wheel_radius
    """
    half_track = 0.5 * geom.track_width
    return WheelSpeeds(
        left=(cmd.v - cmd.omega * half_track) / geom.wheel_radius,
        right=(cmd.v + cmd.omega * half_track) / geom.wheel_radius,
    )
