"""Leader-follower formation geometry and tracking-error dynamics.

The follower's desired pose is placed at a (time-varying) relative
distance l_d and bearing alpha_d from the leader's axle reference point:

    beta = alpha_d + theta_l
    x_d  = x_l - c cos(theta_l) + l_d cos(beta)
    y_d  = y_l - c sin(theta_l) + l_d sin(beta)

Tracking errors are formed in the global frame (desired minus actual)
and mapped to the follower's local frame by a planar rotation; the
heading error is frame-invariant.  `error_rates` is the closed-form time
derivative of the local error under the unicycle kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

from .kinematics import Pose, PoseRate, VelocityCommand, _require_finite, wrap_angle

__all__ = [
    "FormationSample",
    "GlobalError",
    "LocalError",
    "LocalErrorRate",
    "FrameAngles",
    "frame_angles",
    "desired_pose",
    "desired_pose_rate",
    "global_error",
    "to_local",
    "from_local",
    "error_rates",
    "remap_global_rates",
    "relative_distance",
]


@dataclass(frozen=True)
class FormationSample:
    """Desired relative distance/bearing and their rates at one instant.

    Negative l_d is tolerated: a formation function may cross zero, which
    simply places the desired point on the opposite bearing.
    """

    l_d: float
    l_d_rate: float
    alpha_d: float
    alpha_d_rate: float

    def __post_init__(self):
        _require_finite(
            "formation sample", self.l_d, self.l_d_rate, self.alpha_d, self.alpha_d_rate
        )


@dataclass(frozen=True)
class GlobalError:
    """Tracking error in the world frame; etheta normalized to (-pi, pi]."""

    ex: float
    ey: float
    etheta: float

    def __post_init__(self):
        object.__setattr__(self, "etheta", wrap_angle(self.etheta))


@dataclass(frozen=True)
class LocalError:
    """Tracking error in the follower frame; etheta_hat equals the global etheta."""

    ex_hat: float
    ey_hat: float
    etheta_hat: float

    def __post_init__(self):
        object.__setattr__(self, "etheta_hat", wrap_angle(self.etheta_hat))

    def norm(self) -> float:
        return math.sqrt(self.ex_hat**2 + self.ey_hat**2 + self.etheta_hat**2)


@dataclass(frozen=True)
class LocalErrorRate:
    ex_hat_rate: float
    ey_hat_rate: float
    etheta_hat_rate: float


@dataclass(frozen=True)
class FrameAngles:
    """gamma = alpha_d + theta_l - theta_f; lam = theta_l - theta_f.

    Kept unwrapped: both only ever enter sin/cos.
    """

    gamma: float
    lam: float


@njit(cache=True)
def _desired_position(xl, yl, thl, l_d, alpha_d, c):
    beta = alpha_d + thl
    return (
        xl - c * math.cos(thl) + l_d * math.cos(beta),
        yl - c * math.sin(thl) + l_d * math.sin(beta),
    )


@njit(cache=True)
def _to_local(ex, ey, theta_f):
    s = math.sin(theta_f)
    co = math.cos(theta_f)
    return (co * ex + s * ey, -s * ex + co * ey)


@njit(cache=True)
def _error_rates(
    ex_hat, ey_hat, etheta_hat, gamma, lam,
    v_l, w_l, v_f, w_f, l_d, l_d_rate, alpha_d_rate, omega_d, c,
):
    sg = math.sin(gamma)
    cg = math.cos(gamma)
    ex_rate = (
        w_f * ey_hat
        + v_l * math.cos(lam)
        + l_d_rate * cg
        - v_f
        - l_d * w_l * sg
        - l_d * alpha_d_rate * sg
    )
    ey_rate = (
        v_l * math.sin(lam)
        + l_d * w_l * cg
        + l_d_rate * sg
        + l_d * alpha_d_rate * cg
        - w_f * ex_hat
        - c * w_f
    )
    return (ex_rate, ey_rate, omega_d - w_f)


def frame_angles(leader_theta: float, follower_theta: float, alpha_d: float) -> FrameAngles:
    """Relative-frame angles used throughout the error dynamics."""
    return FrameAngles(
        gamma=alpha_d + leader_theta - follower_theta,
        lam=leader_theta - follower_theta,
    )


def desired_pose(leader: Pose, spec: FormationSample, c: float, theta_d: float) -> Pose:
    """Desired follower pose given the leader pose and the formation sample.

    theta_d is owned by the caller: the simulator integrates it from the
    desired angular velocity.
    """
    x_d, y_d = _desired_position(leader.x, leader.y, leader.theta, spec.l_d, spec.alpha_d, c)
    return Pose(x_d, y_d, theta_d)


def desired_pose_rate(
    leader: Pose, leader_cmd: VelocityCommand, spec: FormationSample, omega_d: float, c: float
) -> PoseRate:
    """Time derivative of the desired pose (leader moving per the unicycle model)."""
    beta = spec.alpha_d + leader.theta
    beta_rate = spec.alpha_d_rate + leader_cmd.omega
    x_dot = (
        leader_cmd.v * math.cos(leader.theta)
        + spec.l_d_rate * math.cos(beta)
        - spec.l_d * beta_rate * math.sin(beta)
    )
    y_dot = (
        leader_cmd.v * math.sin(leader.theta)
        + spec.l_d_rate * math.sin(beta)
        + spec.l_d * beta_rate * math.cos(beta)
    )
    return PoseRate(x_dot, y_dot, omega_d)


def global_error(desired: Pose, actual: Pose) -> GlobalError:
    """Componentwise desired-minus-actual error; heading difference wrapped."""
    return GlobalError(
        ex=desired.x - actual.x,
        ey=desired.y - actual.y,
        etheta=wrap_angle(desired.theta - actual.theta),
    )


def to_local(e: GlobalError, theta_f: float) -> LocalError:
    """Rotate the position error into the follower frame; etheta unchanged."""
    ex_hat, ey_hat = _to_local(e.ex, e.ey, theta_f)
    return LocalError(ex_hat, ey_hat, e.etheta)


def from_local(e_hat: LocalError, theta_f: float) -> GlobalError:
    """Exact inverse of `to_local`."""
    ex, ey = _to_local(e_hat.ex_hat, e_hat.ey_hat, -theta_f)
    return GlobalError(ex, ey, e_hat.etheta_hat)


def error_rates(
    e_hat: LocalError,
    angles: FrameAngles,
    leader_cmd: VelocityCommand,
    follower_cmd: VelocityCommand,
    spec: FormationSample,
    omega_d: float,
    c: float,
) -> LocalErrorRate:
    """Closed-form local-error time derivative.

    ex_hat_rate = w_f ey_hat + v_l cos(lam) + l_d_rate cos(gamma) - v_f
                  - l_d w_l sin(gamma) - l_d alpha_d_rate sin(gamma)
    ey_hat_rate = v_l sin(lam) + l_d w_l cos(gamma) + l_d_rate sin(gamma)
                  + l_d alpha_d_rate cos(gamma) - w_f ex_hat - c w_f
    etheta_hat_rate = omega_d - w_f
    """
    ex_rate, ey_rate, eth_rate = _error_rates(
        e_hat.ex_hat,
        e_hat.ey_hat,
        e_hat.etheta_hat,
        angles.gamma,
        angles.lam,
        leader_cmd.v,
        leader_cmd.omega,
        follower_cmd.v,
        follower_cmd.omega,
        spec.l_d,
        spec.l_d_rate,
        spec.alpha_d_rate,
        omega_d,
        c,
    )
    return LocalErrorRate(ex_rate, ey_rate, eth_rate)


def remap_global_rates(
    e_hat_rate: LocalErrorRate,
    e: GlobalError,
    theta_f: float,
    omega_f: float,
    desired_rate: PoseRate,
) -> tuple[float, float]:
    """Recover the follower's global velocities from the local error rates."""
    s = math.sin(theta_f)
    co = math.cos(theta_f)
    upsilon = (
        -e_hat_rate.ex_hat_rate
        - omega_f * s * e.ex
        + omega_f * co * e.ey
        + co * desired_rate.x_dot
        + s * desired_rate.y_dot
    )
    sigma = (
        e_hat_rate.ey_hat_rate
        + omega_f * co * e.ex
        + omega_f * s * e.ey
        + s * desired_rate.x_dot
        - co * desired_rate.y_dot
    )
    return (co * upsilon + s * sigma, s * upsilon - co * sigma)


def relative_distance(leader: Pose, follower: Pose, c: float) -> float:
    """Actual distance from the leader's axle reference point to the follower.

    Diagnostic quantity only; at perfect tracking it equals |l_d|.
    """
    dx = follower.x - (leader.x - c * math.cos(leader.theta))
    dy = follower.y - (leader.y - c * math.sin(leader.theta))
    return math.hypot(dx, dy)
