"""Backstepping formation controller.

Control law (all gains strictly positive):

    v_f = v_l cos(lam) + l_d_rate cos(gamma) - l_d w_l sin(gamma)
          - l_d alpha_d_rate sin(gamma) + k1 ex_hat
    w_f = (v_l sin(lam) + l_d w_l cos(gamma) + l_d_rate sin(gamma)
           + l_d alpha_d_rate cos(gamma) + k2 ey_hat + k3 eth_hat) / c
    w_d = (same feedforward sum + 2 k2 ey_hat) / c

The derived gains k4 = c k3 / (2 k2) and k5 = k3^2 / k2 tie the
Lyapunov candidate V2 = (ex_hat^2 + ey_hat^2)/2 + k4 eth_hat^2 to the
decrease rate -k1 ex_hat^2 - k2 ey_hat^2 - k5 eth_hat^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from numba import njit

from .formation import FormationSample, FrameAngles, LocalError
from .kinematics import VelocityCommand, wrap_angle

__all__ = [
    "Gains",
    "ControlOutput",
    "derive_gains",
    "backstepping_command",
    "update_desired_heading",
]


@dataclass(frozen=True)
class Gains:
    """Controller gains; k4 and k5 are derived from (k1, k2, k3, c)."""

    k1: float
    k2: float
    k3: float
    k4: float
    k5: float

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4", "k5"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"gain {name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ControlOutput:
    cmd: VelocityCommand
    omega_d: float


def derive_gains(k1: float, k2: float, k3: float, c: float) -> Gains:
    """Build the full gain set; rejects non-positive inputs."""
    for name, value in (("k1", k1), ("k2", k2), ("k3", k3), ("c", c)):
        if not (math.isfinite(value) and value > 0.0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return Gains(k1=k1, k2=k2, k3=k3, k4=c * k3 / (2.0 * k2), k5=k3 * k3 / k2)


@njit(cache=True)
def _command(
    ex_hat, ey_hat, eth_hat, gamma, lam,
    v_l, w_l, l_d, l_d_rate, alpha_d_rate,
    k1, k2, k3, c,
):
    sg = math.sin(gamma)
    cg = math.cos(gamma)
    v_f = (
        v_l * math.cos(lam)
        + l_d_rate * cg
        - l_d * w_l * sg
        - l_d * alpha_d_rate * sg
        + k1 * ex_hat
    )
    feedforward = v_l * math.sin(lam) + l_d * w_l * cg + l_d_rate * sg + l_d * alpha_d_rate * cg
    w_f = (feedforward + k2 * ey_hat + k3 * eth_hat) / c
    w_d = (feedforward + 2.0 * k2 * ey_hat) / c
    return (v_f, w_f, w_d)


def backstepping_command(
    e_hat: LocalError,
    leader_cmd: VelocityCommand,
    angles: FrameAngles,
    spec: FormationSample,
    gains: Gains,
    c: float,
    v_limit: Optional[float] = None,
    omega_limit: Optional[float] = None,
) -> ControlOutput:
    """Compute (v_f, w_f) and the desired angular velocity w_d.

    Optional symmetric saturation limits clamp the command (not w_d);
    they default to off so the unsaturated law is what gets analyzed.
    """
    if not c > 0.0:
        raise ValueError(f"c must be > 0, got {c}")
    v_f, w_f, w_d = _command(
        e_hat.ex_hat,
        e_hat.ey_hat,
        e_hat.etheta_hat,
        angles.gamma,
        angles.lam,
        leader_cmd.v,
        leader_cmd.omega,
        spec.l_d,
        spec.l_d_rate,
        spec.alpha_d_rate,
        gains.k1,
        gains.k2,
        gains.k3,
        c,
    )
    if v_limit is not None:
        v_f = max(-v_limit, min(v_limit, v_f))
    if omega_limit is not None:
        w_f = max(-omega_limit, min(omega_limit, w_f))
    return ControlOutput(cmd=VelocityCommand(v_f, w_f), omega_d=w_d)


def update_desired_heading(theta_d: float, omega_d: float, dt: float) -> float:
    """Advance the desired heading by one step; result wrapped to (-pi, pi]."""
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return wrap_angle(theta_d + omega_d * dt)
