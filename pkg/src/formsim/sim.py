"""Scenario definition, simulation driver and controller comparison.

A `Scenario` bundles a leader trajectory (velocity profiles given as
time expressions), one or more followers with their formation functions
and controller configuration, the robot geometry and the time grid.
`run` integrates the whole closed loop with fixed-step RK4 and returns a
`Trace` of uniformly sampled signals; `compare` reduces a matched pair
of traces (backstepping vs fuzzy-adaptive) to peak-command statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _engine, exprlang
from .controllers import Gains, derive_gains
from .formation import LocalError
from .fuzzy import (
    DEFAULT_ERROR_SCALE,
    DEFAULT_KAPPA_MAX,
    DEFAULT_KAPPA_MIN,
    DEFAULT_RATE_SCALE,
    DEFAULT_RESOLUTION,
    GainTuner,
)
from .kinematics import Pose, RobotGeometry

__all__ = [
    "SimulationError",
    "FuzzyConfig",
    "FollowerSetup",
    "Scenario",
    "FollowerTrace",
    "Trace",
    "FollowerComparison",
    "ComparisonReport",
    "run",
    "lyapunov",
    "settling_time",
    "compare",
]

CONTROLLER_KINDS = ("bc", "fabc")


class SimulationError(RuntimeError):
    """The integration produced a non-finite state or an unusable input."""


@dataclass(frozen=True)
class FuzzyConfig:
    """Adaptive-tuner settings; defaults match `fuzzy.GainTuner`."""

    error_scale: float = DEFAULT_ERROR_SCALE
    rate_scale: float = DEFAULT_RATE_SCALE
    kappa_min: float = DEFAULT_KAPPA_MIN
    kappa_max: float = DEFAULT_KAPPA_MAX
    resolution: int = DEFAULT_RESOLUTION
    pair_ex_with_ex_rate: bool = False

    def build_tuner(self) -> GainTuner:
        return GainTuner(
            error_scale=self.error_scale,
            rate_scale=self.rate_scale,
            kappa_min=self.kappa_min,
            kappa_max=self.kappa_max,
            resolution=self.resolution,
            pair_ex_with_ex_rate=self.pair_ex_with_ex_rate,
        )


@dataclass(frozen=True)
class FollowerSetup:
    """One follower: initial pose, formation functions, controller config.

    The four formation fields are time expressions (see `exprlang`);
    `l_rate` and `alpha_rate` must be the exact time derivatives of `l`
    and `alpha` (the config loader checks this numerically).
    """

    name: str
    start: Pose
    l: exprlang.Expr
    l_rate: exprlang.Expr
    alpha: exprlang.Expr
    alpha_rate: exprlang.Expr
    controller: str = "bc"
    k1: float = 3.0
    k2: float = 3.0
    k3: float = 4.0
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    v_limit: Optional[float] = None
    omega_limit: Optional[float] = None

    def __post_init__(self):
        if self.controller not in CONTROLLER_KINDS:
            raise ValueError(
                f"controller must be one of {CONTROLLER_KINDS}, got {self.controller!r}"
            )
        for gname in ("k1", "k2", "k3"):
            g = getattr(self, gname)
            if not (math.isfinite(g) and g > 0.0):
                raise ValueError(f"{gname} must be positive and finite, got {g!r}")
        for lname in ("v_limit", "omega_limit"):
            lim = getattr(self, lname)
            if lim is not None and not lim > 0.0:
                raise ValueError(f"{lname} must be positive when set, got {lim!r}")

    def gains(self, c: float) -> Gains:
        return derive_gains(self.k1, self.k2, self.k3, c)


@dataclass(frozen=True)
class Scenario:
    leader_start: Pose
    leader_v: exprlang.Expr
    leader_omega: exprlang.Expr
    followers: tuple[FollowerSetup, ...]
    geometry: RobotGeometry = field(default_factory=RobotGeometry)
    dt: float = 1e-3
    t_final: float = 120.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_final) and self.t_final > 0.0):
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if not self.geometry.c > 0.0:
            raise ValueError("the controller requires a reference offset c > 0")
        if not self.followers:
            raise ValueError("a scenario needs at least one follower")
        names = [f.name for f in self.followers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate follower names: {names}")

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def with_controller(self, kind: str) -> "Scenario":
        """Copy of the scenario with every follower switched to `kind`."""
        if kind not in CONTROLLER_KINDS:
            raise ValueError(f"controller must be one of {CONTROLLER_KINDS}, got {kind!r}")
        return replace(
            self, followers=tuple(replace(f, controller=kind) for f in self.followers)
        )

    def fingerprint(self) -> tuple:
        """Everything except the controller choice; used to match compare runs."""
        return (
            (self.leader_start.x, self.leader_start.y, self.leader_start.theta),
            exprlang.to_source(self.leader_v),
            exprlang.to_source(self.leader_omega),
            self.geometry,
            self.dt,
            self.t_final,
            tuple(
                (
                    f.name,
                    (f.start.x, f.start.y, f.start.theta),
                    exprlang.to_source(f.l),
                    exprlang.to_source(f.alpha),
                )
                for f in self.followers
            ),
        )


@dataclass(frozen=True)
class FollowerTrace:
    """Uniformly sampled signals for one follower; all arrays share `Trace.t`."""

    name: str
    controller: str
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    ex_hat: np.ndarray
    ey_hat: np.ndarray
    etheta_hat: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    omega_d: np.ndarray
    theta_d: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    l_actual: np.ndarray
    wheel_left: np.ndarray
    wheel_right: np.ndarray

    def error_norm(self) -> np.ndarray:
        return np.sqrt(self.ex_hat**2 + self.ey_hat**2 + self.etheta_hat**2)


@dataclass(frozen=True)
class Trace:
    scenario: Scenario
    t: np.ndarray
    leader_x: np.ndarray
    leader_y: np.ndarray
    leader_theta: np.ndarray
    followers: tuple[FollowerTrace, ...]

    def follower(self, name: str) -> FollowerTrace:
        for f in self.followers:
            if f.name == name:
                return f
        raise KeyError(name)


def _sample(expr: exprlang.Expr, ts: np.ndarray, what: str) -> np.ndarray:
    values = exprlang.evaluate_array(expr, ts)
    bad = ~np.isfinite(values)
    if bad.any():
        t_bad = ts[bad][0]
        raise SimulationError(f"{what} is non-finite at t = {t_bad:.6g}")
    return values


def run(scenario: Scenario) -> Trace:
    """Integrate the scenario and return uniformly sampled traces.

    The leader is integrated first on a half-step grid; each follower's
    closed loop is then integrated with the controller evaluated inside
    every RK4 stage.  Fuzzy-adaptive gains are refreshed once per step.
    """
    n = scenario.steps
    if n < 1:
        raise SimulationError(f"t_final = {scenario.t_final} is below one step of {scenario.dt}")
    dt = scenario.dt
    c = scenario.geometry.c
    t = np.arange(n + 1) * dt
    t_half = np.arange(2 * n + 1) * (dt / 2.0)
    t_quarter = np.arange(4 * n + 1) * (dt / 4.0)

    v_q = _sample(scenario.leader_v, t_quarter, "leader linear velocity")
    w_q = _sample(scenario.leader_omega, t_quarter, "leader angular velocity")
    leader_half = np.empty((2 * n + 1, 3))
    _engine.integrate_leader(
        scenario.leader_start.x,
        scenario.leader_start.y,
        scenario.leader_start.theta,
        c,
        dt / 2.0,
        v_q,
        w_q,
        leader_half,
    )

    follower_traces = []
    for f in scenario.followers:
        l_h = _sample(f.l, t_half, f"formation distance for {f.name!r}")
        lr_h = _sample(f.l_rate, t_half, f"formation distance rate for {f.name!r}")
        a_h = _sample(f.alpha, t_half, f"formation bearing for {f.name!r}")
        ar_h = _sample(f.alpha_rate, t_half, f"formation bearing rate for {f.name!r}")
        is_fabc = f.controller == "fabc"
        if is_fabc:
            tuner = f.fuzzy.build_tuner()
            e_shapes = tuner.e_shapes
            e_lo, e_hi = tuner.error_mfs.lo, tuner.error_mfs.hi
            r_shapes = tuner.r_shapes
            r_lo, r_hi = tuner.rate_mfs.lo, tuner.rate_mfs.hi
            rules = tuner.rule_array
            out_grid, out_matrix = tuner.out_grid, tuner.out_matrix
            kmin, kmax = tuner.kappa_min, tuner.kappa_max
            err_scale, rate_scale = tuner.error_scale, tuner.rate_scale
            pair_ex = tuner.pair_ex_with_ex_rate
        else:
            e_shapes, rules, out_grid, out_matrix = _engine.dummy_fuzzy_arrays()
            r_shapes = e_shapes
            e_lo = r_lo = -1.0
            e_hi = r_hi = 1.0
            kmin, kmax = DEFAULT_KAPPA_MIN, DEFAULT_KAPPA_MAX
            err_scale, rate_scale = 1.0, 1.0
            pair_ex = False
        out = np.empty((n + 1, _engine.N_COLS))
        bad_step = _engine.run_follower(
            dt,
            c,
            f.start.x,
            f.start.y,
            f.start.theta,
            leader_half,
            v_q,
            w_q,
            l_h,
            lr_h,
            a_h,
            ar_h,
            f.k1,
            f.k2,
            f.k3,
            f.v_limit if f.v_limit is not None else 0.0,
            f.omega_limit if f.omega_limit is not None else 0.0,
            is_fabc,
            e_shapes,
            e_lo,
            e_hi,
            r_shapes,
            r_lo,
            r_hi,
            rules,
            out_grid,
            out_matrix,
            kmin,
            kmax,
            err_scale,
            rate_scale,
            pair_ex,
            out,
        )
        if bad_step >= 0:
            raise SimulationError(
                f"follower {f.name!r} diverged to a non-finite state at t = {bad_step * dt:.6g}"
            )
        half_track = 0.5 * scenario.geometry.track_width
        v_arr = out[:, _engine.COL_V].copy()
        w_arr = out[:, _engine.COL_OMEGA].copy()
        follower_traces.append(
            FollowerTrace(
                name=f.name,
                controller=f.controller,
                x=out[:, _engine.COL_X].copy(),
                y=out[:, _engine.COL_Y].copy(),
                theta=out[:, _engine.COL_THETA].copy(),
                ex_hat=out[:, _engine.COL_EX_HAT].copy(),
                ey_hat=out[:, _engine.COL_EY_HAT].copy(),
                etheta_hat=out[:, _engine.COL_ETH_HAT].copy(),
                v=v_arr,
                omega=w_arr,
                omega_d=out[:, _engine.COL_OMEGA_D].copy(),
                theta_d=out[:, _engine.COL_THETA_D].copy(),
                k1=out[:, _engine.COL_K1].copy(),
                k2=out[:, _engine.COL_K2].copy(),
                k3=out[:, _engine.COL_K3].copy(),
                v1=out[:, _engine.COL_V1].copy(),
                v2=out[:, _engine.COL_V2].copy(),
                l_actual=out[:, _engine.COL_L_ACTUAL].copy(),
                wheel_left=(v_arr - w_arr * half_track) / scenario.geometry.wheel_radius,
                wheel_right=(v_arr + w_arr * half_track) / scenario.geometry.wheel_radius,
            )
        )

    return Trace(
        scenario=scenario,
        t=t,
        leader_x=leader_half[::2, 0].copy(),
        leader_y=leader_half[::2, 1].copy(),
        leader_theta=leader_half[::2, 2].copy(),
        followers=tuple(follower_traces),
    )


def lyapunov(e_hat: LocalError, gains: Gains) -> tuple[float, float]:
    """Candidate function values (V1, V2) at a local error.

    V1 = (ex_hat^2 + ey_hat^2) / 2 and V2 = V1 + k4 etheta_hat^2.
    """
    v1 = 0.5 * (e_hat.ex_hat**2 + e_hat.ey_hat**2)
    return (v1, v1 + gains.k4 * e_hat.etheta_hat**2)


def settling_time(trace: FollowerTrace, t: np.ndarray, fraction: float = 0.01) -> Optional[float]:
    """First time the error norm drops below `fraction` of its initial value.

    Returns None if it never does; 0.0 if the initial error is already zero.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    norms = trace.error_norm()
    if norms[0] == 0.0:
        return 0.0
    below = np.flatnonzero(norms < fraction * norms[0])
    if below.size == 0:
        return None
    return float(t[below[0]])


@dataclass(frozen=True)
class FollowerComparison:
    name: str
    max_v_bc: float
    max_omega_bc: float
    max_wheel_left_bc: float
    max_wheel_right_bc: float
    max_v_fabc: float
    max_omega_fabc: float
    max_wheel_left_fabc: float
    max_wheel_right_fabc: float
    pct_decrease_left: float
    pct_decrease_right: float
    settling_time_bc: Optional[float]
    settling_time_fabc: Optional[float]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bc": {
                "max_v": self.max_v_bc,
                "max_omega": self.max_omega_bc,
                "max_wheel_left": self.max_wheel_left_bc,
                "max_wheel_right": self.max_wheel_right_bc,
                "settling_time": self.settling_time_bc,
            },
            "fabc": {
                "max_v": self.max_v_fabc,
                "max_omega": self.max_omega_fabc,
                "max_wheel_left": self.max_wheel_left_fabc,
                "max_wheel_right": self.max_wheel_right_fabc,
                "settling_time": self.settling_time_fabc,
            },
            "pct_decrease_left": self.pct_decrease_left,
            "pct_decrease_right": self.pct_decrease_right,
        }


@dataclass(frozen=True)
class ComparisonReport:
    followers: tuple[FollowerComparison, ...]

    def to_dict(self) -> dict:
        return {"followers": [f.to_dict() for f in self.followers]}


def _pct_decrease(base: float, other: float) -> float:
    if base <= 0.0:
        return 0.0
    return 100.0 * (1.0 - other / base)


def compare(trace_bc: Trace, trace_fabc: Trace) -> ComparisonReport:
    """Peak-command comparison of matched runs differing only in controller."""
    if trace_bc.scenario.fingerprint() != trace_fabc.scenario.fingerprint():
        raise ValueError("traces come from different scenarios and cannot be compared")
    rows = []
    for fb, ff in zip(trace_bc.followers, trace_fabc.followers):
        if fb.controller == ff.controller:
            raise ValueError(
                f"follower {fb.name!r} uses controller {fb.controller!r} in both traces"
            )
        if fb.controller != "bc":
            fb, ff = ff, fb
        max_left_bc = float(np.abs(fb.wheel_left).max())
        max_right_bc = float(np.abs(fb.wheel_right).max())
        rows.append(
            FollowerComparison(
                name=fb.name,
                max_v_bc=float(np.abs(fb.v).max()),
                max_omega_bc=float(np.abs(fb.omega).max()),
                max_wheel_left_bc=max_left_bc,
                max_wheel_right_bc=max_right_bc,
                max_v_fabc=float(np.abs(ff.v).max()),
                max_omega_fabc=float(np.abs(ff.omega).max()),
                max_wheel_left_fabc=float(np.abs(ff.wheel_left).max()),
                max_wheel_right_fabc=float(np.abs(ff.wheel_right).max()),
                pct_decrease_left=_pct_decrease(max_left_bc, float(np.abs(ff.wheel_left).max())),
                pct_decrease_right=_pct_decrease(
                    max_right_bc, float(np.abs(ff.wheel_right).max())
                ),
                settling_time_bc=settling_time(fb, trace_bc.t),
                settling_time_fabc=settling_time(ff, trace_fabc.t),
            )
        )
    return ComparisonReport(followers=tuple(rows))
