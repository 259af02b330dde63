"""Scenario config files: INI-style parsing, validation and diagnostics.

Layout:

    [leader]            x, y, theta (constant expressions), v, omega (time expressions)
    [sim]               c, t_final; optional dt, wheel_radius, track_width
    [follower.<name>]   x, y, theta; optional controller (bc|fabc), v_limit, omega_limit
    [formation.<name>]  l, l_rate, alpha, alpha_rate (time expressions)
    [controller.<name>] optional k1, k2, k3
    [fuzzy]             optional tuner settings, shared by all fabc followers

Every `follower.<name>` needs a matching `formation.<name>`.  The loader
returns located diagnostics instead of raising, so the CLI can report
all problems at once.  A rate expression that disagrees with the finite
difference of its value expression over the horizon produces a warning,
not an error.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import exprlang
from .exprlang import Expr, ExprError, ExprSyntaxError
from .kinematics import Pose, RobotGeometry
from .sim import CONTROLLER_KINDS, FollowerSetup, FuzzyConfig, Scenario

__all__ = [
    "Diagnostic",
    "ConfigResult",
    "load_config",
    "check_rate_consistency",
    "scenario_path",
    "available_scenarios",
]

RATE_CHECK_TOLERANCE = 1e-6
_RATE_CHECK_STEP = 1e-4
_RATE_CHECK_POINTS = 2001


@dataclass(frozen=True)
class Diagnostic:
    """One located validation finding."""

    severity: str  # "error" or "warning"
    section: str
    key: Optional[str]
    message: str

    def __str__(self) -> str:
        where = f"[{self.section}]" + (f" {self.key}" if self.key else "")
        return f"{self.severity}: {where}: {self.message}"


@dataclass(frozen=True)
class ConfigResult:
    """Outcome of loading a config: a scenario (if clean) plus diagnostics."""

    scenario: Optional[Scenario]
    diagnostics: tuple[Diagnostic, ...]

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "warning")

    @property
    def ok(self) -> bool:
        return self.scenario is not None and not self.errors


class _Collector:
    def __init__(self):
        self.items: list[Diagnostic] = []

    def error(self, section: str, key: Optional[str], message: str) -> None:
        self.items.append(Diagnostic("error", section, key, message))

    def warning(self, section: str, key: Optional[str], message: str) -> None:
        self.items.append(Diagnostic("warning", section, key, message))


def _parse_expr(raw: str, section: str, key: str, diags: _Collector) -> Optional[Expr]:
    try:
        return exprlang.parse(raw)
    except ExprSyntaxError as exc:
        diags.error(section, key, str(exc))
    except ExprError as exc:
        diags.error(section, key, str(exc))
    return None


def _const(raw: str, section: str, key: str, diags: _Collector) -> Optional[float]:
    """A constant expression such as `3*pi/2`; the variable t is rejected."""
    expr = _parse_expr(raw, section, key, diags)
    if expr is None:
        return None
    if exprlang.uses_time(expr):
        diags.error(section, key, "must be a constant (the variable t is not allowed here)")
        return None
    try:
        return exprlang.evaluate(expr, 0.0)
    except ExprError as exc:
        diags.error(section, key, str(exc))
        return None


def _number(
    parser: configparser.ConfigParser,
    section: str,
    key: str,
    diags: _Collector,
    default: Optional[float] = None,
    required: bool = False,
) -> Optional[float]:
    if not parser.has_option(section, key):
        if required:
            diags.error(section, key, "required key is missing")
            return None
        return default
    raw = parser.get(section, key)
    try:
        value = float(raw)
    except ValueError:
        diags.error(section, key, f"not a number: {raw!r}")
        return None
    if not math.isfinite(value):
        diags.error(section, key, f"must be finite, got {raw!r}")
        return None
    return value


def _require_expr(
    parser: configparser.ConfigParser, section: str, key: str, diags: _Collector
) -> Optional[Expr]:
    if not parser.has_option(section, key):
        diags.error(section, key, "required key is missing")
        return None
    return _parse_expr(parser.get(section, key), section, key, diags)


def _require_const(
    parser: configparser.ConfigParser, section: str, key: str, diags: _Collector
) -> Optional[float]:
    if not parser.has_option(section, key):
        diags.error(section, key, "required key is missing")
        return None
    return _const(parser.get(section, key), section, key, diags)


def check_rate_consistency(
    value: Expr, rate: Expr, t_final: float, tolerance: float = RATE_CHECK_TOLERANCE
) -> Optional[float]:
    """Compare `rate` with a central finite difference of `value`.

    Returns the worst relative mismatch if it exceeds `tolerance`
    (relative to max(1, sup |rate|) over the horizon), else None.
    """
    ts = np.linspace(0.0, t_final, _RATE_CHECK_POINTS)
    h = _RATE_CHECK_STEP
    fd = (exprlang.evaluate_array(value, ts + h) - exprlang.evaluate_array(value, ts - h)) / (
        2.0 * h
    )
    stated = exprlang.evaluate_array(rate, ts)
    if not (np.isfinite(fd).all() and np.isfinite(stated).all()):
        return math.inf
    scale = max(1.0, float(np.abs(stated).max()))
    worst = float(np.abs(fd - stated).max()) / scale
    return worst if worst > tolerance else None


def load_config(path: Union[str, Path]) -> ConfigResult:
    """Parse and validate a scenario config file."""
    diags = _Collector()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        diags.error("<file>", None, str(exc))
        return ConfigResult(None, tuple(diags.items))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        diags.error("<file>", None, str(exc))
        return ConfigResult(None, tuple(diags.items))

    known_prefixes = ("follower.", "formation.", "controller.")
    for section in parser.sections():
        if section in ("leader", "sim", "fuzzy"):
            continue
        if not section.startswith(known_prefixes):
            diags.error(section, None, "unknown section")

    # [leader]
    if not parser.has_section("leader"):
        diags.error("leader", None, "section is missing")
        leader_start = None
        leader_v = leader_omega = None
    else:
        lx = _require_const(parser, "leader", "x", diags)
        ly = _require_const(parser, "leader", "y", diags)
        lth = _require_const(parser, "leader", "theta", diags)
        leader_v = _require_expr(parser, "leader", "v", diags)
        leader_omega = _require_expr(parser, "leader", "omega", diags)
        leader_start = None
        if None not in (lx, ly, lth):
            leader_start = Pose(lx, ly, lth)

    # [sim]
    if not parser.has_section("sim"):
        diags.error("sim", None, "section is missing")
        dt = t_final = c = None
        wheel_radius = track_width = None
    else:
        dt = _number(parser, "sim", "dt", diags, default=1e-3)
        t_final = _number(parser, "sim", "t_final", diags, required=True)
        c = _number(parser, "sim", "c", diags, required=True)
        wheel_radius = _number(parser, "sim", "wheel_radius", diags, default=0.05)
        track_width = _number(parser, "sim", "track_width", diags, default=0.2)
        if dt is not None and not dt > 0.0:
            diags.error("sim", "dt", f"must be > 0, got {dt}")
            dt = None
        if t_final is not None and not t_final > 0.0:
            diags.error("sim", "t_final", f"must be > 0, got {t_final}")
            t_final = None
        if c is not None and not c > 0.0:
            diags.error("sim", "c", f"must be > 0, got {c}")
            c = None
        if wheel_radius is not None and not wheel_radius > 0.0:
            diags.error("sim", "wheel_radius", f"must be > 0, got {wheel_radius}")
            wheel_radius = None
        if track_width is not None and not track_width > 0.0:
            diags.error("sim", "track_width", f"must be > 0, got {track_width}")
            track_width = None

    # [fuzzy]
    fuzzy = FuzzyConfig()
    if parser.has_section("fuzzy"):
        kwargs = {}
        for key, attr in (
            ("error_scale", "error_scale"),
            ("rate_scale", "rate_scale"),
            ("kappa_min", "kappa_min"),
            ("kappa_max", "kappa_max"),
        ):
            value = _number(parser, "fuzzy", key, diags)
            if value is not None:
                kwargs[attr] = value
        if parser.has_option("fuzzy", "resolution"):
            raw = parser.get("fuzzy", "resolution")
            try:
                kwargs["resolution"] = int(raw)
            except ValueError:
                diags.error("fuzzy", "resolution", f"not an integer: {raw!r}")
        try:
            candidate = FuzzyConfig(**kwargs)
            candidate.build_tuner()  # surfaces range errors
            fuzzy = candidate
        except ValueError as exc:
            diags.error("fuzzy", None, str(exc))

    follower_names = [
        s.split(".", 1)[1] for s in parser.sections() if s.startswith("follower.")
    ]
    if not follower_names:
        diags.error("<file>", None, "at least one [follower.<name>] section is required")
    for prefix in ("formation", "controller"):
        for section in parser.sections():
            if section.startswith(prefix + "."):
                name = section.split(".", 1)[1]
                if name not in follower_names:
                    diags.error(section, None, f"no matching [follower.{name}] section")

    followers = []
    for name in follower_names:
        fsec = f"follower.{name}"
        x = _require_const(parser, fsec, "x", diags)
        y = _require_const(parser, fsec, "y", diags)
        th = _require_const(parser, fsec, "theta", diags)
        controller = parser.get(fsec, "controller", fallback="bc").strip().lower()
        if controller not in CONTROLLER_KINDS:
            diags.error(
                fsec, "controller", f"must be one of {'/'.join(CONTROLLER_KINDS)}, got {controller!r}"
            )
        v_limit = _number(parser, fsec, "v_limit", diags)
        omega_limit = _number(parser, fsec, "omega_limit", diags)
        for lname, lim in (("v_limit", v_limit), ("omega_limit", omega_limit)):
            if lim is not None and not lim > 0.0:
                diags.error(fsec, lname, f"must be > 0 when set, got {lim}")

        msec = f"formation.{name}"
        if not parser.has_section(msec):
            diags.error(msec, None, f"section is missing for follower {name!r}")
            l = lr = a = ar = None
        else:
            l = _require_expr(parser, msec, "l", diags)
            lr = _require_expr(parser, msec, "l_rate", diags)
            a = _require_expr(parser, msec, "alpha", diags)
            ar = _require_expr(parser, msec, "alpha_rate", diags)

        csec = f"controller.{name}"
        gains = {"k1": 3.0, "k2": 3.0, "k3": 4.0}
        if parser.has_section(csec):
            for gname in gains:
                value = _number(parser, csec, gname, diags)
                if value is not None:
                    gains[gname] = value
        for gname, g in gains.items():
            if not g > 0.0:
                diags.error(csec, gname, "controller gains must be positive")

        if t_final is not None and None not in (l, lr, a, ar):
            for vname, rname, value, rate in (
                ("l", "l_rate", l, lr),
                ("alpha", "alpha_rate", a, ar),
            ):
                try:
                    worst = check_rate_consistency(value, rate, t_final)
                except ExprError as exc:
                    diags.error(msec, vname, f"cannot evaluate over the horizon: {exc}")
                    continue
                if worst is not None:
                    diags.warning(
                        msec,
                        rname,
                        f"disagrees with the finite difference of {vname} "
                        f"(relative mismatch {worst:.3g} > {RATE_CHECK_TOLERANCE:g})",
                    )

        if None in (x, y, th, l, lr, a, ar) or controller not in CONTROLLER_KINDS:
            continue
        if any(not g > 0.0 for g in gains.values()):
            continue
        followers.append(
            FollowerSetup(
                name=name,
                start=Pose(x, y, th),
                l=l,
                l_rate=lr,
                alpha=a,
                alpha_rate=ar,
                controller=controller,
                k1=gains["k1"],
                k2=gains["k2"],
                k3=gains["k3"],
                fuzzy=fuzzy,
                v_limit=v_limit,
                omega_limit=omega_limit,
            )
        )

    if (
        diags.items
        and any(d.severity == "error" for d in diags.items)
        or leader_start is None
        or leader_v is None
        or leader_omega is None
        or None in (dt, t_final, c, wheel_radius, track_width)
        or len(followers) != len(follower_names)
    ):
        return ConfigResult(None, tuple(diags.items))

    try:
        scenario = Scenario(
            leader_start=leader_start,
            leader_v=leader_v,
            leader_omega=leader_omega,
            followers=tuple(followers),
            geometry=RobotGeometry(c=c, wheel_radius=wheel_radius, track_width=track_width),
            dt=dt,
            t_final=t_final,
        )
    except ValueError as exc:
        diags.error("<file>", None, str(exc))
        return ConfigResult(None, tuple(diags.items))
    return ConfigResult(scenario, tuple(diags.items))


def scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario config (e.g. 'case_a')."""
    candidate = resources.files("formsim").joinpath("scenarios", f"{name}.cfg")
    with resources.as_file(candidate) as p:
        if not p.exists():
            raise FileNotFoundError(f"no bundled scenario named {name!r}")
        return Path(p)


def available_scenarios() -> list[str]:
    root = resources.files("formsim").joinpath("scenarios")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))
