"""Formation-control simulation for differential-drive robots.

Leader-follower formations with time-varying desired distance and
bearing, a backstepping tracking controller, an optional fuzzy-adaptive
gain tuner, and a small expression language for specifying trajectories
and formation functions.
"""

from .controllers import ControlOutput, Gains, backstepping_command, derive_gains
from .exprlang import ExprError, ExprEvalError, ExprSyntaxError, evaluate, parse, to_source
from .formation import (
    FormationSample,
    FrameAngles,
    GlobalError,
    LocalError,
    LocalErrorRate,
    desired_pose,
    error_rates,
    frame_angles,
    from_local,
    global_error,
    relative_distance,
    to_local,
)
from .fuzzy import GainTuner, MembershipFunctionSet, RuleTable
from .kinematics import (
    Pose,
    PoseRate,
    RobotGeometry,
    VelocityCommand,
    WheelSpeeds,
    integrate_step,
    unicycle_rate,
    wheel_speeds,
    wrap_angle,
)
from .sim import (
    ComparisonReport,
    FollowerSetup,
    FollowerTrace,
    FuzzyConfig,
    Scenario,
    SimulationError,
    Trace,
    compare,
    lyapunov,
    run,
    settling_time,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Pose",
    "PoseRate",
    "VelocityCommand",
    "RobotGeometry",
    "WheelSpeeds",
    "wrap_angle",
    "unicycle_rate",
    "integrate_step",
    "wheel_speeds",
    "FormationSample",
    "GlobalError",
    "LocalError",
    "LocalErrorRate",
    "FrameAngles",
    "frame_angles",
    "desired_pose",
    "global_error",
    "to_local",
    "from_local",
    "error_rates",
    "relative_distance",
    "Gains",
    "ControlOutput",
    "derive_gains",
    "backstepping_command",
    "GainTuner",
    "MembershipFunctionSet",
    "RuleTable",
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "to_source",
    "SimulationError",
    "FuzzyConfig",
    "FollowerSetup",
    "Scenario",
    "Trace",
    "FollowerTrace",
    "ComparisonReport",
    "run",
    "lyapunov",
    "settling_time",
    "compare",
]
