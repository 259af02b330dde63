import math

import numpy as np
import pytest

import formsim as fs
from formsim import exprlang
from formsim.controllers import backstepping_command, derive_gains
from formsim.formation import (
    FormationSample,
    frame_angles,
    global_error,
    to_local,
)
from formsim.kinematics import Pose, RobotGeometry, VelocityCommand
from formsim.sim import (
    FollowerSetup,
    FuzzyConfig,
    Scenario,
    SimulationError,
    compare,
    lyapunov,
    run,
    settling_time,
)


def tiny_scenario(ctrl="bc", t_final=2.0, follower_start=None, omega="0.4*sin(t)"):
    follower = FollowerSetup(
        name="f1",
        start=follower_start or Pose(-0.6, -0.4, 0.3),
        l=exprlang.parse("0.5+0.1*sin(t)"),
        l_rate=exprlang.parse("0.1*cos(t)"),
        alpha=exprlang.parse("pi"),
        alpha_rate=exprlang.parse("0"),
        controller=ctrl,
    )
    return Scenario(
        leader_start=Pose(0, 0, 0.2),
        leader_v=exprlang.parse("0.3"),
        leader_omega=exprlang.parse(omega),
        followers=(follower,),
        geometry=RobotGeometry(c=0.3),
        dt=1e-3,
        t_final=t_final,
    )


class TestLyapunov:
    def test_zero_error(self):
        g = derive_gains(3, 3, 4, 0.1)
        assert lyapunov(fs.LocalError(0, 0, 0), g) == (0.0, 0.0)

    def test_position_only(self):
        g = derive_gains(3, 3, 4, 0.1)
        v1, v2 = lyapunov(fs.LocalError(0.15, 0.15, 0), g)
        assert v1 == pytest.approx(0.0225)
        assert v2 == pytest.approx(0.0225)

    def test_heading_only(self):
        g = derive_gains(3, 3, 4, 0.1)
        v1, v2 = lyapunov(fs.LocalError(0, 0, 1), g)
        assert v1 == 0.0
        assert v2 == pytest.approx(0.0667, abs=1e-4)


class TestScenarioValidation:
    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            Scenario(
                leader_start=Pose(0, 0, 0),
                leader_v=exprlang.parse("0"),
                leader_omega=exprlang.parse("0"),
                followers=tiny_scenario().followers,
                dt=0.0,
                t_final=1.0,
                geometry=RobotGeometry(c=0.1),
            )

    def test_rejects_zero_c(self):
        with pytest.raises(ValueError):
            Scenario(
                leader_start=Pose(0, 0, 0),
                leader_v=exprlang.parse("0"),
                leader_omega=exprlang.parse("0"),
                followers=tiny_scenario().followers,
                geometry=RobotGeometry(c=0.0),
            )

    def test_rejects_no_followers(self):
        with pytest.raises(ValueError):
            Scenario(
                leader_start=Pose(0, 0, 0),
                leader_v=exprlang.parse("0"),
                leader_omega=exprlang.parse("0"),
                followers=(),
                geometry=RobotGeometry(c=0.1),
            )

    def test_rejects_duplicate_names(self):
        f = tiny_scenario().followers[0]
        with pytest.raises(ValueError):
            Scenario(
                leader_start=Pose(0, 0, 0),
                leader_v=exprlang.parse("0"),
                leader_omega=exprlang.parse("0"),
                followers=(f, f),
                geometry=RobotGeometry(c=0.1),
            )

    def test_rejects_unknown_controller(self):
        with pytest.raises(ValueError):
            FollowerSetup(
                name="f",
                start=Pose(0, 0, 0),
                l=exprlang.parse("1"),
                l_rate=exprlang.parse("0"),
                alpha=exprlang.parse("0"),
                alpha_rate=exprlang.parse("0"),
                controller="pid",
            )


class TestRun:
    def test_timestamps_are_exact_multiples(self, warm_engine):
        trace = run(tiny_scenario(t_final=0.5))
        for k in (0, 1, 137, 500):
            assert trace.t[k] == k * 1e-3

    def test_row_count(self, warm_engine):
        trace = run(tiny_scenario(t_final=0.5))
        assert trace.t.size == 501

    def test_deterministic(self, warm_engine):
        a = run(tiny_scenario())
        b = run(tiny_scenario())
        assert np.array_equal(a.followers[0].x, b.followers[0].x)
        assert np.array_equal(a.followers[0].omega, b.followers[0].omega)
        c = run(tiny_scenario(ctrl="fabc"))
        d = run(tiny_scenario(ctrl="fabc"))
        assert np.array_equal(c.followers[0].k1, d.followers[0].k1)
        assert np.array_equal(c.followers[0].x, d.followers[0].x)

    def test_recorded_commands_match_control_law(self, warm_engine):
        """The kernel must agree with the public single-step operations."""
        scenario = tiny_scenario(t_final=0.5)
        trace = run(scenario)
        f = trace.followers[0]
        setup = scenario.followers[0]
        c = scenario.geometry.c
        gains = setup.gains(c)
        for k in (0, 123, 400):
            t = trace.t[k]
            leader = Pose(trace.leader_x[k], trace.leader_y[k], trace.leader_theta[k])
            spec = FormationSample(
                exprlang.evaluate(setup.l, t),
                exprlang.evaluate(setup.l_rate, t),
                exprlang.evaluate(setup.alpha, t),
                exprlang.evaluate(setup.alpha_rate, t),
            )
            desired = fs.desired_pose(leader, spec, c, f.theta_d[k])
            e = global_error(desired, Pose(f.x[k], f.y[k], f.theta[k]))
            e_hat = to_local(e, f.theta[k])
            assert e_hat.ex_hat == pytest.approx(f.ex_hat[k], abs=1e-12)
            assert e_hat.ey_hat == pytest.approx(f.ey_hat[k], abs=1e-12)
            assert e_hat.etheta_hat == pytest.approx(f.etheta_hat[k], abs=1e-12)
            angles = frame_angles(leader.theta, f.theta[k], spec.alpha_d)
            leader_cmd = VelocityCommand(
                exprlang.evaluate(scenario.leader_v, t),
                exprlang.evaluate(scenario.leader_omega, t),
            )
            out = backstepping_command(e_hat, leader_cmd, angles, spec, gains, c)
            assert out.cmd.v == pytest.approx(f.v[k], abs=1e-9)
            assert out.cmd.omega == pytest.approx(f.omega[k], abs=1e-9)
            assert out.omega_d == pytest.approx(f.omega_d[k], abs=1e-9)
            v1, v2 = lyapunov(e_hat, gains)
            assert v1 == pytest.approx(f.v1[k], abs=1e-12)
            assert v2 == pytest.approx(f.v2[k], abs=1e-12)

    def test_leader_follows_profile(self, warm_engine):
        # straight leader: heading constant, speed matches the profile
        scenario = tiny_scenario(t_final=1.0, omega="0")
        trace = run(scenario)
        assert np.allclose(trace.leader_theta, 0.2)
        dist = math.hypot(
            trace.leader_x[-1] - trace.leader_x[0], trace.leader_y[-1] - trace.leader_y[0]
        )
        assert dist == pytest.approx(0.3 * 1.0, rel=1e-9)

    def test_converges(self, warm_engine):
        trace = run(tiny_scenario(t_final=10.0))
        f = trace.followers[0]
        assert f.error_norm()[-1] < 1e-8
        assert settling_time(f, trace.t) is not None

    def test_fabc_gains_recorded(self, warm_engine):
        trace = run(tiny_scenario(ctrl="fabc", t_final=1.0))
        f = trace.followers[0]
        assert np.array_equal(f.k2, f.k3)
        assert (f.k1 >= 0.1).all() and (f.k1 <= 5.0).all()
        # BC runs record the constant configured gains instead
        trace_bc = run(tiny_scenario(t_final=1.0))
        assert (trace_bc.followers[0].k1 == 3.0).all()

    def test_non_finite_expression_rejected(self, warm_engine):
        bad = tiny_scenario()
        bad = Scenario(
            leader_start=bad.leader_start,
            leader_v=exprlang.parse("1/(t-1)"),
            leader_omega=bad.leader_omega,
            followers=bad.followers,
            geometry=bad.geometry,
            dt=bad.dt,
            t_final=bad.t_final,
        )
        with pytest.raises(SimulationError, match="non-finite"):
            run(bad)

    def test_divergence_aborts_with_diagnostic(self, warm_engine):
        # absurd gains at a coarse step make RK4 unstable on purpose
        f = FollowerSetup(
            name="f1",
            start=Pose(5.0, 5.0, 0.0),
            l=exprlang.parse("1"),
            l_rate=exprlang.parse("0"),
            alpha=exprlang.parse("0"),
            alpha_rate=exprlang.parse("0"),
            k1=1e6,
            k2=1e6,
            k3=1e6,
        )
        scenario = Scenario(
            leader_start=Pose(0, 0, 0),
            leader_v=exprlang.parse("0"),
            leader_omega=exprlang.parse("0"),
            followers=(f,),
            geometry=RobotGeometry(c=0.01),
            dt=0.1,
            t_final=20.0,
        )
        with pytest.raises(SimulationError, match="diverged"):
            run(scenario)

    def test_multiple_followers(self, warm_engine):
        base = tiny_scenario(t_final=0.5)
        f2 = FollowerSetup(
            name="f2",
            start=Pose(0.5, 0.5, 0.0),
            l=exprlang.parse("0.4"),
            l_rate=exprlang.parse("0"),
            alpha=exprlang.parse("pi/2"),
            alpha_rate=exprlang.parse("0"),
            controller="fabc",
        )
        scenario = Scenario(
            leader_start=base.leader_start,
            leader_v=base.leader_v,
            leader_omega=base.leader_omega,
            followers=(base.followers[0], f2),
            geometry=base.geometry,
            dt=base.dt,
            t_final=base.t_final,
        )
        trace = run(scenario)
        assert len(trace.followers) == 2
        assert trace.follower("f2").controller == "fabc"
        with pytest.raises(KeyError):
            trace.follower("nope")


class TestSettlingTime:
    def test_settles_at_loose_fraction(self, warm_engine):
        scenario = tiny_scenario(t_final=0.2)
        trace = run(scenario)
        f = trace.followers[0]
        assert settling_time(f, trace.t, fraction=0.5) is not None

    def test_never_settles_returns_none(self):
        f = run(tiny_scenario(t_final=0.01)).followers[0]
        assert settling_time(f, np.arange(f.x.size) * 1e-3, fraction=1e-9) is None

    def test_rejects_bad_fraction(self):
        f = run(tiny_scenario(t_final=0.01)).followers[0]
        with pytest.raises(ValueError):
            settling_time(f, np.zeros(f.x.size), fraction=1.5)


class TestCompare:
    def test_identical_controllers_rejected(self, warm_engine):
        a = run(tiny_scenario())
        b = run(tiny_scenario())
        with pytest.raises(ValueError, match="both traces"):
            compare(a, b)

    def test_mismatched_scenarios_rejected(self, warm_engine):
        a = run(tiny_scenario())
        b = run(tiny_scenario(ctrl="fabc", t_final=1.0))
        with pytest.raises(ValueError, match="different scenarios"):
            compare(a, b)

    def test_report_fields(self, warm_engine):
        a = run(tiny_scenario())
        b = run(tiny_scenario(ctrl="fabc"))
        report = compare(a, b)
        row = report.followers[0]
        assert row.max_wheel_left_bc > 0
        assert row.pct_decrease_left == pytest.approx(
            100 * (1 - row.max_wheel_left_fabc / row.max_wheel_left_bc)
        )
        d = row.to_dict()
        assert d["bc"]["max_v"] == row.max_v_bc

    def test_argument_order_is_detected(self, warm_engine):
        a = run(tiny_scenario())
        b = run(tiny_scenario(ctrl="fabc"))
        assert compare(a, b).followers[0].max_v_bc == compare(b, a).followers[0].max_v_bc

    def test_zero_error_start_gives_zero_decrease(self, warm_engine):
        # follower placed exactly on its desired pose: both controllers
        # emit pure feedforward, so there is no jump to remove
        scenario = tiny_scenario(omega="0")
        leader = scenario.leader_start
        setup = scenario.followers[0]
        c = scenario.geometry.c
        spec = FormationSample(
            exprlang.evaluate(setup.l, 0.0),
            exprlang.evaluate(setup.l_rate, 0.0),
            exprlang.evaluate(setup.alpha, 0.0),
            exprlang.evaluate(setup.alpha_rate, 0.0),
        )
        start = fs.desired_pose(leader, spec, c, leader.theta)
        scenario = tiny_scenario(omega="0", follower_start=Pose(start.x, start.y, leader.theta))
        a = run(scenario)
        b = run(scenario.with_controller("fabc"))
        report = compare(a, b)
        assert abs(report.followers[0].pct_decrease_left) < 1e-3
        assert abs(report.followers[0].pct_decrease_right) < 1e-3

    def test_zero_command_guard(self):
        from formsim.sim import _pct_decrease

        assert _pct_decrease(0.0, 0.0) == 0.0


class TestFuzzyConfig:
    def test_builds_tuner(self):
        tuner = FuzzyConfig(rate_scale=5.0).build_tuner()
        assert tuner.rate_scale == 5.0

    def test_invalid_config_raises_on_build(self):
        with pytest.raises(ValueError):
            FuzzyConfig(kappa_min=0.0).build_tuner()
