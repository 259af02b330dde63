import math

import pytest
from hypothesis import given, strategies as st

from formsim.controllers import (
    Gains,
    backstepping_command,
    derive_gains,
    update_desired_heading,
)
from formsim.formation import FormationSample, FrameAngles, LocalError
from formsim.kinematics import VelocityCommand

small = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def sample(l_d=0.0, l_d_rate=0.0, alpha_d_rate=0.0):
    return FormationSample(l_d, l_d_rate, 0.0, alpha_d_rate)


class TestDeriveGains:
    def test_unit_case(self):
        g = derive_gains(1, 1, 1, c=1.0)
        assert g.k4 == 0.5
        assert g.k5 == 1.0

    def test_tuned_case(self):
        g = derive_gains(3, 3, 4, c=0.1)
        assert g.k4 == pytest.approx(0.1 * 4 / 6)
        assert g.k5 == pytest.approx(16 / 3)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            derive_gains(1, 2, 0, 0.1)
        with pytest.raises(ValueError):
            derive_gains(-1, 2, 1, 0.1)
        with pytest.raises(ValueError):
            derive_gains(1, 2, 1, 0.0)

    def test_gains_type_enforces_positivity(self):
        with pytest.raises(ValueError):
            Gains(1, 1, 1, 0.5, -1)


class TestBacksteppingCommand:
    def test_rest_equilibrium(self):
        out = backstepping_command(
            LocalError(0, 0, 0),
            VelocityCommand(0, 0),
            FrameAngles(0, 0),
            sample(),
            derive_gains(3, 3, 4, 0.1),
            c=0.1,
        )
        assert (out.cmd.v, out.cmd.omega, out.omega_d) == (0.0, 0.0, 0.0)

    def test_longitudinal_term_isolation(self):
        g = derive_gains(3, 3, 4, 0.1)
        out = backstepping_command(
            LocalError(0.2, 0, 0),
            VelocityCommand(0, 0),
            FrameAngles(0, 0),
            sample(),
            g,
            c=0.1,
        )
        assert out.cmd.v == pytest.approx(g.k1 * 0.2)
        assert out.cmd.omega == 0.0

    def test_feedforward_at_start(self):
        out = backstepping_command(
            LocalError(0, 0, 0),
            VelocityCommand(0.02, 0),
            FrameAngles(gamma=3 * math.pi / 2, lam=0.0),
            sample(l_d=0.3, l_d_rate=0.016),
            derive_gains(3, 3, 4, 0.1),
            c=0.1,
        )
        assert out.cmd.v == pytest.approx(0.02, abs=1e-12)
        assert out.cmd.omega == pytest.approx(-0.16, abs=1e-12)
        assert out.omega_d == pytest.approx(-0.16, abs=1e-12)

    def test_rejects_non_positive_c(self):
        with pytest.raises(ValueError):
            backstepping_command(
                LocalError(0, 0, 0),
                VelocityCommand(0, 0),
                FrameAngles(0, 0),
                sample(),
                derive_gains(1, 1, 1, 0.1),
                c=0.0,
            )

    @given(small, small, small, small, small, small)
    def test_omega_gap_identity(self, ex, ey, eth, vl, wl, gamma):
        # w_f - w_d == (k3 * eth - k2 * ey) / c, independent of feedforward
        g = derive_gains(3, 3, 4, 0.2)
        out = backstepping_command(
            LocalError(ex, ey, eth),
            VelocityCommand(vl, wl),
            FrameAngles(gamma, 0.3),
            sample(l_d=0.5, l_d_rate=0.1, alpha_d_rate=0.2),
            g,
            c=0.2,
        )
        e_hat = LocalError(ex, ey, eth)
        expected = (g.k3 * e_hat.etheta_hat - g.k2 * e_hat.ey_hat) / 0.2
        assert out.cmd.omega - out.omega_d == pytest.approx(expected, abs=1e-12)

    def test_continuity_in_inputs(self):
        g = derive_gains(3, 3, 4, 0.2)

        def command(eps):
            out = backstepping_command(
                LocalError(0.1 + eps, -0.2 + eps, 0.05 + eps),
                VelocityCommand(0.5, 0.3),
                FrameAngles(0.7, 0.2),
                sample(l_d=0.4, l_d_rate=0.05, alpha_d_rate=0.1),
                g,
                c=0.2,
            )
            return out.cmd.v, out.cmd.omega

        v0, w0 = command(0.0)
        v1, w1 = command(1e-8)
        assert abs(v1 - v0) < 1e-6
        assert abs(w1 - w0) < 1e-6

    def test_saturation_limits(self):
        g = derive_gains(3, 3, 4, 0.1)
        out = backstepping_command(
            LocalError(10.0, 10.0, 0.5),
            VelocityCommand(0, 0),
            FrameAngles(0, 0),
            sample(),
            g,
            c=0.1,
            v_limit=1.0,
            omega_limit=2.0,
        )
        assert abs(out.cmd.v) <= 1.0
        assert abs(out.cmd.omega) <= 2.0


class TestUpdateDesiredHeading:
    def test_zero_dt(self):
        assert update_desired_heading(0.4, 5.0, 0.0) == 0.4

    def test_linear_advance(self):
        assert update_desired_heading(0.0, 1.0, 0.5) == pytest.approx(0.5)

    def test_wraps(self):
        assert update_desired_heading(math.pi - 0.1, 1.0, 0.2) == pytest.approx(-math.pi + 0.1)

    def test_rejects_negative_dt(self):
        with pytest.raises(ValueError):
            update_desired_heading(0.0, 1.0, -0.1)
