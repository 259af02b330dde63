import numpy as np
import pytest

import formsim as fs
from formsim.config import load_config, scenario_path


def _load(name):
    result = load_config(scenario_path(name))
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.scenario


@pytest.fixture(scope="session")
def case_a_scenario():
    return _load("case_a")


@pytest.fixture(scope="session")
def case_b_scenario():
    return _load("case_b")


@pytest.fixture(scope="session")
def warm_engine(case_a_scenario):
    # one short run so JIT compilation never lands inside a timed section
    short = fs.Scenario(
        leader_start=case_a_scenario.leader_start,
        leader_v=case_a_scenario.leader_v,
        leader_omega=case_a_scenario.leader_omega,
        followers=case_a_scenario.followers,
        geometry=case_a_scenario.geometry,
        dt=case_a_scenario.dt,
        t_final=0.05,
    )
    fs.run(short)
    fs.run(short.with_controller("fabc"))
    return True


@pytest.fixture(scope="session")
def traces(case_a_scenario, case_b_scenario, warm_engine):
    """Full-horizon traces for both cases and both controllers, run once."""
    out = {}
    for label, scenario in (("a", case_a_scenario), ("b", case_b_scenario)):
        for kind in ("bc", "fabc"):
            out[(label, kind)] = fs.run(scenario.with_controller(kind))
    return out


def leader_arrays(trace):
    return np.column_stack([trace.leader_x, trace.leader_y, trace.leader_theta])
