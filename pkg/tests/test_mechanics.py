import dataclasses
import math

import numpy as np
import pytest

from fluxlev import circuit as ci
from fluxlev import mechanics as me
from fluxlev import sim


def ideal_undamped(system):
    """Zero loop resistance, zero damping: conservative dynamics."""
    return dataclasses.replace(
        system,
        circuit=ci.CircuitParams(R_loop=0.0),
        body=me.BodyParams(damping_c=0.0))


def oscillation_plan(system, z0=0.020, z_eq=0.0198, t_end=30.0, rel_tol=1e-9):
    """Release at z0 with the linkage set for an equilibrium slightly above.

    The support drops away at full table speed so the freed magnet can ring
    around z_eq without grazing the table.
    """
    sysm = system
    w = sysm.body.weight
    i_req = w / (-sysm.dmdz(z_eq) * sysm.sheet_current)
    lam_target = sysm.circuit.L_coil * i_req + sysm.m(z_eq) * sysm.sheet_current
    i_start = (lam_target - sysm.m(z0) * sysm.sheet_current) / sysm.circuit.L_coil
    table = me.SupportTrajectory(points=((0.0, z0), (60.0, z0 + 0.03)))
    return sim.RunPlan(
        scenario_id="ring", system=sysm, table=table,
        sim=sim.SimConfig(t_end=t_end, record_period=0.005, rel_tol=rel_tol),
        i_start=i_start)


# ---------------------------------------------------------------------------
# parameters, trajectory, contact rules
# ---------------------------------------------------------------------------

def test_body_params():
    body = me.BodyParams()
    assert body.weight == pytest.approx(0.450 * 9.81)
    assert me.BodyParams(weight_override=4.5).weight == 4.5
    with pytest.raises(ValueError):
        me.BodyParams(mass=0.0)
    with pytest.raises(ValueError):
        me.BodyParams(damping_c=-1.0)


def test_support_trajectory_interpolation():
    table = me.SupportTrajectory(points=((0.0, 0.013), (5.0, 0.013), (59.0, 0.040)))
    assert table.gap(-1.0) == 0.013
    assert table.gap(2.0) == 0.013
    assert table.gap(32.0) == pytest.approx(0.013 + 0.027 * 0.5)
    assert table.gap(100.0) == 0.040
    assert table.speed(2.0) == 0.0
    assert table.speed(30.0) == pytest.approx(0.5e-3)
    assert table.speed(80.0) == 0.0
    assert table.next_node(2.0) == 5.0
    assert table.next_node(59.0) == math.inf


def test_support_trajectory_validation():
    with pytest.raises(ValueError, match="speed"):
        me.SupportTrajectory(points=((0.0, 0.013), (1.0, 0.040)))
    with pytest.raises(ValueError, match="increasing"):
        me.SupportTrajectory(points=((0.0, 0.013), (0.0, 0.014)))
    with pytest.raises(ValueError):
        me.SupportTrajectory(points=())


def test_net_force_and_rhs_signs():
    body = me.BodyParams()
    # parked, no current: net force is minus the weight
    assert me.net_force(0.0, 0.0, body) == pytest.approx(-body.weight)
    # equilibrium: electromagnetic pull equals the weight
    assert me.net_force(body.weight, 0.0, body) == 0.0
    # falling magnet (z_dot > 0): damping adds upward force,
    # and the gap acceleration opposes the fall
    f_fall = me.net_force(0.0, 0.1, body)
    assert f_fall > -body.weight
    _, zdd = me.mechanics_rhs(0.1, 0.0, body)
    assert zdd < body.weight / body.mass  # damped below free-fall rate
    assert zdd > 0.0


def test_contact_update_rules():
    body = me.BodyParams()
    table = me.SupportTrajectory(points=((0.0, 0.020), (40.0, 0.040)))
    supported = me.MotionState(z=0.020, z_dot=0.5e-3, contact=me.SUPPORTED)
    # weak pull: stays on the table
    out = me.contact_update(supported, 0.5 * body.weight, body, table, 10.0)
    assert out.contact == me.SUPPORTED
    assert out.z == pytest.approx(table.gap(10.0))
    # pull beyond the weight: lifts off carrying the table velocity
    out = me.contact_update(supported, 1.5 * body.weight, body, table, 10.0)
    assert out.contact == me.FREE
    assert out.z_dot == pytest.approx(0.5e-3)
    # free magnet reaching the table while closing: captured inelastically
    free = me.MotionState(z=0.0305, z_dot=0.2, contact=me.FREE)
    out = me.contact_update(free, 0.0, body, table, 20.0)
    assert out.contact == me.SUPPORTED
    assert out.z == pytest.approx(table.gap(20.0))
    assert out.z_dot == pytest.approx(table.speed(20.0))
    # free magnet above the table: unaffected
    free = me.MotionState(z=0.020, z_dot=0.0, contact=me.FREE)
    assert me.contact_update(free, 0.0, body, table, 20.0) is free


def test_normal_force():
    body = me.BodyParams()
    assert me.support_normal_force(0.0, body) == pytest.approx(body.weight)
    assert me.support_normal_force(2.0 * body.weight, body) < 0.0


# ---------------------------------------------------------------------------
# integrated dynamics
# ---------------------------------------------------------------------------

def test_ballistic_drop(system):
    # no magnetization, no damping: the gap follows the free-fall parabola
    # until the magnet lands on the parked table
    quiet = dataclasses.replace(
        system,
        magnet=dataclasses.replace(system.magnet, sheet_current_per_loop=0.0),
        body=me.BodyParams(damping_c=0.0))
    table = me.SupportTrajectory(points=((0.0, 0.120),))
    plan = sim.RunPlan(scenario_id="drop", system=quiet, table=table,
                       sim=sim.SimConfig(t_end=0.2, record_period=0.005),
                       start_state=(0.020, 0.0))
    record = sim.run_plan(plan)
    t = np.asarray(record["t"])
    z = np.asarray(record["z"])
    free = np.asarray(record["contact_flag"]) == me.FREE
    assert free[0] and not free[-1]  # released, then landed
    expected = 0.020 + 0.5 * 9.81 * t[free] ** 2
    assert np.max(np.abs(z[free] - expected)) < 1e-9
    # touchdown located at the parabola's table crossing
    t_td = [e for e in record.events if e[1] == "touchdown"][0][0]
    assert t_td == pytest.approx(math.sqrt(2 * 0.1 / 9.81), abs=1e-5)


def test_oscillation_frequency_matches_stiffness(system):
    sysm = ideal_undamped(system)
    plan = oscillation_plan(sysm, t_end=25.0)
    record = sim.run_plan(plan)
    t = np.asarray(record["t"])
    z = np.asarray(record["z"])
    free = np.asarray(record["contact_flag"]) == me.FREE
    assert free.any()
    t, z = t[free], z[free]
    # measured period from mean crossings over many cycles
    zm = z - z.mean()
    crossings = t[1:][(zm[1:] > 0) != (zm[:-1] > 0)]
    period = 2.0 * np.mean(np.diff(crossings))
    lam = plan.system.locked_linkage(plan.table.gap(0.0), plan.i_start)
    z_eq = z.mean()
    k_eff = sysm.quasi_static_stiffness(lam, float(z_eq))
    assert k_eff > 0.0
    expected = 2.0 * math.pi * math.sqrt(sysm.body.mass / k_eff)
    assert period == pytest.approx(expected, rel=0.01)


def test_energy_audit_undamped(system):
    # conservative case: kinetic + gravitational + coil magnetic energy is
    # an invariant of the flux-locked dynamics
    sysm = ideal_undamped(system)
    plan = oscillation_plan(sysm, t_end=30.0)  # roughly 100 ring periods
    record = sim.run_plan(plan)
    free = np.asarray(record["contact_flag"]) == me.FREE
    z = np.asarray(record["z"])[free]
    zd = np.asarray(record["z_dot"])[free]
    i = np.asarray(record["i_coil"])[free]
    m_b = sysm.body.mass
    L = sysm.circuit.L_coil
    energy = 0.5 * m_b * zd ** 2 + 0.5 * L * i ** 2 - m_b * sysm.body.g * z
    swing = (0.5 * m_b * zd ** 2 + 0.5 * L * i ** 2).max()
    drift = np.max(np.abs(energy - energy[0]))
    assert drift <= 1e-3 * swing


def test_table_captures_hovering_magnet_and_releases(system):
    # a rising table scoops up a stably hovering magnet (inelastic capture
    # with the table's velocity), carries it up, and the magnet lifts off
    # again once the table descends past the levitation point
    sysm = system
    z_eq = 0.020
    i_req = sysm.body.weight / (-sysm.dmdz(z_eq) * sysm.sheet_current)
    lam = sysm.circuit.L_coil * i_req + sysm.m(z_eq) * sysm.sheet_current
    i_start = (lam - sysm.m(z_eq) * sysm.sheet_current) / sysm.circuit.L_coil
    table = me.SupportTrajectory(points=((0.0, 0.035), (40.0, 0.015), (80.0, 0.035)))
    plan = sim.RunPlan(scenario_id="scoop", system=sysm, table=table,
                       sim=sim.SimConfig(t_end=75.0, record_period=0.05),
                       start_state=(z_eq, 0.0), i_start=i_start)
    record = sim.run_plan(plan)
    labels = [label for _, label in record.events]
    assert labels.count("touchdown") == 1
    assert labels.count("liftoff") == 1
    t_td = record.events[0][0]
    t_lo = record.events[1][0]
    assert t_td < 40.0 < t_lo
    # carried up to the 15 mm turnaround while supported
    t = np.asarray(record["t"])
    z = np.asarray(record["z"])
    k = int(np.searchsorted(t, 40.0))
    assert z[k] == pytest.approx(0.015, abs=1e-6)
    assert record["contact_flag"][k] == me.SUPPORTED
    # hovering again near the levitation gap at the end
    assert record["contact_flag"][-1] == me.FREE
    assert z[-1] == pytest.approx(z_eq, abs=2e-3)


def test_contact_complementarity_over_a_run(system):
    # the magnet never penetrates the table; while supported it sits exactly
    # on it and the required normal force stays nonnegative
    table = me.SupportTrajectory(points=((0.0, 0.013), (5.0, 0.013), (59.0, 0.040)))
    plan = sim.RunPlan(scenario_id="s1", system=system, table=table,
                       sim=sim.SimConfig(t_end=700.0, record_period=0.1),
                       stop_after_touchdown=2.0)
    record = sim.run_plan(plan)
    t = np.asarray(record["t"])
    z = np.asarray(record["z"])
    f_em = np.asarray(record["F_em"])
    supported = np.asarray(record["contact_flag"]) == me.SUPPORTED
    gaps = np.array([table.gap(tt) for tt in t])
    assert np.all(z <= gaps + 1e-9)
    assert np.all(np.abs(z[supported] - gaps[supported]) <= 1e-9)
    n = system.body.weight - f_em[supported]
    assert np.all(n >= -2e-3 * system.body.weight)  # small event-location slack
