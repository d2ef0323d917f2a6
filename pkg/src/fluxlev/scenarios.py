"""Scenario catalog: declarative builders and summary extraction.

Five canonical experiments:

  S1_decay       field cool, release, pump off: the levitation height creeps
                 away as the persistent current decays until stability is
                 lost and the magnet falls back onto the parked table.
  S2_compensate  same release, with the hysteresis height regulator gating
                 pump bursts to hold the gap inside its band indefinitely.
  S3_setpoints   programmed sequence of levitation heights, pumping in both
                 directions, each level held for a fixed duration.
  S4_zfc         zero-field-cooled approach / hold / retract; variants: pump
                 off (no levitation), screening nulled during the hold
                 (levitation on retract), or pre-pumped before the approach.
  S5_discharge   persistent-current decay of the bare coil for the time
                 constant fit.

Each builder consumes a resolved config dict (see config.SCHEMA) so every
physical and numerical parameter can be overridden from the command line.
"""

from __future__ import annotations

import math

import numpy as np

from . import circuit as ci
from . import config as cf
from . import controller as ct
from . import magnetics as mg
from . import mechanics as me
from . import sim

SCENARIO_IDS = ("S1_decay", "S2_compensate", "S3_setpoints", "S4_zfc", "S5_discharge")


def scenario_defaults(scenario_id: str) -> dict:
    """Per-scenario config layer applied between schema defaults and overrides."""
    if scenario_id == "S1_decay":
        return {"sim.t_end": 1500.0, "scenario.touchdown_grace": 5.0,
                "report.datum": "gap_mm"}
    if scenario_id == "S2_compensate":
        return {"sim.t_end": 3800.0, "report.datum": "gap_mm"}
    if scenario_id == "S3_setpoints":
        return {"sim.t_end": 1700.0,
                "controller.program": ((0.025, 200.0), (0.021, 200.0), (0.017, 200.0),
                                       (0.021, 200.0), (0.025, 200.0)),
                "controller.delta_h": 0.35e-3,
                "pump.r": 1.10,
                "report.datum": "height_mm"}
    if scenario_id == "S4_zfc":
        return {"scenario.pump": "null", "report.datum": "gap_mm"}
    if scenario_id == "S5_discharge":
        return {"sim.t_end": 2000.0, "scenario.i_start": 10.0,
                "report.datum": "gap_mm"}
    if scenario_id == "custom":
        return {}
    raise cf.ConfigError(f"unknown scenario {scenario_id!r}; "
                         f"catalog: {', '.join(SCENARIO_IDS)} or custom")


def build_system(cfg: dict) -> sim.SystemModel:
    coil = mg.CoilGeometry(
        inner_radius=cfg["coil.inner_radius"], outer_radius=cfg["coil.outer_radius"],
        turns_total=cfg["coil.turns"], pancakes=cfg["coil.pancakes"],
        tape_width=cfg["coil.tape_width"], pancake_gap=cfg["coil.pancake_gap"],
        effective_strand_radius=cfg["coil.strand_radius"])
    magnet = mg.MagnetModel(
        radius=cfg["magnet.radius"], height=cfg["magnet.height"],
        sheet_loops=cfg["magnet.sheet_loops"], mass=cfg["body.mass"])
    circuit_params = ci.CircuitParams(
        L_coil=cfg["circuit.L"], R_loop=cfg["circuit.R"], E_c=cfg["circuit.Ec"],
        bridge_length=cfg["circuit.l"], I_c_bridge=cfg["circuit.Ic_bridge"],
        n_value=cfg["circuit.n"], I_c_coil=cfg["circuit.Ic_coil"])
    body = me.BodyParams(mass=cfg["body.mass"], g=cfg["body.g"],
                         damping_c=cfg["body.damping"],
                         weight_override=cfg["body.weight_override"])
    sheet = cfg["magnet.sheet_current"]
    if sheet is not None:
        from dataclasses import replace
        calibrated = replace(magnet, sheet_current_per_loop=sheet)
        table = mg.CouplingTable.build(coil, calibrated)
        b_unit = (mg.center_field(1.0, coil, calibrated, 1.0)
                  - mg.center_field(0.0, coil, calibrated, 1.0))
        return sim.SystemModel(coil, calibrated, circuit_params, body, table, b_unit)
    return sim.SystemModel.build(coil, magnet, circuit_params, body,
                                 face_field=cfg["magnet.face_field"])


def _pump_config(cfg: dict) -> ci.PumpConfig:
    return ci.PumpConfig(
        amplitude_ratio=cfg["pump.r"], pulse_width=cfg["pump.pulse_width"],
        period=cfg["pump.period"], null_amplitude_ratio=cfg["pump.null_r"],
        null_gain=cfg["pump.null_gain"], null_tolerance=cfg["pump.null_tolerance"],
        null_max_width=cfg["pump.null_max_width"])


def _sim_config(cfg: dict, t_end: float) -> sim.SimConfig:
    return sim.SimConfig(
        rel_tol=cfg["sim.rel_tol"],
        abs_tol=(cfg["sim.abs_tol_z"], cfg["sim.abs_tol_zdot"],
                 cfg["sim.abs_tol_lambda"], cfg["sim.abs_tol_phi"]),
        max_step=cfg["sim.max_step"], event_tol=cfg["sim.event_tol"],
        t_end=t_end, record_period=cfg["sim.record_period"])


def _controller_config(cfg: dict, mode: str, delta_h: float | None = None) -> ct.ControllerConfig:
    return ct.ControllerConfig(
        delta_h=cfg["controller.delta_h"] if delta_h is None else delta_h,
        sample_period=cfg["controller.sample_period"], mode=mode,
        capture_timeout=cfg["controller.capture_timeout"])


def _release_table(cfg: dict) -> me.SupportTrajectory:
    """Field-cool at the FC gap, then lower the table to the park gap."""
    fc = cfg["scenario.fc_gap"]
    park = cfg["scenario.park_gap"]
    t0 = cfg["scenario.settle_time"]
    speed = cfg["table.max_speed"]
    t1 = t0 + abs(park - fc) / speed
    return me.SupportTrajectory(points=((0.0, fc), (t0, fc), (t1, park)),
                                max_speed=speed)


def _table_from_cfg(cfg: dict) -> me.SupportTrajectory | None:
    if cfg["table.schedule"]:
        return me.SupportTrajectory(points=cfg["table.schedule"],
                                    max_speed=cfg["table.max_speed"])
    return None


def make_plan(scenario_id: str, cfg: dict, system: sim.SystemModel | None = None,
              ) -> sim.RunPlan:
    """Assemble the RunPlan for a catalog scenario under a resolved config."""
    if system is None:
        system = build_system(cfg)
    pump = _pump_config(cfg)
    datum = cfg["report.datum"]
    meta = {"config_hash": cf.config_hash(cfg)}
    t_end = cfg["sim.t_end"]

    if scenario_id == "S1_decay":
        table = _table_from_cfg(cfg) or _release_table(cfg)
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            stop_after_touchdown=cfg["scenario.touchdown_grace"],
            datum=datum, metadata=meta)

    if scenario_id == "S2_compensate":
        table = _table_from_cfg(cfg) or _release_table(cfg)
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            controller_kind="hold",
            controller_cfg=_controller_config(cfg, "height_hold",
                                              delta_h=cfg["scenario.trigger_delta"]),
            hold_setpoint=cfg["scenario.setpoint"], engage_after_liftoff=True,
            datum=datum, metadata=meta)

    if scenario_id == "S3_setpoints":
        table = _table_from_cfg(cfg) or _release_table(cfg)
        program = ct.SetpointProgram(segments=cfg["controller.program"])
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            controller_kind="program",
            controller_cfg=_controller_config(cfg, "setpoint_program"),
            program=program, engage_after_liftoff=True,
            datum=datum, metadata=meta)

    if scenario_id == "S4_zfc":
        variant = cfg["scenario.pump"]
        if variant in ("auto", ""):
            variant = "null"
        if variant not in ("off", "null", "prepump"):
            raise cf.ConfigError(f"scenario.pump must be off, null or prepump, got {variant!r}")
        far, hold_gap = cfg["scenario.far_gap"], cfg["scenario.hold_gap"]
        speed = cfg["table.max_speed"]
        settle = cfg["scenario.settle_time"]
        lead = cfg["scenario.prepump_lead"] if variant == "prepump" else 0.0
        t_approach_start = settle + lead
        t_arrive = t_approach_start + (far - hold_gap) / speed
        t_hold_end = t_arrive + cfg["scenario.hold_duration"]
        t_retract_end = t_hold_end + (far - hold_gap) / speed
        table = _table_from_cfg(cfg) or me.SupportTrajectory(
            points=((0.0, far), (t_approach_start, far), (t_arrive, hold_gap),
                    (t_hold_end, hold_gap), (t_retract_end, far)),
            max_speed=speed)
        windows = []
        if variant == "prepump":
            i_pre = (system.m(hold_gap) - system.m(far)) * system.sheet_current \
                / system.circuit.L_coil
            windows.append((settle, t_approach_start - 1.0, i_pre))
        if variant in ("null", "prepump"):
            windows.append((t_arrive, t_hold_end, 0.0))
        if t_end <= 0.0:
            t_end = t_retract_end + 20.0
        meta = dict(meta, t_arrive=t_arrive, t_hold_end=t_hold_end,
                    t_retract_end=t_retract_end)
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            controller_kind="null" if windows else "off",
            controller_cfg=_controller_config(cfg, "zfc_null" if windows else "off"),
            null_windows=tuple(windows), variant=variant,
            datum=datum, metadata=meta)

    if scenario_id == "S5_discharge":
        table = _table_from_cfg(cfg) or me.SupportTrajectory(points=((0.0, 0.200),))
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            i_start=cfg["scenario.i_start"], datum=datum, metadata=meta)

    if scenario_id == "custom":
        table = _table_from_cfg(cfg)
        if table is None:
            raise cf.ConfigError("custom scenario requires table.schedule")
        mode = cfg["controller.mode"]
        if mode in ("auto", "off"):
            kind, program = "off", None
        elif mode == "height_hold":
            kind, program = "hold", None
        elif mode == "setpoint_program":
            kind = "program"
            program = ct.SetpointProgram(segments=cfg["controller.program"])
        else:
            raise cf.ConfigError(f"custom scenario does not support controller.mode={mode!r}")
        if t_end <= 0.0:
            t_end = table.t_end + 10.0
        return sim.RunPlan(
            scenario_id=scenario_id, system=system, table=table,
            sim=_sim_config(cfg, t_end), pump=pump,
            controller_kind=kind,
            controller_cfg=_controller_config(cfg, mode if mode != "auto" else "off"),
            hold_setpoint=cfg["scenario.setpoint"], program=program,
            i_start=cfg["scenario.i_start"], engage_after_liftoff=kind != "off",
            stop_after_touchdown=cfg["scenario.touchdown_grace"],
            datum=datum, metadata=meta)

    raise cf.ConfigError(f"unknown scenario {scenario_id!r}")


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def fit_decay_tau(t: np.ndarray, i: np.ndarray) -> float:
    """Exponential time constant from a log-linear least-squares fit [s]."""
    if np.any(i <= 0.0):
        raise ValueError("decay fit needs strictly positive currents")
    slope = np.polyfit(t, np.log(i), 1)[0]
    return -1.0 / slope


def _event_time(record: sim.RunRecord, label: str) -> float | None:
    for t, name in record.events:
        if name == label:
            return t
    return None


def summarize(plan: sim.RunPlan, record: sim.RunRecord) -> dict:
    t = np.asarray(record["t"])
    z = np.asarray(record["z"])
    i = np.asarray(record["i_coil"])
    out = {
        "scenario": plan.scenario_id,
        "variant": plan.variant,
        "config_hash": plan.metadata.get("config_hash", ""),
        "rows": record.n_rows,
        "t_end_s": float(t[-1]),
        "max_abs_i_A": float(np.max(np.abs(i))),
        "i_over_coil_limit": bool(np.max(np.abs(i)) > plan.system.circuit.I_c_coil),
    }
    sysm = plan.system

    if plan.scenario_id == "S1_decay":
        t_lift = _event_time(record, "liftoff")
        t_fall = _event_time(record, "touchdown")
        out["liftoff_time_s"] = t_lift
        out["touchdown_time_s"] = t_fall
        out["fall_duration_s"] = (t_fall - t_lift) if t_lift and t_fall else None
        if t_fall:
            # monotone creep judged after the ~2 s release ring has damped
            pre = (t >= (t_lift or 0.0) + 5.0) & (t <= t_fall)
            out["gap_monotone"] = bool(np.all(np.diff(z[pre]) >= -1e-7))
            out["current_monotone"] = bool(np.all(np.diff(i[pre]) >= -1e-6))
            out["max_gap_m"] = float(z[pre].max())

    elif plan.scenario_id == "S2_compensate":
        lo, hi = plan.hold_setpoint, plan.hold_setpoint + 1e-3
        in_band = (z >= lo) & (z <= hi)
        cap = float(t[np.argmax(in_band)]) if in_band.any() else None
        out["band_low_m"], out["band_high_m"] = lo, hi
        out["capture_time_s"] = cap
        if cap is not None:
            window = (t >= cap) & (t <= cap + 3600.0)
            out["in_band_fraction_3600s"] = float(np.mean(in_band[window]))
            out["window_covers_3600s"] = bool(t[-1] >= cap + 3600.0)
        cmd = np.asarray(record["cmd"])
        burst_ends = np.flatnonzero((cmd[1:] != 1) & (cmd[:-1] == 1))
        out["compensation_cycles"] = int(len(burst_ends))
        if len(burst_ends):
            ip = i[burst_ends]
            out["post_burst_i_mean_A"] = float(ip.mean())
            out["post_burst_i_spread_rel"] = float((ip.max() - ip.min()) / abs(ip.mean()))

    elif plan.scenario_id == "S3_setpoints":
        captures = [(e[0], int(e[1].split("_")[1])) for e in record.events
                    if e[1].startswith("capture_")]
        segments = plan.program.segments
        cmd = np.asarray(record["cmd"])
        out["segments_captured"] = len(captures)
        out["segments_total"] = len(segments)
        worst = 0.0
        for t_cap, idx in captures:
            setpoint, duration = segments[idx]
            window = (t >= t_cap) & (t <= t_cap + duration)
            err = float(np.max(np.abs(z[window] - setpoint))) if window.any() else math.inf
            out[f"segment_{idx}_capture_s"] = t_cap
            out[f"segment_{idx}_max_err_m"] = err
            worst = max(worst, err)
        out["worst_hold_err_m"] = worst
        out["raised_and_lowered"] = bool((cmd == 1).any() and (cmd == -1).any())

    elif plan.scenario_id == "S4_zfc":
        contact = np.asarray(record["contact_flag"])
        lifted = bool((contact == me.FREE).any())
        out["lifted"] = lifted
        t_hold_end = plan.metadata.get("t_hold_end")
        t_retract_end = plan.metadata.get("t_retract_end")
        if t_hold_end is not None:
            k = int(np.searchsorted(t, t_hold_end - 1e-6))
            out["i_end_of_hold_A"] = float(i[min(k, len(i) - 1)])
        if lifted:
            free_retract = (contact == me.FREE) & (t >= (t_hold_end or 0.0))
            if free_retract.any():
                zf = z[free_retract]
                out["equilibrium_gap_m"] = float(zf[-1])
                out["mean_levitation_gap_m"] = float(zf.mean())
                k = np.flatnonzero(free_retract)[-1]
                lam = (sysm.circuit.L_coil * i[k]
                       + sysm.m(z[k]) * sysm.sheet_current)
                out["stiffness_at_eq_N_per_m"] = sysm.quasi_static_stiffness(lam, float(z[k]))
        else:
            # force-distance sweep with the linkage frozen at end of hold
            k = int(np.searchsorted(t, (t_hold_end or t[-1]) - 1e-6))
            k = min(k, len(i) - 1)
            lam = sysm.circuit.L_coil * i[k] + sysm.m(z[k]) * sysm.sheet_current
            zs = np.linspace(float(z[k]) + 0.5e-3, 0.095, 162)
            weight = sysm.body.weight
            found = False
            for zq in zs:
                f = sysm.quasi_static_force(lam, float(zq))
                if f >= weight and sysm.quasi_static_stiffness(lam, float(zq)) > 0.0:
                    found = True
                    break
            out["stable_equilibrium_found"] = found

    elif plan.scenario_id == "S5_discharge":
        out["i_start_A"] = float(i[0])
        out["i_end_A"] = float(i[-1])
        out["tau_fit_s"] = float(fit_decay_tau(t, i))
        out["tau_expected_s"] = plan.system.circuit.tau
        if math.isfinite(plan.system.circuit.tau):
            out["tau_rel_err"] = abs(out["tau_fit_s"] - out["tau_expected_s"]) / out["tau_expected_s"]

    return out
