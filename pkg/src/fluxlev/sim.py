"""Coupled circuit / mechanics / controller simulation.

The integrated state vector is (z, z_dot, lambda, phi):

    z       gap between magnet top face and coil bottom face [m]
    z_dot   gap rate [m/s]
    lambda  total coil flux linkage L*i + M(z)*I_loop [Wb]
    phi     accumulated pump flux, integral of the bridge EMF [Wb]

Integrating the flux linkage rather than the current makes Lenz-law
conservation structural: with zero loop resistance and the pump off,
d(lambda)/dt is identically zero, so the integrator preserves the linkage
to machine precision.  The coil current is recovered algebraically as
i = (lambda - M(z) * I_loop) / L, which also folds the motional EMF of a
table-ridden magnet into the bookkeeping automatically.

Time stepping never crosses a known switching instant (pump pulse edges,
controller samples, table schedule nodes, record instants); contact
transitions are state events located by bisection to ``event_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import circuit as ci
from . import controller as ct
from . import magnetics as mg
from . import mechanics as me
from .integrate import AdaptiveStepper, dp54_step

RECORD_COLUMNS = ("t", "z", "z_dot", "i_coil", "i_transport", "phi_pumped",
                  "B_center", "F_em", "contact_flag", "cmd")
RECORD_UNITS = ("s", "m", "m/s", "A", "A", "Wb", "T", "N", "-", "-")

_TIME_EPS = 1e-9


class SimulationError(RuntimeError):
    """The run left the model's validated regime (e.g. gap range)."""


@dataclass(frozen=True)
class SimConfig:
    rel_tol: float = 1e-7
    abs_tol: tuple[float, float, float, float] = (1e-9, 1e-8, 1e-12, 1e-12)
    max_step: float = 0.01  # [s], hard ceiling while a pump pulse is conducting
    event_tol: float = 1e-6  # [s]
    t_end: float = 100.0
    record_period: float = 0.1  # [s]

    def __post_init__(self):
        if min(self.rel_tol, *self.abs_tol, self.max_step, self.event_tol,
               self.record_period) <= 0:
            raise ValueError("tolerances, steps and periods must be positive")


@dataclass(frozen=True)
class SystemModel:
    """Calibrated electromechanical model shared by every scenario run."""

    coil: mg.CoilGeometry
    magnet: mg.MagnetModel  # calibrated (sheet current set)
    circuit: ci.CircuitParams
    body: me.BodyParams
    coupling: mg.CouplingTable
    coil_center_field_per_amp: float

    @classmethod
    def build(cls, coil: mg.CoilGeometry | None = None,
              magnet: mg.MagnetModel | None = None,
              circuit_params: ci.CircuitParams | None = None,
              body: me.BodyParams | None = None,
              face_field: float = 0.3137) -> "SystemModel":
        coil = coil or mg.CoilGeometry()
        magnet = magnet or mg.MagnetModel()
        circuit_params = circuit_params or ci.CircuitParams()
        body = body or me.BodyParams()
        calibrated = mg.calibrate_pm(magnet, face_field)
        table = mg.CouplingTable.build(coil, calibrated)
        b_unit = mg.center_field(1.0, coil, calibrated, 1.0) \
            - mg.center_field(0.0, coil, calibrated, 1.0)
        return cls(coil, calibrated, circuit_params, body, table, b_unit)

    # -- algebraic views of the state ------------------------------------
    @property
    def sheet_current(self) -> float:
        return self.magnet.sheet_current_per_loop

    def m(self, z: float) -> float:
        return self.coupling.m(z)

    def dmdz(self, z: float) -> float:
        return self.coupling.dmdz(z)

    def i_coil(self, lam: float, z: float) -> float:
        return (lam - self.coupling.m(z) * self.sheet_current) / self.circuit.L_coil

    def f_em(self, i_coil: float, z: float) -> float:
        return -i_coil * self.sheet_current * self.coupling.dmdz(z)

    def b_center(self, i_coil: float, z: float) -> float:
        return (i_coil * self.coil_center_field_per_amp
                + self.sheet_current * self.coupling.b_center_per_sheet_amp(z))

    def locked_linkage(self, z: float, i_coil: float = 0.0) -> float:
        """Flux linkage captured when the loop closes at gap z carrying i."""
        return self.circuit.L_coil * i_coil + self.coupling.m(z) * self.sheet_current

    # -- quasi-static analysis -------------------------------------------
    def quasi_static_force(self, lam: float, z: float) -> float:
        """Upward force with the circuit slaved to flux conservation."""
        return self.f_em(self.i_coil(lam, z), z)

    def quasi_static_stiffness(self, lam: float, z: float, dz: float = 1e-5) -> float:
        """d(F_em)/dz at fixed linkage; positive at a self-stable equilibrium."""
        return (self.quasi_static_force(lam, z + dz)
                - self.quasi_static_force(lam, z - dz)) / (2.0 * dz)


@dataclass(frozen=True)
class RunPlan:
    """Everything one scenario run needs besides the shared SystemModel."""

    scenario_id: str
    system: SystemModel
    table: me.SupportTrajectory
    sim: SimConfig
    pump: ci.PumpConfig = ci.PumpConfig()
    controller_kind: str = "off"  # off | hold | program | null
    controller_cfg: ct.ControllerConfig = ct.ControllerConfig()
    hold_setpoint: float = 0.0  # [m], gap setpoint for "hold"
    program: ct.SetpointProgram | None = None
    null_windows: tuple[tuple[float, float, float], ...] = ()  # (t_on, t_off, target_i)
    i_start: float = 0.0  # [A], persistent current at loop closure
    start_state: tuple[float, float] | None = None  # free release at (z, z_dot)
    forced_drive: ci.PumpDrive | None = None  # open-loop pump schedule
    engage_after_liftoff: bool = False
    stop_after_touchdown: float | None = None  # [s] grace after touchdown, or None
    datum: str = "gap_mm"
    variant: str = ""
    metadata: dict = field(default_factory=dict)


@dataclass
class RunRecord:
    """Time series and metadata emitted by one run."""

    columns: tuple[str, ...]
    units: tuple[str, ...]
    data: dict  # column -> list[float]
    events: list  # (t, label)
    metadata: dict

    def __getitem__(self, column: str) -> list[float]:
        return self.data[column]

    @property
    def n_rows(self) -> int:
        return len(self.data["t"])


class Simulator:
    """Single-owner mutable state of one scenario run."""

    def __init__(self, plan: RunPlan):
        self.plan = plan
        self.sys = plan.system
        self.params = plan.system.circuit
        self.body = plan.system.body
        self.table = plan.table
        self.cfg = plan.sim

    # -- right-hand side ---------------------------------------------------
    def _make_rhs(self, supported: bool, v_table: float, v_bridge: float):
        sysm = self.sys
        m_of = sysm.coupling.m
        dm_of = sysm.coupling.dmdz
        L = self.params.L_coil
        R = self.params.R_loop
        Ieq = sysm.sheet_current
        W = self.body.weight
        c = self.body.damping_c
        mass = self.body.mass
        if supported:
            def rhs(t, y):
                z, zd, lam, phi = y
                i = (lam - m_of(z) * Ieq) / L
                return (v_table, 0.0, -R * i + v_bridge, v_bridge)
        else:
            def rhs(t, y):
                z, zd, lam, phi = y
                i = (lam - m_of(z) * Ieq) / L
                f = -i * Ieq * dm_of(z)
                return (zd, -(f - W + c * zd) / mass, -R * i + v_bridge, v_bridge)
        return rhs

    # -- event helpers -------------------------------------------------------
    def _normal_force(self, y) -> float:
        z = y[0]
        i = self.sys.i_coil(y[2], z)
        return me.support_normal_force(self.sys.f_em(i, z), self.body)

    def _bisect_event(self, rhs, t0, y0, h, g, g0):
        """Locate the sign change of g(y, t) inside (t0, t0 + h) to event_tol."""
        lo, hi = 0.0, h
        y_lo = y0
        positive0 = g0 > 0.0
        while hi - lo > self.cfg.event_tol:
            mid = 0.5 * (lo + hi)
            y_mid, _ = dp54_step(rhs, t0 + lo, y_lo, mid - lo)
            if (g(y_mid, t0 + mid) > 0.0) == positive0:
                lo, y_lo = mid, y_mid
            else:
                hi = mid
        y_ev, _ = dp54_step(rhs, t0 + lo, y_lo, hi - lo)
        return t0 + hi, y_ev

    # -- main loop -----------------------------------------------------------
    def run(self) -> RunRecord:
        plan, cfg, sysm = self.plan, self.cfg, self.sys
        params, body, table = self.params, self.body, self.table

        t = 0.0
        if plan.start_state is not None:
            z, z_dot = plan.start_state
            contact = me.FREE
        else:
            z, z_dot = table.gap(0.0), table.speed(0.0)
            contact = me.SUPPORTED
        lam0 = sysm.locked_linkage(z, plan.i_start)
        y = (z, z_dot, lam0, 0.0)
        drive = plan.forced_drive or ci.OFF_DRIVE
        cmd = 0

        def penetration(yy, tt):
            return yy[0] - table.gap(tt)
        engaged = not plan.engage_after_liftoff
        sample_anchor = 0.0

        hold = (ct.HeightHold(plan.hold_setpoint, plan.controller_cfg.delta_h)
                if plan.controller_kind == "hold" else None)
        runner = (ct.ProgramRunner(plan.program, plan.controller_cfg)
                  if plan.controller_kind == "program" else None)

        stepper = AdaptiveStepper(cfg.rel_tol, cfg.abs_tol)
        data = {col: [] for col in RECORD_COLUMNS}
        events: list = []
        t_end = cfg.t_end
        rec_index = 0
        rhs = None
        rhs_key = None

        def record(t_now, y_now, contact_now, cmd_now):
            # events landing on a grid instant replace the stale row
            if data["t"] and abs(t_now - data["t"][-1]) <= 1e-12:
                for col in RECORD_COLUMNS:
                    data[col].pop()
            z_, zd_, lam_, phi_ = y_now
            i = sysm.i_coil(lam_, z_)
            data["t"].append(t_now)
            data["z"].append(z_)
            data["z_dot"].append(zd_)
            data["i_coil"].append(i)
            data["i_transport"].append(ci.transport_current(phi_, params))
            data["phi_pumped"].append(phi_)
            data["B_center"].append(sysm.b_center(i, z_))
            data["F_em"].append(sysm.f_em(i, z_))
            data["contact_flag"].append(float(contact_now))
            data["cmd"].append(float(cmd_now))

        def in_null_window(t_now):
            for t_on, t_off, target in plan.null_windows:
                if t_on - _TIME_EPS <= t_now < t_off - _TIME_EPS:
                    return target
            return None

        def next_sample_time(t_now):
            """Earliest controller action instant strictly after t_now.

            Height-hold and program controllers sample on their own grid once
            engaged; nulling acts once per pump period inside its windows and
            once more at each window end (to switch the bridge off).
            """
            candidates = []
            if hold is not None or runner is not None:
                if engaged:
                    k = math.floor((t_now - sample_anchor) / plan.controller_cfg.sample_period
                                   + _TIME_EPS) + 1
                    candidates.append(sample_anchor + k * plan.controller_cfg.sample_period)
            pp = plan.pump.period
            for t_on, t_off, _ in plan.null_windows:
                if t_now < t_on - _TIME_EPS:
                    candidates.append(t_on)
                elif t_now < t_off - _TIME_EPS:
                    k = math.floor((t_now - t_on) / pp + _TIME_EPS) + 1
                    candidates.append(min(t_on + k * pp, t_off))
            return min(candidates) if candidates else math.inf

        def controller_sample(t_now, y_now):
            nonlocal drive, cmd
            z_now = y_now[0]
            if plan.null_windows:
                target = in_null_window(t_now)
                if target is not None:
                    i_now = sysm.i_coil(y_now[2], z_now)
                    drive = ci.null_screening(i_now, target, plan.pump, params, t_now)
                    cmd = drive.polarity
                    return
                if plan.controller_kind == "null":
                    if drive.mode != "off":
                        drive = ci.OFF_DRIVE
                    cmd = 0
                    return
            if hold is not None:
                new_cmd = hold.step(z_now)
            elif runner is not None:
                new_cmd = runner.step(t_now, z_now)
            else:
                return
            if new_cmd != cmd:
                cmd = new_cmd
                drive = ci.pump_command_to_drive(cmd, plan.pump, t_now)

        record(t, y, contact, cmd)

        while t < t_end - _TIME_EPS:
            next_record = (rec_index + 1) * cfg.record_period
            t_stop = min(t_end, next_record, next_sample_time(t),
                         drive.next_edge(t + _TIME_EPS), table.next_node(t))

            if t_stop - t > _TIME_EPS:
                v_table = table.speed(t + _TIME_EPS)
                v_bridge = ci.bridge_emf(drive.bridge_current(t, params), params)
                supported = contact == me.SUPPORTED
                key = (supported, v_table, v_bridge)
                if key != rhs_key:
                    rhs = self._make_rhs(supported, v_table, v_bridge)
                    rhs_key = key
                h_max = t_stop - t
                if v_bridge != 0.0:
                    h_max = min(h_max, cfg.max_step)
                t0, y0 = t, y
                try:
                    t, y = stepper.step(rhs, t, y, h_max)
                except ValueError as exc:
                    raise SimulationError(
                        f"t={t:.4f} s, gap {y[0] * 1e3:.2f} mm: {exc}") from exc

                if supported:
                    n0 = self._normal_force(y0)
                    n1 = self._normal_force(y)
                    if n1 < 0.0:
                        if n0 > 0.0:
                            t, y = self._bisect_event(
                                rhs, t0, y0, t - t0,
                                lambda yy, tt: self._normal_force(yy), n0)
                        else:  # already unloaded at the step start
                            t, y = t0, y0
                        contact = me.FREE
                        events.append((t, "liftoff"))
                        if plan.engage_after_liftoff and not engaged:
                            engaged = True
                            sample_anchor = t
                        record(t, y, contact, cmd)
                        continue
                    # ride the table exactly (kills linear-interp drift)
                    y = (table.gap(t), table.speed(t + _TIME_EPS), y[2], y[3])
                else:
                    pen1 = penetration(y, t)
                    if pen1 >= 0.0 and y[1] >= table.speed(t + _TIME_EPS):
                        pen0 = penetration(y0, t0)
                        if pen0 < 0.0:
                            t, y = self._bisect_event(rhs, t0, y0, t - t0,
                                                      penetration, pen0)
                        contact = me.SUPPORTED
                        y = (table.gap(t), table.speed(t + _TIME_EPS), y[2], y[3])
                        events.append((t, "touchdown"))
                        record(t, y, contact, cmd)
                        if plan.stop_after_touchdown is not None:
                            t_end = min(t_end, t + plan.stop_after_touchdown)
                        continue
            else:
                t = t_stop

            if abs(t - next_record) <= _TIME_EPS:
                rec_index += 1
                record(t, y, contact, cmd)
            if abs(t - next_sample_time(t - 2 * _TIME_EPS)) <= _TIME_EPS:
                controller_sample(t, y)

        if abs(data["t"][-1] - t) > _TIME_EPS:
            record(t, y, contact, cmd)

        if runner is not None:
            for seg_index, t_cap in runner.captures:
                events.append((t_cap, f"capture_{seg_index}"))
            events.sort(key=lambda e: e[0])

        meta = dict(plan.metadata)
        meta.update({
            "scenario": plan.scenario_id,
            "variant": plan.variant,
            "sheet_current_per_loop_A": sysm.sheet_current,
            "pm_ampere_turns_A": sysm.magnet.ampere_turns,
            "lambda_locked_Wb": lam0,
            "coil_inductance_H": params.L_coil,
            "loop_resistance_Ohm": params.R_loop,
            "weight_N": body.weight,
        })
        return RunRecord(RECORD_COLUMNS, RECORD_UNITS, data, events, meta)


def run_plan(plan: RunPlan) -> RunRecord:
    return Simulator(plan).run()
