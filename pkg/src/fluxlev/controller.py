"""Hysteresis height regulation, setpoint programs and screening nulling.

The height regulator is a sampled bang-bang law on the gap: pump up (+1)
when the magnet sits below the allowed band, pump down (-1) above it, and,
once triggered, keep pumping until the gap re-enters an inner band of half
the trigger width.  The inner band prevents chattering; it guarantees a
nonzero dwell between opposite commands.

A setpoint program chains height-hold segments.  Each segment's hold clock
starts when the gap first enters the trigger band; a segment that fails to
capture within the timeout raises UnreachableSetpoint.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnreachableSetpoint(RuntimeError):
    """A programmed level could not be captured before the timeout."""


@dataclass(frozen=True)
class ControllerConfig:
    delta_h: float = 0.5e-3  # [m], trigger half-band
    sample_period: float = 0.05  # [s]
    mode: str = "off"  # off | height_hold | setpoint_program | zfc_null
    capture_timeout: float = 300.0  # [s], per program segment

    def __post_init__(self):
        if self.delta_h <= 0 or self.sample_period <= 0:
            raise ValueError("delta_h and sample_period must be positive")
        if self.mode not in ("off", "height_hold", "setpoint_program", "zfc_null"):
            raise ValueError(f"unknown controller mode {self.mode!r}")


def height_hold_step(gap: float, setpoint: float, delta_h: float, prev_cmd: int) -> int:
    """One sampled bang-bang decision; +1 raises the magnet (shrinks the gap).

    Idle: trigger outside setpoint +- delta_h.  Active: persist until the
    gap is back within setpoint +- delta_h/2 on the corrected side (an
    overshoot past the inner band also ends the command).
    """
    if prev_cmd == 1:
        return 1 if gap > setpoint + delta_h / 2 else 0
    if prev_cmd == -1:
        return -1 if gap < setpoint - delta_h / 2 else 0
    if gap > setpoint + delta_h:
        return 1
    if gap < setpoint - delta_h:
        return -1
    return 0


class HeightHold:
    """Stateful wrapper of height_hold_step carrying the hysteresis memory."""

    def __init__(self, setpoint: float, delta_h: float):
        self.setpoint = setpoint
        self.delta_h = delta_h
        self.cmd = 0

    def step(self, gap: float) -> int:
        self.cmd = height_hold_step(gap, self.setpoint, self.delta_h, self.cmd)
        return self.cmd


@dataclass(frozen=True)
class SetpointProgram:
    """Ordered (gap_setpoint [m], hold_duration [s]) segments."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("setpoint program must not be empty")
        for gap, dur in self.segments:
            if gap <= 0 or dur <= 0:
                raise ValueError("setpoints and hold durations must be positive")


class ProgramRunner:
    """Steps a SetpointProgram: capture each level, hold it, then advance.

    The hold clock of a segment starts at the first sample whose gap lies
    within the trigger band of that segment's setpoint.
    """

    def __init__(self, program: SetpointProgram, cfg: ControllerConfig):
        self.program = program
        self.cfg = cfg
        self.index = 0
        self.segment_start: float | None = None
        self.capture_time: float | None = None
        self.hold = HeightHold(program.segments[0][0], cfg.delta_h)
        self.finished = False
        self.captures: list[tuple[int, float]] = []  # (segment index, capture time)

    @property
    def setpoint(self) -> float:
        return self.program.segments[self.index][0]

    def step(self, t: float, gap: float) -> int:
        if self.finished:
            return 0
        if self.segment_start is None:
            self.segment_start = t
        setpoint, duration = self.program.segments[self.index]
        if self.capture_time is None:
            if abs(gap - setpoint) <= self.cfg.delta_h:
                self.capture_time = t
                self.captures.append((self.index, t))
            elif t - self.segment_start > self.cfg.capture_timeout:
                raise UnreachableSetpoint(
                    f"setpoint {setpoint:.4g} m not captured within "
                    f"{self.cfg.capture_timeout:g} s (gap {gap:.4g} m at t={t:.1f} s)")
        if self.capture_time is not None and t - self.capture_time >= duration:
            self.index += 1
            if self.index >= len(self.program.segments):
                self.finished = True
                return 0
            self.segment_start = t
            self.capture_time = None
            self.hold = HeightHold(self.program.segments[self.index][0], self.cfg.delta_h)
        return self.hold.step(gap)


# Zero-field-cooled supervision: the run is phased by the table schedule.
APPROACH = "approach"
HOLD = "hold"
RETRACT = "retract"


def zfc_action(phase: str, modulate: bool) -> str:
    """Pump action for a phase of the zero-field-cooled sequence.

    Returns "null" (drive the coil current to the target) only during the
    hold phase of a modulated run; the pump stays off otherwise.
    """
    if phase not in (APPROACH, HOLD, RETRACT):
        raise ValueError(f"unknown phase {phase!r}")
    return "null" if (modulate and phase == HOLD) else "off"
