"""Electrical state of the closed superconducting coil loop.

The coil is a single persistent-current mesh.  Its flux linkage

    lambda = L * i + M(z) * I_loop

(with I_loop the magnet's equivalent sheet current per loop) obeys

    d(lambda)/dt = -R_loop * i + v_bridge(t),

so motion of the magnet enters through dM/dz and the flux pump enters as a
bridge EMF.  The pump drives the bridge element with a prescribed
overcurrent; while the bridge current exceeds its critical value, flux
crosses at the power-law rate

    v_bridge = sign(i_b) * E_c * l * (|i_b| / I_c)^n.

The accumulated pumped flux divided by the coil inductance is the
"transport" share of the coil current, kept as a diagnostic alongside the
flux-conservation (screening) response.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

log = logging.getLogger(__name__)

# Bridge overcurrent above this multiple of I_c is clamped to keep the
# power law numerically tame; reaching it indicates a misconfigured drive.
BRIDGE_CLAMP_RATIO = 2.0

# pulse windows are half-open [on, off); float subtraction at an exact edge
# time can land 1 ulp inside, so the comparison carries a small guard
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class CircuitParams:
    """Lumped electrical parameters of the coil loop and pump bridge."""

    L_coil: float = 1.35e-3  # [H]
    R_loop: float = 1.35e-3 / 860.0  # [Ohm], joint + flux-creep resistance, L/tau
    E_c: float = 1e-4  # [V/m], critical-field criterion of the conductor
    bridge_length: float = 0.10  # [m]
    I_c_bridge: float = 413.0  # [A], 10 mm bridge tape at 413 A/cm
    n_value: float = 25.0  # power-law exponent
    I_c_coil: float = 53.9  # [A], monitoring only

    def __post_init__(self):
        for name in ("L_coil", "R_loop", "E_c", "bridge_length", "I_c_bridge", "I_c_coil"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.L_coil <= 0 or self.I_c_bridge <= 0:
            raise ValueError("L_coil and I_c_bridge must be positive")
        if self.n_value < 5:
            raise ValueError("n_value below 5 is outside the model's validity")

    @property
    def tau(self) -> float:
        """Natural decay constant L/R of the persistent current [s]."""
        return math.inf if self.R_loop == 0.0 else self.L_coil / self.R_loop


@dataclass
class CircuitState:
    """Instantaneous electrical state carried alongside the mechanics."""

    i_coil: float = 0.0  # [A], screening + transport, signed
    phi_pumped: float = 0.0  # [Wb], integral of the bridge EMF
    t: float = 0.0  # [s]


@dataclass(frozen=True)
class PumpConfig:
    """Pulse-train parameters for command-driven pumping and nulling."""

    amplitude_ratio: float = 1.2  # peak bridge current / I_c during a pulse
    pulse_width: float = 0.1  # [s]
    period: float = 0.5  # [s]
    null_amplitude_ratio: float = 1.25  # stronger pulses for current nulling
    null_gain: float = 1.0  # fraction of the deadbeat pulse width
    null_tolerance: float = 0.05  # [A], |i - target| below which nulling stops
    null_max_width: float = 0.4  # [s], per-period cap on nulling pulses

    def __post_init__(self):
        if not self.pulse_width < self.period:
            raise ValueError("pulse_width must be shorter than the period")
        if self.null_max_width >= self.period:
            raise ValueError("null_max_width must be shorter than the period")
        if self.amplitude_ratio <= 0 or self.null_amplitude_ratio <= 0:
            raise ValueError("amplitude ratios must be positive")


@dataclass(frozen=True)
class PumpDrive:
    """Bridge drive over one scheduling horizon.

    ``mode`` is "off" or "bridge".  A bridge drive produces rectangular
    overcurrent pulses of ``pulse_width`` at every ``period`` from
    ``t_start``, with signed amplitude ``polarity * amplitude_ratio * I_c``.
    Nulling emits one-shot drives (period == pulse horizon) recomputed at
    each controller sample.
    """

    mode: str = "off"
    amplitude_ratio: float = 0.0
    pulse_width: float = 0.0
    period: float = math.inf
    polarity: int = 0
    t_start: float = 0.0

    def bridge_current(self, t: float, params: CircuitParams) -> float:
        if self.mode != "bridge" or t < self.t_start - _EDGE_EPS:
            return 0.0
        phase = (t - self.t_start) % self.period
        # a query at an exact edge can land 1 ulp on either side of the wrap
        on = phase < self.pulse_width - _EDGE_EPS or phase > self.period - _EDGE_EPS
        return self.polarity * self.amplitude_ratio * params.I_c_bridge if on else 0.0

    def next_edge(self, t: float) -> float:
        """Next pulse on/off switching instant strictly after t."""
        if self.mode != "bridge" or self.pulse_width <= 0.0:
            return math.inf
        if t < self.t_start:
            return self.t_start
        k, phase = divmod(t - self.t_start, self.period)
        base = self.t_start + k * self.period
        if phase < self.pulse_width:
            return base + self.pulse_width
        return base + self.period


OFF_DRIVE = PumpDrive()


def bridge_emf(i_b: float, params: CircuitParams) -> float:
    """Flux-injection EMF of the bridge for bridge current i_b [V].

    Odd extension of the power law: the injected flux carries the polarity
    of the overcurrent.  |i_b| is clamped at twice the bridge critical
    current (logged) to guard the power law against absurd ratios.
    """
    if i_b == 0.0:
        return 0.0
    ratio = abs(i_b) / params.I_c_bridge
    if ratio > BRIDGE_CLAMP_RATIO:
        log.warning("bridge current %.1f A clamped to %g * I_c", i_b, BRIDGE_CLAMP_RATIO)
        ratio = BRIDGE_CLAMP_RATIO
    return math.copysign(params.E_c * params.bridge_length * ratio ** params.n_value, i_b)


def coil_rhs(i_coil: float, z_dot: float, dmdz: float, sheet_current: float,
             v_bridge: float, params: CircuitParams) -> float:
    """di/dt of the coil loop [A/s].

    L di/dt = -I_loop * (dM/dz) * z_dot  - R_loop * i + v_bridge, i.e. the
    total linkage L*i + M(z)*I_loop changes only through loop resistance and
    the pump.
    """
    return (-sheet_current * dmdz * z_dot - params.R_loop * i_coil + v_bridge) / params.L_coil


def transport_current(phi_pumped: float, params: CircuitParams) -> float:
    """Pump-injected share of the coil current: phi_pumped / L [A]."""
    return phi_pumped / params.L_coil


def pump_command_to_drive(cmd: int, config: PumpConfig, t: float) -> PumpDrive:
    """Map a controller command {-1, 0, +1} to a pulse-train drive.

    +1 pumps flux parallel to the attracting current (raises the magnet),
    -1 the mirror image, 0 switches the bridge off.
    """
    if cmd == 0:
        return OFF_DRIVE
    if cmd not in (-1, 1):
        raise ValueError(f"pump command must be -1, 0 or +1, got {cmd}")
    return PumpDrive(mode="bridge", amplitude_ratio=config.amplitude_ratio,
                     pulse_width=config.pulse_width, period=config.period,
                     polarity=cmd, t_start=t)


def null_screening(i_coil: float, target_i: float, config: PumpConfig,
                   params: CircuitParams, t: float, gain: float | None = None) -> PumpDrive:
    """One nulling pulse driving i_coil toward target_i; Off when converged.

    Proportional (deadbeat at gain 1): the pulse width is sized so one pulse
    moves the current by roughly the remaining error,
        width = gain * L * |err| / v_pulse,
    capped per period, so convergence is fast far from the target and does
    not overshoot by more than one pulse quantum near it.
    """
    err = i_coil - target_i
    if abs(err) < config.null_tolerance:
        return OFF_DRIVE
    g = config.null_gain if gain is None else gain
    v_pulse = params.E_c * params.bridge_length * config.null_amplitude_ratio ** params.n_value
    width = min(g * params.L_coil * abs(err) / v_pulse, config.null_max_width)
    width = max(width, 1e-4)
    return PumpDrive(mode="bridge", amplitude_ratio=config.null_amplitude_ratio,
                     pulse_width=width, period=config.period,
                     polarity=-1 if err > 0 else 1, t_start=t)
