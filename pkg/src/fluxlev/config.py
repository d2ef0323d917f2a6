"""Flat dotted-key configuration with a typed schema.

Config sources, later ones winning: schema defaults, per-scenario defaults,
a config file, then command-line ``--set key=value`` overrides.  The format
is plain text, one ``key = value`` per line, ``#`` comments.  Schedules and
programs are comma-separated pairs: ``table.schedule = 0:0.013, 5:0.013,
59:0.040`` (time s : gap m) and ``controller.program = 0.025:200, 0.021:200``
(gap m : hold s).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass


class ConfigError(ValueError):
    """Unknown key, malformed value or inconsistent configuration."""


@dataclass(frozen=True)
class Key:
    kind: str  # float | int | bool | str | pairs | optfloat
    default: object
    help: str


SCHEMA: dict[str, Key] = {
    # coil winding geometry
    "coil.inner_radius": Key("float", 0.030, "winding inner radius [m]"),
    "coil.outer_radius": Key("float", 0.0326450, "winding outer radius [m]"),
    "coil.turns": Key("int", 120, "total turns"),
    "coil.pancakes": Key("int", 2, "pancake count"),
    "coil.tape_width": Key("float", 0.004, "tape width [m]"),
    "coil.pancake_gap": Key("float", 0.0005, "axial gap between pancakes [m]"),
    "coil.strand_radius": Key("float", 2.5e-3, "effective strand radius for self-inductance [m]"),
    # magnet
    "magnet.radius": Key("float", 0.025, "magnet radius [m]"),
    "magnet.height": Key("float", 0.030, "magnet height [m]"),
    "magnet.sheet_loops": Key("int", 30, "equivalent-solenoid loop count"),
    "magnet.face_field": Key("float", 0.3137, "top-face-center field calibration target [T]"),
    "magnet.sheet_current": Key("optfloat", None, "per-loop sheet current [A]; none = calibrate"),
    # circuit
    "circuit.L": Key("float", 1.35e-3, "coil inductance [H]"),
    "circuit.R": Key("float", 1.35e-3 / 860.0, "loop resistance [Ohm]"),
    "circuit.Ec": Key("float", 1e-4, "critical field criterion [V/m]"),
    "circuit.l": Key("float", 0.10, "bridge length [m]"),
    "circuit.Ic_bridge": Key("float", 413.0, "bridge critical current [A]"),
    "circuit.n": Key("float", 25.0, "power-law exponent"),
    "circuit.Ic_coil": Key("float", 53.9, "coil critical current, monitoring [A]"),
    # pump pulses
    "pump.r": Key("float", 1.2, "pulse amplitude ratio i_b/I_c"),
    "pump.pulse_width": Key("float", 0.1, "pulse width [s]"),
    "pump.period": Key("float", 0.5, "pulse period [s]"),
    "pump.null_r": Key("float", 1.25, "nulling pulse amplitude ratio"),
    "pump.null_gain": Key("float", 1.0, "nulling proportional gain (1 = deadbeat)"),
    "pump.null_tolerance": Key("float", 0.05, "nulling stop tolerance [A]"),
    "pump.null_max_width": Key("float", 0.4, "nulling pulse width cap [s]"),
    # body and table
    "body.mass": Key("float", 0.450, "magnet mass [kg]"),
    "body.g": Key("float", 9.81, "gravity [m/s^2]"),
    "body.damping": Key("float", 2.0, "viscous damping [N s/m]"),
    "body.weight_override": Key("optfloat", None, "weight override [N], none = m*g"),
    "table.schedule": Key("pairs", (), "table gap schedule (t s : gap m); empty = scenario default"),
    "table.max_speed": Key("float", 0.5e-3, "table speed limit [m/s]"),
    # controller
    "controller.mode": Key("str", "auto", "off|height_hold|setpoint_program|zfc_null|auto"),
    "controller.delta_h": Key("float", 0.5e-3, "trigger half-band [m]"),
    "controller.sample_period": Key("float", 0.05, "controller sample period [s]"),
    "controller.program": Key("pairs", (), "setpoint program (gap m : hold s)"),
    "controller.capture_timeout": Key("float", 300.0, "per-segment capture timeout [s]"),
    # integrator
    "sim.rel_tol": Key("float", 1e-7, "relative tolerance"),
    "sim.abs_tol_z": Key("float", 1e-9, "absolute tolerance, gap [m]"),
    "sim.abs_tol_zdot": Key("float", 1e-8, "absolute tolerance, gap rate [m/s]"),
    "sim.abs_tol_lambda": Key("float", 1e-12, "absolute tolerance, flux linkage [Wb]"),
    "sim.abs_tol_phi": Key("float", 1e-12, "absolute tolerance, pumped flux [Wb]"),
    "sim.max_step": Key("float", 0.01, "step ceiling during pump pulses [s]"),
    "sim.event_tol": Key("float", 1e-6, "event location tolerance [s]"),
    "sim.t_end": Key("float", 0.0, "run length [s]; 0 = scenario default"),
    "sim.record_period": Key("float", 0.1, "record decimation period [s]"),
    # reporting
    "report.datum": Key("str", "auto", "gap_mm|height_mm|gap_m|auto"),
    # scenario knobs
    "scenario.fc_gap": Key("float", 0.013, "field-cooling gap [m]"),
    "scenario.settle_time": Key("float", 5.0, "hold before table motion [s]"),
    "scenario.park_gap": Key("float", 0.040, "table park gap after release [m]"),
    "scenario.far_gap": Key("float", 0.100, "zero-field-cooled far gap [m]"),
    "scenario.hold_gap": Key("float", 0.014, "zero-field-cooled hold gap [m]"),
    "scenario.hold_duration": Key("float", 150.0, "zero-field-cooled hold time [s]"),
    "scenario.setpoint": Key("float", 0.018, "height-hold gap setpoint [m]"),
    "scenario.trigger_delta": Key("float", 0.95e-3, "height-hold trigger half-band [m]"),
    "scenario.pump": Key("str", "auto", "S4 variant: off|null|prepump|auto"),
    "scenario.prepump_lead": Key("float", 35.0, "pre-pump window before approach [s]"),
    "scenario.i_start": Key("float", 0.0, "persistent current at loop closure [A]"),
    "scenario.touchdown_grace": Key("optfloat", None, "stop this long after touchdown [s]"),
}


def _parse_value(key: str, kind: str, text: str):
    text = text.strip()
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            if text.lower() in ("true", "yes", "1"):
                return True
            if text.lower() in ("false", "no", "0"):
                return False
            raise ValueError(text)
        if kind == "optfloat":
            return None if text.lower() in ("none", "") else float(text)
        if kind == "str":
            return text
        if kind == "pairs":
            if not text:
                return ()
            pairs = []
            for chunk in text.split(","):
                a, b = chunk.split(":")
                pairs.append((float(a), float(b)))
            return tuple(pairs)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"cannot parse {key} = {text!r} as {kind}: {exc}") from None
    raise ConfigError(f"unknown schema kind {kind}")


def _format_value(key: str, value) -> str:
    kind = SCHEMA[key].kind
    if kind == "pairs":
        return ", ".join(f"{a!r}:{b!r}" for a, b in value)
    if kind == "optfloat" and value is None:
        return "none"
    if kind == "bool":
        return "true" if value else "false"
    if kind in ("float", "optfloat"):
        return repr(float(value))
    return str(value)


def parse_overrides(pairs: list[str]) -> dict:
    """Parse command-line ``key=value`` strings against the schema."""
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, text = item.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _parse_value(key, SCHEMA[key].kind, text)
    return out


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = _parse_value(key, SCHEMA[key].kind, val)
    return out


def resolve(*layers: dict) -> dict:
    """Defaults overlaid with the given layers, later layers winning."""
    cfg = {key: spec.default for key, spec in SCHEMA.items()}
    for layer in layers:
        for key, value in layer.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = value
    return cfg


def format_config(cfg: dict) -> str:
    lines = [f"{key} = {_format_value(key, cfg[key])}" for key in sorted(cfg)]
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()[:12]
