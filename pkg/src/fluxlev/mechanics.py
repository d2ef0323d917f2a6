"""Vertical rigid-body motion of the magnet with table contact.

The gap ``z`` (magnet top face to coil bottom face) grows downward, while
forces are positive upward, so Newton's law reads m * d(z_dot)/dt = -F_net.
Viscous damping opposes the velocity (it stands in for unmodeled eddy, air
and AC-loss dissipation; equilibrium positions do not depend on it).

The ball-screw table is a prescribed unilateral support: the magnet rides
it (z == z_table) while the required normal force N = W - F_em stays
nonnegative, lifts off when the electromagnetic pull exceeds the weight,
and is recaptured inelastically when it meets the table again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

FREE = 0
SUPPORTED = 1

STANDARD_GRAVITY = 9.81  # [m/s^2]


@dataclass(frozen=True)
class BodyParams:
    """Mass properties of the levitated magnet."""

    mass: float = 0.450  # [kg]
    g: float = STANDARD_GRAVITY
    damping_c: float = 2.0  # [N s/m]
    weight_override: float | None = None  # [N], e.g. 4.5 to match a round figure

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.damping_c < 0:
            raise ValueError("damping must be nonnegative")

    @property
    def weight(self) -> float:
        return self.mass * self.g if self.weight_override is None else self.weight_override


@dataclass
class MotionState:
    """Gap, gap rate and contact mode of the magnet."""

    z: float  # [m], positive, grows away from the coil
    z_dot: float = 0.0  # [m/s], positive when falling away
    contact: int = SUPPORTED


@dataclass(frozen=True)
class SupportTrajectory:
    """Piecewise-linear table gap vs time.

    ``points`` is ((t0, z0), (t1, z1), ...) with strictly increasing times;
    the gap holds constant beyond the last node.
    """

    points: tuple[tuple[float, float], ...]
    max_speed: float = 0.5e-3  # [m/s]

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("table schedule needs at least one node")
        ts = [p[0] for p in self.points]
        if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
            raise ValueError("table schedule times must be strictly increasing")
        for (t0, z0), (t1, z1) in zip(self.points, self.points[1:]):
            speed = abs(z1 - z0) / (t1 - t0)
            if speed > self.max_speed * (1 + 1e-9):
                raise ValueError(
                    f"table segment speed {speed:.3e} m/s exceeds limit {self.max_speed:g}")

    def _segment(self, t: float) -> int:
        pts = self.points
        lo, hi = 0, len(pts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if pts[mid][0] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def gap(self, t: float) -> float:
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1]
        if t >= pts[-1][0]:
            return pts[-1][1]
        i = self._segment(t)
        t0, z0 = pts[i]
        t1, z1 = pts[i + 1]
        return z0 + (z1 - z0) * (t - t0) / (t1 - t0)

    def speed(self, t: float) -> float:
        """dz_table/dt, taking the right-hand slope at nodes."""
        pts = self.points
        if t < pts[0][0] or t >= pts[-1][0]:
            return 0.0
        i = self._segment(t)
        t0, z0 = pts[i]
        t1, z1 = pts[i + 1]
        return (z1 - z0) / (t1 - t0)

    def next_node(self, t: float) -> float:
        """First schedule node strictly after t (inf when past the end)."""
        for tn, _ in self.points:
            if tn > t + 1e-12:
                return tn
        return math.inf

    @property
    def t_end(self) -> float:
        return self.points[-1][0]


def net_force(f_em: float, z_dot: float, body: BodyParams) -> float:
    """Net upward force on the magnet [N].

    F_net = F_em - W + c * z_dot; the damping term is the upward component
    of -c * v (v measured upward = -z_dot), so it always opposes the motion.
    """
    return f_em - body.weight + body.damping_c * z_dot


def mechanics_rhs(z_dot: float, f_em: float, body: BodyParams) -> tuple[float, float]:
    """(dz/dt, dz_dot/dt) for a free magnet; z grows opposite to 'up'."""
    return z_dot, -net_force(f_em, z_dot, body) / body.mass


def support_normal_force(f_em: float, body: BodyParams) -> float:
    """Normal force the table must supply while supporting the magnet [N].

    The table creeps at most 0.5 mm/s, so its damping contribution
    (< 1e-3 of the weight) is neglected here.
    """
    return body.weight - f_em


def contact_update(state: MotionState, f_em: float, body: BodyParams,
                   table: SupportTrajectory, t: float) -> MotionState:
    """Resolve the unilateral contact at time t.

    Supported: ride the table while N = W - F_em >= 0, otherwise lift off
    carrying the table's velocity.  Free: capture inelastically when the gap
    reaches the table and the magnet is not separating from it (the gap
    closing at least as fast as the table recedes).
    """
    z_table = table.gap(t)
    v_table = table.speed(t)
    if state.contact == SUPPORTED:
        if support_normal_force(f_em, body) < 0.0:
            return MotionState(z=z_table, z_dot=v_table, contact=FREE)
        return MotionState(z=z_table, z_dot=v_table, contact=SUPPORTED)
    if state.z >= z_table and state.z_dot >= v_table:
        return MotionState(z=z_table, z_dot=v_table, contact=SUPPORTED)
    return state
