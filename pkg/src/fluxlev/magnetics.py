"""Filament-loop magnetostatics for the coil / magnet pair.

Everything here reduces to coaxial circular filaments.  The superconducting
double-pancake coil is discretized turn by turn; the cylindrical permanent
magnet is replaced by its equivalent solenoid, a stack of identical current
loops on the magnet's lateral surface whose per-loop current is calibrated
against the measured face field.

Mutual inductance between two coaxial filaments of radii a, b at axial
separation d uses Maxwell's closed form

    M = mu0 * sqrt(a*b) * [ (2/k - k) K(k^2) - (2/k) E(k^2) ],
    k^2 = 4ab / ((a+b)^2 + d^2),

with the complete elliptic integrals K, E evaluated by the
arithmetic-geometric-mean iteration.  An independent Neumann double-integral
oracle for the same quantity lives in verify.py.

Sign conventions used throughout the package:
  * ``z`` is the gap between the magnet's top face and the coil's bottom
    face, in meters, positive and growing as the magnet moves away (down).
  * Axial force on the magnet is positive upward.  With the interaction
    coenergy U(z) = i_coil * M(z) * I_loop the force is F = -dU/dz, so
    parallel currents (i_coil * I_loop > 0) attract.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

log = logging.getLogger(__name__)

MU0 = 4e-7 * math.pi  # vacuum permeability [H/m]

# Filament models lose validity when the bodies nearly touch; experiments
# never operate below this gap.
MIN_GAP = 1e-3  # [m]


@dataclass(frozen=True)
class FilamentLoop:
    """Single circular filament: radius, axial position, optional current."""

    radius: float  # [m]
    axial_position: float  # [m]
    current: float = 0.0  # [A]

    def __post_init__(self):
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"loop radius must be positive and finite, got {self.radius}")
        if not (math.isfinite(self.axial_position) and math.isfinite(self.current)):
            raise ValueError("loop position and current must be finite")


@dataclass(frozen=True)
class CoilGeometry:
    """Double-pancake coil wound from flat tape on a cylindrical former.

    Turns are laid out radially inside each pancake with uniform pitch from
    ``inner_radius`` to ``outer_radius``; the two pancakes are separated
    axially by ``tape_width + pancake_gap``.  Axial origin: the coil's
    bottom face (lower tape edge of the lower pancake) sits at 0 and the
    winding extends upward (positive axial positions).
    """

    inner_radius: float = 0.030  # [m]
    outer_radius: float = 0.0326450  # [m], 65.29 mm outer diameter
    turns_total: int = 120
    pancakes: int = 2
    tape_width: float = 0.004  # [m]
    pancake_gap: float = 0.0005  # [m], insulation gap between pancakes
    effective_strand_radius: float = 2.5e-3  # [m], tuned so the pairwise sum tracks the measured inductance

    def __post_init__(self):
        if not self.outer_radius > self.inner_radius:
            raise ValueError("outer_radius must exceed inner_radius")
        if self.pancakes < 1 or self.turns_total % self.pancakes != 0:
            raise ValueError("turns_total must divide evenly into pancakes")
        if self.effective_strand_radius <= 0 or self.tape_width <= 0:
            raise ValueError("tape_width and effective_strand_radius must be positive")

    @property
    def turns_per_pancake(self) -> int:
        return self.turns_total // self.pancakes

    def filaments(self) -> list[FilamentLoop]:
        """One filament per turn; radii span [inner_radius, outer_radius]."""
        radii = np.linspace(self.inner_radius, self.outer_radius, self.turns_per_pancake)
        pitch = self.tape_width + self.pancake_gap
        loops = []
        for p in range(self.pancakes):
            zc = self.tape_width / 2.0 + p * pitch
            loops.extend(FilamentLoop(float(r), zc) for r in radii)
        return loops

    def filament_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        loops = self.filaments()
        return (np.array([f.radius for f in loops]),
                np.array([f.axial_position for f in loops]))

    @property
    def axial_center(self) -> float:
        """Geometric center of the winding above the bottom face."""
        pitch = self.tape_width + self.pancake_gap
        return self.tape_width / 2.0 + (self.pancakes - 1) * pitch / 2.0


@dataclass(frozen=True)
class MagnetModel:
    """Cylindrical permanent magnet as an equivalent solenoid current sheet.

    ``sheet_loops`` identical loops of radius ``radius`` are spread uniformly
    over the magnet height (cell centers), each carrying
    ``sheet_current_per_loop`` so the total ampere-turns equal
    sheet_loops * sheet_current_per_loop.  Axial origin: the magnet's top
    face at 0, loops at negative positions (the body extends downward).
    """

    radius: float = 0.025  # [m]
    height: float = 0.030  # [m]
    sheet_loops: int = 30
    sheet_current_per_loop: float = 0.0  # [A], set by calibrate_pm
    mass: float = 0.450  # [kg]

    def __post_init__(self):
        if self.sheet_loops < 2:
            raise ValueError("sheet_loops must be at least 2")
        if self.radius <= 0 or self.height <= 0 or self.mass <= 0:
            raise ValueError("magnet dimensions and mass must be positive")

    def loop_depths(self) -> np.ndarray:
        """Depth of each sheet loop below the top face, cell-centered."""
        k = np.arange(self.sheet_loops)
        return (k + 0.5) * self.height / self.sheet_loops

    @property
    def ampere_turns(self) -> float:
        return self.sheet_loops * self.sheet_current_per_loop


# ---------------------------------------------------------------------------
# Complete elliptic integrals
# ---------------------------------------------------------------------------

def elliptic_ke(m: float) -> tuple[float, float]:
    """Complete elliptic integrals K(m), E(m) with parameter m = k^2 in [0, 1).

    AGM iteration: a <- (a+b)/2, b <- sqrt(ab), c <- (a-b)/2 until c
    vanishes; then K = pi/(2a) and E = K * (1 - sum 2^(n-1) c_n^2) where the
    sum starts from c_0 = sqrt(m).  Converges quadratically, relative error
    well below 1e-12 for any m bounded away from 1 by machine epsilon.
    """
    if m < 0.0 or m >= 1.0:
        raise ValueError(f"elliptic parameter m must satisfy 0 <= m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    c_sum = 0.5 * m  # 2^(-1) * c_0^2
    pow2 = 1.0
    for _ in range(60):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        c_sum += pow2 * c * c
        pow2 *= 2.0
        if abs(c) < 1e-17 * a:
            break
    K = math.pi / (2.0 * a)
    E = K * (1.0 - c_sum)
    return K, E


def _elliptic_ke_arrays(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized AGM, fixed iteration count (quadratic convergence).

    Ten iterations reach machine precision even for the near-degenerate
    moduli of adjacent coil turns (1 - m ~ 5e-7).
    """
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    c_sum = 0.5 * m
    pow2 = 1.0
    for _ in range(10):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        c_sum = c_sum + pow2 * c * c
        pow2 *= 2.0
    K = np.pi / (2.0 * a)
    E = K * (1.0 - c_sum)
    return K, E


# ---------------------------------------------------------------------------
# Filament mutual and self inductance
# ---------------------------------------------------------------------------

def mutual_inductance(loop_a: FilamentLoop, loop_b: FilamentLoop) -> float:
    """Maxwell's formula for two coaxial circular filaments. Symmetric."""
    a, b = loop_a.radius, loop_b.radius
    d = loop_a.axial_position - loop_b.axial_position
    if a == b and d == 0.0:
        raise ValueError("coincident filaments: mutual inductance is singular, "
                         "use self_inductance_filament for the self term")
    m = 4.0 * a * b / ((a + b) ** 2 + d * d)
    k = math.sqrt(m)
    K, E = elliptic_ke(m)
    return MU0 * math.sqrt(a * b) * ((2.0 / k - k) * K - (2.0 / k) * E)


def _mutual_arrays(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Vectorized Maxwell formula over arrays of (a, b, d)."""
    m = 4.0 * a * b / ((a + b) ** 2 + d * d)
    k = np.sqrt(m)
    K, E = _elliptic_ke_arrays(m)
    return MU0 * np.sqrt(a * b) * ((2.0 / k - k) * K - (2.0 / k) * E)


def self_inductance_filament(loop: FilamentLoop, strand_radius: float) -> float:
    """Thin-wire self inductance L = mu0 * a * (ln(8a/r_s) - 1.75)."""
    if strand_radius <= 0.0:
        raise ValueError("strand_radius must be positive")
    if strand_radius >= loop.radius:
        raise ValueError("strand_radius must be much smaller than the loop radius")
    a = loop.radius
    return MU0 * a * (math.log(8.0 * a / strand_radius) - 1.75)


def coil_self_inductance(coil: CoilGeometry) -> float:
    """Pairwise-sum self inductance of the whole winding.

    Sum of every turn's thin-wire self term plus the mutual inductance of
    every ordered turn pair.  Used to validate the geometry against the
    measured inductance; the circuit model takes L as an input parameter.
    """
    r, zc = coil.filament_arrays()
    n = len(r)
    L = sum(self_inductance_filament(FilamentLoop(float(ri), 0.0),
                                     coil.effective_strand_radius) for ri in r)
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        L += 2.0 * float(np.sum(_mutual_arrays(r[iu], r[ju], zc[iu] - zc[ju])))
    return L


# ---------------------------------------------------------------------------
# Coil <-> magnet coupling
# ---------------------------------------------------------------------------

def _pair_grids(coil: CoilGeometry, magnet: MagnetModel):
    """Radii and axial offsets of every (turn, sheet loop) pair.

    The axial separation of pair (j, k) at gap z is z + zc_j + depth_k,
    with zc_j the turn height above the coil bottom face and depth_k the
    loop depth below the magnet top face.
    """
    rc, zc = coil.filament_arrays()
    depths = magnet.loop_depths()
    a = np.repeat(rc, len(depths))
    b = np.tile(np.full(len(depths), magnet.radius), len(rc))
    off = np.repeat(zc, len(depths)) + np.tile(depths, len(rc))
    return a, b, off


def _check_gap(coil: CoilGeometry, magnet: MagnetModel, z: float) -> None:
    if not math.isfinite(z):
        raise ValueError("gap must be finite")
    if z < MIN_GAP:
        raise ValueError(
            f"gap {z:.4g} m is below the {MIN_GAP:g} m filament-model guard "
            "(bodies would nearly interpenetrate)")


def pm_coil_coupling(coil: CoilGeometry, magnet: MagnetModel, z: float) -> tuple[float, float]:
    """Total mutual inductance between the coil circuit and the magnet sheet.

    Returns ``(phi_per_ampere_turn, M_total)``.  M_total is the double sum
    of Maxwell mutuals over all (turn, sheet loop) pairs, so the flux linked
    into the coil by the magnet is M_total * sheet_current_per_loop.  Per
    ampere-turn of total sheet excitation that flux is M_total / sheet_loops,
    returned first for convenience.
    """
    _check_gap(coil, magnet, z)
    a, b, off = _pair_grids(coil, magnet)
    M_total = float(np.sum(_mutual_arrays(a, b, off + z)))
    return M_total / magnet.sheet_loops, M_total


def _coupling_many(coil: CoilGeometry, magnet: MagnetModel, zs: np.ndarray) -> np.ndarray:
    """M_total at many gaps; vectorized over pairs x gaps, chunked by gap."""
    a, b, off = _pair_grids(coil, magnet)
    out = np.empty(len(zs))
    for idx, z in enumerate(zs):
        out[idx] = np.sum(_mutual_arrays(a, b, off + z))
    return out


def coupling_gradient(coil: CoilGeometry, magnet: MagnetModel, z: float,
                      step: float = 1e-5) -> float:
    """dM_total/dz by Richardson-extrapolated central differences.

    D(h) = (M(z+h) - M(z-h)) / 2h;  returns (4 D(h/2) - D(h)) / 3, which
    cancels the h^2 error term.  Near the lower validity bound a one-sided
    difference is used instead and a warning is logged.
    """
    _check_gap(coil, magnet, z)
    h = step
    if z - h < MIN_GAP:
        log.warning("coupling_gradient at z=%.4g m: using one-sided difference", z)
        zs = np.array([z, z + h / 2, z + h])
        M = _coupling_many(coil, magnet, zs)
        return float((-3.0 * M[0] + 4.0 * M[1] - M[2]) / h)
    zs = np.array([z - h, z + h, z - h / 2, z + h / 2])
    M = _coupling_many(coil, magnet, zs)
    d_h = (M[1] - M[0]) / (2.0 * h)
    d_h2 = (M[3] - M[2]) / h
    return float((4.0 * d_h2 - d_h) / 3.0)


def axial_force(i_coil: float, coil: CoilGeometry, magnet: MagnetModel, z: float) -> float:
    """Axial force on the magnet [N], positive upward.

    F = -d/dz [ i_coil * M_total(z) * I_loop ] at fixed currents, i.e.
    parallel currents attract (pull the magnet up toward the coil).
    """
    if i_coil == 0.0:
        _check_gap(coil, magnet, z)
        return 0.0
    return -i_coil * magnet.sheet_current_per_loop * coupling_gradient(coil, magnet, z)


# ---------------------------------------------------------------------------
# Field probes and magnet calibration
# ---------------------------------------------------------------------------

def _loop_axis_field(radius, current, axial_distance):
    """On-axis field of a circular loop: mu0 a^2 I / (2 (a^2 + d^2)^(3/2))."""
    a2 = radius * radius
    return MU0 * a2 * current / (2.0 * (a2 + axial_distance ** 2) ** 1.5)


def center_field(i_coil: float, coil: CoilGeometry, magnet: MagnetModel, z_pm: float) -> float:
    """On-axis B_z at the coil's geometric center [T].

    Sums the coil turns carrying ``i_coil`` and the magnet sheet loops at
    gap ``z_pm``.  This mirrors a hall probe mounted at the coil center.
    """
    rc, zc = coil.filament_arrays()
    center = coil.axial_center
    B = float(np.sum(_loop_axis_field(rc, i_coil, zc - center))) if i_coil != 0.0 else 0.0
    if magnet.sheet_current_per_loop != 0.0:
        d = center + z_pm + magnet.loop_depths()
        B += float(np.sum(_loop_axis_field(magnet.radius, magnet.sheet_current_per_loop, d)))
    return B


def magnet_face_field(magnet: MagnetModel) -> float:
    """On-axis B_z at the center of the magnet's top face [T]."""
    return float(np.sum(_loop_axis_field(magnet.radius, magnet.sheet_current_per_loop,
                                         magnet.loop_depths())))


def calibrate_pm(magnet: MagnetModel, target_face_field: float) -> MagnetModel:
    """Set the sheet current so the top-face-center field equals the target.

    The field is linear in the sheet current, so the root find collapses to
    one division by the unit-current face field.
    """
    if target_face_field <= 0.0:
        raise ValueError("target face field must be positive")
    unit = magnet_face_field(replace(magnet, sheet_current_per_loop=1.0))
    return replace(magnet, sheet_current_per_loop=target_face_field / unit)


# ---------------------------------------------------------------------------
# Precomputed coupling table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingTable:
    """Gap-sampled coupling data with fast cubic interpolation.

    ``M_values`` are direct double-sum evaluations on the uniform
    ``z_samples`` grid; ``dMdz_values`` are the Richardson-difference
    gradients at the same nodes (kept for validation and export).  The
    simulator evaluates M through a cubic spline of ``M_values`` and dM/dz
    through that spline's exact derivative, which keeps the interpolated
    pair mutually consistent to machine precision.  ``B_unit_values`` is
    the coil-center field per ampere of sheet-loop current.
    """

    z_samples: np.ndarray
    M_values: np.ndarray
    dMdz_values: np.ndarray
    B_unit_values: np.ndarray
    # spline coefficients kept as plain float lists: the evaluators sit on the
    # simulator's hot path and must not leak numpy scalars into the integrator
    _m_coeffs: list = field(repr=False, default=None)
    _b_coeffs: list = field(repr=False, default=None)
    _z0: float = field(repr=False, default=0.0)
    _inv_step: float = field(repr=False, default=0.0)
    _last_index: int = field(repr=False, default=0)

    @classmethod
    def build(cls, coil: CoilGeometry, magnet: MagnetModel,
              z_min: float = 1.5e-3, z_max: float = 0.205,
              step: float = 5e-4) -> "CouplingTable":
        n = int(round((z_max - z_min) / step)) + 1
        zs = z_min + step * np.arange(n)
        a, b, off = _pair_grids(coil, magnet)
        h = 1e-5
        probes = np.array([0.0, -h, h, -h / 2, h / 2])
        M = np.empty(n)
        dM = np.empty(n)
        chunk = 16
        for lo in range(0, n, chunk):
            zc = zs[lo:lo + chunk]
            d = off[None, None, :] + zc[None, :, None] + probes[:, None, None]
            s = _mutual_arrays(a[None, None, :], b[None, None, :], d).sum(axis=2)
            M[lo:lo + chunk] = s[0]
            dM[lo:lo + chunk] = (4.0 * (s[4] - s[3]) / h - (s[2] - s[1]) / (2.0 * h)) / 3.0
        center = coil.axial_center
        depths = magnet.loop_depths()
        B_unit = _loop_axis_field(magnet.radius, 1.0,
                                  center + zs[:, None] + depths[None, :]).sum(axis=1)

        from scipy.interpolate import CubicSpline
        mc = [[float(v) for v in row] for row in CubicSpline(zs, M).c]
        bc = [[float(v) for v in row] for row in CubicSpline(zs, B_unit).c]
        return cls(zs, M, dM, B_unit, mc, bc,
                   float(zs[0]), 1.0 / step, n - 2)

    def _locate(self, z: float) -> tuple[int, float]:
        u = (z - self._z0) * self._inv_step
        if u < -1e-9 or u > self._last_index + 1.0 + 1e-9:
            raise ValueError(f"gap {z:.4g} m outside table range "
                             f"[{self.z_min:.4g}, {self.z_max:.4g}] m")
        i = min(max(int(u), 0), self._last_index)
        return i, (u - i) / self._inv_step

    def m(self, z: float) -> float:
        i, t = self._locate(z)
        c = self._m_coeffs
        return ((c[0][i] * t + c[1][i]) * t + c[2][i]) * t + c[3][i]

    def dmdz(self, z: float) -> float:
        i, t = self._locate(z)
        c = self._m_coeffs
        return (3.0 * c[0][i] * t + 2.0 * c[1][i]) * t + c[2][i]

    def b_center_per_sheet_amp(self, z: float) -> float:
        i, t = self._locate(z)
        c = self._b_coeffs
        return ((c[0][i] * t + c[1][i]) * t + c[2][i]) * t + c[3][i]

    @property
    def z_min(self) -> float:
        return float(self.z_samples[0])

    @property
    def z_max(self) -> float:
        return float(self.z_samples[-1])
