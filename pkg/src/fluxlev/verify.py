"""Independent oracle suite.

Each oracle checks one leg of the model against a route that shares no code
with it:

  * Maxwell-formula mutual inductance vs adaptive quadrature of the Neumann
    double line integral.
  * Levitation force vs a finite-difference gradient of the interaction
    coenergy U(z) = i * M(z) * I_loop (different stencil and step from the
    force path's own differences).
  * Flux bookkeeping of an integrated pumped run against the trapezoid of
    the recorded loop voltage.
  * Discharge time constant of an integrated run vs L/R.
  * Magnet calibration: reproduced face field and an order-of-magnitude
    bracket on the equivalent ampere-turns.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import magnetics as mg
from . import mechanics as me
from . import sim as sm


def neumann_mutual(a: float, b: float, d: float) -> float:
    """Mutual inductance of coaxial filaments by the Neumann double integral.

    M = (mu0 a b / 2) * int_0^{2pi} cos(phi) dphi / sqrt(a^2+b^2-2ab cos(phi)+d^2)
    """
    def integrand(phi):
        return math.cos(phi) / math.sqrt(a * a + b * b - 2 * a * b * math.cos(phi) + d * d)

    with warnings.catch_warnings():
        # near-touching loops push the requested tolerance to the roundoff
        # floor; the achieved accuracy is what the comparison itself verifies
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(integrand, 0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    return mg.MU0 * a * b * val  # symmetric halves: 2 * (mu0 a b / 2) * int_0^pi


@dataclass
class OracleResult:
    name: str
    status: str  # pass | fail | skip
    detail: str

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def check_mutual_vs_neumann(n_pairs: int = 100, seed: int = 20240, tol: float = 1e-9,
                            mutual=None) -> OracleResult:
    """Random coaxial pairs: radii 5-50 mm, separations 1-200 mm."""
    mutual = mutual or (lambda a, b, d: mg.mutual_inductance(
        mg.FilamentLoop(a, 0.0), mg.FilamentLoop(b, d)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        a = rng.uniform(5e-3, 50e-3)
        b = rng.uniform(5e-3, 50e-3)
        d = rng.uniform(1e-3, 200e-3)
        m_ref = neumann_mutual(a, b, d)
        worst = max(worst, abs(mutual(a, b, d) - m_ref) / abs(m_ref))
    status = "pass" if worst <= tol else "fail"
    return OracleResult("mutual inductance vs Neumann integral", status,
                        f"max rel err {worst:.2e} over {n_pairs} pairs (tol {tol:g})")


def check_force_vs_energy(system: sm.SystemModel, i_coil: float = 5.0,
                          tol: float = 1e-5) -> OracleResult:
    """F(z) against -dU/dz by a five-point stencil on the direct double sum."""
    coil, magnet = system.coil, system.magnet
    h = 2e-4
    worst = 0.0
    for z in np.linspace(0.010, 0.060, 11):
        f = mg.axial_force(i_coil, coil, magnet, float(z))
        u = [i_coil * mg.pm_coil_coupling(coil, magnet, float(z) + k * h)[1]
             * magnet.sheet_current_per_loop for k in (-2, -1, 1, 2)]
        dudz = (u[0] - 8 * u[1] + 8 * u[2] - u[3]) / (12 * h)
        worst = max(worst, abs(f + dudz) / abs(f))
    status = "pass" if worst <= tol else "fail"
    return OracleResult("force vs coenergy gradient", status,
                        f"max rel err {worst:.2e} on z in [10, 60] mm (tol {tol:g})")


def check_flux_bookkeeping(system: sm.SystemModel) -> OracleResult:
    """d(lambda)/dt = -R i + v_bridge, checked column-against-column.

    lambda is reconstructed from the recorded current and gap, the pumped
    flux column supplies the exact integral of v_bridge, and the resistive
    term is the trapezoid of the recorded current, so the three recorded
    channels must close the budget together.
    """
    from . import circuit as ci

    plan = sm.RunPlan(
        scenario_id="bookkeeping", system=system,
        table=me.SupportTrajectory(points=((0.0, 0.018),)),
        sim=sm.SimConfig(t_end=6.0, record_period=0.01),
        pump=ci.PumpConfig(),
        null_windows=((0.0, 6.0, 4.0),),  # pump toward 4 A so the bridge acts
        controller_kind="null")
    record = sm.Simulator(plan).run()
    params = system.circuit
    t = np.asarray(record["t"])
    i = np.asarray(record["i_coil"])
    phi = np.asarray(record["phi_pumped"])
    lam = (params.L_coil * i
           + np.array([system.m(z) for z in record["z"]]) * system.sheet_current)
    resistive = np.concatenate(
        [[0.0], np.cumsum(0.5 * (i[1:] + i[:-1]) * np.diff(t))]) * params.R_loop
    drift = np.abs((lam - lam[0]) - (phi - phi[0]) + resistive)
    worst = float(drift.max())
    budget = plan.sim.rel_tol * float(np.max(np.abs(lam)))
    status = "pass" if worst <= budget else "fail"
    return OracleResult("flux linkage bookkeeping", status,
                        f"max |drift| {worst:.3e} Wb (budget {budget:.3e} Wb)")


def check_discharge_tau(system: sm.SystemModel, tol: float = 0.005) -> OracleResult:
    from .scenarios import fit_decay_tau

    if system.circuit.R_loop == 0.0:
        return OracleResult("discharge time constant", "skip",
                            "R_loop = 0: infinite time constant")
    plan = sm.RunPlan(
        scenario_id="tau", system=system,
        table=me.SupportTrajectory(points=((0.0, 0.200),)),
        sim=sm.SimConfig(t_end=900.0, record_period=0.5), i_start=10.0)
    record = sm.Simulator(plan).run()
    tau = fit_decay_tau(np.asarray(record["t"]), np.asarray(record["i_coil"]))
    expected = system.circuit.tau
    rel = abs(tau - expected) / expected
    status = "pass" if rel <= tol else "fail"
    return OracleResult("discharge time constant", status,
                        f"fit {tau:.2f} s vs L/R {expected:.2f} s (rel err {rel:.2e})")


def check_pm_calibration(system: sm.SystemModel, target: float = 0.3137) -> OracleResult:
    face = mg.magnet_face_field(system.magnet)
    rel = abs(face - target) / target
    b_equiv = mg.MU0 * system.magnet.ampere_turns / system.magnet.height
    bracket_ok = 0.4 <= b_equiv <= 1.4
    status = "pass" if (rel <= 1e-6 and bracket_ok) else "fail"
    return OracleResult("magnet calibration", status,
                        f"face field {face:.6f} T (rel err {rel:.1e}), "
                        f"equivalent remanence {b_equiv:.3f} T in [0.4, 1.4]")


def run_oracle_suite(system: sm.SystemModel | None = None,
                     face_field_target: float = 0.3137) -> list[OracleResult]:
    if system is None:
        system = sm.SystemModel.build(face_field=face_field_target)
    return [
        check_mutual_vs_neumann(),
        check_force_vs_energy(system),
        check_flux_bookkeeping(system),
        check_discharge_tau(system),
        check_pm_calibration(system, target=face_field_target),
    ]
