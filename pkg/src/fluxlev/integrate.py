"""Embedded Dormand-Prince 5(4) pair with adaptive step control.

The propagated solution is 5th order; the embedded 4th-order solution
provides the local error estimate.  The simulator feeds in a hard ceiling
per step so that steps never straddle known switching instants (pump pulse
edges, controller samples, table schedule nodes, record instants); state
events are located by bisection on top of single fixed steps.
"""

from __future__ import annotations

import math


class StiffnessError(RuntimeError):
    """Step size underflow; the drive is too stiff for the explicit pair."""


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# b5 - b4, including the 7th (FSAL) stage weight.
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

MIN_STEP = 1e-9  # [s]


def dp54_step(f, t, y, h):
    """One fixed Dormand-Prince step: returns (y5, error_estimate)."""
    if len(y) == 4:
        return _dp54_step4(f, t, y, h)
    n = len(y)
    k1 = f(t, y)
    k = [k1]
    for row, c in zip(_A, _C[1:]):
        ys = tuple(y[i] + h * sum(a * kk[i] for a, kk in zip(row, k)) for i in range(n))
        k.append(f(t + c * h, ys))
    y5 = tuple(y[i] + h * sum(b * kk[i] for b, kk in zip(_B5, k)) for i in range(n))
    k.append(f(t + h, y5))
    err = tuple(h * sum(e * kk[i] for e, kk in zip(_E, k)) for i in range(n))
    return y5, err


def _dp54_step4(f, t, y, h):
    """Four-state Dormand-Prince step, unrolled for the simulator's hot path."""
    a21, = _A[0]
    a31, a32 = _A[1]
    a41, a42, a43 = _A[2]
    a51, a52, a53, a54 = _A[3]
    a61, a62, a63, a64, a65 = _A[4]
    b1, _, b3, b4, b5, b6 = _B5
    e1, _, e3, e4, e5, e6, e7 = _E
    y0, y1, y2, y3 = y

    k10, k11, k12, k13 = f(t, y)
    k20, k21, k22, k23 = f(t + 0.2 * h, (
        y0 + h * a21 * k10, y1 + h * a21 * k11, y2 + h * a21 * k12, y3 + h * a21 * k13))
    k30, k31, k32, k33 = f(t + 0.3 * h, (
        y0 + h * (a31 * k10 + a32 * k20), y1 + h * (a31 * k11 + a32 * k21),
        y2 + h * (a31 * k12 + a32 * k22), y3 + h * (a31 * k13 + a32 * k23)))
    k40, k41, k42, k43 = f(t + 0.8 * h, (
        y0 + h * (a41 * k10 + a42 * k20 + a43 * k30),
        y1 + h * (a41 * k11 + a42 * k21 + a43 * k31),
        y2 + h * (a41 * k12 + a42 * k22 + a43 * k32),
        y3 + h * (a41 * k13 + a42 * k23 + a43 * k33)))
    k50, k51, k52, k53 = f(t + (8 / 9) * h, (
        y0 + h * (a51 * k10 + a52 * k20 + a53 * k30 + a54 * k40),
        y1 + h * (a51 * k11 + a52 * k21 + a53 * k31 + a54 * k41),
        y2 + h * (a51 * k12 + a52 * k22 + a53 * k32 + a54 * k42),
        y3 + h * (a51 * k13 + a52 * k23 + a53 * k33 + a54 * k43)))
    k60, k61, k62, k63 = f(t + h, (
        y0 + h * (a61 * k10 + a62 * k20 + a63 * k30 + a64 * k40 + a65 * k50),
        y1 + h * (a61 * k11 + a62 * k21 + a63 * k31 + a64 * k41 + a65 * k51),
        y2 + h * (a61 * k12 + a62 * k22 + a63 * k32 + a64 * k42 + a65 * k52),
        y3 + h * (a61 * k13 + a62 * k23 + a63 * k33 + a64 * k43 + a65 * k53)))
    y5 = (y0 + h * (b1 * k10 + b3 * k30 + b4 * k40 + b5 * k50 + b6 * k60),
          y1 + h * (b1 * k11 + b3 * k31 + b4 * k41 + b5 * k51 + b6 * k61),
          y2 + h * (b1 * k12 + b3 * k32 + b4 * k42 + b5 * k52 + b6 * k62),
          y3 + h * (b1 * k13 + b3 * k33 + b4 * k43 + b5 * k53 + b6 * k63))
    k70, k71, k72, k73 = f(t + h, y5)
    err = (h * (e1 * k10 + e3 * k30 + e4 * k40 + e5 * k50 + e6 * k60 + e7 * k70),
           h * (e1 * k11 + e3 * k31 + e4 * k41 + e5 * k51 + e6 * k61 + e7 * k71),
           h * (e1 * k12 + e3 * k32 + e4 * k42 + e5 * k52 + e6 * k62 + e7 * k72),
           h * (e1 * k13 + e3 * k33 + e4 * k43 + e5 * k53 + e6 * k63 + e7 * k73))
    return y5, err


class AdaptiveStepper:
    """Carries the step-size state of one integration run."""

    def __init__(self, rel_tol: float, abs_tol: tuple[float, ...],
                 max_growth: float = 5.0, h_init: float = 1e-4, h_cap: float = 1.0):
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_growth = max_growth
        self.h = h_init
        self.h_cap = h_cap

    def _error_norm(self, y, y5, err):
        acc = 0.0
        for i in range(len(y)):
            scale = self.abs_tol[i] + self.rel_tol * max(abs(y[i]), abs(y5[i]))
            r = err[i] / scale
            acc += r * r
        return math.sqrt(acc / len(y))

    def step(self, f, t, y, h_max):
        """Advance one accepted step, no further than t + h_max."""
        while True:
            h = min(self.h, h_max)
            if h < MIN_STEP:
                raise StiffnessError(
                    f"step size underflow ({h:.2e} s) at t={t:.6f} s; the bridge "
                    "drive is too stiff, consider a lower pump amplitude ratio or "
                    "a smaller power-law exponent")
            y5, err = dp54_step(f, t, y, h)
            enorm = self._error_norm(y, y5, err)
            if enorm <= 1.0:
                if enorm == 0.0:
                    factor = self.max_growth
                else:
                    factor = min(self.max_growth, max(0.2, 0.9 * enorm ** -0.2))
                self.h = min(h * factor, self.h_cap)
                return t + h, y5
            self.h = h * max(0.2, 0.9 * enorm ** -0.2)
