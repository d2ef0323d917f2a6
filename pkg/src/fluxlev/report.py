"""Figure rendering for run records.

Each run gets a two-panel SVG: position vs time (with contact events
marked) and coil current vs time with the pump-injected share overlaid.
The vertical datum follows the scenario's reporting convention: raw gap in
millimeters, or signed height (negative below the coil).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "fluxlev"

from .sim import RunRecord  # noqa: E402

_DATUM = {
    "gap_m": (1.0, "gap (m)"),
    "gap_mm": (1e3, "gap (mm)"),
    "height_mm": (-1e3, "height (mm)"),
}


def render_run_figure(record: RunRecord, path: str | Path, datum: str = "gap_mm") -> None:
    if datum not in _DATUM:
        datum = "gap_mm"
    scale, ylabel = _DATUM[datum]
    t = record["t"]
    z = [v * scale for v in record["z"]]

    fig, (ax_z, ax_i) = plt.subplots(2, 1, figsize=(7.0, 5.4), sharex=True)
    ax_z.plot(t, z, lw=1.0, color="tab:blue")
    for t_ev, label in record.events:
        if label in ("liftoff", "touchdown"):
            ax_z.axvline(t_ev, color="0.6", lw=0.7, ls="--")
            ax_z.annotate(label, (t_ev, max(z)), fontsize=7, rotation=90,
                          va="top", ha="right", color="0.4")
    ax_z.set_ylabel(ylabel)
    if scale > 0:
        ax_z.invert_yaxis()  # smaller gap (higher magnet) plots upward
    ax_z.grid(alpha=0.3)
    title = record.metadata.get("scenario", "run")
    variant = record.metadata.get("variant", "")
    ax_z.set_title(f"{title} {variant}".strip())

    ax_i.plot(t, record["i_coil"], lw=1.0, color="tab:red", label="coil current")
    ax_i.plot(t, record["i_transport"], lw=1.0, color="tab:green",
              label="transport share")
    ax_i.set_xlabel("t (s)")
    ax_i.set_ylabel("current (A)")
    ax_i.grid(alpha=0.3)
    ax_i.legend(loc="best", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
