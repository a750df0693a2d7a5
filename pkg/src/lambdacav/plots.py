"""Quick-look figures rendered next to the CSV reports."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless backend; rendering must never block a run
import matplotlib.pyplot as plt

from .sweeps import SweepResult

__all__ = ["render_result"]


def _solved(result: SweepResult):
    return [r for r in result.rows if r.error is None and r.obs is not None]


def _render_spectrum(result: SweepResult, ax) -> None:
    rows = _solved(result)
    x = [r.control for r in rows]
    ax.semilogy(x, [r.obs.n_out for r in rows], color="tab:blue")
    ax.set_xlabel(r"probe detuning $\Delta_p/\kappa$")
    ax.set_ylabel(r"output photon rate $\langle b_{out}^\dagger b_{out}\rangle/\kappa$")
    ax.set_title("transmission spectrum")


def _render_response(result: SweepResult, ax) -> None:
    rows = _solved(result)
    x = [r.control for r in rows]
    ax.plot(x, [r.obs.n_out for r in rows], color="tab:blue", label="output photon rate")
    g2 = [(r.control, r.obs.g2_zero / 100.0) for r in rows if not math.isnan(r.obs.g2_zero)]
    if g2:
        ax.plot([v[0] for v in g2], [v[1] for v in g2], "--", color="tab:red",
                label=r"$g^{(2)}(0)/100$")
    ax.plot(x, [r.obs.absorption for r in rows], ":", color="black",
            label=r"absorption $|\mathrm{Im}\,\langle\sigma_{13}\rangle|$")
    ax.set_xlabel(r"input intensity $|\varepsilon/\kappa|^2$")
    ax.set_title("input-output response")
    ax.legend()


def _render_rcurve(result: SweepResult, ax) -> None:
    rows = [r for r in result.rows if r.error is None]
    c1 = [(r.control, r.r1) for r in rows if r.r1_defined]
    c2 = [(r.control, r.r2) for r in rows if r.r2_defined]
    if c1:
        ax.plot([v[0] for v in c1], [v[1] for v in c1], "o-", color="tab:blue",
                label="first peak")
    if c2:
        ax.plot([v[0] for v in c2], [v[1] for v in c2], "s--", color="tab:red",
                label="second peak")
    ax.set_xlabel("cooperativity $C$")
    ax.set_ylabel(r"negative response $\mathcal{R}$ (%)")
    ax.set_ylim(0, 100)
    ax.set_title("negative response vs cooperativity")
    ax.legend()


def render_result(result: SweepResult, path: Path) -> Path:
    """Render the figure matching the sweep kind and save it to `path`."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if result.kind == "spectrum":
        _render_spectrum(result, ax)
    elif result.kind == "response":
        _render_response(result, ax)
    elif result.kind == "rcurve":
        _render_rcurve(result, ax)
    else:
        plt.close(fig)
        raise ValueError(f"no renderer for sweep kind {result.kind!r}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
