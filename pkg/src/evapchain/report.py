"""Figure rendering next to the delimited output.

Figures are a convenience layer over the CSVs, drawn with matplotlib's file
backend.  The simulation stack never imports this module, so a stripped
environment without matplotlib still runs and verifies; rendering then
degrades to a logged warning.
"""

from __future__ import annotations

import logging

log = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        return plt
    except ImportError:
        log.warning("matplotlib unavailable; skipping figure rendering")
        return None


def save_trace_figure(labeled_traces, path, title: str = "") -> str | None:
    """Plot one line per (label, EntropyTrace) with event markers."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, trace in labeled_traces:
        ax.plot(trace.times(), trace.entropies(), marker="o", label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("boundary entropy [nats]")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    if labeled_traces:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_convergence_figure(rows, path, title: str = "") -> str | None:
    """Semilog plot of |E(chi) - E(chi_max)| from a convergence scan."""
    plt = _pyplot()
    if plt is None:
        return None
    chis = [r[0] for r in rows]
    errors = [max(r[2], 1e-16) for r in rows]  # the reference row is exactly 0
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.semilogy(chis, errors, marker="s")
    ax.set_xlabel("bond dimension")
    ax.set_ylabel("|E(chi) - E(chi_max)|")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
