"""Matplotlib renderings of sweep results, written next to the CSV files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .stat_engine import number_tag  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
}


def _figure(width=5.0):
    golden = (5**0.5 - 1) / 2
    return plt.subplots(figsize=(width, width * golden))


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def plot_crest(curves, path):
    with plt.rc_context(RC):
        fig, ax = _figure()
        for c in curves:
            ax.semilogx(c.x, c.y, marker="o", ms=3, label=f"eps = {c.metadata['epsilon']:g}")
        ax.set_xlabel("number of antennas N")
        ax.set_ylabel("crest factor [dB]")
        ax.legend()
        return _save(fig, path)


def plot_vswr(curves, path):
    with plt.rc_context(RC):
        fig, ax = _figure()
        for c in curves:
            ax.plot(c.x, c.y, label=f"N = {c.metadata['n']}")
        ax.set_xlabel("VSWR")
        ax.set_ylabel("pdf")
        ax.set_xlim(1, float(c.x[-1]))
        ax.legend(ncol=2)
        return _save(fig, path)


def plot_distortion(curves, path):
    with plt.rc_context(RC):
        fig, ax = _figure()
        styles = {"mmse": "-", "equal": "--"}
        etas = sorted({c.metadata["eta"] for c in curves})
        for c in curves:
            m = c.y > 0
            ax.loglog(
                c.x[m], c.y[m], styles.get(c.metadata["policy"], ":"), marker=".",
                color=f"C{etas.index(c.metadata['eta'])}",
                label=f"{c.metadata['policy']}, eta = {c.metadata['eta']:g}",
            )
        ax.set_xlabel("number of antennas N")
        ax.set_ylabel("normalized distortion")
        ax.legend()
        return _save(fig, path)


def render_figures(curves, out_dir) -> list[Path]:
    """Draw one figure per curve family present in ``curves``."""
    out = Path(out_dir)
    written = []
    crest = [c for c in curves if c.name.startswith("crest_")]
    if crest:
        written.append(plot_crest(crest, out / "fig_crest.png"))
    hists = {}
    for c in curves:
        if c.name.startswith("vswr_n"):
            key = (c.metadata["epsilon"], c.metadata["mismatch_model"])
            hists.setdefault(key, []).append(c)
    for (eps, model), group in sorted(hists.items()):
        written.append(plot_vswr(group, out / f"fig_vswr_eps{number_tag(eps)}_{model}.png"))
    dist = [c for c in curves if c.name.startswith("distortion_")]
    if dist:
        written.append(plot_distortion(dist, out / "fig_distortion.png"))
    return written
