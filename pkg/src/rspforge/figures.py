"""Report figures.

Headless matplotlib rendering for the CLI: a report that goes to a file gets
a PNG next to it. Three plot kinds cover every command: the attack sweep
(advantage vs p_0 with the bound), per-check value bars, and Pauli weight
bars for twirl decompositions.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def sweep_figure(rows: list[dict], path: str) -> None:
    """Advantage against p_0, one curve per n, dashed line at the bound."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_n: dict[int, list[dict]] = {}
    for row in rows:
        by_n.setdefault(int(row["n"]), []).append(row)
    for n, group in sorted(by_n.items()):
        group = sorted(group, key=lambda r: r["p_0"])
        p0 = [r["p_0"] for r in group]
        adv = [r["advantage"] for r in group]
        (line,) = ax.plot(p0, adv, marker="o", ms=4, label=f"n={n}")
        ax.axhline(group[0]["bound"], color=line.get_color(), ls="--", lw=0.9)
    ax.set_xlabel("$p_0$")
    ax.set_ylabel("distinguishing advantage")
    ax.set_title("trap-round attack family, dashed at $1/(2^n{-}1)$")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def check_values_figure(checks: list[dict], metric: str, path: str,
                        bound: float | None = None) -> bool:
    """Indexed plot of one numeric metric across checks.

    Returns False without writing anything when no check carries the metric,
    so callers can fall back to another plot or skip the figure.
    """
    vals = [(c["name"], c["values"][metric]) for c in checks
            if metric in c.get("values", {})]
    if not vals:
        return False
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ys = [v for _, v in vals]
    ax.plot(range(len(ys)), ys, marker="o", ms=3, lw=0.8)
    if bound is not None:
        ax.axhline(bound, color="crimson", ls="--", lw=0.9, label="bound")
        ax.legend(frameon=False)
    ax.set_xlabel("check index")
    ax.set_ylabel(metric)
    if len(vals) <= 12:
        ax.set_xticks(range(len(vals)))
        ax.set_xticklabels([name for name, _ in vals], rotation=45,
                           ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def pauli_weights_figure(entries: list[dict], path: str) -> None:
    """Grouped bars of (p_I, p_X, p_Y, p_Z) per twirled channel."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = ("I", "X", "Y", "Z")
    width = 0.2
    xs = range(len(entries))
    for j, label in enumerate(labels):
        offs = [x + (j - 1.5) * width for x in xs]
        ax.bar(offs, [e[label] for e in entries], width=width, label=f"p_{label}")
    ax.set_xlabel("channel index")
    ax.set_ylabel("Pauli weight")
    ax.set_title("Clifford-twirled channel weights (X, Y, Z bars coincide)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(report: dict, out_path: str) -> list[str]:
    """Write the figures that make sense for ``report`` next to ``out_path``.

    Returns the list of files written (possibly empty: some reports have
    nothing worth plotting).
    """
    stem = os.path.splitext(out_path)[0]
    written: list[str] = []
    command = report.get("command")
    if command == "sweep" and report.get("rows"):
        path = stem + ".png"
        sweep_figure(report["rows"], path)
        written.append(path)
    elif command == "twirl-check" and report.get("pauli_weights"):
        path = stem + ".png"
        pauli_weights_figure(report["pauli_weights"], path)
        written.append(path)
    else:
        checks = report.get("checks", [])
        bound = None
        for c in checks:
            if "bound" in c.get("values", {}):
                bound = c["values"]["bound"]
                break
        for metric in ("advantage", "max_advantage", "fidelity"):
            path = stem + ".png"
            if check_values_figure(checks, metric, path, bound=bound):
                written.append(path)
                break
    return written
