"""Table and figure emission for benchmark and estimation runs.

CSV files carry the machine-readable results, Markdown mirrors the layout
of the benchmark tables, and matplotlib renders companion figures next to
the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .benchmark import BenchmarkReport


def write_csv(path, rows: list[dict], fieldnames=None) -> None:
    if not rows:
        Path(path).write_text("")
        return
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def markdown_table(header: list[str], body: list[list[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return "\n".join(lines) + "\n"


def _w_label(w) -> str:
    return " ".join(f"{v:g}" for v in np.atleast_1d(w))


def benchmark_markdown(report: BenchmarkReport) -> str:
    """Order-count and mean-r2 tables pivoted as (w rows x method columns)."""
    cfg = report.config
    methods = cfg["methods"]
    ws = [tuple(w) for w in cfg["w"]]
    by_key = {(tuple(c.w.tolist()), c.method): c for c in report.cells}
    title = (
        f"## Model {cfg['model']}, (n, p) = ({cfg['n']}, {cfg['p']}), "
        f"{cfg['reps']} runs\n\n"
    )
    header = ["w"] + [m.upper() for m in methods]
    order_body, trace_body = [], []
    for w in ws:
        label = _w_label(w)
        order_body.append(
            [label] + [str(by_key[(w, m)].n_correct) for m in methods]
        )
        trace_body.append(
            [label] + [f"{by_key[(w, m)].mean_r2:.3f}" for m in methods]
        )
    out = title
    out += "Correct order determinations:\n\n"
    out += markdown_table(header, order_body)
    out += "\nMean trace correlations:\n\n"
    out += markdown_table(header, trace_body)
    return out


def _is_square_grid(ws) -> bool:
    if not ws or len(ws[0]) != 2:
        return False
    pts = sorted({w[0] for w in ws})
    return len(ws) == len(pts) ** 2


def benchmark_figures(report: BenchmarkReport, out_dir) -> list[Path]:
    """Render order-rate and trace-correlation figures beside the CSVs."""
    out_dir = Path(out_dir)
    cfg = report.config
    methods = cfg["methods"]
    ws = [tuple(w) for w in cfg["w"]]
    by_key = {(tuple(c.w.tolist()), c.method): c for c in report.cells}
    paths = []
    tag = f"model_{cfg['model']}_n{cfg['n']}_p{cfg['p']}"
    if _is_square_grid(ws):
        pts = sorted({w[0] for w in ws})
        for stat, fname, label in (
            ("mean_r2", f"{tag}_trace.png", "mean trace correlation"),
            ("correct_rate", f"{tag}_order.png", "correct-order rate"),
        ):
            fig, axes = plt.subplots(
                1, len(methods), figsize=(4.2 * len(methods), 3.6), squeeze=False
            )
            for ax, m in zip(axes[0], methods):
                grid = np.array(
                    [[getattr(by_key[((w1, w2), m)], stat) for w2 in pts] for w1 in pts]
                )
                im = ax.imshow(
                    grid, origin="lower", vmin=0.0, vmax=1.0, cmap="viridis",
                    extent=(pts[0], pts[-1], pts[0], pts[-1]),
                )
                ax.set_title(m.upper())
                ax.set_xlabel("w2")
                ax.set_ylabel("w1")
                fig.colorbar(im, ax=ax, shrink=0.85)
            fig.suptitle(f"Model {cfg['model']}: {label}")
            fig.tight_layout()
            path = out_dir / fname
            fig.savefig(path, dpi=150)
            plt.close(fig)
            paths.append(path)
        return paths
    xs = [w[0] for w in ws]
    order = np.argsort(xs)
    for stat, fname, label, lo, hi in (
        ("mean_r2", f"{tag}_trace.png", "mean trace correlation", 0.0, 1.05),
        ("correct_rate", f"{tag}_order.png", "correct-order rate", 0.0, 1.05),
    ):
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        for m in methods:
            vals = np.array([getattr(by_key[(w, m)], stat) for w in ws])
            ax.plot(np.array(xs)[order], vals[order], marker="o", label=m.upper())
        ax.set_xlabel("w")
        ax.set_ylabel(label)
        ax.set_ylim(lo, hi)
        ax.set_title(f"Model {cfg['model']}, (n, p) = ({cfg['n']}, {cfg['p']})")
        ax.legend()
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def ladle_figure(profile, path) -> Path:
    """g, f, phi curves over candidate ranks for one query point."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(profile.ks, profile.g, marker="o", label="g = f + phi")
    ax.plot(profile.ks, profile.f, marker="s", linestyle="--", label="f (bootstrap)")
    ax.plot(profile.ks, profile.phi, marker="^", linestyle=":", label="phi (spectrum)")
    ax.axvline(profile.d_hat, color="grey", alpha=0.5)
    ax.set_xlabel("candidate rank k")
    ax.set_ylabel("criterion")
    ax.set_title(f"ladle profile at w = {_w_label(profile.w)} (d_hat = {profile.d_hat})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def bandwidth_figure(search, path) -> Path:
    """Per-slice CV curves over the candidate grid, with the winner marked."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for l in range(search.cv_scores.shape[0]):
        ax.plot(search.grid, search.cv_scores[l], marker=".", label=f"slice {l + 1}")
    ax.axvline(search.h_opt, color="grey", alpha=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("bandwidth h")
    ax.set_ylabel("leave-one-out CV score")
    ax.set_title(f"bandwidth search (h_opt = {search.h_opt:.4g})")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def profile_rows(profile) -> list[dict]:
    """Serializable (k, f0, f, phi, g) records of a ladle profile."""
    return [
        {
            "k": int(k),
            "f0": float(profile.f0[i]),
            "f": float(profile.f[i]),
            "phi": float(profile.phi[i]),
            "g": float(profile.g[i]),
        }
        for i, k in enumerate(profile.ks)
    ]
