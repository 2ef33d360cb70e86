"""Report rendering: fixed-width tables, CSV files, matplotlib figures.

Every report path writes the delimited table and renders its figures to
files in the same directory, so a run leaves both machine-readable and
visual artifacts. Figures use the file-only backend; no display needed.
"""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport, format_mean_sigma

AXES = ("x", "y", "z")


def write_delimited(path, header: list, rows: list, delimiter: str = ",") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def fixed_width_table(header: list, rows: list) -> str:
    """Left-align the first column, right-align the numeric rest."""
    cells = [[str(c) for c in row] for row in [header, *rows]]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = []
    for k, row in enumerate(cells):
        parts = [row[0].ljust(widths[0])]
        parts += [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(parts).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


# ---------------------------------------------------------------- eval


def eval_table(report: EvalReport, by_category: bool = True) -> tuple:
    """(header, csv_rows, text_rows) for a per-category error report."""
    header = [
        "category",
        "frames",
        "mpjpe_mm_mean",
        "mpjpe_mm_sigma",
        "pa_mpjpe_mm_mean",
        "pa_mpjpe_mm_sigma",
    ]
    csv_rows, text_rows = [], []
    entries = (
        [(c, report.per_category[c]) for c in report.categories]
        if by_category
        else []
    )
    entries.append(("overall", report.overall))
    for name, stats in entries:
        frames = report.frame_counts.get(name, sum(report.frame_counts.values()))
        csv_rows.append(
            [
                name,
                frames,
                f"{stats['mpjpe_mm_mean']:.4f}",
                f"{stats['mpjpe_mm_sigma']:.4f}",
                f"{stats['pa_mpjpe_mm_mean']:.4f}",
                f"{stats['pa_mpjpe_mm_sigma']:.4f}",
            ]
        )
        text_rows.append(
            [
                name,
                frames,
                format_mean_sigma(stats["mpjpe_mm_mean"], stats["mpjpe_mm_sigma"]),
                format_mean_sigma(
                    stats["pa_mpjpe_mm_mean"], stats["pa_mpjpe_mm_sigma"]
                ),
            ]
        )
    return header, csv_rows, text_rows


def format_eval_report(report: EvalReport, by_category: bool = True) -> str:
    _, _, text_rows = eval_table(report, by_category)
    header = ["category", "frames", "mpjpe_mm", "pa_mpjpe_mm"]
    runs = len(report.per_run_overall)
    title = f"pose error over {runs} run(s), {report.pose_frame} frame"
    return title + "\n" + fixed_width_table(header, text_rows)


def eval_figures(report: EvalReport, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cats = list(report.categories)
    means = [report.per_category[c]["mpjpe_mm_mean"] for c in cats]
    sigmas = [report.per_category[c]["mpjpe_mm_sigma"] for c in cats]
    pa_means = [report.per_category[c]["pa_mpjpe_mm_mean"] for c in cats]

    fig, ax = plt.subplots(figsize=(8, max(3, 0.3 * len(cats) + 1.5)))
    y = np.arange(len(cats))
    ax.barh(y - 0.2, means, height=0.4, xerr=sigmas, label="MPJPE", color="#3a6ea5")
    ax.barh(y + 0.2, pa_means, height=0.4, label="PA-MPJPE", color="#d1813b")
    ax.axvline(report.overall["mpjpe_mm_mean"], ls="--", lw=1, color="#3a6ea5")
    ax.set_yticks(y, cats)
    ax.invert_yaxis()
    ax.set_xlabel("error (mm)")
    ax.set_title("per-category pose error")
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = out_dir / "eval_by_category.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def write_eval_report(report: EvalReport, out_dir, by_category: bool = True) -> dict:
    """Write table (csv), text rendering, JSON, and figures; return paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, csv_rows, _ = eval_table(report, by_category)
    table_path = write_delimited(out_dir / "eval_table.csv", header, csv_rows)
    text = format_eval_report(report, by_category)
    (out_dir / "eval_table.txt").write_text(text + "\n")
    report.save(out_dir / "eval_report.json")
    figures = eval_figures(report, out_dir)
    return {
        "table": table_path,
        "text": out_dir / "eval_table.txt",
        "json": out_dir / "eval_report.json",
        "figures": figures,
    }


# ------------------------------------------------------------ ablation


def ablation_table(rows: list) -> tuple:
    header = [
        "cell",
        "encoder_params",
        "mpjpe_mm_mean",
        "mpjpe_mm_sigma",
        "pa_mpjpe_mm_mean",
        "pa_mpjpe_mm_sigma",
        "error",
    ]
    csv_rows, text_rows = [], []
    for row in rows:
        if "error" in row:
            csv_rows.append([row["name"], "", "", "", "", "", row["error"]])
            text_rows.append([row["name"], "-", "failed", row["error"]])
            continue
        o = row["overall"]
        csv_rows.append(
            [
                row["name"],
                row["encoder_params"],
                f"{o['mpjpe_mm_mean']:.4f}",
                f"{o['mpjpe_mm_sigma']:.4f}",
                f"{o['pa_mpjpe_mm_mean']:.4f}",
                f"{o['pa_mpjpe_mm_sigma']:.4f}",
                "",
            ]
        )
        text_rows.append(
            [
                row["name"],
                row["encoder_params"],
                format_mean_sigma(o["mpjpe_mm_mean"], o["mpjpe_mm_sigma"]),
                format_mean_sigma(o["pa_mpjpe_mm_mean"], o["pa_mpjpe_mm_sigma"]),
            ]
        )
    return header, csv_rows, text_rows


def format_ablation_table(rows: list) -> str:
    _, _, text_rows = ablation_table(rows)
    header = ["cell", "encoder_params", "mpjpe_mm", "pa_mpjpe_mm"]
    return "ablation comparison\n" + fixed_width_table(header, text_rows)


def ablation_figures(rows: list, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in rows if "error" not in r]
    if not ok:
        return []
    names = [r["name"] for r in ok]
    means = [r["overall"]["mpjpe_mm_mean"] for r in ok]
    sigmas = [r["overall"]["mpjpe_mm_sigma"] for r in ok]
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(ok)), 4))
    x = np.arange(len(ok))
    ax.bar(x, means, yerr=sigmas, width=0.6, color="#3a6ea5", capsize=4)
    ax.set_xticks(x, names, rotation=20, ha="right")
    ax.set_ylabel("MPJPE (mm)")
    ax.set_title("ablation: overall error by cell")
    fig.tight_layout()
    path = out_dir / "ablation_overall.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def write_ablation_report(rows: list, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, csv_rows, _ = ablation_table(rows)
    table_path = write_delimited(out_dir / "ablation_table.csv", header, csv_rows)
    (out_dir / "ablation_table.txt").write_text(format_ablation_table(rows) + "\n")
    figures = ablation_figures(rows, out_dir)
    return {
        "table": table_path,
        "text": out_dir / "ablation_table.txt",
        "figures": figures,
    }


# --------------------------------------------------------------- stats


def stats_table(stats) -> tuple:
    header = ["keypoint", "axis", "mean_cm", "variance_cm2"]
    rows = []
    for name, entry in stats.table().items():
        for axis, mean, var in zip(AXES, entry["mean"], entry["variance"]):
            rows.append([name, axis, f"{mean:.4f}", f"{var:.4f}"])
    return header, rows


def format_stats_table(stats) -> str:
    header, rows = stats_table(stats)
    n = len(stats.categories)
    title = f"keypoint distribution relative to the hip midpoint, {n} frames"
    return title + "\n" + fixed_width_table(header, rows)


def stats_figures(stats, out_dir) -> list:
    """Scatter the head and left-foot clouds: top view and side view."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5))
    views = ((0, 1, "x (cm)", "y (cm)", "top view"), (1, 2, "y (cm)", "z (cm)", "side view"))
    clouds = (("head", stats.head, "#3a6ea5"), ("left_foot", stats.left_foot, "#d1813b"))
    for ax, (i, j, xl, yl, title) in zip(axes, views):
        for name, cloud, color in clouds:
            ax.scatter(cloud[:, i], cloud[:, j], s=4, alpha=0.4, label=name, color=color)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_title(title)
        ax.axhline(0, lw=0.5, color="gray")
        ax.axvline(0, lw=0.5, color="gray")
        ax.set_aspect("equal")
    axes[0].legend(loc="upper right")
    fig.suptitle("keypoint clouds relative to the hip midpoint")
    fig.tight_layout()
    path = out_dir / "keypoint_clouds.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def write_stats_report(stats, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows = stats_table(stats)
    table_path = write_delimited(out_dir / "keypoint_stats.csv", header, rows)
    (out_dir / "keypoint_stats.txt").write_text(format_stats_table(stats) + "\n")
    figures = stats_figures(stats, out_dir)
    return {
        "table": table_path,
        "text": out_dir / "keypoint_stats.txt",
        "figures": figures,
    }


# --------------------------------------------------------------- loss


def loss_figures(run_report, out_dir) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for phase, curve in run_report.train_losses.items():
        ax.plot(range(1, len(curve) + 1), curve, marker="o", label=f"{phase} train")
    for phase, curve in run_report.val_losses.items():
        if curve:
            ax.plot(range(1, len(curve) + 1), curve, ls="--", label=f"{phase} val")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean loss")
    plotted = [
        v
        for curves in (run_report.train_losses, run_report.val_losses)
        for curve in curves.values()
        for v in curve
    ]
    if plotted and min(plotted) > 0:
        ax.set_yscale("log")  # linear when the 3D loss goes negative
    ax.set_title(f"training curves (seed {run_report.seed}, {run_report.strategy})")
    ax.legend()
    fig.tight_layout()
    path = out_dir / f"loss_curves_seed{run_report.seed}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
