"""PNG renderings of the report tables: set diagrams, survival bars, indices.

The set diagram draws the base cohort as the outer circle and the two
follow-period intersections as inner circles whose areas are proportional to
their counts; the inner overlap is sized to the joint count by solving the
two-circle lens equation. Degenerate inputs (zero counts) drop the affected
circles rather than failing.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle

from .longitudinal import ConcentrationRow, LongevityReport, UdaLongevityRow

_COLORS = {"base": "#d7e3f4", "b": "#8fb3e0", "c": "#f2c48d", "joint": "#b08fd0"}


def _lens_area(d: float, r1: float, r2: float) -> float:
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    if d >= r1 + r2:
        return 0.0
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt(
        max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    )
    return a1 + a2 - tri


def _overlap_distance(target: float, r1: float, r2: float) -> float:
    """Center distance giving the requested lens area (bisection)."""
    low, high = abs(r1 - r2), r1 + r2
    if target >= _lens_area(low, r1, r2):
        return low
    if target <= 0.0:
        return high
    for _ in range(96):
        mid = (low + high) / 2.0
        if _lens_area(mid, r1, r2) > target:
            low = mid
        else:
            high = mid
    return (low + high) / 2.0


def render_euler(report: LongevityReport, path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.set_aspect("equal")
    ax.axis("off")
    base_n = report.base_count
    if base_n > 0:
        r_base = math.sqrt(base_n / math.pi)
        follows = list(report.follow_labels)
        counts = [report.pair_counts[l] for l in follows]
        radii = [math.sqrt(c / math.pi) if c > 0 else 0.0 for c in counts]
        centers = [(0.0, 0.0)] * len(follows)
        if len(follows) == 2 and min(radii) > 0:
            d = _overlap_distance(float(report.joint_count), radii[0], radii[1])
            width = radii[0] + d + radii[1]
            x_left = -width / 2.0 + radii[0]
            centers = [(x_left, 0.0), (x_left + d, 0.0)]
            r_base = max(r_base, width / 2.0 * 1.02)
        ax.add_patch(Circle((0, 0), r_base, facecolor=_COLORS["base"], edgecolor="#3a4a5d", lw=1.4))
        for (cx, cy), radius, label, count, color in zip(
            centers,
            radii,
            follows,
            counts,
            (_COLORS["b"], _COLORS["c"]),
        ):
            if radius > 0:
                ax.add_patch(
                    Circle((cx, cy), radius, facecolor=color, edgecolor="#3a4a5d", lw=1.0, alpha=0.75)
                )
                pct = report.pair_share_pct(label)
                ax.annotate(
                    f"{report.base_label}∩{label}\n{count} ({pct:.0f}%)",
                    (cx, cy + radius),
                    xytext=(cx, cy + radius + 0.25 * r_base),
                    ha="center",
                    fontsize=9,
                    arrowprops={"arrowstyle": "-", "lw": 0.8},
                )
        joint_label = "∩".join([report.base_label, *follows])
        joint_pct = report.joint_share_pct or 0.0
        ax.annotate(
            f"{joint_label}\n{report.joint_count} ({joint_pct:.0f}%)",
            (0, 0),
            xytext=(0, -1.35 * r_base),
            ha="center",
            fontsize=9,
        )
        ax.text(
            -r_base,
            r_base,
            f"{report.base_label} = {base_n}",
            fontsize=11,
            ha="left",
            va="bottom",
        )
        pad = 1.6 * r_base
        ax.set_xlim(-pad, pad)
        ax.set_ylim(-pad, pad)
    else:
        ax.text(0.5, 0.5, "empty base cohort", ha="center", va="center", transform=ax.transAxes)
    ax.set_title(title)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_uda_longevity(rows: Sequence[UdaLongevityRow], path: Path, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(9.0, 4.5))
    labels = [row.uda for row in rows]
    x = range(len(rows))
    follow_labels = list(rows[0].pair_counts.keys()) if rows else []
    width = 0.8 / (len(follow_labels) + 1) if follow_labels else 0.8
    for i, follow in enumerate(follow_labels):
        shares = [row.pair_share_pct(follow) or 0.0 for row in rows]
        ax.bar([xi + i * width for xi in x], shares, width=width, label=f"still in {follow}")
    shares = [row.joint_share_pct or 0.0 for row in rows]
    ax.bar(
        [xi + len(follow_labels) * width for xi in x],
        shares,
        width=width,
        label="all periods",
        color=_COLORS["joint"],
    )
    ax.set_xticks([xi + width * len(follow_labels) / 2 for xi in x])
    ax.set_xticklabels(labels)
    ax.set_xlabel("UDA")
    ax.set_ylabel("share of base cohort (%)")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=9)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_concentration(
    tables: dict[str, Sequence[ConcentrationRow]], path: Path, title: str
) -> Path:
    fig, axes = plt.subplots(1, len(tables), figsize=(4.0 * len(tables), 3.6), squeeze=False)
    for ax, (grouping, rows) in zip(axes[0], sorted(tables.items())):
        labels = [row.group for row in rows]
        values = [row.concentration_index if row.concentration_index is not None else 0.0 for row in rows]
        ax.bar(range(len(rows)), values, color=_COLORS["b"])
        ax.axhline(1.0, color="#3a4a5d", lw=0.9, ls="--")
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
        ax.set_title(grouping, fontsize=10)
        ax.set_ylabel("concentration index")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_all(result, fig_dir: Path) -> list[Path]:
    """Render the bundle's figures; returns the written paths."""
    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []
    titles = {"ts": "top-decile cohort", "un": "zero-score cohort", "ts_mu2": "second-mean cohort"}
    for kind in ("ts", "un"):
        written.append(
            render_euler(
                result.longevity[kind],
                fig_dir / f"euler_{kind}.png",
                f"Longevity of the {titles[kind]}",
            )
        )
    for kind in ("ts", "ts_mu2"):
        if kind in result.uda_tables:
            written.append(
                render_uda_longevity(
                    result.uda_tables[kind],
                    fig_dir / f"longevity_uda_{kind}.png",
                    f"Survival by discipline: {titles[kind]}",
                )
            )
    for kind in ("ts", "un"):
        tables = {
            grouping: rows
            for (k, grouping), rows in result.concentration.items()
            if k == kind and grouping in ("gender", "macro_region")
        }
        if tables:
            written.append(
                render_concentration(
                    tables,
                    fig_dir / f"concentration_{kind}.png",
                    f"Persistence concentration: {titles[kind]}",
                )
            )
    return written
