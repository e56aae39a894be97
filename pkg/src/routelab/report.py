"""Static report rendering: street-map and schedule figures plus per-route CSV.

The same fixed vehicle palette is used in both panels. The schedule is a
Marey-style chart with a horizontal time axis: one line per customer grouped
by vehicle, a grey rectangle for the time window, a vehicle-coloured rectangle
for the service period, and a red overlay where service runs past the window
close.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from .constraints import SideConstraints
from .instance import ProblemInstance
from .solution import Solution, route_distance

# Fixed deterministic vehicle palette (shared with the web client).
PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def vehicle_color(vehicle: int) -> str:
    return PALETTE[vehicle % len(PALETTE)]


def render_map(
    instance: ProblemInstance,
    solution: Solution,
    path: str | Path,
    constraints: SideConstraints | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(7, 6))
    ax.set_title(f"{instance.name}: routes (objective {solution.objective:.2f})")
    ax.plot(instance.depot.x, instance.depot.y, "ks", markersize=10, label="depot")
    locks = constraints.locks if constraints is not None else {}
    for c in instance.customers:
        label = f"[{c.id}]" if c.id in locks else c.id
        ax.annotate(
            label, (c.x, c.y), textcoords="offset points", xytext=(6, 6), fontsize=9
        )
        ax.plot(c.x, c.y, "o", color="#444444", markersize=4)
    for route in solution.routes:
        if not route.visits:
            continue
        color = vehicle_color(route.vehicle)
        points = [(instance.depot.x, instance.depot.y)]
        points += [(instance.customer(cid).x, instance.customer(cid).y) for cid in route.visits]
        points.append((instance.depot.x, instance.depot.y))
        xs, ys = zip(*points)
        ax.plot(xs, ys, "-", color=color, linewidth=1.6, label=f"vehicle {route.vehicle}")
        for (x1, y1), (x2, y2) in zip(points, points[1:]):
            ax.annotate(
                "", xy=((x1 + x2) / 2, (y1 + y2) / 2), xytext=(x1, y1),
                arrowprops=dict(arrowstyle="->", color=color, lw=1.2),
            )
    if constraints is not None:
        for before, after in sorted(constraints.orders):
            b, a = instance.customer(before), instance.customer(after)
            ax.annotate(
                "", xy=(a.x, a.y), xytext=(b.x, b.y),
                arrowprops=dict(arrowstyle="-|>", color="#9932cc", lw=1.4, linestyle=":"),
            )
    ax.legend(loc="best", fontsize=8)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_schedule(
    instance: ProblemInstance,
    solution: Solution,
    path: str | Path,
) -> Path:
    rows = []  # (customer id, vehicle, timing)
    for route in solution.routes:
        for cid, vt in zip(route.visits, route.timing.visits):
            rows.append((cid, route.vehicle, vt))
    fig, ax = plt.subplots(figsize=(8, max(3, 0.5 * len(rows) + 1.5)))
    ax.set_title(f"{instance.name}: schedule")
    ax.set_xlabel("time")
    yticks, ylabels = [], []
    y = 0
    bar = 0.34
    for route in solution.routes:
        color = vehicle_color(route.vehicle)
        trajectory = []
        for cid, vt in zip(route.visits, route.timing.visits):
            cust = instance.customer(cid)
            ax.add_patch(Rectangle(
                (cust.window_open, y - bar), cust.window_close - cust.window_open,
                2 * bar, facecolor="#d9d9d9", edgecolor="none", zorder=1,
            ))
            service_end = min(vt.service_finish, cust.window_close)
            if service_end > vt.service_start:
                ax.add_patch(Rectangle(
                    (vt.service_start, y - bar), service_end - vt.service_start,
                    2 * bar, facecolor=color, edgecolor="none", zorder=2,
                ))
            if vt.service_finish > cust.window_close + 1e-9:
                ax.add_patch(Rectangle(
                    (max(vt.service_start, cust.window_close), y - bar),
                    vt.service_finish - max(vt.service_start, cust.window_close),
                    2 * bar, facecolor="#e02020", edgecolor="none", zorder=3,
                ))
            if vt.service_start > vt.arrival + 1e-9:  # waiting gap
                ax.plot([vt.arrival, vt.service_start], [y, y],
                        color=color, linestyle=":", linewidth=1.0, zorder=2)
            ax.axhline(y, color="#eeeeee", zorder=0)
            trajectory.append((vt.service_start, y))
            yticks.append(y)
            ylabels.append(f"{cid} (v{route.vehicle})")
            y += 1
        if trajectory:
            xs = [t for t, _ in trajectory]
            ys = [r for _, r in trajectory]
            ax.plot(xs, ys, "-", color=color, linewidth=1.0, alpha=0.8, zorder=2)
        y += 0.5  # gap between vehicle groups
    ax.set_yticks(yticks)
    ax.set_yticklabels(ylabels, fontsize=8)
    ax.set_xlim(instance.depot.horizon_open, max(
        [instance.depot.horizon_close]
        + [r.timing.return_time for r in solution.routes]
    ) * 1.02 + 1)
    ax.invert_yaxis()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_route_csv(
    instance: ProblemInstance,
    solution: Solution,
    path: str | Path,
) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "vehicle", "stops", "customers", "distance",
            "departure", "return_time", "violations",
        ])
        for route in solution.routes:
            route_violations = [
                v for v in solution.violations if set(v.customers) & set(route.visits)
            ]
            writer.writerow([
                route.vehicle,
                len(route.visits),
                " ".join(route.visits),
                f"{route_distance(instance, route.visits):.6f}",
                f"{route.timing.departure:.6f}",
                f"{route.timing.return_time:.6f}",
                "; ".join(f"{v.kind}({','.join(v.customers)})" for v in route_violations),
            ])
        writer.writerow([])
        writer.writerow(["objective", f"{solution.objective:.6f}"])
        writer.writerow(["feasible", str(solution.feasible).lower()])
    return path


def write_report(
    instance: ProblemInstance,
    solution: Solution,
    out_dir: str | Path,
    constraints: SideConstraints | None = None,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return {
        "map": render_map(instance, solution, out / "map.png", constraints),
        "schedule": render_schedule(instance, solution, out / "schedule.png"),
        "routes_csv": write_route_csv(instance, solution, out / "routes.csv"),
    }
