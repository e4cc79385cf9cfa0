"""Gantt charts (SVG) and flat fragment tables (CSV) for schedules."""

from __future__ import annotations

import csv
import io
from xml.sax.saxutils import escape

from .feasibility import InfeasibleSchedule, validate
from .model import Instance, Schedule
from .timeline import per_shot_runtime

# colour per circuit id, cycled
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
           "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")

LANE_H = 36
LANE_GAP = 8
LEFT = 80
RIGHT = 20
TOP = 40
AXIS_H = 40
WIDTH = 960

FRAGMENT_COLUMNS = ("qpu", "circuit", "sub", "shots", "start", "end")


def fragment_rows(inst: Instance, sched: Schedule) -> list[dict]:
    """Positive-shot fragments as rows in lane order (QPU, start, circuit, sub)."""
    t1, t2 = inst.gate_times
    rows = []
    for f in sched.sorted().fragments:
        if f.shots <= 0:
            continue
        T = per_shot_runtime(inst.subcircuit(f.circuit_id, f.sub_id), t1, t2)
        rows.append({"qpu": f.qpu_id, "circuit": f.circuit_id, "sub": f.sub_id, "shots": f.shots,
                     "start": f.start, "end": f.start + T * f.shots})
    return rows


def render_csv(inst: Instance, sched: Schedule) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, FRAGMENT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(fragment_rows(inst, sched))
    return buf.getvalue()


def _num(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_gantt(inst: Instance, sched: Schedule, title: str | None = None) -> str:
    """SVG Gantt chart: one lane per QPU, one rectangle per fragment.

    Rectangles span ``[start, end)`` on the time axis and are labelled
    ``s_{i,j}``. Dashed vertical lines mark each served circuit's deadline.

    Raises:
        InfeasibleSchedule: the schedule violates a constraint.
    """
    violations = validate(inst, sched)
    if violations:
        raise InfeasibleSchedule(violations)
    rows = fragment_rows(inst, sched)
    served = [c for c in inst.circuits if sched.served[c.id]]
    horizon = max([r["end"] for r in rows] + [c.deadline for c in served] + [1])
    plot_w = WIDTH - LEFT - RIGHT
    M = inst.num_qpus
    height = TOP + M * (LANE_H + LANE_GAP) + AXIS_H

    def x(t):
        return LEFT + plot_w * t / horizon

    def lane_y(m):
        return TOP + m * (LANE_H + LANE_GAP)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT}" y="20" font-size="14">{escape(title)}</text>')
    for m in range(M):
        y = lane_y(m)
        out.append(f'<g class="lane" data-qpu="{m}">')
        out.append(f'<rect x="{LEFT}" y="{y}" width="{plot_w}" height="{LANE_H}" fill="#f4f4f4"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_num(y + LANE_H / 2 + 4)}" text-anchor="end">QPU {m}</text>')
        out.append("</g>")
    for r in rows:
        y = lane_y(r["qpu"])
        x0, x1 = x(r["start"]), x(r["end"])
        colour = PALETTE[r["circuit"] % len(PALETTE)]
        label = f"s_{{{r['circuit']},{r['sub']}}}"
        out.append(
            f'<g class="fragment" data-circuit="{r["circuit"]}" data-sub="{r["sub"]}" data-qpu="{r["qpu"]}" '
            f'data-start="{r["start"]}" data-end="{r["end"]}" data-shots="{r["shots"]}">'
        )
        out.append(f'<rect x="{_num(x0)}" y="{y + 2}" width="{_num(max(x1 - x0, 0.5))}" '
                   f'height="{LANE_H - 4}" fill="{colour}" stroke="#333333" stroke-width="0.5"/>')
        out.append(f'<text x="{_num((x0 + x1) / 2)}" y="{_num(y + LANE_H / 2 + 4)}" '
                   f'text-anchor="middle" fill="#000000">{escape(label)}</text>')
        out.append("</g>")
    bottom = lane_y(M)
    for c in served:
        xd = _num(x(c.deadline))
        colour = PALETTE[c.id % len(PALETTE)]
        out.append(f'<g class="deadline" data-circuit="{c.id}" data-deadline="{c.deadline}">')
        out.append(f'<line x1="{xd}" y1="{TOP - 6}" x2="{xd}" y2="{bottom}" stroke="{colour}" '
                   f'stroke-width="1.5" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{xd}" y="{TOP - 9}" text-anchor="middle" fill="{colour}">tau_{c.id}</text>')
        out.append("</g>")
    out.append(f'<line x1="{LEFT}" y1="{bottom}" x2="{LEFT + plot_w}" y2="{bottom}" stroke="#333333"/>')
    for k in range(6):
        t = horizon * k / 5
        out.append(f'<text x="{_num(x(t))}" y="{bottom + 16}" text-anchor="middle">{_num(t)}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.0f}" y="{bottom + 32}" text-anchor="middle">time</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
