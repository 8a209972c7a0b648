"""Gantt-style rendering of a schedule as monospaced text or SVG."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

from .planner import Generation, Schedule
from .types import Phase, Role, phase_at

GLYPHS = {Phase.RAMP_UP: ".", Phase.ACTIVE: "#", Phase.PASSIVE: "~"}
BLANK = " "

COLORS = {Phase.RAMP_UP: "#35506b", Phase.ACTIVE: "#a9c8e8", Phase.PASSIVE: "#35506b"}


@dataclass(frozen=True, slots=True)
class Segment:
    """A run of ticks ``[start, end)`` spent in one phase."""

    role: Role
    index: int
    phase: Phase
    start: int
    end: int


def segments(role: Role, gen: Generation) -> list[Segment]:
    out: list[Segment] = []
    for t in range(gen.verify_from, gen.verify_until + 1):
        phase = phase_at(gen, t)
        if out and out[-1].phase is phase:
            last = out[-1]
            out[-1] = Segment(role, gen.index, phase, last.start, t + 1)
        else:
            out.append(Segment(role, gen.index, phase, t, t + 1))
    return out


def all_segments(schedule: Schedule) -> list[Segment]:
    return [s for role, gen in schedule.iter_generations() for s in segments(role, gen)]


def extent(schedule: Schedule) -> int:
    """First tick after everything worth drawing."""
    ends = [g.verify_until + 1 for _, g in schedule.iter_generations()]
    return max([schedule.horizon, *ends])


def _label(role: Role, index: int) -> str:
    return f"{role.value} g{index}"


def render_text(schedule: Schedule, bucket: int = 1) -> str:
    """One row per generation, one character per ``bucket`` ticks.

    A bucket shows the phase of its first tick.
    """
    if bucket < 1:
        raise ValueError("bucket must be >= 1")
    end = extent(schedule)
    rows = [(_label(role, g.index), g) for role, g in schedule.iter_generations()]
    width = max((len(label) for label, _ in rows), default=0)
    cols = range(0, end, bucket)

    u = schedule.u
    # mark columns that contain a multiple of u
    axis = ["|" if -(-t // u) * u < t + bucket else "-" for t in cols]
    lines = [f"# u={schedule.u} horizon={schedule.horizon} bucket={bucket}"]
    lines.append(f"{'':<{width}} {''.join(axis)}")
    for label, gen in rows:
        bar = "".join(GLYPHS.get(phase_at(gen, t), BLANK) for t in cols)
        lines.append(f"{label:<{width}} {bar.rstrip()}")
    lines.append(f"legend: '{GLYPHS[Phase.RAMP_UP]}' ramp-up, '{GLYPHS[Phase.ACTIVE]}' active, '{GLYPHS[Phase.PASSIVE]}' passive")
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> dict[str, str]:
    """Bars keyed by label, as written by :func:`render_text`."""
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("# u="):
        raise ValueError("not a timeline rendering")
    offset = len(lines[1]) - len(lines[1].lstrip(" "))
    bars = {}
    for line in lines[2:]:
        if line.startswith("legend:"):
            break
        bars[line[:offset].rstrip()] = line[offset:]
    return bars


def render_svg(schedule: Schedule, scale: int = 6, row_height: int = 18) -> str:
    end = extent(schedule)
    rows = list(schedule.iter_generations())
    label_w = 150
    top = 24
    width = label_w + end * scale + 10
    height = top + row_height * len(rows) + 10
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-u="{schedule.u}" data-horizon="{schedule.horizon}">',
        '<style>text{font-family:monospace;font-size:11px}</style>',
    ]
    for t in range(0, end + 1, schedule.u):
        x = label_w + t * scale
        out.append(f'<line x1="{x}" y1="{top - 6}" x2="{x}" y2="{height - 10}" stroke="#ddd"/>')
        out.append(f'<text x="{x}" y="{top - 10}" text-anchor="middle">{t}</text>')
    for row, (role, gen) in enumerate(rows):
        y = top + row * row_height
        label = quoteattr(_label(role, gen.index))[1:-1]
        out.append(f'<text x="4" y="{y + row_height - 5}">{label}</text>')
        for seg in segments(role, gen):
            out.append(
                f'<rect x="{label_w + seg.start * scale}" y="{y + 2}" '
                f'width="{(seg.end - seg.start) * scale}" height="{row_height - 4}" '
                f'fill="{COLORS[seg.phase]}" stroke="#222" stroke-width="0.5" '
                f'data-role={quoteattr(role.value)} data-index="{gen.index}" '
                f'data-phase="{seg.phase.value}" data-start="{seg.start}" data-end="{seg.end}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
