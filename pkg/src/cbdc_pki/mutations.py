"""Single-point faults injected into a planned schedule.

Each function returns a modified copy; the default generation is one in the
middle of the strand so the consequences fall inside the horizon.
"""

from __future__ import annotations

from dataclasses import replace

from .planner import Generation, Schedule
from .types import PhasePlan, Role


def _pick(schedule: Schedule, role: Role, index: int | None, need_start: bool = False) -> Generation:
    gens = schedule.generations(role)
    if not gens:
        raise ValueError(f"schedule has no {role.value} generations")
    if index is not None:
        return schedule.generation(role, index)
    candidates = [g for g in gens if g.start > 0] if need_start else list(gens)
    if not candidates:
        raise ValueError(f"no suitable {role.value} generation to mutate")
    return candidates[len(candidates) // 2]


def short_service_ramp(
    schedule: Schedule, role: Role = Role.CENTRAL_REGISTER, index: int | None = None
) -> Schedule:
    """Cut a service generation's ramp-up to u/2, keeping its active start."""
    gen = _pick(schedule, role, index, need_start=True)
    ramp = schedule.u // 2
    start = gen.issue_from - ramp
    new = replace(gen, start=start, plan=replace(gen.plan, ramp_up=ramp))
    return schedule.with_generation(role, new)


def short_root_passive(schedule: Schedule, index: int = 1) -> Schedule:
    """Shrink a Root generation's passive phase to u."""
    gen = schedule.generation(Role.ROOT_CA, index)
    new = replace(gen, plan=replace(gen.plan, passive=schedule.u))
    return schedule.with_generation(Role.ROOT_CA, new)


def short_manufacturer_passive(schedule: Schedule, index: int | None = None) -> Schedule:
    """Shrink a Manufacturer CA generation's passive phase to u/2."""
    gen = _pick(schedule, Role.MANUFACTURER_CA, index)
    new = replace(gen, plan=replace(gen.plan, passive=schedule.u // 2))
    return schedule.with_generation(Role.MANUFACTURER_CA, new)


def manufacturer_gap(schedule: Schedule, index: int | None = None) -> Schedule:
    """Delay a Manufacturer CA generation by u/2, leaving a gap before it."""
    gen = _pick(schedule, Role.MANUFACTURER_CA, index, need_start=True)
    new = replace(gen, start=gen.start + schedule.u // 2)
    return schedule.with_generation(Role.MANUFACTURER_CA, new)


def stretch_phase(
    schedule: Schedule, role: Role, index: int, phase: str, extra: int
) -> Schedule:
    """Lengthen one phase of one generation by ``extra`` ticks."""
    gen = schedule.generation(role, index)
    plan = gen.plan
    values = {"ramp_up": plan.ramp_up, "active": plan.active, "passive": plan.passive}
    values[phase] += extra
    start = gen.start - extra if phase == "ramp_up" else gen.start
    if start < 0:
        raise ValueError("cannot extend ramp-up before tick 0")
    return schedule.with_generation(role, replace(gen, start=start, plan=PhasePlan(**values)))


CANONICAL = {
    "central-register-ramp": short_service_ramp,
    "root-passive": short_root_passive,
    "manufacturer-passive": short_manufacturer_passive,
    "manufacturer-gap": manufacturer_gap,
}
