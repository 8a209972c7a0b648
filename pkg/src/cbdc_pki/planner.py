"""Multi-generation rollover planning and schedule validation.

All durations are in ticks; ``u`` is the number of ticks in the base unit
(the smartcard validity period).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .types import (
    STRAND_HEADS,
    Phase,
    PhasePlan,
    Role,
    check_tick,
    is_active,
    phase_at,
)

#: Roles that appear as strands in a schedule (smartcards are issued on demand).
SCHEDULED_ROLES = tuple(r for r in Role if r is not Role.SMARTCARD_EE)

#: Roles whose active windows must cover every tick of the horizon.
ISSUANCE_COVERAGE_ROLES = (Role.HARDWARE_CA, Role.MANUFACTURER_CA)
USAGE_COVERAGE_ROLES = (Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE)
SERVICE_RAMP_ROLES = (Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE)


class PlanningError(ValueError):
    pass


class InfeasibleSchedule(PlanningError):
    def __init__(self, role: Role, index: int, message: str):
        super().__init__(f"{role.value} generation {index}: {message}")
        self.role = role
        self.index = index


@dataclass(frozen=True, slots=True)
class PhaseBounds:
    """Per-role phase bounds in ticks; ``*_exact`` turns a minimum into an equality."""

    ramp_up: int = 0
    active: int = 1
    passive: int = 0
    ramp_exact: bool = False
    active_exact: bool = False
    passive_exact: bool = False

    @property
    def validity(self) -> int:
        return self.ramp_up + self.active + self.passive

    def as_plan(self) -> PhasePlan:
        return PhasePlan(self.ramp_up, self.active, self.passive)


@dataclass(frozen=True)
class RolloverProfile:
    u: int
    bounds: dict[Role, PhaseBounds]
    #: lower bound on Active(Root) + Passive(Root)
    root_active_plus_passive: int

    def __getitem__(self, role: Role) -> PhaseBounds:
        return self.bounds[role]

    def with_bounds(self, role: Role, **changes) -> RolloverProfile:
        bounds = dict(self.bounds)
        bounds[role] = replace(bounds[role], **changes)
        return replace(self, bounds=bounds)


def table1_minimums(u: int) -> RolloverProfile:
    """Minimum rollover timing per role, scaled to ``u`` ticks."""
    if isinstance(u, bool) or not isinstance(u, int) or u < 1:
        raise PlanningError(f"u must be a positive number of ticks, got {u!r}")
    B = PhaseBounds
    bounds = {
        Role.ROOT_CA: B(ramp_up=u, active=2 * u, passive=2 * u),
        Role.HARDWARE_CA: B(active=2 * u, passive=2 * u),
        Role.MANUFACTURER_CA: B(active=u, passive=u),
        Role.SMARTCARD_EE: B(active=u, active_exact=True, passive_exact=True),
        Role.OPERATIONAL_CA: B(active=2 * u, passive=u),
        Role.CENTRAL_REGISTER: B(ramp_up=u, active=u, passive_exact=True),
        Role.TIMESTAMP_SERVICE: B(ramp_up=u, active=u, passive_exact=True),
        Role.MINTING: B(active=2 * u, active_exact=True, passive_exact=True),
        Role.FINANCIAL_CA: B(active=2 * u, passive=u),
        Role.FSP: B(active=2 * u, active_exact=True, passive_exact=True),
    }
    return RolloverProfile(u=u, bounds=bounds, root_active_plus_passive=4 * u)


@dataclass(frozen=True, slots=True)
class Generation:
    index: int
    start: int
    plan: PhasePlan
    parent_index: int | None = None

    @property
    def verify_from(self) -> int:
        return self.start

    @property
    def issue_from(self) -> int:
        return self.start + self.plan.ramp_up

    @property
    def issue_until(self) -> int:
        return self.issue_from + self.plan.active

    @property
    def verify_until(self) -> int:
        return self.issue_until + self.plan.passive

    def phase_at(self, t: int) -> Phase:
        return phase_at(self, t)


@dataclass(frozen=True)
class Schedule:
    u: int
    horizon: int
    strands: dict[Role, tuple[Generation, ...]] = field(default_factory=dict)

    def generations(self, role: Role) -> tuple[Generation, ...]:
        return self.strands.get(role, ())

    def generation(self, role: Role, index: int) -> Generation:
        for gen in self.generations(role):
            if gen.index == index:
                return gen
        raise KeyError(f"no {role.value} generation {index}")

    def parent_of(self, role: Role, gen: Generation) -> Generation | None:
        if role.parent is None or gen.parent_index is None:
            return None
        return self.generation(role.parent, gen.parent_index)

    def active_generation(self, role: Role, t: int) -> Generation | None:
        """Newest generation of ``role`` whose active window contains ``t``."""
        best = None
        for gen in self.generations(role):
            if is_active(gen, t) and (best is None or gen.index > best.index):
                best = gen
        return best

    def iter_generations(self) -> Iterator[tuple[Role, Generation]]:
        for role in SCHEDULED_ROLES:
            for gen in self.generations(role):
                yield role, gen

    def with_generation(self, role: Role, gen: Generation) -> Schedule:
        """Return a copy with the generation of the same index replaced."""
        gens = tuple(gen if g.index == gen.index else g for g in self.generations(role))
        return replace(self, strands={**self.strands, role: gens})

    @property
    def generation_count(self) -> int:
        return sum(len(g) for g in self.strands.values())

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "u_ticks": self.u,
            "horizon": self.horizon,
            "roles": [
                {
                    "role": role.value,
                    "generations": [
                        {
                            "index": g.index,
                            "start": g.start,
                            "ramp": g.plan.ramp_up,
                            "active": g.plan.active,
                            "passive": g.plan.passive,
                            "parent_index": g.parent_index,
                        }
                        for g in gens
                    ],
                }
                for role, gens in self.strands.items()
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> Schedule:
        try:
            u = check_tick(data["u_ticks"], "u_ticks")
            horizon = check_tick(data["horizon"], "horizon")
            strands: dict[Role, tuple[Generation, ...]] = {}
            for entry in data["roles"]:
                role = Role(entry["role"])
                if role in strands:
                    raise PlanningError(f"duplicate role {role.value}")
                strands[role] = tuple(
                    Generation(
                        index=int(g["index"]),
                        start=check_tick(g["start"], "start"),
                        plan=PhasePlan(g["ramp"], g["active"], g["passive"]),
                        parent_index=g.get("parent_index"),
                    )
                    for g in entry["generations"]
                )
        except (KeyError, TypeError, ValueError, OverflowError) as exc:
            if isinstance(exc, PlanningError):
                raise
            raise PlanningError(f"invalid schedule document: {exc!r}") from exc
        if u < 1:
            raise PlanningError("u_ticks must be >= 1")
        return cls(u=u, horizon=horizon, strands=strands)

    @classmethod
    def loads(cls, text: str) -> Schedule:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanningError(f"schedule is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


# -- planning -------------------------------------------------------------


def _linked(
    schedule_so_far: dict[Role, tuple[Generation, ...]],
    role: Role,
    index: int,
    start: int,
    plan: PhasePlan,
) -> Generation:
    """Attach a new generation to the newest parent generation active at ``start``."""
    parent_role = role.parent
    assert parent_role is not None
    parents = schedule_so_far[parent_role]
    candidates = [p for p in parents if is_active(p, start)]
    if not candidates:
        raise InfeasibleSchedule(
            role, index, f"no active {parent_role.value} generation at creation tick {start}"
        )
    parent = max(candidates, key=lambda p: p.index)
    gen = Generation(index, start, plan, parent.index)
    if gen.verify_until > parent.verify_until:
        raise InfeasibleSchedule(
            role,
            index,
            f"validity ends at {gen.verify_until}, after {parent_role.value} "
            f"generation {parent.index} expires at {parent.verify_until}",
        )
    return gen


def _tile(
    strands: dict[Role, tuple[Generation, ...]],
    role: Role,
    bounds: PhaseBounds,
    horizon: int,
) -> tuple[Generation, ...]:
    """Back-to-back active windows of minimum length covering ``[0, horizon)``."""
    gens: list[Generation] = []
    active_start = 0
    while active_start < horizon:
        index = len(gens) + 1
        ramp = bounds.ramp_up if gens else 0
        start = max(active_start - ramp, 0)
        plan = PhasePlan(active_start - start, bounds.active, bounds.passive)
        gens.append(_linked(strands, role, index, start, plan))
        active_start += bounds.active
    return tuple(gens)


def plan_schedule(
    u: int,
    horizon: int,
    profile: RolloverProfile | None = None,
    first_root_active: int = 3,
    uniform_strands: bool = True,
) -> Schedule:
    """Plan every role's generations so that ``[0, horizon)`` is covered.

    ``first_root_active`` is in multiples of ``u``. Root generations run
    back to back; each later one is created a ramp-up period before its
    active phase begins. The three strand-head CAs get exactly one
    generation per Root generation, sharing the Root's active window; with
    ``uniform_strands`` they also share one passive period (the largest of
    their minimums) so every strand has the same total validity. Deeper
    roles tile their minimum active period back to back.
    """
    profile = profile or table1_minimums(u)
    if isinstance(u, bool) or not isinstance(u, int) or u < 1:
        raise PlanningError(f"u must be a positive number of ticks, got {u!r}")
    if profile.u != u:
        raise PlanningError(f"profile was built for u={profile.u}, not u={u}")
    check_tick(horizon, "horizon")
    if horizon < u:
        raise PlanningError(f"horizon {horizon} is shorter than u={u}")
    root = profile[Role.ROOT_CA]
    first_active = first_root_active * u
    if first_active < root.active:
        raise PlanningError(
            f"first_root_active={first_root_active}u is below the Root CA minimum "
            f"active phase of {root.active} ticks"
        )

    strands: dict[Role, tuple[Generation, ...]] = {}

    roots: list[Generation] = []
    active_start = 0
    while active_start < horizon:
        if not roots:
            plan = PhasePlan(0, first_active, root.passive)
            start = 0
        else:
            start = max(active_start - root.ramp_up, 0)
            plan = PhasePlan(active_start - start, root.active, root.passive)
        roots.append(Generation(len(roots) + 1, start, plan))
        active_start += plan.active
    strands[Role.ROOT_CA] = tuple(roots)

    head_passive = max(profile[r].passive for r in STRAND_HEADS)
    for head in STRAND_HEADS:
        bounds = profile[head]
        passive = head_passive if uniform_strands else bounds.passive
        gens = []
        for rg in roots:
            index = len(gens) + 1
            if rg.plan.active < bounds.active:
                raise InfeasibleSchedule(
                    head,
                    index,
                    f"Root generation {rg.index} is active for {rg.plan.active} ticks, "
                    f"less than the {bounds.active}-tick minimum",
                )
            start = rg.issue_from
            plan = PhasePlan(0, rg.plan.active, passive)
            gens.append(_linked(strands, head, index, start, plan))
        strands[head] = tuple(gens)

    for role in (
        Role.MANUFACTURER_CA,
        Role.CENTRAL_REGISTER,
        Role.TIMESTAMP_SERVICE,
        Role.MINTING,
        Role.FSP,
    ):
        strands[role] = _tile(strands, role, profile[role], horizon)

    ordered = {r: strands[r] for r in SCHEDULED_ROLES}
    return Schedule(u=u, horizon=horizon, strands=ordered)


class NoActiveIssuer(LookupError):
    pass


def issuer_for(schedule: Schedule, role: Role, t: int) -> Generation:
    """Generation that issues ``role`` certificates at tick ``t``.

    When several parent generations are active the newest one issues. For
    :attr:`Role.ROOT_CA` the active Root generation itself is returned.
    """
    parent_role = role.parent or Role.ROOT_CA
    gen = schedule.active_generation(parent_role, t)
    if gen is None:
        raise NoActiveIssuer(f"no active parent: no {parent_role.value} active at tick {t}")
    return gen


# -- validation -----------------------------------------------------------

CONSTRAINTS = {
    "a": "phase minimums",
    "b": "parent containment",
    "c": "issuance coverage",
    "d": "service ramp-up",
    "e": "root ramp-up and passive",
    "f": "root active plus passive",
    "g": "service coverage",
}


@dataclass(frozen=True, order=True)
class Violation:
    constraint: str
    role: Role
    generation_index: int | None
    expected: str
    observed: str
    ticks: tuple[int, int] | None = None
    detail: str = ""

    @property
    def name(self) -> str:
        return f"({self.constraint}) {CONSTRAINTS[self.constraint]}"

    def __str__(self) -> str:
        where = self.role.value
        if self.generation_index is not None:
            where += f" gen {self.generation_index}"
        span = f" ticks {self.ticks[0]}..{self.ticks[1]}" if self.ticks else ""
        msg = f"{self.name}: {where}{span}: expected {self.expected}, observed {self.observed}"
        return f"{msg} ({self.detail})" if self.detail else msg

    def to_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "name": CONSTRAINTS[self.constraint],
            "role": self.role.value,
            "generation_index": self.generation_index,
            "expected": self.expected,
            "observed": self.observed,
            "ticks": list(self.ticks) if self.ticks else None,
            "detail": self.detail,
        }


def _check_bound(
    out: list[Violation],
    constraint: str,
    role: Role,
    gen: Generation,
    what: str,
    observed: int,
    bound: int,
    exact: bool,
) -> None:
    if exact and observed != bound:
        out.append(Violation(constraint, role, gen.index, f"{what} == {bound}", str(observed)))
    elif not exact and observed < bound:
        out.append(Violation(constraint, role, gen.index, f"{what} >= {bound}", str(observed)))


def _gaps(windows: Iterable[Generation], horizon: int) -> list[tuple[int, int]]:
    """Inclusive tick ranges in ``[0, horizon)`` not inside any active window."""
    windows = list(windows)
    gaps = []
    gap_start = None
    for t in range(horizon):
        covered = any(is_active(w, t) for w in windows)
        if not covered and gap_start is None:
            gap_start = t
        elif covered and gap_start is not None:
            gaps.append((gap_start, t - 1))
            gap_start = None
    if gap_start is not None:
        gaps.append((gap_start, horizon - 1))
    return gaps


def validate_schedule(schedule: Schedule, profile: RolloverProfile | None = None) -> list[Violation]:
    """Check a schedule against every rollover constraint; ``[]`` means valid.

    Ramp-up minimums do not apply to generations created at tick 0, since
    no card can predate them.
    """
    profile = profile or table1_minimums(schedule.u)
    out: list[Violation] = []

    for role, gen in schedule.iter_generations():
        b = profile[role]
        plan = gen.plan
        # (a) phase minimums; Root and service ramp-ups live in (d)/(e)
        if role not in (Role.ROOT_CA, *SERVICE_RAMP_ROLES):
            _check_bound(out, "a", role, gen, "ramp", plan.ramp_up, b.ramp_up, b.ramp_exact)
        _check_bound(out, "a", role, gen, "active", plan.active, b.active, b.active_exact)
        if role is not Role.ROOT_CA:
            _check_bound(out, "a", role, gen, "passive", plan.passive, b.passive, b.passive_exact)

        # (b) parent linkage
        if role.parent is not None:
            try:
                parent = schedule.parent_of(role, gen)
            except KeyError:
                parent = None
            if parent is None:
                out.append(
                    Violation(
                        "b", role, gen.index,
                        f"a {role.parent.value} parent", f"parent_index={gen.parent_index}",
                        detail="unknown parent generation",
                    )
                )
            else:
                if not is_active(parent, gen.start):
                    out.append(
                        Violation(
                            "b", role, gen.index,
                            f"creation in {role.parent.value} gen {parent.index} active "
                            f"[{parent.issue_from},{parent.issue_until})",
                            f"created at {gen.start} ({phase_at(parent, gen.start).value})",
                            ticks=(gen.start, gen.start),
                            detail="created outside parent active window",
                        )
                    )
                if gen.start < parent.verify_from or gen.verify_until > parent.verify_until:
                    out.append(
                        Violation(
                            "b", role, gen.index,
                            f"validity within [{parent.verify_from},{parent.verify_until}]",
                            f"[{gen.verify_from},{gen.verify_until}]",
                            ticks=(
                                max(gen.verify_from, parent.verify_until + 1),
                                gen.verify_until,
                            ),
                            detail=f"exceeds {role.parent.value} gen {parent.index}",
                        )
                    )

        # (d) Central Register / Timestamp Service ramp-up
        if role in SERVICE_RAMP_ROLES and gen.start > 0 and plan.ramp_up < b.ramp_up:
            out.append(
                Violation(
                    "d", role, gen.index, f"ramp >= {b.ramp_up}", str(plan.ramp_up),
                    ticks=(gen.start, gen.issue_from),
                )
            )

        if role is Role.ROOT_CA:
            # (e) Root ramp-up and passive
            if gen.start > 0 and plan.ramp_up < b.ramp_up:
                out.append(
                    Violation("e", role, gen.index, f"ramp >= {b.ramp_up}", str(plan.ramp_up))
                )
            if plan.passive < b.passive:
                out.append(
                    Violation(
                        "e", role, gen.index, f"passive >= {b.passive}", str(plan.passive),
                        ticks=(gen.issue_until, gen.verify_until),
                    )
                )
            # (f)
            if plan.active + plan.passive < profile.root_active_plus_passive:
                out.append(
                    Violation(
                        "f", role, gen.index,
                        f"active + passive >= {profile.root_active_plus_passive}",
                        str(plan.active + plan.passive),
                    )
                )

    # (c)/(g) coverage, plus creation order
    for constraint, roles in (("c", ISSUANCE_COVERAGE_ROLES), ("g", USAGE_COVERAGE_ROLES)):
        for role in roles:
            gens = schedule.generations(role)
            for prev, cur in zip(gens, gens[1:]):
                if cur.start < prev.start:
                    out.append(
                        Violation(
                            constraint, role, cur.index,
                            f"start >= {prev.start}", str(cur.start),
                            detail="generations out of order",
                        )
                    )
            for lo, hi in _gaps(gens, schedule.horizon):
                out.append(
                    Violation(
                        constraint, role, None,
                        "an active generation at every tick", "none active",
                        ticks=(lo, hi),
                    )
                )
    return out
