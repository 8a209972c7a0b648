"""Discrete-event simulation of the ecosystem over a rollover schedule.

A run manufactures offline smartcards, lets them authenticate each other,
onboards FSPs, processes revocations, and checks five requirements:

R1  own chain plus every signer a card will meet is stored at manufacture
R2  pin sets hold the current Root, Central Register and Timestamp Service
R3  a card passes every offline check from manufacture to end of life
R4  issuing a Manufacturer CA certificate works at every tick and stays verifiable
R5  each manufacturer works from the kit handed over at generation start

Events are ordered by ``(tick, priority, sequence)``.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import crypto
from .authority import (
    EMPTY_REGISTRY,
    AuthorityState,
    Credential,
    RegistrySnapshot,
    materialize,
    verify_chain,
)
from .planner import (
    NoActiveIssuer,
    RolloverProfile,
    Schedule,
    Violation,
    issuer_for,
    plan_schedule,
    table1_minimums,
    validate_schedule,
)
from .smartcard import (
    ManufactureError,
    Smartcard,
    SignedTimestamp,
    TimestampError,
    advance_trusted_time,
    manufacture,
    mutual_authenticate,
    validate_central_register_signature,
)
from .types import Certificate, Role, is_active

REQUIREMENTS = {
    "R1": "own chain plus every signer a card will meet is stored at manufacture",
    "R2": "pin sets hold the current Root, Central Register and Timestamp Service",
    "R3": "a card passes every offline check from manufacture to end of life",
    "R4": "issuing a Manufacturer CA certificate works at every tick and stays verifiable",
    "R5": "each manufacturer works from the kit handed over at generation start",
}

PINNED_ROLES = (Role.ROOT_CA, Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE)

MAX_MANUFACTURER_NAME = 24

DEFAULT_FSPS = tuple((0, f"fsp-{i}") for i in range(1, 6))


class ScenarioError(ValueError):
    pass


class ScheduleRejected(Exception):
    """Raised by :func:`run` in strict mode when the schedule is invalid."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__(f"schedule fails validation with {len(violations)} violation(s)")


# -- scenario -------------------------------------------------------------


@dataclass(frozen=True)
class ManufacturePolicy:
    """Cards made by every manufacturer at ticks ``start, start+every, ...``."""

    every: int = 1
    per_manufacturer: int = 1
    start: int = 0
    stop: int | None = None


@dataclass(frozen=True)
class PaymentPolicy:
    """Pairwise mutual authentication among alive cards every ``stride`` ticks.

    ``max_pairs`` caps the pairs per tick by seeded random sampling.
    """

    stride: int = 3
    max_pairs: int | None = None


@dataclass(frozen=True)
class Scenario:
    schedule: Schedule
    profile: RolloverProfile | None = None
    manufacturers: tuple[str, ...] = ("mfr-a", "mfr-b", "mfr-c")
    manufacture: ManufacturePolicy | None = field(default_factory=ManufacturePolicy)
    payments: PaymentPolicy | None = field(default_factory=PaymentPolicy)
    issuance_probes: bool = True
    #: explicit (tick, manufacturer) manufacture events
    manufacture_events: tuple[tuple[int, str], ...] = ()
    #: explicit (tick, card_id, card_id) authentication events
    payment_events: tuple[tuple[int, str, str], ...] = ()
    #: (tick, fsp name) onboarding events
    fsps: tuple[tuple[int, str], ...] = DEFAULT_FSPS
    #: (tick, holder) revocations; holder is an FSP name or a certificate holder_ref
    revocations: tuple[tuple[int, str], ...] = ()
    #: registry sync cadence per party (ticks); parties not listed use default_sync
    sync_every: dict[str, int] = field(default_factory=dict)
    default_sync: int = 1
    online_stride: int = 3
    seed: int = 0
    strict: bool = True

    @classmethod
    def empty(cls, schedule: Schedule, **kw) -> Scenario:
        """A scenario with no events at all."""
        return cls(schedule, manufacture=None, payments=None, issuance_probes=False, fsps=(), **kw)

    def check(self) -> None:
        if not self.manufacturers:
            raise ScenarioError("at least one manufacturer is required")
        if len(set(self.manufacturers)) != len(self.manufacturers):
            raise ScenarioError("manufacturer names must be unique")
        for name in self.manufacturers:
            if not name or len(name.encode()) > MAX_MANUFACTURER_NAME:
                raise ScenarioError(f"manufacturer name {name!r} must be 1-{MAX_MANUFACTURER_NAME} octets")
        if self.manufacture is not None:
            m = self.manufacture
            if m.every < 1 or m.per_manufacturer < 0 or m.start < 0:
                raise ScenarioError("manufacture policy needs every >= 1, counts >= 0")
        if self.payments is not None and self.payments.stride < 1:
            raise ScenarioError("payment stride must be >= 1")
        if self.payments is not None and self.payments.max_pairs is not None and self.payments.max_pairs < 0:
            raise ScenarioError("max_pairs must be >= 0")
        if self.online_stride < 1 or self.default_sync < 1:
            raise ScenarioError("online_stride and default_sync must be >= 1")
        if any(v < 1 for v in self.sync_every.values()):
            raise ScenarioError("sync cadences must be >= 1")
        for tick, mfr in self.manufacture_events:
            if mfr not in self.manufacturers:
                raise ScenarioError(f"unknown manufacturer {mfr!r}")
        ticks = [e[0] for e in (*self.manufacture_events, *self.payment_events, *self.fsps, *self.revocations)]
        if any(t < 0 for t in ticks):
            raise ScenarioError("event ticks must be >= 0")
        names = [n for _, n in self.fsps]
        if len(set(names)) != len(names):
            raise ScenarioError("FSP names must be unique")

    # -- file format -------------------------------------------------------

    def to_dict(self) -> dict:
        m, p = self.manufacture, self.payments
        return {
            "schedule": self.schedule.to_dict(),
            "manufacturers": list(self.manufacturers),
            "manufacture": None if m is None else {
                "every": m.every, "per_manufacturer": m.per_manufacturer,
                "start": m.start, "stop": m.stop,
            },
            "payments": None if p is None else {"stride": p.stride, "max_pairs": p.max_pairs},
            "issuance_probes": self.issuance_probes,
            "manufacture_events": [list(e) for e in self.manufacture_events],
            "payment_events": [list(e) for e in self.payment_events],
            "fsps": [list(e) for e in self.fsps],
            "revocations": [list(e) for e in self.revocations],
            "sync_every": dict(self.sync_every),
            "default_sync": self.default_sync,
            "online_stride": self.online_stride,
            "seed": self.seed,
            "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> Scenario:
        try:
            if "schedule" in data:
                schedule = Schedule.from_dict(data["schedule"])
            elif "schedule_file" in data:
                path = Path(data["schedule_file"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                schedule = Schedule.loads(path.read_text())
            elif "plan" in data:
                plan = data["plan"]
                schedule = plan_schedule(
                    plan["u"], plan["horizon"], first_root_active=plan.get("first_root_active", 3)
                )
            else:
                raise ScenarioError("scenario needs one of 'schedule', 'schedule_file' or 'plan'")
            kw: dict[str, Any] = {}
            if "manufacturers" in data:
                kw["manufacturers"] = tuple(data["manufacturers"])
            if "manufacture" in data:
                m = data["manufacture"]
                kw["manufacture"] = None if m is None else ManufacturePolicy(**m)
            if "payments" in data:
                p = data["payments"]
                kw["payments"] = None if p is None else PaymentPolicy(**p)
            for key in ("issuance_probes", "default_sync", "online_stride", "seed", "strict"):
                if key in data:
                    kw[key] = data[key]
            kw["manufacture_events"] = tuple((int(t), str(m)) for t, m in data.get("manufacture_events", ()))
            kw["payment_events"] = tuple(
                (int(t), str(a), str(b)) for t, a, b in data.get("payment_events", ())
            )
            if "fsps" in data:
                kw["fsps"] = tuple((int(t), str(n)) for t, n in data["fsps"])
            kw["revocations"] = tuple((int(t), str(h)) for t, h in data.get("revocations", ()))
            kw["sync_every"] = {str(k): int(v) for k, v in data.get("sync_every", {}).items()}
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from exc
        scenario = cls(schedule, **kw)
        scenario.check()
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)


# -- report ---------------------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    requirement: str
    tick: int
    entities: tuple[str, ...]
    reason: str
    detail: str
    trace: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "requirement": self.requirement,
            "tick": self.tick,
            "entities": list(self.entities),
            "reason": self.reason,
            "detail": self.detail,
            "trace": list(self.trace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Counterexample:
        return cls(
            d["requirement"], d["tick"], tuple(d["entities"]), d["reason"], d["detail"],
            tuple(d.get("trace", ())),
        )


@dataclass
class RequirementResult:
    requirement: str
    counterexamples: int = 0
    first: Counterexample | None = None

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0

    def to_dict(self) -> dict:
        return {
            "description": REQUIREMENTS[self.requirement],
            "passed": self.passed,
            "counterexamples": self.counterexamples,
            "first_counterexample": self.first.to_dict() if self.first else None,
        }


@dataclass
class Report:
    u: int
    horizon: int
    seed: int
    requirements: dict[str, RequirementResult]
    events: dict[str, int]
    ticks: list[dict]
    schedule_violations: list[Violation] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.requirements.values())

    def verdicts(self) -> dict[str, bool]:
        return {k: r.passed for k, r in self.requirements.items()}

    def to_dict(self) -> dict:
        return {
            "u_ticks": self.u,
            "horizon": self.horizon,
            "seed": self.seed,
            "all_passed": self.all_passed,
            "requirements": {k: r.to_dict() for k, r in self.requirements.items()},
            "events": dict(sorted(self.events.items())),
            "schedule_violations": [v.to_dict() for v in self.schedule_violations],
            "ticks": self.ticks,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> Report:
        reqs = {}
        for k, r in d["requirements"].items():
            first = r.get("first_counterexample")
            reqs[k] = RequirementResult(
                k, r["counterexamples"], Counterexample.from_dict(first) if first else None
            )
        return cls(d["u_ticks"], d["horizon"], d["seed"], reqs, d["events"], d["ticks"])

    def summary(self) -> str:
        lines = [f"simulation: u={self.u} ticks, horizon={self.horizon}, seed={self.seed}"]
        if self.schedule_violations:
            lines.append(f"schedule violations: {len(self.schedule_violations)} (non-strict run)")
        for key, res in self.requirements.items():
            status = "PASS" if res.passed else "FAIL"
            lines.append(f"  {key} {status}  {REQUIREMENTS[key]}")
            if res.first:
                cx = res.first
                lines.append(
                    f"       {res.counterexamples} counterexample(s); first at tick {cx.tick}: "
                    f"{cx.reason} [{', '.join(cx.entities)}] {cx.detail}"
                )
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.events.items()))
        lines.append(f"events: {counts}")
        return "\n".join(lines)


def replay_counterexample(report: Report, requirement: str) -> list[str]:
    """Ordered events leading to the first counterexample of ``requirement``."""
    try:
        res = report.requirements[requirement]
    except KeyError:
        raise ValueError(f"unknown requirement {requirement!r}") from None
    if res.passed or res.first is None:
        raise ValueError(f"{requirement} passed; there is nothing to replay")
    return list(res.first.trace)


# -- engine ---------------------------------------------------------------

# event priorities within a tick
CREATE, EQUIP, REVOKE, SYNC, ONBOARD, MANUFACTURE, CARD_CHECKS, PAYMENTS, PAYMENT, ONLINE, PROBE, STATS = range(12)


@dataclass
class _LogEntry:
    tick: int
    refs: frozenset[str]
    text: str


class _Run:
    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.schedule = scenario.schedule
        self.profile = scenario.profile or table1_minimums(self.schedule.u)
        self.horizon = self.schedule.horizon
        self.state: AuthorityState = materialize(
            self.schedule,
            self.profile,
            manufacturers=scenario.manufacturers,
            seed=scenario.seed,
            check=False,
        )
        self.rng = random.Random(scenario.seed)
        self.results = {k: RequirementResult(k) for k in REQUIREMENTS}
        self.counts: Counter[str] = Counter()
        self.log: list[_LogEntry] = []
        self.queue: list[tuple[int, int, int, tuple]] = []
        self._seq = itertools.count()
        self.cards: dict[str, Smartcard] = {}
        self.alive: list[str] = []
        self.kits: dict[tuple[str, int], frozenset[Certificate]] = {}
        self.fsp_creds: dict[str, Credential] = {}
        self.unplugged: set[str] = set()
        self.snapshots: dict[str, RegistrySnapshot] = {}
        self.ticks: list[dict] = []
        self._card_seq = itertools.count()
        self._probe_key = crypto.derive_keypair("issuance-probe", scenario.seed)

    # -- plumbing ------------------------------------------------------------

    def push(self, tick: int, priority: int, *payload) -> None:
        if 0 <= tick < self.horizon:
            heapq.heappush(self.queue, (tick, priority, next(self._seq), payload))

    def note(self, tick: int, refs, text: str) -> None:
        self.log.append(_LogEntry(tick, frozenset(refs), f"t={tick} {text}"))

    def fail(self, req: str, tick: int, entities, reason: str, detail: str, final: str) -> None:
        res = self.results[req]
        res.counterexamples += 1
        self.counts[f"counterexamples_{req}"] += 1
        if res.first is not None:
            return
        ents = tuple(dict.fromkeys(entities))
        wanted = set(ents)
        trace = [e.text for e in self.log if e.tick <= tick and e.refs & wanted]
        trace.append(f"t={tick} {final} -> reject({reason}): {detail}")
        res.first = Counterexample(req, tick, ents, reason, detail, tuple(trace))

    # -- scheduling ------------------------------------------------------------

    def seed_events(self) -> None:
        sc = self.sc
        for cred in self.state.credentials.values():
            self.push(cred.certificate.verify_from, CREATE, cred)
        for gen in self.schedule.generations(Role.MANUFACTURER_CA):
            for mfr in sc.manufacturers:
                self.push(gen.start, EQUIP, mfr, gen.index)
        if sc.manufacture is not None:
            m = sc.manufacture
            stop = self.horizon if m.stop is None else min(m.stop, self.horizon)
            for t in range(m.start, stop, m.every):
                for mfr in sc.manufacturers:
                    for _ in range(m.per_manufacturer):
                        self.push(t, MANUFACTURE, mfr)
        for t, mfr in sc.manufacture_events:
            self.push(t, MANUFACTURE, mfr)
        for t in range(self.horizon):
            self.push(t, CARD_CHECKS)
            self.push(t, STATS)
            if sc.payments is not None and t % sc.payments.stride == 0:
                self.push(t, PAYMENTS)
            if sc.fsps and t % sc.online_stride == 0:
                self.push(t, ONLINE)
            if sc.issuance_probes:
                self.push(t, PROBE)
        for t, a, b in sc.payment_events:
            self.push(t, PAYMENT, a, b)
        for t, name in sc.fsps:
            self.push(t, ONBOARD, name)
            cadence = sc.sync_every.get(name, sc.default_sync)
            for s in range(t, self.horizon, cadence):
                self.push(s, SYNC, name)
        for t, holder in sc.revocations:
            self.push(t, REVOKE, holder)

    def execute(self) -> None:
        handlers = {
            CREATE: self.on_create,
            EQUIP: self.on_equip,
            REVOKE: self.on_revoke,
            SYNC: self.on_sync,
            ONBOARD: self.on_onboard,
            MANUFACTURE: self.on_manufacture,
            CARD_CHECKS: self.on_card_checks,
            PAYMENTS: self.on_payments,
            PAYMENT: self.on_payment,
            ONLINE: self.on_online,
            PROBE: self.on_probe,
            STATS: self.on_stats,
        }
        while self.queue:
            tick, priority, _, payload = heapq.heappop(self.queue)
            handlers[priority](tick, *payload)

    # -- handlers --------------------------------------------------------------

    def on_create(self, t: int, cred: Credential) -> None:
        self.counts["certificates_created"] += 1
        cert = cred.certificate
        self.note(t, {cert.holder_ref}, f"create {cert.role.value} {cert.ref} issued by {cert.issuer_ref}")

    def on_equip(self, t: int, mfr: str, index: int) -> None:
        cred = self.state.credential(Role.MANUFACTURER_CA, index, mfr)
        kit = {cred.certificate, *cred.chain[1:2]}
        for role in PINNED_ROLES:
            kit.update(self.state.existing(role, t))
        self.kits[(mfr, index)] = frozenset(kit)
        self.counts["manufacturer_equipped"] += 1
        self.note(
            t, {mfr, cred.holder_ref, *(c.holder_ref for c in kit)},
            f"equip {mfr} with {cred.holder_ref} and {len(kit) - 1} other certificate(s)",
        )

    def _holder_cert(self, holder: str) -> Certificate | None:
        if holder in self.fsp_creds:
            return self.fsp_creds[holder].certificate
        if holder in self.cards:
            return self.cards[holder].certificate
        cred = self.state.by_holder.get(holder)
        return cred.certificate if cred else None

    def on_revoke(self, t: int, holder: str) -> None:
        cert = self._holder_cert(holder)
        if cert is None:
            self.counts["revocations_unknown"] += 1
            self.note(t, {holder}, f"revocation of unknown holder {holder!r} ignored")
            return
        self.state.revoke(cert.issuer_ref, cert.serial, t)
        if holder in self.fsp_creds:
            self.unplugged.add(holder)
        self.counts["revocations"] += 1
        self.note(t, {holder, cert.holder_ref}, f"revoke {cert.ref}")

    def on_sync(self, t: int, party: str) -> None:
        self.snapshots[party] = self.state.sync_party(party, t)
        self.counts["registry_syncs"] += 1

    def on_onboard(self, t: int, name: str) -> None:
        if name in self.unplugged:
            return  # a revoked FSP is not renewed
        try:
            cred = self.state.issue_end_entity(Role.FSP, name, t, enforce_ancestors=False)
        except NoActiveIssuer as exc:
            self.counts["fsp_onboarding_failures"] += 1
            self.note(t, {name}, f"onboarding {name} failed: {exc}")
            return
        self.fsp_creds[name] = cred
        self.counts["fsp_certificates"] += 1
        self.note(t, {name}, f"onboard FSP {name} as {cred.certificate.ref} under {cred.parent.holder_ref}")
        renew = cred.certificate.issue_until
        if renew > t:
            self.push(renew, ONBOARD, name)

    def on_manufacture(self, t: int, mfr: str) -> None:
        self.counts["manufacture_attempts"] += 1
        gen = self.schedule.active_generation(Role.MANUFACTURER_CA, t)
        if gen is None:
            self.fail(
                "R5", t, (mfr,), "manufacturer-idle",
                f"{mfr} has no active Manufacturer CA generation",
                f"manufacture by {mfr}",
            )
            return
        card_id = f"card-{next(self._card_seq)}"
        try:
            card = manufacture(self.state, mfr, gen.index, t, card_id, enforce_ancestors=False)
        except ManufactureError as exc:
            self.fail("R5", t, (mfr,), "manufacture-failed", str(exc), f"manufacture by {mfr}")
            return
        self.cards[card_id] = card
        self.alive.append(card_id)
        self.counts["cards_manufactured"] += 1
        refs = {card_id, mfr, *(c.holder_ref for c in card.own_chain), *(c.holder_ref for c in card.pinned)}
        self.note(
            t, refs,
            f"manufacture {card_id} by {mfr} under {card.own_chain[1].holder_ref}; pins "
            + ", ".join(sorted(c.holder_ref for c in card.pinned)),
        )
        self.check_r1(t, card)
        self.check_r2(t, card)
        self.check_r5(t, card, mfr, gen.index)

    def _needed(self, card: Smartcard) -> list[tuple[int, Role, Certificate | None]]:
        """(tick, role, certificate) the card must trust during its life."""
        out = []
        m = card.manufactured_at
        last = min(card.end_of_life, self.horizon - 1)
        for t in range(max(0, m - self.schedule.u), last + 1):
            gen = self.schedule.active_generation(Role.ROOT_CA, t)
            cert = self.state.credential(Role.ROOT_CA, gen.index).certificate if gen else None
            out.append((t, Role.ROOT_CA, cert))
        for t in range(m, last + 1):
            for role in (Role.CENTRAL_REGISTER, Role.TIMESTAMP_SERVICE):
                gen = self.schedule.active_generation(role, t)
                cert = self.state.credential(role, gen.index).certificate if gen else None
                out.append((t, role, cert))
        return out

    def check_r1(self, t: int, card: Smartcard) -> None:
        chain = card.own_chain
        roles = tuple(c.role for c in chain)
        if roles != (Role.SMARTCARD_EE, Role.MANUFACTURER_CA, Role.HARDWARE_CA):
            self.fail("R1", t, (card.card_id,), "incomplete-chain", f"chain roles {roles}", f"inspect {card.card_id}")
            return
        own_root = self.state.by_holder.get(chain[-1].issuer_ref)
        if own_root is None or own_root.certificate not in card.pinned_roots:
            self.fail(
                "R1", t, (card.card_id, chain[-1].issuer_ref), "missing-pin",
                f"root of own chain {chain[-1].issuer_ref} not pinned", f"inspect {card.card_id}",
            )
            return
        pinned = card.pinned
        for tick, role, cert in self._needed(card):
            if cert is None:
                self.fail(
                    "R1", t, (card.card_id,), "no-active-generation",
                    f"no active {role.value} at tick {tick}", f"inspect {card.card_id}",
                )
                return
            if cert not in pinned:
                self.fail(
                    "R1", t, (card.card_id, cert.holder_ref), "missing-pin",
                    f"{cert.ref} is needed at tick {tick} but was not pinned at manufacture",
                    f"inspect {card.card_id}",
                )
                return

    def check_r2(self, t: int, card: Smartcard) -> None:
        for role, pins in (
            (Role.ROOT_CA, card.pinned_roots),
            (Role.CENTRAL_REGISTER, card.pinned_central_register),
            (Role.TIMESTAMP_SERVICE, card.pinned_timestamp),
        ):
            if any(c.role is not role for c in pins):
                self.fail("R2", t, (card.card_id,), "wrong-pin-role", f"non-{role.value} in {role.value} pins", f"inspect {card.card_id}")
                return
            gen = self.schedule.active_generation(role, t)
            current = self.state.credential(role, gen.index).certificate if gen else None
            if current is None or current not in pins:
                self.fail(
                    "R2", t, (card.card_id,) + ((current.holder_ref,) if current else ()),
                    "missing-pin", f"current {role.value} not pinned", f"inspect {card.card_id}",
                )
                return

    def check_r5(self, t: int, card: Smartcard, mfr: str, index: int) -> None:
        kit = self.kits.get((mfr, index))
        if kit is None:
            self.fail("R5", t, (mfr, card.card_id), "not-equipped", f"{mfr} was never equipped for generation {index}", f"manufacture {card.card_id}")
            return
        needed = set(card.own_chain[1:]) | card.pinned
        missing = sorted(c.ref for c in needed - kit)
        if missing:
            holders = sorted({c.holder_ref for c in needed - kit})
            self.fail(
                "R5", t, (mfr, card.card_id, *holders), "delivery-needed",
                f"{mfr} needs {', '.join(missing)} after equipping", f"manufacture {card.card_id}",
            )

    def on_card_checks(self, t: int) -> None:
        self.alive = [cid for cid in self.alive if self.cards[cid].end_of_life >= t]
        cr_gen = self.schedule.active_generation(Role.CENTRAL_REGISTER, t)
        ts_gen = self.schedule.active_generation(Role.TIMESTAMP_SERVICE, t)
        cr = self.state.credential(Role.CENTRAL_REGISTER, cr_gen.index) if cr_gen else None
        ts = self.state.credential(Role.TIMESTAMP_SERVICE, ts_gen.index) if ts_gen else None
        stamp = SignedTimestamp.create(ts.keypair, ts.certificate, t) if ts else None
        for cid in self.alive:
            card = self.cards[cid]
            self.counts["card_checks"] += 1
            v = verify_chain(card.own_chain, card.pinned_roots, t, EMPTY_REGISTRY)
            if not v:
                self.fail("R3", t, (cid, *(c.holder_ref for c in card.own_chain)), v.reason.value, v.detail, f"{cid} verifies own chain")
            if cr is None:
                self.fail("R3", t, (cid,), "no-active-signer", "no active Central Register", f"{cid} checks Central Register")
            else:
                res = validate_central_register_signature(card, cr.certificate, t)
                if not res:
                    self.fail("R3", t, (cid, cr.holder_ref), res.reason, res.detail, f"{cid} validate_central_register_signature({cr.holder_ref})")
            if stamp is None:
                self.fail("R3", t, (cid,), "no-active-signer", "no active Timestamp Service", f"{cid} checks timestamp")
            else:
                try:
                    self.cards[cid] = advance_trusted_time(card, stamp)
                except TimestampError as exc:
                    reason = "untrusted-signer" if type(exc).__name__ == "SignerNotPinned" else "bad-timestamp"
                    self.fail("R3", t, (cid, ts.holder_ref), reason, str(exc), f"{cid} advance_trusted_time({ts.holder_ref})")

    def _authenticate(self, t: int, a: str, b: str) -> None:
        self.counts["authentications"] += 1
        res = mutual_authenticate(self.cards[a], self.cards[b], t)
        if not res:
            self.counts["authentication_failures"] += 1
            bad = a if res.side == "a" else b
            chain = self.cards[bad].own_chain
            self.fail(
                "R3", t, (a, b, *(c.holder_ref for c in chain)), res.reason,
                f"side {res.side} ({bad}): {res.detail}", f"mutual_authenticate({a}, {b})",
            )

    def on_payments(self, t: int) -> None:
        alive = [cid for cid in self.alive if self.cards[cid].alive_at(t)]
        pairs = list(itertools.combinations(alive, 2))
        cap = self.sc.payments.max_pairs
        if cap is not None and len(pairs) > cap:
            pairs = self.rng.sample(pairs, cap)
        for a, b in pairs:
            self._authenticate(t, a, b)

    def on_payment(self, t: int, a: str, b: str) -> None:
        if a == b or not all(c in self.cards and self.cards[c].alive_at(t) for c in (a, b)):
            self.counts["payments_skipped"] += 1
            return
        self._authenticate(t, a, b)

    def on_online(self, t: int) -> None:
        anchors = self.state.existing(Role.ROOT_CA, t)
        for p, q in itertools.permutations(sorted(self.fsp_creds), 2):
            view = self.snapshots.get(p, EMPTY_REGISTRY)
            v = verify_chain(self.fsp_creds[q].chain, anchors, t, view)
            self.counts["online_validations"] += 1
            if not v:
                self.counts[f"online_rejects_{v.reason.value}"] += 1

    def on_probe(self, t: int) -> None:
        self.counts["issuance_probes"] += 1
        try:
            hw_gen = issuer_for(self.schedule, Role.MANUFACTURER_CA, t)
        except NoActiveIssuer as exc:
            self.fail("R4", t, (), "no-active-issuer", str(exc), "issue Manufacturer CA certificate")
            return
        hw = self.state.credential(Role.HARDWARE_CA, hw_gen.index)
        plan = self.profile[Role.MANUFACTURER_CA].as_plan()
        probe = _probe_certificate(hw, self._probe_key, t, plan)
        chain = [probe, *hw.chain]
        anchors = [hw.chain[-1]]
        for tau in range(t, min(probe.verify_until, self.horizon - 1) + 1):
            v = verify_chain(chain, anchors, tau)
            if not v:
                self.fail(
                    "R4", tau, (probe.holder_ref, *(c.holder_ref for c in hw.chain)), v.reason.value,
                    f"Manufacturer CA issued at {t}: {v.detail}",
                    f"verify probe {probe.ref} at {tau}",
                )
                return

    def on_stats(self, t: int) -> None:
        active = {}
        for role, gens in self.schedule.strands.items():
            n = sum(1 for g in gens if is_active(g, t))
            if n:
                active[role.value] = n
        self.ticks.append(
            {"tick": t, "alive_cards": sum(1 for c in self.alive if self.cards[c].alive_at(t)), "active": active}
        )

    def report(self, violations: list[Violation]) -> Report:
        return Report(
            u=self.schedule.u,
            horizon=self.horizon,
            seed=self.sc.seed,
            requirements=self.results,
            events=dict(self.counts),
            ticks=self.ticks,
            schedule_violations=violations,
        )


def _probe_certificate(hw: Credential, key: crypto.KeyPair, t: int, plan) -> Certificate:
    from .authority import _sign_cert

    unsigned = Certificate(
        serial=0,
        role=Role.MANUFACTURER_CA,
        holder_ref=f"probe-{t}",
        issuer_ref=hw.holder_ref,
        public_key=key.public,
        verify_from=t,
        verify_until=t + plan.total_validity,
        issue_from=t + plan.ramp_up,
        issue_until=t + plan.ramp_up + plan.active,
    )
    return _sign_cert(unsigned, hw.keypair)


def run(scenario: Scenario) -> Report:
    """Simulate ``scenario`` and check requirements R1-R5.

    In strict mode an invalid schedule raises :class:`ScheduleRejected`;
    otherwise the violations are recorded in the report and the run proceeds.
    """
    scenario.check()
    profile = scenario.profile or table1_minimums(scenario.schedule.u)
    violations = validate_schedule(scenario.schedule, profile)
    if violations and scenario.strict:
        raise ScheduleRejected(violations)
    sim = _Run(scenario)
    sim.seed_events()
    sim.execute()
    return sim.report(violations)
